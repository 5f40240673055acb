import json

import pytest

from cmik.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out.strip(), err


def test_label(capsys):
    assert run(capsys, "label", "--disc", "-4", "--ell", "2", "--d", "-2")[:2] == (0, "2.2.ns7-16.4.4")
    assert run(capsys, "label", "--disc", "-3", "--ell", "2", "--d", "4")[1] == "2.0.ns5-2.3.1"
    assert run(capsys, "label", "--disc", "-147", "--ell", "3", "--d", "2-a")[1] == "3.1.ns-3.2.2"
    assert run(capsys, "label", "--disc", "-147", "--ell", "7", "--d", "-7")[1] == "7.2.s-7.2.1"


def test_label_json(capsys):
    code, out, _ = run(capsys, "--json", "label", "--disc", "-3", "--ell", "2", "--d", "1")
    assert code == 0
    assert json.loads(out)["label"] == "2.0.ns5-1.1.1"
    code, out, _ = run(capsys, "label", "--json", "--disc", "-3", "--ell", "2")
    assert json.loads(out)["group_id"] == "N"


def test_label_ambiguous_exit_code(capsys):
    code, out, _ = run(capsys, "--json", "label", "--disc", "-40", "--ell", "2", "--d", "a")
    assert code == 1
    assert json.loads(out)["status"] == "AMBIGUOUS"


def test_usage_errors(capsys):
    assert run(capsys, "label", "--disc", "-4", "--ell", "2", "--d", "x/y")[0] == 2
    assert run(capsys, "label", "--disc", "-23", "--ell", "2")[0] == 2
    assert run(capsys, "label", "--disc", "-4")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "identify", "--curve", "y^2 = x^3")[0] == 2
    assert run(capsys, "divpoly")[0] == 2
    assert run(capsys, "group", "--disc", "-4", "--mod", "8", "--name", "G_9_9")[0] == 2


def test_identify(capsys):
    code, out, _ = run(capsys, "identify", "--curve", "y^2 = x^3 + 1296")
    assert code == 0
    assert "3.1.ns-27.6.1" in out and "2.0.ns5-1.1.1" in out


def test_twistset(capsys):
    code, out, _ = run(capsys, "--json", "twistset", "--disc", "-147", "--ell", "7")
    assert code == 0
    assert len(json.loads(out)["twists"]) == 8


def test_group(capsys):
    code, out, _ = run(capsys, "--json", "group", "--disc", "-4", "--mod", "8",
                       "--name", "G_4_1", "--gamma", "c'-1")
    info = json.loads(out)
    assert code == 0 and info["index"] == 4 and info["label"] == "2.2.ns7-4.4.2"


def test_images(capsys):
    code, out, _ = run(capsys, "images", "--disc", "-64", "--ell", "2")
    assert code == 0 and len(out.splitlines()) == 9


def test_divpoly(capsys):
    code, out, _ = run(capsys, "divpoly", "--curve", "y^2 = x^3 + 16", "--n", "3")
    assert code == 0 and "x" in out
    code, out, _ = run(capsys, "divpoly", "--curve", "y^2 = x^3 + x", "--n", "2", "--bound", "200")
    assert (code, out) == (0, "2")


def test_divpoly_identities(capsys):
    code, out, _ = run(capsys, "divpoly", "--check-identities")
    assert code == 0
    assert all(line.startswith("PASS") for line in out.splitlines())


def test_verify(capsys, tmp_path):
    csv = tmp_path / "s.csv"
    code, out, _ = run(capsys, "verify", "--curve", "y^2 = x^3 + 16", "--ell", "3",
                       "--level", "2", "--primes", "3000", "--csv", str(csv))
    assert code == 0
    res = json.loads(out)
    assert "G_6_1+c1" in res["best"]
    assert csv.read_text().startswith("p,")


def test_verify_too_few_primes(capsys):
    code, _, err = run(capsys, "verify", "--curve", "y^2 = x^3 + x", "--ell", "2",
                       "--level", "3", "--primes", "40")
    assert code == 2 and "usable primes" in err
