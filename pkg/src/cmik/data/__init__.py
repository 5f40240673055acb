"""Shipped data files; CMIK_DATA points at an alternative directory."""

import json
import os
from functools import lru_cache
from pathlib import Path

HERE = Path(__file__).resolve().parent


def data_dir():
    override = os.environ.get("CMIK_DATA")
    return Path(override) if override else HERE


def load(name):
    with open(data_dir() / name) as fh:
        return json.load(fh)


@lru_cache(maxsize=None)
def _label_pins(root):
    doc = load("label_pins.json")
    out = {}
    for row in doc["pins"]:
        head, tail = row["label"].split("-", 1)
        level, _, t = (int(x) for x in tail.split("."))
        out[(row["disc"], row["ell"], row["group"])] = (level, t)
    return out, {"odd_divides": dict(doc["odd_divides_rule"]),
                 "j0_large": dict(doc["j0_large_rule"])}


def label_pins():
    return _label_pins(str(data_dir()))
