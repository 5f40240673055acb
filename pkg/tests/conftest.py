import pytest

from cmik.divpoly import verify_stated_factorizations


@pytest.fixture(scope="session")
def identity_report():
    return {r["identity_id"]: r for r in verify_stated_factorizations()}
