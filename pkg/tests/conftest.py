import time

import pytest

# fixed seed for every statistical check, chosen before any run
SEED = 2026

_criteria: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def seed():
    return SEED


@pytest.fixture(scope="session")
def gue_dyson_endpoints():
    """beta = 2, n = 2, start (0, 0), dt = 1e-3: 1e5 endpoints at t = 1."""
    from soninlab import ensemble

    config = ensemble.DBMConfig(2, 2.0, (0.0, 0.0), dt=1e-3, seed=SEED)
    start = time.perf_counter()
    batch = ensemble.dbm_batch(config, 100_000)
    batch.provenance["seconds"] = time.perf_counter() - start
    return batch


@pytest.fixture
def record_criterion():
    def record(key: str, passed: bool, detail: str):
        _criteria[key] = (bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_criteria, key=lambda k: (len(k), k)):
        passed, detail = _criteria[key]
        terminalreporter.write_line(f"{key}: {'PASS' if passed else 'FAIL'}  {detail}")

