import os
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from coded_offload.config import NetworkConfig, load_config

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def configs_dir():
    return CONFIGS


@pytest.fixture
def five_en():
    return load_config(CONFIGS / "fig5.json").network


@pytest.fixture
def ten_en():
    return load_config(CONFIGS / "fig3.json").network


@st.composite
def networks(draw, max_k=10, max_m=8):
    """Random (M, K, mu) with K*mu integral."""
    K = draw(st.integers(1, max_k))
    M = draw(st.integers(1, max_m))
    c = draw(st.integers(1, K))
    return NetworkConfig(M=M, K=K, mu=Fraction(c, K))


@st.composite
def feasible_points(draw, max_k=10, max_m=8):
    """A network together with one feasible (r, q)."""
    cfg = draw(networks(max_k, max_m))
    r = draw(st.integers(1, cfg.K))
    qs = [q for q in range(1, cfg.K + 1) if (r - cfg.K + q) * cfg.mu >= 1]
    if not qs:
        r = cfg.K
        qs = [q for q in range(1, cfg.K + 1) if (r - cfg.K + q) * cfg.mu >= 1]
    q = draw(st.sampled_from(qs))
    return cfg, r, q


# --- acceptance summary: one line per criterion ----------------------------------

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion this test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    num, title = mark.args
    entry = _CRITERIA.setdefault(num, {"title": title, "failed": [], "seconds": 0.0})
    entry["seconds"] += rep.duration
    if rep.failed:
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        e = _CRITERIA[num]
        status = "FAIL" if e["failed"] else "PASS"
        extra = f"  [failing: {', '.join(e['failed'])}]" if e["failed"] else ""
        terminalreporter.write_line(f"{status}  criterion {num}: {e['title']} ({e['seconds']:.2f} s){extra}")
