"""Shared, session-cached DCB analyses and the acceptance summary."""
import pytest

from tubadelam.cli import bundled_config, load_config
from tubadelam.solver import build_model, run_analysis

_RUNS = {}
_CRITERIA = {}


def bundled_run(name):
    """(config, model, history) of a bundled configuration, computed once per session."""
    if name not in _RUNS:
        cfg = load_config(bundled_config(name))
        model = build_model(cfg.geometry, cfg.material, cfg.points, cfg.levels,
                            load_target=cfg.control.target)
        _RUNS[name] = cfg, model, run_analysis(model, cfg.control)
    return _RUNS[name]


@pytest.fixture(scope="session")
def dcb_runs():
    return bundled_run


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (report.when != "call" and report.passed):
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "details": [],
                                          "expected": None})
    if report.failed:
        entry["ok"] = False
    if getattr(report, "wasxfail", None) is not None:
        entry["ok"] = False
        entry["expected"] = report.wasxfail.removeprefix("reason: ")
    if report.when == "call":
        entry["details"] += [str(v) for k, v in item.user_properties if k == "measured"]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "PASS" if entry["ok"] else "FAIL"
        line = f"{status} criterion {number:2d}: {entry['title']}"
        if entry["details"]:
            line += "  [" + "; ".join(entry["details"]) + "]"
        if entry["expected"]:
            line += f"  (expected failure: {entry['expected']})"
        terminalreporter.write_line(line)
