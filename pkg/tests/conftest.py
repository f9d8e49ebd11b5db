import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def write_labels(tmp_path):
    def _write(name, labels, ids=None):
        path = tmp_path / name
        if ids is None:
            body = "\n".join(str(x) for x in labels)
        else:
            body = "id,label\n" + "\n".join(f"{i},{x}" for i, x in zip(ids, labels))
        path.write_text("# labels\n" + body + "\n", encoding="utf-8")
        return path
    return _write


# -- acceptance summary -----------------------------------------------------

_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    label = mark.args[0]
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _ACCEPTANCE[label] = ("PASS" if rep.passed else "FAIL", rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE):
        status, secs = _ACCEPTANCE[label]
        terminalreporter.write_line(f"{status}  {label}  ({secs:.1f} s)")
