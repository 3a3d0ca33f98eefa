import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when != "call":
        return
    num, title = mark.args
    entry = _CRITERIA.setdefault(num, {"title": title, "ok": True, "notes": []})
    if call.excinfo is not None:
        entry["ok"] = False
    for key, val in item.user_properties:
        if key == "detail":
            entry["notes"].append(val)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        e = _CRITERIA[num]
        status = "PASS" if e["ok"] else "FAIL"
        notes = "; ".join(e["notes"])
        tr.write_line(f"[{status}] criterion {num}: {e['title']}" + (f" ({notes})" if notes else ""))


@pytest.fixture
def detail(record_property):
    """Attach a short measured-value note to the criterion summary line."""

    def add(text):
        record_property("detail", text)

    return add
