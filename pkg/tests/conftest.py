from collections import OrderedDict

_items = {}
_results = OrderedDict()


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m and m.args:
            _items[item.nodeid] = (m.args[0], m.kwargs.get("title", item.name))


def pytest_runtest_logreport(report):
    key = _items.get(report.nodeid)
    if key is None:
        return
    n, title = key
    ok, titles, bad = _results.get(n, (True, [], []))
    if title not in titles:
        titles.append(title)
    if report.failed or (report.when == "call" and report.skipped):
        ok = False
        part = report.nodeid.partition("[")[2].rstrip("]")
        if part and part not in bad:
            bad.append(part)
    _results[n] = (ok, titles, bad)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_results):
        ok, titles, bad = _results[n]
        extra = f"  (failed: {', '.join(bad)})" if bad else ""
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {'; '.join(titles)}{extra}")
