import pytest

_RESULTS: list[tuple[str, bool, str]] = []
_REPORTS: list[str] = []


class Recorder:
    def __init__(self, criterion: str):
        self.criterion = criterion

    def __call__(self, passed: bool, detail: str = "") -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {self.criterion}: {detail}"
        _RESULTS.append((self.criterion, bool(passed), detail))
        print(line)
        return passed

    @staticmethod
    def report(text: str) -> None:
        _REPORTS.append(text)
        print(text)


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    if marker is None:
        raise RuntimeError("acceptance tests need @pytest.mark.criterion(id)")
    return Recorder(str(marker.args[0]))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id): acceptance criterion checked by the test")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS and not _REPORTS:
        return
    tr = terminalreporter
    if _REPORTS:
        tr.section("reports")
        for text in _REPORTS:
            tr.write_line(text)
    tr.section("acceptance criteria")
    for cid, ok, detail in sorted(_RESULTS, key=lambda r: r[0]):
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {cid}: {detail}")
