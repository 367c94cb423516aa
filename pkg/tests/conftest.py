import socket

import pytest

from tloc.records import CaptionedEvent, Interval, VideoRecord

TOY_CAPTIONS = {
    "v1": {
        "duration": 36.0,
        "timestamps": [[0, 10], [12, 30], [32, 36]],
        "sentences": ["A woman is standing.", "The woman is dancing.", "The woman is sleeping."],
    }
}


@pytest.fixture
def toy_record():
    return VideoRecord(
        "v1",
        36.0,
        (
            CaptionedEvent(Interval(0, 10), "A woman is standing."),
            CaptionedEvent(Interval(12, 30), "The woman is dancing."),
            CaptionedEvent(Interval(32, 36), "The woman is sleeping."),
        ),
    )


@pytest.fixture
def no_network(monkeypatch):
    """Any socket connection attempt fails the test."""
    attempts = []

    def deny(self, *args, **kwargs):
        attempts.append(args)
        raise AssertionError(f"network access attempted: {args}")

    monkeypatch.setattr(socket.socket, "connect", deny)
    monkeypatch.setattr(socket.socket, "connect_ex", deny)
    monkeypatch.setattr(socket, "create_connection", lambda *a, **k: deny(None, *a))
    return attempts


_acceptance: list[tuple[str, str, str]] = []


def pytest_runtest_logreport(report):
    if "acceptance" not in report.keywords:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        doc = report.head_line or report.nodeid
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome.upper(), doc))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, _ in _acceptance:
        status = "PASS" if outcome == "PASSED" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}")
