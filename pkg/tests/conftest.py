import random

import pytest

from sipmutual.fsm import CredentialStore, Credentials, make_invite

ALICE = Credentials("alice", "biloxi.com", "pw")


@pytest.fixture
def store():
    return CredentialStore([ALICE, Credentials("bob", "biloxi.com", "hunter2")])


@pytest.fixture
def invite():
    return make_invite("alice", random.Random(1))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
