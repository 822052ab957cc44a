import os

import pytest

from ecf.keystore import KdfConfig, generate_keypair
from ecf.recipient import RecipientEntry

# Argon2id cost low enough for hundreds of keystore operations per test.
FAST_KDF = KdfConfig(iterations=1, memory_kib=64, parallelism=1)


class Party:
    def __init__(self, name: str) -> None:
        sk, self.public_key = generate_keypair()
        self.sk = bytes(sk)
        self.name = name
        self.entry = RecipientEntry.create(self.sk, name)

    def __repr__(self) -> str:
        return f"Party({self.name!r})"


@pytest.fixture(scope="session")
def parties():
    return [Party(f"user-{i:02d}") for i in range(12)]


@pytest.fixture(scope="session")
def alice():
    return Party("Alice")


@pytest.fixture(scope="session")
def bob():
    return Party("Bob")


@pytest.fixture(scope="session")
def charlie():
    return Party("Charlie")


@pytest.fixture
def content():
    return os.urandom(1024)


ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def record():
    """Store one acceptance result line; printed in the terminal summary."""

    def _record(name: str, passed: bool, detail: str) -> None:
        ACCEPTANCE.append((name, bool(passed), detail))

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
