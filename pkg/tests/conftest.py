import pytest

from setforge import rsa
from setforge.numtheory import SeededRng
from setforge.pki import CertificationAuthority, issue_certificate


@pytest.fixture(scope="session")
def kp512():
    return rsa.generate_keypair(512, 17, SeededRng(512))


@pytest.fixture(scope="session")
def toy():
    return rsa.keypair_from_primes(61, 53, 17)


@pytest.fixture(scope="session")
def pki_world():
    """A CA plus three certified parties; generated once per session."""
    rng = SeededRng(77)
    ca = CertificationAuthority.create("Test Root", rng)
    parties = {}
    for name in ("alice", "bob", "carol"):
        kp = rsa.generate_keypair(512, 17, rng)
        parties[name] = (kp, issue_certificate(ca, name, kp.public))
    return ca, parties


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
