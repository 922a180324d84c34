import pytest

from payloadguard.config import GeneratorConfig
from payloadguard.generator import generate_dataset
from payloadguard.model import DomainKind, SessionMeta


@pytest.fixture(scope="session")
def gen_config():
    return GeneratorConfig()


@pytest.fixture(scope="session")
def small_corpus(gen_config):
    # 300 benign / 150 malicious with the default attack mix
    return generate_dataset(gen_config, 300, 150)


@pytest.fixture(scope="session")
def meta():
    return SessionMeta("s00000", 1_700_000_000, 0)


DOMAINS = list(DomainKind)


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def record_criterion(request):
    """Store a criterion verdict for the terminal summary."""
    store = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(number, ok, detail):
        store[number] = (ok, detail)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(ACCEPTANCE, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        ok, detail = store[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
