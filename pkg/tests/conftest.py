from __future__ import annotations

from fractions import Fraction

import pytest

from pomchain.crypto import KeyPair
from pomchain.ledger import Chain, ChainParams
from pomchain.miner import make_job, mine


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")
    config._acceptance_lines = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title = marker.args
        detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
        status = "PASS" if rep.passed else "FAIL"
        item.config._acceptance_lines.append((number, f"[{status}] AC{number} {title}"
                                              + (f" ({detail})" if detail else "")))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = sorted(getattr(config, "_acceptance_lines", []))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in lines:
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def keys():
    return {name: KeyPair.from_seed(f"test-key:{name}") for name in "ABCDEF"}


def build_chain(params: ChainParams, miners, txs_at=None) -> Chain:
    """Mine a real chain where ``miners[i]`` mines block i."""
    txs_at = txs_at or {}
    chain = Chain((), params)
    for i, m in enumerate(miners):
        block = mine(make_job(chain, m, txs_at.get(i, ())))
        assert block is not None, f"block {i} not found"
        chain = chain.append(block)
    return chain


@pytest.fixture
def small_params():
    return ChainParams(period=4, discrimination=Fraction(1, 2),
                       difficulty=(Fraction(4), Fraction(8), Fraction(8)), mode="pom",
                       hash_bits=16)
