from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pomchain.consensus import validate
from pomchain.errors import JobError, ParameterError
from pomchain.ledger import Chain, ChainParams, Transaction, sign_transaction
from pomchain.miner import (
    MiningJob,
    attempts_distribution_check,
    candidate,
    make_job,
    mine,
    mine_parallel,
    scan,
)


def empty(D=1, bits=16, mode="pow", L=8):
    return Chain((), ChainParams(L, Fraction(1, 2), (Fraction(D),) * 4, mode, bits))


def test_full_target_takes_first_nonce(keys):
    job = make_job(empty(), keys["A"].public, nonce_start=17)
    block, attempts = scan(job)
    assert block.nonce == 17 and attempts == 1


def test_empty_range_is_exhausted(keys):
    job = make_job(empty(), keys["A"].public, nonce_start=5, nonce_limit=5)
    assert mine(job) is None
    assert not job.solvable


def test_unreachable_target_exhausts(keys):
    chain = empty()
    job = MiningJob(chain, keys["A"].public, (), Fraction(1, 2), 0, 200)
    block, attempts = scan(job)
    # target 1/2 admits only a zero hash
    zero = [n for n in range(200)
            if candidate_hash(job, n, chain.params.profile) == 0]
    assert (block is None) == (not zero)
    assert attempts == (200 if block is None else zero[0] + 1)


def candidate_hash(job, nonce, profile):
    return candidate(job, nonce).hash(profile)


def test_zero_target_is_not_solvable(keys):
    job = MiningJob(empty(), keys["A"].public, (), Fraction(0))
    assert mine(job) is None


def test_nonce_bounds():
    with pytest.raises(ParameterError):
        MiningJob(empty(), b"x", (), Fraction(1), 10, 5)
    with pytest.raises(ParameterError):
        MiningJob(empty(), b"x", (), Fraction(1), 0, 2**64 + 1)


def test_overdraft_job(keys):
    a, b = keys["A"], keys["B"]
    spend = sign_transaction(Transaction.of({a.public: -5, b.public: 5}), [a])
    with pytest.raises(JobError):
        mine(make_job(empty(), b.public, (spend,)))


def test_mined_blocks_validate(keys):
    chain = empty(D=6, mode="pom", L=3)
    for n in "ABCAABBCA":
        block = mine(make_job(chain, keys[n].public))
        chain = chain.append(block)
        assert validate(chain).ok


def test_deterministic_and_parallel_equal(keys):
    job = make_job(empty(D=300), keys["A"].public, nonce_limit=1 << 16)
    first = mine(job)
    assert first == mine(job)
    for workers in (1, 2, 3, 7):
        assert mine_parallel(job, workers) == first
    with pytest.raises(ParameterError):
        mine_parallel(job, 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 2000), st.integers(1, 2000), st.binary(min_size=32, max_size=32))
def test_raising_target_never_raises_nonce(d1, d2, miner):
    lo, hi = sorted((d1, d2))
    easy = MiningJob(empty(), miner, (), Fraction(65535, lo), 0, 1 << 16)
    hard = MiningJob(empty(), miner, (), Fraction(65535, hi), 0, 1 << 16)
    be, bh = mine(easy), mine(hard)
    if bh is not None:
        assert be is not None and be.nonce <= bh.nonce


def test_expected_attempts_example(keys):
    # D=4 is a geometric search with mean 4
    block, attempts = scan(make_job(empty(D=4), keys["A"].public))
    assert block is not None and attempts < 64


def test_attempts_mean_d16():
    stats = attempts_distribution_check(1000, 16, 1)
    assert abs(stats.mean / 16 - 1) < 0.10
    assert stats.expected == 16


def test_attempts_mean_half_stake():
    stats = attempts_distribution_check(2000, 16, Fraction(1, 2), seed=1)
    assert abs(stats.mean / 32 - 1) < 0.10


def test_attempts_mean_large_sample_and_ratio():
    base = attempts_distribution_check(10_000, 16, 1, seed=2)
    assert 14.4 <= base.mean <= 17.6
    doubled = attempts_distribution_check(10_000, 32, 1, seed=3)
    assert abs(doubled.mean / base.mean / 2 - 1) < 0.10
    # geometric variance (1-p)/p^2
    assert abs(base.variance / (15 * 16) - 1) < 0.15
