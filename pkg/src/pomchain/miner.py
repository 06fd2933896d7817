"""Nonce search against the real hash function.

Attempts are counted rather than timed: at unit computing power one attempt
is one unit of time, so mean attempts play the role of expected mining time.
"""

from __future__ import annotations

import hashlib
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .consensus import block_target, pom_threshold
from .crypto import Account
from .errors import JobError, ParameterError
from .ledger import (
    NONCE_LIMIT,
    Block,
    Chain,
    ChainParams,
    SignedTransaction,
    ValidationReport,
    apply_block,
    block_header_parts,
)


@dataclass(frozen=True)
class MiningJob:
    parent_chain: Chain
    miner: Account
    txs: tuple[SignedTransaction, ...] = ()
    target: Fraction | float = Fraction(0)
    nonce_start: int = 0
    nonce_limit: int = NONCE_LIMIT  # exclusive

    def __post_init__(self) -> None:
        if not 0 <= self.nonce_start <= self.nonce_limit <= NONCE_LIMIT:
            raise ParameterError("need 0 <= nonce_start <= nonce_limit <= 2**64")
        object.__setattr__(self, "txs", tuple(self.txs))

    @property
    def solvable(self) -> bool:
        return self.target > 0 and self.nonce_start < self.nonce_limit


def make_job(chain: Chain, miner: Account, txs=(), nonce_start: int = 0,
             nonce_limit: int = NONCE_LIMIT) -> MiningJob:
    """Job for the next block of ``chain``, with the consensus target filled in."""
    target = block_target(chain, len(chain), miner)
    return MiningJob(chain, miner, tuple(txs), target, nonce_start, nonce_limit)


def candidate(job: MiningJob, nonce: int | None = None) -> Block:
    return Block(job.parent_chain.tip_hash(), job.miner, job.txs,
                 job.nonce_start if nonce is None else nonce)


def check_job(job: MiningJob) -> None:
    """Raise JobError unless the new block keeps every balance nonnegative."""
    balances: dict[Account, int] = defaultdict(int)
    scratch = ValidationReport()
    for i, block in enumerate(job.parent_chain.blocks):
        apply_block(balances, block, i, scratch)
    report = ValidationReport()
    apply_block(balances, candidate(job), len(job.parent_chain), report)
    if not report.ok:
        raise JobError("; ".join(report.lines()))


def scan(job: MiningJob) -> tuple[Block | None, int]:
    """Sequential search; returns the winning block (or None) and attempts made."""
    check_job(job)
    if not job.solvable:
        return None, 0
    block = candidate(job)
    head, tail = block_header_parts(block)
    bits = job.parent_chain.params.hash_bits
    shift = 256 - bits
    limit = math.floor(job.target)
    sha = hashlib.sha256
    for nonce in range(job.nonce_start, job.nonce_limit):
        digest = sha(head + str(nonce).encode() + tail).digest()
        if int.from_bytes(digest, "big") >> shift <= limit:
            return block.with_nonce(nonce), nonce - job.nonce_start + 1
    return None, job.nonce_limit - job.nonce_start


def mine(job: MiningJob) -> Block | None:
    """First block, scanning nonces upward, whose hash is within the target."""
    return scan(job)[0]


def mine_parallel(job: MiningJob, workers: int = 4) -> Block | None:
    """Split the nonce range across workers; equals :func:`mine` on the same job."""
    check_job(job)
    span = job.nonce_limit - job.nonce_start
    if workers < 1:
        raise ParameterError("workers must be positive")
    bounds = [job.nonce_start + span * k // workers for k in range(workers + 1)]
    parts = [replace(job, nonce_start=lo, nonce_limit=hi) for lo, hi in zip(bounds, bounds[1:])]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        found = [b for b in pool.map(mine, parts) if b is not None]
    return min(found, key=lambda b: b.nonce, default=None)


@dataclass(frozen=True)
class AttemptStats:
    trials: int
    mean: float
    variance: float
    expected: float


def attempts_distribution_check(trials: int, D, stake, bits: int = 16, seed: int = 0) -> AttemptStats:
    """Mine ``trials`` independent genesis blocks and summarize attempt counts.

    Each trial varies the miner field so that the nonce scans are independent.
    The expected mean is ``D / stake``.
    """
    if trials < 1:
        raise ParameterError("trials must be positive")
    params = ChainParams(period=1, difficulty=(Fraction(D),), mode="pow", hash_bits=bits)
    chain = Chain((), params)
    target = pom_threshold(Fraction(D), Fraction(stake), params.profile.max_value)
    counts = np.empty(trials)
    for t in range(trials):
        miner = hashlib.sha256(f"attempts:{seed}:{t}".encode()).digest()
        block, attempts = scan(MiningJob(chain, miner, (), target))
        if block is None:
            raise ParameterError("nonce range exhausted; target too small")
        counts[t] = attempts
    return AttemptStats(trials, float(counts.mean()), float(counts.var(ddof=1)) if trials > 1 else 0.0,
                        float(Fraction(D) / Fraction(stake)))
