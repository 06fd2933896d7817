"""Window statistics, mining stake, block thresholds and fork choice.

Thresholds are compared exactly: difficulty, discrimination index and stake
are :class:`fractions.Fraction` values whenever they come from a chain, so
``hash <= (M / D) * stake`` never depends on float rounding.

A block in window 0 has no previous window to price its stake from; it is
validated with stake 1, which is plain proof of work.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .crypto import Account
from .errors import (
    IncompleteWindowError,
    ParameterError,
    RangeError,
    UndefinedStakeError,
)
from .ledger import (
    POM,
    Block,
    Chain,
    ValidationReport,
    canonical_bytes,
    validate_structure,
)

BOOTSTRAP_STAKE = Fraction(1)


@dataclass(frozen=True)
class WindowStats:
    window_index: int
    nobm: Mapping[Account, int]
    nom: int
    size: int

    @classmethod
    def from_miners(cls, window_index: int, miners: Iterable) -> WindowStats:
        """Stats for a window given the miner of each of its blocks, in order."""
        counts = Counter(miners)
        return cls(window_index, dict(counts), len(counts), sum(counts.values()))

    def blocks_by(self, accounts: Iterable) -> int:
        return sum(self.nobm.get(a, 0) for a in set(accounts))


def _blocks(chain: Chain | Sequence[Block]) -> Sequence[Block]:
    return chain.blocks if isinstance(chain, Chain) else chain


def window(chain: Chain | Sequence[Block], n: int, period: int | None = None) -> tuple[Block, ...]:
    """Blocks ``n*L .. n*L + L - 1`` (truncated at the chain tip)."""
    blocks = _blocks(chain)
    L = chain.params.period if period is None else period
    if n < 0 or n * L >= len(blocks):
        raise RangeError(f"window {n} does not exist in a chain of {len(blocks)} blocks")
    return tuple(blocks[n * L:(n + 1) * L])


def window_stats(chain: Chain | Sequence[Block], n: int, period: int | None = None) -> WindowStats:
    L = chain.params.period if period is None else period
    blocks = window(chain, n, L)
    if len(blocks) != L:
        raise IncompleteWindowError(f"window {n} holds {len(blocks)} of {L} blocks")
    return WindowStats.from_miners(n, (b.miner for b in blocks))


def mstak(account, stats: WindowStats, a, L: int):
    """(1 - a) / NOM + a * NOBM(account) / L.

    Accounts that mined nothing in the window still get the first term.
    Returns a Fraction for rational inputs and a float for float inputs.
    """
    if stats.nom < 1:
        raise UndefinedStakeError("window has no miners")
    if isinstance(a, float):
        return (1 - a) / stats.nom + a * stats.nobm.get(account, 0) / L
    a = Fraction(a)
    return (1 - a) * Fraction(1, stats.nom) + a * Fraction(stats.nobm.get(account, 0), L)


def set_mstak(accounts: Iterable, stats: WindowStats, a, L: int):
    members = set(accounts)
    if stats.nom < 1:
        raise UndefinedStakeError("window has no miners")
    total = 0.0 if isinstance(a, float) else Fraction(0)
    for account in members:
        total += mstak(account, stats, a, L)
    return total


def set_mstak_counts(size: int, nobm: int, nom: int, a, L: int) -> Fraction:
    """Set stake from aggregate counts: (1-a)*|S|/NOM + a*NOBM(S)/L."""
    if nom < 1:
        raise UndefinedStakeError("window has no miners")
    a = Fraction(a)
    return (1 - a) * Fraction(size, nom) + a * Fraction(nobm, L)


def majority_bound(size: int, nom: int, a) -> Fraction:
    """Right-hand side of the set-majority criterion on NOBM(S)/L.

    ``((1-a)/a) * (1/(2(1-a)) - |S|/NOM)``. At ``a == 1`` the product is
    evaluated in its expanded form ``1/(2a) - (1-a)|S|/(a NOM)``, which equals
    it everywhere else and stays finite there.
    """
    a = Fraction(a)
    if a == 0:
        raise ParameterError("criterion requires a != 0")
    if a == 1:
        return Fraction(1, 2) / a - (1 - a) * Fraction(size, nom) / a
    return ((1 - a) / a) * (1 / (2 * (1 - a)) - Fraction(size, nom))


def sybil_share_threshold(a) -> Fraction | None:
    """|S|/NOM at or above which a set's base term alone reaches half the stake.

    ``1 / (2 (1 - a))``; ``None`` when ``a == 1`` (no share suffices).
    """
    a = Fraction(a)
    return None if a == 1 else 1 / (2 * (1 - a))


def pow_threshold(D, M: int):
    if D <= 0:
        raise ParameterError("difficulty must be positive")
    return Fraction(M) / Fraction(D) if not isinstance(D, float) else M / D


def pom_threshold(D, stake, M: int):
    if not 0 <= stake <= 1:
        raise ParameterError(f"stake {stake} outside [0, 1]")
    return pow_threshold(D, M) * stake


def meets_target(hash_value: int, target) -> bool:
    """``hash <= target`` with a zero target never met."""
    return target > 0 and hash_value <= target


class StakeCache:
    """Memoized window stats over one block sequence (callers own coherence)."""

    def __init__(self, blocks: Sequence[Block], period: int):
        self.blocks = blocks
        self.period = period
        self._stats: dict[int, WindowStats] = {}

    def stats(self, n: int) -> WindowStats:
        if n not in self._stats:
            self._stats[n] = window_stats(self.blocks, n, self.period)
        return self._stats[n]


def block_stake(chain: Chain, index: int, miner: Account, cache: StakeCache | None = None) -> Fraction:
    """Stake that prices a block at ``index`` mined by ``miner``.

    ``index`` may equal ``len(chain)`` to price the next block.
    """
    p = chain.params
    if p.mode != POM:
        return BOOTSTRAP_STAKE
    n = index // p.period
    if n == 0:
        return BOOTSTRAP_STAKE
    cache = cache or StakeCache(chain.blocks, p.period)
    return mstak(miner, cache.stats(n - 1), p.discrimination, p.period)


def block_target(chain: Chain, index: int, miner: Account, cache: StakeCache | None = None) -> Fraction:
    """Largest hash a block at ``index`` by ``miner`` may have."""
    p = chain.params
    D = p.difficulty_at(index)
    M = p.profile.max_value
    if p.mode != POM:
        return pow_threshold(D, M)
    return pom_threshold(D, block_stake(chain, index, miner, cache), M)


def validate_consensus(chain: Chain) -> ValidationReport:
    """Check every block's hash against its PoW or PoM threshold."""
    report = ValidationReport()
    p = chain.params
    profile = p.profile
    cache = StakeCache(chain.blocks, p.period)
    rule = "pom-threshold" if p.mode == POM else "pow-threshold"
    for i, block in enumerate(chain.blocks):
        if not p.covers(i):
            report.add(i, "difficulty-coverage",
                       f"no difficulty entry for window {i // p.period}")
            break
        target = block_target(chain, i, block.miner, cache)
        h = profile.hash(canonical_bytes(block))
        if not meets_target(h, target):
            report.add(i, rule, f"hash {h} exceeds target {float(target):.6g}")
    return report


def validate(chain: Chain) -> ValidationReport:
    """Structural checks followed by consensus checks."""
    report = validate_structure(chain)
    if report.ok:
        report.extend(validate_consensus(chain))
    return report


def segment_difficulty(chain: Chain, k: int, m: int) -> Fraction:
    """Sum of per-block difficulty over blocks ``k..m`` inclusive."""
    if not 0 <= k <= m < len(chain):
        raise RangeError(f"segment {k}..{m} outside chain of length {len(chain)}")
    p = chain.params
    return sum((p.difficulty_at(i) for i in range(k, m + 1)), Fraction(0))


def chain_difficulty(chain: Chain) -> Fraction:
    return segment_difficulty(chain, 0, len(chain) - 1) if len(chain) else Fraction(0)


def _fork_key(chain: Chain):
    if not chain.blocks:
        return (Fraction(0), -1, b"")
    tip = chain.blocks[-1]
    raw = canonical_bytes(tip)
    return (-chain_difficulty(chain), chain.params.profile.hash(raw), raw)


def fork_choice(candidates: Iterable[Chain]) -> Chain:
    """Heaviest chain; ties go to the smaller tip hash, then smaller tip bytes."""
    chains = list(candidates)
    if not chains:
        raise ParameterError("fork choice needs at least one candidate")
    if len({c.params for c in chains}) != 1:
        raise ParameterError("candidates must share chain parameters")
    return min(chains, key=_fork_key)
