"""Seeded discrete-event simulation of competing miners.

Hash search is idealized as a Poisson process: a miner with computing power
``P`` and stake ``s`` facing difficulty ``D`` finds blocks at rate ``P*s/D``
(``P/D`` under proof of work). After every block each miner holds a fresh
exponential clock and the earliest clock wins. Rates only change at window
boundaries, so all events up to the next boundary are drawn as one batch.

Random streams come from numpy's PCG64 seeded through
``SeedSequence(seed, spawn_key=(trial,))``; a trial's stream depends only on
the scenario seed and the trial index.

With attacker miners present the run forks: honest miners extend the public
branch, attackers a private branch rooted at the same prefix. The public
branch first gets ``lag`` blocks of head start; the race then ends when the
private branch's difficulty catches up, when the gap reaches
``give_up_deficit``, or at the horizon. Each branch prices its stakes from
its own previous window.
"""

from __future__ import annotations

import csv
import io
from functools import lru_cache
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from ..consensus import WindowStats, mstak
from ..errors import ParameterError
from ..ledger import POM, ChainParams

HONEST = "honest"
ATTACKER = "attacker-private-fork"
SYBIL = "sybil-spawner"
STRATEGIES = (HONEST, ATTACKER, SYBIL)

PUBLIC, PRIVATE = 0, 1
BRANCH_NAMES = ("public", "private")

FIRST_BATCH = 32
MAX_BATCH = 8192
RETARGET_CLAMP = 4

BLOCK_COLUMNS = ("index", "branch", "height", "time", "miner", "window", "difficulty", "stake")


@dataclass(frozen=True)
class SimMiner:
    account: str
    power: float = 1.0
    strategy: str = HONEST

    def __post_init__(self) -> None:
        if not self.power > 0:
            raise ParameterError(f"miner {self.account}: power must be positive")
        if self.strategy not in STRATEGIES:
            raise ParameterError(f"unknown strategy {self.strategy!r}")


@dataclass(frozen=True)
class Scenario:
    params: ChainParams
    miners: tuple[SimMiner, ...]
    horizon_blocks: int | None = None
    horizon_time: float | None = None
    seed: int = 0
    retarget_interval: float | None = None
    prefix: tuple[str, ...] = ()
    lag: int = 0
    give_up_deficit: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "miners", tuple(self.miners))
        object.__setattr__(self, "prefix", tuple(self.prefix))
        names = [m.account for m in self.miners]
        if len(set(names)) != len(names):
            raise ParameterError("miner accounts must be distinct")
        if not any(m.strategy == HONEST for m in self.miners):
            raise ParameterError("scenario needs at least one honest miner")
        if self.horizon_blocks is None and self.horizon_time is None:
            raise ParameterError("scenario needs a block or time horizon")
        if self.horizon_blocks is not None and self.horizon_blocks <= 0:
            raise ParameterError("horizon_blocks must be positive")
        if self.horizon_time is not None and not self.horizon_time > 0:
            raise ParameterError("horizon_time must be positive")
        if self.retarget_interval is not None:
            if not self.retarget_interval > 0:
                raise ParameterError("retarget interval must be positive")
            if len(self.params.difficulty) != 1:
                raise ParameterError("retargeting and an explicit difficulty vector are exclusive")
            if self.attackers:
                raise ParameterError("retargeting is not supported for forked runs")
        if self.attackers and self.lag < 1:
            raise ParameterError("attack scenarios need lag >= 1")

    @property
    def attackers(self) -> tuple[SimMiner, ...]:
        return tuple(m for m in self.miners if m.strategy == ATTACKER)

    def group(self, strategy: str) -> tuple[str, ...]:
        return tuple(m.account for m in self.miners if m.strategy == strategy)


@dataclass(frozen=True)
class WindowRecord:
    branch: int
    index: int
    start: float
    end: float
    difficulty: Fraction
    stats: WindowStats

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass
class SimResult:
    scenario: Scenario
    accounts: tuple[str, ...]
    time: np.ndarray
    miner: np.ndarray
    branch: np.ndarray
    height: np.ndarray
    window: np.ndarray
    difficulty: np.ndarray
    stake: np.ndarray
    windows: list[WindowRecord]
    difficulty_vector: tuple[Fraction, ...]
    rate_log: list[tuple[int, int, dict[str, float]]] = field(default_factory=list)
    caught_up: bool | None = None
    final_deficit: float | None = None
    stalled: bool = False

    def __len__(self) -> int:
        return len(self.time)

    def miners_of(self, branch: int = PUBLIC) -> list[str]:
        """Miner of every block on a branch, prefix included."""
        sel = self.branch == branch
        return list(self.scenario.prefix) + [self.accounts[i] for i in self.miner[sel]]

    def completion_time(self, branch: int = PUBLIC) -> float:
        sel = self.time[self.branch == branch]
        return float(sel[-1]) if len(sel) else 0.0

    def rows(self) -> Iterator[tuple]:
        for k in range(len(self.time)):
            yield (k, BRANCH_NAMES[self.branch[k]], int(self.height[k]), repr(float(self.time[k])),
                   self.accounts[self.miner[k]], int(self.window[k]),
                   repr(float(self.difficulty[k])), repr(float(self.stake[k])))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(BLOCK_COLUMNS)
        writer.writerows(self.rows())
        return buf.getvalue()

    def emitted_params(self, hash_bits: int | None = None) -> ChainParams:
        p = self.scenario.params
        return ChainParams(p.period, p.discrimination, self.difficulty_vector, p.mode,
                           p.hash_bits if hash_bits is None else hash_bits)


def make_rng(seed: int, trial: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))


def block_time_sample(rate: float, rng: np.random.Generator) -> float:
    """Exponential waiting time with the given rate."""
    if not rate > 0:
        raise ParameterError("rate must be positive")
    return float(rng.exponential(1.0 / rate))


def retarget(windows: Sequence[WindowRecord] | Sequence[float], target_interval: float,
             current: float, period: int):
    """Scale difficulty so the next window takes ``target_interval * period``.

    ``windows`` may be window records or bare durations; the latest one is
    used. The result is clamped to ``[current/4, 4*current]``.
    """
    if not windows:
        raise ParameterError("retargeting needs at least one completed window")
    last = windows[-1]
    duration = last.duration if isinstance(last, WindowRecord) else float(last)
    if not duration > 0:
        return current * RETARGET_CLAMP
    factor = target_interval * period / duration
    factor = min(max(factor, 1 / RETARGET_CLAMP), RETARGET_CLAMP)
    return current * factor


class _Branch:
    def __init__(self, ident: int, chain: list[str], members: list[int], powers: np.ndarray,
                 difficulty: list[Fraction]):
        self.ident = ident
        self.chain = chain
        self.members = np.asarray(members, dtype=np.int64)
        self.powers = powers[self.members]
        self.difficulty = difficulty
        self.window_start = 0.0
        self.last_time = 0.0
        self.mined = 0
        self.gained = 0.0
        self.stakes = np.empty(0)
        self.rates = np.empty(0)
        self.d_now = 0.0

    @property
    def height(self) -> int:
        return len(self.chain)


class _Run:
    def __init__(self, s: Scenario, trial: int):
        self.s = s
        self.p = s.params
        self.L = s.params.period
        self.rng = make_rng(s.seed, trial)
        names = [m.account for m in s.miners]
        extra = sorted(set(s.prefix) - set(names))
        self.accounts = tuple(names + extra)
        powers = np.array([m.power for m in s.miners], dtype=float)
        pub = [i for i, m in enumerate(s.miners) if m.strategy != ATTACKER]
        priv = [i for i, m in enumerate(s.miners) if m.strategy == ATTACKER]
        self.branches = [_Branch(PUBLIC, list(s.prefix), pub, powers, list(s.params.difficulty))]
        if priv:
            self.branches.append(
                _Branch(PRIVATE, list(s.prefix), priv, powers, list(s.params.difficulty)))
        self.windows: list[WindowRecord] = []
        self.rate_log: list[tuple[int, int, dict[str, float]]] = []
        self.cols: list[tuple[np.ndarray, ...]] = []
        for b in self.branches:
            self._price(b)

    def _difficulty(self, b: _Branch, n: int) -> Fraction:
        # a short vector repeats its last entry
        while len(b.difficulty) <= n:
            b.difficulty.append(b.difficulty[-1])
        return b.difficulty[n]

    def _stats(self, b: _Branch, n: int) -> WindowStats:
        return _window_stats(n, tuple(b.chain[n * self.L:(n + 1) * self.L]))

    def _price(self, b: _Branch) -> None:
        n = b.height // self.L
        D = self._difficulty(b, n)
        if self.p.mode == POM and n > 0:
            stats = self._stats(b, n - 1)
            a = self.p.discrimination
            stakes = [float(mstak(self.accounts[i], stats, a, self.L)) for i in b.members]
        else:
            stakes = [1.0] * len(b.members)
        b.stakes = np.array(stakes, dtype=float)
        b.d_now = float(D)
        b.rates = b.powers * b.stakes / b.d_now
        self.rate_log.append((b.ident, n, {self.accounts[i]: float(r)
                                           for i, r in zip(b.members, b.rates)}))

    def _close_window(self, b: _Branch) -> None:
        n = b.height // self.L - 1
        self.windows.append(WindowRecord(b.ident, n, b.window_start, b.last_time,
                                         b.difficulty[n], self._stats(b, n)))
        b.window_start = b.last_time
        if self.s.retarget_interval is not None and len(b.difficulty) == n + 1:
            done = [w for w in self.windows if w.branch == b.ident]
            nxt = retarget(done, self.s.retarget_interval, float(b.difficulty[n]), self.L)
            b.difficulty.append(Fraction(nxt))
        self._price(b)

    def _apply(self, parts: list[_Branch], winners: np.ndarray, times: np.ndarray) -> None:
        k = len(winners)
        miner = np.empty(k, dtype=np.int64)
        branch = np.empty(k, dtype=np.int8)
        height = np.empty(k, dtype=np.int64)
        diff = np.empty(k)
        stake = np.empty(k)
        offset = 0
        for x in parts:
            n = len(x.members)
            idx = np.flatnonzero((winners >= offset) & (winners < offset + n))
            loc = winners[idx] - offset
            offset += n
            if not len(idx):
                continue
            glob = x.members[loc]
            miner[idx] = glob
            branch[idx] = x.ident
            height[idx] = x.height + np.arange(len(idx))
            diff[idx] = x.d_now
            stake[idx] = x.stakes[loc]
            x.chain.extend(self.accounts[i] for i in glob)
            x.mined += len(idx)
            x.gained += len(idx) * x.d_now
            x.last_time = float(times[idx[-1]])
        self.cols.append((times, miner, branch, height, height // self.L, diff, stake))

    def run(self) -> SimResult:
        s = self.s
        pub = self.branches[PUBLIC]
        priv = self.branches[PRIVATE] if len(self.branches) > 1 else None
        t = 0.0
        total = 0
        batch = FIRST_BATCH
        caught_up = None
        stalled = False
        while True:
            b = MAX_BATCH if s.horizon_blocks is None else s.horizon_blocks - total
            if b <= 0:
                break
            b = min(b, batch, self.L - pub.height % self.L)
            batch = min(2 * batch, MAX_BATCH)
            lead = priv is not None and pub.mined < s.lag
            parts = [pub]
            if lead:
                b = min(b, s.lag - pub.mined)
            elif priv is not None:
                b = min(b, self.L - priv.height % self.L)
                parts.append(priv)

            rates = np.concatenate([x.rates for x in parts])
            active = np.flatnonzero(rates > 0)
            if not len(active):
                stalled = True
                break
            draws = self.rng.standard_exponential((b, len(active))) / rates[active]
            pick = np.argmin(draws, axis=1)
            times = t + np.cumsum(draws[np.arange(b), pick])
            winners = active[pick]

            cut, finish = b, False
            if s.horizon_time is not None:
                cut = int(np.searchsorted(times, s.horizon_time, side="right"))
                finish = cut < b
            if len(parts) == 2:
                on_priv = winners[:cut] >= len(pub.members)
                gap = (pub.gained - priv.gained) + np.cumsum(
                    np.where(on_priv, -priv.d_now, pub.d_now))
                hit = np.flatnonzero(gap <= 0)
                quit_ = (np.flatnonzero(gap >= s.give_up_deficit)
                         if s.give_up_deficit is not None else np.empty(0, dtype=np.int64))
                if len(hit) and (not len(quit_) or hit[0] < quit_[0]):
                    cut, finish, caught_up = int(hit[0]) + 1, True, True
                elif len(quit_):
                    cut, finish = int(quit_[0]) + 1, True

            if cut:
                before = [x.height for x in parts]
                self._apply(parts, winners[:cut], times[:cut])
                total += cut
                t = float(times[cut - 1])
                for x, h in zip(parts, before):
                    if x.height > h and x.height % self.L == 0:
                        self._close_window(x)
            if finish:
                break
        if priv is not None:
            caught_up = bool(caught_up)
        deficit = None if priv is None else pub.gained - priv.gained
        return self._result(caught_up, deficit, stalled)

    def _result(self, caught_up, deficit, stalled) -> SimResult:
        if self.cols:
            cols = [np.concatenate(c) for c in zip(*self.cols)]
        else:
            cols = [np.empty(0), np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int8),
                    np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64),
                    np.empty(0), np.empty(0)]
        return SimResult(self.s, self.accounts, *cols, windows=self.windows,
                         difficulty_vector=tuple(self.branches[PUBLIC].difficulty),
                         rate_log=self.rate_log, caught_up=caught_up,
                         final_deficit=deficit, stalled=stalled)


@lru_cache(maxsize=4096)
def _window_stats(n: int, blocks: tuple[str, ...]) -> WindowStats:
    return WindowStats.from_miners(n, blocks)


def run_scenario(s: Scenario, trial: int = 0) -> SimResult:
    """Simulate ``s`` with the random stream of the given trial index."""
    return _Run(s, trial).run()
