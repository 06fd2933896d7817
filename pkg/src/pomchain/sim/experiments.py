"""Monte Carlo checks of the mining-time laws and the security claims."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from ..consensus import (
    WindowStats,
    majority_bound,
    set_mstak,
    set_mstak_counts,
    sybil_share_threshold,
)
from ..errors import ParameterError
from ..ledger import POM, POW, ChainParams
from ..oracles import nakamoto_catchup
from .engine import (
    ATTACKER,
    HONEST,
    PRIVATE,
    PUBLIC,
    SYBIL,
    Scenario,
    SimMiner,
    SimResult,
    _Run,
    run_scenario,
)


@dataclass(frozen=True)
class MeanCheck:
    """Empirical mean against an analytic prediction."""

    prediction: float
    empirical: float
    samples: np.ndarray = field(repr=False, compare=False)

    @property
    def rel_error(self) -> float:
        return abs(self.empirical - self.prediction) / self.prediction

    @property
    def n(self) -> int:
        return len(self.samples)


def _next_window(s: Scenario) -> int:
    return len(s.prefix) // s.params.period


def _difficulty(s: Scenario, n: int) -> Fraction:
    ds = s.params.difficulty
    return ds[min(n, len(ds) - 1)]


def _prior_stats(s: Scenario) -> WindowStats:
    L = s.params.period
    n = _next_window(s)
    if n < 1:
        raise ParameterError("prefix must hold at least one complete window")
    return WindowStats.from_miners(n - 1, s.prefix[(n - 1) * L:n * L])


def _first_block_times(s: Scenario, trials: int) -> np.ndarray:
    one = replace(s, horizon_blocks=1, horizon_time=None)
    return np.array([run_scenario(one, t).time[0] for t in range(trials)])


def verify_lemma1(s: Scenario, trials: int) -> MeanCheck:
    """Mean time for all miners together to find one PoW block: ``D / P``."""
    if s.params.mode != POW:
        raise ParameterError("the PoW timing check needs a PoW scenario")
    P = sum(m.power for m in s.miners)
    D = _difficulty(s, _next_window(s))
    return _check(float(D) / P, _first_block_times(s, trials))


def _check(prediction: float, samples: np.ndarray) -> MeanCheck:
    return MeanCheck(prediction, float(samples.mean()), samples)


def _pow_prediction(s: Scenario, k: int) -> float:
    P = sum(m.power for m in s.miners)
    start = len(s.prefix)
    L = s.params.period
    return sum(float(_difficulty(s, i // L)) for i in range(start, start + k)) / P


def verify_theorem1(s: Scenario, k: int, trial: int = 0) -> MeanCheck:
    """Completion time of ``k`` PoW blocks in one run against ``sum(D_i) / P``."""
    if s.params.mode != POW:
        raise ParameterError("the PoW timing check needs a PoW scenario")
    r = run_scenario(replace(s, horizon_blocks=k, horizon_time=None), trial)
    return _check(_pow_prediction(s, k), np.array([r.completion_time()]))


def concentration(s: Scenario, ks: Sequence[int], runs: int) -> list[tuple[int, float, float]]:
    """RMS relative deviation of k-block completion time over ``runs`` runs.

    Returns ``(k, rms, rms * sqrt(k))`` per k; the last column stays near 1
    when deviations shrink like ``1/sqrt(k)``.
    """
    out = []
    for k in ks:
        devs = [verify_theorem1(s, k, trial=r).rel_error for r in range(runs)]
        rms = math.sqrt(sum(d * d for d in devs) / runs)
        out.append((k, rms, rms * math.sqrt(k)))
    return out


def _restricted(s: Scenario, accounts: Iterable[str]) -> tuple[Scenario, tuple[str, ...]]:
    if s.params.mode != POM:
        raise ParameterError("the stake timing checks need a PoM scenario")
    by_name = {m.account: m for m in s.miners}
    members = tuple(sorted(set(accounts)))
    if not members:
        raise ParameterError("the searching set must be non-empty")
    miners = []
    for name in members:
        m = by_name.get(name, SimMiner(name))
        if m.power != 1:
            raise ParameterError(f"{name}: stake timing checks pin computing power to 1")
        miners.append(SimMiner(name, 1.0, HONEST))
    return replace(s, miners=tuple(miners), lag=0), members


def lemma2_prediction(s: Scenario, accounts: Iterable[str]) -> tuple[Fraction, Fraction]:
    """``(set stake, D_N / set stake)`` for the window after the prefix."""
    stats = _prior_stats(s)
    p = s.params
    stake = set_mstak(accounts, stats, p.discrimination, p.period)
    return stake, _difficulty(s, _next_window(s)) / stake


def verify_lemma2(s: Scenario, accounts: Iterable[str], trials: int) -> MeanCheck:
    """Mean time for set ``accounts`` alone to find the next PoM block."""
    sub, members = _restricted(s, accounts)
    _, expected = lemma2_prediction(s, members)
    return _check(float(expected), _first_block_times(sub, trials))


def verify_theorem2(s: Scenario, accounts: Iterable[str], k: int, trial: int = 0) -> MeanCheck:
    """Completion time of ``k`` blocks by ``accounts`` inside one window."""
    sub, members = _restricted(s, accounts)
    L = s.params.period
    if len(s.prefix) % L + k > L:
        raise ParameterError("the k blocks must fit in the current window")
    _, expected = lemma2_prediction(s, members)
    r = run_scenario(replace(sub, horizon_blocks=k, horizon_time=None), trial)
    return _check(float(expected) * k, np.array([r.completion_time()]))


@dataclass(frozen=True)
class CatchupEstimate:
    z: int
    trials: int
    hits: int
    q: float
    oracle: float
    outcomes: np.ndarray = field(repr=False, compare=False)

    @property
    def probability(self) -> float:
        return self.hits / self.trials


def fork_rates(s: Scenario) -> tuple[float, float]:
    """Total honest and attacker block rates at the fork point."""
    run = _Run(replace(s, lag=max(s.lag, 1)), 0)
    pub = float(run.branches[PUBLIC].rates.sum())
    priv = float(run.branches[PRIVATE].rates.sum()) if len(run.branches) > 1 else 0.0
    return pub, priv


def attack_catchup(s: Scenario, z: int, trials: int, give_up: int | None = 60) -> CatchupEstimate:
    """Fraction of runs in which a private fork ``z`` blocks behind draws level.

    ``give_up`` abandons a run once the honest lead reaches ``z + give_up``
    blocks' worth of difficulty; ``None`` runs to the horizon.
    """
    if not s.attackers:
        raise ParameterError("catch-up needs attacker miners")
    if z < 1:
        raise ParameterError("z must be at least 1")
    honest, attacker = fork_rates(s)
    q = attacker / (honest + attacker)
    D = float(_difficulty(s, _next_window(s)))
    cfg = replace(s, lag=z,
                  give_up_deficit=None if give_up is None else (z + give_up) * D)
    outcomes = np.array([run_scenario(cfg, t).caught_up for t in range(trials)], dtype=bool)
    return CatchupEstimate(z, trials, int(outcomes.sum()), q, nakamoto_catchup(q, z), outcomes)


def catchup_scenario(q: Fraction, period: int = 1000, D: Fraction = Fraction(100),
                     honest: int = 7, horizon: int = 100_000, seed: int = 0) -> Scenario:
    """PoM race where the prefix window gives the attacker stake ``q`` (a = 1).

    All accounts have unit power, so block rates are proportional to stake.
    """
    q = Fraction(q)
    att = q * period
    if att.denominator != 1 or (period - att) % honest:
        raise ParameterError("q * period must split evenly")
    per_honest = int((period - att) / honest)
    names = [f"honest-{i}" for i in range(honest)]
    prefix = ["attacker"] * int(att) + [n for n in names for _ in range(per_honest)]
    params = ChainParams(period, Fraction(1), (D,), POM, 16)
    miners = [SimMiner(n) for n in names] + [SimMiner("attacker", 1.0, ATTACKER)]
    return Scenario(params, tuple(miners), horizon_blocks=horizon, seed=seed,
                    prefix=tuple(prefix), lag=1)


@dataclass(frozen=True)
class SybilWindow:
    window: int
    nom: int
    sybil_miners: int
    sybil_nobm: int
    share: float
    set_stake: float
    crossed: bool
    next_share: float | None


@dataclass
class SybilReport:
    a: Fraction
    identities: tuple[str, ...]
    threshold: Fraction | None
    power_share: float
    windows: list[SybilWindow]

    @property
    def first_crossing(self) -> int | None:
        return next((w.window for w in self.windows if w.crossed), None)

    def block_share_after_crossing(self) -> float | None:
        shares = [w.next_share for w in self.windows if w.crossed and w.next_share is not None]
        return sum(shares) / len(shares) if shares else None


def sybil_experiment(s: Scenario, result: SimResult | None = None) -> SybilReport:
    """Track the sybil identities' set stake window by window.

    Every account that spawns from the attacker carries the ``sybil-spawner``
    strategy. For each completed window the report gives how many identities
    mined in it, their set stake for the following window (every identity
    counts, miners or not), whether it exceeds 1/2, and the share of the
    following window's blocks they actually won.
    """
    p = s.params
    if p.mode != POM:
        raise ParameterError("sybil experiment needs a PoM scenario")
    sybils = s.group(SYBIL)
    if not sybils:
        raise ParameterError("no sybil-spawner identities in scenario")
    r = result or run_scenario(s)
    L = p.period
    chain = r.miners_of(PUBLIC)
    windows = [w for w in r.windows if w.branch == PUBLIC]
    total_power = sum(m.power for m in s.miners)
    members = set(sybils)
    rows = []
    for w in windows:
        stats = w.stats
        stake = set_mstak(sybils, stats, p.discrimination, L)
        nxt = chain[(w.index + 1) * L:(w.index + 2) * L]
        next_share = sum(1 for m in nxt if m in members) / L if len(nxt) == L else None
        rows.append(SybilWindow(
            window=w.index, nom=stats.nom,
            sybil_miners=sum(1 for a in sybils if stats.nobm.get(a, 0) > 0),
            sybil_nobm=stats.blocks_by(sybils),
            share=sum(1 for a in sybils if stats.nobm.get(a, 0) > 0) / stats.nom,
            set_stake=float(stake), crossed=stake > Fraction(1, 2), next_share=next_share))
    power = sum(m.power for m in s.miners if m.strategy == SYBIL) / total_power
    return SybilReport(p.discrimination, sybils, sybil_share_threshold(p.discrimination), power, rows)


def sybil_scenario(a, honest: int = 6, sybils: int = 10, period: int = 64,
                   sybil_power: float | None = None, windows: int = 8,
                   D: Fraction = Fraction(100), seed: int = 0) -> Scenario:
    """Honest unit-power miners against a sybil attacker.

    ``sybil_power`` is the attacker's total power split evenly over its
    identities; ``None`` gives every identity unit power (the per-account
    reading in which each account searches independently).
    """
    each = 1.0 if sybil_power is None else sybil_power / sybils
    miners = [SimMiner(f"honest-{i}") for i in range(honest)]
    miners += [SimMiner(f"sybil-{i}", each, SYBIL) for i in range(sybils)]
    params = ChainParams(period, Fraction(a), (D,), POM, 16)
    return Scenario(params, tuple(miners), horizon_blocks=windows * period, seed=seed)


@dataclass(frozen=True)
class GridRow:
    a: Fraction
    L: int
    cases: int
    disagreements: int
    corollary_cases: int
    corollary_failures: int
    equality_edges: int


def lemma3_grid(a_values: Sequence[Fraction] | None = None, periods: Sequence[int] = (10, 100),
                max_nom: int = 20) -> list[GridRow]:
    """Exhaustive comparison of the set-majority criterion with direct stake sums.

    For every ``a``, ``L``, ``NOM``, ``|S| <= NOM`` and ``NOBM(S) <= L`` the
    direct test ``stake(S) > 1/2`` is compared with ``NOBM(S)/L > bound``.
    Cases with ``|S|/NOM >= 1/(2(1-a))`` also check the one-sided share
    criterion: with ``NOBM(S) >= 1`` the stake must exceed 1/2; the
    ``NOBM(S) = 0`` cases where the stake is exactly 1/2 are counted as
    equality edges instead.
    """
    if a_values is None:
        a_values = [Fraction(k, 20) for k in range(1, 21)]
    half = Fraction(1, 2)
    rows = []
    for a in a_values:
        a = Fraction(a)
        thr = sybil_share_threshold(a)
        for L in periods:
            cases = bad = cor = cor_bad = edges = 0
            for nom in range(1, max_nom + 1):
                for size in range(nom + 1):
                    bound = majority_bound(size, nom, a)
                    in_cor = thr is not None and Fraction(size, nom) >= thr
                    for nobm in range(L + 1):
                        stake = set_mstak_counts(size, nobm, nom, a, L)
                        direct = stake > half
                        cases += 1
                        if direct != (Fraction(nobm, L) > bound):
                            bad += 1
                        if in_cor:
                            if nobm >= 1:
                                cor += 1
                                cor_bad += not direct
                            elif stake == half:
                                edges += 1
            rows.append(GridRow(a, L, cases, bad, cor, cor_bad, edges))
    return rows


@dataclass(frozen=True)
class RetargetWindow:
    window: int
    difficulty: float
    duration: float
    mean_interval: float


def retarget_demo(s: Scenario) -> list[RetargetWindow]:
    if s.retarget_interval is None:
        raise ParameterError("scenario has no retarget interval")
    r = run_scenario(s)
    L = s.params.period
    return [RetargetWindow(w.index, float(w.difficulty), w.duration, w.duration / L)
            for w in r.windows if w.branch == PUBLIC]
