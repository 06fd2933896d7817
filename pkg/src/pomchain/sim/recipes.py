"""Named experiment recipes run by ``pomchain experiment``.

Each recipe returns per-trial rows and summary rows. Summary rows always
carry the same columns (see ``SUMMARY_COLUMNS``); ``passed`` compares the
error against the tolerance under the row's metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from ..ledger import POM, POW, ChainParams
from ..oracles import random_walk_catchup
from .engine import Scenario, SimMiner
from .experiments import (
    attack_catchup,
    catchup_scenario,
    concentration,
    lemma2_prediction,
    lemma3_grid,
    retarget_demo,
    sybil_experiment,
    sybil_scenario,
    verify_lemma1,
    verify_lemma2,
    verify_theorem1,
    verify_theorem2,
)

VERSION = 1
SUMMARY_COLUMNS = ("recipe", "case", "prediction", "empirical", "error", "metric",
                   "tolerance", "passed")


@dataclass
class RecipeConfig:
    seed: int = 0
    trials: int | None = None
    difficulty: Fraction | None = None
    period: int | None = None
    alpha: Fraction | None = None
    retarget_interval: float | None = None


@dataclass
class Outcome:
    trial_columns: tuple[str, ...]
    trial_rows: list[tuple] = field(default_factory=list)
    summary: list[tuple] = field(default_factory=list)

    def add(self, recipe: str, case: str, prediction, empirical, error: float, metric: str,
            tolerance: float) -> None:
        passed = error <= tolerance
        self.summary.append((f"{recipe}/v{VERSION}", case, prediction, empirical, error, metric,
                             tolerance, passed))

    @property
    def passed(self) -> bool:
        return all(row[-1] for row in self.summary)


def case_seed(seed: int, case: int) -> int:
    """Distinct scenario seed per case so cases do not share random streams."""
    return seed * 1000 + case


def _d(cfg: RecipeConfig, default: int = 100) -> Fraction:
    return cfg.difficulty if cfg.difficulty is not None else Fraction(default)


def lemma1(cfg: RecipeConfig) -> Outcome:
    out = Outcome(("case", "trial", "time"))
    trials = cfg.trials or 10_000
    D = _d(cfg)
    for no, P in enumerate((1, 2, 5)):
        miners = tuple(SimMiner(f"m{i}") for i in range(P))
        s = Scenario(ChainParams(1, 0, (D,), POW, 16), miners, horizon_blocks=1,
                     seed=case_seed(cfg.seed, no))
        chk = verify_lemma1(s, trials)
        case = f"P={P}"
        out.trial_rows += [(case, t, float(x)) for t, x in enumerate(chk.samples)]
        out.add("lemma1", case, chk.prediction, chk.empirical, chk.rel_error, "relative", 0.03)
    return out


def theorem1(cfg: RecipeConfig) -> Outcome:
    out = Outcome(("k", "rms_rel_dev", "rms_times_sqrt_k"))
    D = _d(cfg)
    s = Scenario(ChainParams(10**6, 0, (D,), POW, 16), (SimMiner("m0"),), horizon_blocks=1,
                 seed=case_seed(cfg.seed, 30))
    chk = verify_theorem1(s, 10_000)
    out.add("theorem1", "k=10000 single run", chk.prediction, chk.empirical, chk.rel_error,
            "relative", 0.03)
    runs = cfg.trials or 200
    rows = concentration(s, (100, 1000, 10_000), runs)
    out.trial_rows = [(k, rms, scaled) for k, rms, scaled in rows]
    for k, rms, scaled in rows:
        out.add("theorem1", f"k={k} rms*sqrt(k) over {runs} runs", 1.0, scaled, abs(scaled - 1),
                "absolute", 0.25)
    shrink = rows[0][1] / rows[-1][1]
    out.add("theorem1", "rms(k=100)/rms(k=10000)", 10.0, shrink, abs(shrink / 10 - 1),
            "relative", 0.25)
    return out


def stake_configs() -> list[tuple[str, Scenario, tuple[str, ...]]]:
    """Prefix windows (L = 1000) giving set stakes 0.1, 0.25 and 0.5."""
    L, D = 1000, Fraction(100)

    def scen(a, prefix):
        return Scenario(ChainParams(L, Fraction(a), (D,), POM, 16), (SimMiner("A"),),
                        horizon_blocks=1, prefix=tuple(prefix))

    ten = [f"m{i}" for i in range(10) for _ in range(100)]
    ten[:100] = ["A"] * 100
    five = ["A"] * 300 + [f"m{i}" for i in range(4) for _ in range(175)]
    four = ["A"] * 250 + ["B"] * 250 + ["C"] * 250 + ["E"] * 250
    return [
        ("0.1", scen(0, ten), ("A",)),
        ("0.25", scen(Fraction(1, 2), five), ("A",)),
        ("0.5", scen(Fraction(1, 2), four), ("A", "B")),
    ]


def lemma2(cfg: RecipeConfig) -> Outcome:
    out = Outcome(("case", "trial", "time"))
    trials = cfg.trials or 10_000
    for no, (label, s, S) in enumerate(stake_configs()):
        s = Scenario(s.params, s.miners, horizon_blocks=1, seed=case_seed(cfg.seed, 10 + no),
                     prefix=s.prefix)
        chk = verify_lemma2(s, S, trials)
        case = f"set_mstak={label}"
        out.trial_rows += [(case, t, float(x)) for t, x in enumerate(chk.samples)]
        out.add("lemma2", case, chk.prediction, chk.empirical, chk.rel_error, "relative", 0.03)
    return out


def theorem2(cfg: RecipeConfig) -> Outcome:
    out = Outcome(("case", "k", "stake", "completion_time"))
    k = 1000
    for no, (label, s, S) in enumerate(stake_configs()):
        s = Scenario(s.params, s.miners, horizon_blocks=1, seed=case_seed(cfg.seed, 20 + no),
                     prefix=s.prefix)
        stake, _ = lemma2_prediction(s, S)
        chk = verify_theorem2(s, S, k)
        out.trial_rows.append((f"set_mstak={label}", k, float(stake), chk.empirical))
        out.add("theorem2", f"set_mstak={label}", chk.prediction, chk.empirical, chk.rel_error,
                "relative", 0.05)
    return out


def lemma3(cfg: RecipeConfig) -> Outcome:
    out = Outcome(("a", "L", "cases", "disagreements", "corollary_cases",
                   "corollary_failures", "equality_edges"))
    rows = lemma3_grid()
    out.trial_rows = [(str(r.a), r.L, r.cases, r.disagreements, r.corollary_cases,
                       r.corollary_failures, r.equality_edges) for r in rows]
    bad = sum(r.disagreements for r in rows)
    cases = sum(r.cases for r in rows)
    out.add("lemma3-grid", f"violations over {cases} cases", 0, bad, bad, "count", 0)
    cor_bad = sum(r.corollary_failures for r in rows)
    cor = sum(r.corollary_cases for r in rows)
    out.add("lemma3-grid", f"corollary failures over {cor} cases with NOBM(S)>=1", 0, cor_bad,
            cor_bad, "count", 0)
    edges = sum(r.equality_edges for r in rows)
    out.summary.append((f"lemma3-grid/v{VERSION}", "equality edges with NOBM(S)=0 (reported)",
                        "", edges, "", "report", "", True))
    return out


def catchup(cfg: RecipeConfig) -> Outcome:
    out = Outcome(("z", "trial", "caught_up"))
    trials = cfg.trials or 10_000
    for z in range(1, 11):
        s = catchup_scenario(Fraction(3, 10), seed=case_seed(cfg.seed, 40 + z))
        est = attack_catchup(s, z, trials)
        walk = random_walk_catchup(est.q, z, trials, seed=cfg.seed + z)
        out.trial_rows += [(z, t, int(c)) for t, c in enumerate(est.outcomes)]
        out.add("catchup", f"q=0.3 z={z}", est.oracle, est.probability,
                abs(est.probability - est.oracle), "absolute", 0.01)
        out.add("catchup", f"random-walk oracle z={z}", est.oracle, walk,
                abs(walk - est.oracle), "absolute", 0.01)
    return out


def sybil(cfg: RecipeConfig) -> Outcome:
    out = Outcome(("a", "power_model", "window", "nom", "sybil_miners", "sybil_nobm",
                   "share", "set_stake", "crossed", "next_share"))
    alphas = (Fraction(0), Fraction(1, 5), Fraction(1, 2), Fraction(4, 5), Fraction(1))
    for no, a in enumerate(alphas):
        for model, power in (("per-account", None), ("split", 2.0)):
            rep = sybil_experiment(sybil_scenario(a, sybil_power=power,
                                                  seed=case_seed(cfg.seed, 60 + no)))
            for w in rep.windows:
                out.trial_rows.append((str(a), model, w.window, w.nom, w.sybil_miners,
                                       w.sybil_nobm, w.share, w.set_stake, int(w.crossed),
                                       w.next_share))
            # whenever the identities' share reaches the threshold with a block
            # mined, the set stake must exceed one half
            thr = rep.threshold
            misses = sum(1 for w in rep.windows
                         if thr is not None and Fraction(w.sybil_miners, w.nom) >= thr
                         and w.sybil_nobm >= 1 and not w.crossed)
            after = rep.block_share_after_crossing()
            out.add("sybil", f"a={a} {model} threshold={thr} power_share={rep.power_share:.4f} "
                    f"first_crossing={rep.first_crossing} share_after={after}",
                    0, misses, misses, "count", 0)
    return out


def retarget(cfg: RecipeConfig) -> Outcome:
    out = Outcome(("window", "difficulty", "duration", "mean_interval"))
    target = cfg.retarget_interval or 10.0
    L = cfg.period or 100
    s = Scenario(ChainParams(L, 0, (_d(cfg),), POW, 16), (SimMiner("m0"), SimMiner("m1")),
                 horizon_blocks=40 * L, seed=case_seed(cfg.seed, 70),
                 retarget_interval=target)
    rows = retarget_demo(s)
    out.trial_rows = [(w.window, w.difficulty, w.duration, w.mean_interval) for w in rows]
    tail = rows[-10:]
    mean = sum(w.mean_interval for w in tail) / len(tail)
    out.add("retarget-demo", "mean interval over last 10 windows", target, mean,
            abs(mean - target) / target, "relative", 0.1)
    return out


RECIPES: dict[str, Callable[[RecipeConfig], Outcome]] = {
    "lemma1": lemma1,
    "theorem1": theorem1,
    "lemma2": lemma2,
    "theorem2": theorem2,
    "lemma3-grid": lemma3,
    "catchup": catchup,
    "sybil": sybil,
    "retarget-demo": retarget,
}
