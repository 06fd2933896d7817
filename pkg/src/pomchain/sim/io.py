"""Scenario files and CSV output.

A scenario file is JSON::

    {
      "params": {"mode": "pom", "period": 4, "discrimination": "1/2",
                 "difficulty": ["100"], "hash_bits": 16},
      "miners": [{"account": "alice", "power": 1.0, "strategy": "honest"}],
      "horizon_blocks": 100,
      "seed": 7
    }

Optional keys: ``horizon_time``, ``retarget_interval``, ``prefix`` (list of
account names that mined the pre-existing blocks), ``lag`` and
``give_up_deficit``. Rationals may be given as strings (``"1/2"``) or numbers.
"""

from __future__ import annotations

import csv
import json
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from ..errors import ParameterError
from ..ledger import ChainParams
from .engine import Scenario, SimMiner

OPTIONAL = ("horizon_blocks", "horizon_time", "seed", "retarget_interval", "prefix",
            "lag", "give_up_deficit")


def _rational(v) -> Fraction:
    if isinstance(v, bool):
        raise ParameterError(f"not a number: {v!r}")
    return Fraction(str(v))


def params_from_obj(obj: dict) -> ChainParams:
    try:
        return ChainParams(
            period=int(obj["period"]),
            discrimination=_rational(obj.get("discrimination", 0)),
            difficulty=tuple(_rational(d) for d in obj["difficulty"]),
            mode=obj.get("mode", "pom"),
            hash_bits=int(obj.get("hash_bits", 16)),
        )
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ParameterError(f"bad params record: {exc}") from None


def scenario_from_obj(obj: dict) -> Scenario:
    unknown = set(obj) - {"params", "miners", *OPTIONAL}
    if unknown:
        raise ParameterError(f"unknown scenario keys: {sorted(unknown)}")
    try:
        miners = tuple(SimMiner(str(m["account"]), float(m.get("power", 1.0)),
                                m.get("strategy", "honest")) for m in obj["miners"])
        kwargs = {k: obj[k] for k in OPTIONAL if obj.get(k) is not None}
        if "prefix" in kwargs:
            kwargs["prefix"] = tuple(str(a) for a in kwargs["prefix"])
        return Scenario(params_from_obj(obj["params"]), miners, **kwargs)
    except (KeyError, TypeError) as exc:
        raise ParameterError(f"bad scenario: {exc}") from None


def scenario_to_obj(s: Scenario) -> dict:
    p = s.params
    obj = {
        "params": {"mode": p.mode, "period": p.period, "discrimination": str(p.discrimination),
                   "difficulty": [str(d) for d in p.difficulty], "hash_bits": p.hash_bits},
        "miners": [{"account": m.account, "power": m.power, "strategy": m.strategy}
                   for m in s.miners],
    }
    for k in OPTIONAL:
        v = getattr(s, k)
        obj[k] = list(v) if isinstance(v, tuple) else v
    return obj


def load_scenario(path: str | Path) -> Scenario:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ParameterError(f"{path}: scenario must be a JSON object")
    return scenario_from_obj(obj)


def save_scenario(path: str | Path, s: Scenario) -> None:
    Path(path).write_text(json.dumps(scenario_to_obj(s), indent=2) + "\n")


def fmt(v) -> str:
    """Stable text for CSV cells: repr for floats, str otherwise."""
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
