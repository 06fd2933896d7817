"""Command-line front door.

Exit codes: 0 for success or a valid chain, 1 for a domain failure (invalid
chain, unsolvable or illegal mining job, failed experiment), 2 for usage and
parse errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import codec
from .consensus import block_stake, block_target, validate
from .crypto import KeyPair, profile_for
from .errors import DecodeError, InvalidKeyError, JobError, ParameterError, RangeError
from .ledger import MODES, POM, Chain, ChainParams, Transaction, sign_transaction
from .miner import make_job, scan
from .sim.engine import run_scenario
from .sim.io import load_scenario, write_csv
from .sim.realize import realize_chain
from .sim.recipes import RECIPES, SUMMARY_COLUMNS, RecipeConfig

OK, FAIL, USAGE = 0, 1, 2
MAX_MINING_BITS = 32


class UsageError(Exception):
    pass


@dataclass
class Config:
    profile: str = "test"
    bits: int | None = None
    mode: str = POM
    period: int | None = None
    alpha: Fraction | None = None
    difficulty: tuple[Fraction, ...] | None = None
    retarget_interval: float | None = None
    scenario: Path | None = None
    seed: int = 0
    out: Path | None = None
    trials: int | None = None

    def __post_init__(self) -> None:
        if self.retarget_interval is not None and self.difficulty is not None \
                and len(self.difficulty) > 1:
            raise UsageError("--retarget-interval and a difficulty vector are exclusive")

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> Config:
        return cls(**{k: getattr(ns, k, None) if getattr(ns, k, None) is not None
                      else cls.__dataclass_fields__[k].default
                      for k in cls.__dataclass_fields__})

    @property
    def hash_bits(self) -> int:
        try:
            return profile_for(self.profile, self.bits).bits
        except ParameterError as exc:
            raise UsageError(str(exc)) from None

    def chain_params(self) -> ChainParams:
        if self.period is None or self.difficulty is None:
            raise UsageError("new chains need --period and --difficulty")
        try:
            return ChainParams(self.period, self.alpha or Fraction(0), self.difficulty,
                               self.mode, self.hash_bits)
        except ParameterError as exc:
            raise UsageError(str(exc)) from None


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _vector(text: str) -> tuple[Fraction, ...]:
    return tuple(_fraction(t.strip()) for t in text.split(","))


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", choices=("production", "test"))
    p.add_argument("--bits", type=int, help="hash width of the test profile (default 16)")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--period", type=int, help="window length L in blocks")
    p.add_argument("--alpha", type=_fraction, help="discrimination index a in [0, 1]")
    p.add_argument("--difficulty", type=_vector, help="comma-separated difficulty vector")
    p.add_argument("--retarget-interval", type=float)


def _read_chain(path: str) -> Chain:
    try:
        return codec.load_chain(path)
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None
    except DecodeError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _read_key(path: str) -> KeyPair:
    try:
        return KeyPair.from_secret(bytes.fromhex(Path(path).read_text().strip()))
    except (OSError, ValueError, InvalidKeyError) as exc:
        raise UsageError(f"{path}: unreadable secret key ({exc})") from None


def cmd_keygen(ns) -> int:
    kp = KeyPair.from_seed(ns.seed_text) if ns.seed_text else KeyPair.generate()
    Path(ns.out).write_text(kp.secret.hex() + "\n")
    print(kp.public.hex())
    return OK


def cmd_init(ns) -> int:
    chain = Chain((), Config.from_args(ns).chain_params())
    codec.save_chain(ns.chain, chain)
    print(f"created {ns.chain}")
    return OK


def cmd_validate(ns) -> int:
    chain = _read_chain(ns.chain)
    report = validate(chain)
    if report.ok:
        print(f"valid: {len(chain)} blocks, mode {chain.params.mode}")
        return OK
    for line in report.lines():
        print(line)
    return FAIL


def cmd_inspect(ns) -> int:
    chain = _read_chain(ns.chain)
    p = chain.params
    print(f"mode={p.mode} period={p.period} a={p.discrimination} "
          f"difficulty={','.join(map(str, p.difficulty))} bits={p.hash_bits}")
    print("index,miner,nonce,hash,target,stake")
    for i, b in enumerate(chain.blocks):
        prefix = chain.prefix(i)
        try:
            target = f"{float(block_target(prefix, i, b.miner)):.6g}"
            stake = str(block_stake(prefix, i, b.miner))
        except RangeError:
            target = stake = "uncovered"
        print(f"{i},{b.miner.hex()},{b.nonce},{b.hash(p.profile)},{target},{stake}")
    return OK


def cmd_transfer(ns) -> int:
    key = _read_key(ns.key)
    try:
        to = bytes.fromhex(ns.to)
    except ValueError:
        raise UsageError("--to must be a hex public key") from None
    if ns.amount <= 0:
        raise UsageError("--amount must be positive")
    stx = sign_transaction(Transaction.of({key.public: -ns.amount, to: ns.amount}), [key])
    existing = ()
    if ns.append and Path(ns.out).exists():
        try:
            existing = codec.decode_tx_list(Path(ns.out).read_bytes())
        except DecodeError as exc:
            raise UsageError(f"{ns.out}: {exc}") from None
    Path(ns.out).write_bytes(codec.encode_tx_list(existing + (stx,)))
    return OK


def cmd_mine(ns) -> int:
    path = Path(ns.chain)
    if path.exists():
        chain = _read_chain(ns.chain)
    else:
        chain = Chain((), Config.from_args(ns).chain_params())
    if chain.params.hash_bits > MAX_MINING_BITS and not ns.allow_production:
        raise UsageError(f"refusing to mine a {chain.params.hash_bits}-bit profile "
                         "without --allow-production")
    key = _read_key(ns.key)
    txs = ()
    if ns.txs:
        try:
            txs = codec.decode_tx_list(Path(ns.txs).read_bytes())
        except (OSError, DecodeError) as exc:
            raise UsageError(f"{ns.txs}: {exc}") from None
    try:
        job = make_job(chain, key.public, txs, 0, ns.nonce_limit)
        if job.target <= 0:
            print(f"block {len(chain)}: target is zero for this miner", file=sys.stderr)
            return FAIL
        block, attempts = scan(job)
    except (JobError, RangeError) as exc:
        print(f"block {len(chain)}: {exc}", file=sys.stderr)
        return FAIL
    if block is None:
        print(f"block {len(chain)}: nonce range exhausted after {attempts} attempts",
              file=sys.stderr)
        return FAIL
    codec.save_chain(path, chain.append(block))
    print(f"mined block {len(chain)} nonce={block.nonce} attempts={attempts}")
    return OK


def cmd_simulate(ns) -> int:
    try:
        s = load_scenario(ns.scenario)
    except (OSError, ParameterError) as exc:
        raise UsageError(str(exc)) from None
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    r = run_scenario(s)
    (out / "blocks.csv").write_text(r.to_csv())
    write_csv(out / "summary.csv",
              ("blocks", "completion_time", "windows", "caught_up", "final_deficit", "stalled"),
              [(len(r), r.completion_time(), len(r.windows), r.caught_up, r.final_deficit,
                r.stalled)])
    if ns.realize:
        codec.save_chain(ns.realize, realize_chain(r, hash_bits=s.params.hash_bits))
    print(f"simulated {len(r)} blocks; wrote {out}")
    return OK


def cmd_experiment(ns) -> int:
    cfg = Config.from_args(ns)
    out = cfg.out or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    rc = RecipeConfig(seed=cfg.seed, trials=cfg.trials,
                      difficulty=cfg.difficulty[0] if cfg.difficulty else None,
                      period=cfg.period, alpha=cfg.alpha,
                      retarget_interval=cfg.retarget_interval)
    outcome = RECIPES[ns.name](rc)
    write_csv(out / f"{ns.name}_trials.csv", outcome.trial_columns, outcome.trial_rows)
    write_csv(out / f"{ns.name}_summary.csv", SUMMARY_COLUMNS, outcome.summary)
    if ns.name == "lemma3-grid":
        print(f"violations: {outcome.summary[0][3]}")
    for row in outcome.summary:
        print(("PASS " if row[-1] else "FAIL ") + f"{row[0]} {row[1]}: "
              f"predicted {row[2]} observed {row[3]}")
    return OK if outcome.passed else FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pomchain", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="write a secret key file, print the public key")
    p.add_argument("--seed", dest="seed_text", help="derive the key deterministically")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("init", help="create an empty chain file")
    p.add_argument("chain")
    _add_params(p)
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("validate", help="structural and consensus validation")
    p.add_argument("chain")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("inspect", help="print blocks with hashes, targets and stakes")
    p.add_argument("chain")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("transfer", help="write a signed two-party transaction")
    p.add_argument("--key", required=True)
    p.add_argument("--to", required=True, help="recipient public key (hex)")
    p.add_argument("--amount", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--append", action="store_true", help="append to an existing tx file")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("mine", help="append one block to a chain file")
    p.add_argument("chain")
    p.add_argument("--key", required=True)
    p.add_argument("--txs", help="file with a JSON list of signed transactions")
    p.add_argument("--nonce-limit", type=int, default=1 << 24)
    p.add_argument("--allow-production", action="store_true")
    _add_params(p)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("simulate", help="run a scenario file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--realize", help="also mine the public chain for real into this file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="run a named experiment recipe")
    p.add_argument("name", choices=sorted(RECIPES))
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--out", type=Path)
    _add_params(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except UsageError as exc:
        print(f"pomchain: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
