"""Accounts, mass-0 transactions, blocks, balances and hash-linked chains.

Values here are immutable. Canonical bytes are compact JSON with a fixed
field order, lowercase hex for keys, hashes and signatures, and decimal
strings for amounts and nonces. Those bytes are what gets hashed and signed.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from . import crypto
from .crypto import Account, HashProfile, KeyPair, Signature
from .errors import EncodingError, ParameterError, RangeError

NONCE_LIMIT = 1 << 64
POW = "pow"
POM = "pom"
MODES = (POW, POM)


def _dump(obj) -> bytes:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=True).encode("ascii")


def _check_int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParameterError(f"{what} must be an integer, got {value!r}")
    return value


@dataclass(frozen=True)
class Transaction:
    """A map from accounts to signed integer amounts.

    Entries are kept sorted by account bytes. Construction only checks types
    and duplicate accounts; the mass-0 and entry-count invariants are reported
    by :meth:`problems` so that invalid transactions can still be built and
    rejected by validation.
    """

    entries: tuple[tuple[Account, int], ...]

    def __post_init__(self) -> None:
        pairs = []
        for account, amount in self.entries:
            if not isinstance(account, (bytes, bytearray)):
                raise ParameterError("accounts are raw public-key bytes")
            pairs.append((bytes(account), _check_int(amount, "amount")))
        pairs.sort(key=lambda p: p[0])
        for (a, _), (b, _) in zip(pairs, pairs[1:]):
            if a == b:
                raise ParameterError(f"duplicate account {a.hex()} in transaction")
        object.__setattr__(self, "entries", tuple(pairs))

    @classmethod
    def of(cls, amounts: Mapping[Account, int] | Iterable[tuple[Account, int]]) -> Transaction:
        items = amounts.items() if isinstance(amounts, Mapping) else amounts
        return cls(tuple(items))

    def amount(self, account: Account) -> int:
        for acct, amount in self.entries:
            if acct == account:
                return amount
        return 0

    @property
    def accounts(self) -> tuple[Account, ...]:
        return tuple(a for a, _ in self.entries)

    @property
    def senders(self) -> frozenset[Account]:
        return frozenset(a for a, v in self.entries if v < 0)

    def problems(self) -> list[tuple[str, str]]:
        out = []
        if len(self.entries) < 2:
            out.append(("entries", "transaction needs at least two entries"))
        if any(v == 0 for _, v in self.entries):
            out.append(("entries", "zero-amount entry"))
        mass = tx_mass(self)
        if mass != 0:
            out.append(("mass", f"transaction mass is {mass}, expected 0"))
        return out


def tx_mass(tx: Transaction) -> int:
    return sum(v for _, v in tx.entries)


@dataclass(frozen=True)
class SignedTransaction:
    tx: Transaction
    signatures: tuple[tuple[Account, Signature], ...] = ()

    def __post_init__(self) -> None:
        sigs = sorted((bytes(a), bytes(s)) for a, s in self.signatures)
        for (a, _), (b, _) in zip(sigs, sigs[1:]):
            if a == b:
                raise ParameterError(f"duplicate signer {a.hex()}")
        object.__setattr__(self, "signatures", tuple(sigs))

    def problems(self) -> list[tuple[str, str]]:
        out = self.tx.problems()
        if out:
            return out
        signers = {a for a, _ in self.signatures}
        if signers != set(self.tx.senders):
            out.append(("signers", "signature set differs from the negative-amount accounts"))
            return out
        message = canonical_bytes(self.tx)
        for account, sig in self.signatures:
            if not crypto.verify(account, message, sig):
                out.append(("signature", f"bad signature by {account.hex()}"))
        return out


def sign_transaction(tx: Transaction, keys: Iterable[KeyPair]) -> SignedTransaction:
    """Sign ``tx`` with the keys of every account it debits."""
    by_account = {k.public: k for k in keys}
    message = canonical_bytes(tx)
    sigs = []
    for sender in sorted(tx.senders):
        if sender not in by_account:
            raise ParameterError(f"no key supplied for sender {sender.hex()}")
        sigs.append((sender, crypto.sign(by_account[sender].secret, message)))
    return SignedTransaction(tx, tuple(sigs))


@dataclass(frozen=True)
class Block:
    prev_hash: int
    miner: Account
    txs: tuple[SignedTransaction, ...] = ()
    nonce: int = 0

    def __post_init__(self) -> None:
        _check_int(self.prev_hash, "prev_hash")
        _check_int(self.nonce, "nonce")
        if not 0 <= self.prev_hash < (1 << crypto.DIGEST_BITS):
            raise ParameterError("prev_hash out of range")
        if not 0 <= self.nonce < NONCE_LIMIT:
            raise ParameterError("nonce must fit in 64 unsigned bits")
        object.__setattr__(self, "miner", bytes(self.miner))
        object.__setattr__(self, "txs", tuple(self.txs))

    def with_nonce(self, nonce: int) -> Block:
        return Block(self.prev_hash, self.miner, self.txs, nonce)

    def hash(self, profile: HashProfile) -> int:
        return profile.hash(canonical_bytes(self))


@dataclass(frozen=True)
class ChainParams:
    period: int
    discrimination: Fraction = Fraction(0)
    difficulty: tuple[Fraction, ...] = (Fraction(1),)
    mode: str = POM
    hash_bits: int = crypto.DIGEST_BITS

    def __post_init__(self) -> None:
        _check_int(self.period, "period")
        if self.period < 1:
            raise ParameterError("period must be at least 1")
        a = Fraction(self.discrimination)
        if not 0 <= a <= 1:
            raise ParameterError("discrimination index must lie in [0, 1]")
        ds = tuple(Fraction(d) for d in self.difficulty)
        if not ds or any(d <= 0 for d in ds):
            raise ParameterError("difficulty vector must be non-empty and positive")
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}")
        HashProfile(self.hash_bits)
        object.__setattr__(self, "discrimination", a)
        object.__setattr__(self, "difficulty", ds)

    @property
    def profile(self) -> HashProfile:
        return HashProfile(self.hash_bits)

    def covers(self, index: int) -> bool:
        return index // self.period < len(self.difficulty)

    def difficulty_at(self, index: int) -> Fraction:
        """Difficulty of block ``index``: entry ``index // period`` of the vector."""
        if index < 0 or not self.covers(index):
            raise RangeError(f"difficulty vector does not cover block {index}")
        return self.difficulty[index // self.period]


@dataclass(frozen=True)
class Chain:
    blocks: tuple[Block, ...]
    params: ChainParams

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", tuple(self.blocks))

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self) -> Iterator[Block]:
        return iter(self.blocks)

    def append(self, block: Block) -> Chain:
        return Chain(self.blocks + (block,), self.params)

    def prefix(self, length: int) -> Chain:
        return Chain(self.blocks[:length], self.params)

    def tip_hash(self) -> int:
        """Hash the next block must link to (zero for an empty chain)."""
        if not self.blocks:
            return 0
        return self.blocks[-1].hash(self.params.profile)


def block_reward(account: Account, block: Block) -> int:
    return 1 if account == block.miner else 0


def balance_in_block(account: Account, block: Block) -> int:
    return sum(stx.tx.amount(account) for stx in block.txs) + block_reward(account, block)


def balance_in_chain(account: Account, blocks: Iterable[Block]) -> int:
    return sum(balance_in_block(account, b) for b in blocks)


# -- canonical encoding -------------------------------------------------------

def tx_obj(tx: Transaction) -> dict:
    problems = tx.problems()
    if problems:
        raise EncodingError(problems[0][1])
    return {"entries": [[a.hex(), str(v)] for a, v in tx.entries]}


def signatures_obj(stx: SignedTransaction) -> list:
    return [[a.hex(), s.hex()] for a, s in stx.signatures]


def signed_tx_obj(stx: SignedTransaction) -> dict:
    return {"tx": tx_obj(stx.tx), "signatures": signatures_obj(stx)}


def block_obj(block: Block) -> dict:
    return {
        "prev_hash": f"{block.prev_hash:064x}",
        "miner": block.miner.hex(),
        "txs": [tx_obj(s.tx) for s in block.txs],
        "signatures": [signatures_obj(s) for s in block.txs],
        "nonce": str(block.nonce),
    }


def block_header_parts(block: Block) -> tuple[bytes, bytes]:
    """Bytes surrounding the decimal nonce in the block's canonical encoding."""
    obj = block_obj(block)
    obj["nonce"] = ""
    raw = _dump(obj)
    # nonce is the final field: raw ends with '"nonce":""}'
    return raw[:-2], raw[-2:]


def canonical_bytes(x: Transaction | SignedTransaction | Block) -> bytes:
    if isinstance(x, Transaction):
        return _dump(tx_obj(x))
    if isinstance(x, SignedTransaction):
        return _dump(signed_tx_obj(x))
    if isinstance(x, Block):
        head, tail = block_header_parts(x)
        return head + str(x.nonce).encode("ascii") + tail
    raise EncodingError(f"cannot encode {type(x).__name__}")


# -- structural validation ----------------------------------------------------

@dataclass(frozen=True)
class Violation:
    index: int
    rule: str
    detail: str

    def line(self) -> str:
        return f"{self.index}, {self.rule}, {self.detail}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def first(self) -> Violation | None:
        return min(self.violations, key=lambda v: v.index, default=None)

    def add(self, index: int, rule: str, detail: str) -> None:
        self.violations.append(Violation(index, rule, detail))

    def extend(self, other: ValidationReport) -> ValidationReport:
        self.violations.extend(other.violations)
        return self

    def lines(self) -> list[str]:
        return [v.line() for v in sorted(self.violations, key=lambda v: v.index)]

    def __bool__(self) -> bool:
        return self.ok


def apply_block(balances: dict[Account, int], block: Block, index: int,
                report: ValidationReport) -> None:
    """Credit the reward, then apply transactions in order, checking balances.

    The reward is credited first, so a block's own transactions may spend it.
    """
    balances[block.miner] += 1
    for k, stx in enumerate(block.txs):
        problems = stx.problems()
        for rule, detail in problems:
            report.add(index, rule, f"tx {k}: {detail}")
        if problems:
            continue
        for account, amount in stx.tx.entries:
            balances[account] += amount
        for account, _ in stx.tx.entries:
            if balances[account] < 0:
                report.add(index, "nonnegative-balance",
                           f"tx {k}: {account.hex()} balance {balances[account]}")


def validate_structure(chain: Chain | Sequence[Block],
                       profile: HashProfile | None = None) -> ValidationReport:
    """Check hash links, transaction invariants, signatures and prefix balances."""
    if isinstance(chain, Chain):
        blocks, profile = chain.blocks, chain.params.profile
    else:
        blocks = tuple(chain)
    if profile is None:
        raise ParameterError("a hash profile is required for a bare block list")
    report = ValidationReport()
    balances: dict[Account, int] = defaultdict(int)
    prev_hash: int | None = 0
    for i, block in enumerate(blocks):
        if i == 0:
            if block.prev_hash != 0:
                report.add(0, "genesis-link", "genesis prev_hash must be zero")
        elif prev_hash is not None and block.prev_hash != prev_hash:
            report.add(i, "hash-link",
                       f"prev_hash {block.prev_hash:x} != hash of block {i - 1} ({prev_hash:x})")
        apply_block(balances, block, i, report)
        try:
            prev_hash = block.hash(profile)
        except EncodingError:
            prev_hash = None
    return report
