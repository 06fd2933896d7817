"""Decoding and file formats for ledger values.

Decoders are strict: after parsing, the value is re-encoded and must
reproduce the input bytes exactly, so every accepted input is canonical.

A chain file is one line of compact JSON::

    {"params": {...}, "blocks": [...], "checksum": "<sha256 hex>"}

The checksum is SHA-256 over the canonical ``{"params", "blocks"}`` body and
catches edits to the parameters or the tip block that hash links alone do
not cover.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from .crypto import digest_hex
from .errors import DecodeError, PomError
from .ledger import (
    Block,
    Chain,
    ChainParams,
    SignedTransaction,
    Transaction,
    _dump,
    block_obj,
    signed_tx_obj,
    tx_obj,
)

_HEX = re.compile(r"(?:[0-9a-f]{2})*")
_INT = re.compile(r"-?(?:0|[1-9][0-9]*)")
_RATIONAL = re.compile(r"(?:0|[1-9][0-9]*)(?:/[1-9][0-9]*)?")


def _hex(s: str) -> bytes:
    if not isinstance(s, str) or not _HEX.fullmatch(s):
        raise DecodeError(f"expected lowercase hex, got {s!r}")
    return bytes.fromhex(s)


def _int(s: str) -> int:
    if not isinstance(s, str) or not _INT.fullmatch(s):
        raise DecodeError(f"expected decimal integer string, got {s!r}")
    return int(s)


def _rational(s: str) -> Fraction:
    if not isinstance(s, str) or not _RATIONAL.fullmatch(s):
        raise DecodeError(f"expected rational string, got {s!r}")
    return Fraction(s)


def _fields(obj, names: tuple[str, ...]) -> list:
    if not isinstance(obj, dict) or tuple(obj) != names:
        raise DecodeError(f"expected object with fields {names}")
    return [obj[n] for n in names]


def _list(obj) -> list:
    if not isinstance(obj, list):
        raise DecodeError("expected a list")
    return obj


def _parse(data: bytes | str):
    if isinstance(data, str):
        data = data.encode()
    try:
        return json.loads(data.decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DecodeError(f"not valid JSON: {exc}") from None


def _guard(build, obj, encode, raw: bytes):
    try:
        value = build(obj)
        again = _dump(encode(value))
    except DecodeError:
        raise
    except (PomError, KeyError, TypeError, ValueError, AttributeError) as exc:
        raise DecodeError(str(exc)) from None
    if again != raw:
        raise DecodeError("input is not in canonical form")
    return value


def _tx_from(obj) -> Transaction:
    (entries,) = _fields(obj, ("entries",))
    pairs = []
    for item in _list(entries):
        if not isinstance(item, list) or len(item) != 2:
            raise DecodeError("transaction entry must be [account, amount]")
        pairs.append((_hex(item[0]), _int(item[1])))
    return Transaction(tuple(pairs))


def _sigs_from(obj) -> tuple:
    out = []
    for item in _list(obj):
        if not isinstance(item, list) or len(item) != 2:
            raise DecodeError("signature entry must be [account, signature]")
        out.append((_hex(item[0]), _hex(item[1])))
    return tuple(out)


def _signed_from(obj) -> SignedTransaction:
    tx, sigs = _fields(obj, ("tx", "signatures"))
    return SignedTransaction(_tx_from(tx), _sigs_from(sigs))


def _block_from(obj) -> Block:
    prev, miner, txs, sigs, nonce = _fields(
        obj, ("prev_hash", "miner", "txs", "signatures", "nonce"))
    txs, sigs = _list(txs), _list(sigs)
    if len(txs) != len(sigs):
        raise DecodeError("txs and signatures lists differ in length")
    prev_bytes = _hex(prev)
    if len(prev_bytes) != 32:
        raise DecodeError("prev_hash must be 32 bytes")
    signed = tuple(SignedTransaction(_tx_from(t), _sigs_from(s)) for t, s in zip(txs, sigs))
    return Block(int.from_bytes(prev_bytes, "big"), _hex(miner), signed, _int(nonce))


def params_obj(p: ChainParams) -> dict:
    return {
        "mode": p.mode,
        "period": p.period,
        "discrimination": str(p.discrimination),
        "difficulty": [str(d) for d in p.difficulty],
        "hash_bits": p.hash_bits,
    }


def _params_from(obj) -> ChainParams:
    mode, period, a, ds, bits = _fields(
        obj, ("mode", "period", "discrimination", "difficulty", "hash_bits"))
    for v in (period, bits):
        if isinstance(v, bool) or not isinstance(v, int):
            raise DecodeError("period and hash_bits must be JSON integers")
    return ChainParams(period=period, discrimination=_rational(a),
                       difficulty=tuple(_rational(d) for d in _list(ds)),
                       mode=mode, hash_bits=bits)


def _chain_body(chain: Chain) -> dict:
    return {"params": params_obj(chain.params), "blocks": [block_obj(b) for b in chain.blocks]}


def _chain_obj(chain: Chain) -> dict:
    body = _chain_body(chain)
    body["checksum"] = digest_hex(_dump(body))
    return body


def encode_chain(chain: Chain) -> bytes:
    return _dump(_chain_obj(chain)) + b"\n"


def decode_chain(data: bytes | str) -> Chain:
    raw = data.encode() if isinstance(data, str) else bytes(data)
    if not raw.endswith(b"\n"):
        raise DecodeError("chain file must end with a newline")
    obj = _parse(raw)

    def build(o) -> Chain:
        params, blocks, checksum = _fields(o, ("params", "blocks", "checksum"))
        chain = Chain(tuple(_block_from(b) for b in _list(blocks)), _params_from(params))
        if checksum != digest_hex(_dump(_chain_body(chain))):
            raise DecodeError("chain checksum mismatch")
        return chain

    return _guard(build, obj, _chain_obj, raw[:-1])


def decode_transaction(data: bytes | str) -> Transaction:
    raw = data.encode() if isinstance(data, str) else bytes(data)
    return _guard(_tx_from, _parse(raw), tx_obj, raw)


def decode_signed_transaction(data: bytes | str) -> SignedTransaction:
    raw = data.encode() if isinstance(data, str) else bytes(data)
    return _guard(_signed_from, _parse(raw), signed_tx_obj, raw)


def decode_block(data: bytes | str) -> Block:
    raw = data.encode() if isinstance(data, str) else bytes(data)
    return _guard(_block_from, _parse(raw), block_obj, raw)


def encode_tx_list(txs: Iterable[SignedTransaction]) -> bytes:
    return _dump([signed_tx_obj(s) for s in txs]) + b"\n"


def decode_tx_list(data: bytes | str) -> tuple[SignedTransaction, ...]:
    raw = data.encode() if isinstance(data, str) else bytes(data)
    obj = _parse(raw)
    return _guard(lambda o: tuple(_signed_from(s) for s in _list(o)), obj,
                  lambda v: [signed_tx_obj(s) for s in v], raw.rstrip(b"\n"))


def pretty(chain: Chain) -> str:
    """Indented rendering for humans; not a storage format."""
    return json.dumps(_chain_obj(chain), indent=2)


def load_chain(path: str | Path) -> Chain:
    return decode_chain(Path(path).read_bytes())


def save_chain(path: str | Path, chain: Chain) -> None:
    Path(path).write_bytes(encode_chain(chain))
