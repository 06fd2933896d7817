"""Turn a simulated public chain into a real, fully signed-off chain."""

from __future__ import annotations

from ..crypto import KeyPair
from ..errors import JobError
from ..ledger import Chain
from ..miner import make_job, mine
from .engine import PUBLIC, SimResult


def account_key(name: str) -> KeyPair:
    """Deterministic key for a simulated account name."""
    return KeyPair.from_seed(f"pomchain-sim:{name}")


def realize_chain(result: SimResult, hash_bits: int = 16, nonce_limit: int = 1 << 24) -> Chain:
    """Mine the simulated public branch block by block with real nonce search.

    Block ``i`` is mined by the account the simulator chose for it, against the
    consensus target that the finished prefix implies.
    """
    chain = Chain((), result.emitted_params(hash_bits))
    for i, name in enumerate(result.miners_of(PUBLIC)):
        job = make_job(chain, account_key(name).public, nonce_limit=nonce_limit)
        block = mine(job)
        if block is None:
            raise JobError(f"block {i} by {name}: no nonce below {nonce_limit} meets the target")
        chain = chain.append(block)
    return chain
