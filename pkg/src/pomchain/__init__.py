"""Proof-of-Mining chains: ledger rules, stake-scaled validity, fork choice and a
Monte Carlo harness for the mining-time and stake laws."""

from .consensus import (
    WindowStats,
    chain_difficulty,
    fork_choice,
    mstak,
    pom_threshold,
    pow_threshold,
    segment_difficulty,
    set_mstak,
    validate,
    window,
    window_stats,
)
from .crypto import KeyPair, HashProfile, PRODUCTION, small_profile, sign, verify
from .ledger import Block, Chain, ChainParams, SignedTransaction, Transaction, sign_transaction
from .miner import MiningJob, make_job, mine, mine_parallel

__version__ = "0.1.0"

__all__ = [
    "Block", "Chain", "ChainParams", "HashProfile", "KeyPair", "MiningJob", "PRODUCTION",
    "SignedTransaction", "Transaction", "WindowStats", "chain_difficulty", "fork_choice",
    "make_job", "mine", "mine_parallel", "mstak", "pom_threshold", "pow_threshold",
    "segment_difficulty", "set_mstak", "sign", "sign_transaction", "small_profile", "validate",
    "verify", "window", "window_stats",
]
