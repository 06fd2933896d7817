from .engine import (
    ATTACKER,
    HONEST,
    PRIVATE,
    PUBLIC,
    SYBIL,
    Scenario,
    SimMiner,
    SimResult,
    WindowRecord,
    block_time_sample,
    make_rng,
    retarget,
    run_scenario,
)

__all__ = [
    "ATTACKER", "HONEST", "PRIVATE", "PUBLIC", "SYBIL", "Scenario", "SimMiner",
    "SimResult", "WindowRecord", "block_time_sample", "make_rng", "retarget", "run_scenario",
]
