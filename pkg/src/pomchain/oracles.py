"""Reference answers computed without the simulator.

These stay independent of the event-driven engine on purpose: the race
oracle walks a discrete +1/-1 chain with the standard library RNG and never
samples block times.
"""

from __future__ import annotations

import random


def nakamoto_catchup(q: float, z: int) -> float:
    """Probability a fork ``z`` blocks behind ever draws level: ``(q/p)**z``."""
    p = 1.0 - q
    if q >= p:
        return 1.0
    return (q / p) ** z


def random_walk_catchup(q: float, z: int, trials: int, seed: int = 0,
                        give_up: int = 60, max_steps: int = 100_000) -> float:
    """Monte Carlo estimate of the same probability from a simple random walk.

    Each step the attacker closes the gap with probability ``q``; the walk is
    abandoned once the gap reaches ``z + give_up``.
    """
    rng = random.Random(seed)
    hits = 0
    for _ in range(trials):
        gap = z
        for _ in range(max_steps):
            if gap <= 0:
                hits += 1
                break
            if gap >= z + give_up:
                break
            gap += -1 if rng.random() < q else 1
    return hits / trials


def exponential_mean_tolerance(n: int, sigmas: float = 3.0) -> float:
    """Relative half-width of a ``sigmas``-sigma band for the mean of n exponentials."""
    return sigmas / n ** 0.5

