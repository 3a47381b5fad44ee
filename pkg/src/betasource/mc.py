"""Seeded Monte Carlo plumbing.

Samples are drawn in fixed-size blocks; block ``k`` always uses child ``k`` of
``SeedSequence(seed)``, so estimates do not depend on the worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

BLOCK_SIZE = 4096


@dataclass(frozen=True)
class MCEstimate:
    mean: complex
    stderr: float
    samples: int
    seed: int

    def within(self, value: complex, nsigma: float = 3.0, other_stderr: float = 0.0) -> bool:
        return abs(self.mean - value) <= nsigma * (self.stderr + other_stderr)


def block_rngs(seed: int, samples: int, block: int = BLOCK_SIZE) -> list[tuple[np.random.Generator, int]]:
    children = np.random.SeedSequence(int(seed)).spawn((samples + block - 1) // block)
    out = []
    for k, child in enumerate(children):
        count = min(block, samples - k * block)
        out.append((np.random.default_rng(child), count))
    return out


def run_blocks(
    draw: Callable[[np.random.Generator, int], np.ndarray],
    samples: int,
    seed: int,
    workers: int = 1,
    block: int = BLOCK_SIZE,
) -> np.ndarray:
    """Concatenate ``draw(rng, count)`` over all blocks, in block order."""
    if samples < 1:
        raise ValueError("samples must be positive")
    jobs = block_rngs(seed, samples, block)
    if workers <= 1:
        parts = [draw(rng, count) for rng, count in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: draw(*job), jobs))
    return np.concatenate(parts, axis=0)


def estimate(values: np.ndarray, seed: int) -> MCEstimate:
    values = np.asarray(values)
    n = values.shape[0]
    mean = complex(np.mean(values))
    if n > 1:
        var = float(np.var(values.real, ddof=1) + np.var(values.imag, ddof=1))
        stderr = float(np.sqrt(var / n))
    else:
        stderr = 0.0
    return MCEstimate(mean=mean, stderr=stderr, samples=n, seed=int(seed))
