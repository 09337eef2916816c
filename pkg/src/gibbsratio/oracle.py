"""Sampling oracles over count instances.

An oracle draws energy values with probability c_h e^{-beta h} / Z(beta) and
counts every draw it serves.  Sampling uses inverse-CDF lookup on a cumulative
weight table: the table is rebuilt per request (betas vary during schedule
generation) but shared across all draws of a fixed-beta batch, which is the
dominant path during estimation.  Supports here are desk-scale, so binary
search beats alias tables; if that ever changes, _exact_many and _exact_at are
the two spots to swap.  An optional corruption wrapper mixes in a fixed
alternative distribution with probability tv_budget, which bounds the
total-variation distance from the exact oracle by tv_budget.

Handles are cheap and single-threaded by design: give each trial worker its
own handle over the shared read-only instance, and aggregate call counts after
the workers finish.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import CountInstance

__all__ = ["Corruption", "SamplingOracle", "CORRUPTION_MODES"]

CORRUPTION_MODES = ("uniform", "adversarial_max_h", "adversarial_min_h")


@dataclass(frozen=True)
class Corruption:
    """Mixture corruption: emit from the alternative with probability tv_budget.

    The alternative is either uniform over the support or a point mass on the
    extreme energy.  Mixing (1-t)*exact + t*alternative keeps the TV distance
    from the exact oracle at most t for every beta.
    """

    tv_budget: float
    mode: str = "uniform"

    def __post_init__(self):
        if not 0.0 <= self.tv_budget < 1.0:
            raise ValueError("tv_budget must lie in [0, 1)")
        if self.mode not in CORRUPTION_MODES:
            raise ValueError(f"unknown corruption mode {self.mode!r}")


class SamplingOracle:
    """Draws energies from the Gibbs weights of a count instance."""

    __slots__ = ("instance", "corruption", "_calls")

    def __init__(self, instance: CountInstance, corruption: Corruption | None = None):
        if corruption is not None and corruption.tv_budget == 0.0:
            corruption = None  # behaviorally identical to the exact oracle
        self.instance = instance
        self.corruption = corruption
        self._calls = 0

    def __repr__(self):
        tag = "exact" if self.corruption is None else (
            f"tv={self.corruption.tv_budget:g},{self.corruption.mode}"
        )
        return f"SamplingOracle({tag}, calls={self._calls})"

    @property
    def call_count(self) -> int:
        """Number of draws served since construction or the last reset."""
        return self._calls

    def reset_count(self) -> None:
        self._calls = 0

    def with_corruption(self, tv_budget: float, mode: str = "uniform") -> "SamplingOracle":
        """A fresh handle over the same instance with mixture corruption."""
        return SamplingOracle(self.instance, Corruption(tv_budget, mode))

    # -- exact draws ------------------------------------------------------

    def _cumulative(self, beta: float) -> np.ndarray:
        logits = self.instance.log_counts - beta * self.instance.energies
        return np.cumsum(np.exp(logits - logits.max()))

    def _exact_many(self, beta: float, size: int, rng) -> np.ndarray:
        cum = self._cumulative(beta)
        u = rng.random(size)
        idx = np.searchsorted(cum, u * cum[-1], side="right")
        return self.instance.energies[np.minimum(idx, cum.size - 1)]

    def _exact_at(self, betas: np.ndarray, rng) -> np.ndarray:
        logits = self.instance.log_counts - np.multiply.outer(betas, self.instance.energies)
        logits -= logits.max(axis=1, keepdims=True)
        cum = np.cumsum(np.exp(logits), axis=1)
        u = rng.random(betas.size)
        idx = (cum < (u * cum[:, -1])[:, None]).sum(axis=1)
        return self.instance.energies[np.minimum(idx, cum.shape[1] - 1)]

    # -- public sampling surface ------------------------------------------

    def sample(self, beta: float, rng) -> float:
        """One draw at inverse temperature beta."""
        return float(self.sample_many(beta, 1, rng)[0])

    def sample_many(self, beta: float, size: int, rng) -> np.ndarray:
        """A batch of independent draws at a fixed beta (one shared table)."""
        h = self._exact_many(float(beta), size, rng)
        h = self._corrupt(h, rng)
        self._calls += size
        return h

    def sample_at(self, betas, rng) -> np.ndarray:
        """One draw per entry of betas, each at its own inverse temperature."""
        betas = np.asarray(betas, dtype=float)
        h = self._exact_at(betas, rng)
        h = self._corrupt(h, rng)
        self._calls += betas.size
        return h

    def _corrupt(self, h: np.ndarray, rng) -> np.ndarray:
        if self.corruption is None:
            return h
        mask = rng.random(h.size) < self.corruption.tv_budget
        hit = int(mask.sum())
        if hit:
            energies = self.instance.energies
            if self.corruption.mode == "uniform":
                h[mask] = energies[rng.integers(0, energies.size, hit)]
            elif self.corruption.mode == "adversarial_max_h":
                h[mask] = energies[-1]
            else:
                h[mask] = energies[0]
        return h
