"""Exact analytics for count-weighted Gibbs energy spectra.

An instance is a finite list of (energy, log-count) pairs together with an
inverse-temperature window [beta_min, beta_max].  Everything downstream of the
stochastic pipeline (sampling oracles, schedule generation, the paired product
estimator) is verified against the closed forms computed here, so all sums are
performed in the log domain with max-shifted log-sum-exp: enumerated counts
(2^|V| states) and product-form expansions overflow linear-domain doubles.
"""

from __future__ import annotations

import json
import math
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

__all__ = [
    "CountInstance",
    "Schedule",
    "PairedMoments",
    "log_partition",
    "log_ratio_true",
    "mean_energy",
    "energy_variance",
    "schedule_delta",
    "paired_moments",
    "singleton_instance",
    "two_level_instance",
    "save_instance",
    "load_instance",
]


class CountInstance:
    """A Gibbs problem given by energy counts and a finite temperature window.

    The weight of energy ``h`` at inverse temperature ``beta`` is
    ``c_h * exp(-beta * h)``; counts are stored as natural logs.  Duplicate
    energies merge additively (in log space) and the support is kept sorted,
    giving a canonical form.  Instances are immutable after construction and
    safe to share across concurrent workers.
    """

    __slots__ = ("energies", "log_counts", "beta_min", "beta_max", "n")

    def __init__(
        self,
        support: Iterable[tuple[float, float]],
        beta_min: float,
        beta_max: float,
        n: float | None = None,
    ):
        pairs = [(float(h), float(lc)) for h, lc in support]
        if not pairs:
            raise ValueError("support must be non-empty")
        h = np.array([p[0] for p in pairs], dtype=float)
        lc = np.array([p[1] for p in pairs], dtype=float)
        if not (np.isfinite(h).all() and np.isfinite(lc).all()):
            raise ValueError("energies and log-counts must be finite")
        if (h < 0).any():
            raise ValueError("energies must be non-negative")

        order = np.argsort(h, kind="stable")
        h, lc = h[order], lc[order]
        uniq, start = np.unique(h, return_index=True)
        if uniq.size < h.size:
            lc = np.logaddexp.reduceat(lc, start)
            h = uniq

        beta_min = float(beta_min)
        beta_max = float(beta_max)
        if not (math.isfinite(beta_min) and math.isfinite(beta_max)):
            raise ValueError("temperature bounds must be finite")
        if not beta_max > beta_min:
            raise ValueError("beta_max must exceed beta_min")

        if n is None:
            n = max(1.0, float(h[-1]))
        n = float(n)
        if n < h[-1] - 1e-12:
            raise ValueError(f"declared n={n} below maximal energy {h[-1]}")

        h.flags.writeable = False
        lc.flags.writeable = False
        object.__setattr__(self, "energies", h)
        object.__setattr__(self, "log_counts", lc)
        object.__setattr__(self, "beta_min", beta_min)
        object.__setattr__(self, "beta_max", beta_max)
        object.__setattr__(self, "n", n)

    def __setattr__(self, name, value):
        raise AttributeError("CountInstance is immutable")

    def __reduce__(self):
        return (CountInstance, (self.support(), self.beta_min, self.beta_max, self.n))

    def __repr__(self):
        return (
            f"CountInstance({self.support_size} levels, "
            f"h in [{self.energies[0]:g}, {self.energies[-1]:g}], "
            f"betas [{self.beta_min:g}, {self.beta_max:g}], n={self.n:g})"
        )

    def __eq__(self, other):
        if not isinstance(other, CountInstance):
            return NotImplemented
        return (
            np.array_equal(self.energies, other.energies)
            and np.array_equal(self.log_counts, other.log_counts)
            and self.beta_min == other.beta_min
            and self.beta_max == other.beta_max
            and self.n == other.n
        )

    @property
    def support_size(self) -> int:
        return self.energies.size

    @property
    def has_zero_level(self) -> bool:
        return self.energies[0] == 0.0

    def support(self) -> list[tuple[float, float]]:
        """(energy, log_count) pairs in canonical (sorted) order."""
        return list(zip(self.energies.tolist(), self.log_counts.tolist()))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "beta_min": self.beta_min,
            "beta_max": self.beta_max,
            "support": [[h, lc] for h, lc in self.support()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CountInstance":
        return cls(
            [(h, lc) for h, lc in data["support"]],
            beta_min=data["beta_min"],
            beta_max=data["beta_max"],
            n=data.get("n"),
        )

    @classmethod
    def from_counts(
        cls,
        counts: Iterable[tuple[float, float]],
        beta_min: float,
        beta_max: float,
        n: float | None = None,
    ) -> "CountInstance":
        """Build from linear-domain counts (must be strictly positive)."""
        support = []
        for h, c in counts:
            if c <= 0:
                raise ValueError(f"count for energy {h} must be positive, got {c}")
            support.append((h, math.log(c)))
        return cls(support, beta_min, beta_max, n=n)


class Schedule:
    """A strictly increasing sequence of inverse temperatures.

    The first and last entries are the endpoints of the estimation window;
    ``ell`` counts the intervals between consecutive levels.
    """

    __slots__ = ("betas",)

    def __init__(self, betas: Sequence[float]):
        b = np.asarray(betas, dtype=float)
        if b.ndim != 1 or b.size < 2:
            raise ValueError("schedule needs at least two levels")
        if not np.isfinite(b).all():
            raise ValueError("schedule levels must be finite")
        if not (np.diff(b) > 0).all():
            raise ValueError("schedule must be strictly increasing")
        b = b.copy()
        b.flags.writeable = False
        object.__setattr__(self, "betas", b)

    def __setattr__(self, name, value):
        raise AttributeError("Schedule is immutable")

    def __reduce__(self):
        return (Schedule, (self.to_list(),))

    def __len__(self) -> int:
        return self.betas.size

    def __repr__(self):
        return f"Schedule(ell={self.ell}, [{self.betas[0]:g} .. {self.betas[-1]:g}])"

    @property
    def ell(self) -> int:
        return self.betas.size - 1

    def to_list(self) -> list[float]:
        return self.betas.tolist()


class PairedMoments(NamedTuple):
    log_ew: float
    log_ev: float
    log_vrel: float


def _logits(inst: CountInstance, beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    return inst.log_counts - np.multiply.outer(beta, inst.energies)


def log_partition(inst: CountInstance, beta):
    """ln Z(beta) = log-sum-exp over the support of log_c - beta*h.

    Accepts a scalar or an array of beta values.
    """
    scalar = np.isscalar(beta) or np.ndim(beta) == 0
    z = logsumexp(_logits(inst, beta), axis=-1)
    return float(z) if scalar else z


def log_ratio_true(inst: CountInstance) -> float:
    """The target quantity ln(Z(beta_min) / Z(beta_max))."""
    return log_partition(inst, inst.beta_min) - log_partition(inst, inst.beta_max)


def _weights(inst: CountInstance, beta) -> np.ndarray:
    logits = _logits(inst, beta)
    logits -= logits.max(axis=-1, keepdims=True)
    w = np.exp(logits)
    return w / w.sum(axis=-1, keepdims=True)


def mean_energy(inst: CountInstance, beta):
    """Expected energy under the Gibbs weights at ``beta`` (equals -z'(beta))."""
    scalar = np.isscalar(beta) or np.ndim(beta) == 0
    m = _weights(inst, beta) @ inst.energies
    return float(m) if scalar else m


def energy_variance(inst: CountInstance, beta):
    """Energy variance under the Gibbs weights at ``beta`` (equals z''(beta))."""
    scalar = np.isscalar(beta) or np.ndim(beta) == 0
    w = _weights(inst, beta)
    m = w @ inst.energies
    v = w @ np.square(inst.energies) - np.square(m)
    v = np.maximum(v, 0.0)  # guard tiny negative rounding on near-degenerate weights
    return float(v) if scalar else v


def schedule_delta(inst: CountInstance, sched: Schedule) -> tuple[float, np.ndarray]:
    """Log relative variance of the paired product estimator on a schedule.

    Returns (delta, per_interval) where per_interval[i] is
    z(b_i) - 2 z((b_i + b_{i+1})/2) + z(b_{i+1}).  Each term is non-negative
    because ln Z is convex; their sum is ln Vrel of a single estimator run.
    """
    b = sched.betas
    scale = max(1.0, abs(inst.beta_min), abs(inst.beta_max))
    if abs(b[0] - inst.beta_min) > 1e-9 * scale or abs(b[-1] - inst.beta_max) > 1e-9 * scale:
        raise ValueError("schedule endpoints do not match instance bounds")
    z_ends = log_partition(inst, b)
    z_mids = log_partition(inst, 0.5 * (b[:-1] + b[1:]))
    per_interval = z_ends[:-1] - 2.0 * z_mids + z_ends[1:]
    return float(per_interval.sum()), per_interval


def paired_moments(inst: CountInstance, beta_lo: float, beta_hi: float) -> PairedMoments:
    """Closed-form single-interval moments of the paired product estimator.

    With mid = (beta_lo + beta_hi)/2:
      E[W] = Z(mid)/Z(beta_lo),  E[V] = Z(mid)/Z(beta_hi),
      Vrel(W) = Vrel(V) = Z(beta_lo) Z(beta_hi) / Z(mid)^2,
    so log_ev - log_ew telescopes to z(beta_lo) - z(beta_hi).
    """
    if not beta_lo < beta_hi:
        raise ValueError("beta_lo must be below beta_hi")
    z_lo, z_mid, z_hi = log_partition(
        inst, np.array([beta_lo, 0.5 * (beta_lo + beta_hi), beta_hi])
    )
    return PairedMoments(
        log_ew=float(z_mid - z_lo),
        log_ev=float(z_mid - z_hi),
        log_vrel=float(z_lo + z_hi - 2.0 * z_mid),
    )


def singleton_instance(h: float = 1.0, beta_min: float = 0.0, beta_max: float = 5.0, count: float = 1.0) -> CountInstance:
    """Single-level fixture: ln Z is linear, every estimator run is exact."""
    return CountInstance([(h, math.log(count))], beta_min, beta_max)


def two_level_instance(target_q: float, log_count_high: float | None = None) -> CountInstance:
    """Two-level {0, 1} instance whose log ratio equals ``target_q`` exactly.

    The count at energy 1 is inflated (default log-count target_q + 1) and
    beta_max is solved by root finding so that z(0) - z(beta_max) == target_q.
    """
    if target_q <= 0:
        raise ValueError("target_q must be positive")
    lc = float(log_count_high) if log_count_high is not None else target_q + 1.0
    z0 = np.logaddexp(0.0, lc)
    if not z0 > target_q:
        raise ValueError("log_count_high too small to reach target_q")

    def gap(beta):
        return (z0 - np.logaddexp(0.0, lc - beta)) - target_q

    hi = lc + 50.0  # z(hi) ~ ln(1+e^{-50}) ~ 0, so gap(hi) ~ z0 - target_q > 0
    beta_max = brentq(gap, 1e-12, hi, xtol=1e-13, rtol=8.9e-16)
    return CountInstance([(0.0, 0.0), (1.0, lc)], 0.0, float(beta_max))


def save_instance(inst: CountInstance, path) -> None:
    """Write an instance as JSON; floats round-trip exactly via repr."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(inst.to_dict(), fh, indent=2)
        fh.write("\n")


def load_instance(path) -> CountInstance:
    with open(path, encoding="utf-8") as fh:
        return CountInstance.from_dict(json.load(fh))
