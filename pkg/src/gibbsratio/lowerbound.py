"""Adversarial product-form instances with high sensitivity-to-curvature ratio.

The partition function is Z(beta) = e^{-beta} prod_k (a_k + e^{-beta/m}); the
product expands into positive counts on the energy grid {1 + j/m}, so these
are ordinary count instances whose exact analytics everything else can check.
The interesting quantities are the sensitivity rho = |d/dnu of the log ratio
under a +/- nu energy tilt at nu = 0| and the curvature cap kappa = sup z'';
with the geometric choice a_k = 2^{1-k} the ratio rho^2/kappa grows
quadratically in the number of factors while the log ratio stays near
(ln 2 / 2) N^2, which is what makes the family adversarial for any estimator
reading only oracle draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .instance import CountInstance, energy_variance, log_partition, log_ratio_true

__all__ = [
    "LowerBoundInstance",
    "CurvatureReport",
    "LowerBoundReport",
    "MIN_C2",
    "build",
    "build_from_grid",
    "perturb",
    "sensitivity",
    "curvature_sup",
    "verify_lemma10",
]

MIN_C2 = math.sqrt(2.0 / math.log(2.0))  # smallest admissible grid coefficient


@dataclass(frozen=True)
class LowerBoundInstance:
    """Product-form instance together with its expanded count form."""

    n_factors: int          # number of product terms (N)
    m_grid: int             # energy grid resolution: support lives on 1 + j/m
    a_coeffs: np.ndarray    # descending positive factor offsets a_1 >= ... >= a_N
    eta: float              # e^{-beta_max/m}; the u-value at the cold end
    beta_max: float
    expanded: CountInstance

    def log_partition_product_form(self, beta) -> np.ndarray | float:
        """-beta + sum_k ln(a_k + e^{-beta/m}), bypassing the expansion."""
        beta_arr = np.asarray(beta, dtype=float)
        u = np.exp(-beta_arr / self.m_grid)
        val = -beta_arr + np.log(self.a_coeffs + u[..., None]).sum(axis=-1)
        return float(val) if np.ndim(beta) == 0 else val


def _expand_log_coefficients(a_coeffs: np.ndarray) -> np.ndarray:
    """Log-domain coefficients of prod_k (a_k + u) as a polynomial in u.

    Iterated products with pairwise logaddexp; all terms are positive so the
    expansion is cancellation-free and stable for thousands of factors.
    """
    log_coef = np.array([0.0])
    for a_k in a_coeffs:
        shifted_const = log_coef + math.log(a_k)
        log_coef = np.concatenate(
            [
                [shifted_const[0]],
                np.logaddexp(shifted_const[1:], log_coef[:-1]),
                [log_coef[-1]],
            ]
        )
    return log_coef


def build_from_grid(n_factors: int, m_grid: int) -> LowerBoundInstance:
    """Geometric family a_k = 2^{1-k}, eta = 2^{1-N} on the grid 1 + j/m."""
    if n_factors < 1 or m_grid < 1:
        raise ValueError("n_factors and m_grid must be positive integers")
    a = 2.0 ** (1.0 - np.arange(1, n_factors + 1, dtype=float))
    eta = 2.0 ** (1.0 - n_factors)
    beta_max = m_grid * (n_factors - 1) * math.log(2.0)
    if beta_max <= 0:
        raise ValueError("n_factors must be at least 2 for a positive window")
    log_coef = _expand_log_coefficients(a)
    energies = 1.0 + np.arange(n_factors + 1) / m_grid
    expanded = CountInstance(
        list(zip(energies.tolist(), log_coef.tolist())),
        beta_min=0.0,
        beta_max=beta_max,
    )
    a.flags.writeable = False
    return LowerBoundInstance(
        n_factors=n_factors,
        m_grid=m_grid,
        a_coeffs=a,
        eta=eta,
        beta_max=beta_max,
        expanded=expanded,
    )


def build(q_bar: float, n: int, c2: float = 1.8) -> LowerBoundInstance:
    """Size the family for a target log ratio near q_bar on an [1, n] range.

    N = ceil(sqrt(2 q_bar / ln 2)) factors and grid m = ceil(c2 sqrt(q_bar)/n);
    c2 must exceed sqrt(2/ln 2) so the grid has room for all N energies.
    """
    if q_bar <= 0:
        raise ValueError("q_bar must be positive")
    if c2 <= MIN_C2:
        raise ValueError(f"c2 must exceed {MIN_C2:.6f}")
    if n < 2:
        raise ValueError("n must be at least 2")
    n_factors = math.ceil(math.sqrt(2.0 * q_bar / math.log(2.0)))
    m_grid = math.ceil(c2 * math.sqrt(q_bar) / n)
    if n_factors > m_grid * (n - 1):
        raise ValueError(
            f"grid capacity exceeded: N={n_factors} > m(n-1)={m_grid * (n - 1)}; increase n"
        )
    return build_from_grid(n_factors, m_grid)


def perturb(lb: LowerBoundInstance, nu: float, sign: int = +1) -> CountInstance:
    """Energy-tilted twin with counts c_h e^{+/- h nu}.

    Tilting by +nu shifts the whole partition function: Z_+(beta) = Z(beta-nu),
    and symmetrically Z_-(beta) = Z(beta+nu), so the twins' log ratios probe
    the window derivative of the original instance.
    """
    if nu < 0:
        raise ValueError("nu must be non-negative")
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    inst = lb.expanded
    support = [
        (h, lc + sign * nu * h) for h, lc in zip(inst.energies, inst.log_counts)
    ]
    return CountInstance(support, inst.beta_min, inst.beta_max, n=inst.n)


def sensitivity(lb: LowerBoundInstance) -> float:
    """|d/dbeta of [z(beta) - z(beta_max + beta)] at 0|, in closed form.

    Equals (1/m) sum_k [1/(a_k+1) - eta/(a_k+eta)], and coincides with the
    difference of mean energies at the window ends.
    """
    a = lb.a_coeffs
    return float(np.sum(1.0 / (a + 1.0) - lb.eta / (a + lb.eta)) / lb.m_grid)


@dataclass(frozen=True)
class CurvatureReport:
    numeric_sup: float      # grid + golden-section maximum of z'' over the window
    kappa_ell_bound: float  # analytic cap max_ell (1/m^2)[sum a_ell/a_k + sum a_k/a_{ell+1}]


def _kappa_ell_values(lb: LowerBoundInstance) -> np.ndarray:
    a = lb.a_coeffs
    n = a.size
    values = np.empty(n - 1)
    for ell in range(1, n):
        head = np.sum(a[ell - 1] / a[:ell])
        tail = np.sum(a[ell:] / a[ell])
        values[ell - 1] = (head + tail) / lb.m_grid ** 2
    return values


def curvature_sup(lb: LowerBoundInstance) -> CurvatureReport:
    """Numeric supremum of z'' on the window plus the analytic per-level cap.

    z'' is a sum of single-bump terms peaking at u = a_k, so the supremum over
    all beta is attained for u in [a_N, a_1]; a 512-point grid is refined by
    golden section around the best cell.
    """
    if lb.n_factors < 2:
        raise ValueError("curvature cap needs at least two factors")
    a = lb.a_coeffs
    beta_lo = -lb.m_grid * math.log(a[0])
    beta_hi = -lb.m_grid * math.log(a[-1])
    grid = np.linspace(beta_lo, beta_hi, 512)
    values = energy_variance(lb.expanded, grid)
    i = int(values.argmax())
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    f = lambda b: energy_variance(lb.expanded, b)
    c, e = hi - inv_phi * (hi - lo), lo + inv_phi * (hi - lo)
    fc, fe = f(c), f(e)
    while hi - lo > 1e-10 * max(1.0, abs(hi)):
        if fc > fe:
            hi, e, fe = e, c, fc
            c = hi - inv_phi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, e, fe
            e = lo + inv_phi * (hi - lo)
            fe = f(e)
    numeric = max(float(values[i]), f(0.5 * (lo + hi)))
    return CurvatureReport(
        numeric_sup=numeric, kappa_ell_bound=float(_kappa_ell_values(lb).max())
    )


@dataclass(frozen=True)
class LowerBoundReport:
    """Quantitative properties of one built instance, each with a verdict."""

    n_factors: int
    m_grid: int
    q_true: float
    q_lower: float
    q_upper: float
    sandwich_ok: bool
    sensitivity: float
    sensitivity_floor: float
    sensitivity_ok: bool
    kappa_numeric: float
    kappa_ell_bound: float
    kappa_cap: float
    kappa_ok: bool
    ratio: float
    ratio_floor: float
    ratio_ok: bool

    @property
    def passed(self) -> bool:
        return self.sandwich_ok and self.sensitivity_ok and self.kappa_ok and self.ratio_ok

    def lines(self) -> list[str]:
        mark = lambda ok: "PASS" if ok else "FAIL"
        return [
            f"lower-bound instance N={self.n_factors} m={self.m_grid}:",
            f"  [{mark(self.sandwich_ok)}] log-ratio sandwich: "
            f"{self.q_lower:.6f} < q*={self.q_true:.6f} < {self.q_upper:.6f}",
            f"  [{mark(self.sensitivity_ok)}] sensitivity {self.sensitivity:.6f} > "
            f"(N/2-2)/m = {self.sensitivity_floor:.6f}",
            f"  [{mark(self.kappa_ok)}] curvature cap {self.kappa_ell_bound:.6f} < "
            f"4/m^2 = {self.kappa_cap:.6f} (numeric sup {self.kappa_numeric:.6f})",
            f"  [{mark(self.ratio_ok)}] sensitivity^2/curvature {self.ratio:.4f} > "
            f"(N/4-1)^2 = {self.ratio_floor:.4f}",
        ]


def verify_lemma10(lb: LowerBoundInstance) -> LowerBoundReport:
    """Check the quantitative guarantees of the geometric family numerically."""
    n, m = lb.n_factors, lb.m_grid
    q_true = log_ratio_true(lb.expanded)
    mid = (m + n / 2.0) * (n - 1) * math.log(2.0)
    q_lower = mid - n * math.log(2.0)
    q_upper = mid + 2.0
    rho = sensitivity(lb)
    rho_floor = (n / 2.0 - 2.0) / m
    curv = curvature_sup(lb)
    kappa_cap = 4.0 / m ** 2
    ratio = rho ** 2 / curv.kappa_ell_bound
    ratio_floor = (n / 4.0 - 1.0) ** 2
    return LowerBoundReport(
        n_factors=n,
        m_grid=m,
        q_true=q_true,
        q_lower=q_lower,
        q_upper=q_upper,
        sandwich_ok=q_lower < q_true < q_upper,
        sensitivity=rho,
        sensitivity_floor=rho_floor,
        sensitivity_ok=rho > rho_floor,
        kappa_numeric=curv.numeric_sup,
        kappa_ell_bound=curv.kappa_ell_bound,
        kappa_cap=kappa_cap,
        kappa_ok=curv.kappa_ell_bound < kappa_cap,
        ratio=ratio,
        ratio_floor=ratio_floor,
        ratio_ok=ratio > ratio_floor,
    )
