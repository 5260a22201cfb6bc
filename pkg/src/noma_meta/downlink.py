"""Closed-form moments of the downlink conditional success probability.

For a rank-m user with power fractions beta_1 <= ... <= beta_N the SIC
threshold coefficient is

    c_m = (beta_m / theta - sum_{i<m} beta_i)^(-1).

When c_m > 0 the b-th CSP moment is the Beta-function ratio

    M_b = B(A_b + N - m + 1, m) / B(N - m + 1, m)

with the interference exponent

    A_b = sum_{k>=1} binom(b,k) (-1)^(k+1) c^k delta/(k-delta)
                      2F1(k, k-delta; k-delta+1; -c)
        = 2 * int_1^inf [1 - (1 + c u^(-alpha))^(-b)] u du.

The series terminates for positive integer b; the quadrature form is the
authoritative path for complex b (imaginary moments feed the Gil-Pelaez
inversion upstream).  If theta >= beta_m / sum_{i<m} beta_i the rank-m SIR
target is unreachable even without inter-cell interference and the CSP is
almost surely zero; moments collapse to 0 (Re b > 0) or infinity (Re b < 0).

Negative moments use D_w = -A_{-w}: M_{-w} is finite iff D_w < N - m + 1,
which at w = 1 is the finite-mean-local-delay condition
c_m delta/(1-delta) < N - m + 1.

No expression here depends on the BS density.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .geometry import NetworkParams
from .special import (
    MAX_SERIES_TERMS,
    SpecialFunctionError,
    gen_binomial,
    hyp2f1,
    quad_complex,
)

__all__ = [
    "PowerAllocation",
    "Classification",
    "MomentValue",
    "c_coefficient",
    "a_coefficient",
    "a_series",
    "a_quadrature",
    "a_imaginary_grid",
    "d_coefficient",
    "moment_ratio",
    "csp_moment",
    "neg_moment",
    "mean_local_delay",
    "moment_jt_fn",
]

logger = logging.getLogger(__name__)

_SUM_TOL = 1e-9


@dataclass(frozen=True)
class PowerAllocation:
    """Ordered downlink power fractions beta_1 <= ... <= beta_N, summing to 1."""

    betas: tuple

    def __post_init__(self):
        betas = tuple(float(b) for b in self.betas)
        object.__setattr__(self, "betas", betas)
        if len(betas) == 0:
            raise ValueError("power allocation needs at least one user")
        if any(b < 0.0 for b in betas):
            raise ValueError(f"power fractions must be non-negative; got {betas}")
        if any(betas[i] > betas[i + 1] + 1e-12 for i in range(len(betas) - 1)):
            raise ValueError(f"power fractions must be non-decreasing; got {betas}")
        if abs(sum(betas) - 1.0) > _SUM_TOL:
            raise ValueError(f"power fractions must sum to 1 within {_SUM_TOL}; got {sum(betas)}")

    @classmethod
    def single(cls) -> "PowerAllocation":
        return cls((1.0,))

    @classmethod
    def even(cls, n: int) -> "PowerAllocation":
        return cls((1.0 / n,) * n)

    @property
    def n(self) -> int:
        return len(self.betas)


class Classification(Enum):
    FINITE = "finite"
    ZERO_BY_THRESHOLD = "zeroByThreshold"
    INFINITE_BY_THRESHOLD = "infiniteByThreshold"
    INFINITE_BY_DELAY = "infiniteByDelay"


@dataclass(frozen=True)
class MomentValue:
    value: complex
    classification: Classification

    @property
    def is_finite(self) -> bool:
        return self.classification is Classification.FINITE

    @property
    def real(self) -> float:
        return self.value.real


def c_coefficient(betas: PowerAllocation, theta: float, m: int) -> float:
    """SIC threshold coefficient c_m; negative or infinite values signal the
    infeasible-threshold regime theta >= beta_m / sum_{i<m} beta_i."""
    if theta <= 0.0:
        raise ValueError(f"theta must be positive; got {theta}")
    if not 1 <= m <= betas.n:
        raise ValueError(f"rank m must lie in [1, {betas.n}]; got {m}")
    denom = betas.betas[m - 1] / theta - sum(betas.betas[: m - 1])
    if denom == 0.0:
        return math.inf
    return 1.0 / denom


def _in_threshold_regime(c: float) -> bool:
    # boundary case (zero denominator -> infinite c) follows the ">=" branch
    return c < 0.0 or math.isinf(c)


def a_series(b: complex, c: float, delta: float, tol: float = 1e-15) -> complex:
    """Interference exponent by binomial-expansion series.

    Terminates exactly for positive integer b; otherwise the terms shrink
    like (c/(1+c))^k and the sum is truncated at relative tolerance ``tol``.
    """
    if c <= 0.0:
        raise ValueError(f"a_series requires c > 0; got {c}")
    b = complex(b)
    terminating = b.imag == 0.0 and b.real == int(b.real) and b.real >= 1
    k_max = int(b.real) if terminating else MAX_SERIES_TERMS
    total = complex(0.0)
    binom = complex(1.0)
    small_streak = 0
    for k in range(1, k_max + 1):
        binom *= (b - (k - 1)) / k
        term = binom * (-1.0) ** (k + 1) * c**k * (delta / (k - delta)) * hyp2f1(
            k, k - delta, k - delta + 1.0, -c
        )
        total += term
        if terminating:
            continue
        if abs(term) <= tol * max(abs(total), 1e-300):
            small_streak += 1
            if small_streak >= 2:
                return total
        else:
            small_streak = 0
    if not terminating:
        raise SpecialFunctionError(
            "interference-exponent series did not converge", partial=total, terms=k_max
        )
    return total


def a_quadrature(b: complex, c: float, alpha: float, tol: float = 1e-11) -> complex:
    """Interference exponent by quadrature of the pre-expansion form

        A = 2 int_1^inf [1 - (1 + c u^(-alpha))^(-b)] u du.

    After substituting v = u^(2-alpha) the integrand is bounded and smooth
    on (0, 1] for every alpha > 2.  Authoritative for complex b.
    """
    if c <= 0.0:
        raise ValueError(f"a_quadrature requires c > 0; got {c}")
    p = alpha - 2.0
    expo = 1.0 + 2.0 / p
    b = complex(b)
    limit_at_zero = (2.0 / p) * b * c

    def integrand(v: float) -> complex:
        if v == 0.0:
            return limit_at_zero
        # -expm1 keeps precision where the bracket is ~ b*c*v^expo
        return -(2.0 / p) * np.expm1(-b * math.log1p(c * v**expo)) * v ** (-expo)

    return quad_complex(integrand, 0.0, 1.0, tol=tol)


def a_coefficient(b: complex, c: float, delta: float) -> complex:
    """Dispatch: series for real b (falls back to quadrature if it stalls),
    quadrature for genuinely complex b."""
    b = complex(b)
    alpha = 2.0 / delta
    if b.imag != 0.0:
        return a_quadrature(b, c, alpha)
    try:
        return a_series(b, c, delta)
    except SpecialFunctionError as err:
        logger.info("interference-exponent series stalled (%s); using quadrature", err)
        return a_quadrature(b, c, alpha)


def a_imaginary_grid(ts: np.ndarray, c: float, alpha: float) -> np.ndarray:
    """Vectorized A_{jt} over an array of t > 0 by fixed Gauss-Legendre
    quadrature of the a_quadrature integrand.

    The node count grows with the oscillation budget max(t) * log(1+c) so a
    single call stays accurate across the whole batch.  Feeds the
    Gil-Pelaez inversion, which needs thousands of imaginary moments.
    """
    ts = np.asarray(ts, dtype=float)
    p = alpha - 2.0
    expo = 1.0 + 2.0 / p
    # local oscillation rate of exp(-j t g(v)); size the rule off its peak
    v_probe = np.linspace(1e-4, 1.0, 64)
    g_rate = np.max(c * expo * v_probe ** (expo - 1.0) / (1.0 + c * v_probe**expo))
    freq_budget = float(np.max(ts, initial=0.0)) * g_rate
    n_nodes = min(16_000, max(80, int(0.9 * freq_budget) + 60))
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    v = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    g = np.log1p(c * v**expo)  # phase profile, shape (n_nodes,)
    prefactor = (2.0 / p) * v ** (-expo) * w
    bracket = -np.expm1(-1j * np.multiply.outer(ts, g))  # (len(ts), n_nodes)
    return bracket @ prefactor


def d_coefficient(w: float, c: float, delta: float, tol: float = 1e-14) -> float:
    """Negative-moment exponent D_w = sum_k binom(w,k) c^k delta/(k-delta).

    The series terminates for integer w and converges for c < 1 otherwise;
    for non-integer w with c >= 1 it is continued analytically through the
    quadrature identity D_w = -A_{-w}.
    """
    if w <= 0.0:
        raise ValueError(f"w must be positive; got {w}")
    if c <= 0.0:
        raise ValueError(f"d_coefficient requires c > 0; got {c}")
    integer_w = w == int(w)
    if not integer_w and c >= 1.0:
        return -a_quadrature(-w, c, 2.0 / delta).real
    total = 0.0
    binom = 1.0
    k_max = int(w) if integer_w else MAX_SERIES_TERMS
    for k in range(1, k_max + 1):
        binom *= (w - (k - 1)) / k
        term = binom * c**k * delta / (k - delta)
        total += term
        if not integer_w and abs(term) < tol * max(abs(total), 1e-300):
            return total
    if not integer_w:
        raise SpecialFunctionError("negative-moment series did not converge",
                                   partial=total, terms=k_max)
    return total


def moment_ratio(a_value: complex, n: int, m: int) -> complex:
    """B(a + N - m + 1, m) / B(N - m + 1, m) as the exact rational product

        prod_{i=0}^{m-1} (N - m + 1 + i) / (a + N - m + 1 + i),

    valid (and stable) for complex a since m is a positive integer.
    """
    out = complex(1.0)
    for i in range(m):
        out *= (n - m + 1 + i) / (a_value + n - m + 1 + i)
    return out


def _validate_rank(params: NetworkParams, betas: PowerAllocation, m: int):
    if betas.n != params.n_users:
        raise ValueError(
            f"power allocation for {betas.n} users does not match n_users={params.n_users}"
        )
    if not 1 <= m <= params.n_users:
        raise ValueError(f"rank m must lie in [1, {params.n_users}]; got {m}")


def csp_moment(b: complex, m: int, params: NetworkParams, betas: PowerAllocation,
               theta: float) -> MomentValue:
    """b-th moment of the rank-m downlink CSP (independent of lambda_b)."""
    _validate_rank(params, betas, m)
    b = complex(b)
    c = c_coefficient(betas, theta, m)
    if _in_threshold_regime(c):
        if b.real > 0.0:
            return MomentValue(0.0, Classification.ZERO_BY_THRESHOLD)
        if b.real < 0.0:
            return MomentValue(complex(math.inf), Classification.INFINITE_BY_THRESHOLD)
        raise ValueError(
            "moment order with zero real part is undefined in the threshold regime"
        )
    if b == 0.0:
        return MomentValue(1.0, Classification.FINITE)
    a_value = a_coefficient(b, c, params.delta)
    return MomentValue(moment_ratio(a_value, params.n_users, m), Classification.FINITE)


def neg_moment(w: float, m: int, params: NetworkParams, betas: PowerAllocation,
               theta: float) -> MomentValue:
    """M_{-w} in closed form; infinite when D_w >= N - m + 1 or when the
    threshold regime makes the CSP vanish."""
    if w <= 0.0:
        raise ValueError(f"w must be positive; got {w}")
    _validate_rank(params, betas, m)
    c = c_coefficient(betas, theta, m)
    if _in_threshold_regime(c):
        return MomentValue(complex(math.inf), Classification.INFINITE_BY_THRESHOLD)
    d = d_coefficient(w, c, params.delta)
    if d >= params.n_users - m + 1:
        return MomentValue(complex(math.inf), Classification.INFINITE_BY_DELAY)
    return MomentValue(moment_ratio(-d, params.n_users, m), Classification.FINITE)


def mean_local_delay(m: int, params: NetworkParams, betas: PowerAllocation,
                     theta: float) -> MomentValue:
    """Mean local delay M_{-1}; finite iff c_m delta/(1-delta) < N - m + 1."""
    return neg_moment(1.0, m, params, betas, theta)


def moment_jt_fn(m: int, params: NetworkParams, betas: PowerAllocation, theta: float):
    """Vectorized t -> M_{jt} for the Gil-Pelaez inversion.

    Raises in the threshold regime, where the CSP is almost surely zero and
    the meta distribution is the zero curve (no inversion needed).
    """
    _validate_rank(params, betas, m)
    c = c_coefficient(betas, theta, m)
    if _in_threshold_regime(c):
        raise ValueError(
            "imaginary moments are undefined in the threshold regime; "
            "the meta distribution is identically zero there"
        )
    n = params.n_users
    alpha = params.alpha

    def fn(ts: np.ndarray) -> np.ndarray:
        a_grid = a_imaginary_grid(np.asarray(ts, dtype=float), c, alpha)
        out = np.ones_like(a_grid)
        for i in range(m):
            out *= (n - m + 1 + i) / (a_grid + n - m + 1 + i)
        return out

    return fn
