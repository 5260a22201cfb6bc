"""Uplink CSP moments under the two inter-cell interferer models.

The b-th moment of the rank-m uplink CSP is the serving-distance average

    M_b = int_0^inf [P_intra(r)]^(N-m) * P_inter(r) * f_(m)(r) dr,

where P_intra is the fading-averaged factor contributed by one co-cluster
user at a higher rank (conditionally i.i.d. beyond r),

    P_intra(r) = (5/2) lam pi r^2 exp((5/4) lam pi r^2) mu_b((5/4) lam pi r^2, theta),
    mu_b(x, z) = int_0^1 t^(-3) exp(-x t^(-2)) (1 + z t^alpha)^(-b) dt,

and P_inter is the probability generating functional of the chosen
interferer model:

    CLUSTERED   : exp{-2 pi lam     int [1 - (1 + theta r^a x^-a)^(-Nb)] g(x) x dx}
    INDEPENDENT : exp{-2 pi N lam   int [1 - (1 + theta r^a x^-a)^(-b) ] g(x) x dx}

with g(x) = 1 - exp(-(12/5) lam pi x^2).  The models share first-order
statistics, and for real b > 0 the INDEPENDENT factor is a pointwise lower
bound on the CLUSTERED one (1 - y^N <= N (1 - y)).

Every lambda_b dependence enters through lam r^2 groupings, so the moments
are scale invariant.  Negative real orders diverge unless the effective
exponent stays below 2*delta; in particular the mean local delay is
infinite under both models for alpha >= 4.
"""

from __future__ import annotations

import math

import numpy as np

from .downlink import Classification, MomentValue
from .geometry import (
    UPLINK,
    InterfererModel,
    NetworkParams,
    ranked_distance_pdf,
    ranked_distance_quantile,
)
from .special import quad_complex

__all__ = [
    "mu_integral",
    "intra_cell_factor",
    "interference_factor",
    "csp_moment",
    "oma_moment",
    "negative_order_diverges",
]

_QUANTILE_CAP = 1.0 - 1e-8


def _cpow(base_log: float, b: complex) -> complex:
    """(positive real)^(-b) on the principal branch via exp(-b log base)."""
    return np.exp(-b * base_log)


def _j_integral(b: complex, x: float, z: float, alpha: float, tol: float) -> complex:
    """J(b, x, z) = int_0^inf e^(-tau) (1 + z (1 + tau/x)^(-alpha/2))^(-b) dtau.

    This is 2 x e^x mu_b(x, z): the serving-distance exponential rescaled
    out of the mu integral so the decay scale is always O(1).  The SIR
    kernel varies in a boundary layer of width ~x, so the range is split
    there.
    """
    half_alpha = alpha / 2.0

    def f(tau: float) -> complex:
        return math.exp(-tau) * _cpow(math.log1p(z * (1.0 + tau / x) ** -half_alpha), b)

    split = min(10.0 * x, 1.0)
    return quad_complex(f, 0.0, split, tol=tol) + quad_complex(f, split, math.inf, tol=tol)


def mu_integral(b: complex, x: float, z: float, alpha: float, tol: float = 1e-10) -> complex:
    """mu_b(x, z) = int_0^1 t^(-3) e^(-x t^(-2)) (1 + z t^alpha)^(-b) dt.

    Computed after the substitution s = t^(-2), which removes the endpoint
    singularity:

        mu_b(x, z) = (1/2) int_1^inf e^(-x s) (1 + z s^(-alpha/2))^(-b) ds
                   = e^(-x) / (2 x) * J(b, x, z).

    For z = 0 (or b = 0) this is exactly e^(-x) / (2 x).
    """
    if x <= 0.0:
        raise ValueError(f"x must be positive; got {x}")
    if z < 0.0:
        raise ValueError(f"z must be non-negative; got {z}")
    b = complex(b)
    if z == 0.0 or b == 0.0:
        return math.exp(-x) / (2.0 * x)
    return math.exp(-x) / (2.0 * x) * _j_integral(b, x, z, alpha, tol)


def intra_cell_factor(b: complex, r: float, theta: float, params: NetworkParams,
                      tol: float = 1e-10) -> complex:
    """One co-cluster interferer's fading-averaged factor,
    (5/2) lam pi r^2 e^((5/4) lam pi r^2) mu_b((5/4) lam pi r^2, theta),
    evaluated in the overflow-free J form.  Equals 1 when theta = 0."""
    if r == 0.0:
        return complex(1.0)
    b = complex(b)
    if theta == 0.0 or b == 0.0:
        return complex(1.0)
    x = 1.25 * params.lambda_b * math.pi * r * r
    return _j_integral(b, x, theta, params.alpha, tol)


def negative_order_diverges(b: complex, params: NetworkParams, model: InterfererModel) -> bool:
    """True when Re(b) < 0 makes the interference PGFL integral diverge:
    the effective exponent (N|Re b| clustered, |Re b| independent) must stay
    below 2 delta for the near-field integrand to remain integrable."""
    b = complex(b)
    if b.real >= 0.0:
        return False
    w = -b.real
    w_eff = params.n_users * w if model is InterfererModel.CLUSTERED else w
    return w_eff >= 2.0 * params.delta


def interference_factor(b: complex, r: float, theta: float, params: NetworkParams,
                        model: InterfererModel, tol: float = 1e-10) -> complex:
    """Inter-cell interference factor of the chosen model, conditioned on
    serving distance r.  Equals 1 at theta = 0 or r = 0."""
    if r < 0.0:
        raise ValueError(f"r must be non-negative; got {r}")
    b = complex(b)
    if theta == 0.0 or r == 0.0 or b == 0.0:
        return complex(1.0)
    if negative_order_diverges(b, params, model):
        raise OverflowError(
            "interference factor diverges for this negative moment order"
        )
    lam = params.lambda_b
    alpha = params.alpha
    if model is InterfererModel.CLUSTERED:
        exponent_order = params.n_users * b
        prefactor = 2.0 * math.pi * lam
    elif model is InterfererModel.INDEPENDENT:
        exponent_order = b
        prefactor = 2.0 * math.pi * lam * params.n_users
    else:
        raise TypeError(f"unknown interferer model: {model!r}")
    pcf_rate = 2.4 * lam * math.pi
    theta_r_a = theta * r**alpha
    re_order = exponent_order.real

    def f(x: float) -> complex:
        if x == 0.0:
            return complex(0.0)
        try:
            y = theta_r_a * x**-alpha
        except OverflowError:
            y = math.inf
        ln_term = math.log1p(y)
        # close to the origin the SIR kernel's modulus vanishes: bracket -> 1
        if re_order * ln_term > 700.0 or (re_order == 0.0 and math.isinf(ln_term)):
            bracket = complex(1.0)
        else:
            bracket = -_expm1_c(-exponent_order * ln_term)
        return bracket * (-math.expm1(-pcf_rate * x * x)) * x

    # the SIR kernel turns over near x = r theta^(1/alpha); split there
    x_split = r * theta ** (1.0 / alpha)
    integral = quad_complex(f, 0.0, x_split, tol=tol) + quad_complex(
        f, x_split, math.inf, tol=tol
    )
    return np.exp(-prefactor * integral)


def _expm1_c(w: complex) -> complex:
    """expm1 for complex scalars (numpy's ufunc covers arrays only from
    newer versions; keep an explicit small-|w| series for cancellation)."""
    if abs(w) < 1e-5:
        return w * (1.0 + w / 2.0 * (1.0 + w / 3.0))
    return np.exp(w) - 1.0


def csp_moment(b: complex, m: int, theta: float, params: NetworkParams,
               model: InterfererModel, *, n_panels: int = 24, gl_order: int = 10,
               inner_tol: float = 1e-10) -> MomentValue:
    """b-th moment of the rank-m uplink CSP under the given interferer model.

    The serving-distance integral runs on a fixed composite Gauss-Legendre
    grid up to the 1 - 1e-8 quantile of the ranked distance law; the two
    inner integrals are adaptive.
    """
    if not 1 <= m <= params.n_users:
        raise ValueError(f"rank m must lie in [1, {params.n_users}]; got {m}")
    if theta < 0.0:
        raise ValueError(f"theta must be non-negative; got {theta}")
    b = complex(b)
    if theta == 0.0 or b == 0.0:
        return MomentValue(1.0, Classification.FINITE)
    if negative_order_diverges(b, params, model):
        return MomentValue(complex(math.inf), Classification.INFINITE_BY_DELAY)

    r_max = ranked_distance_quantile(_QUANTILE_CAP, m, params, UPLINK)
    nodes, weights = np.polynomial.legendre.leggauss(gl_order)
    edges = np.linspace(0.0, r_max, n_panels + 1)
    co_exponent = params.n_users - m
    total = complex(0.0)
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        for node, weight in zip(nodes, weights):
            r = mid + half * node
            f_r = float(ranked_distance_pdf(r, m, params, UPLINK))
            if f_r == 0.0:
                continue
            value = interference_factor(b, r, theta, params, model, tol=inner_tol)
            if co_exponent:
                value *= intra_cell_factor(b, r, theta, params, tol=inner_tol) ** co_exponent
            total += weight * half * value * f_r
    if b.imag == 0.0:
        total = complex(total.real)
    return MomentValue(total, Classification.FINITE)


def oma_moment(b: complex, theta: float, params: NetworkParams,
               model: InterfererModel = InterfererModel.CLUSTERED) -> MomentValue:
    """Single-user reference (N = m = 1), where both models coincide."""
    oma_params = NetworkParams(params.lambda_b, params.alpha, 1, params.tx_power)
    return csp_moment(b, 1, theta, oma_params, model)
