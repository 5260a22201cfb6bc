"""Link-distance distributions and the two inter-cell interferer process
models for Poisson cellular NOMA.

Uplink serving distances follow the fitted law

    f_R(r) = (5/2) lam pi r exp(-(5/4) lam pi r^2),

downlink serving distances are Rayleigh (nearest-BS contact distance).
Ranked (order-statistics) densities, the conditional neighbour laws, the
exponential pair-correlation fit g(r) = 1 - exp(-(12/5) lam pi r^2), and
the first/second moment measures of the two interferer models all live
here.  The 5/4 and 12/5 constants come from prior numerical fits and are
treated as given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .special import reg_inc_beta

__all__ = [
    "UPLINK",
    "DOWNLINK",
    "NetworkParams",
    "InterfererModel",
    "uplink_link_dist",
    "downlink_link_dist",
    "ranked_distance_pdf",
    "ranked_distance_cdf",
    "ranked_distance_quantile",
    "conditional_neighbor_pdf",
    "pcf_fit",
    "intensity_measure",
    "second_moment_measure",
    "normalized_second_moment",
]

UPLINK = "uplink"
DOWNLINK = "downlink"

# exponential-rate multipliers of lam*pi*r^2 in the serving-distance CDFs
_UPLINK_RATE = 5.0 / 4.0
_DOWNLINK_RATE = 1.0
_PCF_RATE = 12.0 / 5.0


def _check_direction(direction: str) -> str:
    if direction not in (UPLINK, DOWNLINK):
        raise ValueError(f"direction must be '{UPLINK}' or '{DOWNLINK}'; got {direction!r}")
    return direction


@dataclass(frozen=True)
class NetworkParams:
    """Static network description.

    lambda_b : BS density per unit area (> 0)
    alpha    : path-loss exponent (> 2, so delta = 2/alpha lies in (0, 1))
    n_users  : users per NOMA cluster (>= 1)
    tx_power : nominal transmit power; cancels in every SIR ratio but is
               carried for completeness
    """

    lambda_b: float
    alpha: float
    n_users: int
    tx_power: float = 1.0

    def __post_init__(self):
        if not self.lambda_b > 0.0:
            raise ValueError(f"lambda_b must be positive; got {self.lambda_b}")
        if not self.alpha > 2.0:
            raise ValueError(f"alpha must exceed 2; got {self.alpha}")
        if self.n_users < 1:
            raise ValueError(f"n_users must be >= 1; got {self.n_users}")
        if not self.tx_power > 0.0:
            raise ValueError(f"tx_power must be positive; got {self.tx_power}")

    @property
    def delta(self) -> float:
        return 2.0 / self.alpha


class InterfererModel(Enum):
    """Approximations of the unknown uplink inter-cell interferer process.

    CLUSTERED   : Poisson cluster process; each parent of an inhomogeneous
                  PPP carries N collocated interferers.
    INDEPENDENT : inhomogeneous PPP with N-fold intensity; points are
                  independent.

    Both share the intensity function N lam (1 - exp(-(12/5) lam pi r^2))
    and therefore the same first moment measure; they differ in the second
    moment.
    """

    CLUSTERED = "clustered"
    INDEPENDENT = "independent"


def _rate(params: NetworkParams, direction: str) -> float:
    if direction == UPLINK:
        return _UPLINK_RATE * params.lambda_b * math.pi
    return _DOWNLINK_RATE * params.lambda_b * math.pi


def _base_pdf_cdf(r, kappa):
    r = np.asarray(r, dtype=float)
    expo = np.exp(-kappa * r * r)
    return 2.0 * kappa * r * expo, 1.0 - expo


def uplink_link_dist(r, params: NetworkParams):
    """(pdf, cdf) of the uplink serving distance at radius r (vectorized)."""
    return _base_pdf_cdf(r, _rate(params, UPLINK))


def downlink_link_dist(r, params: NetworkParams):
    """(pdf, cdf) of the downlink (nearest-BS) serving distance, Rayleigh."""
    return _base_pdf_cdf(r, _rate(params, DOWNLINK))


def ranked_distance_pdf(r, m: int, params: NetworkParams, direction: str):
    """Density of the serving distance of the rank-m user (m-th closest of
    N i.i.d. draws from the direction's base law)."""
    _check_direction(direction)
    n = params.n_users
    if not 1 <= m <= n:
        raise ValueError(f"rank m must lie in [1, {n}]; got {m}")
    pdf, cdf = _base_pdf_cdf(r, _rate(params, direction))
    norm = math.exp(math.lgamma(n + 1) - math.lgamma(m) - math.lgamma(n - m + 1))
    return norm * pdf * np.power(cdf, m - 1) * np.power(1.0 - cdf, n - m)


def ranked_distance_cdf(r, m: int, params: NetworkParams, direction: str):
    """CDF of the rank-m serving distance: I_{F(r)}(m, N-m+1)."""
    _check_direction(direction)
    n = params.n_users
    if not 1 <= m <= n:
        raise ValueError(f"rank m must lie in [1, {n}]; got {m}")
    _, cdf = _base_pdf_cdf(r, _rate(params, direction))
    if np.ndim(cdf) == 0:
        return reg_inc_beta(float(cdf), m, n - m + 1)
    return np.array([reg_inc_beta(float(u), m, n - m + 1) for u in np.ravel(cdf)]).reshape(cdf.shape)


def ranked_distance_quantile(q: float, m: int, params: NetworkParams, direction: str) -> float:
    """Inverse of ranked_distance_cdf; used to cap numerical integration."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile must lie in (0, 1); got {q}")
    n = params.n_users
    u = brentq(lambda v: reg_inc_beta(v, m, n - m + 1) - q, 0.0, 1.0, xtol=1e-15)
    kappa = _rate(params, _check_direction(direction))
    # invert F(r) = 1 - exp(-kappa r^2)
    return math.sqrt(-math.log1p(-u) / kappa)


def conditional_neighbor_pdf(r, r_m: float, side: str, params: NetworkParams,
                             direction: str = UPLINK):
    """Conditional density of a co-cluster user's distance given the rank-m
    distance r_m: truncated base law on [0, r_m] (side='in', users at lower
    ranks) or [r_m, inf) (side='out', higher ranks).  Conditionally i.i.d.
    """
    pdf, cdf = _base_pdf_cdf(r, _rate(params, _check_direction(direction)))
    _, cdf_at_rm = _base_pdf_cdf(r_m, _rate(params, direction))
    r = np.asarray(r, dtype=float)
    if side == "in":
        if cdf_at_rm <= 0.0:
            raise ValueError("conditioning distance r_m = 0 leaves empty inner support")
        return np.where(r <= r_m, pdf / cdf_at_rm, 0.0)
    if side == "out":
        return np.where(r >= r_m, pdf / (1.0 - cdf_at_rm), 0.0)
    raise ValueError(f"side must be 'in' or 'out'; got {side!r}")


def pcf_fit(r, params: NetworkParams):
    """Exponential fit of the BS/user pair correlation function,
    g(r) = 1 - exp(-(12/5) lam pi r^2).  Scale-invariant and independent of
    the cluster size N."""
    r = np.asarray(r, dtype=float)
    return -np.expm1(-_PCF_RATE * params.lambda_b * math.pi * r * r)


def intensity_measure(r, params: NetworkParams):
    """Mean number of inter-cell interferers in the ball b(o, r),

        N lam [pi r^2 - 5/(12 lam) (1 - exp(-(12/5) lam pi r^2))].

    Identical for both interferer models.
    """
    r = np.asarray(r, dtype=float)
    lam = params.lambda_b
    inner = math.pi * r * r + 5.0 / (12.0 * lam) * np.expm1(-_PCF_RATE * lam * math.pi * r * r)
    return params.n_users * lam * inner


def second_moment_measure(r, params: NetworkParams, model: InterfererModel):
    """Second moment of the interferer count in b(o, r).

    CLUSTERED:   L (N + L)     (N collocated points per Poisson parent)
    INDEPENDENT: L (1 + L)     (plain Poisson count)

    with L the shared intensity measure.  They coincide exactly at N = 1.
    """
    lmeas = intensity_measure(r, params)
    if model is InterfererModel.CLUSTERED:
        return lmeas * (params.n_users + lmeas)
    if model is InterfererModel.INDEPENDENT:
        return lmeas * (1.0 + lmeas)
    raise TypeError(f"unknown interferer model: {model!r}")


def normalized_second_moment(r, params: NetworkParams, model: InterfererModel):
    """rho(r) = sqrt(second moment) / (N lam); the square root spreads the
    models apart enough to compare against simulation."""
    return np.sqrt(second_moment_measure(r, params, model)) / (params.n_users * params.lambda_b)
