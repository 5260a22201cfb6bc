"""Meta distribution machinery.

The meta distribution is the CCDF F(x) = P(CSP > x) of the conditional
success probability across network realizations.  It is recovered from
imaginary moments M_jt by Gil-Pelaez inversion,

    F(x) = 1/2 + (1/pi) int_0^inf Im(exp(-jt ln x) M_jt) / t dt,

approximated by a moment-matched beta distribution from (M_1, M_2), and
bracketed by Markov / Chebyshev / Paley-Zygmund bounds.  Local-delay
statistics (geometric per realization with parameter CSP) and the
NOMA-vs-OMA gain live here too.

The inversion integrand is oscillatory with frequency |ln x| and only
conditionally convergent in general (e.g. for a degenerate CSP the
integral is a Dirichlet integral), so it is summed segment by segment
with Wynn epsilon acceleration and an adaptive truncation horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import downlink as _downlink
from .geometry import DOWNLINK, UPLINK, InterfererModel, NetworkParams
from .special import reg_inc_beta

__all__ = [
    "MetaCurve",
    "GilPelaezPoint",
    "DelayStats",
    "exact_meta_point",
    "exact_meta",
    "exact_meta_curve",
    "beta_fit_shapes",
    "beta_approx_meta",
    "meta_bounds",
    "delay_stats",
    "delay_reliability",
    "gain",
    "vectorized_moment",
]

EXACT = "exact"
BETA_FIT = "betaFit"
EMPIRICAL = "empirical"


@dataclass
class MetaCurve:
    """Sampled reliability curve: values[i] ~ F(xs[i]), with provenance."""

    xs: np.ndarray
    values: np.ndarray
    kind: str
    note: str | None = None

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.xs.shape != self.values.shape:
            raise ValueError("xs and values must have matching shapes")
        if self.kind not in (EXACT, BETA_FIT, EMPIRICAL):
            raise ValueError(f"unknown curve kind {self.kind!r}")

    def __call__(self, x) -> float:
        # xs is increasing; F is nonincreasing, interpolate linearly
        return float(np.interp(x, self.xs, self.values))

    def mean_reliability(self) -> float:
        """int_0^1 F(x) dx by trapezoid; equals M_1 up to sampling error."""
        return float(np.trapz(self.values, self.xs))

    def rows(self):
        for x, v in zip(self.xs, self.values):
            yield x, v, self.kind


@dataclass(frozen=True)
class GilPelaezPoint:
    value: float          # clamped to [0, 1]
    raw: float            # pre-clamp value, kept for diagnostics
    tail_bound: float     # truncation-error estimate
    t_max: float          # integration horizon reached
    warning: str | None = None


@dataclass(frozen=True)
class DelayStats:
    """Local-delay mean and variance from the -1st and -2nd CSP moments."""

    mean: float
    variance: float


def vectorized_moment(scalar_fn: Callable[[float], complex]):
    """Adapt a scalar t -> M_jt callable to the array contract used here."""

    def fn(ts: np.ndarray) -> np.ndarray:
        return np.array([scalar_fn(float(t)) for t in np.ravel(ts)], dtype=complex)

    return fn


# ---------------------------------------------------------------------------
# Gil-Pelaez inversion
# ---------------------------------------------------------------------------

def _wynn_epsilon(partials: np.ndarray) -> float:
    """Wynn's epsilon acceleration of a sequence of partial sums.

    Exact for sequences of the form S + sum_i c_i q_i^k (|q_i| <= 1), which
    covers the damped-oscillatory tails produced by segmenting the
    inversion integrand.  Returns the deepest even-column estimate.
    """
    s = np.asarray(partials, dtype=float)
    if s.size < 3:
        return float(s[-1])
    e_prev = np.zeros(s.size + 1)
    e_curr = s.copy()
    best = float(s[-1])
    col = 0
    while e_curr.size >= 2:
        col += 1
        denom = np.diff(e_curr)
        bad = np.abs(denom) < 1e-300
        denom[bad] = np.nan
        nxt = e_prev[1:e_curr.size] + 1.0 / denom
        e_prev, e_curr = e_curr, nxt
        if col % 2 == 0 and e_curr.size:
            tail = e_curr[np.isfinite(e_curr)]
            if tail.size:
                best = float(tail[-1])
    return best


def exact_meta_point(
    moment_fn: Callable[[np.ndarray], np.ndarray],
    x: float,
    *,
    eps: float = 1e-6,
    conv_tol: float = 1e-4,
    tail_tol: float = 1e-3,
    start_segments: int = 16,
    max_segments: int = 4096,
    t_max: float = 4000.0,
    gl_order: int = 10,
) -> GilPelaezPoint:
    """Evaluate the exact meta distribution at one reliability x.

    ``moment_fn`` maps an array of t > 0 to M_jt.  Integration runs on
    (eps, T); T doubles until three successive doublings each move the
    accelerated estimate by less than ``conv_tol``, up to the horizon
    ``t_max`` (the accelerated tail beyond a few thousand is far below any
    useful tolerance, while the cost of evaluating M_jt keeps growing).
    The result is clamped to [0, 1]; a warning is attached when the
    truncation bound exceeds ``tail_tol``.
    """
    if x <= 0.0:
        return GilPelaezPoint(1.0, 1.0, 0.0, 0.0)
    if x >= 1.0:
        return GilPelaezPoint(0.0, 0.0, 0.0, 0.0)
    ln_x = math.log(x)
    seg_len = math.pi / max(abs(ln_x), 0.3)
    max_segments = max(start_segments, min(max_segments, int(t_max / seg_len) + 1))
    nodes, weights = np.polynomial.legendre.leggauss(gl_order)

    seg_vals: list[float] = []
    estimates: list[float] = []

    def eval_segments(lo_idx: int, hi_idx: int):
        # batch in groups so moment_fn's internal quadrature can size its
        # rule off each group's max t instead of the global horizon
        group = 32
        for g0 in range(lo_idx, hi_idx, group):
            g1 = min(g0 + group, hi_idx)
            starts = eps + seg_len * np.arange(g0, g1)
            mids = starts[:, None] + 0.5 * seg_len * (nodes[None, :] + 1.0)
            ts = mids.ravel()
            m_vals = np.asarray(moment_fn(ts), dtype=complex).reshape(mids.shape)
            integrand = np.imag(np.exp(-1j * mids * ln_x) * m_vals) / mids
            seg_vals.extend(0.5 * seg_len * (integrand @ weights))

    n_segments = start_segments
    while True:
        eval_segments(len(seg_vals), n_segments)
        partials = np.cumsum(seg_vals)
        window = min(len(partials), 40)
        accelerated = _wynn_epsilon(partials[-window:])
        estimates.append(0.5 + accelerated / math.pi)
        if len(estimates) >= 4:
            changes = np.abs(np.diff(estimates[-4:]))
            if np.all(changes < conv_tol):
                break
        # fast-decay shortcut: the remaining tail is already negligible
        if len(seg_vals) >= 64 and all(abs(v) < 1e-10 for v in seg_vals[-8:]):
            break
        if n_segments >= max_segments:
            break
        n_segments *= 2

    raw = estimates[-1]
    if len(estimates) >= 2:
        tail_bound = float(np.max(np.abs(np.diff(estimates[-4:]))))
    else:
        tail_bound = abs(seg_vals[-1]) / math.pi
    t_max = eps + seg_len * len(seg_vals)
    warning = None
    if tail_bound > tail_tol:
        warning = (
            f"Gil-Pelaez truncation bound {tail_bound:.2e} exceeds {tail_tol:.0e} "
            f"at x={x:.4g} (T={t_max:.3g})"
        )
    value = min(1.0, max(0.0, raw))
    return GilPelaezPoint(value, raw, tail_bound, t_max, warning)


def exact_meta(moment_fn, x: float, **kwargs) -> float:
    """Convenience wrapper returning just the clamped value."""
    return exact_meta_point(moment_fn, x, **kwargs).value


def exact_meta_curve(moment_fn, xs, **kwargs) -> MetaCurve:
    """Exact meta distribution on a reliability grid; warnings, if any, are
    joined into the curve note."""
    xs = np.asarray(xs, dtype=float)
    points = [exact_meta_point(moment_fn, float(x), **kwargs) for x in xs]
    warnings = [p.warning for p in points if p.warning]
    note = "; ".join(warnings[:3]) if warnings else None
    return MetaCurve(xs, np.array([p.value for p in points]), EXACT, note=note)


# ---------------------------------------------------------------------------
# Beta approximation
# ---------------------------------------------------------------------------

_DEGENERATE_VAR = 1e-12


def beta_fit_shapes(m1: float, m2: float) -> tuple[float, float]:
    """Shape parameters (a, b) of the beta distribution matching the first
    two CSP moments: b = (m1 - m2)(1 - m1)/(m2 - m1^2), a = m1 b/(1 - m1)."""
    if not 0.0 < m1 < 1.0:
        raise ValueError(f"M1 must lie in (0, 1); got {m1}")
    if m2 >= m1:
        raise ValueError(f"M2 must be < M1 for a CSP in [0, 1]; got M1={m1}, M2={m2}")
    var = m2 - m1 * m1
    if var <= 0.0:
        raise ValueError(
            f"moment pair has non-positive variance (M2 <= M1^2): M1={m1}, M2={m2}"
        )
    shape_b = (m1 - m2) * (1.0 - m1) / var
    shape_a = m1 * shape_b / (1.0 - m1)
    return shape_a, shape_b


def beta_approx_meta(m1: float, m2: float, xs) -> MetaCurve:
    """Beta-approximate meta distribution F(x) = 1 - I_x(a, b) on a grid.

    A zero-variance moment pair (M2 = M1^2 within 1e-12) degenerates to the
    step function 1{x < M1}; the curve is flagged through its note.
    """
    xs = np.asarray(xs, dtype=float)
    if not 0.0 < m1 < 1.0:
        raise ValueError(f"M1 must lie in (0, 1); got {m1}")
    if m2 >= m1:
        raise ValueError(f"M2 must be < M1; got M1={m1}, M2={m2}")
    if abs(m2 - m1 * m1) <= _DEGENERATE_VAR:
        values = np.where(xs < m1, 1.0, 0.0)
        return MetaCurve(xs, values, BETA_FIT, note="degenerate: zero variance")
    shape_a, shape_b = beta_fit_shapes(m1, m2)
    values = np.array(
        [1.0 - reg_inc_beta(min(max(x, 0.0), 1.0), shape_a, shape_b) for x in xs]
    )
    return MetaCurve(xs, values, BETA_FIT)


# ---------------------------------------------------------------------------
# Moment bounds
# ---------------------------------------------------------------------------

def meta_bounds(moments: Mapping[float, float], x: float) -> tuple[float, float]:
    """Tightest (lower, upper) band on F(x) from the available moments.

    Combines Markov bounds from moments of the CSP and of 1 - CSP,
    the Chebyshev band from (M1, M2 - M1^2), and the Paley-Zygmund lower
    bound (M1 - x)^2 / M2.  M1 and M2 are required.
    """
    for needed in (1, 2):
        if needed not in moments:
            raise ValueError(f"insufficient moments for bounds: missing M{needed}")
    m1 = float(moments[1])
    m2 = float(moments[2])
    uppers = [1.0]
    lowers = [0.0]
    for order, value in moments.items():
        if order > 0 and x > 0.0:
            uppers.append(value / x**order)  # Markov on CSP^order
    if x < 1.0:
        # Markov on (1 - CSP)^k, k = 1, 2, via binomial expansion
        uppers_c = [1.0 - m1, 1.0 - 2.0 * m1 + m2]
        for k, comp in enumerate(uppers_c, start=1):
            lowers.append(1.0 - comp / (1.0 - x) ** k)
    var = max(m2 - m1 * m1, 0.0)
    if x < m1:
        lowers.append(1.0 - var / (m1 - x) ** 2)  # Chebyshev
        lowers.append((m1 - x) ** 2 / m2)         # Paley-Zygmund
    elif x > m1:
        uppers.append(var / (x - m1) ** 2)        # Chebyshev
    lo = min(max(max(lowers), 0.0), 1.0)
    hi = min(max(min(uppers), 0.0), 1.0)
    return min(lo, hi), hi


# ---------------------------------------------------------------------------
# Local delay
# ---------------------------------------------------------------------------

def delay_stats(m_minus_1: float, m_minus_2: float) -> DelayStats:
    """Mean and variance of the local delay: mean = M_-1,
    variance = 2 M_-2 - M_-1 - M_-1^2.  Infinities propagate."""
    mean = float(m_minus_1)
    if math.isinf(mean) or math.isinf(m_minus_2):
        return DelayStats(mean, math.inf)
    return DelayStats(mean, 2.0 * m_minus_2 - mean - mean * mean)


def delay_reliability(meta, k: int, x: float) -> float:
    """Fraction of users that succeed within k attempts with probability > x:
    F(1 - (1-x)^(1/k)).  ``meta`` may be a MetaCurve or a callable."""
    if k < 1:
        raise ValueError(f"attempt count k must be >= 1; got {k}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"reliability x must lie in [0, 1]; got {x}")
    x_eff = -math.expm1(math.log1p(-x) / k) if x < 1.0 else 1.0
    return float(meta(x_eff))


# ---------------------------------------------------------------------------
# NOMA-vs-OMA gain
# ---------------------------------------------------------------------------

def gain(
    theta: float,
    params: NetworkParams,
    direction: str,
    *,
    betas: "_downlink.PowerAllocation | None" = None,
    model: InterfererModel | None = None,
) -> float:
    """G(theta) = sum_m M_1,(m) / M_1^OMA: NOMA's served-user density
    relative to single-user OMA at the same spectrum."""
    oma_params = NetworkParams(params.lambda_b, params.alpha, 1, params.tx_power)
    if direction == DOWNLINK:
        if betas is None:
            raise ValueError("downlink gain needs a power allocation")
        total = sum(
            _downlink.csp_moment(1, m, params, betas, theta).real
            for m in range(1, params.n_users + 1)
        )
        oma = _downlink.csp_moment(1, 1, oma_params, _downlink.PowerAllocation.single(), theta).real
    elif direction == UPLINK:
        from . import uplink as _uplink

        if model is None:
            raise ValueError("uplink gain needs an interferer model")
        total = sum(
            _uplink.csp_moment(1, m, theta, params, model).real
            for m in range(1, params.n_users + 1)
        )
        oma = _uplink.csp_moment(1, 1, theta, oma_params, model).real
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return total / oma
