"""Monte Carlo stochastic-geometry oracle.

Samples Poisson cellular networks, computes per-realization conditional
success probabilities through the fading-averaged product forms

    uplink   : prod_x 1 / (1 + theta r_m^a ||x||^-a)   over inter-cell
               interferers and co-cluster users at higher ranks,
    downlink : prod_x 1 / (1 + c_m r_0^a ||x||^-a)     over non-serving BSs,

and reduces them into moment estimates, empirical meta distributions,
pair-correlation samples, and interferer-count moment measures.

Fading never gets sampled: the products above are exact fading averages,
which removes one Monte Carlo layer.

Determinism contract: every realization draws from its own counter-based
substream seeded by (seed, index), and estimators reduce fixed-size chunks
in index order, so results are bit-identical for any worker count.
Statistics are only ever collected at the origin (typical BS or typical
user); the window holds >= 500 expected BSs by default so the omitted
far-field interference is negligible.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Callable, Sequence

import numpy as np
import scipy
from scipy.spatial import Voronoi, cKDTree

from . import __version__
from .downlink import PowerAllocation, c_coefficient
from .geometry import DOWNLINK, UPLINK, NetworkParams

__all__ = [
    "SimConfig",
    "Realization",
    "MomentEstimate",
    "CountMoments",
    "sample_realization",
    "csp_uplink",
    "csp_downlink",
    "estimate_moments",
    "coverage_curves",
    "empirical_meta",
    "estimate_interferer_counts",
    "estimate_pcf",
    "estimate_second_moment",
    "csp_table",
    "run_manifest",
]

CHUNK = 256
_MIN_BS = 8
_REJECTION_ROUND_CAP = 10_000
NEG_ORDER_FLOOR = 1e-9


@dataclass(frozen=True)
class SimConfig:
    """One simulation campaign: network, direction, size, and seed.

    window_radius=None picks the radius holding 500 expected BSs; explicit
    values must exceed 5/sqrt(lam pi).  theta_grid is linear-scale.
    """

    params: NetworkParams
    direction: str
    realizations: int
    seed: int = 0
    window_radius: float | None = None
    theta_grid: tuple = ()
    betas: PowerAllocation | None = None

    def __post_init__(self):
        if self.direction not in (UPLINK, DOWNLINK):
            raise ValueError(f"direction must be uplink or downlink; got {self.direction!r}")
        if self.realizations < 1:
            raise ValueError(f"realizations must be >= 1; got {self.realizations}")
        if self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer; got {self.seed}")
        object.__setattr__(self, "theta_grid", tuple(float(t) for t in self.theta_grid))
        if self.window_radius is not None:
            floor = 5.0 / math.sqrt(self.params.lambda_b * math.pi)
            if not self.window_radius > floor:
                raise ValueError(
                    f"window_radius must exceed 5/sqrt(lam pi) = {floor:.6g}; "
                    f"got {self.window_radius}"
                )
        if self.direction == DOWNLINK and self.betas is not None:
            if self.betas.n != self.params.n_users:
                raise ValueError("betas length must match n_users")

    def window(self) -> float:
        if self.window_radius is not None:
            return self.window_radius
        return math.sqrt(500.0 / (self.params.lambda_b * math.pi))

    def as_dict(self) -> dict:
        return {
            "params": {
                "lambda_b": self.params.lambda_b,
                "alpha": self.params.alpha,
                "n_users": self.params.n_users,
                "tx_power": self.params.tx_power,
            },
            "direction": self.direction,
            "realizations": self.realizations,
            "seed": self.seed,
            "window_radius": self.window_radius,
            "theta_grid": list(self.theta_grid),
            "betas": list(self.betas.betas) if self.betas is not None else None,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class Realization:
    """One sampled network, reduced to what the CSP products need.

    uplink   : typical BS at the origin; typical_distances are the N ranked
               user distances of its cell; interferer_points are the other
               cells' users (typical-cell users excluded).
    downlink : typical user at the origin; typical_distances = (serving,),
               rank is the user's sampled rank; interferer_points are the
               non-serving BSs.
    """

    bs_points: np.ndarray
    typical_distances: np.ndarray
    interferer_points: np.ndarray
    rank: int | None = None


def _rng_for(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, index)))


def _sample_ppp_disc(rng: np.random.Generator, lam: float, radius: float) -> np.ndarray:
    n = rng.poisson(lam * math.pi * radius * radius)
    r = radius * np.sqrt(rng.random(n))
    phi = 2.0 * math.pi * rng.random(n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def _voronoi_bboxes(points: np.ndarray, within: float = math.inf):
    """Per-point usable flag and bounding box of the Voronoi cell.

    A cell is usable when its region is bounded AND contained in the disc
    of radius ``within``: boundary cells of the finite window are sliver
    artifacts (sometimes astronomically elongated) whose geometry would be
    rewritten by BSs outside the window anyway, so they never receive
    users.  Interference near the origin is unaffected.
    """
    vor = Voronoi(points)
    regions = [vor.regions[j] for j in vor.point_region]
    n = len(points)
    lens = np.fromiter((len(r) for r in regions), dtype=np.intp, count=n)
    bounded = np.fromiter(
        ((len(r) > 0 and min(r) >= 0) for r in regions), dtype=bool, count=n
    )
    flat = np.concatenate([r for r in regions if r]) if np.any(lens > 0) else np.empty(0, int)
    verts = vor.vertices[np.where(flat >= 0, flat, 0)]
    starts = np.zeros(n, dtype=np.intp)
    np.cumsum(lens[:-1], out=starts[1:])
    lo = np.zeros((n, 2))
    hi = np.zeros((n, 2))
    nonempty = lens > 0
    # reduceat needs strictly valid starts; restrict to non-empty regions
    red_starts = starts[nonempty]
    lo[nonempty] = np.minimum.reduceat(verts, red_starts, axis=0)
    hi[nonempty] = np.maximum.reduceat(verts, red_starts, axis=0)
    corner = np.maximum(np.abs(lo), np.abs(hi))
    usable = bounded & (np.hypot(corner[:, 0], corner[:, 1]) <= within)
    return usable, lo, hi


def _fill_cells_uniform(rng, tree, owners, lo_slots, hi_slots) -> np.ndarray:
    """Rejection-sample one point per ``owners`` entry, uniform in that
    cell: draw in the cell's bounding box (slot-aligned ``lo_slots`` /
    ``hi_slots``), accept when the nearest BS is the owner.  Rounds are
    capped; unfilled slots simply redraw each round (a fresh, identically
    distributed resample of the cell)."""
    points = np.empty((owners.size, 2))
    unfilled = np.arange(owners.size)
    rounds = 0
    oversample = 4  # candidates per slot per round; kills the geometric tail
    while unfilled.size:
        rounds += 1
        if rounds > _REJECTION_ROUND_CAP:
            raise RuntimeError("cell rejection sampling exceeded the round cap")
        u = unfilled.size
        cand = rng.uniform(
            lo_slots[unfilled][:, None, :], hi_slots[unfilled][:, None, :],
            size=(u, oversample, 2),
        )
        _, nearest = tree.query(cand.reshape(-1, 2))
        ok = nearest.reshape(u, oversample) == owners[unfilled][:, None]
        hit = ok.any(axis=1)
        first = ok.argmax(axis=1)
        rows = np.flatnonzero(hit)
        points[unfilled[rows]] = cand[rows, first[rows]]
        unfilled = unfilled[~hit]
    return points


def _sample_uplink(config: SimConfig, rng) -> Realization:
    params = config.params
    radius = config.window()
    pts = _sample_ppp_disc(rng, params.lambda_b, radius)
    while len(pts) < _MIN_BS:  # qhull needs company; practically unreachable
        pts = _sample_ppp_disc(rng, params.lambda_b, radius)
    bs = np.vstack([np.zeros((1, 2)), pts])
    usable, lo, hi = _voronoi_bboxes(bs, within=radius)
    if not usable[0]:
        raise RuntimeError("typical cell is unbounded; enlarge the window")
    cells = np.flatnonzero(usable)
    owners = np.repeat(cells, params.n_users)
    tree = cKDTree(bs)
    users = _fill_cells_uniform(rng, tree, owners, lo[owners], hi[owners])
    is_typical = owners == 0
    typical = np.sort(np.hypot(users[is_typical, 0], users[is_typical, 1]))
    return Realization(bs, typical, users[~is_typical])


def _serving_cell_bbox(bs: np.ndarray, tree, j0: int):
    """Bounding box of the serving BS's Voronoi cell from its neighbourhood.

    The cell computed from the k nearest BSs contains the true cell, so its
    box is a valid rejection envelope; exactness of the accepted samples
    comes from testing against the full BS set.
    """
    k = min(len(bs), 24)
    while True:
        _, idx = tree.query(bs[j0], k=k)
        sub = bs[np.atleast_1d(idx)]
        vor = Voronoi(sub)
        region = vor.regions[vor.point_region[0]]
        if region and -1 not in region:
            verts = vor.vertices[region]
            return verts.min(axis=0), verts.max(axis=0)
        if k == len(bs):
            raise RuntimeError("serving cell is unbounded; enlarge the window")
        k = min(len(bs), 2 * k)


def _sample_downlink(config: SimConfig, rng) -> Realization:
    params = config.params
    radius = config.window()
    bs = _sample_ppp_disc(rng, params.lambda_b, radius)
    while len(bs) < _MIN_BS:
        bs = _sample_ppp_disc(rng, params.lambda_b, radius)
    dist0 = np.hypot(bs[:, 0], bs[:, 1])
    j0 = int(np.argmin(dist0))
    serving = float(dist0[j0])
    rank = 1
    if params.n_users > 1:
        tree = cKDTree(bs)
        lo, hi = _serving_cell_bbox(bs, tree, j0)
        n_co = params.n_users - 1
        owners = np.full(n_co, j0)
        co_users = _fill_cells_uniform(
            rng, tree, owners, np.tile(lo, (n_co, 1)), np.tile(hi, (n_co, 1))
        )
        co_dist = np.hypot(co_users[:, 0] - bs[j0, 0], co_users[:, 1] - bs[j0, 1])
        rank = 1 + int(np.sum(co_dist < serving))
    interferers = np.delete(bs, j0, axis=0)
    return Realization(bs, np.array([serving]), interferers, rank)


def sample_realization(config: SimConfig, index: int) -> Realization:
    """Sample realization ``index`` of the campaign (independent substream)."""
    rng = _rng_for(config.seed, index)
    if config.direction == UPLINK:
        return _sample_uplink(config, rng)
    return _sample_downlink(config, rng)


# ---------------------------------------------------------------------------
# Per-realization CSPs
# ---------------------------------------------------------------------------

def csp_uplink(real: Realization, m: int, theta: float, params: NetworkParams) -> float:
    """Exact fading-averaged CSP of the rank-m user for this geometry."""
    n = len(real.typical_distances)
    if not 1 <= m <= n:
        raise ValueError(f"rank m must lie in [1, {n}]; got {m}")
    if theta == 0.0:
        return 1.0
    r_m = real.typical_distances[m - 1]
    r_m_a = r_m**params.alpha
    log_sum = 0.0
    if len(real.interferer_points):
        d = np.hypot(real.interferer_points[:, 0], real.interferer_points[:, 1])
        log_sum += float(np.log1p(theta * r_m_a * d**-params.alpha).sum())
    co = real.typical_distances[m:]
    if co.size:
        log_sum += float(np.log1p(theta * r_m_a * co**-params.alpha).sum())
    return math.exp(-log_sum)


def csp_downlink(real: Realization, m: int, betas: PowerAllocation, theta: float,
                 params: NetworkParams) -> float:
    """Exact fading-averaged downlink CSP; identically 0 in the threshold
    regime (c_m <= 0 or infinite)."""
    c = c_coefficient(betas, theta, m)
    if not 0.0 < c < math.inf:
        return 0.0
    r0 = real.typical_distances[0]
    d = np.hypot(real.interferer_points[:, 0], real.interferer_points[:, 1])
    log_sum = float(np.log1p(c * r0**params.alpha * d**-params.alpha).sum())
    return math.exp(-log_sum)


def _csp_uplink_all_ranks(real: Realization, thetas: np.ndarray,
                          params: NetworkParams) -> np.ndarray:
    """(N, len(thetas)) matrix of CSPs, vectorized over ranks and thresholds."""
    alpha = params.alpha
    typ = real.typical_distances
    n = typ.size
    rm_a = typ**alpha  # (N,)
    out = np.zeros((n, thetas.size))
    if len(real.interferer_points):
        d = np.hypot(real.interferer_points[:, 0], real.interferer_points[:, 1])
        inv = d**-alpha  # (K,)
        base = np.multiply.outer(rm_a, inv)  # (N, K)
        out += np.log1p(base[:, :, None] * thetas[None, None, :]).sum(axis=1)
    inv_co = typ**-alpha
    co = np.multiply.outer(rm_a, inv_co)  # (N, N): co[m, i] = (r_m / r_i)^alpha
    mask = np.triu(np.ones((n, n)), k=1)  # ranks above m interfere
    out += (np.log1p(co[:, :, None] * thetas[None, None, :]) * mask[:, :, None]).sum(axis=1)
    return np.exp(-out)


def _csp_downlink_own_rank(real: Realization, c_by_rank: np.ndarray,
                           thetas: np.ndarray, params: NetworkParams) -> np.ndarray:
    """(len(thetas),) CSPs of the typical user at its sampled rank; c_by_rank
    holds c_m per (rank, theta), <= 0 marking the threshold regime."""
    r0 = real.typical_distances[0]
    d = np.hypot(real.interferer_points[:, 0], real.interferer_points[:, 1])
    ratio = r0**params.alpha * d**-params.alpha  # (K,)
    cs = c_by_rank[real.rank - 1]  # (T,)
    out = np.zeros(thetas.size)
    ok = (cs > 0.0) & np.isfinite(cs)
    if np.any(ok):
        out[ok] = np.exp(-np.log1p(np.multiply.outer(cs[ok], ratio)).sum(axis=1))
    return out


def _c_by_rank(betas: PowerAllocation, thetas: np.ndarray) -> np.ndarray:
    out = np.empty((betas.n, thetas.size))
    for m in range(1, betas.n + 1):
        for j, theta in enumerate(thetas):
            out[m - 1, j] = c_coefficient(betas, float(theta), m)
    return out


# ---------------------------------------------------------------------------
# Chunked, order-stable reduction
# ---------------------------------------------------------------------------

def _chunk_ranges(total: int):
    return [(s, min(s + CHUNK, total)) for s in range(0, total, CHUNK)]


def _map_chunks(worker: Callable, config: SimConfig, workers: int):
    ranges = _chunk_ranges(config.realizations)
    if workers <= 1:
        return [worker((config, lo, hi)) for lo, hi in ranges]
    args = [(config, lo, hi) for lo, hi in ranges]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, args, chunksize=1))


@dataclass(frozen=True)
class MomentEstimate:
    order: complex
    value: complex
    std_error: float
    n_samples: int
    floored_fraction: float = 0.0
    unreliable: bool = False


def _moment_chunk(spec, args):
    config, lo, hi = args
    orders, m, theta = spec
    orders = [complex(o) for o in orders]
    k = len(orders)
    sums = np.zeros(k, dtype=complex)
    sq_sums = np.zeros(k)
    floored = np.zeros(k)
    count = 0
    thetas = np.array([theta])
    if config.direction == DOWNLINK:
        c_grid = _c_by_rank(config.betas, thetas)
    for index in range(lo, hi):
        real = sample_realization(config, index)
        if config.direction == UPLINK:
            csp = csp_uplink(real, m, theta, config.params)
        else:
            if real.rank != m:
                continue
            csp = float(_csp_downlink_own_rank(real, c_grid, thetas, config.params)[0])
        count += 1
        for i, order in enumerate(orders):
            if order.real < 0.0 and csp < NEG_ORDER_FLOOR:
                floored[i] += 1
                z = complex(NEG_ORDER_FLOOR) ** order
            elif csp == 0.0:
                z = complex(1.0) if order == 0.0 else complex(0.0)
            else:
                z = complex(csp) ** order
            sums[i] += z
            sq_sums[i] += abs(z) ** 2
    return sums, sq_sums, floored, count


def estimate_moments(config: SimConfig, orders: Sequence[complex], m: int, theta: float,
                     workers: int = 1) -> list[MomentEstimate]:
    """Sample moments of the rank-m CSP at one threshold.

    Negative orders are floored at 1e-9 to keep the estimator finite; the
    floored fraction is reported and the estimate flagged unreliable when
    the floor's contribution is material (the infinite-mean signature).
    """
    worker = partial(_moment_chunk, (tuple(orders), m, float(theta)))
    parts = _map_chunks(worker, config, workers)
    sums = sum(p[0] for p in parts)
    sq_sums = sum(p[1] for p in parts)
    floored = sum(p[2] for p in parts)
    count = sum(p[3] for p in parts)
    if count == 0:
        raise RuntimeError("no realizations matched the requested rank")
    out = []
    for i, order in enumerate(orders):
        order = complex(order)
        mean = sums[i] / count
        var = max(sq_sums[i] / count - abs(mean) ** 2, 0.0)
        se = math.sqrt(var / count)
        frac = floored[i] / count
        floor_mass = frac * NEG_ORDER_FLOOR ** order.real if order.real < 0 else 0.0
        unreliable = order.real < 0 and frac > 0 and floor_mass > 0.05 * abs(mean)
        out.append(MomentEstimate(order, mean, se, count, frac, unreliable))
    return out


def _coverage_chunk(args):
    config, lo, hi = args
    thetas = np.asarray(config.theta_grid)
    n = config.params.n_users
    sums = np.zeros((n, thetas.size))
    sq_sums = np.zeros((n, thetas.size))
    counts = np.zeros(n)
    if config.direction == DOWNLINK:
        c_grid = _c_by_rank(config.betas, thetas)
    for index in range(lo, hi):
        real = sample_realization(config, index)
        if config.direction == UPLINK:
            csp = _csp_uplink_all_ranks(real, thetas, config.params)
            sums += csp
            sq_sums += csp**2
            counts += 1
        else:
            csp = _csp_downlink_own_rank(real, c_grid, thetas, config.params)
            sums[real.rank - 1] += csp
            sq_sums[real.rank - 1] += csp**2
            counts[real.rank - 1] += 1
    return sums, sq_sums, counts


def coverage_curves(config: SimConfig, workers: int = 1):
    """Empirical M_1 per (rank, theta) over config.theta_grid.

    Returns (means, std_errors, counts): arrays of shape (N, len(grid)),
    downlink rows conditioned on the sampled rank.
    """
    if not config.theta_grid:
        raise ValueError("config.theta_grid is empty")
    parts = _map_chunks(_coverage_chunk, config, workers)
    sums = sum(p[0] for p in parts)
    sq_sums = sum(p[1] for p in parts)
    counts = sum(p[2] for p in parts)
    if np.any(counts == 0):
        raise RuntimeError("a rank received no realizations; increase the sample size")
    means = sums / counts[:, None]
    var = np.maximum(sq_sums / counts[:, None] - means**2, 0.0)
    ses = np.sqrt(var / counts[:, None])
    return means, ses, counts


def _meta_chunk(spec, args):
    config, lo, hi = args
    m, theta, grid = spec
    grid = np.asarray(grid)
    counts = np.zeros(grid.size)
    total = 0
    thetas = np.array([theta])
    if config.direction == DOWNLINK:
        c_grid = _c_by_rank(config.betas, thetas)
    for index in range(lo, hi):
        real = sample_realization(config, index)
        if config.direction == UPLINK:
            csp = csp_uplink(real, m, theta, config.params)
        else:
            if real.rank != m:
                continue
            csp = float(_csp_downlink_own_rank(real, c_grid, thetas, config.params)[0])
        counts += csp > grid
        total += 1
    return counts, total


def empirical_meta(config: SimConfig, m: int, theta: float, grid=None, workers: int = 1):
    """Empirical meta distribution (CCDF of per-realization CSPs) on a grid."""
    from .metadist import EMPIRICAL, MetaCurve

    if grid is None:
        grid = np.linspace(0.0, 1.0, 101)
    grid = np.asarray(grid, dtype=float)
    worker = partial(_meta_chunk, (m, float(theta), tuple(grid)))
    parts = _map_chunks(worker, config, workers)
    counts = sum(p[0] for p in parts)
    total = sum(p[1] for p in parts)
    if total == 0:
        raise RuntimeError("no realizations matched the requested rank")
    return MetaCurve(grid, counts / total, EMPIRICAL)


@dataclass(frozen=True)
class CountMoments:
    """First/second sample moments of the interferer count in b(o, r)."""

    radii: np.ndarray
    mean: np.ndarray
    mean_sq: np.ndarray
    realizations: int


def _count_chunk(spec, args):
    config, lo, hi = args
    radii = np.asarray(spec)
    sums = np.zeros(radii.size)
    sq_sums = np.zeros(radii.size)
    for index in range(lo, hi):
        real = sample_realization(config, index)
        d = np.sort(np.hypot(real.interferer_points[:, 0], real.interferer_points[:, 1]))
        counts = np.searchsorted(d, radii, side="right").astype(float)
        sums += counts
        sq_sums += counts**2
    return sums, sq_sums, hi - lo


def estimate_interferer_counts(config: SimConfig, radii, workers: int = 1) -> CountMoments:
    """Sample E[count(b(o,r))] and E[count^2(b(o,r))] on a radius grid
    (uplink only: counts are of other cells' users seen from the typical BS)."""
    if config.direction != UPLINK:
        raise ValueError("interferer-count statistics are defined for the uplink")
    radii = np.asarray(radii, dtype=float)
    worker = partial(_count_chunk, tuple(radii))
    parts = _map_chunks(worker, config, workers)
    sums = sum(p[0] for p in parts)
    sq_sums = sum(p[1] for p in parts)
    total = sum(p[2] for p in parts)
    return CountMoments(radii, sums / total, sq_sums / total, total)


def _local_linear(x: np.ndarray, y: np.ndarray, window: int) -> np.ndarray:
    """Local linear regression smoother with a fixed symmetric window."""
    if window <= 1:
        return y.copy()
    half = window // 2
    out = np.empty_like(y)
    for i in range(y.size):
        sl = slice(max(0, i - half), min(y.size, i + half + 1))
        coeffs = np.polyfit(x[sl], y[sl], 1)
        out[i] = np.polyval(coeffs, x[i])
    return out


def estimate_pcf(config: SimConfig, radii=None, workers: int = 1, smooth_window: int = 3):
    """Pair correlation estimate: the normalized derivative of the mean
    interferer count, taken as annulus averages and smoothed by local
    linear regression.  Returns (midpoints, g_hat)."""
    if radii is None:
        scale = 1.0 / math.sqrt(config.params.lambda_b)
        radii = np.linspace(0.0, 2.0 * scale, 41)
    radii = np.asarray(radii, dtype=float)
    cm = estimate_interferer_counts(config, radii, workers=workers)
    norm = config.params.n_users * config.params.lambda_b
    diff = np.diff(cm.mean) / norm
    area = math.pi * np.diff(radii**2)
    mids = 0.5 * (radii[:-1] + radii[1:])
    g_hat = diff / area
    return mids, _local_linear(mids, g_hat, smooth_window)


def estimate_second_moment(config: SimConfig, radii, workers: int = 1):
    """Second moment measure of the interferer count and its normalized root
    rho(r) = sqrt(E[count^2]) / (N lam).  Returns (radii, mean_sq, rho)."""
    cm = estimate_interferer_counts(config, radii, workers=workers)
    rho = np.sqrt(cm.mean_sq) / (config.params.n_users * config.params.lambda_b)
    return cm.radii, cm.mean_sq, rho


def _csp_rows_chunk(spec, args):
    config, lo, hi = args
    thetas = np.asarray(spec)
    rows = []
    if config.direction == DOWNLINK:
        c_grid = _c_by_rank(config.betas, thetas)
    for index in range(lo, hi):
        real = sample_realization(config, index)
        if config.direction == UPLINK:
            rows.append((index, 0, _csp_uplink_all_ranks(real, thetas, config.params).ravel()))
        else:
            rows.append((index, real.rank,
                         _csp_downlink_own_rank(real, c_grid, thetas, config.params)))
    return rows


def csp_table(config: SimConfig, workers: int = 1):
    """Per-realization CSPs over config.theta_grid, for optional CSV export.

    uplink rows: (index, 0, csp for every (rank, theta) flattened rank-major);
    downlink rows: (index, rank, csp at the user's own rank per theta).
    """
    if not config.theta_grid:
        raise ValueError("config.theta_grid is empty")
    worker = partial(_csp_rows_chunk, tuple(config.theta_grid))
    parts = _map_chunks(worker, config, workers)
    return [row for part in parts for row in part]


def run_manifest(config: SimConfig, command: str | None = None, extra: dict | None = None) -> dict:
    """Reproducibility record: config, seed, hash, versions, provenance."""
    digest = config.config_hash()
    manifest = {
        "command": command,
        "config": config.as_dict(),
        "config_hash": digest,
        "seed": config.seed,
        "versions": {
            "noma_meta": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": sys.version.split()[0],
        },
        "provenance": f"noma-meta-{__version__}+cfg.{digest[:12]}.seed{config.seed}",
    }
    if extra:
        manifest.update(extra)
    return manifest
