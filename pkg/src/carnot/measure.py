"""Volume growth and Hausdorff dimension experiments.

The reference measure is Lebesgue measure in exponential coordinates,
which is a Haar measure for a simply connected nilpotent group.  CC-ball
volumes are Monte-Carlo estimates over an enclosing coordinate box built
from the calibrated ball-box constant; membership uses the certified
upper bound, with the certified lower bound recorded to bracket the
misclassification band.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .algebra import GradedAlgebra
from .errors import InputError
from .metric import (
    BallBoxConstant,
    CCSpace,
    OptimizerBudget,
    _lower_bounds_batch,
    cc_upper_batch,
    close_defect_batch,
    path_endpoints_batch,
)

# Default budget for membership tests: cheap, certified via ladder closure.
MEMBERSHIP_BUDGET = OptimizerBudget(
    segments=8,
    starts=1,
    endpoint_tol=1e-6,
    penalty_init=1e4,
    penalty_growth=100.0,
    penalty_max=1e10,
    max_iter=120,
    gtol=1e-9,
    ftol=1e-14,
)


def homogeneous_dimension(a: GradedAlgebra) -> int:
    """Q = sum_i i * dim(layer i); the Hausdorff dimension of d_cc."""
    return int(sum((i + 1) * d for i, d in enumerate(a.layer_dims)))


def dilation_jacobian_exponent(a: GradedAlgebra) -> int:
    """Exponent of det(dh_t) = t^Q, read off the diagonal layer weights."""
    return int(np.sum(a.layer_of))


@dataclass
class VolumeEstimate:
    """Monte-Carlo Lebesgue measure of one CC ball."""

    radius: float
    volume: float
    stderr: float
    samples: int
    seed: int
    band_fraction: float  # samples with lower <= r < upper, per ball sample

    def as_row(self):
        return [self.radius, self.volume, self.stderr, self.samples, self.seed]


@dataclass
class DimensionFit:
    """Least-squares log-log fit of volume against radius."""

    slope: float
    intercept: float
    r_squared: float
    radii: tuple  # (min, max)

    def as_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "radius_min": self.radii[0],
            "radius_max": self.radii[1],
        }


def enclosing_box_halfwidths(space: CCSpace, ballbox: BallBoxConstant, r):
    """Per-coordinate half-widths of a box certified to contain B_cc(e^0, r).

    d_cc <= r forces the layer-i norm below (A r)^i for i >= 2; layer 1
    is bounded by r itself through the exact abelianization bound, with
    the metric norm converted to coordinate bounds via its smallest
    eigenvalue.
    """
    a = space.algebra
    half = np.empty(a.dim)
    half[a.layer_slice(1)] = r / np.sqrt(space.metric._min_eig)
    for i in range(2, a.num_layers + 1):
        half[a.layer_slice(i)] = (ballbox.A * r) ** i
    return half


def certified_upper_cheap(space: CCSpace, points):
    """Vectorized certified upper bound: straight segment plus ladder loops."""
    points = np.atleast_2d(space.algebra.vector(points))
    u1 = points[:, : space.d1]
    start = space.embed_horizontal(u1)
    extra, _, res, _ = close_defect_batch(space, start, points)
    bad = res > 1e-9 * (1 + np.linalg.norm(points, axis=-1))
    out = space.metric.norm(u1) + extra
    out[bad] = np.inf
    return out


def ball_volume(space: CCSpace, ballbox: BallBoxConstant, r, samples,
                seed=0, budget=None) -> VolumeEstimate:
    """Monte-Carlo Lebesgue volume of the CC ball of radius r at identity."""
    if ballbox is None:
        raise InputError("ball_volume requires a calibrated ball-box constant")
    samples = int(samples)
    if samples <= 0:
        raise InputError("sample budget must be positive")
    r = float(r)
    if r <= 0:
        raise InputError("radius must be positive")
    if budget is None:
        budget = MEMBERSHIP_BUDGET
    rng = np.random.default_rng(seed)
    half = enclosing_box_halfwidths(space, ballbox, r)
    box_vol = float(np.prod(2 * half))
    pts = rng.uniform(-1.0, 1.0, (samples, space.algebra.dim)) * half

    lower, _ = _lower_bounds_batch(space, pts, ballbox)
    upper = np.full(samples, np.inf)
    undecided = lower <= r
    if np.any(undecided):
        cheap = certified_upper_cheap(space, pts[undecided])
        upper[undecided] = cheap
        need = undecided.copy()
        need[undecided] = cheap > r
        if np.any(need):
            opt, _ = cc_upper_batch(
                space, pts[need], budget=budget, seed=int(rng.integers(2**32))
            )
            upper[need] = np.minimum(upper[need], opt)
    member = upper <= r
    p = float(np.mean(member))
    volume = box_vol * p
    stderr = box_vol * float(np.sqrt(max(p * (1 - p), 0.0) / samples))
    n_member = int(np.sum(member))
    band = int(np.sum((lower <= r) & (upper > r)))
    band_fraction = band / n_member if n_member else np.inf
    return VolumeEstimate(
        radius=r,
        volume=volume,
        stderr=stderr,
        samples=samples,
        seed=seed,
        band_fraction=band_fraction,
    )


def fit_dimension(estimates) -> DimensionFit:
    """Slope of log(volume) against log(radius): the empirical dimension."""
    estimates = list(estimates)
    if len(estimates) < 3:
        raise InputError("dimension fit needs at least 3 radii")
    radii = np.array([e.radius for e in estimates])
    vols = np.array([e.volume for e in estimates])
    if np.max(radii) / np.min(radii) < 4.0 - 1e-9:
        raise InputError("dimension fit needs radii spanning a factor >= 4")
    if np.any(vols <= 0):
        raise InputError("dimension fit needs positive volume estimates")
    x = np.log(radii)
    y = np.log(vols)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return DimensionFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=max(0.0, min(1.0, r2)),
        radii=(float(np.min(radii)), float(np.max(radii))),
    )


def dimension_experiment(space: CCSpace, ballbox, radii, samples_per_radius,
                         seed=0, budget=None):
    """Ball volumes across a radius sweep plus the dimension fit."""
    rows = []
    for idx, r in enumerate(radii):
        rows.append(
            ball_volume(
                space, ballbox, r, samples_per_radius,
                seed=seed + idx, budget=budget,
            )
        )
    return rows, fit_dimension(rows)


# -- box vs ball density ---------------------------------------------------


def _ball_point(rng, count, dim, radius):
    """Uniform samples in a Euclidean ball (dim may be 0)."""
    if dim == 0:
        return np.zeros((count, 0))
    g = rng.standard_normal((count, dim))
    g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
    u = rng.uniform(0.0, 1.0, (count, 1)) ** (1.0 / dim)
    return radius * g * u


def _unit_ball_volume(dim):
    return np.pi ** (dim / 2) / gamma_fn(dim / 2 + 1)


def box_volume(space: CCSpace, v, epsilon, samples, seed=0):
    """Monte-Carlo Lebesgue volume of Box(e^0, v, epsilon).

    The box is the image of a product of per-layer balls and a unit
    interval under (w, s) -> e^w e^{s v}; the volume integral is the mean
    Jacobian determinant over the parameter domain.
    """
    a = space.algebra
    v = a.vector(v)
    if np.any(np.abs(v[space.d1:]) > 0):
        raise InputError("box direction must lie in layer 1")
    rng = np.random.default_rng(seed)
    frame = _orthocomplement_frame(space, v[: space.d1])
    dims = [space.d1 - 1] + [a.layer_dims[i] for i in range(1, a.num_layers)]
    radii = [float(epsilon) ** (i + 1) for i in range(a.num_layers)]
    domain_vol = 1.0
    for d, rad in zip(dims, radii):
        domain_vol *= _unit_ball_volume(d) * rad**d
    n_params = sum(dims) + 1

    coords = [ _ball_point(rng, samples, d, rad) for d, rad in zip(dims, radii) ]
    s = rng.uniform(0.0, 1.0, (samples, 1))
    params = np.concatenate(coords + [s], axis=1)

    def phi(par):
        w = np.zeros((par.shape[0], a.dim))
        ofs = 0
        w1 = par[:, : dims[0]] @ frame
        w[:, : space.d1] = w1
        ofs = dims[0]
        for i in range(1, a.num_layers):
            sl = a.layer_slice(i + 1)
            w[:, sl] = par[:, ofs : ofs + dims[i]]
            ofs += dims[i]
        sv = par[:, -1:] * v[None, :]
        return space.group.bch(w, sv)

    # central differences for the Jacobian of phi, batched over samples
    h = 1e-6 * max(float(epsilon), 1.0)
    jac = np.empty((samples, a.dim, n_params))
    for j in range(n_params):
        dp = np.zeros(n_params)
        dp[j] = h
        jac[:, :, j] = (phi(params + dp) - phi(params - dp)) / (2 * h)
    if n_params == a.dim:
        dets = np.abs(np.linalg.det(jac))
    else:
        gramians = np.einsum("bij,bik->bjk", jac, jac)
        dets = np.sqrt(np.abs(np.linalg.det(gramians)))
    mean = float(np.mean(dets))
    stderr = float(np.std(dets) / np.sqrt(samples))
    return domain_vol * mean, domain_vol * stderr


def _orthocomplement_frame(space, v1):
    """Rows: an orthonormal (w.r.t. the metric) basis of v1-perp in layer 1."""
    d1 = space.d1
    norm_v = space.metric.norm(v1)
    if norm_v == 0:
        raise InputError("box direction must be nonzero")
    basis = [np.asarray(v1, dtype=float) / norm_v]
    for e in np.eye(d1):
        w = e.copy()
        for b in basis:
            w = w - space.metric.inner(b, w) * b
        n = space.metric.norm(w)
        if n > 1e-10:
            basis.append(w / n)
        if len(basis) == d1:
            break
    return np.array(basis[1:])


@dataclass
class DensityReport:
    """Box-to-ball volume ratios across a height sweep."""

    rows: list  # (t, box_volume, ball_volume, ratio)
    enclosing_radius_factor: float  # R with Box(e^0, tv, t beta) in B(e^0, tR)

    @property
    def min_ratio(self):
        return min(r[3] for r in self.rows)

    @property
    def max_ratio(self):
        return max(r[3] for r in self.rows)


def box_ball_density(space: CCSpace, ballbox, v, beta, t_values, samples,
                     seed=0, budget=None) -> DensityReport:
    """Ratio vol(Box(e^0, tv, t beta)) / vol(B_cc(e^0, tR)) per height t."""
    a = space.algebra
    v = a.vector(v)
    rng = np.random.default_rng(seed)
    t_values = sorted(float(t) for t in t_values)

    # enclosing radius factor from sampled box points at the largest height
    t_top = t_values[-1]
    pts = _sample_box_points(space, t_top * v, t_top * beta, 256, rng)
    upper = certified_upper_cheap(space, pts)
    finite = upper[np.isfinite(upper)]
    R = float(np.max(finite)) / t_top * 1.05

    rows = []
    for idx, t in enumerate(t_values):
        bvol, _ = box_volume(space, t * v, t * beta, samples,
                             seed=seed + 101 * idx)
        ball = ball_volume(space, ballbox, t * R, samples,
                           seed=seed + 101 * idx + 1, budget=budget)
        rows.append((t, bvol, ball.volume, bvol / ball.volume))
    return DensityReport(rows=rows, enclosing_radius_factor=R)


def _sample_box_points(space, v, epsilon, count, rng):
    a = space.algebra
    frame = _orthocomplement_frame(space, v[: space.d1])
    w = np.zeros((count, a.dim))
    w1 = _ball_point(rng, count, space.d1 - 1, epsilon) @ frame
    w[:, : space.d1] = w1
    for i in range(1, a.num_layers):
        sl = a.layer_slice(i + 1)
        w[:, sl] = _ball_point(rng, count, a.layer_dims[i], epsilon ** (i + 1))
    s = rng.uniform(0.0, 1.0, (count, 1))
    return space.group.bch(w, s * v[None, :])
