"""Lower and upper derivates of distances Lipschitz with respect to d_cc.

The derivate of d at x along a layer-1 direction v is the limiting
behaviour of the quotients d(y, y h_t e^v)/t over y near x.  The limits
are realized as sampled extremes over certified CC balls on a geometric
t-grid, extrapolated by a tail fit; reports carry both the raw per-t
data and the fit so the estimator is auditable.

Also here: the End/Box samplers (a box is an end set flowed along a
radial geodesic) and the spread estimate quantifying how a box's end
stays together under the flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, LipschitzViolation
from .group import CarnotGroup
from .metric import (
    CCSpace,
    HorizontalMetric,
    OptimizerBudget,
    _lower_bounds_batch,
    _optimize_controls,
    cc_upper_batch,
    path_endpoints_batch,
)
from .measure import MEMBERSHIP_BUDGET, _ball_point, enclosing_box_halfwidths
from .measure import certified_upper_cheap


# -- Lipschitz distance functions ------------------------------------------


@dataclass
class LipschitzDistance:
    """A two-point distance function declared L-Lipschitz against d_cc.

    ``evaluator`` maps two (B, n) coordinate arrays to (B,) nonnegative
    reals and must be pure.  The declared constant is a contract checked
    by ``validate`` and during derivate sampling, not a derived fact.
    """

    name: str
    evaluator: object
    L: float
    tol: float = 1e-9

    def __call__(self, xs, ys):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        return np.asarray(self.evaluator(xs, ys), dtype=float)

    def validate(self, space: CCSpace, samples=64, seed=0, scale=1.0):
        """Check symmetry, triangle inequality, Lipschitz bound on samples.

        Raises LipschitzViolation naming the first offending pair.
        """
        rng = np.random.default_rng(seed)
        n = space.algebra.dim
        xs = scale * rng.standard_normal((samples, n))
        ys = scale * rng.standard_normal((samples, n))
        zs = scale * rng.standard_normal((samples, n))
        dxy = self(xs, ys)
        dyx = self(ys, xs)
        bad = np.abs(dxy - dyx) > self.tol * (1 + np.abs(dxy))
        if np.any(bad):
            i = int(np.argmax(bad))
            raise LipschitzViolation(
                f"{self.name}: symmetry violated, d(x,y)={dxy[i]} "
                f"d(y,x)={dyx[i]}", pair=(xs[i], ys[i]),
            )
        dxz = self(xs, zs)
        dzy = self(zs, ys)
        bad = dxy > dxz + dzy + 1e-9 * (1 + dxy)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise LipschitzViolation(
                f"{self.name}: triangle inequality violated by "
                f"{dxy[i] - dxz[i] - dzy[i]}", pair=(xs[i], ys[i]),
            )
        deltas = space.group.bch(-xs, ys)
        cc_up = certified_upper_cheap(space, deltas)
        bad = dxy > self.L * cc_up + self.tol
        if np.any(bad):
            i = int(np.argmax(bad))
            raise LipschitzViolation(
                f"{self.name}: Lipschitz bound violated, d={dxy[i]} > "
                f"{self.L} * {cc_up[i]}", pair=(xs[i], ys[i]),
            )
        return True


def _canonical_deltas(space, xs, ys):
    """Displacements x^{-1}y, sign-canonicalized so d(x,y) = d(y,x)."""
    deltas = space.group.bch(-np.atleast_2d(xs), np.atleast_2d(ys))
    # flip by the sign of the first coordinate of largest magnitude so
    # delta and its inverse -delta evaluate identically
    lead = np.take_along_axis(
        deltas, np.argmax(np.abs(deltas), axis=-1)[:, None], axis=-1
    )[:, 0]
    sign = np.where(lead < 0, -1.0, 1.0)
    return deltas * sign[:, None]


def cc_distance(space: CCSpace, ballbox=None, budget=None, seed=0,
                use="midpoint") -> LipschitzDistance:
    """d_cc itself as a LipschitzDistance (L = 1).

    ``use`` picks the reported value from the certified bracket:
    "midpoint" (default), "upper", or "lower".
    """
    if budget is None:
        budget = MEMBERSHIP_BUDGET
    if use not in ("midpoint", "upper", "lower"):
        raise InputError(f"unknown cc_distance mode {use!r}")

    def evaluator(xs, ys):
        deltas = _canonical_deltas(space, xs, ys)
        lower, _ = _lower_bounds_batch(space, deltas, ballbox)
        if use == "lower":
            return lower
        upper, _ = cc_upper_batch(space, deltas, budget=budget, seed=seed)
        upper = np.minimum(upper, certified_upper_cheap(space, deltas))
        if use == "upper":
            return upper
        return 0.5 * (np.minimum(lower, upper) + upper)

    return LipschitzDistance(name=f"cc-{use}", evaluator=evaluator, L=1.0,
                             tol=1e-6)


class _CompletionSpace:
    """A CCSpace look-alike whose horizontal bundle is the whole algebra.

    Used to optimize Riemannian paths of a left-invariant completion with
    the same machinery as horizontal paths; the grading is declared
    orthogonal with unit weights above layer 1.
    """

    def __init__(self, space: CCSpace):
        n = space.algebra.dim
        gram = np.eye(n)
        d1 = space.d1
        gram[:d1, :d1] = space.metric.gram
        self.group = space.group
        self.algebra = space.algebra
        self.metric = HorizontalMetric(gram)
        self.d1 = n

    def embed_horizontal(self, u):
        return np.asarray(u, dtype=float)

    def homogeneous_norm(self, x):
        return np.linalg.norm(np.asarray(x, dtype=float), axis=-1)


def riemannian_upper_batch(comp: _CompletionSpace, targets, budget=None,
                           seed=0):
    """Upper bounds on the completion's Riemannian distance from identity.

    Same penalty optimizer as the CC case but with full-dimensional
    controls; the final defect is closed by a single straight segment, so
    the bound is the exact length of a feasible broken path.
    """
    if budget is None:
        budget = OptimizerBudget(segments=8, starts=1, max_iter=120,
                                 endpoint_tol=1e-8)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    B = targets.shape[0]
    rng = np.random.default_rng(seed)
    m = budget.segments
    straight = np.repeat((targets / m)[:, None, :], m, axis=1)
    controls = _optimize_controls(comp, targets, straight, budget)
    endpoints = path_endpoints_batch(comp, controls)
    defect = comp.group.bch(-endpoints, targets)
    lengths = np.sum(comp.metric.norm(controls), axis=-1)
    return lengths + comp.metric.norm(defect)


def riemannian_distance(space: CCSpace, budget=None, seed=0) -> LipschitzDistance:
    """Distance of the left-invariant Riemannian completion (L = 1).

    Approximate from above by optimized broken paths; 1-Lipschitz against
    d_cc since horizontal paths keep their length in the completion.
    """
    comp = _CompletionSpace(space)

    def evaluator(xs, ys):
        deltas = _canonical_deltas(space, xs, ys)
        return riemannian_upper_batch(comp, deltas, budget=budget, seed=seed)

    return LipschitzDistance(name="riemannian", evaluator=evaluator, L=1.0,
                             tol=1e-6)


def snowflake_distance(space: CCSpace, ballbox=None, budget=None,
                       seed=0) -> LipschitzDistance:
    """Negative control: sqrt of d_cc with a (false) declared L = 1.

    A snowflaked metric is not Lipschitz against d_cc at small scales;
    validation and derivate sampling detect this and raise.
    """
    base = cc_distance(space, ballbox=ballbox, budget=budget, seed=seed)

    def evaluator(xs, ys):
        return np.sqrt(base.evaluator(xs, ys))

    return LipschitzDistance(name="snowflake", evaluator=evaluator, L=1.0,
                             tol=1e-6)


def abelianized_distance(space: CCSpace) -> LipschitzDistance:
    """Pullback of the Euclidean distance through abelianization (L = 1).

    A degenerate but genuinely 1-Lipschitz pseudo-distance; its derivate
    along horizontal v is |v| exactly.
    """

    def evaluator(xs, ys):
        deltas = space.group.bch(-np.atleast_2d(xs), np.atleast_2d(ys))
        return space.metric.norm(deltas[..., : space.d1])

    return LipschitzDistance(name="abelianized", evaluator=evaluator, L=1.0)


# -- End / Box samplers ----------------------------------------------------


@dataclass
class BoxSpec:
    """The box construction: an end set flowed along a radial geodesic.

    End(x, v, epsilon): points x e^w with w_1 perpendicular to v in the
    horizontal metric, |w_1| < epsilon, and |w_j| < epsilon^j per layer.
    Box(x, v, epsilon): end points flowed along s -> (.) h_s e^v, s in
    [0, 1].  The height enters through v itself (direction t*v, radius
    t*epsilon gives the height-t box).
    """

    center: np.ndarray
    direction: np.ndarray  # layer-1 vector, full coordinates
    epsilon: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.direction = np.asarray(self.direction, dtype=float)
        if self.epsilon <= 0:
            raise InputError("box epsilon must be positive")


def _end_frame(space, v):
    """Orthonormal basis (rows) of the orthocomplement of v in layer 1."""
    d1 = space.d1
    v1 = np.asarray(v, dtype=float)[:d1]
    nv = float(space.metric.norm(v1))
    if nv == 0:
        raise InputError("box direction must be a nonzero layer-1 vector")
    basis = [v1 / nv]
    for e in np.eye(d1):
        w = e.copy()
        for b in basis:
            w = w - space.metric.inner(b, w) * b
        n = float(space.metric.norm(w))
        if n > 1e-10:
            basis.append(w / n)
        if len(basis) == d1:
            break
    return np.array(basis[1:])


def sample_end(space: CCSpace, spec: BoxSpec, count, rng):
    """Uniform samples from End(center, direction, epsilon), (B, n)."""
    a = space.algebra
    if np.any(np.abs(spec.direction[space.d1:]) > 0):
        raise InputError("box direction must lie in layer 1")
    frame = _end_frame(space, spec.direction)
    w = np.zeros((count, a.dim))
    w[:, : space.d1] = _ball_point(rng, count, space.d1 - 1,
                                   spec.epsilon) @ frame
    for i in range(2, a.num_layers + 1):
        sl = a.layer_slice(i)
        w[:, sl] = _ball_point(rng, count, a.layer_dims[i - 1],
                               spec.epsilon**i)
    return space.group.bch(spec.center, w)


def sample_box(space: CCSpace, spec: BoxSpec, count, rng):
    """Uniform-in-parameters samples from Box(center, direction, epsilon)."""
    ends = sample_end(space, spec, count, rng)
    s = rng.uniform(0.0, 1.0, (count, 1))
    return space.group.bch(ends, s * spec.direction[None, :])


def sample_ball(space: CCSpace, center, radius, count, rng, ballbox,
                max_tries=200):
    """Rejection samples from the certified CC ball B(center, radius).

    Candidates are uniform in the enclosing box and accepted when the
    cheap certified upper bound is below the radius, so every returned
    point genuinely lies in the ball (the sample leans inward).
    """
    center = space.algebra.vector(center)
    half = enclosing_box_halfwidths(space, ballbox, radius)
    out = []
    have = 0
    for _ in range(max_tries):
        cand = rng.uniform(-1.0, 1.0, (max(4 * count, 256),
                                       space.algebra.dim)) * half
        upper = certified_upper_cheap(space, cand)
        good = cand[upper <= radius]
        if len(good):
            out.append(good)
            have += len(good)
        if have >= count:
            break
    if have < count:
        raise InputError(
            f"ball rejection sampling starved at radius {radius}"
        )
    pts = np.concatenate(out, axis=0)[:count]
    return space.group.bch(center, pts)


# -- derivates -------------------------------------------------------------


@dataclass
class DerivateEstimate:
    """Sampled difference quotients of d along v, with tail extrapolation."""

    x: np.ndarray
    v: np.ndarray
    rows: list  # (t, inf_quotient, sup_quotient, samples)
    rho_lower: float
    rho_upper: float
    fit_stderr_lower: float
    fit_stderr_upper: float
    distance_name: str = ""

    def as_dict(self):
        return {
            "distance": self.distance_name,
            "x": self.x.tolist(),
            "v": self.v.tolist(),
            "rows": [list(r) for r in self.rows],
            "rho_lower": self.rho_lower,
            "rho_upper": self.rho_upper,
            "fit_stderr_lower": self.fit_stderr_lower,
            "fit_stderr_upper": self.fit_stderr_upper,
        }


def default_t_grid(levels=10, t_max=1.0):
    """Geometric grid of ratio 0.5, decreasing, floored at 1e-5."""
    grid = t_max * 0.5 ** np.arange(levels)
    return grid[grid >= 1e-5]


def _tail_fit(ts, qs):
    """Intercept of a linear tail fit q = rho + b t over the smallest ts."""
    ts = np.asarray(ts, dtype=float)
    qs = np.asarray(qs, dtype=float)
    order = np.argsort(ts)
    k = max(3, len(ts) // 2)
    ts, qs = ts[order][:k], qs[order][:k]
    A = np.stack([np.ones_like(ts), ts], axis=1)
    coef, res, _, _ = np.linalg.lstsq(A, qs, rcond=None)
    dof = max(len(ts) - 2, 1)
    sigma2 = float(res[0]) / dof if len(res) else 0.0
    cov = sigma2 * np.linalg.inv(A.T @ A)
    return float(coef[0]), float(np.sqrt(max(cov[0, 0], 0.0)))


def derivate(space: CCSpace, d: LipschitzDistance, x, v, t_grid=None,
             samples_per_t=64, seed=0, ballbox=None) -> DerivateEstimate:
    """Sampled lower/upper derivate of d at x along the layer-1 vector v.

    Per t: y is drawn from the certified ball B(x, t) and the quotient
    d(y, y h_t e^v)/t recorded; extremes per level, tail-extrapolated.
    The radial geodesic gives d_cc(y, y h_t e^v) = t |v| exactly, so the
    declared Lipschitz constant is enforced on every sampled pair.
    """
    x = space.algebra.vector(x)
    v = space.algebra.vector(v)
    if np.any(np.abs(v[space.d1:]) > 0):
        raise InputError("derivate direction must lie in layer 1")
    if t_grid is None:
        t_grid = default_t_grid()
    t_grid = np.asarray(sorted(t_grid, reverse=True), dtype=float)
    if np.any(t_grid < 1e-5):
        raise InputError("t grid entries must stay above 1e-5")
    if ballbox is None:
        from .metric import BallBoxConstant
        ballbox = BallBoxConstant(A=2.0, samples=0, seed=0, safety=1.0,
                                  max_ratio=2.0)
    vnorm = float(space.metric.norm(v[: space.d1]))
    rng = np.random.default_rng(seed)
    rows = []
    for t in t_grid:
        ys = sample_ball(space, x, t, samples_per_t, rng, ballbox)
        ys2 = space.group.bch(ys, t * v[None, :])
        q = d(ys, ys2) / t
        limit = d.L * vnorm + d.tol / t
        if np.any(q > limit):
            i = int(np.argmax(q))
            raise LipschitzViolation(
                f"{d.name}: quotient {q[i]:.6g} exceeds L*|v| = "
                f"{d.L * vnorm:.6g} at t={t:.3g}",
                pair=(ys[i], ys2[i]),
            )
        rows.append((float(t), float(np.min(q)), float(np.max(q)),
                     int(samples_per_t)))
    ts = [r[0] for r in rows]
    rho_lo, se_lo = _tail_fit(ts, [r[1] for r in rows])
    rho_hi, se_hi = _tail_fit(ts, [r[2] for r in rows])
    if vnorm == 0:
        rho_lo = rho_hi = 0.0
    return DerivateEstimate(
        x=x, v=v, rows=rows,
        rho_lower=rho_lo, rho_upper=rho_hi,
        fit_stderr_lower=se_lo, fit_stderr_upper=se_hi,
        distance_name=d.name,
    )


def check_homogeneity(base: DerivateEstimate, scaled: dict) -> dict:
    """Residuals of rho(x, tau v) = |tau| rho(x, v) across a tau map.

    ``scaled`` maps tau to the DerivateEstimate for direction tau*v.
    Also reports the symmetry residual at tau = -1 when present.
    """
    rho_base = 0.5 * (base.rho_lower + base.rho_upper)
    report = {"base_rho": rho_base, "residuals": {}}
    for tau, est in scaled.items():
        rho = 0.5 * (est.rho_lower + est.rho_upper)
        report["residuals"][tau] = abs(rho - abs(tau) * rho_base)
    if -1 in scaled or -1.0 in scaled:
        est = scaled.get(-1, scaled.get(-1.0))
        rho = 0.5 * (est.rho_lower + est.rho_upper)
        report["symmetry_residual"] = abs(rho - rho_base)
    return report


# -- spread ----------------------------------------------------------------


@dataclass
class SpreadReport:
    """Empirical sup of the flowed end-set spread, per (epsilon, t)."""

    rows: list  # (epsilon, t, sup_distance, sup_over_t)
    samples: int
    seed: int

    def sup_over_t(self, epsilon):
        return [(t, s) for e, t, _, s in self.rows if e == epsilon]

    def c_of_epsilon(self):
        """Mean of sup/t across the t-grid, per epsilon (decreasing)."""
        eps = sorted({r[0] for r in self.rows}, reverse=True)
        return [(e, float(np.mean([r[3] for r in self.rows if r[0] == e])))
                for e in eps]


def spread_estimate(space: CCSpace, v, epsilon_grid, t_grid, samples=64,
                    seed=0, budget=None) -> SpreadReport:
    """sup over z in End(y, tv, t eps) of d_cc(y h_t e^v, z h_t e^v) / t.

    By left invariance the base y drops out; the distance reduces to
    d_cc(e^0, (h_t e^v)^{-1} z' h_t e^v) with z' the end displacement, so
    each cell is a batch of certified upper bounds on conjugated points.
    """
    v = space.algebra.vector(v)
    if np.any(np.abs(v[space.d1:]) > 0):
        raise InputError("spread direction must lie in layer 1")
    if budget is None:
        budget = MEMBERSHIP_BUDGET
    rng = np.random.default_rng(seed)
    rows = []
    for eps in epsilon_grid:
        for t in t_grid:
            spec = BoxSpec(center=np.zeros(space.algebra.dim),
                           direction=t * v, epsilon=t * eps)
            ends = sample_end(space, spec, samples, rng)
            disp = space.group.conjugate(t * v[None, :], ends)
            upper, _ = cc_upper_batch(space, disp, budget=budget,
                                      seed=seed + 1)
            sup = float(np.max(upper))
            rows.append((float(eps), float(t), sup, sup / float(t)))
    return SpreadReport(rows=rows, samples=samples, seed=seed)
