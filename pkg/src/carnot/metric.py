"""Carnot-Caratheodory distance estimation with certified two-sided bounds.

Upper bounds come from optimized horizontal paths with piecewise-constant
left-invariant controls; a piecewise-constant path integrates exactly
through the group product, so the only approximation in the story is the
optimizer's endpoint defect, which is closed exactly by an explicit
commutator-ladder path whose length is added to the bound.

Lower bounds come from the 1-Lipschitz abelianization quotient (exact)
and from an empirically calibrated ball-box constant (flagged as such).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .algebra import GradedAlgebra
from .errors import CalibrationError, InputError, OptimizerFailure, UnreachableError
from .group import CarnotGroup

# Coordinate residual below which an endpoint counts as exact.
EXACT_TOL = 1e-12


class HorizontalMetric:
    """Inner product on the layer-1 coordinates."""

    def __init__(self, gram):
        gram = np.asarray(gram, dtype=float)
        if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
            raise InputError("gram matrix must be square")
        if np.max(np.abs(gram - gram.T)) > 1e-12 * max(1.0, np.max(np.abs(gram))):
            raise InputError("gram matrix must be symmetric")
        eigs = np.linalg.eigvalsh(gram)
        if eigs[0] <= 0:
            raise InputError("gram matrix must be positive definite")
        self.gram = gram
        self.gram.setflags(write=False)
        self._min_eig = float(eigs[0])

    @classmethod
    def standard(cls, d1):
        return cls(np.eye(d1))

    @property
    def d1(self):
        return self.gram.shape[0]

    def norm(self, u):
        u = np.asarray(u, dtype=float)
        return np.sqrt(np.einsum("...i,ij,...j->...", u, self.gram, u))

    def inner(self, u, v):
        return np.einsum("...i,ij,...j->...", u, self.gram, v)


class CCSpace:
    """A Carnot group together with a horizontal metric."""

    def __init__(self, algebra, metric=None):
        if isinstance(algebra, CarnotGroup):
            self.group = algebra
        elif isinstance(algebra, GradedAlgebra):
            self.group = CarnotGroup(algebra)
        else:
            raise InputError(f"expected GradedAlgebra or CarnotGroup, got {algebra!r}")
        self.algebra = self.group.algebra
        d1 = self.algebra.layer_dims[0]
        if metric is None:
            metric = HorizontalMetric.standard(d1)
        if metric.d1 != d1:
            raise InputError(
                f"metric dimension {metric.d1} != layer-1 dimension {d1}"
            )
        self.metric = metric
        self._ladder = None

    @property
    def d1(self):
        return self.algebra.layer_dims[0]

    def embed_horizontal(self, u):
        """Lift layer-1 coordinates to full exponential coordinates."""
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape[:-1] + (self.algebra.dim,))
        out[..., : self.d1] = u
        return out

    def horizontal_part(self, x):
        return self.algebra.vector(x)[..., : self.d1]

    def layer_norms(self, x):
        """Per-layer norms (metric norm on layer 1, Euclidean above)."""
        x = self.algebra.vector(x)
        out = [self.metric.norm(x[..., : self.d1])]
        for i in range(2, self.algebra.num_layers + 1):
            out.append(np.linalg.norm(x[..., self.algebra.layer_slice(i)], axis=-1))
        return np.stack(out, axis=-1)

    def homogeneous_norm(self, x):
        """sum_i |x_i|^(1/i), the layer-weighted coordinate norm."""
        norms = self.layer_norms(x)
        exps = 1.0 / np.arange(1, self.algebra.num_layers + 1)
        return np.sum(norms ** exps, axis=-1)

    def ladder(self):
        if self._ladder is None:
            self._ladder = LadderPlan(self)
        return self._ladder


# -- horizontal paths ------------------------------------------------------


@dataclass
class ControlPath:
    """Piecewise-constant horizontal control sequence.

    Segment j flows for ``durations[j]`` along the left-invariant field
    with layer-1 value ``controls[j]``; the endpoint is the basepoint
    left-multiplied by the exact product of the segment exponentials.
    """

    durations: np.ndarray  # (m,)
    controls: np.ndarray   # (m, d1)
    basepoint: np.ndarray  # (n,)

    def __post_init__(self):
        self.durations = np.atleast_1d(np.asarray(self.durations, dtype=float))
        controls = np.asarray(self.controls, dtype=float)
        if len(self.durations) == 0:
            controls = controls.reshape(0, controls.shape[-1]
                                        if controls.ndim else 0)
        else:
            controls = controls.reshape(len(self.durations), -1)
        self.controls = controls
        self.basepoint = np.asarray(self.basepoint, dtype=float)
        if np.any(self.durations < 0):
            raise InputError("segment durations must be positive")

    @property
    def num_segments(self):
        return len(self.durations)

    def length(self, space: CCSpace):
        if self.num_segments == 0:
            return 0.0
        return float(np.sum(self.durations * space.metric.norm(self.controls)))

    def endpoint(self, space: CCSpace):
        return path_endpoint(space, self)

    def constant_speed(self):
        """Reparametrize to constant speed; endpoint and length unchanged.

        Each segment only depends on duration * control, so fixing the
        product and equalizing the speeds is a pure reparametrization.
        """
        if self.num_segments == 0:
            return self
        disp = self.durations[:, None] * self.controls
        sizes = np.linalg.norm(disp, axis=1)
        total = np.sum(sizes)
        if total == 0:
            return self
        new_dur = sizes / total * np.sum(self.durations)
        speeds = np.where(new_dur > 0, 1.0 / np.where(new_dur > 0, new_dur, 1.0), 0.0)
        new_controls = disp * speeds[:, None]
        keep = new_dur > 0
        return ControlPath(new_dur[keep], new_controls[keep], self.basepoint)

    def reversed(self, space: CCSpace):
        """The same trace run backwards, based at the endpoint."""
        return ControlPath(
            self.durations[::-1].copy(),
            -self.controls[::-1].copy(),
            self.endpoint(space),
        )


def path_endpoint(space: CCSpace, path: ControlPath):
    """basepoint * prod_j exp(duration_j * control_j), left to right."""
    out = path.basepoint
    if path.num_segments == 0:
        return np.array(out, dtype=float)
    steps = space.embed_horizontal(path.durations[:, None] * path.controls)
    for s in steps:
        out = space.group.bch(out, s)
    return out


def radial_geodesic(space: CCSpace, n, v, t):
    """n * exp(t v) for a layer-1 direction v; a genuine CC geodesic."""
    v = space.algebra.vector(v)
    if np.any(np.abs(v[space.d1:]) > 0):
        raise InputError("radial geodesic direction must lie in layer 1")
    return space.group.bch(n, float(t) * v)


# -- certified lower bounds ------------------------------------------------


def cc_lower_abelian(space: CCSpace, x, y):
    """|pi_1(x^{-1} y)|: exact lower bound from the 1-Lipschitz quotient."""
    delta = space.group.difference(x, y)
    return float(space.metric.norm(space.horizontal_part(delta)))


@dataclass
class BallBoxConstant:
    """Empirically calibrated constant A with sum_i |v_i|^{1/i} <= A d_cc."""

    A: float
    samples: int
    seed: int
    safety: float
    max_ratio: float  # raw calibration maximum before the safety margin

    def as_dict(self):
        return {
            "A": self.A,
            "samples": self.samples,
            "seed": self.seed,
            "safety": self.safety,
            "max_ratio": self.max_ratio,
        }


def cc_lower_ballbox(space: CCSpace, x, y, c: BallBoxConstant):
    """(1/A) sum_i |v_i|^{1/i} for v = x^{-1} y; empirically certified."""
    delta = space.group.difference(x, y)
    return float(space.homogeneous_norm(delta)) / c.A


def _lower_bounds_batch(space: CCSpace, deltas, ballbox=None):
    """max(abelian, ball-box) lower bound for displacement coords (B, n)."""
    lower = space.metric.norm(deltas[..., : space.d1])
    method = np.zeros(lower.shape, dtype=int)  # 0 = abelian, 1 = ballbox
    if ballbox is not None:
        bb = space.homogeneous_norm(deltas) / ballbox.A
        method = (bb > lower).astype(int)
        lower = np.maximum(lower, bb)
    return lower, method


# -- commutator-ladder closure --------------------------------------------


def _left_normed_bracket(algebra, word):
    val = algebra.basis_vector(word[-1])
    for i in word[-2::-1]:
        val = algebra.bracket(algebra.basis_vector(i), val)
    return val


def _loop_letters(word):
    """Flatten a nested group commutator for a left-normed bracket word.

    Returns a list of (letter, sign, outer) triples; ``outer`` marks the
    two segments whose sign is flipped to negate the realized bracket.
    """
    if len(word) == 1:
        return [(word[0], 1.0, True)]
    inner = _loop_letters(word[1:])
    head = [(word[0], 1.0, True)]
    inv = lambda seq: [(l, -s, o) for l, s, o in reversed(seq)]
    inner_fixed = [(l, s, False) for l, s, _ in inner]
    return (
        head
        + inner_fixed
        + inv(head)
        + inv(inner_fixed)
    )


class LadderPlan:
    """Precomputed horizontal loop recipes closing each layer exactly.

    For layer p >= 2, a spanning set of left-normed bracket words of
    layer-1 basis directions is selected and pseudo-inverted, so any
    layer-p defect decomposes into word coefficients; each word is
    realized by a nested group-commutator loop at per-defect scale.
    """

    def __init__(self, space: CCSpace):
        algebra = space.algebra
        d1 = space.d1
        self.space = space
        self.layers = {}
        for p in range(2, algebra.num_layers + 1):
            dp = algebra.layer_dims[p - 1]
            sl = algebra.layer_slice(p)
            words, columns = [], []
            rank = 0
            for word in np.ndindex(*([d1] * p)):
                vec = _left_normed_bracket(algebra, word)[sl]
                if np.max(np.abs(vec)) < 1e-12:
                    continue
                trial = columns + [vec]
                new_rank = np.linalg.matrix_rank(np.array(trial), tol=1e-10)
                if new_rank > rank:
                    words.append(tuple(int(i) for i in word))
                    columns.append(vec)
                    rank = new_rank
                if rank == dp:
                    break
            if rank < dp:
                raise UnreachableError(
                    f"{algebra.name}: layer {p} is not spanned by brackets of "
                    f"layer-1 basis directions"
                )
            mat = np.array(columns).T  # (dp, nwords)
            self.layers[p] = {
                "words": words,
                "pinv": np.linalg.pinv(mat),
                "letters": [_loop_letters(w) for w in words],
            }

    def loop_batch(self, p, coeffs):
        """Batched closing moves for layer-p defect coefficients (B, dp).

        Returns (controls, lengths): ``controls`` is a list of (B, d1)
        horizontal control displacements to append in order; ``lengths``
        the per-problem metric length added.
        """
        info = self.layers[p]
        lam = np.einsum("wd,...d->...w", info["pinv"], coeffs)
        scale = np.abs(lam) ** (1.0 / p)
        sign = np.sign(lam)
        sign[sign == 0] = 1.0
        controls = []
        batch = lam.shape[:-1]
        lengths = np.zeros(batch)
        d1 = self.space.d1
        for wi, letters in enumerate(info["letters"]):
            s = scale[..., wi]
            sg = sign[..., wi]
            for letter, base_sign, outer in letters:
                u = np.zeros(batch + (d1,))
                factor = s * base_sign * (sg if outer else 1.0)
                u[..., letter] = factor
                controls.append(u)
                lengths += s * float(
                    self.space.metric.norm(np.eye(d1)[letter])
                )
        return controls, lengths


def close_defect_batch(space: CCSpace, endpoints, targets, max_passes=60,
                       tol=EXACT_TOL, collect=False):
    """Exactly close endpoint defects with commutator-ladder moves.

    ``endpoints`` and ``targets`` are (B, n) coordinate arrays.  Returns
    (extra_length, final_endpoints, residual, segments) where segments is
    the ordered list of appended (B, d1) control displacements (only if
    ``collect``).  Moves are folded through the exact group product, so
    the remaining residual contracts superlinearly; for groups of step
    <= 3 a single pass is already exact up to roundoff.
    """
    group = space.group
    algebra = space.algebra
    endpoints = np.atleast_2d(np.asarray(endpoints, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    extra = np.zeros(endpoints.shape[0])
    segs = [] if collect else None
    plan = space.ladder()
    scale_ref = 1.0 + np.linalg.norm(targets, axis=-1)
    for _ in range(max_passes):
        defect = group.bch(-endpoints, targets)
        residual = np.linalg.norm(defect, axis=-1)
        if np.all(residual <= tol * scale_ref):
            break
        # layer 1: one straight segment
        u1 = defect[..., : space.d1]
        if np.any(np.abs(u1) > 0):
            endpoints = group.bch(endpoints, space.embed_horizontal(u1))
            extra += space.metric.norm(u1)
            if collect:
                segs.append(u1)
        for p in range(2, algebra.num_layers + 1):
            defect = group.bch(-endpoints, targets)
            coeffs = defect[..., algebra.layer_slice(p)]
            if not np.any(np.abs(coeffs) > 0):
                continue
            controls, lengths = plan.loop_batch(p, coeffs)
            for u in controls:
                endpoints = group.bch(endpoints, space.embed_horizontal(u))
            extra += lengths
            if collect:
                segs.extend(controls)
    defect = group.bch(-endpoints, targets)
    residual = np.linalg.norm(defect, axis=-1)
    return extra, endpoints, residual, segs


# -- the upper-bound optimizer --------------------------------------------


@dataclass
class OptimizerBudget:
    """Budget and tolerances for the horizontal path optimizer."""

    segments: int = 16
    starts: int = 4
    max_iter: int = 250
    penalty_init: float = 1e2
    penalty_growth: float = 10.0
    penalty_max: float = 1e12
    endpoint_tol: float = 1e-9
    chunk: int = 32768
    gtol: float = 1e-12
    ftol: float = 1e-15

    def replace(self, **kw):
        d = self.__dict__.copy()
        d.update(kw)
        return OptimizerBudget(**d)


def _fold_forward(space, controls):
    """Endpoint of the control stack and per-step Jacobians.

    controls: (B, m, d1).  Returns endpoint (B, n) and lists of J_a, J_b.
    """
    group = space.group
    B, m, _ = controls.shape
    z = np.zeros((B, space.algebra.dim))
    jas, jbs = [], []
    for j in range(m):
        step = space.embed_horizontal(controls[:, j])
        ja, jb = group.table.jacobians(z, step)
        jas.append(ja)
        jbs.append(jb)
        z = group.bch(z, step)
    return z, jas, jbs


def path_endpoints_batch(space, controls):
    """Endpoint coordinates for a (B, m, d1) control stack from identity.

    For step-2 groups the product telescopes into prefix sums; otherwise
    the exact fold is used step by step.
    """
    if space.group.table.degree <= 2 and space.d1 == space.algebra.layer_dims[0]:
        return _endpoint_step2(space, controls)
    z, _, _ = _fold_forward(space, controls)
    return z


def _endpoint_step2(space, controls):
    # z_1 = sum_j u_j;  z_2 = 1/2 sum_j [S_{j-1}, u_j] with S the prefix sums
    d1 = space.d1
    c2 = space.algebra.structure[:d1, :d1, d1:]
    cum = np.cumsum(controls, axis=1)
    prev = cum - controls
    z1 = cum[:, -1]
    z2 = 0.5 * np.einsum("bmi,bmj,ijl->bl", prev, controls, c2)
    return np.concatenate([z1, z2], axis=-1)


def _penalty_value_grad_step2(space, controls, targets, mu, gram):
    d1 = space.d1
    c2 = space.algebra.structure[:d1, :d1, d1:]
    cum = np.cumsum(controls, axis=1)
    prev = cum - controls
    z1 = cum[:, -1]
    z2 = 0.5 * np.einsum("bmi,bmj,ijl->bl", prev, controls, c2)
    z = np.concatenate([z1, z2], axis=-1)
    gu = controls @ gram
    energy = np.einsum("bmi,bmi->b", controls, gu)
    diff = z - targets
    value = float(np.sum(energy) + mu * np.sum(diff * diff))
    cbar1 = 2.0 * mu * diff[:, :d1]
    cbar2 = 2.0 * mu * diff[:, d1:]
    # suffix sums T_j = sum_{l > j} u_l
    total = cum[:, -1:, :]
    suffix = total - cum
    grad = 2.0 * gu + cbar1[:, None, :]
    grad += 0.5 * np.einsum("bl,bmi,ijl->bmj", cbar2, prev, c2)
    grad += 0.5 * np.einsum("bl,bmj,ijl->bmi", cbar2, suffix, c2)
    return value, grad


def _penalty_value_grad(space, controls, targets, mu, gram):
    """Energy + mu * endpoint misfit, with gradient, fully batched."""
    if space.group.table.degree <= 2 and space.d1 == space.algebra.layer_dims[0]:
        return _penalty_value_grad_step2(space, controls, targets, mu, gram)
    B, m, d1 = controls.shape
    z, jas, jbs = _fold_forward(space, controls)
    gu = controls @ gram
    energy = np.einsum("bmi,bmi->b", controls, gu)
    diff = z - targets
    value = float(np.sum(energy) + mu * np.sum(diff * diff))
    grad = 2.0 * gu
    cbar = 2.0 * mu * diff
    for j in range(m - 1, -1, -1):
        grad[:, j] += np.einsum("blj,bl->bj", jbs[j], cbar)[:, :d1]
        cbar = np.einsum("blj,bl->bj", jas[j], cbar)
    return value, grad


def _optimize_controls(space, targets, controls0, budget):
    """Penalty-continuation quasi-Newton minimization of path energy.

    targets: (B, n); controls0: (B, m, d1).  Returns optimized controls.
    """
    B, m, d1 = controls0.shape
    gram = space.metric.gram
    scale_ref = 1.0 + np.linalg.norm(targets, axis=-1)

    controls = controls0
    mu = budget.penalty_init
    while True:
        def fun(flat, _mu=mu):
            c = flat.reshape(B, m, d1)
            v, g = _penalty_value_grad(space, c, targets, _mu, gram)
            return v, g.ravel()

        res = minimize(
            fun,
            controls.ravel(),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": budget.max_iter, "ftol": budget.ftol,
                     "gtol": budget.gtol},
        )
        controls = res.x.reshape(B, m, d1)
        endpoint = path_endpoints_batch(space, controls)
        residual = np.linalg.norm(endpoint - targets, axis=-1) / scale_ref
        if np.max(residual) <= budget.endpoint_tol / 10 or mu >= budget.penalty_max:
            break
        mu *= budget.penalty_growth
    return controls


def _initial_controls(space, targets, budget, rng):
    """Straight-line start plus randomized perturbations, (S, B, m, d1)."""
    B = targets.shape[0]
    m, S = budget.segments, budget.starts
    straight = np.repeat(
        (targets[:, : space.d1] / m)[:, None, :], m, axis=1
    )  # (B, m, d1)
    scale = (space.homogeneous_norm(targets) + 1.0) / m
    # the straight start is a saddle for targets with higher-layer content;
    # nudge those rows off it
    vertical = np.any(np.abs(targets[:, space.d1:]) > 0, axis=-1)
    jitter = rng.standard_normal((B, m, space.d1)) * scale[:, None, None]
    straight = straight + 0.1 * jitter * vertical[:, None, None]
    inits = [straight]
    for _ in range(S - 1):
        noise = rng.standard_normal((B, m, space.d1)) * scale[:, None, None]
        inits.append(straight + noise)
    return np.stack(inits, axis=0)


def cc_upper_batch(space: CCSpace, targets, budget=None, seed=0):
    """Certified upper bounds d_cc(e^0, target) for a batch of targets.

    Returns (upper, residual): ``upper`` is the exact length of a feasible
    witness (optimized path plus exact ladder closure of the remaining
    defect); ``residual`` the final coordinate mismatch, ~1e-12.
    """
    if budget is None:
        budget = OptimizerBudget()
    targets = np.atleast_2d(space.algebra.vector(targets))
    B = targets.shape[0]
    rng = np.random.default_rng(seed)
    upper = np.full(B, np.inf)
    residual = np.full(B, np.inf)

    # Normalize to unit homogeneous norm: a dilation maps witness paths to
    # witness paths and scales lengths exactly, so the bound is computed at
    # scale one and is exactly dilation covariant.
    scales = space.homogeneous_norm(targets)
    live = scales > 0
    if not np.all(live):
        upper[~live] = 0.0
        residual[~live] = 0.0
        if not np.any(live):
            return upper, residual
    weights = np.ones_like(targets)
    weights[live] = (
        1.0 / scales[live, None]
    ) ** space.algebra.layer_of.astype(float)[None, :]
    norm_targets = targets * weights

    chunks = [np.arange(i, min(i + budget.chunk, B))
              for i in range(0, B, budget.chunk)]
    chunks = [idx[live[idx]] for idx in chunks]
    chunks = [idx for idx in chunks if len(idx)]

    def run_chunk(idx):
        tg = norm_targets[idx]
        inits = _initial_controls(space, tg, budget, rng)
        S = inits.shape[0]
        stacked_targets = np.tile(tg, (S, 1))
        controls = _optimize_controls(
            space, stacked_targets, inits.reshape(S * len(idx), budget.segments, -1),
            budget,
        )
        endpoint = path_endpoints_batch(space, controls)
        lengths = np.sum(space.metric.norm(controls), axis=-1)
        extra, _, res, _ = close_defect_batch(space, endpoint, stacked_targets)
        total = (lengths + extra).reshape(S, len(idx))
        res = res.reshape(S, len(idx))
        total = np.where(res <= 1e-9 * (1 + np.linalg.norm(tg, axis=-1)),
                         total, np.inf)
        best = np.argmin(total, axis=0)
        cols = np.arange(len(idx))
        return total[best, cols], res[best, cols]

    results = [run_chunk(idx) for idx in chunks]
    for idx, (u, r) in zip(chunks, results):
        upper[idx] = u * scales[idx]
        residual[idx] = r
    if np.any(~np.isfinite(upper)):
        bad = int(np.sum(~np.isfinite(upper)))
        raise OptimizerFailure(
            f"{bad} of {B} targets failed to reach endpoint tolerance",
            residual=residual,
        )
    return upper, residual


def cc_upper(space: CCSpace, x, y, budget=None, seed=0):
    """Optimized feasible path from x to y and its exact length.

    Returns a DistanceEstimate carrying only the upper bound and witness;
    raises OptimizerFailure (with the best infeasible path attached) if
    the endpoint tolerance cannot be met.
    """
    if budget is None:
        budget = OptimizerBudget()
    x = space.algebra.vector(x)
    y = space.algebra.vector(y)
    target = space.group.difference(x, y)
    rng = np.random.default_rng(seed)
    scale = float(space.homogeneous_norm(target))
    if scale == 0:
        return DistanceEstimate(
            lower=0.0,
            upper=0.0,
            witness=ControlPath(np.zeros(0), np.zeros((0, space.d1)), x),
            lower_method="none",
            upper_method="trivial",
            endpoint_residual=0.0,
            seed=seed,
        )
    weights = (1.0 / scale) ** space.algebra.layer_of.astype(float)
    target = target * weights
    tg = target[None, :]
    inits = _initial_controls(space, tg, budget, rng)
    S = inits.shape[0]
    stacked = np.tile(tg, (S, 1))
    controls = _optimize_controls(
        space, stacked, inits.reshape(S, budget.segments, -1), budget
    )
    endpoint = path_endpoints_batch(space, controls)
    extra, closed, res, segs = close_defect_batch(
        space, endpoint, stacked, collect=True
    )
    lengths = np.sum(space.metric.norm(controls), axis=-1) + extra
    scale_ref = 1.0 + np.linalg.norm(target)
    feasible = res <= 1e-9 * scale_ref
    order = np.argsort(np.where(feasible, lengths, np.inf))
    best = int(order[0])
    segments = [controls[best]] + [
        np.atleast_2d(u)[best][None, :] for u in (segs or [])
    ]
    all_controls = scale * np.concatenate(
        [np.atleast_2d(c).reshape(-1, space.d1) for c in segments], axis=0
    )
    keep = np.linalg.norm(all_controls, axis=1) > 0
    witness = ControlPath(
        np.ones(int(np.sum(keep))), all_controls[keep], x
    ).constant_speed()
    if not feasible[best]:
        raise OptimizerFailure(
            "endpoint tolerance not reached",
            best_path=witness,
            residual=float(res[best]),
        )
    upper = witness.length(space)
    return DistanceEstimate(
        lower=0.0,
        upper=float(upper),
        witness=witness,
        lower_method="none",
        upper_method=f"path-optimizer(m={budget.segments},starts={budget.starts})",
        endpoint_residual=float(res[best]),
        seed=seed,
    )


# -- combined estimates ----------------------------------------------------


@dataclass
class DistanceEstimate:
    """A CC distance bracketed by certified bounds and their methods."""

    lower: float
    upper: float
    witness: ControlPath | None
    lower_method: str
    upper_method: str
    endpoint_residual: float
    seed: int = 0

    def __post_init__(self):
        if self.lower > self.upper + 1e-12:
            raise InputError(
                f"lower bound {self.lower} exceeds upper bound {self.upper}"
            )

    @property
    def midpoint(self):
        return 0.5 * (self.lower + self.upper)

    def as_dict(self, pair=None):
        doc = {
            "lower": self.lower,
            "lower_method": self.lower_method,
            "upper": self.upper,
            "upper_method": self.upper_method,
            "witness_segments": (
                None
                if self.witness is None
                else {
                    "durations": self.witness.durations.tolist(),
                    "controls": self.witness.controls.tolist(),
                    "basepoint": self.witness.basepoint.tolist(),
                }
            ),
            "endpoint_residual": self.endpoint_residual,
            "seed": self.seed,
        }
        if pair is not None:
            doc["pair"] = pair
        return doc


def estimate_distance(space: CCSpace, x, y, budget=None, ballbox=None, seed=0):
    """Two-sided certified estimate of d_cc(x, y)."""
    est = cc_upper(space, x, y, budget=budget, seed=seed)
    delta = space.group.difference(x, y)
    lower, method = _lower_bounds_batch(space, delta[None, :], ballbox)
    lower_method = "abelianization" if method[0] == 0 else "ball-box"
    lower_val = float(min(lower[0], est.upper))
    return DistanceEstimate(
        lower=lower_val,
        upper=est.upper,
        witness=est.witness,
        lower_method=lower_method,
        upper_method=est.upper_method,
        endpoint_residual=est.endpoint_residual,
        seed=seed,
    )


def calibrate_ballbox(space: CCSpace, samples=1000, seed=0, budget=None,
                      safety=1.05):
    """Estimate the ball-box constant A on unit-scale random directions.

    A is the maximum of (sum_i |v_i|^{1/i}) / upper(d_cc(e^0, e^v)) over
    the samples, inflated by ``safety`` as holdout headroom; dilation
    invariance of the ratio means unit-scale sampling suffices.
    """
    samples = int(samples)
    if samples < 100:
        raise InputError("ball-box calibration needs at least 100 samples")
    if budget is None:
        budget = OptimizerBudget(segments=12, starts=2)
    rng = np.random.default_rng(seed)
    n = space.algebra.dim
    raw = rng.standard_normal((samples, n))
    # include a pure horizontal direction so max_ratio >= 1 up to optimizer slack
    raw[0] = space.embed_horizontal(np.ones(space.d1))
    hnorm = space.homogeneous_norm(raw)
    weights = (1.0 / hnorm)[:, None] ** space.algebra.layer_of.astype(float)[None, :]
    vs = raw * weights
    try:
        upper, _ = cc_upper_batch(space, vs, budget=budget,
                                  seed=int(rng.integers(2**32)))
    except OptimizerFailure as exc:
        raise CalibrationError(
            "upper-bound optimization failed during calibration",
            failed_samples=[],
        ) from exc
    ratios = space.homogeneous_norm(vs) / upper
    max_ratio = float(np.max(ratios))
    A = max(max_ratio * safety, 1.0)
    return BallBoxConstant(
        A=A, samples=samples, seed=seed, safety=safety, max_ratio=max_ratio
    )
