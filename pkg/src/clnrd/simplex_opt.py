"""Minimization over products of probability simplices.

A point is a flat vector made of blocks; block ``k`` holds ``slices`` rows of
length ``dim`` and every row lies on the probability simplex.  Objectives are
evaluated in batches (rows of a 2-D array) and may carry inequality
constraints ``c(x) <= 0``.

The driver combines

* exhaustive evaluation of every deterministic point (all rows one-hot) when
  their number fits the enumeration budget,
* an optional stars-and-bars grid,
* batched projected-gradient descent from warm starts, the best corners and
  Dirichlet(1) draws, with an Armijo backtracking line search; constraints
  enter through an augmented Lagrangian whose multipliers are refreshed every
  few iterations and whose penalty is ramped up to a cap.

The winner is the feasible candidate of smallest value; ties go to the
candidate found first (warm starts, then corners, then grid, then descents in
restart order).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .errors import BudgetExceeded, OptimizerDiverged

ARMIJO = 1e-4
MU_MAX = 1e8
VIOL_SHRINK = 0.25
FEAS_TOL = 1e-10


@dataclass(frozen=True)
class SearchSpace:
    blocks: tuple[tuple[int, int], ...]

    def __post_init__(self):
        blocks = tuple((int(s), int(d)) for s, d in self.blocks)
        if any(s < 1 or d < 1 for s, d in blocks):
            raise ValueError("every block needs at least one slice of dimension >= 1")
        object.__setattr__(self, "blocks", blocks)

    @property
    def size(self) -> int:
        return sum(s * d for s, d in self.blocks)

    @property
    def offsets(self) -> list[int]:
        out, o = [], 0
        for s, d in self.blocks:
            out.append(o)
            o += s * d
        return out

    def split(self, x: np.ndarray) -> list[np.ndarray]:
        """Block views of shape (batch, slices, dim)."""
        x = np.atleast_2d(x)
        out = []
        for (s, d), o in zip(self.blocks, self.offsets):
            out.append(x[:, o:o + s * d].reshape(x.shape[0], s, d))
        return out

    def join(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        b = blocks[0].shape[0]
        return np.concatenate([np.asarray(k).reshape(b, -1) for k in blocks], axis=1)

    def project(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.join([project_simplex(k) for k in self.split(x)])

    def tangent(self, g: np.ndarray) -> np.ndarray:
        """Remove the per-row mean so the direction keeps every row summing to one."""
        g = np.atleast_2d(g)
        return self.join([k - k.mean(axis=-1, keepdims=True) for k in self.split(g)])

    def uniform(self) -> np.ndarray:
        return self.join([np.full((1, s, d), 1.0 / d) for s, d in self.blocks])[0]

    def dirichlet(self, rng: np.random.Generator) -> np.ndarray:
        return np.concatenate([rng.dirichlet(np.ones(d), size=s).ravel() for s, d in self.blocks])

    def n_corners(self) -> int:
        n = 1
        for s, d in self.blocks:
            n *= d ** s
        return n

    def corners(self, chunk: int = 4096):
        """Yield batches of every deterministic point in a fixed (lexicographic) order."""
        rows = sum(s for s, _ in self.blocks)
        dims = [d for s, d in self.blocks for _ in range(s)]
        choices = itertools.product(*(range(d) for d in dims))
        starts = np.cumsum([0] + dims[:-1])
        while True:
            batch = list(itertools.islice(choices, chunk))
            if not batch:
                return
            idx = np.asarray(batch, dtype=np.int64).reshape(len(batch), rows)
            out = np.zeros((len(batch), self.size))
            out[np.arange(len(batch))[:, None], starts[None, :] + idx] = 1.0
            yield out

    def n_grid(self, resolution: float) -> int:
        m = int(round(1.0 / resolution))
        n = 1
        for s, d in self.blocks:
            n *= math.comb(m + d - 1, d - 1) ** s
        return n

    def grid(self, resolution: float, chunk: int = 4096):
        """Yield batches of every point whose coordinates are multiples of ``resolution``."""
        m = int(round(1.0 / resolution))
        row_pts = {}
        for _, d in self.blocks:
            if d not in row_pts:
                pts = [np.diff([-1, *c, m + d - 1]) - 1 for c in itertools.combinations(range(m + d - 1), d - 1)]
                row_pts[d] = np.asarray(pts, dtype=float).reshape(-1, d) / m
        per_row = [row_pts[d] for s, d in self.blocks for _ in range(s)]
        combos = itertools.product(*(range(len(p)) for p in per_row))
        while True:
            batch = list(itertools.islice(combos, chunk))
            if not batch:
                return
            idx = np.asarray(batch)
            yield np.concatenate([per_row[r][idx[:, r]] for r in range(len(per_row))], axis=1)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of every last-axis row onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    shape = v.shape
    y = v.reshape(-1, shape[-1])
    d = y.shape[1]
    u = -np.sort(-y, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    k = np.arange(1, d + 1)
    cond = u - css / k > 0
    rho = d - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(len(y)), rho] / (rho + 1)
    return np.maximum(y - theta[:, None], 0.0).reshape(shape)


class SimplexObjective(Protocol):
    """Batched objective: rows of ``x`` are points of the search space."""

    space: SearchSpace
    n_constraints: int

    def values(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (f of shape (B,), constraints of shape (B, m))."""

    def value_grad(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Return (f, df of shape (B, n), c, dc of shape (B, m, n))."""


@dataclass
class OptOptions:
    restarts: int = 64
    max_iters: int = 2000
    convergence_residual: float = 1e-7
    seed: int = 0
    grid_resolution: float | None = None
    deterministic_enumeration_budget: int = 10**6
    enumerate: bool = True
    corner_starts: int = 4
    penalty_start: float = 10.0
    penalty_ramp_every: int = 200
    multiplier_every: int = 20
    stall_window: int = 100
    feasibility_tol: float = FEAS_TOL

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.convergence_residual <= 0:
            raise ValueError("convergence residual must be positive")


@dataclass
class OptResult:
    point: np.ndarray
    value: float
    feasible: bool
    violation: float
    residual: float
    source: str
    restart_values: list[float] = field(default_factory=list)
    restart_residuals: list[float] = field(default_factory=list)
    converged: list[bool] = field(default_factory=list)
    best_trace: list[float] = field(default_factory=list)
    corner_best: float | None = None
    corners_evaluated: int = 0
    grid_best: float | None = None
    grid_evaluated: int = 0

    @property
    def any_converged(self) -> bool:
        return any(self.converged)


def _take(state, idx):
    return None if state is None else [s_[idx] for s_ in state]


def _augmented(obj, x, lam, mu, state, grad=True):
    """Augmented Lagrangian ``f + sum((max(0, lam + mu c)^2 - lam^2) / (2 mu))``."""
    kw = {} if state is None else {"state": state}
    if grad:
        f, df, c, dc = obj.value_grad(x, **kw)
    else:
        f, c = obj.values(x, **kw)
    if c.shape[1]:
        m = mu[:, None]
        shifted = np.maximum(lam + m * c, 0.0)
        f = f + ((shifted ** 2 - lam ** 2) / (2 * m)).sum(axis=1)
        if grad:
            df = df + np.einsum("bm,bmn->bn", shifted, dc)
    if grad:
        return f, df, c
    return f, c


def descend(obj: SimplexObjective, starts: np.ndarray, opts: OptOptions):
    """Batched projected gradient from every row of ``starts``.

    Steps start from a Barzilai-Borwein guess and are halved until the Armijo
    condition holds.  Constraints enter through an augmented Lagrangian; at
    each multiplier update the penalty weight is multiplied by 10 unless the
    violation fell below a quarter of its previous value, and it is also
    ramped every ``penalty_ramp_every`` iterations while a row is infeasible; greedy reconstructions are frozen during
    each line search so the constraint functions are smooth along the step.

    Returns (points, values, violations, residuals, converged, trace).
    """
    space = obj.space
    x = space.project(starts)
    B, n = x.shape
    m = obj.n_constraints
    freeze = getattr(obj, "freeze", None) if m else None
    lam = np.zeros((B, m))
    mu = np.full(B, opts.penalty_start)
    step = np.ones(B)
    px = np.zeros_like(x)
    pg = np.zeros_like(x)
    has_prev = np.zeros(B, dtype=bool)
    active = np.ones(B, dtype=bool)
    resid = np.full(B, np.inf)
    done_ok = np.zeros(B, dtype=bool)
    mark = np.full(B, np.inf)
    last_viol = np.full(B, np.inf)
    mark_x = np.full_like(x, np.inf)
    trace: list[float] = []
    ctol = max(opts.convergence_residual, opts.feasibility_tol)
    for it in range(opts.max_iters):
        ia = np.flatnonzero(active)
        if not len(ia):
            break
        xa = x[ia]
        st = freeze(xa) if freeze else None
        F, G, C = _augmented(obj, xa, lam[ia], mu[ia], st)
        bad = ~np.isfinite(F) | ~np.isfinite(G).all(axis=1)
        if bad.any():
            active[ia[bad]] = False
            keep = ~bad
            ia, xa, F, G, C = ia[keep], xa[keep], F[keep], G[keep], C[keep]
            st = _take(st, keep)
            if not len(ia):
                break
        r = np.abs(xa - space.project(xa - G)).max(axis=1)
        resid[ia] = r
        viol = np.maximum(C, 0.0).max(axis=1) if m else np.zeros(len(ia))
        inner = r < opts.convergence_residual
        if m:
            # KKT: feasible and complementary (each multiplier is zero or its constraint is tight)
            slack = np.abs(np.minimum(lam[ia], -C)).max(axis=1)
            finished = inner & (viol <= ctol) & (slack <= ctol)
            upd = inner & ~finished
            if it and it % opts.multiplier_every == 0:
                # inexact updates: near zero cells the inner residual may never get small
                upd |= ~finished & ((viol > ctol) | (slack > ctol))
            if upd.any():
                lam[ia[upd]] = np.maximum(lam[ia[upd]] + mu[ia[upd], None] * C[upd], 0.0)
            # raise the penalty where the violation did not shrink enough since the last update
            ramp = upd & (viol > ctol) & (viol > VIOL_SHRINK * last_viol[ia])
            last_viol[ia[upd]] = viol[upd]
            if it and it % opts.penalty_ramp_every == 0:
                ramp |= viol > ctol
            mu[ia[ramp]] = np.minimum(mu[ia[ramp]] * 10.0, MU_MAX)
            changed = upd | ramp
            if changed.any():
                # the line search below must see the Lagrangian with the new weights
                F[changed], G[changed], _ = _augmented(obj, xa[changed], lam[ia[changed]], mu[ia[changed]],
                                                       _take(st, changed))
        else:
            finished = inner
        active[ia[finished]] = False
        done_ok[ia[finished]] = True
        if it and it % opts.stall_window == 0:
            # rows whose Lagrangian barely moved over the window are given up on
            stalled = ~finished & (mark[ia] - F <= 1e-10 * (1.0 + np.abs(F))) & (mu[ia] >= MU_MAX)
            stalled |= ~finished & (mark[ia] - F <= 1e-10 * (1.0 + np.abs(F))) & (viol <= ctol)
            # or whose iterate has stopped moving altogether
            stalled |= ~finished & (np.abs(xa - mark_x[ia]).max(axis=1) <= 1e-12)
            active[ia[stalled]] = False
            mark[ia] = F
            mark_x[ia] = xa
        go = ~inner
        ia, xa, F, G = ia[go], xa[go], F[go], G[go]
        st = _take(st, go)
        if not len(ia):
            continue

        # Barzilai-Borwein trial step
        s_ = xa - px[ia]
        y_ = G - pg[ia]
        sy = np.einsum("bn,bn->b", s_, y_)
        ss = np.einsum("bn,bn->b", s_, s_)
        bb = np.where((sy > 1e-300) & has_prev[ia], ss / np.where(sy > 1e-300, sy, 1.0), step[ia] * 2.0)
        # never more than double the last accepted step, so stiff rows do not pay for long backtracks
        t = np.minimum(np.maximum(bb, 1e-10), 2.0 * step[ia])
        px[ia], pg[ia] = xa, G
        has_prev[ia] = True

        pending = np.ones(len(ia), dtype=bool)
        newx = xa.copy()
        for _ in range(40):
            ip = np.flatnonzero(pending)
            if not len(ip):
                break
            cand = space.project(xa[ip] - t[ip, None] * G[ip])
            Fn, _ = _augmented(obj, cand, lam[ia[ip]], mu[ia[ip]], _take(st, ip), grad=False)
            # small absolute slack absorbs rounding in the entropy sums
            slack_ = 1e-13 * (1.0 + np.abs(F[ip]))
            ok = np.isfinite(Fn) & (Fn <= F[ip] + ARMIJO * np.einsum("bn,bn->b", G[ip], cand - xa[ip]) + slack_)
            newx[ip[ok]] = cand[ok]
            pending[ip[ok]] = False
            t[ip[~ok]] *= 0.5
        step[ia] = t
        x[ia] = newx
        if pending.any():
            # no descent at any step size: numerically stationary for this Lagrangian
            ip = ia[pending]
            if m:
                _, cs = obj.values(x[ip])
                vs = np.maximum(cs, 0.0).max(axis=1)
                fin = vs <= ctol
                active[ip[fin]] = False
                done_ok[ip[fin]] = True
                nf = ip[~fin]
                # at the penalty cap a failed search means the row is stuck; drop it
                stuck = mu[nf] >= MU_MAX
                active[nf[stuck]] = False
                nf = nf[~stuck]
                lam[nf] = np.maximum(lam[nf] + mu[nf, None] * cs[~fin][~stuck], 0.0)
                mu[nf] = np.minimum(mu[nf] * 10.0, MU_MAX)
            else:
                active[ip] = False
                done_ok[ip] = True
        if it % 50 == 0:
            fv, _ = obj.values(x)
            trace.append(float(np.nanmin(fv)))
    f, c = obj.values(x)
    viol = np.maximum(c, 0.0).max(axis=1) if m else np.zeros(B)
    converged = done_ok & (resid < max(opts.convergence_residual, 1e-5))
    return x, f, viol, resid, converged, trace


def repair(obj: SimplexObjective, x: np.ndarray, anchor: np.ndarray, tol: float, steps: int = 50) -> np.ndarray | None:
    """Bisect on the segment toward a feasible anchor; return the feasible point closest to ``x``."""
    lo, hi = 0.0, 1.0
    best = None
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        p = (1 - mid) * x + mid * anchor
        _, c = obj.values(p[None])
        if (c <= tol).all():
            hi, best = mid, p
        else:
            lo = mid
    if best is None:
        _, c = obj.values(anchor[None])
        if (c <= tol).all():
            best = anchor.copy()
    return best


def minimize(obj: SimplexObjective, opts: OptOptions | None = None, warm_starts: Sequence[np.ndarray] = ()) -> OptResult:
    opts = opts or OptOptions()
    space = obj.space
    tol = opts.feasibility_tol
    cands: list[tuple[float, float, np.ndarray, str, float]] = []  # (value, violation, point, source, residual)

    def add(points, f, viol, src, resid=None):
        for k in range(len(f)):
            cands.append((float(f[k]), float(viol[k]), points[k], src, float(resid[k]) if resid is not None else 0.0))

    def viol_of(c):
        return np.maximum(c, 0.0).max(axis=1) if c.shape[1] else np.zeros(len(c))

    warm = np.array([space.project(np.asarray(w, float)[None])[0] for w in warm_starts]).reshape(-1, space.size)
    if len(warm):
        f, c = obj.values(warm)
        add(warm, f, viol_of(c), "warm")

    corner_best = None
    n_corner = 0
    top_corners = np.zeros((0, space.size))
    if opts.enumerate and space.n_corners() <= opts.deterministic_enumeration_budget:
        keep_f, keep_x = np.zeros(0), np.zeros((0, space.size))
        for batch in space.corners():
            f, c = obj.values(batch)
            v = viol_of(c)
            n_corner += len(batch)
            ok = (v <= tol) & np.isfinite(f)
            if ok.any():
                fk = np.concatenate([keep_f, f[ok]])
                xk = np.concatenate([keep_x, batch[ok]])
                order = np.argsort(fk, kind="stable")[: max(opts.corner_starts, 1)]
                keep_f, keep_x = fk[order], xk[order]
        if len(keep_f):
            corner_best = float(keep_f[0])
            add(keep_x, keep_f, np.zeros(len(keep_f)), "corner")
            top_corners = keep_x[: opts.corner_starts]

    grid_best = None
    n_grid = 0
    if opts.grid_resolution:
        total = space.n_grid(opts.grid_resolution)
        if total > opts.deterministic_enumeration_budget * 10:
            raise BudgetExceeded(f"grid search needs {total} points")
        bf, bx = math.inf, None
        for batch in space.grid(opts.grid_resolution):
            f, c = obj.values(batch)
            v = viol_of(c)
            n_grid += len(batch)
            f = np.where((v <= tol) & np.isfinite(f), f, np.inf)
            k = int(np.argmin(f))
            if f[k] < bf:
                bf, bx = float(f[k]), batch[k].copy()
        if bx is not None:
            grid_best = bf
            add(bx[None], np.array([bf]), np.zeros(1), "grid")

    rng = [np.random.default_rng([opts.seed, r]) for r in range(opts.restarts)]
    rand = np.array([space.dirichlet(g) for g in rng]).reshape(-1, space.size)
    starts = np.concatenate([warm, top_corners, rand], axis=0)
    xs, f, viol, resid, conv, trace = descend(obj, starts, opts)
    finite = np.isfinite(f)
    if not finite.any() and not cands:
        raise OptimizerDiverged("every restart produced a non-finite objective")

    # feasibility repair toward the best feasible known point
    feas_known = [cd for cd in cands if cd[1] <= tol and math.isfinite(cd[0])]
    anchors = [min(feas_known, key=lambda cd: cd[0])[2]] if feas_known else []
    for k in np.flatnonzero(viol > tol):
        if not anchors or not finite[k]:
            continue
        p = repair(obj, xs[k], anchors[0], tol)
        if p is not None:
            xs[k] = p
    f2, c2 = obj.values(xs)
    viol = viol_of(c2)
    add(xs, f2, viol, "descent", resid)

    feasible = [(i, cd) for i, cd in enumerate(cands) if cd[1] <= tol and math.isfinite(cd[0])]
    if feasible:
        i, best = min(feasible, key=lambda t: (t[1][0], t[0]))
    else:
        i, best = min(enumerate(cands), key=lambda t: (t[1][1], t[0]))
    nd = len(f2)
    return OptResult(
        point=best[2].copy(),
        value=best[0],
        feasible=best[1] <= tol,
        violation=best[1],
        residual=best[4],
        source=best[3],
        restart_values=[float(v) for v in f2],
        restart_residuals=[float(r) for r in resid],
        converged=[bool(c) for c in conv],
        best_trace=trace,
        corner_best=corner_best,
        corners_evaluated=n_corner,
        grid_best=grid_best,
        grid_evaluated=n_grid,
    )


def finite_difference_gradient_check(obj: SimplexObjective, point: np.ndarray, h: float = 1e-5) -> float:
    """Max relative error between the tangent gradient and central differences.

    Directions are ``e_i - mean`` inside each row, so every probe stays on the
    simplex when ``point`` is interior.
    """
    space = obj.space
    x = np.asarray(point, dtype=float).ravel()
    _, g, _, _ = obj.value_grad(x[None])
    g = space.tangent(g)[0]
    fd = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = 1.0
        d = space.tangent(e[None])[0]
        fp, _ = obj.values((x + h * d)[None])
        fm, _ = obj.values((x - h * d)[None])
        fd[i] = (fp[0] - fm[0]) / (2 * h)
    # the tangent directions are not orthonormal; compare directional derivatives
    dirs = np.array([space.tangent(np.eye(x.size)[i][None])[0] for i in range(x.size)])
    an = dirs @ g
    scale = max(np.abs(an).max(), np.abs(fd).max(), 1e-12)
    if np.abs(an).max() == 0 and np.abs(fd).max() == 0:
        return 0.0
    return float(np.abs(an - fd).max() / scale)
