"""Two-receiver rate-distortion bounds with side information.

Quantities (all in bits per source symbol):

* ``wyner_ziv_s``: S(D2) = min I(X;B|Xt,Y2) with E d2(X, phi(B,Xt,Y2)) <= D2,
  where Xt = psi(X) is what receiver 1 must recover exactly.
* ``hb_upper_bound``: the three-auxiliary achievable rate
  max{I(X;C|Y1), I(X;C|Y2)} + I(X;A|C,Y1) + I(X;B|C,Y2).
* ``degraded_rd``: min I(X;C|Y1) + I(X;B|C,Y2) for physically degraded side
  information.
* ``converse_lower_bound``: H(Xt|Y1) + S(D2) + min_W {I(W;Y2|Xt) - I(W;Y1|Xt)}.
* ``theorem3_rate``: the matched value H(Xt|Y1) + S(D2) when Y2 is
  conditionally less noisy than Y1 given Xt and H(Xt|Y1) >= H(Xt|Y2).

Every solver returns its witness auxiliaries, and every reported value is
recomputed from the witness through :mod:`clnrd.info` as a second route.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classifiers import ClnVerdict, cln_margin, markov_residual
from .errors import InfeasibleDistortion, NotDegraded, NotTwoSource, PsiMissing, ValidationError
from .info import cond_entropy, cond_mutual_info
from .instance import SOURCE, SourceInstance, psi_name
from .prob import Alphabet, AuxiliarySystem, Channel, JointPMF, marginal_array
from .program import AuxSpec, Bound, ChannelProgram, Distortion, I, MaxOf
from .simplex_opt import OptOptions, OptResult, minimize

SANDWICH_TOL = 1e-6
ENTROPY_TOL = 1e-12


@dataclass
class SolveReport:
    value: float
    witness: AuxiliarySystem | None
    distortions: tuple = ()
    feasible: bool = True
    reeval_value: float | None = None
    diagnostics: dict = field(default_factory=dict)
    point: np.ndarray | None = None


@dataclass
class RdBoundsReport:
    lower_bits: float | None
    upper_bits: float | None
    witnesses: dict = field(default_factory=dict)
    condition_checks: dict = field(default_factory=dict)
    rate_bits: float | None = None   # set when the bounds are known to meet

    @property
    def gap_bits(self) -> float | None:
        if self.lower_bits is None or self.upper_bits is None:
            return None
        return self.upper_bits - self.lower_bits


# -- second route: evaluate witnesses through the generic info measures ------

def expected_distortion(j: JointPMF, matrix: np.ndarray, observe: Sequence[str], source: str = SOURCE):
    """Smallest E d(source, xhat(observe)) and the reconstruction table achieving it."""
    obs = list(observe)
    q = marginal_array(j, [source] + obs).reshape(j.alphabet(source).size, -1)
    cost = q.T @ np.asarray(matrix)                  # (observations, reconstructions)
    table = np.argmin(cost, axis=1)
    return float(cost[np.arange(len(table)), table].sum()), table


def _diag(res: OptResult) -> dict:
    return dict(source=res.source, residual=res.residual, violation=res.violation,
                restarts=len(res.restart_values), converged=int(sum(res.converged)),
                restart_values=res.restart_values, best_trace=res.best_trace,
                corner_best=res.corner_best, corners_evaluated=res.corners_evaluated,
                grid_best=res.grid_best, grid_evaluated=res.grid_evaluated)


def _check_d(*ds):
    for d in ds:
        if d < 0:
            raise InfeasibleDistortion(f"distortion level {d} is negative; the minimum achievable is 0")


def _marg(j: JointPMF, names) -> JointPMF:
    return JointPMF(tuple(j.alphabet(n) for n in names), marginal_array(j, names), j.residual)


# -- S(D2) -------------------------------------------------------------------

def _side_known(inst: SourceInstance, receiver: int, known: Sequence[int]):
    """Extended joint and the conditioning names (Xt_k for k in known, then Y_receiver)."""
    ext = inst.extended(list(known))
    return ext, [psi_name(k) for k in known] + [f"Y{receiver}"]


def side_program(inst: SourceInstance, receiver: int, known: Sequence[int], d: float,
                 cap: int | None = None) -> ChannelProgram:
    """min I(X;B|cond) subject to E d_receiver(X, phi(B, cond)) <= d, with B | X."""
    inst.need_psi(*known)
    ext, cond = _side_known(inst, receiver, known)
    base = _marg(ext, [SOURCE] + cond)
    nb = cap or inst.source.size + 1
    return ChannelProgram(base, [AuxSpec("B", nb, (SOURCE,))], [I(SOURCE, "B", tuple(cond))],
                          [Distortion(inst.distortions[receiver - 1], SOURCE, ("B",) + tuple(cond), d)])


def side_value_from_witness(inst: SourceInstance, receiver: int, known: Sequence[int], witness: AuxiliarySystem):
    ext, cond = _side_known(inst, receiver, known)
    j = witness.attach(ext)
    val = cond_mutual_info(j, [SOURCE], [witness.names[0]], cond)
    dist, _ = expected_distortion(j, inst.distortions[receiver - 1], [witness.names[0]] + cond)
    return val, dist


def side_rd(inst: SourceInstance, receiver: int, known: Sequence[int], d: float, opts: OptOptions | None = None,
            cap: int | None = None, warm: Sequence[AuxiliarySystem] = ()) -> SolveReport:
    _check_d(d)
    opts = opts or OptOptions()
    prog = side_program(inst, receiver, known, d, cap)
    starts = [prog.deterministic_point({"B": lambda x: x}),      # B = X: always feasible
              prog.deterministic_point({})]
    starts += [prog.point_from(w) for w in warm]
    res = minimize(prog, opts, starts)
    if not res.feasible:
        raise InfeasibleDistortion(f"no feasible test channel found for D={d}")
    wit = prog.witness(res.point)
    val, dist = side_value_from_witness(inst, receiver, known, wit)
    return SolveReport(res.value, wit, (dist,), True, val, _diag(res), res.point)


def s_value_from_witness(inst: SourceInstance, witness: AuxiliarySystem):
    return side_value_from_witness(inst, 2, [1], witness)


def wyner_ziv_s(inst: SourceInstance, d2: float, opts: OptOptions | None = None, cap: int | None = None,
                warm: Sequence[AuxiliarySystem] = ()) -> SolveReport:
    """S(D2): receiver 2's extra rate once Xt = psi1(X) is known to it."""
    return side_rd(inst, 2, [1], d2, opts, cap, warm)


def time_share(a: AuxiliarySystem, b: AuxiliarySystem, lam: float) -> AuxiliarySystem:
    """Single-auxiliary time sharing: with probability ``lam`` use ``a``, else ``b``, tagged."""
    (ca,), (cb,) = a.channels, b.channels
    if ca.input_names != cb.input_names:
        raise ValidationError("time sharing needs channels with the same inputs")
    sym = tuple(("a", s) for s in ca.output_axis.symbols) + tuple(("b", s) for s in cb.output_axis.symbols)
    out = Alphabet(ca.output_name, sym)
    p = np.concatenate([lam * ca.probs, (1 - lam) * cb.probs], axis=-1)
    return AuxiliarySystem((Channel(ca.input_axes, out, p),))


# -- Heegard-Berger upper bound ---------------------------------------------

def hb_caps(inst: SourceInstance, caps=None, full: bool = False) -> dict:
    nx = inst.source.size
    if full:
        c = nx + 3
        out = {"C": c, "A": c * nx + 1, "B": c * nx + 1}
    else:
        out = {"C": nx + 1, "A": nx + 1, "B": nx + 1}
    out.update(caps or {})
    return out


def hb_program(inst: SourceInstance, d1: float, d2: float, caps: dict, branch: int | None = None) -> ChannelProgram:
    """HB objective; ``branch`` k in (1, 2) replaces the max by I(X;C|Yk) under I(X;C|Yk) >= the other."""
    base = inst.joint
    X = SOURCE
    rest = [I(X, "A", ("C", "Y1")), I(X, "B", ("C", "Y2"))]
    bounds = []
    if branch is None:
        objective = [MaxOf((I(X, "C", "Y1"), I(X, "C", "Y2")))] + rest
    else:
        mine, other = I(X, "C", f"Y{branch}"), I(X, "C", f"Y{3 - branch}")
        objective = [mine] + rest
        bounds = [Bound(other - mine, 0.0)]
    auxes = [AuxSpec("C", caps["C"], (X,)), AuxSpec("A", caps["A"], (X, "C")), AuxSpec("B", caps["B"], (X, "C"))]
    dist = [Distortion(inst.distortions[0], X, ("A", "C", "Y1"), d1),
            Distortion(inst.distortions[1], X, ("B", "C", "Y2"), d2)]
    return ChannelProgram(base, auxes, objective, dist, bounds)


def hb_value_from_witness(inst: SourceInstance, witness: AuxiliarySystem):
    j = witness.attach(inst.joint)
    X = [SOURCE]
    val = max(cond_mutual_info(j, X, ["C"], ["Y1"]), cond_mutual_info(j, X, ["C"], ["Y2"])) \
        + cond_mutual_info(j, X, ["A"], ["C", "Y1"]) + cond_mutual_info(j, X, ["B"], ["C", "Y2"])
    d1, _ = expected_distortion(j, inst.distortions[0], ["A", "C", "Y1"])
    d2, _ = expected_distortion(j, inst.distortions[1], ["B", "C", "Y2"])
    return val, (d1, d2)


def hb_corner_witness(inst: SourceInstance, s_witness: AuxiliarySystem) -> AuxiliarySystem:
    """C = psi1(X), A constant, B the S witness: feasible for D1 = 0 whenever B meets D2."""
    (psi,) = inst.need_psi(1)
    X = inst.source
    c = Channel.deterministic(X, Alphabet("C", psi.codomain.symbols), lambda x: psi.table[x])
    a = Channel.constant(X, Alphabet.range("A", 1))
    (b,) = s_witness.channels
    b = Channel(b.input_axes, Alphabet("B", b.output_axis.symbols), b.probs)
    return AuxiliarySystem((c, a, b))


def _embed_b(prog: ChannelProgram, b_channel: Channel, name: str = "B"):
    """Array for aux ``name | (X, C)`` that ignores C and copies ``b_channel`` (B | X)."""
    spec = prog.auxes[prog.aux_index[name]]
    nc = prog.sizes[spec.given[1]]
    p = np.asarray(b_channel.probs)
    p = np.repeat(p[:, None, :], nc, axis=1)
    return p


def hb_upper_bound(inst: SourceInstance, d1: float, d2: float, opts: OptOptions | None = None,
                   caps=None, full_caps: bool = False, s_witness: AuxiliarySystem | None = None,
                   warm: Sequence[np.ndarray] = ()) -> SolveReport:
    _check_d(d1, d2)
    opts = opts or OptOptions()
    caps = hb_caps(inst, caps, full_caps)
    prog = hb_program(inst, d1, d2, caps)
    ident = lambda x, *r: x
    starts = [prog.deterministic_point({"A": ident, "B": ident}),            # C constant, A = B = X
              prog.deterministic_point({"C": ident}),                       # C = X
              prog.deterministic_point({})]                                  # all constant
    if inst.psi[0] is not None:
        psi = inst.psi[0].table
        xt = lambda x: psi[x]
        starts.append(prog.deterministic_point({"C": xt, "B": ident}))
        if s_witness is None and d1 == 0:
            try:
                s_witness = wyner_ziv_s(inst, d2, opts).witness
            except InfeasibleDistortion:
                s_witness = None
        if s_witness is not None and s_witness.channels[0].output_axis.size <= caps["B"]:
            c = prog.deterministic_point({"C": xt})
            arrs = prog.channels(c[None])
            b = _embed_b(prog, s_witness.channels[0])
            starts.append(prog.point_from([arrs[0][0], arrs[1][0], b]))
    starts += list(warm)
    res = minimize(prog, opts, starts)
    if not res.feasible:
        raise InfeasibleDistortion(f"no feasible auxiliaries found for D=({d1}, {d2})")
    wit = prog.witness(res.point)
    val, dists = hb_value_from_witness(inst, wit)
    diag = _diag(res)
    diag["caps"] = caps
    return SolveReport(res.value, wit, dists, True, val, diag, res.point)


# -- physically degraded case -------------------------------------------------

def degraded_program(inst: SourceInstance, d1: float, d2: float, caps: dict) -> ChannelProgram:
    X = SOURCE
    auxes = [AuxSpec("C", caps["C"], (X,)), AuxSpec("B", caps["B"], (X, "C"))]
    objective = [I(X, "C", "Y1"), I(X, "B", ("C", "Y2"))]
    dist = [Distortion(inst.distortions[0], X, ("C", "Y1"), d1),
            Distortion(inst.distortions[1], X, ("B", "C", "Y2"), d2)]
    return ChannelProgram(inst.joint, auxes, objective, dist)


def degraded_value_from_witness(inst: SourceInstance, witness: AuxiliarySystem):
    j = witness.attach(inst.joint)
    X = [SOURCE]
    val = cond_mutual_info(j, X, ["C"], ["Y1"]) + cond_mutual_info(j, X, ["B"], ["C", "Y2"])
    d1, _ = expected_distortion(j, inst.distortions[0], ["C", "Y1"])
    d2, _ = expected_distortion(j, inst.distortions[1], ["B", "C", "Y2"])
    return val, (d1, d2)


def degraded_rd(inst: SourceInstance, d1: float, d2: float, opts: OptOptions | None = None,
                caps=None, tol: float = 1e-9) -> SolveReport:
    r = markov_residual(inst.joint, [SOURCE], ["Y2"], ["Y1"])
    if r >= tol:
        raise NotDegraded(f"X -- Y2 -- Y1 fails (residual {r:.3g})")
    _check_d(d1, d2)
    opts = opts or OptOptions()
    nx = inst.source.size
    caps = dict({"C": nx + 1, "B": nx + 1}, **(caps or {}))
    prog = degraded_program(inst, d1, d2, caps)
    ident = lambda x, *r: x
    starts = [prog.deterministic_point({"C": ident}), prog.deterministic_point({})]
    if inst.psi[0] is not None:
        psi = inst.psi[0].table
        xt = lambda x: psi[x]
        starts.append(prog.deterministic_point({"C": xt, "B": ident}))
        if d1 == 0:
            sw = wyner_ziv_s(inst, d2, opts).witness
            if sw.channels[0].output_axis.size <= caps["B"]:
                arrs = prog.channels(prog.deterministic_point({"C": xt})[None])
                starts.append(prog.point_from([arrs[0][0], _embed_b(prog, sw.channels[0])]))
    res = minimize(prog, opts, starts)
    if not res.feasible:
        raise InfeasibleDistortion(f"no feasible auxiliaries found for D=({d1}, {d2})")
    wit = prog.witness(res.point)
    val, dists = degraded_value_from_witness(inst, wit)
    diag = _diag(res)
    diag["caps"] = caps
    return SolveReport(res.value, wit, dists, True, val, diag, res.point)


# -- converse and matched rates -------------------------------------------

def _xt_entropies(inst: SourceInstance):
    j = inst.extended([1])
    xt = psi_name(1)
    return cond_entropy(j, xt, "Y1"), cond_entropy(j, xt, "Y2")


def converse_margin(inst: SourceInstance, opts: OptOptions | None = None, limit: int | None = None) -> ClnVerdict:
    (psi,) = inst.need_psi(1)
    return cln_margin(inst.joint, psi, opts, limit=limit or inst.source.size)


@dataclass
class LowerBoundReport:
    value: float
    h_term: float
    s: SolveReport
    margin: ClnVerdict


def converse_lower_bound(inst: SourceInstance, d2: float, opts: OptOptions | None = None,
                         margin: ClnVerdict | None = None, s: SolveReport | None = None) -> LowerBoundReport:
    inst.need_psi(1)
    opts = opts or OptOptions()
    h1, _ = _xt_entropies(inst)
    s = s or wyner_ziv_s(inst, d2, opts)
    margin = margin or converse_margin(inst, opts)
    return LowerBoundReport(h1 + s.value + margin.margin_bits, h1, s, margin)


def theorem3_rate(inst: SourceInstance, d2: float, opts: OptOptions | None = None,
                  cln: ClnVerdict | None = None) -> RdBoundsReport:
    """Matched rate when the conditions hold, otherwise the (lower, upper) sandwich."""
    (psi,) = inst.need_psi(1)
    opts = opts or OptOptions()
    h1, h2 = _xt_entropies(inst)
    cln = cln or cln_margin(inst.joint, psi, opts)
    ent_ok = h1 >= h2 - ENTROPY_TOL
    checks = {"cln": cln.verdict, "cln_margin": cln.margin_bits, "H(Xt|Y1)": h1, "H(Xt|Y2)": h2,
              "entropy_condition": ent_ok}
    s = wyner_ziv_s(inst, d2, opts)
    if cln.holds and ent_ok:
        rate = h1 + s.value
        return RdBoundsReport(rate, rate, {"S": s.witness}, checks, rate)
    low = converse_lower_bound(inst, d2, opts, s=s)
    up = hb_upper_bound(inst, 0.0, d2, opts, s_witness=s.witness)
    checks["converse_margin"] = low.margin.margin_bits
    return RdBoundsReport(low.value, up.value, {"S": s.witness, "HB": up.witness, "W": low.margin.witness}, checks)


@dataclass
class LosslessReport:
    rate_bits: float | None
    formula_bits: float
    conditions: dict


def _component_hamming(inst: SourceInstance) -> bool:
    if inst.components is None or len(inst.components) != 2:
        return False
    for k in (0, 1):
        p = inst.psi[k]
        if p is None or p.table != inst.component_map(k).table:
            return False
    return True


def lossless_two_source_rate(inst: SourceInstance, opts: OptOptions | None = None,
                             cln: ClnVerdict | None = None) -> LosslessReport:
    if not _component_hamming(inst):
        raise NotTwoSource("needs X = (X1, X2) with Hamming distortion on X1 at receiver 1 and X2 at receiver 2")
    j = inst.with_components()
    n1, n2 = inst.components[0].name, inst.components[1].name
    h11 = cond_entropy(j, n1, "Y1")
    h12 = cond_entropy(j, n1, "Y2")
    formula = h11 + cond_entropy(j, n2, [n1, "Y2"])
    cln = cln or cln_margin(inst.joint, inst.component_map(0), opts)
    cond = {"cln": cln.verdict, "cln_margin": cln.margin_bits, "H(X1|Y1)": h11, "H(X1|Y2)": h12,
            "entropy_condition": h11 >= h12 - ENTROPY_TOL}
    ok = cln.holds and cond["entropy_condition"]
    return LosslessReport(formula if ok else None, formula, cond)


# -- sweeps -------------------------------------------------------------------

@dataclass
class SweepRow:
    d2: float
    lower_bits: float
    upper_bits: float
    gap_bits: float
    cln_margin: float
    s_bits: float


def _lower_hull(ds: np.ndarray, vs: np.ndarray) -> list[int]:
    """Indices of the vertices of the lower convex hull (monotone chain)."""
    hull: list[int] = []
    for i in range(len(ds)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (ds[b] - ds[a]) * (vs[i] - vs[a]) - (vs[b] - vs[a]) * (ds[i] - ds[a])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def s_curve(inst: SourceInstance, grid: Sequence[float], opts: OptOptions | None = None,
            cap: int | None = None) -> list[SolveReport]:
    """S on a grid: warm-started both ways, then made non-increasing and convex.

    A point that lies above the chord of its neighbours is replaced by the
    time-shared witness of the two hull vertices around it, which is feasible
    for the interpolated distortion level.
    """
    grid = [float(d) for d in grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValidationError("distortion grid must be sorted ascending")
    opts = opts or OptOptions()
    reps: list[SolveReport] = []
    for d in grid:
        warm = [reps[-1].witness] if reps else []
        reps.append(wyner_ziv_s(inst, d, opts, cap, warm))
    for i in range(len(grid) - 2, -1, -1):
        r = wyner_ziv_s(inst, grid[i], opts, cap, [reps[i].witness, reps[i + 1].witness])
        # the next point's witness is infeasible here in general, so only accept improvements
        if r.value < reps[i].value:
            reps[i] = r
    for i in range(1, len(reps)):
        if reps[i].value > reps[i - 1].value:
            prev = reps[i - 1]
            reps[i] = SolveReport(prev.value, prev.witness, prev.distortions, True, prev.reeval_value,
                                  dict(prev.diagnostics, reused_from=grid[i - 1]), prev.point)
    if len(grid) >= 3:
        ds = np.array(grid)
        vs = np.array([r.value for r in reps])
        hull = _lower_hull(ds, vs)
        for a, b in zip(hull, hull[1:]):
            for i in range(a + 1, b):
                lam = (ds[b] - ds[i]) / (ds[b] - ds[a])
                val = lam * vs[a] + (1 - lam) * vs[b]
                if val < vs[i]:
                    wit = time_share(reps[a].witness, reps[b].witness, lam)
                    rv, dist = s_value_from_witness(inst, wit)
                    reps[i] = SolveReport(val, wit, (dist,), True, rv,
                                          dict(reps[i].diagnostics, time_shared=(grid[a], grid[b], lam)))
    return reps


def rd_curve_sweep(inst: SourceInstance, grid: Sequence[float], opts: OptOptions | None = None,
                   with_upper: bool = True, margin: ClnVerdict | None = None) -> list[SweepRow]:
    inst.need_psi(1)
    opts = opts or OptOptions()
    h1, _ = _xt_entropies(inst)
    margin = margin or converse_margin(inst, opts)
    srep = s_curve(inst, grid, opts)
    rows = []
    for d, s in zip(grid, srep):
        low = h1 + s.value + margin.margin_bits
        if with_upper:
            # the corner witness already closes the sandwich when the conditions hold
            up, (d1, d2) = hb_value_from_witness(inst, hb_corner_witness(inst, s.witness))
            if d1 > 1e-12 or d2 > d + 1e-9 or up - low > SANDWICH_TOL:
                fit = s.witness.channels[0].output_axis.size <= inst.source.size + 1
                up = min(up, hb_upper_bound(inst, 0.0, d, opts, s_witness=s.witness if fit else None).value)
        else:
            up = float("nan")
        rows.append(SweepRow(float(d), low, up, up - low, margin.margin_bits, s.value))
    return rows
