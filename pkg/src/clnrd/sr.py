"""Successive refinement and side-information-scalable coding.

Regions are staircases, so every result is a ``RegionCorner``: the cumulative
thresholds on R1, R1+R2 (and R1+R2+R3).  Receiver ``j`` reconstructs from
its side information and every auxiliary it has decoded:

* three-stage inner bound: receiver j reads (A1..Aj, Yj);
* scalable inner bound: receiver 1 reads (A12, A1, Y1), receiver 2 reads
  (A12, A2, Y2);
* seven-auxiliary bound: receiver j reads the U's whose index contains j.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classifiers import ClnVerdict, cln_margin, markov_residual
from .errors import DistortionViolated, InfeasibleDistortion, NoDegradationRelation, NotDegraded, ValidationError
from .info import cond_entropy, cond_mutual_info
from .instance import SOURCE, SourceInstance, psi_name
from .prob import Alphabet, AuxiliarySystem, Channel, DeterministicMap, JointPMF
from .program import AuxSpec, ChannelProgram, Distortion, I
from .rd import SolveReport, _diag, expected_distortion, side_rd
from .simplex_opt import OptOptions, minimize

DISTORTION_TOL = 1e-9
TCG_NAMES = ("U123", "U12", "U13", "U23", "U1", "U2", "U3")


@dataclass
class RegionCorner:
    thresholds: tuple                   # cumulative sum-rate thresholds
    witness: AuxiliarySystem | None = None
    distortions: tuple = ()
    parts: dict = field(default_factory=dict)

    @property
    def increments(self) -> tuple:
        t = (0.0,) + tuple(self.thresholds)
        return tuple(b - a for a, b in zip(t, t[1:]))

    def contains(self, rates: Sequence[float], tol: float = 1e-9) -> bool:
        cum = np.cumsum(rates)
        return bool(np.all(cum >= np.asarray(self.thresholds) - tol))


# -- helpers ------------------------------------------------------------------

def copy_channel(src: Alphabet, name: str) -> Channel:
    return Channel.deterministic((src,), src.renamed(name), lambda i: i)


def map_channel(psi: DeterministicMap, name: str) -> Channel:
    table = psi.table
    return Channel.deterministic((psi.domain,), psi.codomain.renamed(name), lambda i: table[i])


def constant_channel(src: Alphabet, name: str) -> Channel:
    return Channel.constant((src,), Alphabet(name, (0,)))


def renamed_channel(ch: Channel, name: str) -> Channel:
    return Channel(ch.input_axes, ch.output_axis.renamed(name), ch.probs)


def _check_system(inst: SourceInstance, aux: AuxiliarySystem, names: Sequence[str]):
    """Auxiliaries may only read X and earlier auxiliaries, which gives aux -- X -- side info."""
    seen = {SOURCE}
    for ch in aux.channels:
        bad = [n for n in ch.input_names if n not in seen]
        if bad:
            raise ValidationError(f"auxiliary {ch.output_name} reads {bad}; only X and earlier auxiliaries are allowed")
        seen.add(ch.output_name)
    for n in names:
        aux[n]


def _with_y3(inst: SourceInstance) -> JointPMF:
    """Joint with a constant ``Y3`` axis when the instance has two receivers."""
    j = inst.joint
    if inst.receivers == 3:
        return j
    return JointPMF(j.axes + (Alphabet("Y3", (0,)),), j.probs[..., None], j.residual)


def _check_distortions(inst: SourceInstance, j: JointPMF, observe: Sequence[Sequence[str]], d) -> tuple:
    out = []
    d = tuple(d) if d is not None else (None,) * len(observe)
    for k, (obs, bound) in enumerate(zip(observe, d)):
        if k >= inst.receivers:
            break
        e, _ = expected_distortion(j, inst.distortions[k], obs)
        if bound is not None and np.isfinite(bound) and e > bound + DISTORTION_TOL:
            raise DistortionViolated(f"receiver {k + 1}: expected distortion {e:.6g} exceeds {bound}")
        out.append(e)
    return tuple(out)


# -- three-stage inner bound --------------------------------------------------

def sr_inner_eval(inst: SourceInstance, aux: AuxiliarySystem, d=None) -> RegionCorner:
    """Thresholds of the three-stage inner bound for auxiliaries named A1, A2, A3."""
    _check_system(inst, aux, ("A1", "A2", "A3"))
    j = aux.attach(_with_y3(inst))
    X = [SOURCE]
    mi = lambda a, given: cond_mutual_info(j, X, [a], given)
    a1 = [mi("A1", [f"Y{k}"]) for k in (1, 2, 3)]
    a2 = [mi("A2", ["A1", f"Y{k}"]) for k in (2, 3)]
    a3 = mi("A3", ["A1", "A2", "Y3"])
    t1 = a1[0]
    t2 = max(a1[:2]) + a2[0]
    t3 = max(a1) + max(a2) + a3
    dist = _check_distortions(inst, j, [["A1", "Y1"], ["A1", "A2", "Y2"], ["A1", "A2", "A3", "Y3"]], d)
    parts = {"I(X;A1|Yj)": tuple(a1), "I(X;A2|A1,Yj)": tuple(a2), "I(X;A3|A1,A2,Y3)": a3}
    return RegionCorner((t1, t2, t3), aux, dist, parts)


def sprime(inst: SourceInstance, d3: float, opts: OptOptions | None = None, cap: int | None = None,
           warm: Sequence[AuxiliarySystem] = ()) -> SolveReport:
    """S'(D3): receiver 3's extra rate once psi1(X) and psi2(X) are known to it."""
    return side_rd(inst, 3, [1, 2], d3, opts, cap, warm)


def _degraded_chain_residual(inst: SourceInstance) -> float:
    j = inst.joint
    return max(markov_residual(j, [SOURCE], ["Y3"], ["Y2"]),
               markov_residual(j, [SOURCE, "Y3"], ["Y2"], ["Y1"]))


def sr_degraded_corner(inst: SourceInstance, d1: float, d2: float, d3: float, opts: OptOptions | None = None,
                       caps=None, tol: float = 1e-9) -> RegionCorner:
    """Corner of the three-stage region when X -- Y3 -- Y2 -- Y1.

    With deterministic receivers 1 and 2 at D1 = D2 = 0 the corner is closed
    form plus one S' solve.  Otherwise the total sum rate is minimized over
    (A1, A2, A3) and the thresholds of the minimizer are reported.
    """
    r = _degraded_chain_residual(inst)
    if r >= tol:
        raise NotDegraded(f"X -- Y3 -- Y2 -- Y1 fails (residual {r:.3g})")
    opts = opts or OptOptions()
    if d1 == 0 and d2 == 0 and inst.psi[0] is not None and inst.psi[1] is not None:
        ext = inst.extended([1, 2])
        h1 = cond_entropy(ext, psi_name(1), "Y1")
        h2 = cond_entropy(ext, psi_name(2), [psi_name(1), "Y2"])
        sp = sprime(inst, d3, opts)
        aux = AuxiliarySystem((map_channel(inst.psi[0], "A1"), map_channel(inst.psi[1], "A2"),
                               renamed_channel(sp.witness.channels[0], "A3")))
        return RegionCorner((h1, h1 + h2, h1 + h2 + sp.value), aux, sp.distortions,
                            {"H(Xt1|Y1)": h1, "H(Xt2|Xt1,Y2)": h2, "S'": sp.value, "closed": True})
    nx = inst.source.size
    caps = dict({"A1": nx + 1, "A2": nx + 1, "A3": nx + 1}, **(caps or {}))
    X = SOURCE
    prog = ChannelProgram(
        inst.joint,
        [AuxSpec("A1", caps["A1"], (X,)), AuxSpec("A2", caps["A2"], (X, "A1")),
         AuxSpec("A3", caps["A3"], (X, "A1", "A2"))],
        [I(X, "A1", "Y1"), I(X, "A2", ("A1", "Y2")), I(X, "A3", ("A1", "A2", "Y3"))],
        [Distortion(inst.distortions[0], X, ("A1", "Y1"), d1),
         Distortion(inst.distortions[1], X, ("A1", "A2", "Y2"), d2),
         Distortion(inst.distortions[2], X, ("A1", "A2", "A3", "Y3"), d3)])
    ident = lambda x, *r: x
    starts = [prog.deterministic_point({"A1": ident}), prog.deterministic_point({"A2": ident}),
              prog.deterministic_point({"A3": ident}), prog.deterministic_point({})]
    res = minimize(prog, opts, starts)
    if not res.feasible:
        raise InfeasibleDistortion(f"no feasible auxiliaries for D=({d1}, {d2}, {d3})")
    corner = sr_inner_eval(inst, prog.witness(res.point), (d1, d2, d3))
    corner.parts.update(closed=False, optimizer=_diag(res))
    return corner


@dataclass
class OuterBound:
    thresholds: tuple
    margins: tuple                       # (stage-2 margin, stage-3 margin), each <= 0
    verdicts: tuple                      # the ClnVerdict objects behind the margins
    sprime: SolveReport
    parts: dict = field(default_factory=dict)


def sr_outer_bound(inst: SourceInstance, d3: float, opts: OptOptions | None = None,
                   limit: int | None = None) -> OuterBound:
    """Outer thresholds for D1 = D2 = 0 with deterministic receivers 1 and 2."""
    inst.need_psi(1, 2)
    opts = opts or OptOptions()
    ext = inst.extended([1, 2])
    x1, x2 = psi_name(1), psi_name(2)
    h1 = cond_entropy(ext, x1, "Y1")
    h2 = cond_entropy(ext, x2, [x1, "Y2"])
    sp = sprime(inst, d3, opts)
    limit = limit or inst.source.size
    v1 = cln_margin(ext, [x1], opts, better="Y2", worse="Y1", limit=limit)
    v2 = cln_margin(ext, [x1, x2], opts, better="Y3", worse="Y2", limit=limit)
    m1, m2 = v1.margin_bits, v2.margin_bits
    t = (h1, h1 + h2 + m1, h1 + h2 + sp.value + m1 + m2)
    return OuterBound(t, (m1, m2), (v1, v2), sp, {"H(Xt1|Y1)": h1, "H(Xt2|Xt1,Y2)": h2, "S'": sp.value})


@dataclass
class Theorem5Report:
    exact: bool
    corner: RegionCorner | None          # the exact region's corner when ``exact``
    inner: RegionCorner
    outer: OuterBound
    checks: dict


def theorem5_region(inst: SourceInstance, d3: float, opts: OptOptions | None = None,
                    limit: int | None = None) -> Theorem5Report:
    """Exact corner when both CLN orders and both entropy orderings hold, else a sandwich.

    The CLN verdicts come from the same margins as the outer bound.
    """
    inst.need_psi(1, 2)
    opts = opts or OptOptions()
    outer = sr_outer_bound(inst, d3, opts, limit)
    ext = inst.extended([1, 2])
    x1, x2 = psi_name(1), psi_name(2)
    hy = {k: cond_entropy(ext, x1, f"Y{k}") for k in (1, 2, 3)}
    h22 = cond_entropy(ext, x2, [x1, "Y2"])
    h23 = cond_entropy(ext, x2, [x1, "Y3"])
    eps = 1e-12
    checks = {
        "cln_Y2_Y1_given_Xt1": outer.verdicts[0].verdict,
        "cln_Y3_Y2_given_Xt1Xt2": outer.verdicts[1].verdict,
        "H(Xt1|Y1)>=max(H(Xt1|Y2),H(Xt1|Y3))": hy[1] >= max(hy[2], hy[3]) - eps,
        "H(Xt2|Xt1,Y2)>=H(Xt2|Xt1,Y3)": h22 >= h23 - eps,
    }
    aux = AuxiliarySystem((map_channel(inst.psi[0], "A1"), map_channel(inst.psi[1], "A2"),
                           renamed_channel(outer.sprime.witness.channels[0], "A3")))
    inner = sr_inner_eval(inst, aux, (0.0, 0.0, d3))
    ok = all(v is True or v == "CLN" for v in checks.values())
    corner = None
    if ok:
        h1, sp = hy[1], outer.sprime.value
        corner = RegionCorner((h1, h1 + h22, h1 + h22 + sp), aux, inner.distortions,
                              {"H(Xt1|Y1)": h1, "H(Xt2|Xt1,Y2)": h22, "S'": sp})
    return Theorem5Report(ok, corner, inner, outer, checks)


# -- scalable side information -----------------------------------------------

def scalable_inner_eval(inst: SourceInstance, aux: AuxiliarySystem, d=None) -> RegionCorner:
    """Thresholds (R1, R1+R2) of the scalable inner bound for auxiliaries A12, A1, A2."""
    _check_system(inst, aux, ("A12", "A1", "A2"))
    j = aux.attach(inst.joint)
    X = [SOURCE]
    t1 = cond_mutual_info(j, X, ["A12", "A1"], ["Y1"])
    c1 = cond_mutual_info(j, X, ["A12"], ["Y1"])
    c2 = cond_mutual_info(j, X, ["A12"], ["Y2"])
    r1 = cond_mutual_info(j, X, ["A1"], ["A12", "Y1"])
    r2 = cond_mutual_info(j, X, ["A2"], ["A12", "Y2"])
    dist = _check_distortions(inst, j, [["A12", "A1", "Y1"], ["A12", "A2", "Y2"]], d)
    return RegionCorner((t1, max(c1, c2) + r1 + r2), aux, dist,
                        {"I(X;A12|Yj)": (c1, c2), "I(X;A1|A12,Y1)": r1, "I(X;A2|A12,Y2)": r2})


def find_factor(outer: DeterministicMap, inner: DeterministicMap) -> DeterministicMap | None:
    """Search all maps f with outer = f o inner; return the first found or None.

    Only the image of ``inner`` constrains f; symbols outside it map to index 0.
    """
    image = sorted(set(inner.table))
    for choice in itertools.product(range(outer.codomain.size), repeat=len(image)):
        f = dict(zip(image, choice))
        if all(f[inner.table[x]] == outer.table[x] for x in range(inner.domain.size)):
            table = tuple(f.get(i, 0) for i in range(inner.codomain.size))
            return DeterministicMap(inner.codomain, outer.codomain, table)
    return None


@dataclass
class Theorem6Report:
    case: str | None                     # "i", "ii" or None when no case's conditions hold
    corner: RegionCorner | None
    psi_prime: DeterministicMap | None
    checks: dict


def theorem6_region(inst: SourceInstance, opts: OptOptions | None = None,
                    limit: int | None = None) -> Theorem6Report:
    """Matched scalable region at D1 = D2 = 0 for nested deterministic distortions."""
    p1, p2 = inst.need_psi(1, 2)
    opts = opts or OptOptions()
    f21 = find_factor(p2, p1)          # psi2 = f o psi1: case (i)
    f12 = find_factor(p1, p2)          # psi1 = f o psi2: case (ii)
    if f21 is None and f12 is None:
        raise NoDegradationRelation("neither reconstruction map factors through the other")
    ext = inst.extended([1, 2])
    x1, x2 = psi_name(1), psi_name(2)
    eps = 1e-12
    checks: dict = {}
    if f21 is not None:
        h21, h22 = cond_entropy(ext, x2, "Y1"), cond_entropy(ext, x2, "Y2")
        v = cln_margin(ext, [x2], opts, better="Y1", worse="Y2", limit=limit)
        checks.update({"i:H(Xt2|Y1)<=H(Xt2|Y2)": h21 <= h22 + eps, "i:cln_Y1_Y2_given_Xt2": v.verdict,
                       "i:cln_margin": v.margin_bits})
        if h21 <= h22 + eps and v.holds:
            h1 = cond_entropy(ext, x1, "Y1")
            h12 = cond_entropy(ext, x1, [x2, "Y1"])
            aux = AuxiliarySystem((map_channel(p2, "A12"), map_channel(p1, "A1"), map_channel(p2, "A2")))
            return Theorem6Report("i", RegionCorner((h1, h22 + h12), aux, (0.0, 0.0)), f21, checks)
    if f12 is not None:
        h11, h12 = cond_entropy(ext, x1, "Y1"), cond_entropy(ext, x1, "Y2")
        checks["ii:H(Xt1|Y1)<=H(Xt1|Y2)"] = h11 <= h12 + eps
        if h11 <= h12 + eps:
            h22 = cond_entropy(ext, x2, "Y2")
            aux = AuxiliarySystem((map_channel(p1, "A12"), constant_channel(inst.source, "A1"),
                                   map_channel(p2, "A2")))
            return Theorem6Report("ii", RegionCorner((h11, h22), aux, (0.0, 0.0)), f12, checks)
    return Theorem6Report(None, None, f21 if f21 is not None else f12, checks)


# -- seven-auxiliary evaluator ---------------------------------------------

def tcg_eval(inst: SourceInstance, aux: AuxiliarySystem, d=None) -> RegionCorner:
    """Evaluate the seven-auxiliary sum-rate thresholds term by term.

    A two-receiver instance gets a constant Y3 and no receiver-3 distortion check.
    """
    _check_system(inst, aux, TCG_NAMES)
    j = aux.attach(_with_y3(inst))
    mi = lambda a, b, given=(): cond_mutual_info(j, list(a), list(b), list(given))
    X = ["X"]
    u123 = ["U123"]
    # first and second stage pieces
    p123 = mi(X, u123)
    r123 = [mi(u123, [f"Y{k}"]) for k in (1, 2, 3)]
    p12 = mi(X, ["U12"], u123)
    r12 = [mi(["U12"], [f"Y{k}"], u123) for k in (1, 2)]
    p13 = mi(X + ["U12"], ["U13"], u123)
    r13_1 = mi(["U13"], ["U12", "Y1"], u123)
    r13_3 = mi(["U13"], ["Y3"], u123)
    p23 = mi(X + ["U12", "U13"], ["U23"], u123)
    r23_2 = mi(["U23"], ["U12", "Y2"], u123)
    r23_3 = mi(["U23"], ["U13", "Y3"], u123)
    g1 = ["U123", "U12", "U13"]
    g2 = ["U123", "U12", "U23"]
    g3 = ["U123", "U13", "U23"]
    q1 = mi(X, ["U1"], g1) - mi(["U1"], ["Y1"], g1)
    q2 = mi(X, ["U2"], g2) - mi(["U2"], ["Y2"], g2)
    q3 = mi(X, ["U3"], g3) - mi(["U3"], ["Y3"], g3)

    t1 = p123 - r123[0] + p12 - r12[0] + p13 - r13_1 + q1
    t2 = (p123 - min(r123[:2]) + p12 - min(r12) + p13 - r13_1 + p23 - r23_2 + q1 + q2)
    t3 = (p123 - min(r123) + p12 - min(r12) + p13 - min(r13_1, r13_3) + p23 - min(r23_2, r23_3)
          + q1 + q2 + q3)
    observe = [g1 + ["U1", "Y1"], g2 + ["U2", "Y2"], g3 + ["U3", "Y3"]]
    dist = _check_distortions(inst, j, observe, d)
    thresholds = (t1, t2, t3) if inst.receivers == 3 else (t1, t2)
    return RegionCorner(thresholds, aux, dist)


def tcg_from_sr(aux: AuxiliarySystem, source: Alphabet) -> AuxiliarySystem:
    """U123 = U1 = A1, U23 = U2 = A2, U3 = A3, with U12 and U13 constant."""
    a1, a2, a3 = (aux[n].output_axis for n in ("A1", "A2", "A3"))
    extra = (copy_channel(a1, "U123"), constant_channel(source, "U12"), constant_channel(source, "U13"),
             copy_channel(a2, "U23"), copy_channel(a1, "U1"), copy_channel(a2, "U2"), copy_channel(a3, "U3"))
    return AuxiliarySystem(aux.channels + extra)


def tcg_from_scalable(aux: AuxiliarySystem, source: Alphabet) -> AuxiliarySystem:
    """U12 = A12, U1 = A1, U2 = A2, with U123, U13, U23 and U3 constant."""
    a12, a1, a2 = (aux[n].output_axis for n in ("A12", "A1", "A2"))
    extra = (constant_channel(source, "U123"), copy_channel(a12, "U12"), constant_channel(source, "U13"),
             constant_channel(source, "U23"), copy_channel(a1, "U1"), copy_channel(a2, "U2"),
             constant_channel(source, "U3"))
    return AuxiliarySystem(aux.channels + extra)


def random_sr_system(rng: np.random.Generator, source: Alphabet, sizes=(2, 3, 2)) -> AuxiliarySystem:
    """Random A1 | X, A2 | (X, A1), A3 | (X, A1, A2)."""
    a = [Alphabet.range(f"A{k}", s) for k, s in zip((1, 2, 3), sizes)]
    chans = []
    for k in range(3):
        ins = (source,) + tuple(a[:k])
        shape = tuple(x.size for x in ins)
        chans.append(Channel(ins, a[k], rng.dirichlet(np.ones(a[k].size), size=shape)))
    return AuxiliarySystem(tuple(chans))


def random_scalable_system(rng: np.random.Generator, source: Alphabet, sizes=(2, 3, 2)) -> AuxiliarySystem:
    """Random A12 | X, A1 | (X, A12), A2 | (X, A12)."""
    a12, a1, a2 = (Alphabet.range(n, s) for n, s in zip(("A12", "A1", "A2"), sizes))
    c12 = Channel((source,), a12, rng.dirichlet(np.ones(a12.size), size=source.size))
    c1 = Channel((source, a12), a1, rng.dirichlet(np.ones(a1.size), size=(source.size, a12.size)))
    c2 = Channel((source, a12), a2, rng.dirichlet(np.ones(a2.size), size=(source.size, a12.size)))
    return AuxiliarySystem((c12, c1, c2))
