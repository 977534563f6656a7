"""Orderings between two side-information variables.

* physical degradedness: the Markov chain X -- Y2 -- Y1,
* stochastic degradedness: some channel Q(y1|y2) turns P(y2|x) into P(y1|x),
* conditionally less noisy ``Y2 >= Y1 | L``: I(W;Y2|L) >= I(W;Y1|L) for every
  W with W -- (X,L) -- (Y1,Y2); with L constant this is the less noisy order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import UnknownVariable
from .info import cond_entropy, cond_mutual_info
from .lp import phase_one
from .prob import (
    Channel,
    DeterministicMap,
    JointPMF,
    _names,
    attach_auxiliary,
    conditional,
    derive_variable,
    factorization_gap,
    marginal_array,
)
from .program import AuxSpec, ChannelProgram, I
from .simplex_opt import OptOptions, minimize

VERDICT_TOL = 1e-6
CLN, NOT_CLN, INCONCLUSIVE = "CLN", "NotCLN", "Inconclusive"


def markov_residual(j: JointPMF, a, b, c) -> float:
    """Max factorization gap for the chain a -- b -- c (zero iff the chain holds)."""
    return factorization_gap(j, _names(a), _names(b), _names(c))


@dataclass(frozen=True)
class DegradednessResult:
    feasible: bool
    witness: Channel | None
    margin: float          # phase-1 optimum: 0 when feasible, > 0 certifies infeasibility
    dropped_rows: tuple    # source symbols with zero probability, left out of the system


def stochastic_degradedness(j: JointPMF, better: str = "Y2", worse: str = "Y1", source: str = "X",
                            tol: float = 1e-9) -> DegradednessResult:
    """Decide whether P(worse|source) = sum_b P(better=b|source) Q(worse|b) for some channel Q."""
    pxy2 = marginal_array(j, [source, better])
    pxy1 = marginal_array(j, [source, worse])
    px = pxy2.sum(axis=1)
    keep = np.flatnonzero(px > 0)
    dropped = tuple(j.alphabet(source).symbols[i] for i in np.flatnonzero(px <= 0))
    c2 = pxy2[keep] / px[keep, None]
    c1 = pxy1[keep] / px[keep, None]
    nb, nw = c2.shape[1], c1.shape[1]
    # unknowns Q[b, w] flattened row-major
    rows, rhs = [], []
    for i in range(len(keep)):
        for w in range(nw):
            r = np.zeros((nb, nw))
            r[:, w] = c2[i]
            rows.append(r.ravel())
            rhs.append(c1[i, w])
    for b in range(nb):
        r = np.zeros((nb, nw))
        r[b, :] = 1.0
        rows.append(r.ravel())
        rhs.append(1.0)
    res = phase_one(np.array(rows), np.array(rhs), tol=tol)
    witness = None
    if res.feasible:
        q = res.x.reshape(nb, nw)
        q = np.clip(q, 0.0, None)
        q /= q.sum(axis=1, keepdims=True)
        witness = Channel((j.alphabet(better),), j.alphabet(worse), q)
    return DegradednessResult(res.feasible, witness, res.infeasibility, dropped)


@dataclass
class ClnVerdict:
    margin_bits: float
    witness: Channel | None
    searched_cardinality: int
    verdict: str
    reeval_margin: float | None = None
    per_cardinality: list = field(default_factory=list)
    converged: bool = True
    better: str = "Y2"
    worse: str = "Y1"
    given: tuple = ()

    @property
    def holds(self) -> bool:
        return self.verdict == CLN


def _resolve_given(j: JointPMF, L, source: str):
    if L is None:
        return j, ()
    if isinstance(L, DeterministicMap):
        name = "L" if "L" not in j else "L_"
        return derive_variable(j, L, name), (name,)
    names = _names(L)
    for n in names:
        j.index(n)
    return j, names


def cln_margin(j: JointPMF, L=None, opts: OptOptions | None = None, better: str = "Y2", worse: str = "Y1",
               source: str = "X", limit: int | None = None, tol: float = VERDICT_TOL) -> ClnVerdict:
    """Minimize I(W;better|L) - I(W;worse|L) over channels W | (source, L).

    When L is a function of the source the channel only reads the source.
    Cardinalities 1..limit are searched in turn, each warm-started from the
    best channel of the previous size, so the reported margin is monotone.
    """
    opts = opts or OptOptions()
    j, given = _resolve_given(j, L, source)
    for n in (source, better, worse):
        j.index(n)
    lsize = int(np.prod([j.alphabet(n).size for n in given], dtype=np.int64)) if given else 1
    nx = j.alphabet(source).size
    limit = limit or nx * lsize + 1
    l_from_x = not given or cond_entropy(j, given, [source]) <= 1e-12
    cond = (source,) if l_from_x else (source,) + tuple(n for n in given if n != source)
    base = _marginal_joint(j, tuple(dict.fromkeys((source, better, worse) + tuple(given))))
    objective = [I("W", better, given) - I("W", worse, given)]

    best_val, best_x, best_prog, best_k = 0.0, None, None, 1
    per_k, any_conv = [(1, 0.0)], False
    prev = None
    for k in range(2, limit + 1):
        prog = ChannelProgram(base, [AuxSpec("W", k, cond)], objective)
        warm = []
        if prev is not None:
            warm.append(prog.point_from([prev[1].channels(prev[0])[0][0]]))
        res = minimize(prog, opts, warm)
        any_conv |= res.any_converged or res.source == "corner"
        val = min(res.value, per_k[-1][1])
        if res.value < best_val:
            best_val, best_x, best_prog, best_k = res.value, res.point, prog, k
        per_k.append((k, val))
        prev = (res.point, prog)

    witness, reeval = None, 0.0
    if best_prog is not None:
        witness = best_prog.witness(best_x).channels[0]
        jw = attach_auxiliary(base, witness)
        reeval = cond_mutual_info(jw, "W", better, given) - cond_mutual_info(jw, "W", worse, given)
    margin = min(best_val, 0.0)
    if margin < -tol:
        verdict = NOT_CLN
    else:
        verdict = CLN if (any_conv or limit <= 1) else INCONCLUSIVE
    return ClnVerdict(margin, witness, best_k if witness is not None else 1, verdict, reeval, per_k,
                      any_conv, better, worse, tuple(given))


def is_less_noisy(j: JointPMF, opts: OptOptions | None = None, better: str = "Y2", worse: str = "Y1",
                  source: str = "X", limit: int | None = None) -> ClnVerdict:
    return cln_margin(j, None, opts, better, worse, source, limit)


def _marginal_joint(j: JointPMF, names) -> JointPMF:
    return JointPMF(tuple(j.alphabet(n) for n in names), marginal_array(j, names), j.residual)


def is_physically_degraded(j: JointPMF, better: str = "Y2", worse: str = "Y1", source: str = "X",
                           tol: float = 1e-9) -> bool:
    return markov_residual(j, [source], [better], [worse]) < tol
