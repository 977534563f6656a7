"""Numeric checks of the n-letter identities behind the converse arguments.

``telescoping_residual`` and ``csiszar_residual`` take a joint over axes named
``A1..An, B1..Bn``.  ``single_letterize`` builds the time-shared auxiliary used
to turn an n-letter difference of conditional mutual informations into n times
a single-letter difference, and reports how well the equality and the Markov
chain hold.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import BadAxisLabeling, BudgetExceeded, ChannelAxisMismatch
from .info import cond_mutual_info, mutual_info
from .prob import (
    CELL_BUDGET,
    Alphabet,
    Channel,
    JointPMF,
    attach_auxiliary,
    factorization_gap,
    iid_extension,
    marginal_array,
)

BASE_NAMES = ("R", "S1", "S2", "T", "L")


def _block_length(j: JointPMF) -> int:
    pat = re.compile(r"^([AB])(\d+)$")
    a, b = set(), set()
    for name in j.names:
        m = pat.match(name)
        if not m:
            raise BadAxisLabeling(f"axis {name!r} is not of the form A<i> or B<i>")
        (a if m.group(1) == "A" else b).add(int(m.group(2)))
    n = len(a)
    if n < 1 or a != set(range(1, n + 1)) or b != a:
        raise BadAxisLabeling(f"axes must be A1..An and B1..Bn, got {j.names}")
    return n


def _A(lo: int, hi: int) -> list[str]:
    return [f"A{k}" for k in range(lo, hi + 1)]


def _B(lo: int, hi: int) -> list[str]:
    return [f"B{k}" for k in range(lo, hi + 1)]


def telescoping_sides(j: JointPMF) -> tuple[float, float]:
    n = _block_length(j)
    left = sum(mutual_info(j, _A(1, i), _B(i + 1, n)) for i in range(1, n + 1))
    right = sum(mutual_info(j, _A(1, i - 1), _B(i, n)) for i in range(1, n + 1))
    return left, right


def telescoping_residual(j: JointPMF) -> float:
    left, right = telescoping_sides(j)
    return abs(left - right)


def csiszar_sides(j: JointPMF) -> tuple[float, float]:
    n = _block_length(j)
    left = sum(cond_mutual_info(j, [f"A{i}"], _B(i + 1, n), _A(1, i - 1)) for i in range(1, n + 1))
    right = sum(cond_mutual_info(j, [f"B{i}"], _A(1, i - 1), _B(i + 1, n)) for i in range(1, n + 1))
    return left, right


def csiszar_residual(j: JointPMF) -> float:
    left, right = csiszar_sides(j)
    return abs(left - right)


@dataclass(frozen=True)
class LetterizationReport:
    n: int
    lhs_bits: float
    rhs_bits: float
    residual: float
    markov_residual: float
    w_alphabet_size: int
    # chain W -- R -- (S1,S2,T); only meaningful when L is a function of R
    strong_markov_residual: float
    w_joint: JointPMF


def _sub(name: str, lo: int, hi: int) -> list[str]:
    return [f"{name}_{k}" for k in range(lo, hi + 1)]


def single_letterize(base: JointPMF, j_channel: Channel, n: int) -> LetterizationReport:
    """Build W_i and the time-shared (W_Q, Q) from an n-letter J and compare both sides."""
    if sorted(base.names) != sorted(BASE_NAMES):
        raise BadAxisLabeling(f"base joint must have axes {BASE_NAMES}, got {base.names}")
    if not 1 <= n <= 3:
        raise BudgetExceeded("single_letterize supports blocklengths 1..3")
    base = base.transpose(BASE_NAMES)
    want = set(_sub("R", 1, n) + _sub("L", 1, n))
    if set(j_channel.input_names) != want or len(j_channel.input_names) != len(want):
        raise ChannelAxisMismatch(f"J must read exactly {sorted(want)}, got {j_channel.input_names}")
    cells = base.probs.size ** n * j_channel.output_axis.size
    if cells > CELL_BUDGET:
        raise BudgetExceeded(f"n-letter joint needs {cells} cells")

    ext = iid_extension(base, n)
    jn = attach_auxiliary(ext, j_channel)
    J = j_channel.output_name
    S1n, S2n, Ln = _sub("S1", 1, n), _sub("S2", 1, n), _sub("L", 1, n)
    lhs = cond_mutual_info(jn, [J], S2n, Ln) - cond_mutual_info(jn, [J], S1n, Ln)

    # stack the per-letter joints p(w_i, r_i, s1_i, s2_i, t_i, l_i), tagging each with Q = i
    blocks, symbols = [], []
    for i in range(1, n + 1):
        w_names = [J] + _sub("S1", i + 1, n) + _sub("S2", 1, i - 1) + _sub("L", 1, i - 1) + _sub("L", i + 1, n)
        letter = [f"{v}_{i}" for v in BASE_NAMES]
        p = marginal_array(jn, w_names + letter)
        p = p.reshape(-1, *base.shape) / n
        blocks.append(p)
        symbols.extend((i, k) for k in range(p.shape[0]))
    w = Alphabet("W", tuple(symbols))
    wj = JointPMF((w,) + base.axes, np.concatenate(blocks, axis=0), base.residual)
    diff = cond_mutual_info(wj, "W", "S2", "L") - cond_mutual_info(wj, "W", "S1", "L")
    rhs = n * diff
    return LetterizationReport(
        n=n,
        lhs_bits=float(lhs),
        rhs_bits=float(rhs),
        residual=abs(lhs - rhs),
        markov_residual=factorization_gap(wj, ["W"], ["R", "L"], ["S1", "S2", "T"]),
        w_alphabet_size=w.size,
        strong_markov_residual=factorization_gap(wj, ["W"], ["R"], ["S1", "S2", "T"]),
        w_joint=wj,
    )


def random_pairs_joint(rng: np.random.Generator, n: int, sizes=(2, 3)) -> JointPMF:
    """Random joint over A1..An, B1..Bn with alphabet sizes drawn from ``sizes``."""
    axes = [Alphabet.range(f"{s}{k}", int(rng.choice(sizes))) for s in "AB" for k in range(1, n + 1)]
    p = rng.dirichlet(np.ones(int(np.prod([a.size for a in axes]))))
    return JointPMF(tuple(axes), p.reshape([a.size for a in axes]))


def random_letterization_instance(rng: np.random.Generator, n: int = 2, size: int = 2,
                                  l_function_of_r: bool = False):
    """Random base joint over (R,S1,S2,T,L) and random J channel from (R^n, L^n).

    With ``l_function_of_r`` the R alphabet is doubled and L = R mod ``size``.
    """
    rsize = 2 * size if l_function_of_r else size
    sizes = (rsize, size, size, size, size)
    axes = tuple(Alphabet.range(v, k) for v, k in zip(BASE_NAMES, sizes))
    p = rng.dirichlet(np.ones(int(np.prod(sizes)))).reshape(sizes)
    if l_function_of_r:
        mask = np.zeros(sizes)
        for r in range(rsize):
            mask[r, :, :, :, r % size] = 1.0
        p = p * mask
        p /= p.sum()
    base = JointPMF(axes, p)
    ins = tuple(Alphabet.range(f"R_{k}", rsize) for k in range(1, n + 1)) + \
        tuple(Alphabet.range(f"L_{k}", size) for k in range(1, n + 1))
    jsize = int(rng.integers(2, 4))
    shape = (rsize,) * n + (size,) * n
    ch = Channel(ins, Alphabet.range("J", jsize), rng.dirichlet(np.ones(jsize), size=shape))
    return base, ch
