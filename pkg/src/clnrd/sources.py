"""Builders for the standard channels, the worked examples and random test sources."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .instance import SOURCE, SourceInstance, deterministic_distortion, hamming, side_name
from .prob import Alphabet, DeterministicMap, JointPMF, build_joint, merge_axes

ERASURE = "e"


def bsc(p: float) -> np.ndarray:
    p = float(p)
    return np.array([[1 - p, p], [p, 1 - p]])


def bec(e: float) -> np.ndarray:
    """Rows are inputs 0, 1; columns are outputs 0, 1, erasure."""
    e = float(e)
    return np.array([[1 - e, 0.0, e], [0.0, 1 - e, e]])


BEC_OUTPUT = (0, 1, ERASURE)


def bernoulli(p_one: float) -> np.ndarray:
    return np.array([1 - float(p_one), float(p_one)])


def component_instance(j: JointPMF, components=("X1", "X2"), name: str = "",
                       targets=None) -> SourceInstance:
    """Two-source instance from a joint over ``X1, X2, Y1, Y2[, Y3]``.

    Receiver ``k`` gets Hamming distortion on component ``targets[k]``
    (default: receiver 1 on X1, receiver 2 on X2, receiver 3 on the pair).
    """
    ys = [n for n in ("Y1", "Y2", "Y3") if n in j]
    merged = merge_axes(j, list(components), SOURCE).transpose([SOURCE] + ys)
    comps = tuple(j.alphabet(c) for c in components)
    X = merged.alphabet(SOURCE)
    if targets is None:
        targets = (0, 1, None)[: len(ys)]
    dists, recon, psis = [], [], []
    for t in targets:
        if t is None:
            p = DeterministicMap(X, X.renamed("Xhat"), tuple(range(X.size)))
        else:
            comp = comps[t]
            p = DeterministicMap(X, comp, tuple(comp.index(s[t]) for s in X.symbols))
        dists.append(deterministic_distortion(p))
        recon.append(p.codomain)
        psis.append(p)
    return SourceInstance(merged, tuple(dists), tuple(recon), tuple(psis), comps, name)


def example1(p=0.3, q=0.3, r=0.1) -> SourceInstance:
    """X2, Y2, Z independent with P[.=0] = p, q, r; X1 = X2 xor Y2; Y1 = X1 xor Z."""
    p, q, r = float(p), float(q), float(r)
    pr = np.zeros((2, 2, 2, 2))  # X1, X2, Y1, Y2
    for x2 in (0, 1):
        for y2 in (0, 1):
            for z in (0, 1):
                w = (p if x2 == 0 else 1 - p) * (q if y2 == 0 else 1 - q) * (r if z == 0 else 1 - r)
                x1 = x2 ^ y2
                pr[x1, x2, x1 ^ z, y2] += w
    axes = [Alphabet("X1", (0, 1)), Alphabet("X2", (0, 1)), Alphabet("Y1", (0, 1)), Alphabet("Y2", (0, 1))]
    return component_instance(build_joint(axes, pr), name=f"example1(p={p},q={q},r={r})")


def example2() -> SourceInstance:
    """X1 uniform, P[Z=0] = 1/3, X2 = X1 xor Z, Y2 = BEC(2/3)(X1), Y1 = BSC(1/4)(X1)."""
    pz0 = float(Fraction(1, 3))
    ch1 = bsc(Fraction(1, 4))
    ch2 = bec(Fraction(2, 3))
    pr = np.zeros((2, 2, 2, 3))
    for x1 in (0, 1):
        for z in (0, 1):
            w = 0.5 * (pz0 if z == 0 else 1 - pz0)
            pr[x1, x1 ^ z] += w * np.outer(ch1[x1], ch2[x1])
    axes = [Alphabet("X1", (0, 1)), Alphabet("X2", (0, 1)), Alphabet("Y1", (0, 1)), Alphabet("Y2", BEC_OUTPUT)]
    return component_instance(build_joint(axes, pr), name="example2")


def _random_channel(rng, n_in, n_out, concentration=1.0):
    return rng.dirichlet(np.full(n_out, concentration), size=n_in)


def random_degraded_two_source(rng: np.random.Generator, ysizes=(2, 2)) -> SourceInstance:
    """Binary components, X -> Y2 -> Y1 cascade, component Hamming distortions."""
    px = rng.dirichlet(np.ones(4))
    c2 = _random_channel(rng, 4, ysizes[1])
    c1 = _random_channel(rng, ysizes[1], ysizes[0])
    pr = np.einsum("x,xb,ba->xab", px, c2, c1).reshape(2, 2, ysizes[0], ysizes[1])
    axes = [Alphabet("X1", (0, 1)), Alphabet("X2", (0, 1)),
            Alphabet.range("Y1", ysizes[0]), Alphabet.range("Y2", ysizes[1])]
    return component_instance(build_joint(axes, pr), name="random-degraded-two-source")


def random_instance(rng: np.random.Generator, nx=3, ny=(2, 2), degraded=False,
                    psi_size=2, hamming2=True) -> SourceInstance:
    """Random source with a deterministic receiver-1 distortion and Hamming receiver 2."""
    X = Alphabet.range(SOURCE, nx)
    px = rng.dirichlet(np.ones(nx))
    c2 = _random_channel(rng, nx, ny[1])
    if degraded:
        c21 = _random_channel(rng, ny[1], ny[0])
        pr = np.einsum("x,xb,ba->xab", px, c2, c21)
    else:
        c1 = _random_channel(rng, nx, ny[0])
        pr = np.einsum("x,xa,xb->xab", px, c1, c2)
    j = build_joint([X, Alphabet.range("Y1", ny[0]), Alphabet.range("Y2", ny[1])], pr)
    table = tuple(int(v) for v in rng.integers(0, psi_size, size=nx))
    # keep the map onto so the reconstruction alphabet is fully used
    table = tuple(i % psi_size for i in range(nx)) if len(set(table)) < min(psi_size, nx) else table
    psi = DeterministicMap(X, Alphabet.range("Xt1", psi_size), table)
    d2 = hamming(X) if hamming2 else rng.uniform(0, 1, size=(nx, nx)) * (1 - np.eye(nx))
    return SourceInstance(j, (deterministic_distortion(psi), d2), (psi.codomain, X.renamed("Xhat2")),
                          (psi, None), None, "random")


def random_degraded_triple(rng: np.random.Generator, nx=4, ny=(2, 2, 2), psi_sizes=(2, 2),
                           nested=True) -> SourceInstance:
    """X -> Y3 -> Y2 -> Y1 with deterministic receivers 1, 2 and Hamming receiver 3."""
    X = Alphabet.range(SOURCE, nx)
    px = rng.dirichlet(np.ones(nx))
    c3 = _random_channel(rng, nx, ny[2])
    c2 = _random_channel(rng, ny[2], ny[1])
    c1 = _random_channel(rng, ny[1], ny[0])
    pr = np.einsum("x,xc,cb,ba->xabc", px, c3, c2, c1)
    j = build_joint([X] + [Alphabet.range(side_name(k), ny[k - 1]) for k in (1, 2, 3)], pr)
    t1 = tuple(i % psi_sizes[0] for i in range(nx))
    t2 = tuple((i // psi_sizes[0]) % psi_sizes[1] for i in range(nx)) if nested else \
        tuple(int(v) for v in rng.integers(0, psi_sizes[1], size=nx))
    p1 = DeterministicMap(X, Alphabet.range("Xt1", psi_sizes[0]), t1)
    p2 = DeterministicMap(X, Alphabet.range("Xt2", psi_sizes[1]), t2)
    return SourceInstance(j, (deterministic_distortion(p1), deterministic_distortion(p2), hamming(X)),
                          (p1.codomain, p2.codomain, X.renamed("Xhat3")), (p1, p2, None), None,
                          "random-degraded-triple")
