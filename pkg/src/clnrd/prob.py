"""Dense finite probability kernel.

Everything in the toolkit is carried by :class:`JointPMF`, a dense tensor with
one named axis per random variable.  Channels are conditional PMFs from a tuple
of input variables to a single output variable; attaching a channel to a joint
builds the joint of the inputs, the other variables and the output with the
output conditionally independent of the other variables given the inputs.
"""
from __future__ import annotations

import itertools
import string
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    AxisCollision,
    BudgetExceeded,
    ChannelAxisMismatch,
    DuplicateAxis,
    NegativeProbability,
    OverlappingSets,
    SumNotOne,
    UnknownVariable,
    ValidationError,
)

TOL = 1e-9
CELL_BUDGET = 10**7


def _names(vars) -> tuple[str, ...]:
    if vars is None:
        return ()
    if isinstance(vars, str):
        return (vars,)
    return tuple(vars)


def _letters(n: int) -> str:
    if n > 52:
        raise BudgetExceeded(f"{n} axes exceed the einsum letter budget")
    return string.ascii_letters[:n]


@dataclass(frozen=True)
class Alphabet:
    name: str
    symbols: tuple

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if len(self.symbols) < 1:
            raise ValidationError(f"alphabet {self.name!r} is empty")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValidationError(f"alphabet {self.name!r} has repeated symbols")

    @classmethod
    def range(cls, name: str, size: int) -> "Alphabet":
        return cls(name, tuple(range(size)))

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, symbol) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            # tolerate "0" vs 0 mismatches coming from text files
            for i, s in enumerate(self.symbols):
                if str(s) == str(symbol):
                    return i
            raise ValidationError(f"{symbol!r} is not a symbol of {self.name!r}")

    def renamed(self, name: str) -> "Alphabet":
        return Alphabet(name, self.symbols)


@dataclass(frozen=True, eq=False)
class JointPMF:
    """Joint distribution over named finite alphabets.

    ``probs`` has one axis per entry of ``axes`` in the same order.  The array
    is made read-only on construction.  ``residual`` records ``|sum - 1|`` as
    measured when the joint was validated.
    """

    axes: tuple[Alphabet, ...]
    probs: np.ndarray
    residual: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        p = np.array(self.probs, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.probs.shape

    def __contains__(self, name) -> bool:
        return name in self.names

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownVariable(f"unknown variable {name!r}; axes are {self.names}")

    def alphabet(self, name: str) -> Alphabet:
        return self.axes[self.index(name)]

    def size(self, names) -> int:
        return int(np.prod([self.alphabet(n).size for n in _names(names)], dtype=np.int64))

    def transpose(self, order) -> "JointPMF":
        order = _names(order)
        if sorted(order) != sorted(self.names):
            raise UnknownVariable(f"order {order} is not a permutation of {self.names}")
        idx = [self.index(n) for n in order]
        return JointPMF(tuple(self.axes[i] for i in idx), self.probs.transpose(idx), self.residual)

    def __repr__(self):
        dims = ", ".join(f"{a.name}:{a.size}" for a in self.axes)
        return f"JointPMF({dims})"


@dataclass(frozen=True, eq=False)
class Channel:
    """Conditional PMF ``p(output | inputs)``.

    ``probs`` has shape ``(*input sizes, output size)``.  ``flagged`` marks the
    input cells whose slice was filled in (uniform) because the conditioning
    event had zero probability.
    """

    input_axes: tuple[Alphabet, ...]
    output_axis: Alphabet
    probs: np.ndarray
    flagged: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "input_axes", tuple(self.input_axes))
        p = np.array(self.probs, dtype=float)
        want = tuple(a.size for a in self.input_axes) + (self.output_axis.size,)
        if p.shape != want:
            raise ChannelAxisMismatch(f"channel tensor has shape {p.shape}, expected {want}")
        if (p < -TOL).any():
            raise NegativeProbability("channel has negative entries")
        sums = p.sum(axis=-1)
        if np.abs(sums - 1).max(initial=0.0) > TOL:
            raise SumNotOne("a channel slice does not sum to one")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        flags = np.zeros(want[:-1], dtype=bool) if self.flagged is None else np.asarray(self.flagged, bool)
        flags.setflags(write=False)
        object.__setattr__(self, "flagged", flags)

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.input_axes)

    @property
    def output_name(self) -> str:
        return self.output_axis.name

    @classmethod
    def from_matrix(cls, inputs, output: Alphabet, matrix) -> "Channel":
        inputs = (inputs,) if isinstance(inputs, Alphabet) else tuple(inputs)
        shape = tuple(a.size for a in inputs) + (output.size,)
        return cls(inputs, output, np.asarray(matrix, dtype=float).reshape(shape))

    @classmethod
    def deterministic(cls, inputs, output: Alphabet, fn: Callable[..., int]) -> "Channel":
        """Channel putting all mass on ``fn(*input indices)`` (an output index)."""
        inputs = (inputs,) if isinstance(inputs, Alphabet) else tuple(inputs)
        shape = tuple(a.size for a in inputs)
        p = np.zeros(shape + (output.size,))
        for cell in itertools.product(*(range(s) for s in shape)):
            p[cell + (int(fn(*cell)),)] = 1.0
        return cls(inputs, output, p)

    @classmethod
    def constant(cls, inputs, output: Alphabet) -> "Channel":
        return cls.deterministic(inputs, output, lambda *cell: 0)

    def __repr__(self):
        ins = ",".join(self.input_names)
        return f"Channel({self.output_name}|{ins})"


@dataclass(frozen=True, eq=False)
class DeterministicMap:
    """Total function between alphabets, stored as an index table."""

    domain: Alphabet
    codomain: Alphabet
    table: tuple[int, ...]

    def __post_init__(self):
        table = tuple(int(t) for t in self.table)
        if len(table) != self.domain.size:
            raise ValidationError("map table must give one image per domain symbol")
        if any(t < 0 or t >= self.codomain.size for t in table):
            raise ValidationError("map image outside codomain")
        object.__setattr__(self, "table", table)

    @classmethod
    def from_function(cls, domain: Alphabet, codomain: Alphabet, fn: Callable) -> "DeterministicMap":
        """Build from a symbol-level function ``fn(domain symbol) -> codomain symbol``."""
        return cls(domain, codomain, tuple(codomain.index(fn(s)) for s in domain.symbols))

    @classmethod
    def from_dict(cls, domain: Alphabet, codomain: Alphabet, mapping: Mapping) -> "DeterministicMap":
        missing = [s for s in domain.symbols if s not in mapping and str(s) not in mapping]
        if missing:
            raise ValidationError(f"map is not total; no image for {missing}")
        return cls.from_function(domain, codomain, lambda s: mapping[s] if s in mapping else mapping[str(s)])

    @classmethod
    def identity(cls, domain: Alphabet, name: str | None = None) -> "DeterministicMap":
        return cls(domain, domain.renamed(name or domain.name), tuple(range(domain.size)))

    def __call__(self, symbol):
        return self.codomain.symbols[self.table[self.domain.index(symbol)]]

    def compose(self, after: "DeterministicMap") -> "DeterministicMap":
        """Return ``after ∘ self``."""
        return DeterministicMap(self.domain, after.codomain, tuple(after.table[t] for t in self.table))

    def as_channel(self) -> Channel:
        return Channel.deterministic(self.domain, self.codomain, lambda i: self.table[i])


@dataclass(frozen=True)
class AuxiliarySystem:
    """Ordered auxiliary channels attached one after another to a source joint.

    Each channel may condition on source variables and on auxiliaries attached
    before it, so the whole system satisfies aux -- inputs -- side information
    whenever no channel reads a side-information axis.
    """

    channels: tuple[Channel, ...]

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.output_name for c in self.channels)

    def __getitem__(self, name: str) -> Channel:
        for c in self.channels:
            if c.output_name == name:
                return c
        raise UnknownVariable(name)

    def attach(self, j: JointPMF) -> JointPMF:
        for c in self.channels:
            j = attach_auxiliary(j, c)
        return j


def build_joint(axes: Sequence[Alphabet], prob_entries, tol: float = TOL) -> JointPMF:
    """Validate and wrap a probability tensor.

    ``prob_entries`` is either a complete array-like tensor or a mapping from
    symbol tuples to probabilities (missing cells are zero).
    """
    axes = tuple(axes)
    names = [a.name for a in axes]
    if len(set(names)) != len(names):
        raise DuplicateAxis(f"duplicate axis names in {names}")
    shape = tuple(a.size for a in axes)
    if isinstance(prob_entries, Mapping):
        p = np.zeros(shape)
        for key, val in prob_entries.items():
            key = (key,) if len(axes) == 1 and not isinstance(key, tuple) else tuple(key)
            if len(key) != len(axes):
                raise ValidationError(f"entry {key} does not address every axis")
            p[tuple(a.index(s) for a, s in zip(axes, key))] += float(val)
    else:
        p = np.array(prob_entries, dtype=float)
        if p.size != int(np.prod(shape, dtype=np.int64)):
            raise ValidationError(f"tensor has {p.size} entries, axes need {shape}")
        p = p.reshape(shape)
    if not np.isfinite(p).all():
        raise ValidationError("probabilities must be finite")
    if (p < 0).any():
        raise NegativeProbability(f"negative probability {p.min()}")
    residual = abs(float(p.sum()) - 1.0)
    if residual > tol:
        raise SumNotOne(f"probabilities sum to {p.sum()!r}")
    return JointPMF(axes, p, residual)


def _check_known(j: JointPMF, names) -> tuple[str, ...]:
    names = _names(names)
    for n in names:
        j.index(n)
    return names


def marginalize(j: JointPMF, keep) -> JointPMF:
    """Sum out every axis not in ``keep``; surviving axes keep their order in ``j``."""
    keep = set(_check_known(j, keep))
    drop = tuple(i for i, n in enumerate(j.names) if n not in keep)
    if not drop:
        return j
    axes = tuple(a for a in j.axes if a.name in keep)
    return JointPMF(axes, j.probs.sum(axis=drop), j.residual)


def marginal_array(j: JointPMF, names) -> np.ndarray:
    """Marginal tensor with axes in the order given by ``names``."""
    names = _check_known(j, names)
    if len(set(names)) != len(names):
        raise DuplicateAxis(f"repeated names {names}")
    m = marginalize(j, names)
    return m.probs.transpose([m.names.index(n) for n in names]) if names else m.probs.reshape(())


def conditional(j: JointPMF, target: str, given) -> Channel:
    """p(target | given) as a Channel; zero-probability slices become uniform and flagged."""
    given = _check_known(j, given)
    _check_known(j, target)
    if target in given:
        raise OverlappingSets(f"{target!r} appears in the conditioning set")
    pj = marginal_array(j, given + (target,))
    pg = pj.sum(axis=-1, keepdims=True)
    zero = pg[..., 0] <= 0
    with np.errstate(invalid="ignore", divide="ignore"):
        ch = np.where(pg > 0, pj / np.where(pg > 0, pg, 1.0), 1.0 / pj.shape[-1])
    # renormalize away rounding so the slice check is exact
    ch = ch / ch.sum(axis=-1, keepdims=True)
    return Channel(tuple(j.alphabet(g) for g in given), j.alphabet(target), ch, zero)


def attach_auxiliary(j: JointPMF, ch: Channel) -> JointPMF:
    """Extend ``j`` with the channel output; the output depends on ``j`` only through the inputs."""
    if ch.output_name in j.names:
        raise AxisCollision(f"{ch.output_name!r} already an axis of the joint")
    for a in ch.input_axes:
        if j.alphabet(a.name).size != a.size:
            raise ChannelAxisMismatch(f"channel input {a.name!r} has size {a.size}, joint has {j.alphabet(a.name).size}")
    n = len(j.axes)
    letters = _letters(n + 1)
    jl = letters[:n]
    cl = "".join(jl[j.index(a.name)] for a in ch.input_axes) + letters[n]
    probs = np.einsum(f"{jl},{cl}->{jl}{letters[n]}", j.probs, ch.probs)
    return JointPMF(j.axes + (ch.output_axis,), probs, j.residual)


def iid_extension(j: JointPMF, n: int, budget: int = CELL_BUDGET) -> JointPMF:
    """n i.i.d. copies; axis ``V`` of copy ``i`` (1-based) is named ``V_i``."""
    if n < 1:
        raise ValidationError("blocklength must be positive")
    cells = j.probs.size ** n
    if cells > budget:
        raise BudgetExceeded(f"i.i.d. extension needs {cells} cells (budget {budget})")
    axes = tuple(a.renamed(f"{a.name}_{i}") for i in range(1, n + 1) for a in j.axes)
    p = j.probs
    for _ in range(n - 1):
        p = np.multiply.outer(p, j.probs)
    return JointPMF(axes, p, j.residual)


def derive_variable(j: JointPMF, fmap: DeterministicMap, new_name: str | None = None) -> JointPMF:
    """Append the axis ``new_name = fmap(domain)``."""
    new_name = new_name or fmap.codomain.name
    if new_name in j.names:
        raise AxisCollision(f"{new_name!r} already an axis of the joint")
    dom = j.alphabet(fmap.domain.name)
    if dom.size != fmap.domain.size:
        raise ChannelAxisMismatch("map domain does not match the joint's alphabet")
    return attach_auxiliary(j, DeterministicMap(dom, fmap.codomain.renamed(new_name), fmap.table).as_channel())


def merge_axes(j: JointPMF, names, new_name: str) -> JointPMF:
    """Replace the axes ``names`` by one product axis whose symbols are tuples."""
    names = _check_known(j, names)
    rest = tuple(n for n in j.names if n not in names)
    if new_name in rest:
        raise AxisCollision(new_name)
    p = marginal_array(j, names + rest)
    alph = [j.alphabet(n) for n in names]
    symbols = tuple(itertools.product(*(a.symbols for a in alph)))
    merged = Alphabet(new_name, symbols)
    p = p.reshape((len(symbols),) + tuple(j.alphabet(n).size for n in rest))
    return JointPMF((merged,) + tuple(j.alphabet(n) for n in rest), p, j.residual)


def factorization_gap(j: JointPMF, a, b, c) -> float:
    """Max over cells of |p(a,b,c) - p(a,b) p(c|b)|; zero iff a -- b -- c."""
    a, b, c = _names(a), _names(b), _names(c)
    for x, y in ((a, b), (a, c), (b, c)):
        if set(x) & set(y):
            raise OverlappingSets(f"{x} and {y} overlap")
    p = marginal_array(j, a + b + c)
    sa = tuple(j.alphabet(n).size for n in a)
    sb = tuple(j.alphabet(n).size for n in b)
    sc = tuple(j.alphabet(n).size for n in c)
    na, nb, nc = (int(np.prod(s, dtype=np.int64)) for s in (sa, sb, sc))
    p = p.reshape(na, nb, nc)
    pab = p.sum(axis=2)
    pbc = p.sum(axis=0)
    pb = pab.sum(axis=0)
    safe = np.maximum(pb, 1e-12)
    gap = np.abs(p - pab[:, :, None] * (pbc / safe[:, None])[None, :, :])
    gap[:, pb <= 0, :] = 0.0
    return float(gap.max(initial=0.0))
