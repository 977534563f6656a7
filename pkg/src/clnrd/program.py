"""Auxiliary-channel programs: information expressions as functions of channels.

A :class:`ChannelProgram` fixes a base joint (source and side information),
an ordered list of auxiliary channels (each conditioned on base axes and
earlier auxiliaries) and an objective made of joint entropies.  It evaluates
the objective, its gradient with respect to every channel entry and any
distortion constraints for a whole batch of channel choices at once, which is
what :func:`clnrd.simplex_opt.minimize` consumes.

Distortion constraints use the best reconstruction for the observed
variables, ``min_xhat E[d(src, xhat) | obs]`` cell by cell, with ties going to
the lowest reconstruction index.
"""
from __future__ import annotations

import math
import string
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import UnknownVariable, ValidationError
from .prob import Alphabet, AuxiliarySystem, Channel, JointPMF, _names, marginal_array
from .simplex_opt import SearchSpace

INV_LN2 = 1.0 / math.log(2.0)
TINY = 1e-300


class Expr:
    """Linear combination of joint entropies, keyed by frozensets of names."""

    def __init__(self, terms=None):
        self.terms: dict[frozenset, float] = {}
        for k, v in (terms or {}).items():
            if k and v:
                self.terms[frozenset(k)] = self.terms.get(frozenset(k), 0.0) + v

    def __add__(self, other: "Expr") -> "Expr":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0.0) + v
        return Expr({k: v for k, v in out.items() if v != 0.0})

    def __neg__(self) -> "Expr":
        return Expr({k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "Expr") -> "Expr":
        return self + (-other)

    def __mul__(self, c: float) -> "Expr":
        return Expr({k: c * v for k, v in self.terms.items()})

    __rmul__ = __mul__

    def __repr__(self):
        parts = [f"{v:+g} H({','.join(sorted(k))})" for k, v in self.terms.items()]
        return " ".join(parts) or "0"


def _flat(*groups) -> frozenset:
    out = set()
    for g in groups:
        out.update(_names(g))
    return frozenset(out)


def H(*groups) -> Expr:
    s = _flat(*groups)
    return Expr({s: 1.0}) if s else Expr()


def Hc(a, given=()) -> Expr:
    return H(a, given) - H(given)


def I(a, b, given=()) -> Expr:
    return H(a, given) + H(b, given) - H(a, b, given) - H(given)


@dataclass(frozen=True)
class MaxOf:
    """``coef * max(exprs)``; the gradient follows the first maximizing branch."""

    exprs: tuple
    coef: float = 1.0


@dataclass(frozen=True)
class AuxSpec:
    name: str
    size: int
    given: tuple[str, ...]


@dataclass(frozen=True)
class Distortion:
    """Constraint ``min over reconstructions of E d(source, xhat(observe)) <= bound``."""

    matrix: np.ndarray
    source: str
    observe: tuple[str, ...]
    bound: float


@dataclass(frozen=True)
class Bound:
    """Constraint ``expr <= bound`` on an information expression."""

    expr: Expr
    bound: float = 0.0


def _pairwise_steps(spec: str, path) -> list:
    """Turn an einsum contraction path into explicit (operand positions, subscripts) steps."""
    ins, out = spec.split("->")
    subs = ins.split(",")
    steps = []
    for pos in path:
        pos = tuple(pos)
        picked = [subs[p] for p in pos]
        rest = [t for i, t in enumerate(subs) if i not in pos]
        keep = set("".join(rest)) | set(out)
        seen = []
        for t in picked:
            for ch in t:
                if ch in keep and ch not in seen:
                    seen.append(ch)
        res = "".join(seen) if rest else out
        steps.append((pos, ",".join(picked) + "->" + res))
        subs = rest + [res]
    return steps


class ChannelProgram:
    def __init__(self, base: JointPMF, auxes: Sequence[AuxSpec], objective: Iterable = (),
                 distortions: Sequence[Distortion] = (), bounds: Sequence[Bound] = ()):
        self.base = base
        self.auxes = tuple(auxes)
        self.order = list(base.names)
        self.sizes = {a.name: a.size for a in base.axes}
        self.alphabets = {a.name: a for a in base.axes}
        for a in self.auxes:
            if a.name in self.sizes:
                raise ValidationError(f"auxiliary {a.name!r} clashes with an existing axis")
            for g in a.given:
                if g not in self.sizes:
                    raise UnknownVariable(f"auxiliary {a.name!r} conditions on unknown {g!r}")
            self.order.append(a.name)
            self.sizes[a.name] = a.size
            self.alphabets[a.name] = Alphabet.range(a.name, a.size)
        if len(self.order) + 1 > len(string.ascii_letters):
            raise ValidationError("too many variables")
        self.letter = {n: string.ascii_letters[i] for i, n in enumerate(self.order)}
        self.batch = string.ascii_letters[len(self.order)]
        self.aux_index = {a.name: k for k, a in enumerate(self.auxes)}
        self.space = SearchSpace(tuple((int(np.prod([self.sizes[g] for g in a.given], dtype=np.int64)), a.size)
                                       for a in self.auxes)) if self.auxes else None

        self.plain = Expr()
        self.maxes: list[MaxOf] = []
        for part in objective:
            if isinstance(part, MaxOf):
                self.maxes.append(part)
            else:
                self.plain = self.plain + part
        self.distortions = tuple(distortions)
        self.bounds = tuple(bounds)
        self.n_constraints = len(self.distortions) + len(self.bounds)

        sets = set(self.plain.terms)
        for m in self.maxes:
            for e in m.exprs:
                sets.update(e.terms)
        for d in self.distortions:
            sets.add(frozenset((d.source,) + tuple(d.observe)))
        for b in self.bounds:
            sets.update(b.expr.terms)
        for s in sets:
            for n in s:
                if n not in self.sizes:
                    raise UnknownVariable(f"objective refers to unknown variable {n!r}")
        self._plans = {s: self._plan(s) for s in sets}
        self._paths: dict = {}

    # -- planning ---------------------------------------------------------
    def canonical(self, names) -> tuple[str, ...]:
        names = set(names)
        return tuple(n for n in self.order if n in names)

    def _closure(self, names) -> list[int]:
        need = set()
        stack = [n for n in names if n in self.aux_index]
        while stack:
            n = stack.pop()
            k = self.aux_index[n]
            if k in need:
                continue
            need.add(k)
            stack.extend(g for g in self.auxes[k].given if g in self.aux_index)
        return sorted(need)

    def _plan(self, s: frozenset):
        names = self.canonical(s)
        chans = self._closure(names)
        base_need = set(n for n in names if n in self.base)
        for k in chans:
            base_need.update(g for g in self.auxes[k].given if g in self.base)
        base_names = self.canonical(base_need)
        bmarg = marginal_array(self.base, base_names) if base_names else np.ones(())
        L, z = self.letter, self.batch
        base_sub = "".join(L[n] for n in base_names)
        ch_subs = [z + "".join(L[g] for g in self.auxes[k].given) + L[self.auxes[k].name] for k in chans]
        out = z + "".join(L[n] for n in names)
        fwd = ",".join([base_sub] + ch_subs) + "->" + out
        bwd = {}
        for i, k in enumerate(chans):
            ins = [base_sub] + [c for j, c in enumerate(ch_subs) if j != i] + [out]
            bwd[k] = ",".join(ins) + "->" + ch_subs[i]
        shape = tuple(self.sizes[n] for n in names)
        return dict(names=names, chans=chans, bmarg=bmarg, fwd=fwd, bwd=bwd, shape=shape)

    def _einsum(self, key, spec, *ops):
        if len(ops) <= 2:
            return np.einsum(spec, *ops)
        # the batch axis only scales the cost, so one compiled path serves every batch size
        pk = (key, spec, tuple(o.shape[1:] if spec.split(",")[i][:1] == self.batch else o.shape
                               for i, o in enumerate(ops)))
        steps = self._paths.get(pk)
        if steps is None:
            path = np.einsum_path(spec, *ops, optimize="greedy")[0]
            steps = _pairwise_steps(spec, path[1:])
            self._paths[pk] = steps
        ops = list(ops)
        for pos, sub in steps:
            args = [ops[p] for p in pos]
            for p in sorted(pos, reverse=True):
                del ops[p]
            ops.append(np.einsum(sub, *args))
        return ops[0]

    # -- evaluation -------------------------------------------------------
    def channels(self, x: np.ndarray) -> list[np.ndarray]:
        x = np.atleast_2d(x)
        out = []
        for blk, a in zip(self.space.split(x), self.auxes):
            out.append(blk.reshape((x.shape[0],) + tuple(self.sizes[g] for g in a.given) + (a.size,)))
        return out

    def marginals(self, x: np.ndarray) -> dict:
        x = np.atleast_2d(x)
        B = x.shape[0]
        chans = self.channels(x) if self.auxes else []
        q = {}
        for s, pl in self._plans.items():
            if not pl["chans"]:
                q[s] = np.broadcast_to(pl["bmarg"], (B,) + pl["shape"])
            else:
                q[s] = self._einsum(s, pl["fwd"], pl["bmarg"], *[chans[k] for k in pl["chans"]])
        return q

    def _distortion(self, d: Distortion, q: np.ndarray, names, kstar=None):
        B = q.shape[0]
        src = names.index(d.source)
        qq = np.moveaxis(q, 1 + src, 1).reshape(B, self.sizes[d.source], -1)
        cost = np.einsum("bxo,xk->bok", qq, d.matrix)
        if kstar is None:
            kstar = np.argmin(cost, axis=2)
        E = np.take_along_axis(cost, kstar[..., None], axis=2)[..., 0].sum(axis=1)
        return E, kstar, qq.shape

    def freeze(self, x: np.ndarray) -> list:
        """Greedy reconstruction indices at ``x``; pass back as ``state`` to hold them fixed."""
        x = np.atleast_2d(x)
        q = self.marginals(x)
        out = []
        for d in self.distortions:
            s = frozenset((d.source,) + tuple(d.observe))
            out.append(self._distortion(d, q[s], self._plans[s]["names"])[1])
        return out

    def _entropies(self, q):
        return {s: -(np.where(a > 0, a * np.log2(np.maximum(a, TINY)), 0.0)).reshape(a.shape[0], -1).sum(axis=1)
                for s, a in q.items()}

    def _expr_value(self, e: Expr, h, B):
        v = np.zeros(B)
        for s, c in e.terms.items():
            v = v + c * h[s]
        return v

    def values(self, x: np.ndarray, state=None):
        x = np.atleast_2d(x)
        B = x.shape[0]
        q = self.marginals(x)
        h = self._entropies(q)
        f = self._expr_value(self.plain, h, B)
        for m in self.maxes:
            f = f + m.coef * np.max([self._expr_value(e, h, B) for e in m.exprs], axis=0)
        c = np.zeros((B, self.n_constraints))
        for i, d in enumerate(self.distortions):
            s = frozenset((d.source,) + tuple(d.observe))
            E, _, _ = self._distortion(d, q[s], self._plans[s]["names"], None if state is None else state[i])
            c[:, i] = E - d.bound
        nd = len(self.distortions)
        for i, b in enumerate(self.bounds):
            c[:, nd + i] = self._expr_value(b.expr, h, B) - b.bound
        return f, c

    def value_grad(self, x: np.ndarray, state=None):
        x = np.atleast_2d(x)
        B = x.shape[0]
        chans = self.channels(x)
        q = self.marginals(x)
        h = self._entropies(q)
        f = self._expr_value(self.plain, h, B)
        w = {s: np.full(B, c) for s, c in self.plain.terms.items()}
        for m in self.maxes:
            vals = np.array([self._expr_value(e, h, B) for e in m.exprs])
            act = np.argmax(vals, axis=0)
            f = f + m.coef * vals[act, np.arange(B)]
            for i, e in enumerate(m.exprs):
                sel = (act == i) * m.coef
                for s, c in e.terms.items():
                    w[s] = w.get(s, np.zeros(B)) + c * sel
        grad = np.zeros_like(x)
        offs = self.space.offsets
        self._entropy_grad(w, q, chans, grad)
        c = np.zeros((B, self.n_constraints))
        dc = np.zeros((B, self.n_constraints, x.shape[1]))
        for i, d in enumerate(self.distortions):
            s = frozenset((d.source,) + tuple(d.observe))
            pl = self._plans[s]
            E, kstar, shp = self._distortion(d, q[s], pl["names"], None if state is None else state[i])
            c[:, i] = E - d.bound
            if pl["chans"]:
                g = d.matrix[:, kstar]            # (|src|, B, obs)
                g = np.moveaxis(g, 0, 1).reshape((B, shp[1]) + tuple(self.sizes[n] for n in pl["names"] if n != d.source))
                g = np.moveaxis(g, 1, 1 + pl["names"].index(d.source))
                self._backprop(s, pl, chans, g, dc[:, i, :], offs)
        nd = len(self.distortions)
        for i, b in enumerate(self.bounds):
            c[:, nd + i] = self._expr_value(b.expr, h, B) - b.bound
            self._entropy_grad({s: np.full(B, k) for s, k in b.expr.terms.items()}, q, chans, dc[:, nd + i, :])
        return f, grad, c, dc

    def _entropy_grad(self, w, q, chans, out):
        """Accumulate the gradient of ``sum_s w[s] * H(s)`` into ``out``."""
        for s, ws in w.items():
            pl = self._plans[s]
            if not pl["chans"] or not np.any(ws):
                continue
            a = q[s]
            G = -(np.log2(np.maximum(a, TINY)) + INV_LN2) * ws.reshape((a.shape[0],) + (1,) * (a.ndim - 1))
            self._backprop(s, pl, chans, G, out, self.space.offsets)

    def _backprop(self, s, pl, chans, G, out, offs):
        for k in pl["chans"]:
            others = [chans[j] for j in pl["chans"] if j != k]
            gk = self._einsum((s, k), pl["bwd"][k], pl["bmarg"], *others, G)
            out[:, offs[k]:offs[k] + gk[0].size] += gk.reshape(gk.shape[0], -1)

    def value(self, x: np.ndarray) -> float:
        f, _ = self.values(np.asarray(x)[None])
        return float(f[0])

    def violation(self, x: np.ndarray) -> float:
        _, c = self.values(np.asarray(x)[None])
        return float(np.maximum(c, 0.0).max(initial=0.0))

    # -- witnesses --------------------------------------------------------
    def witness(self, x: np.ndarray) -> AuxiliarySystem:
        chans = self.channels(np.asarray(x)[None])
        out = []
        for a, ch in zip(self.auxes, chans):
            p = np.clip(ch[0], 0.0, None)
            p = p / p.sum(axis=-1, keepdims=True)
            out.append(Channel(tuple(self.alphabets[g] for g in a.given), self.alphabets[a.name], p))
        return AuxiliarySystem(tuple(out))

    def point_from(self, system: AuxiliarySystem | Sequence[np.ndarray]) -> np.ndarray:
        """Flat point for channels given as an AuxiliarySystem or a list of arrays."""
        if isinstance(system, AuxiliarySystem):
            arrs = [system[a.name].probs for a in self.auxes]
        else:
            arrs = list(system)
        parts = []
        for a, arr in zip(self.auxes, arrs):
            want = tuple(self.sizes[g] for g in a.given) + (a.size,)
            arr = np.asarray(arr, dtype=float)
            if arr.shape != want:
                arr = _fit(arr, want)
            parts.append(arr.ravel())
        return np.concatenate(parts)

    def deterministic_point(self, maps: dict) -> np.ndarray:
        """Point where aux ``name`` equals ``maps[name](*given indices)`` (an output index)."""
        arrs = []
        for a in self.auxes:
            gs = tuple(self.sizes[g] for g in a.given)
            arr = np.zeros(gs + (a.size,))
            fn = maps.get(a.name, lambda *cell: 0)
            for cell in np.ndindex(*gs):
                arr[cell + (int(fn(*cell)) % a.size,)] = 1.0
            arrs.append(arr)
        return self.point_from(arrs)


def _fit(arr: np.ndarray, want: tuple) -> np.ndarray:
    """Resize a channel tensor.

    Input cells missing from ``arr`` map to output 0; surplus outputs are
    folded into output 0 and missing outputs get zero mass.
    """
    out = np.zeros(want)
    out[..., 0] = 1.0
    sl = tuple(slice(0, min(a, b)) for a, b in zip(arr.shape[:-1], want[:-1]))
    k = min(arr.shape[-1], want[-1])
    rows = np.zeros(tuple(s.stop for s in sl) + (want[-1],))
    rows[..., :k] = arr[sl + (slice(0, k),)]
    rows[..., 0] += arr[sl + (slice(k, None),)].sum(axis=-1)
    out[sl] = rows
    return out
