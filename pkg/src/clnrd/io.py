"""Problem files, CSV output and run records.

A problem file is JSON.  The source is given either densely::

    {"axes": [{"name": "X", "symbols": [0, 1]}, {"name": "Y1", "symbols": [0, 1]}, ...],
     "probs": [[...], ...]}

or as a list of statements (``"factored"``) that are expanded in order::

    X1 uniform                 uniform over {0, 1}   (``X1 uniform 3`` for {0, 1, 2})
    Z pmf [1/3, 2/3]           explicit pmf over {0, ..., k-1}
    Z bernoulli 2/3            P[Z = 1] = 2/3
    X2 = X1 xor Z              deterministic function of earlier variables
    Y2 = BEC(2/3)(X1)          channel presets BEC(e), BSC(p)
    Y1 = channel [[..],[..]](X1)

``"source"`` names the variable (or list of components) forming X, and
``"side"`` the side-information variables in receiver order (default Y1, Y2[, Y3]).
Other variables are summed out.  ``"distortions"`` holds one entry per
receiver: ``"hamming"``, ``"component-hamming:X1"``, ``"deterministic:[0,1,1,0]"``
(table of reconstruction indices over the symbols of X) or
``{"matrix": [[...]], "recon": [...]}``.
"""
from __future__ import annotations

import csv
import io as _io
import json
import re
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import ParseError, ReproductionFailed, ToolkitError, ValidationError
from .instance import SOURCE, SourceInstance, deterministic_distortion, hamming, side_name
from .prob import Alphabet, DeterministicMap, JointPMF, build_joint, marginal_array, merge_axes
from .sources import BEC_OUTPUT, bec, bsc

VERSION = "0.1.0"
SIG_DIGITS = 9


# -- parsing ----------------------------------------------------------------

def _number(text, where: str) -> float:
    try:
        return float(Fraction(str(text).strip()))
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"not a number: {text!r}", where) from None


def _numbers(text: str, where: str):
    try:
        raw = json.loads(re.sub(r"(\d+)\s*/\s*(\d+)", r'"\1/\2"', text))
    except json.JSONDecodeError:
        raise ParseError(f"malformed list: {text}", where) from None

    def conv(v):
        return [conv(u) for u in v] if isinstance(v, list) else _number(v, where)
    return np.array(conv(raw), dtype=float)


def _symbol(v):
    return tuple(_symbol(u) for u in v) if isinstance(v, list) else v


class _Builder:
    """Accumulates a joint over named variables, statement by statement."""

    def __init__(self):
        self.axes: list[Alphabet] = []
        self.p = np.ones(())

    def _idx(self, name: str, where: str) -> int:
        for i, a in enumerate(self.axes):
            if a.name == name:
                return i
        raise ParseError(f"unknown variable {name!r}", where)

    def independent(self, name: str, pmf: np.ndarray, symbols, where: str):
        if any(a.name == name for a in self.axes):
            raise ParseError(f"variable {name!r} defined twice", where)
        pmf = np.asarray(pmf, dtype=float)
        if (pmf < 0).any() or abs(pmf.sum() - 1) > 1e-9:
            raise ValidationError(f"{where}: pmf of {name} must be nonnegative and sum to one")
        self.axes.append(Alphabet(name, tuple(symbols)))
        self.p = np.multiply.outer(self.p, pmf)

    def channel(self, name: str, inp: str, matrix: np.ndarray, symbols, where: str):
        k = self._idx(inp, where)
        m = np.asarray(matrix, dtype=float)
        if m.shape != (self.axes[k].size, len(symbols)):
            raise ParseError(f"channel for {name} has shape {m.shape}", where)
        if (m < 0).any() or np.abs(m.sum(axis=1) - 1).max() > 1e-9:
            raise ValidationError(f"{where}: channel rows must be nonnegative and sum to one")
        letters = "abcdefghijklmnopqrstuvwxyz"[: len(self.axes)]
        self.p = np.einsum(f"{letters},{letters[k]}z->{letters}z", self.p, m)
        self.axes.append(Alphabet(name, tuple(symbols)))

    def function(self, name: str, inputs: Sequence[str], fn, where: str):
        ks = [self._idx(n, where) for n in inputs]
        outs: dict = {}
        cells = {}
        for cell in np.ndindex(*self.p.shape):
            v = fn(*(self.axes[k].symbols[cell[k]] for k in ks))
            cells[cell] = outs.setdefault(v, len(outs))
        syms = sorted(outs, key=lambda s: (str(type(s)), s))
        order = {s: i for i, s in enumerate(syms)}
        remap = {outs[s]: order[s] for s in outs}
        q = np.zeros(self.p.shape + (len(syms),))
        for cell, o in cells.items():
            q[cell + (remap[o],)] = self.p[cell]
        self.p = q
        self.axes.append(Alphabet(name, tuple(syms)))

    def joint(self) -> JointPMF:
        return build_joint(self.axes, self.p)


_STMT_INDEP = re.compile(r"^(\w+)\s+(uniform|bernoulli|pmf)\s*(.*)$")
_STMT_ASSIGN = re.compile(r"^(\w+)\s*=\s*(.+)$")
_XOR = re.compile(r"^(\w+)\s+xor\s+(\w+)$")
_PRESET = re.compile(r"^(BSC|BEC)\(([^)]*)\)\((\w+)\)$", re.IGNORECASE)
_MATRIX = re.compile(r"^channel\s*(\[.*\])\s*\((\w+)\)$")


def _statement(b: _Builder, text: str, where: str):
    text = text.strip()
    m = _STMT_INDEP.match(text)
    if m:
        name, kind, arg = m.groups()
        if kind == "uniform":
            k = int(arg) if arg.strip() else 2
            b.independent(name, np.full(k, 1.0 / k), range(k), where)
        elif kind == "bernoulli":
            p1 = _number(arg, where)
            b.independent(name, np.array([1 - p1, p1]), (0, 1), where)
        else:
            pmf = _numbers(arg, where)
            b.independent(name, pmf, range(len(pmf)), where)
        return
    m = _STMT_ASSIGN.match(text)
    if not m:
        raise ParseError(f"cannot parse statement: {text!r}", where)
    name, rhs = m.group(1), m.group(2).strip()
    if (x := _XOR.match(rhs)):
        b.function(name, [x.group(1), x.group(2)], lambda u, v: int(u) ^ int(v), where)
    elif (x := _PRESET.match(rhs)):
        kind, arg, inp = x.groups()
        v = _number(arg, where)
        if kind.upper() == "BSC":
            b.channel(name, inp, bsc(v), (0, 1), where)
        else:
            b.channel(name, inp, bec(v), BEC_OUTPUT, where)
    elif (x := _MATRIX.match(rhs)):
        mat = _numbers(x.group(1), where)
        b.channel(name, x.group(2), mat, range(mat.shape[1]), where)
    elif re.fullmatch(r"\w+", rhs):
        b.function(name, [rhs], lambda u: u, where)
    else:
        raise ParseError(f"cannot parse right-hand side: {rhs!r}", where)


def _dense(spec: dict, where: str) -> JointPMF:
    try:
        axes = [Alphabet(a["name"], tuple(_symbol(s) for s in a["symbols"])) for a in spec["axes"]]
        raw = spec["probs"]
    except (KeyError, TypeError) as e:
        raise ParseError(f"dense source needs axes with name/symbols and probs ({e})", where) from None

    def conv(v):
        return [conv(u) for u in v] if isinstance(v, list) else _number(v, where)
    p = np.array(conv(raw), dtype=float)
    return build_joint(axes, p)


def _distortion(entry, X: Alphabet, components, k: int, where: str):
    """Returns (matrix, recon alphabet, psi or None)."""
    if isinstance(entry, dict):
        if "matrix" not in entry:
            raise ParseError("distortion object needs 'matrix'", where)
        m = _numbers(json.dumps(entry["matrix"]), where)
        syms = tuple(_symbol(s) for s in entry.get("recon", range(m.shape[1])))
        return m, Alphabet(f"Xhat{k}", syms), None
    if not isinstance(entry, str):
        raise ParseError(f"bad distortion entry {entry!r}", where)
    if entry == "hamming":
        return hamming(X), X.renamed(f"Xhat{k}"), None
    if entry.startswith("component-hamming:"):
        comp = entry.split(":", 1)[1]
        if components is None:
            raise ParseError("component-hamming needs a component source", where)
        names = [c.name for c in components]
        if comp not in names:
            raise ParseError(f"unknown component {comp!r}", where)
        i = names.index(comp)
        c = components[i]
        psi = DeterministicMap(X, c, tuple(c.index(s[i]) for s in X.symbols))
        return deterministic_distortion(psi), c, psi
    if entry.startswith("deterministic:"):
        table = _numbers(entry.split(":", 1)[1], where).astype(int)
        if table.shape != (X.size,):
            raise ParseError("deterministic table needs one entry per source symbol", where)
        size = int(table.max()) + 1
        psi = DeterministicMap(X, Alphabet.range(f"Xt{k}", size), tuple(int(t) for t in table))
        return deterministic_distortion(psi), psi.codomain, psi
    raise ParseError(f"unknown distortion preset {entry!r}", where)


def parse_problem_dict(doc: dict, where: str = "<problem>") -> SourceInstance:
    if not isinstance(doc, dict):
        raise ParseError("problem must be a JSON object", where)
    receivers = int(doc.get("receivers", len(doc.get("distortions", [])) or 2))
    side = list(doc.get("side", [side_name(k) for k in range(1, receivers + 1)]))
    if len(side) != receivers:
        raise ParseError(f"'side' lists {len(side)} variables for {receivers} receivers", where)
    if "factored" in doc:
        b = _Builder()
        for i, stmt in enumerate(doc["factored"]):
            _statement(b, stmt, f"{where}: factored[{i}]")
        j = b.joint()
    elif "axes" in doc:
        j = _dense(doc, f"{where}: dense source")
    else:
        raise ParseError("problem needs 'factored' statements or dense 'axes'/'probs'", where)
    src = doc.get("source", SOURCE)
    comps = [src] if isinstance(src, str) else list(src)
    for n in comps + side:
        if n not in j:
            raise ParseError(f"unknown variable {n!r}", where)
    keep = comps + side
    j = JointPMF(tuple(j.alphabet(n) for n in keep), marginal_array(j, keep), j.residual)
    rename = {n: side_name(k) for k, n in enumerate(side, start=1)}
    j = JointPMF(tuple(j.alphabet(n).renamed(rename.get(n, n)) for n in keep), j.probs, j.residual)
    components = None
    if len(comps) > 1:
        j = merge_axes(j, comps, SOURCE).transpose([SOURCE] + [side_name(k) for k in range(1, receivers + 1)])
        components = tuple(_component_alphabet(c, j, i) for i, c in enumerate(comps))
    elif comps[0] != SOURCE:
        j = JointPMF((j.axes[0].renamed(SOURCE),) + j.axes[1:], j.probs, j.residual)
    X = j.alphabet(SOURCE)
    dists = doc.get("distortions")
    if not isinstance(dists, list) or len(dists) != receivers:
        raise ParseError(f"need one distortion entry per receiver ({receivers})", where)
    mats, recon, psis = [], [], []
    for k, entry in enumerate(dists, start=1):
        m, r, p = _distortion(entry, X, components, k, f"{where}: distortions[{k - 1}]")
        mats.append(m)
        recon.append(r)
        psis.append(p)
    return SourceInstance(j, tuple(mats), tuple(recon), tuple(psis), components, str(doc.get("name", "")))


def _component_alphabet(name, j, i) -> Alphabet:
    # component symbols in the order they appear in the merged source
    seen: dict = {}
    for s in j.alphabet(SOURCE).symbols:
        seen.setdefault(s[i], None)
    return Alphabet(name, tuple(seen))


def parse_problem(path) -> SourceInstance:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ParseError(f"cannot read problem file: {e}", str(path)) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", f"{path}:{e.lineno}:{e.colno}") from None
    return parse_problem_dict(doc, str(path))


# -- serialization ----------------------------------------------------------

def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(u) for u in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def serialize(inst: SourceInstance) -> dict:
    """Dense problem document; parsing it back gives identical tensors."""
    doc: dict[str, Any] = {"name": inst.name, "receivers": inst.receivers}
    doc["axes"] = [{"name": a.name, "symbols": [_jsonable(s) for s in a.symbols]} for a in inst.joint.axes]
    doc["probs"] = inst.joint.probs.tolist()
    dists = []
    for k, (m, r) in enumerate(zip(inst.distortions, inst.recon)):
        dists.append({"matrix": np.asarray(m).tolist(), "recon": [_jsonable(s) for s in r.symbols]})
    doc["distortions"] = dists
    if inst.components is not None:
        doc["component_axes"] = [{"name": c.name, "symbols": [_jsonable(s) for s in c.symbols]}
                                 for c in inst.components]
    return doc


def parse_serialized(doc: dict) -> SourceInstance:
    j = _dense(doc, "<serialized>")
    comps = None
    if "component_axes" in doc:
        comps = tuple(Alphabet(c["name"], tuple(_symbol(s) for s in c["symbols"])) for c in doc["component_axes"])
    mats, recon = [], []
    for k, d in enumerate(doc["distortions"], start=1):
        mats.append(np.array(d["matrix"], dtype=float))
        recon.append(Alphabet(f"Xhat{k}", tuple(_symbol(s) for s in d["recon"])))
    return SourceInstance(j, tuple(mats), tuple(recon), (), comps, doc.get("name", ""))


def write_problem(inst: SourceInstance, path):
    Path(path).write_text(json.dumps(serialize(inst), indent=1) + "\n")


# -- CSV and run records ------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if v == 0.0:
            return "0"               # folds -0.0 so reruns cannot differ in sign
        return f"{v:.{SIG_DIGITS}g}"
    return "" if v is None else str(v)


def csv_text(rows: Iterable[dict], columns: Sequence[str]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def emit_csv(rows: Iterable[dict], columns: Sequence[str], path=None) -> str:
    """Write RFC-4180 CSV (CRLF rows, header first) to ``path``; return the text."""
    text = csv_text(rows, columns)
    if path is not None:
        try:
            with open(path, "w", newline="") as f:
                f.write(text)
        except OSError as e:
            raise ToolkitError(f"cannot write {path}: {e}") from None
    return text


@dataclass
class RunRecord:
    command: str
    instance_hash: str | None
    seed: int
    options: dict
    results: Any
    version: str = VERSION
    wall_time: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), default=_default, indent=1, sort_keys=True)


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    return str(o)


# -- reproduction -----------------------------------------------------------

DATA = Path(__file__).parent / "data"
EXAMPLES = ("example1", "example2")


@dataclass
class Check:
    name: str
    expected: Any
    computed: Any
    ok: bool


@dataclass
class ReproReport:
    example: str
    checks: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.ok else 'FAIL'} {c.name}: expected {c.expected}, computed {c.computed}"
                for c in self.checks]


def load_example(example_id: str) -> SourceInstance:
    if example_id not in EXAMPLES:
        raise ValidationError(f"unknown example {example_id!r}; choose from {', '.join(EXAMPLES)}")
    return parse_problem(DATA / f"{example_id}.json")


def reproduce(example_id: str, opts=None, raise_on_fail: bool = True) -> ReproReport:
    from .classifiers import cln_margin, is_physically_degraded, markov_residual, stochastic_degradedness
    from .info import binary_entropy, cond_entropy
    from .rd import theorem3_rate
    from .simplex_opt import OptOptions

    opts = opts or OptOptions(restarts=8)
    t0 = time.perf_counter()
    inst = load_example(example_id)
    rep = ReproReport(example_id)
    add = lambda *a: rep.checks.append(Check(*a))
    jc = inst.with_components()
    if example_id == "example2":
        h = cond_entropy(jc, "X1", "Y2")
        add("H(X1|Y2) = 2/3", 2 / 3, h, abs(h - 2 / 3) <= 1e-12)
        sd = stochastic_degradedness(inst.joint)
        add("not stochastically degraded", "infeasible", "feasible" if sd.feasible else "infeasible", not sd.feasible)
        v = cln_margin(inst.joint, inst.component_map(0), opts)
        add("CLN(Y2 >= Y1 | X1)", "CLN, margin >= -1e-6", f"{v.verdict}, {v.margin_bits:.3g}",
            v.holds and v.margin_bits >= -1e-6)
        r = theorem3_rate(inst, 0.0, opts)
        want = binary_entropy(0.25) + binary_entropy(1 / 3)
        got = r.rate_bits
        add("R(0,0) = Hb(1/4) + Hb(1/3)", round(want, 6), None if got is None else round(got, 6),
            got is not None and abs(got - want) <= 1e-3)
    else:
        res = markov_residual(inst.joint, ["X"], ["Y2"], ["Y1"])
        add("not physically degraded", "residual > 0", f"{res:.3g}", not is_physically_degraded(inst.joint))
        v = cln_margin(inst.joint, inst.component_map(1), opts)
        add("CLN(Y2 >= Y1 | X2)", "CLN", v.verdict, v.holds)
        # the conditioning component is stated both ways; check the other one too
        v = cln_margin(inst.joint, inst.component_map(0), opts)
        add("CLN(Y2 >= Y1 | X1)", "CLN", v.verdict, v.holds)
        # W = X1 gives I(W;Y2) - I(W;Y1) = H(X1|Y1) - H(X1|Y2)
        w = cond_entropy(jc, "X1", "Y1") - cond_entropy(jc, "X1", "Y2")
        ln = cln_margin(inst.joint, None, opts)
        add("not less noisy (W = X1 witness)", f"margin <= {w:.6f} < 0", f"{ln.verdict}, {ln.margin_bits:.6f}",
            w < 0 and ln.verdict == "NotCLN" and ln.margin_bits <= w + 1e-6)
    rep.wall_time = time.perf_counter() - t0
    if raise_on_fail and not rep.ok:
        raise ReproductionFailed("\n".join(rep.lines()))
    return rep
