"""Problem instances: a source with side information and per-receiver distortions."""
from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import NotTwoSource, PsiMissing, ValidationError
from .prob import Alphabet, DeterministicMap, JointPMF, derive_variable, marginal_array

SOURCE = "X"


def side_name(j: int) -> str:
    return f"Y{j}"


def psi_name(j: int) -> str:
    return f"Xt{j}"


def hamming(alphabet: Alphabet) -> np.ndarray:
    return 1.0 - np.eye(alphabet.size)


def deterministic_distortion(psi: DeterministicMap) -> np.ndarray:
    """0/1 matrix that is zero exactly at ``xhat = psi(x)``."""
    d = np.ones((psi.domain.size, psi.codomain.size))
    d[np.arange(psi.domain.size), list(psi.table)] = 0.0
    return d


def psi_from_distortion(matrix: np.ndarray, domain: Alphabet, recon: Alphabet) -> DeterministicMap | None:
    """Recover the map of a deterministic distortion, or None if the matrix is not of that form."""
    m = np.asarray(matrix, dtype=float)
    if not np.all((m == 0.0) | (m == 1.0)):
        return None
    zeros = (m == 0.0).sum(axis=1)
    if not np.all(zeros == 1):
        return None
    return DeterministicMap(domain, recon, tuple(int(i) for i in np.argmin(m, axis=1)))


@dataclass(frozen=True, eq=False)
class SourceInstance:
    """Joint over ``X, Y1, Y2[, Y3]`` plus one distortion matrix per receiver.

    ``psi[j]`` is the map of receiver ``j+1``'s deterministic distortion when
    there is one.  ``components`` lists the component alphabets when ``X``
    is a tuple-valued two-source.
    """

    joint: JointPMF
    distortions: tuple
    recon: tuple
    psi: tuple = ()
    components: tuple | None = None
    name: str = ""

    def __post_init__(self):
        k = len(self.distortions)
        if k not in (2, 3):
            raise ValidationError("an instance has two or three receivers")
        want = (SOURCE,) + tuple(side_name(j) for j in range(1, k + 1))
        if tuple(self.joint.names) != want:
            raise ValidationError(f"joint axes must be {want}, got {self.joint.names}")
        X = self.joint.alphabet(SOURCE)
        if len(self.recon) != k:
            raise ValidationError("one reconstruction alphabet per receiver")
        ds = []
        for j, (d, r) in enumerate(zip(self.distortions, self.recon), start=1):
            d = np.array(d, dtype=float)
            if d.shape != (X.size, r.size):
                raise ValidationError(f"distortion {j} has shape {d.shape}, expected {(X.size, r.size)}")
            if (d < 0).any() or not np.isfinite(d).all():
                raise ValidationError(f"distortion {j} must be finite and nonnegative")
            if not np.all((d == 0).any(axis=1)):
                raise ValidationError(f"distortion {j} is not normal: some source symbol has no zero-cost reconstruction")
            d.setflags(write=False)
            ds.append(d)
        object.__setattr__(self, "distortions", tuple(ds))
        psi = tuple(self.psi) + (None,) * (k - len(self.psi))
        fixed = []
        for j, (p, d, r) in enumerate(zip(psi, ds, self.recon), start=1):
            if p is None:
                p = psi_from_distortion(d, X, r)
            elif not np.array_equal(deterministic_distortion(p), d):
                raise ValidationError(f"map for receiver {j} does not match its distortion matrix")
            fixed.append(p)
        object.__setattr__(self, "psi", tuple(fixed))
        if self.components is not None:
            comps = tuple(self.components)
            syms = tuple(itertools.product(*(c.symbols for c in comps)))
            if syms != X.symbols:
                raise ValidationError("source alphabet must be the product of the component alphabets")
            object.__setattr__(self, "components", comps)

    @property
    def receivers(self) -> int:
        return len(self.distortions)

    @property
    def source(self) -> Alphabet:
        return self.joint.alphabet(SOURCE)

    def need_psi(self, *js: int) -> list[DeterministicMap]:
        out = []
        for j in js:
            if self.psi[j - 1] is None:
                raise PsiMissing(f"receiver {j} does not have a deterministic distortion")
            out.append(self.psi[j - 1])
        return out

    def dmax(self, j: int) -> float:
        """Distortion reachable by a fixed reconstruction, using no information at all."""
        px = marginal_array(self.joint, [SOURCE])
        return float((px @ self.distortions[j - 1]).min())

    def dmin(self, j: int) -> float:
        return 0.0  # distortions are normal

    def extended(self, psis=()) -> JointPMF:
        """Joint with ``Xt{j}`` axes appended for the requested receivers."""
        j = self.joint
        for k in psis:
            (p,) = self.need_psi(k)
            j = derive_variable(j, p, psi_name(k))
        return j

    def with_components(self) -> JointPMF:
        """Joint with component axes ``X1, X2, ...`` appended."""
        if self.components is None:
            raise NotTwoSource("instance does not declare a component structure")
        j = self.joint
        for i, comp in enumerate(self.components):
            j = derive_variable(j, self.component_map(i), comp.name)
        return j

    def component_map(self, i: int) -> DeterministicMap:
        if self.components is None:
            raise NotTwoSource("instance does not declare a component structure")
        comp = self.components[i]
        return DeterministicMap(self.source, comp, tuple(comp.index(s[i]) for s in self.source.symbols))

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(repr(self.joint.names).encode())
        for a in self.joint.axes:
            h.update(repr(a.symbols).encode())
        h.update(np.ascontiguousarray(self.joint.probs).tobytes())
        for d in self.distortions:
            h.update(np.ascontiguousarray(d).tobytes())
        return h.hexdigest()[:16]

    def replace(self, **kw) -> "SourceInstance":
        fields_ = dict(joint=self.joint, distortions=self.distortions, recon=self.recon,
                       psi=self.psi, components=self.components, name=self.name)
        fields_.update(kw)
        return SourceInstance(**fields_)
