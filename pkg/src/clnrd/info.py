"""Shannon measures in bits over a JointPMF (0 log 0 = 0)."""
from __future__ import annotations

import numpy as np

from .errors import OutOfRange, OverlappingSets
from .prob import JointPMF, _names, marginalize

NOISE_FLOOR = 1e-12


def _clamp(v: float) -> float:
    # tiny negative values are rounding noise around a true zero
    if -NOISE_FLOOR <= v < 0:
        return 0.0
    return float(v)


def entropy_of(p: np.ndarray) -> float:
    """Entropy of a probability array (any shape), in bits."""
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def _set_union(*groups) -> tuple[str, ...]:
    out: list[str] = []
    for g in groups:
        for n in _names(g):
            if n not in out:
                out.append(n)
    return tuple(out)


def entropy(j: JointPMF, vars) -> float:
    names = _names(vars)
    if not names:
        return 0.0
    return _clamp(entropy_of(marginalize(j, names).probs))


def cond_entropy(j: JointPMF, vars, given=()) -> float:
    """H(vars | given).  Shared names are allowed, so H(X|X) = 0."""
    return _clamp(entropy(j, _set_union(vars, given)) - entropy(j, given))


def cond_mutual_info(j: JointPMF, a, b, given=()) -> float:
    """I(a; b | given).  ``a`` and ``b`` may share names; ``given`` may not meet either."""
    a, b, c = _names(a), _names(b), _names(given)
    if set(c) & (set(a) | set(b)):
        raise OverlappingSets(f"conditioning set {c} meets {a} or {b}")
    val = (entropy(j, _set_union(a, c)) + entropy(j, _set_union(b, c))
           - entropy(j, _set_union(a, b, c)) - entropy(j, c))
    return _clamp(val)


def mutual_info(j: JointPMF, a, b) -> float:
    return cond_mutual_info(j, a, b, ())


def binary_entropy(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise OutOfRange(f"binary entropy needs 0 <= alpha <= 1, got {alpha}")
    return entropy_of(np.array([alpha, 1.0 - alpha]))
