import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import entropy as scipy_entropy

from clnrd.errors import OverlappingSets
from clnrd.info import binary_entropy, cond_entropy, cond_mutual_info, entropy, mutual_info
from clnrd.prob import Alphabet, build_joint


def joint_from(seed, sizes=(2, 3, 2)):
    rng = np.random.default_rng(seed)
    axes = [Alphabet.range(n, k) for n, k in zip("ABC", sizes)]
    p = rng.dirichlet(np.full(int(np.prod(sizes)), 0.7))
    return build_joint(axes, p)


seeds = st.integers(0, 10**6)


def test_binary_entropy_quarter():
    # printed value is 0.8113 to four digits
    assert round(binary_entropy(0.25), 4) == 0.8113
    assert binary_entropy(0.0) == 0.0 and binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == 1.0


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_entropy_matches_scipy(seed):
    j = joint_from(seed)
    assert abs(entropy(j, ["A", "B", "C"]) - scipy_entropy(j.probs.ravel(), base=2)) < 1e-12
    pb = j.probs.sum(axis=(0, 2))
    assert abs(entropy(j, "B") - scipy_entropy(pb, base=2)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_chain_rule_and_symmetry(seed):
    j = joint_from(seed)
    assert abs(entropy(j, ["A", "B", "C"])
               - (entropy(j, "A") + cond_entropy(j, "B", "A") + cond_entropy(j, "C", ["A", "B"]))) < 1e-12
    assert abs(mutual_info(j, "A", "B") - mutual_info(j, "B", "A")) < 1e-15
    # I(A;BC) = I(A;B) + I(A;C|B)
    assert abs(mutual_info(j, "A", ["B", "C"]) - mutual_info(j, "A", "B") - cond_mutual_info(j, "A", "C", "B")) < 1e-12


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_nonnegativity_and_conditioning_reduces_entropy(seed):
    j = joint_from(seed)
    assert cond_mutual_info(j, "A", "C", "B") >= 0.0
    assert cond_entropy(j, "A", ["B", "C"]) <= cond_entropy(j, "A", "B") + 1e-12
    assert cond_entropy(j, "A", "A") == 0.0


def test_independent_mutual_info_is_zero():
    p = np.outer([0.3, 0.7], [0.1, 0.6, 0.3])
    j = build_joint([Alphabet.range("A", 2), Alphabet.range("B", 3)], p)
    assert abs(mutual_info(j, "A", "B")) < 1e-14


def test_bsc_mutual_info_closed_form():
    e = 0.11
    p = 0.5 * np.array([[1 - e, e], [e, 1 - e]])
    j = build_joint([Alphabet.range("A", 2), Alphabet.range("B", 2)], p)
    oracle = 1 + e * math.log2(e) + (1 - e) * math.log2(1 - e)
    assert abs(mutual_info(j, "A", "B") - oracle) < 1e-14


def test_conditioning_set_may_not_overlap():
    with pytest.raises(OverlappingSets):
        cond_mutual_info(joint_from(0), "A", "B", "A")
