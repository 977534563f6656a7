import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clnrd.errors import BadAxisLabeling, BudgetExceeded, ChannelAxisMismatch
from clnrd.identities import (csiszar_residual, csiszar_sides, random_letterization_instance, random_pairs_joint,
                              single_letterize, telescoping_residual)
from clnrd.prob import Alphabet, Channel, build_joint


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3))
def test_telescoping_and_csiszar(seed, n):
    j = random_pairs_joint(np.random.default_rng(seed), n)
    assert telescoping_residual(j) < 1e-10
    assert csiszar_residual(j) < 1e-10


def test_csiszar_sides_are_not_trivially_zero():
    j = random_pairs_joint(np.random.default_rng(3), 2)
    left, right = csiszar_sides(j)
    assert left > 1e-3 and abs(left - right) < 1e-12


def test_bad_labels():
    j = build_joint([Alphabet.range("A1", 2), Alphabet.range("C1", 2)], np.full(4, 0.25))
    with pytest.raises(BadAxisLabeling):
        telescoping_residual(j)
    j = build_joint([Alphabet.range("A1", 2), Alphabet.range("B2", 2)], np.full(4, 0.25))
    with pytest.raises(BadAxisLabeling):
        csiszar_residual(j)


@pytest.mark.parametrize("seed", range(5))
def test_single_letterization_equality_and_chain(seed):
    base, ch = random_letterization_instance(np.random.default_rng(seed), 2)
    rep = single_letterize(base, ch, 2)
    assert rep.residual < 1e-9
    assert rep.markov_residual < 1e-9
    assert rep.w_alphabet_size == rep.w_joint.alphabet("W").size


def test_strong_chain_when_l_is_a_function_of_r():
    base, ch = random_letterization_instance(np.random.default_rng(7), 2, l_function_of_r=True)
    rep = single_letterize(base, ch, 2)
    assert rep.residual < 1e-9 and rep.strong_markov_residual < 1e-9


def test_single_letterize_blocklength_one_is_identity():
    base, ch = random_letterization_instance(np.random.default_rng(11), 1)
    rep = single_letterize(base, ch, 1)
    assert rep.residual < 1e-12


def test_single_letterize_input_checks():
    base, ch = random_letterization_instance(np.random.default_rng(0), 2)
    wrong = Channel(ch.input_axes[:1], ch.output_axis, ch.probs.sum(axis=(1, 2, 3)) / 8)
    with pytest.raises(ChannelAxisMismatch):
        single_letterize(base, wrong, 2)
    with pytest.raises(BudgetExceeded):
        single_letterize(base, ch, 4)
