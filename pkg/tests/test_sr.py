import numpy as np
import pytest

from clnrd.errors import DistortionViolated, NoDegradationRelation, ValidationError
from clnrd.info import cond_entropy
from clnrd.instance import SourceInstance, deterministic_distortion, psi_name
from clnrd.prob import Alphabet, AuxiliarySystem, Channel, DeterministicMap
from clnrd.sources import random_degraded_triple, random_instance
from clnrd.sr import (RegionCorner, find_factor, random_scalable_system, random_sr_system, scalable_inner_eval,
                      sr_degraded_corner, sr_inner_eval, sr_outer_bound, tcg_eval, tcg_from_scalable, tcg_from_sr,
                      theorem5_region, theorem6_region)


@pytest.mark.parametrize("seed", range(5))
def test_seven_auxiliary_reduces_to_three_stage(seed):
    rng = np.random.default_rng(seed)
    inst = random_degraded_triple(rng, nested=bool(seed % 2))
    aux = random_sr_system(rng, inst.source)
    a = sr_inner_eval(inst, aux)
    b = tcg_eval(inst, tcg_from_sr(aux, inst.source))
    assert np.abs(np.subtract(a.thresholds, b.thresholds)).max() < 1e-12
    assert np.abs(np.subtract(a.distortions, b.distortions)).max() < 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_seven_auxiliary_reduces_to_scalable(seed):
    rng = np.random.default_rng(100 + seed)
    inst = random_instance(rng, nx=3)
    aux = random_scalable_system(rng, inst.source)
    a = scalable_inner_eval(inst, aux)
    b = tcg_eval(inst, tcg_from_scalable(aux, inst.source))
    assert np.abs(np.subtract(a.thresholds, b.thresholds)).max() < 1e-12


def closed_corner(inst, sprime_value):
    ext = inst.extended([1, 2])
    h1 = cond_entropy(ext, psi_name(1), "Y1")
    h2 = cond_entropy(ext, psi_name(2), [psi_name(1), "Y2"])
    return np.array([h1, h1 + h2, h1 + h2 + sprime_value])


@pytest.mark.parametrize("seed", range(3))
def test_degraded_triple_corner_and_outer_margins(seed, fast):
    inst = random_degraded_triple(np.random.default_rng(seed), nx=6, nested=False)
    ext = inst.extended([1, 2])
    # zero distortion at receiver 3: S' is H(X | Xt1, Xt2, Y3)
    rep = theorem5_region(inst, 0.0, fast)
    assert rep.exact
    assert min(rep.outer.margins) >= -1e-6
    lossless = cond_entropy(ext, "X", [psi_name(1), psi_name(2), "Y3"])
    assert np.abs(np.array(rep.corner.thresholds) - closed_corner(inst, lossless)).max() < 1e-3
    # the explicit auxiliaries attain the corner
    assert np.abs(np.subtract(rep.inner.thresholds, rep.corner.thresholds)).max() < 1e-3
    # at the no-information distortion level S' vanishes
    rep = theorem5_region(inst, inst.dmax(3), fast)
    assert np.abs(np.array(rep.corner.thresholds) - closed_corner(inst, 0.0)).max() < 1e-3


def test_outer_bound_lies_below_inner(fast):
    inst = random_degraded_triple(np.random.default_rng(9), nx=4)
    rep = theorem5_region(inst, 0.1, fast)
    assert all(o <= i + 1e-6 for o, i in zip(rep.outer.thresholds, rep.inner.thresholds))


def test_degraded_corner_with_distortion(fast):
    inst = random_degraded_triple(np.random.default_rng(5), nx=4)
    exact = sr_degraded_corner(inst, 0.0, 0.0, 0.2, fast)
    loose = sr_degraded_corner(inst, 0.2, 0.2, 0.2, fast)
    re = sr_inner_eval(inst, loose.witness, (0.2, 0.2, 0.2))
    assert re.thresholds[-1] == pytest.approx(loose.thresholds[-1], abs=1e-9)
    assert loose.thresholds[-1] <= exact.thresholds[-1] + 1e-6


def test_sr_outer_bound_needs_both_maps(fast):
    inst = random_instance(np.random.default_rng(0))
    with pytest.raises(Exception):
        sr_outer_bound(inst, 0.1, fast)


def nested_pair(psi1_table, psi2_table, seed=0):
    rng = np.random.default_rng(seed)
    base = random_instance(rng, nx=4)
    X = base.source
    p1 = DeterministicMap(X, Alphabet.range("Xt1", max(psi1_table) + 1), psi1_table)
    p2 = DeterministicMap(X, Alphabet.range("Xt2", max(psi2_table) + 1), psi2_table)
    return SourceInstance(base.joint, (deterministic_distortion(p1), deterministic_distortion(p2)),
                          (p1.codomain, p2.codomain), (p1, p2))


def test_theorem6_cases(fast):
    # seed 0 satisfies the conditions of both cases
    fine, coarse = (0, 1, 2, 3), (0, 0, 1, 1)
    for tables, case in (((fine, coarse), "i"), ((coarse, fine), "ii")):
        inst = nested_pair(*tables)
        rep = theorem6_region(inst, fast)
        assert rep.psi_prime is not None and rep.case == case
        ev = scalable_inner_eval(inst, rep.corner.witness, (0.0, 0.0))
        assert np.abs(np.subtract(ev.thresholds, rep.corner.thresholds)).max() < 1e-12
    with pytest.raises(NoDegradationRelation):
        theorem6_region(nested_pair((0, 0, 1, 1), (0, 1, 0, 1)), fast)


def test_find_factor():
    X = Alphabet.range("X", 4)
    fine = DeterministicMap(X, Alphabet.range("F", 4), (0, 1, 2, 3))
    coarse = DeterministicMap(X, Alphabet.range("C", 2), (1, 1, 0, 0))
    f = find_factor(coarse, fine)
    assert fine.compose(f).table == coarse.table
    assert find_factor(fine, coarse) is None


def test_auxiliary_may_not_read_side_information():
    inst = random_degraded_triple(np.random.default_rng(0))
    aux = random_sr_system(np.random.default_rng(1), inst.source)
    y = inst.joint.alphabet("Y1")
    bad = Channel((y,), Alphabet.range("A1", 2), np.full((y.size, 2), 0.5))
    with pytest.raises(ValidationError):
        sr_inner_eval(inst, AuxiliarySystem((bad,) + aux.channels[1:]))


def test_distortion_violation_is_reported():
    inst = random_degraded_triple(np.random.default_rng(0))
    aux = random_sr_system(np.random.default_rng(1), inst.source)
    with pytest.raises(DistortionViolated):
        sr_inner_eval(inst, aux, (0.0, 0.0, 0.0))


def test_region_corner_helpers():
    c = RegionCorner((1.0, 1.5, 3.0))
    assert c.increments == (1.0, 0.5, 1.5)
    assert c.contains((1.0, 0.5, 1.5)) and not c.contains((0.9, 1.0, 2.0))
