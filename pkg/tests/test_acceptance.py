"""The eight acceptance criteria, each at its stated tolerance and time budget.

Every criterion prints one ``PASS``/``FAIL`` line; the lines are repeated in
the pytest terminal summary.  Run ``python3 tests/test_acceptance.py`` to get
just the eight lines.
"""
import time
from pathlib import Path

import numpy as np
import pytest

from clnrd.classifiers import cln_margin, stochastic_degradedness
from clnrd.cli import main as cli_main
from clnrd.identities import (csiszar_residual, random_letterization_instance, random_pairs_joint,
                              single_letterize, telescoping_residual)
from clnrd.info import binary_entropy, cond_entropy
from clnrd.instance import psi_name
from clnrd.io import DATA, load_example, reproduce
from clnrd.rd import converse_lower_bound, hb_upper_bound, rd_curve_sweep, wyner_ziv_s
from clnrd.simplex_opt import OptOptions
from clnrd.sources import example1, example2, random_degraded_triple, random_degraded_two_source, random_instance
from clnrd.sr import (random_scalable_system, random_sr_system, scalable_inner_eval, sr_inner_eval, tcg_eval,
                      tcg_from_scalable, tcg_from_sr, theorem5_region)

from oracles import binary_no_side, brute_force_rd

RESULTS: dict[int, str] = {}
TARGET = binary_entropy(0.25) + binary_entropy(1 / 3)   # 1.729574


def record(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    RESULTS[n] = line
    print(line)
    return ok


def criterion_1():
    t0 = time.perf_counter()
    rep = reproduce("example2", OptOptions(restarts=8), raise_on_fail=False)
    (check,) = [c for c in rep.checks if c.name.startswith("R(0,0)")]
    dt = time.perf_counter() - t0
    got = check.computed
    ok = got is not None and abs(got - 1.729574) <= 1e-3 and dt < 60
    return record(1, ok, f"example 2 R(0,0) = {got} (target 1.729574 +- 1e-3), {dt:.1f} s")


def criterion_2():
    t0 = time.perf_counter()
    inst = load_example("example2")
    h = cond_entropy(inst.with_components(), "X1", "Y2")
    sd = stochastic_degradedness(inst.joint)
    v = cln_margin(inst.joint, inst.component_map(0), OptOptions(restarts=8))
    dt = time.perf_counter() - t0
    ok = abs(h - 2 / 3) <= 1e-12 and not sd.feasible and v.holds and v.margin_bits >= -1e-6 and dt < 60
    return record(2, ok, f"H(X1|Y2) - 2/3 = {h - 2 / 3:.1e}, stochastic LP infeasibility {sd.margin:.3g}, "
                         f"CLN margin {v.margin_bits:.1e} ({v.verdict}), {dt:.1f} s")


def criterion_3(count=20):
    t0 = time.perf_counter()
    opts = OptOptions(restarts=4)
    worst_up = worst_lo = 0.0
    for seed in range(count):
        inst = random_degraded_two_source(np.random.default_rng(1000 + seed))
        jc = inst.with_components()
        closed = cond_entropy(jc, "X1", "Y1") + cond_entropy(jc, "X2", ["X1", "Y2"])
        up = hb_upper_bound(inst, 0.0, 0.0, opts).value
        lo = converse_lower_bound(inst, 0.0, opts).value
        worst_up = max(worst_up, abs(up - closed))
        worst_lo = max(worst_lo, abs(lo - closed))
    dt = time.perf_counter() - t0
    ok = worst_up <= 1e-3 and worst_lo <= 1e-3 and dt < 600
    return record(3, ok, f"{count} degraded two-sources, max |upper - formula| {worst_up:.1e}, "
                         f"max |lower - formula| {worst_lo:.1e}, {dt:.1f} s")


def criterion_4():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    tel, csz = [], []
    for k in range(100):
        j = random_pairs_joint(rng, 1 + k % 3)
        tel.append(telescoping_residual(j))
        csz.append(csiszar_residual(j))
    let, mk = [], []
    for _ in range(25):
        rep = single_letterize(*random_letterization_instance(rng, 2), 2)
        let.append(rep.residual)
        mk.append(rep.markov_residual)
    dt = time.perf_counter() - t0
    ok = max(tel) < 1e-10 and max(csz) < 1e-10 and max(let) < 1e-9 and max(mk) < 1e-9 and dt < 300
    return record(4, ok, f"telescoping {max(tel):.1e}, csiszar {max(csz):.1e} (100 each); letterization "
                         f"{max(let):.1e}, markov {max(mk):.1e} (25 at n=2), {dt:.1f} s")


def criterion_5():
    inst = binary_no_side()
    worst_closed = worst_cross = 0.0
    for d in (0.0, 0.05, 0.1, 0.25):
        closed = 1 - binary_entropy(d)
        lib = wyner_ziv_s(inst, d, OptOptions(restarts=8)).value
        # library's own enumeration plus 0.02 grid over binary test channels
        grid = wyner_ziv_s(inst, d, OptOptions(restarts=1, grid_resolution=0.02), cap=2).value
        oracle = brute_force_rd(np.array([0.5, 0.5]), d, 0.02)
        worst_closed = max(worst_closed, abs(lib - closed))
        worst_cross = max(worst_cross, abs(lib - oracle), abs(grid - oracle))
    ok = worst_closed <= 5e-3 and worst_cross <= 5e-3
    return record(5, ok, f"max |S - (1 - Hb(D))| {worst_closed:.1e}, max |S - enumeration/grid| "
                         f"{worst_cross:.1e}")


def criterion_6():
    opts = OptOptions(restarts=4)
    cases = [example2(), example1()] + [random_instance(np.random.default_rng(60 + s), nx=3) for s in range(3)]
    worst_inc = worst_conv = -np.inf
    for inst in cases:
        grid = np.linspace(0, inst.dmax(2), 9)
        low = np.array([r.lower_bits for r in rd_curve_sweep(inst, grid, opts, with_upper=False)])
        worst_inc = max(worst_inc, np.diff(low).max())
        worst_conv = max(worst_conv, (low[1:-1] - (low[:-2] + low[2:]) / 2).max())
    ok = worst_inc <= 1e-6 and worst_conv <= 1e-6
    return record(6, ok, f"{len(cases)} sweeps, max increase {worst_inc:.1e}, max midpoint excess {worst_conv:.1e}")


def criterion_7():
    rng = np.random.default_rng(7)
    f1 = f2 = 0.0
    for k in range(20):
        tri = random_degraded_triple(rng, nested=bool(k % 2))
        aux = random_sr_system(rng, tri.source)
        f1 = max(f1, np.abs(np.subtract(sr_inner_eval(tri, aux).thresholds,
                                        tcg_eval(tri, tcg_from_sr(aux, tri.source)).thresholds)).max())
        two = random_instance(rng, nx=3)
        sa = random_scalable_system(rng, two.source)
        f2 = max(f2, np.abs(np.subtract(scalable_inner_eval(two, sa).thresholds,
                                        tcg_eval(two, tcg_from_scalable(sa, two.source)).thresholds)).max())
    opts = OptOptions(restarts=4)
    margin, corner_err, exact = 0.0, 0.0, True
    for seed in range(3):
        tri = random_degraded_triple(np.random.default_rng(70 + seed), nx=6, nested=False)
        rep = theorem5_region(tri, 0.0, opts)
        ext = tri.extended([1, 2])
        x1, x2 = psi_name(1), psi_name(2)
        h1 = cond_entropy(ext, x1, "Y1")
        h2 = cond_entropy(ext, x2, [x1, "Y2"])
        s0 = cond_entropy(ext, "X", [x1, x2, "Y3"])   # S' at zero distortion
        closed = np.array([h1, h1 + h2, h1 + h2 + s0])
        margin = min(margin, *rep.outer.margins)
        exact &= rep.exact
        if rep.exact:
            corner_err = max(corner_err, np.abs(np.array(rep.corner.thresholds) - closed).max())
    ok = f1 <= 1e-12 and f2 <= 1e-12 and margin >= -1e-6 and exact and corner_err <= 1e-3
    return record(7, ok, f"three-stage substitution {f1:.1e}, scalable substitution {f2:.1e} (20 systems each); "
                         f"outer margins >= {margin:.1e}; "
                         f"corner vs closed form {corner_err:.1e}")


def criterion_8(tmp_path):
    ex2 = str(DATA / "example2.json")
    tri = str(Path(__file__).resolve().parents[1] / "demos" / "problems" / "degraded_triple.json")
    commands = [
        ["classify", "--instance", ex2, "--given", "X1"],
        ["solve", "rd", "--instance", ex2, "--d1", "0", "--d2", "0.1"],
        ["solve", "sr", "--instance", tri, "--d3", "0.1"],
        ["sweep", "--instance", ex2, "--d2", "0:0.2:0.1"],
        ["verify-identities", "--trials", "20", "--letterization-trials", "3"],
    ]
    same = 0
    for i, cmd in enumerate(commands):
        outs = []
        for rep in range(2):
            path = tmp_path / f"c{i}_{rep}.csv"
            cli_main(cmd + ["--seed", "11", "--restarts", "4", "--out", str(path)])
            outs.append(path.read_bytes())
        same += outs[0] == outs[1] and len(outs[0]) > 0
    return record(8, same == len(commands), f"{same}/{len(commands)} commands byte-identical across reruns")


@pytest.mark.acceptance
def test_criterion_1_example2_rate():
    assert criterion_1()


@pytest.mark.acceptance
def test_criterion_2_example2_side_conditions():
    assert criterion_2()


@pytest.mark.acceptance
def test_criterion_3_degraded_oracle_equivalence():
    assert criterion_3()


@pytest.mark.acceptance
def test_criterion_4_identity_suite():
    assert criterion_4()


@pytest.mark.acceptance
def test_criterion_5_no_side_information_oracle():
    assert criterion_5()


@pytest.mark.acceptance
def test_criterion_6_sweep_shape():
    assert criterion_6()


@pytest.mark.acceptance
def test_criterion_7_refinement_consistency():
    assert criterion_7()


@pytest.mark.acceptance
def test_criterion_8_determinism(tmp_path):
    assert criterion_8(tmp_path)


if __name__ == "__main__":
    import sys
    import tempfile

    checks = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7]
    results = [c() for c in checks]
    with tempfile.TemporaryDirectory() as d:
        results.append(criterion_8(Path(d)))
    sys.exit(0 if all(results) else 1)
