import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clnrd.errors import NegativeProbability, ParseError, ReproductionFailed, ValidationError
from clnrd.info import cond_entropy
from clnrd.io import (RunRecord, csv_text, emit_csv, load_example, parse_problem, parse_problem_dict,
                      parse_serialized, reproduce, serialize, write_problem)
from clnrd.prob import marginal_array
from clnrd.simplex_opt import OptOptions
from clnrd.sources import example1, example2, random_degraded_triple, random_instance


def same_instance(a, b):
    assert a.joint.names == b.joint.names
    assert [x.symbols for x in a.joint.axes] == [x.symbols for x in b.joint.axes]
    assert np.array_equal(a.joint.probs, b.joint.probs)
    assert all(np.array_equal(x, y) for x, y in zip(a.distortions, b.distortions))
    assert [p.table if p else None for p in a.psi] == [p.table if p else None for p in b.psi]


def test_bundled_example2_load_check():
    inst = load_example("example2")
    assert abs(cond_entropy(inst.with_components(), "X1", "Y2") - 2 / 3) <= 1e-12
    assert np.abs(inst.joint.probs - example2().joint.probs).max() < 1e-15


def test_bundled_example1_matches_constructor():
    assert np.abs(load_example("example1").joint.probs - example1().joint.probs).max() < 1e-15


@pytest.mark.parametrize("name", ["example1", "example2"])
def test_round_trip_bundled(name, tmp_path):
    inst = load_example(name)
    path = tmp_path / "p.json"
    write_problem(inst, path)
    same_instance(inst, parse_problem(path))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.booleans())
def test_round_trip_random(seed, triple):
    rng = np.random.default_rng(seed)
    inst = random_degraded_triple(rng) if triple else random_instance(rng)
    doc = json.loads(json.dumps(serialize(inst)))
    same_instance(inst, parse_serialized(doc))


def base_doc(**kw):
    doc = {"factored": ["X1 uniform", "Z bernoulli 1/3", "X2 = X1 xor Z", "Y2 = BEC(2/3)(X1)",
                        "Y1 = BSC(1/4)(X1)"],
           "source": ["X1", "X2"], "distortions": ["component-hamming:X1", "component-hamming:X2"]}
    doc.update(kw)
    return doc


def test_factored_statements_expand():
    inst = parse_problem_dict(base_doc())
    # bernoulli gives P[Z = 1] = 1/3, so X2 = X1 with probability 2/3
    jc = inst.with_components()
    p = marginal_array(jc, ["X1", "X2"])
    assert np.allclose(p, [[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
    assert abs(cond_entropy(jc, "X1", "Y2") - 2 / 3) < 1e-12


def test_negative_probability_is_rejected():
    doc = {"axes": [{"name": "X", "symbols": [0, 1]}, {"name": "Y1", "symbols": [0]}, {"name": "Y2", "symbols": [0]}],
           "probs": [[[-0.5]], [[1.5]]], "distortions": ["hamming", "hamming"]}
    with pytest.raises(NegativeProbability):
        parse_problem_dict(doc)
    with pytest.raises(ValidationError):
        parse_problem_dict(base_doc(factored=["X pmf [-0.1, 1.1]", "Y1 = X", "Y2 = X"], source="X",
                                    distortions=["hamming", "hamming"]))


@pytest.mark.parametrize("doc", [
    base_doc(factored=["X1 uniform", "Y1 = FOO(X1)", "Y2 = X1", "X2 uniform"]),
    base_doc(distortions=["component-hamming:Q", "hamming"]),
    base_doc(distortions=["nonsense", "hamming"]),
    base_doc(source=["X1", "W"]),
    {"distortions": ["hamming", "hamming"]},
])
def test_parse_errors(doc):
    with pytest.raises(ParseError):
        parse_problem_dict(doc)


def test_parse_error_carries_file_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n "factored": [\n  "X uniform",\n ]\n}\n')
    with pytest.raises(ParseError) as e:
        parse_problem(path)
    assert "bad.json:4:" in str(e.value)
    with pytest.raises(ParseError):
        parse_problem(tmp_path / "missing.json")


def test_csv_format(tmp_path):
    rows = [{"a": 1 / 3, "b": -0.0, "c": True, "d": None, "e": 7}]
    text = csv_text(rows, ["a", "b", "c", "d", "e"])
    assert text == "a,b,c,d,e\r\n0.333333333,0,true,,7\r\n"
    assert emit_csv([], ["d2", "lower_bits"], tmp_path / "x.csv") == "d2,lower_bits\r\n"
    assert (tmp_path / "x.csv").read_bytes() == b"d2,lower_bits\r\n"


def test_run_record_is_stable_json():
    rec = RunRecord("sweep", "abc", 0, {"d2": [0.0, 0.1]}, [{"lower_bits": np.float64(1.5)}], wall_time=0.1)
    doc = json.loads(rec.to_json())
    assert doc["results"][0]["lower_bits"] == 1.5 and doc["seed"] == 0


def test_reproduce_example2():
    rep = reproduce("example2", OptOptions(restarts=4))
    assert rep.ok and len(rep.checks) == 4


def test_reproduce_unknown_id():
    with pytest.raises(ValidationError):
        reproduce("example3")


def test_reproduction_failure_is_an_assertion():
    assert issubclass(ReproductionFailed, AssertionError)
