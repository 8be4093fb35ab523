import pytest

from hjdyn import hjpde, integrability, legendre, systems
from hjdyn.expr import parse, to_string
from hjdyn.integrability import (
    InconsistentDynamicsError, classify_constraints, consistency_iterate,
    poisson_bracket, total_variation,
)


def _build(template, params=None, seed=0):
    sys = systems.instantiate(template, params)
    legendre.analyze(sys, seed=seed)
    return hjpde.build_constraints(sys, seed=seed)


def _build_raw(coords, vels, lag_text, seed=0):
    sys = legendre.LagrangianSystem(coords, vels, parse(lag_text))
    legendre.analyze(sys, seed=seed)
    return hjpde.build_constraints(sys, seed=seed)


def test_poisson_bracket_canonical():
    pairs = [("q", "p")]
    b = poisson_bracket(parse("q"), parse("p"), pairs)
    assert to_string(b) == "1"
    assert to_string(poisson_bracket(parse("p"), parse("q"), pairs)) == "-1"
    assert to_string(poisson_bracket(parse("q^2"), parse("q"), pairs)) == "0"


def test_poisson_bracket_antisymmetry():
    pairs = [("q", "p")]
    a, b = parse("q^2*p"), parse("p^2 + q")
    lhs = poisson_bracket(a, b, pairs)
    rhs = poisson_bracket(b, a, pairs)
    from hjdyn.expr import is_zero
    assert is_zero(lhs + rhs, seed=0).is_zero


@pytest.mark.parametrize("template,params", [
    ("parametrized_regular", None),
    ("parametrized_oscillator", None),
    ("relativistic_free", None),
    ("relativistic_charged", {"A0": "-q1"}),
])
def test_templates_close_at_generation_zero(template, params):
    hj = _build(template, params)
    rep = consistency_iterate(hj, seed=0)
    assert rep.integrable
    assert len(rep.generations) == 1
    for v in rep.variations:
        assert v.zero, v.verdicts


def test_variation_of_oscillator_constraint_vanishes():
    hj = _build("parametrized_oscillator")
    v = total_variation(hj, "t", seed=0)
    assert v.zero


def test_synthetic_system_grows_secondary_constraints():
    # L = q1dot^2/2 + q1*q2: primary p_2, then q1, p_1, q2 in turn
    hj = _build_raw(["q1", "q2"], ["q1dot", "q2dot"], "q1dot^2/2 + q1*q2")
    rep = consistency_iterate(hj, seed=0)
    gens = [[to_string(c) for c in g] for g in rep.generations]
    assert gens[0] == ["p_2"]
    assert "q1" in gens[1]
    flat = [c for g in gens for c in g]
    assert "p_1" in flat and "q2" in flat
    assert rep.integrable  # the chain terminates with zero variations


def test_synthetic_system_classification_has_second_class_pairs():
    hj = _build_raw(["q1", "q2"], ["q1dot", "q2dot"], "q1dot^2/2 + q1*q2")
    rep = consistency_iterate(hj, seed=0)
    tags = {tag for _, tag in rep.classification}
    assert "second-class" in tags


def test_first_class_classification_for_single_constraint():
    hj = _build("parametrized_oscillator")
    rep = consistency_iterate(hj, seed=0)
    assert all(tag == "first-class" for _, tag in rep.classification)


def test_report_to_dict_round_trips_json():
    import json
    hj = _build("parametrized_oscillator")
    rep = consistency_iterate(hj, seed=0)
    out = json.dumps(rep.to_dict())
    assert '"integrable": true' in out


def test_inconsistent_dynamics_detected():
    # L = q1dot^2/2 + q2: varying q2 demands 1 = 0
    sys = legendre.LagrangianSystem(["q1", "q2"], ["q1dot", "q2dot"],
                                    parse("q1dot^2/2 + q2"))
    legendre.analyze(sys, seed=0)
    hj = hjpde.build_constraints(sys, seed=0)
    with pytest.raises(InconsistentDynamicsError):
        consistency_iterate(hj, seed=0)
