import pytest

from hjdyn import hjpde, legendre, systems
from hjdyn.expr import is_zero, parse, simplify, structurally_equal, to_string


def _build(template, params=None, seed=0):
    sys = systems.instantiate(template, params)
    legendre.analyze(sys, seed=seed)
    return hjpde.build_constraints(sys, seed=seed)


def test_oscillator_constraint_shape():
    hj = _build("parametrized_oscillator")
    assert len(hj.constraints) == 1
    c = hj.constraints[0]
    assert c.coordinate == "t" and c.momentum == "p_t"
    want = parse("p_t + p_q^2/2 + V(q)", known_functions={"V"})
    assert structurally_equal(simplify(c.hprime, expand=True),
                              simplify(want, expand=True))


def test_free_particle_constraint_shape():
    hj = _build("relativistic_free")
    c = hj.constraints[0]
    assert c.momentum == "p_0"
    want = parse("p_0 + sqrt(p_1^2 + p_2^2 + p_3^2 + 1)")
    assert structurally_equal(simplify(c.hprime, {"q0dot"}, expand=True),
                              simplify(want, expand=True))


def test_charged_particle_constraint_with_scalar_potential():
    hj = _build("relativistic_charged",
                {"A0": "-q1", "A1": "0", "A2": "0", "A3": "0"})
    c = hj.constraints[0]
    want = parse("p_0 + sqrt(p_1^2 + p_2^2 + p_3^2 + 1) - q1")
    assert structurally_equal(simplify(c.hprime, {"q0dot"}, expand=True),
                              simplify(want, expand=True))


def test_charged_particle_magnetic_shift():
    # a vector potential shifts the momenta inside the root: k_i = p_i + A_i
    hj = _build("relativistic_charged",
                {"A0": "0", "A1": "-q2", "A2": "q1", "A3": "0"})
    c = hj.constraints[0]
    want = parse("p_0 + sqrt((p_1 - q2)^2 + (p_2 + q1)^2 + p_3^2 + 1)")
    resid = c.hprime - want
    assert is_zero(resid, {"q0dot"}, seed=0).is_zero


def test_canonical_hamiltonian_vanishes_weakly():
    for tpl in ("parametrized_regular", "parametrized_oscillator"):
        hj = _build(tpl)
        assert hj.vanishing.tag == "symbolically-zero"
    for tpl, params in (("relativistic_free", None),
                        ("relativistic_charged", {"A0": "-q1"})):
        hj = _build(tpl, params)
        assert hj.vanishing.is_zero


def test_constraint_momentum_coefficient_is_one():
    for tpl in ("parametrized_oscillator", "relativistic_free"):
        hj = _build(tpl)
        assert hjpde.structural_checks(hj) == []


def test_synthetic_singular_system_constraint():
    sys = legendre.LagrangianSystem(
        ["q1", "q2"], ["q1dot", "q2dot"], parse("q1dot^2/2 + q1*q2"))
    legendre.analyze(sys, seed=0)
    hj = hjpde.build_constraints(sys, seed=0)
    # q2 is cyclic in the velocities: H'_2 = p_2 - 0
    labels = [c.label for c in hj.constraints]
    assert labels == ["2"]
    assert to_string(simplify(hj.constraints[0].hprime)) == "p_2"
    # H_0 does not vanish for a non-parametrized system
    assert not hj.vanishing.is_zero


def test_phase_pairs_cover_extended_space():
    hj = _build("parametrized_oscillator")
    pairs = hj.phase_pairs()
    assert ("q", "p_q") in pairs
    assert ("t", "p_t") in pairs


def test_surface_substitution():
    hj = _build("parametrized_oscillator")
    sub = hj.surface_substitution()
    assert "p_t" in sub


def test_report_dict_is_json_ready():
    import json
    hj = _build("parametrized_oscillator")
    d = hjpde.report_dict(hj)
    json.dumps(d)
    assert d["vanishing"] == "symbolically-zero"
    assert d["rank"] == 1
