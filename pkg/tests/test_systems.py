import math

import pytest

from hjdyn import systems
from hjdyn.expr import evaluate, free_symbols, to_string
from hjdyn.systems import (
    TemplateError, instantiate, load_system, reference_solution,
)


def test_template_ids():
    assert set(systems.TEMPLATE_IDS) == {
        "parametrized_regular", "parametrized_oscillator",
        "relativistic_charged", "relativistic_free"}


def test_parametrized_oscillator_defaults():
    sys = instantiate("parametrized_oscillator")
    assert sys.coordinates == ["t", "q"]
    v = sys.functions["V"]
    assert v is not None
    assert evaluate(v[1], {v[0]: 3.0}) == 4.5


def test_parametrized_regular_keeps_v_opaque():
    sys = instantiate("parametrized_regular")
    assert sys.functions["V"] is None


def test_relativistic_free_lagrangian_value():
    sys = instantiate("relativistic_free", {"m": 2.0, "c": 3.0})
    # at rest in space (q0 is the zeroth worldline coordinate): L = -m c
    val = evaluate(sys.lagrangian, {"q0dot": 1.0, "q1dot": 0.0,
                                    "q2dot": 0.0, "q3dot": 0.0,
                                    "q0": 0, "q1": 0, "q2": 0, "q3": 0})
    assert val == pytest.approx(-6.0)


def test_relativistic_charged_coupling():
    sys = instantiate("relativistic_charged",
                      {"A0": "-q1", "e": 2.0, "c": 1.0})
    bind = {"q0dot": 1.0, "q1dot": 0.0, "q2dot": 0.0, "q3dot": 0.0,
            "q0": 0.0, "q1": 5.0, "q2": 0.0, "q3": 0.0}
    # L = -m c sqrt(...) - (e/c) q0dot A0 = -1 + 10
    assert evaluate(sys.lagrangian, bind) == pytest.approx(9.0)


def test_instantiate_rejects_unknown_template():
    with pytest.raises(TemplateError):
        instantiate("nope")


def test_instantiate_rejects_unknown_parameters():
    with pytest.raises(TemplateError):
        instantiate("relativistic_free", {"bogus": 1})


def test_instantiate_rejects_nonpositive_mass():
    with pytest.raises(TemplateError):
        instantiate("relativistic_free", {"m": -1})


def test_reference_free_particle():
    ref = reference_solution("relativistic_free", {"m": 1, "c": 1},
                             {"p_1": 3.0}, 10.0)
    assert ref.values["q1"] == pytest.approx(30.0 / math.sqrt(10.0))
    assert ref.values["p_0"] == pytest.approx(-math.sqrt(10.0))


def test_reference_oscillator():
    ref = reference_solution("parametrized_oscillator", None,
                             {"q": 1.0, "p_q": 0.0}, math.pi / 2)
    assert ref.values["q"] == pytest.approx(0.0, abs=1e-15)
    assert ref.values["p_q"] == pytest.approx(-1.0)


def test_reference_unknown():
    with pytest.raises(TemplateError):
        reference_solution("parametrized_regular", None, {}, 1.0)


def test_load_system_template_uri():
    sys = load_system("template:relativistic_charged?m=1&c=1&e=1&A0=-q1")
    assert sys.system_id == "relativistic_charged"
    assert sys.closed_form_h is not None


def test_load_system_file(tmp_path):
    path = tmp_path / "sys.txt"
    path.write_text(
        "coordinates = q1, q2\n"
        "lagrangian = q1dot^2/2 + q1*q2\n")
    sys = load_system(str(path))
    assert sys.coordinates == ["q1", "q2"]
    assert sys.velocities == ["q1dot", "q2dot"]
