import math
import warnings

import numpy as np
import pytest

from hjdyn import quantize as qz
from hjdyn.expr import parse
from hjdyn.quantize import (
    BoundaryContaminationWarning, NormalizationError, OperatorShapeError,
    Wavefunction, build_operator, evolve, expectations, gaussian_packet,
    ground_state, hermiticity_defect, oscillator_ground_state, plane_mode,
)


@pytest.fixture(scope="module")
def osc_op():
    return build_operator(parse("p_q^2/2 + q^2/2"), "q", "p_q")


@pytest.fixture(scope="module")
def rel_op():
    return build_operator(parse("sqrt(p^2 + m^2*c^2)"), "x", "p",
                          parameters={"m": 1.0, "c": 1.0})


def test_build_operator_potential(osc_op):
    assert osc_op.kind == "potential"
    # V sampled on the grid: V(0) = 0, V at the edge = 50
    assert osc_op.v_values.min() == pytest.approx(0.0, abs=1e-4)
    assert osc_op.v_values[0] == pytest.approx(50.0)


def test_build_operator_relativistic(rel_op):
    assert rel_op.kind == "relativistic-free"
    assert rel_op.dispersion(0.0) == pytest.approx(1.0)


def test_build_operator_free_newtonian():
    op = build_operator(parse("p^2/2"), "q", "p")
    assert op.kind == "potential"
    assert np.all(op.v_values == 0.0)


def test_build_operator_rejects_position_under_root():
    with pytest.raises(OperatorShapeError):
        build_operator(parse("sqrt(p^2 + q^2 + 1)"), "q", "p")
    with pytest.raises(OperatorShapeError):
        build_operator(parse("sqrt(p^2 + 1) + q"), "q", "p")


def test_build_operator_rejects_opaque_potential():
    with pytest.raises(OperatorShapeError):
        build_operator(parse("p^2/2 + V(q)", known_functions={"V"}),
                       "q", "p")


def test_gaussian_packet_normalized():
    wf = gaussian_packet(center=0.0, width=1.0)
    assert wf.norm == pytest.approx(1.0, abs=1e-12)


def test_cn_unitarity(osc_op):
    wf = gaussian_packet()
    out = evolve(wf, osc_op, 1e-3, 500)
    assert abs(out.norm - 1.0) < 500 * 1e-10


def test_spectral_unitarity(rel_op):
    wf = gaussian_packet(boundary="periodic")
    out = evolve(wf, rel_op, 1e-3, 500)
    assert abs(out.norm - 1.0) < 1e-12


def test_discrete_ground_state_stationary(osc_op):
    wf, energy = ground_state(osc_op)
    assert energy == pytest.approx(0.5, abs=2e-3)
    out = evolve(wf, osc_op, 1e-3, 2000)
    assert np.abs(out.density - wf.density).max() < 1e-9


def test_analytic_ground_state_energy(osc_op):
    wf = oscillator_ground_state()
    _, _, h = expectations(wf, osc_op)
    assert h == pytest.approx(0.5, abs=2e-3)


def test_expectations_symmetric_gaussian():
    wf = gaussian_packet(center=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryContaminationWarning)
        q, p, _ = expectations(wf)
    assert q == pytest.approx(1.0, abs=1e-9)
    assert p == pytest.approx(0.0, abs=1e-9)


def test_expectations_boosted_gaussian():
    wf = gaussian_packet(center=0.0, k=2.0)
    q, p, _ = expectations(wf)
    # central differences are O(dx^2) accurate
    assert p == pytest.approx(2.0, abs=2e-3)


def test_expectations_require_normalization():
    wf = gaussian_packet()
    bad = Wavefunction(wf.x, 2.0 * wf.psi, 0.0, wf.boundary)
    with pytest.raises(NormalizationError):
        expectations(bad)


def test_ehrenfest_short_arc(osc_op):
    # exact correspondence for a quadratic potential, checked over t <= 1
    wf = gaussian_packet(center=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryContaminationWarning)
        cur = wf
        for _ in range(5):
            cur = evolve(cur, osc_op, 1e-3, 200)
            q, _, _ = expectations(cur)
            assert q == pytest.approx(math.cos(cur.t), abs=1e-3)


def test_plane_mode_exact_phase(rel_op):
    wf, k = plane_mode(5)
    out = evolve(wf, rel_op, 1e-3, 1000)
    want = wf.psi * np.exp(-1j * rel_op.dispersion(k) * 1.0)
    assert np.abs(out.psi - want).max() < 1e-13


def test_tiny_step_is_near_identity(osc_op):
    wf = gaussian_packet()
    out = evolve(wf, osc_op, 1e-12, 1)
    assert np.abs(out.psi - wf.psi).max() < 1e-10


def test_hermiticity(osc_op, rel_op):
    rng = np.random.default_rng(3)
    assert hermiticity_defect(osc_op, rng) < 1e-10
    assert hermiticity_defect(rel_op, rng) < 1e-10


def test_boundary_contamination_warned(osc_op):
    wf = gaussian_packet(center=7.5, width=1.5)
    with pytest.warns(BoundaryContaminationWarning):
        evolve(wf, osc_op, 1e-3, 1)


def test_evolve_rejects_wrong_boundary(osc_op, rel_op):
    with pytest.raises(ValueError):
        evolve(gaussian_packet(boundary="periodic"), osc_op, 1e-3, 1)
    with pytest.raises(ValueError):
        evolve(gaussian_packet(), rel_op, 1e-3, 1)
    with pytest.raises(ValueError):
        evolve(gaussian_packet(), osc_op, -1e-3, 1)
