"""Composite-system extension, reduced-rate, and basis-dependence tests."""

import numpy as np
import pytest

from conftest import rand_herm, rand_mixed, rand_pure
from nambudyn.brackets import eom_rhs_array, quantized_nambu_spec
from nambudyn.core import (
    DensityMatrix,
    Generator,
    Operator,
    hermitize,
    partial_trace,
    tensor_product,
)
from nambudyn.dynamics import IntegratorConfig
from nambudyn.errors import (
    DimensionMismatch,
    NonHermitianInput,
    UnsupportedCombination,
)
from nambudyn.multiparticle import (
    CompositeSystem,
    HamiltonianMap,
    bb_correlated_state,
    big_brother_rate,
    big_brother_rate_fd,
    extend_rhs,
    extend_rhs_array,
    gisin_extension,
    lie_poisson_extension,
    separability_defect,
    singlet_state,
    subsystem_energy_drift,
)


def density_feedback(h, c=0.8):
    def ev(rho):
        arr = rho.entries
        return Operator(h + c * hermitize(arr @ arr))

    return HamiltonianMap(evaluator=ev, label="feedback")


def random_unitary(rng, d):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


# -- map and system validation --------------------------------------------------

def test_map_rejects_non_hermitian_output():
    bad = HamiltonianMap(
        evaluator=lambda rho: Operator(np.array([[0, 1], [0, 0]])), label="bad"
    )
    with pytest.raises(NonHermitianInput):
        bad.evaluate(rand_mixed(np.random.default_rng(0), 2))


def test_map_rejects_wrong_output_dim():
    h3 = rand_herm(np.random.default_rng(1), 3)
    bad = HamiltonianMap(evaluator=lambda rho: Operator(h3), label="bad")
    with pytest.raises(DimensionMismatch):
        bad.evaluate(rand_mixed(np.random.default_rng(2), 2))


def test_linear_map_marks_linearity():
    m = HamiltonianMap.linear(rand_herm(np.random.default_rng(3), 2))
    assert m.linearity
    assert not density_feedback(rand_herm(np.random.default_rng(4), 2)).linearity


def test_composite_rejects_coupling():
    h = rand_herm(np.random.default_rng(5), 2)
    with pytest.raises(UnsupportedCombination):
        CompositeSystem((2, 2), (h, h), coupling=("xx",))


def test_composite_rejects_bad_shapes():
    h = rand_herm(np.random.default_rng(6), 2)
    with pytest.raises(DimensionMismatch):
        CompositeSystem((2,), (h,))
    with pytest.raises(DimensionMismatch):
        CompositeSystem((2, 1), (h, h))
    with pytest.raises(DimensionMismatch):
        CompositeSystem((2, 2, 2), (h, h))
    with pytest.raises(UnsupportedCombination):
        CompositeSystem((2, 2), (h, "not a map"))


def test_extend_rhs_rejects_wrong_state_dim():
    h = rand_herm(np.random.default_rng(7), 2)
    sys = CompositeSystem((2, 2), (h, h))
    with pytest.raises(DimensionMismatch):
        extend_rhs(sys, rand_mixed(np.random.default_rng(8), 6))


# -- extension correctness ------------------------------------------------------

def test_extend_rhs_matches_kron_commutator():
    rng = np.random.default_rng(9)
    h1, h2 = rand_herm(rng, 2), rand_herm(rng, 3)
    sys = CompositeSystem((2, 3), (density_feedback(h1), density_feedback(h2)))
    rho = rand_mixed(rng, 6)
    out = extend_rhs(sys, rho).entries
    r1 = partial_trace(rho.entries, (2, 3), 1)
    r2 = partial_trace(rho.entries, (2, 3), 2)
    g1 = h1 + 0.8 * hermitize(r1 @ r1)
    g2 = h2 + 0.8 * hermitize(r2 @ r2)
    lift = np.kron(g1, np.eye(3)) + np.kron(np.eye(2), g2)
    expected = -1j * (lift @ rho.entries - rho.entries @ lift)
    assert np.max(np.abs(out - expected)) < 1e-13


def test_extend_rhs_three_subsystems():
    rng = np.random.default_rng(10)
    hs = [rand_herm(rng, 2) for _ in range(3)]
    sys = CompositeSystem((2, 2, 2), tuple(hs))
    rho = rand_mixed(rng, 8)
    out = extend_rhs_array(sys, np.asarray(rho.entries))
    lift = (
        np.kron(np.kron(hs[0], np.eye(2)), np.eye(2))
        + np.kron(np.kron(np.eye(2), hs[1]), np.eye(2))
        + np.kron(np.eye(4), hs[2])
    )
    expected = -1j * (lift @ rho.entries - rho.entries @ lift)
    assert np.max(np.abs(out - expected)) < 1e-13


def test_reduced_flow_is_autonomous():
    # partial trace of the composite rhs equals the one-particle rhs of
    # the reduced state, for every subsystem
    rng = np.random.default_rng(11)
    h1, h2 = rand_herm(rng, 3), rand_herm(rng, 2)
    maps = (density_feedback(h1, 0.5), density_feedback(h2, 1.1))
    sys = CompositeSystem((3, 2), maps)
    rho = rand_mixed(rng, 6)
    full = extend_rhs_array(sys, np.asarray(rho.entries))
    for k, (d, hmap) in enumerate(zip((3, 2), maps), start=1):
        reduced = partial_trace(rho.entries, (3, 2), k)
        h = hmap.evaluate(DensityMatrix(hermitize(reduced))).entries
        expected = -1j * (h @ reduced - reduced @ h)
        got = partial_trace(full, (3, 2), k)
        assert np.max(np.abs(got - expected)) < 1e-13


def test_separability_defect_is_tiny():
    rng = np.random.default_rng(12)
    h1, h2 = rand_herm(rng, 2), rand_herm(rng, 3)
    sys = CompositeSystem((2, 3), (density_feedback(h1), density_feedback(h2)))
    rho = rand_mixed(rng, 6)
    cfg = IntegratorConfig(dt=0.05, t_end=0.5, record_every=2)
    for k in (1, 2):
        assert separability_defect(sys, rho, k, cfg) < 1e-12


def test_separability_defect_validates_subsystem_index():
    rng = np.random.default_rng(13)
    h = rand_herm(rng, 2)
    sys = CompositeSystem((2, 2), (h, h))
    cfg = IntegratorConfig(dt=0.05, t_end=0.2)
    with pytest.raises(DimensionMismatch):
        separability_defect(sys, rand_mixed(rng, 4), 3, cfg)


def test_subsystem_energy_is_conserved():
    rng = np.random.default_rng(14)
    h1, h2 = rand_herm(rng, 2), rand_herm(rng, 2)
    rho = rand_mixed(rng, 4)
    cfg = IntegratorConfig(dt=0.01, t_end=0.5, record_every=5)
    for sub in (1, 2):
        drift = subsystem_energy_drift(
            h1, h2, Generator.casimir(3, 1.0 / 3.0), rho, (2, 2), cfg, sub
        )
        assert drift < 1e-10


# -- reduced-C2 rate ------------------------------------------------------------

def test_rate_matches_finite_difference():
    rng = np.random.default_rng(15)
    for _ in range(3):
        h1 = rand_herm(rng, 2)
        h2 = rand_herm(rng, 2)
        rho = rand_mixed(rng, 4)
        rate = big_brother_rate(rho, (2, 2), h1)
        fd = big_brother_rate_fd(rho, (2, 2), h1, h2)
        assert abs(rate - fd) < 1e-6 * max(1.0, abs(rate))


def test_rate_vanishes_on_product_states():
    rng = np.random.default_rng(16)
    a = rand_mixed(rng, 2)
    b = rand_mixed(rng, 3)
    prod = tensor_product(a, b)
    h1 = rand_herm(rng, 2)
    assert abs(big_brother_rate(prod, (2, 3), h1)) < 1e-10


def test_rate_vanishes_on_singlet():
    h1 = rand_herm(np.random.default_rng(17), 2)
    assert abs(big_brother_rate(singlet_state(), (2, 2), h1)) < 1e-10


def test_rate_vanishes_on_pinned_correlated_state():
    # reduced state I/2 commutes with everything, so the rate is zero for
    # any probe even though the state is correlated
    h1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
    assert abs(big_brother_rate(bb_correlated_state(), (2, 2), h1)) < 1e-14


def test_rate_nonzero_on_generic_mixed_state():
    rng = np.random.default_rng(5)
    rho = rand_mixed(rng, 4)
    h1 = rand_herm(rng, 2)
    assert abs(big_brother_rate(rho, (2, 2), h1)) > 1e-3


def test_rate_validation():
    rng = np.random.default_rng(18)
    rho = rand_mixed(rng, 4)
    with pytest.raises(NonHermitianInput):
        big_brother_rate(rho, (2, 2), np.array([[0, 1], [0, 0]], dtype=complex))
    with pytest.raises(DimensionMismatch):
        big_brother_rate(rho, (2, 3), rand_herm(rng, 2))
    with pytest.raises(DimensionMismatch):
        big_brother_rate(rho, (2, 2), rand_herm(rng, 3))


# -- named states ----------------------------------------------------------------

def test_singlet_structure():
    s = singlet_state()
    assert abs(s.trace() - 1.0) < 1e-14
    for k in (1, 2):
        red = partial_trace(s.entries, (2, 2), k)
        assert np.max(np.abs(red - np.eye(2) / 2.0)) < 1e-14


def test_bb_state_structure():
    r = bb_correlated_state()
    assert abs(r.trace() - 1.0) < 1e-14
    assert np.min(np.linalg.eigvalsh(r.entries)) > -1e-14
    red1 = partial_trace(r.entries, (2, 2), 1)
    red2 = partial_trace(r.entries, (2, 2), 2)
    assert np.max(np.abs(red1 - np.eye(2) / 2.0)) < 1e-14
    assert np.max(np.abs(red2 - np.diag([0.6, 0.4]))) < 1e-14


# -- basis dependence of the two extension schemes --------------------------------

def nl_rhs(h):
    spec = quantized_nambu_spec(
        [Generator.linear(h)], [Generator.casimir(3, 1.0 / 3.0)]
    )
    return lambda arr: eom_rhs_array(spec, arr)


def lin_rhs(h):
    spec = quantized_nambu_spec([Generator.linear(h)], [Generator.casimir(2, 0.5)])
    return lambda arr: eom_rhs_array(spec, arr)


def test_gisin_extension_depends_on_ancilla_basis():
    rng = np.random.default_rng(19)
    h = rand_herm(rng, 2)
    rho = rand_mixed(rng, 4)
    u = random_unitary(rng, 2)
    a = gisin_extension(nl_rhs(h), rho, (2, 2), np.eye(2), t=0.1)
    b = gisin_extension(nl_rhs(h), rho, (2, 2), u, t=0.1)
    gap = float(np.linalg.norm(a.entries - b.entries))
    assert gap > 1e-3


def test_gisin_extension_linear_case_is_basis_independent():
    rng = np.random.default_rng(20)
    h = rand_herm(rng, 2)
    rho = rand_mixed(rng, 4)
    u = random_unitary(rng, 2)
    a = gisin_extension(lin_rhs(h), rho, (2, 2), np.eye(2), t=0.1)
    b = gisin_extension(lin_rhs(h), rho, (2, 2), u, t=0.1)
    assert float(np.linalg.norm(a.entries - b.entries)) < 1e-10


def test_lie_poisson_extension_is_basis_independent():
    rng = np.random.default_rng(21)
    h = rand_herm(rng, 2)
    rho = rand_mixed(rng, 4)
    u = random_unitary(rng, 2)
    hmap = density_feedback(h)
    a = lie_poisson_extension(hmap, rho, (2, 2), np.eye(2), t=0.1)
    b = lie_poisson_extension(hmap, rho, (2, 2), u, t=0.1)
    assert float(np.linalg.norm(a.entries - b.entries)) < 1e-10


def test_extensions_validate_inputs():
    rng = np.random.default_rng(22)
    h = rand_herm(rng, 2)
    rho = rand_mixed(rng, 4)
    not_unitary = np.array([[1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(UnsupportedCombination):
        gisin_extension(nl_rhs(h), rho, (2, 2), not_unitary, t=0.05)
    with pytest.raises(DimensionMismatch):
        gisin_extension(nl_rhs(h), rho, (2, 2), np.eye(3), t=0.05)
    with pytest.raises(DimensionMismatch):
        gisin_extension(nl_rhs(h), rand_mixed(rng, 6), (2, 2), np.eye(2), t=0.05)
