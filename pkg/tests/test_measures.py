import numpy as np
import pytest
from scipy.linalg import expm
from scipy.optimize import minimize

from qcfsim.errors import PreconditionError
from qcfsim.measures import (
    PHI_PLUS,
    fidelity,
    jozsa_overlap_sq,
    negativity,
    phi_state,
    singlet_fraction,
    support_contained,
    uhlmann_align,
)
from qcfsim.qlinalg import RegisterLayout, apply_operator, dm, ket

from randutil import random_density, random_state

AB = RegisterLayout.qubits("A", "B")


def test_fidelity_examples():
    rho = random_density(np.random.default_rng(0), 3)
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-12)
    assert fidelity(dm(ket(0, 2)), dm(ket(1, 2))) == pytest.approx(0.0, abs=1e-15)
    assert fidelity(dm(ket(0, 2)), np.eye(2) / 2) == pytest.approx(0.5, abs=1e-12)


def test_fidelity_requires_unit_trace():
    with pytest.raises(PreconditionError):
        fidelity(0.5 * dm(ket(0, 2)), dm(ket(0, 2)))


def test_fidelity_of_commuting_states_is_classical():
    p, q = np.array([0.2, 0.3, 0.5]), np.array([0.6, 0.1, 0.3])
    assert fidelity(np.diag(p), np.diag(q)) == pytest.approx(np.sum(np.sqrt(p * q)) ** 2, abs=1e-12)


def test_negativity_examples():
    assert negativity(dm(phi_state(1.0)), AB, "B") == pytest.approx(0.0, abs=1e-15)
    assert negativity(dm(phi_state(0.5)), AB, "B") == pytest.approx(1.0, abs=1e-12)
    assert negativity(dm(PHI_PLUS), AB, "A") == pytest.approx(1.0, abs=1e-12)
    assert negativity(dm(phi_state(0.75)), AB, "B") == pytest.approx(np.sqrt(3) / 2, abs=1e-12)


def test_negativity_is_scale_covariant():
    rho = dm(phi_state(0.8))
    assert negativity(0.3 * rho, AB, "B") == pytest.approx(0.3 * negativity(rho, AB, "B"), abs=1e-14)


def test_singlet_fraction_examples():
    assert singlet_fraction(dm(PHI_PLUS)) == pytest.approx(1.0)
    assert singlet_fraction(dm(ket("01"))) == pytest.approx(0.0)
    for a in (0.5, 0.6, 0.9, 1.0):
        assert singlet_fraction(dm(phi_state(a))) == pytest.approx(0.5 + np.sqrt(a * (1 - a)), abs=1e-12)


def test_support_contained_examples():
    rho = random_density(np.random.default_rng(1), 4, rank=2)
    cert = support_contained(rho, rho)
    assert cert.contained and cert.max_leakage == pytest.approx(0, abs=1e-12)
    cert = support_contained(dm(ket(1, 2)), dm(ket(0, 2)))
    assert not cert.contained and cert.max_leakage == pytest.approx(1.0)
    cert = support_contained(np.eye(2) / 2, dm(ket(0, 2)))
    assert not cert.contained and cert.max_leakage == pytest.approx(0.5)


LAY = RegisterLayout.qubits("a1", "a2", "r1", "r2")
ACTOR = ["a1", "a2"]


def test_uhlmann_identical_vectors():
    psi = random_state(np.random.default_rng(2), 16) * 0.8
    v, ov = uhlmann_align(psi, psi, LAY, ACTOR)
    assert ov == pytest.approx(0.8**4, abs=1e-12)
    aligned = apply_operator(psi, LAY, ACTOR, v)
    assert abs(np.vdot(psi, aligned)) ** 2 == pytest.approx(ov, abs=1e-12)


def test_uhlmann_orthogonal_marginals():
    t = np.kron(random_state(np.random.default_rng(3), 4), ket(0, 4))
    s = np.kron(random_state(np.random.default_rng(4), 4), ket(3, 4))
    _, ov = uhlmann_align(t, s, LAY, ACTOR)
    assert ov == pytest.approx(0.0, abs=1e-15)


def test_uhlmann_zero_vector_rejected():
    with pytest.raises(PreconditionError):
        uhlmann_align(np.zeros(16), ket(0, 16), LAY, ACTOR)


def _brute_force_overlap_sq(t, s, rng, restarts=6):
    """Maximize |<t| (U (x) I) |s>|^2 over U(4) by direct optimization."""
    basis = []
    for i in range(4):
        for j in range(4):
            e = np.zeros((4, 4), dtype=complex)
            if i == j:
                e[i, i] = 1
            elif i < j:
                e[i, j] = e[j, i] = 1
            else:
                e[i, j], e[j, i] = 1j, -1j
            basis.append(e)
    basis = np.array(basis)
    tm, sm = t.reshape(4, 4), s.reshape(4, 4)

    def neg(theta):
        u = expm(1j * np.tensordot(theta, basis, 1))
        return -abs(np.sum(tm.conj() * (u @ sm))) ** 2

    best = 0.0
    for _ in range(restarts):
        res = minimize(neg, rng.uniform(-np.pi, np.pi, 16), method="BFGS")
        best = max(best, -res.fun)
    return best


def test_uhlmann_matches_brute_force_search():
    rng = np.random.default_rng(5)
    for _ in range(4):
        t, s = random_state(rng, 16), random_state(rng, 16)
        v, ov = uhlmann_align(t, s, LAY, ACTOR)
        assert ov == pytest.approx(_brute_force_overlap_sq(t, s, rng), abs=1e-4)
        aligned = apply_operator(s, LAY, ACTOR, v)
        inner = np.vdot(t, aligned)
        assert abs(inner.imag) < 1e-12 and inner.real >= 0
        assert inner.real**2 == pytest.approx(ov, abs=1e-12)


def test_uhlmann_matches_jozsa_value_random():
    rng = np.random.default_rng(6)
    for _ in range(20):
        t, s = 0.9 * random_state(rng, 16), 0.5 * random_state(rng, 16)
        _, ov = uhlmann_align(t, s, LAY, ACTOR)
        assert ov == pytest.approx(jozsa_overlap_sq(t, s, LAY, ACTOR), abs=1e-8)
