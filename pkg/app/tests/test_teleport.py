import numpy as np
import pytest

from core.errors import DomainError, ShapeError
from core.qmat import DensityMatrix
from core.qstates import SeededRng, haar_pure, max_entangled_density, maximally_mixed, random_density
from core.registry import load_fixture
from core.teleport import (
    average_fidelity_formula, average_fidelity_mc, bell_basis, entanglement_fraction,
    teleport_channel, weyl_operators,
)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_bell_basis_is_complete_and_orthonormal(d):
    table = bell_basis(d)
    assert len(table) == d * d
    assert np.allclose(sum(table.projectors), np.eye(d * d), atol=1e-10)
    vecs = np.stack([phi.reshape(-1) for phi in table.bell_amplitudes])
    assert np.allclose(vecs.conj() @ vecs.T, np.eye(d * d), atol=1e-12)
    for u in table.corrections:
        assert np.allclose(u @ u.conj().T, np.eye(d), atol=1e-10)


def test_weyl_commutation():
    x, z = weyl_operators(3)
    w = np.exp(2j * np.pi / 3)
    assert np.allclose(z @ x, w * (x @ z))


def test_entanglement_fraction_examples():
    assert entanglement_fraction(max_entangled_density(2)) == pytest.approx(1.0)
    assert entanglement_fraction(maximally_mixed(4, split=(2, 2))) == pytest.approx(0.25)
    with pytest.raises(ShapeError):
        entanglement_fraction(maximally_mixed(4))


def test_table_one_first_state_fraction():
    F = entanglement_fraction(load_fixture("I", 1))
    assert F == pytest.approx(0.62, abs=0.01)
    assert average_fidelity_formula(F, 2) == pytest.approx(0.75, abs=0.01)


def test_average_fidelity_formula():
    assert average_fidelity_formula(0.62, 2) == pytest.approx(0.7467, abs=1e-4)
    assert average_fidelity_formula(1.0, 3) == pytest.approx(1.0)
    assert average_fidelity_formula(0.0, 2) == pytest.approx(1 / 3)
    with pytest.raises(DomainError):
        average_fidelity_formula(1.2, 2)


def test_channel_with_perfect_resource_is_identity():
    rng = SeededRng(1)
    for d in (2, 3):
        psi = haar_pure(d, rng)
        out = teleport_channel(max_entangled_density(d), psi)
        assert np.allclose(out.matrix, np.outer(psi.amplitudes, psi.amplitudes.conj()), atol=1e-10)


def test_channel_with_mixed_resource_depolarizes():
    psi = haar_pure(2, SeededRng(2))
    out = teleport_channel(maximally_mixed(4, split=(2, 2)), psi)
    assert np.allclose(out.matrix, np.eye(2) / 2, atol=1e-10)


def test_channel_is_trace_preserving_and_linear():
    rng = SeededRng(3)
    a = random_density(4, rng, split=(2, 2))
    b = random_density(4, rng, split=(2, 2))
    psi = haar_pure(2, rng)
    oa, ob = teleport_channel(a, psi), teleport_channel(b, psi)
    assert np.trace(oa.matrix).real == pytest.approx(1.0, abs=1e-10)
    mix = DensityMatrix.mixture([a, b], [0.3, 0.7])
    om = teleport_channel(mix, psi)
    assert np.allclose(om.matrix, 0.3 * oa.matrix + 0.7 * ob.matrix, atol=1e-10)


def test_channel_invariant_under_matched_weyl_twirl():
    rng = SeededRng(4)
    rho = random_density(4, rng, split=(2, 2))
    x, z = weyl_operators(2)
    u = x @ z
    v = np.kron(u, u.conj())
    twirled = DensityMatrix.from_array(v @ rho.matrix @ v.conj().T, split=(2, 2))
    assert entanglement_fraction(twirled) == pytest.approx(entanglement_fraction(rho), abs=1e-12)
    assert average_fidelity_formula(entanglement_fraction(twirled), 2) == pytest.approx(
        average_fidelity_formula(entanglement_fraction(rho), 2), abs=1e-12)
    m0, s0 = average_fidelity_mc(rho, 5000, SeededRng(40))
    m1, s1 = average_fidelity_mc(twirled, 5000, SeededRng(41))
    assert abs(m0 - m1) <= 4 * np.hypot(s0, s1)


def test_mc_perfect_resource():
    mean, stderr = average_fidelity_mc(max_entangled_density(2), 200, SeededRng(5))
    assert mean == pytest.approx(1.0, abs=1e-12)
    assert stderr == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("d", [2, 3])
def test_mc_agrees_with_formula(d):
    rng = SeededRng(6 + d)
    for i in range(20):
        rho = random_density(d * d, rng, split=(d, d))
        mean, stderr = average_fidelity_mc(rho, 10_000, rng.spawn(100 + i))
        expected = average_fidelity_formula(entanglement_fraction(rho), d)
        assert abs(mean - expected) <= 3 * stderr + 1e-12


def test_mc_is_deterministic_and_thread_independent():
    rho = random_density(4, SeededRng(7), split=(2, 2))
    a = average_fidelity_mc(rho, 3000, SeededRng(8), threads=1)
    b = average_fidelity_mc(rho, 3000, SeededRng(8), threads=3)
    assert a == b


def test_mc_requires_enough_samples():
    with pytest.raises(DomainError):
        average_fidelity_mc(max_entangled_density(2), 50, SeededRng(0))
