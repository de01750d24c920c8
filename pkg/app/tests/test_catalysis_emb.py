import math

import numpy as np
import pytest

from core.catalysis_emb import (
    DIRECT_HARMONIC_MAX, EmbezzlingJoint, apply_rearrangement, catalyst_residual, consumption_bound_emb,
    consumption_exact, emb_catalyst_plan, embed_residual, embezzle_protocol, embezzling_joint,
    embezzling_rank, embezzling_state, exact_fidelity, harmonic_number, lemma2_bound, lemma2_chain,
    min_rank_for_consumption, omega_state, rearrangement_perm, rearrangement_unitary,
    residual_fidelity_closed_form, residual_fidelity_grouped, schmidt_rank_for, target_coefficients,
)
from core.errors import CapacityExceeded, DomainError
from core.plans import CatalystKind
from core.qmat import DensityMatrix, fidelity_with_pure
from core.qstates import SeededRng, max_entangled_density, maximally_mixed, random_density
from core.teleport import average_fidelity_formula


POWERS = [2 ** k for k in range(1, 11)]


def test_harmonic_number():
    assert harmonic_number(1) == 1.0
    assert harmonic_number(4) == pytest.approx(25 / 12, abs=1e-15)
    # los dos caminos empalman
    direct = harmonic_number(DIRECT_HARMONIC_MAX)
    asym = harmonic_number(DIRECT_HARMONIC_MAX + 1) - 1.0 / (DIRECT_HARMONIC_MAX + 1)
    assert asym == pytest.approx(direct, abs=1e-10)
    with pytest.raises(DomainError):
        harmonic_number(0)


def test_embezzling_state_is_normalized():
    for M in (1, 7, 64):
        st = embezzling_state(M)
        assert np.sum(st.amplitudes ** 2) == pytest.approx(1.0, abs=1e-12)
        v = st.to_state_vector()
        assert v.shape == (M * M,)
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DomainError):
        embezzling_state(0)


def test_omega_state_is_normalized_and_needs_room():
    for d, M in [(2, 4), (3, 10), (4, 64)]:
        om = omega_state(d, M)
        assert om.coefficients.shape == (d, M)
        assert np.sum(om.coefficients ** 2) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DomainError):
        omega_state(3, 2)


def test_rearrangement_forward_example_and_bijection():
    perm = rearrangement_perm(2, 3)
    assert perm.forward(2, 3) == (2, 3)
    assert perm.forward(1, 1) == (1, 1)
    assert perm.forward(1, 2) == (2, 1)
    for d, M in [(2, 4), (3, 9), (4, 5)]:
        flat = np.sort(rearrangement_perm(d, M).flat_targets().reshape(-1))
        assert np.array_equal(flat, np.arange(d * M))


@pytest.mark.parametrize("d,M", [(2, 4), (2, 8), (3, 9), (3, 16)])
def test_rearrangement_maps_omega_to_target(d, M):
    perm = rearrangement_perm(d, M)
    om = omega_state(d, M).coefficients
    target = target_coefficients(d, M)
    assert np.allclose(apply_rearrangement(perm, om), target, atol=1e-12)
    u = rearrangement_unitary(perm)
    assert np.allclose(u @ u.T, np.eye(d * M))
    assert np.allclose(u @ om.reshape(-1), target.reshape(-1), atol=1e-12)


@pytest.mark.parametrize("d,M", [(2, 4), (2, 8), (3, 9)])
def test_compact_joint_matches_dense_protocol(d, M):
    # |11⟩_AB ⊗ |τ^E⟩_CC′ en orden [a, b, c, c′] y U_AC ⊗ U_BC′ aplicado como U X Uᵀ
    tau = embezzling_state(M).amplitudes
    init = np.zeros((d, d, M, M))
    init[0, 0, np.arange(M), np.arange(M)] = tau
    u = rearrangement_unitary(rearrangement_perm(d, M))
    x = init.transpose(0, 2, 1, 3).reshape(d * M, d * M)
    out = (u @ x @ u.T).reshape(d, M, d, M).transpose(0, 2, 1, 3).reshape(-1)
    joint = embezzling_joint(d, M)
    assert np.allclose(joint.to_state_vector(), out, atol=1e-12)

    _, F = embezzle_protocol(maximally_mixed(d * d, split=(d, d)), M)
    full_target = EmbezzlingJoint(d, M, target_coefficients(d, M)).to_state_vector()
    assert np.vdot(full_target, out).real ** 2 == pytest.approx(F, abs=1e-12)
    assert fidelity_with_pure(joint.to_density(), full_target) == pytest.approx(F, abs=1e-12)


def test_embezzling_joint_cap():
    with pytest.raises(CapacityExceeded):
        embezzling_joint(2, 4096)


@pytest.mark.parametrize("d", [2, 3])
def test_protocol_fidelity_dominates_lemma_bound(d):
    rho = maximally_mixed(d * d, split=(d, d))
    for M in [m for m in POWERS if m >= d]:
        _, F = embezzle_protocol(rho, M)
        chain = lemma2_chain(d, M)
        assert F == pytest.approx(chain.fidelity, abs=1e-12)
        assert F == pytest.approx(exact_fidelity(d, M), abs=1e-12)
        assert F >= lemma2_bound(d, M) - 1e-12
        assert chain.holds()
        assert chain.bound == pytest.approx(lemma2_bound(d, M))


@pytest.mark.parametrize("d", [2, 3])
def test_protocol_output_ignores_the_input_state(d):
    rng = SeededRng(60 + d)
    states = [maximally_mixed(d * d, split=(d, d)), max_entangled_density(d)]
    states += [random_density(d * d, rng, split=(d, d)) for _ in range(3)]
    for M in (d, 8, 64):
        ref_joint, ref_F = embezzle_protocol(states[0], M)
        for rho in states[1:]:
            joint, F = embezzle_protocol(rho, M)
            assert (joint.d, joint.M) == (ref_joint.d, ref_joint.M)
            assert np.array_equal(joint.diag, ref_joint.diag)
            assert F == ref_F


@pytest.mark.parametrize("d", [2, 3])
def test_exact_fidelity_grows_with_rank(d):
    ms = [m for m in POWERS if m >= d]
    fs = [exact_fidelity(d, M) for M in ms]
    assert all(b >= a for a, b in zip(fs, fs[1:]))
    rho = maximally_mixed(d * d, split=(d, d))
    assert [embezzle_protocol(rho, M)[1] for M in ms] == pytest.approx(fs, abs=1e-12)


def test_lemma2_bound_examples():
    assert lemma2_bound(2, 256) == pytest.approx(0.765625, abs=1e-12)
    assert lemma2_bound(2, 2) == 0.0
    with pytest.raises(DomainError):
        lemma2_bound(3, 2)
    with pytest.raises(DomainError):
        lemma2_chain(1, 4)


def test_rank_helpers():
    assert schmidt_rank_for(2, 0.15) == 328
    assert embezzling_rank(2, 0.19) == 1024
    assert min_rank_for_consumption(2, 1.0) == 4
    ranks = [schmidt_rank_for(2, e) for e in (0.05, 0.1, 0.2, 0.3, 0.5)]
    assert all(a >= b for a, b in zip(ranks, ranks[1:]))
    with pytest.raises(DomainError):
        schmidt_rank_for(2, 0.7)
    with pytest.raises(CapacityExceeded):
        min_rank_for_consumption(2, 0.01)


def test_rank_handles_values_beyond_int64():
    M = schmidt_rank_for(2, 0.02)
    assert M > 2 ** 63
    assert 0.0 < lemma2_bound(2, M) < 1.0
    assert consumption_bound_emb(2, M) < 0.2


@pytest.mark.parametrize("d", [2, 3, 4, 5])
@pytest.mark.parametrize("epsilon", [0.1, 0.15, 0.2, 0.3, 0.4, 0.5])
def test_schmidt_rank_guarantees_target_fidelity(d, epsilon):
    M = schmidt_rank_for(d, epsilon)
    assert average_fidelity_formula(lemma2_bound(d, M), d) >= 1.0 - epsilon - 1e-9


@pytest.mark.parametrize("d", [2, 3])
def test_consumption_oracles_agree(d):
    for M in range(max(4, d), 65):
        xi, p_exact, p_closed, p_bound = catalyst_residual(d, M)
        assert abs(p_exact - p_closed) <= 1e-9
        assert p_exact == pytest.approx(consumption_exact(d, M), abs=1e-9)
        assert p_exact <= p_bound + 1e-12
        assert np.trace(xi.matrix).real == pytest.approx(1.0, abs=1e-12)
        assert residual_fidelity_closed_form(d, M) == pytest.approx(residual_fidelity_grouped(d, M), abs=1e-12)


def test_consumption_bound_examples():
    assert consumption_bound_emb(2, 4) == pytest.approx(1.0)
    assert consumption_bound_emb(3, 3) == pytest.approx(math.sqrt(2.0))
    assert consumption_exact(2, 1 << 20) <= consumption_bound_emb(2, 1 << 20)


def test_embed_residual_preserves_fidelity():
    M = 8
    xi, _, _, _ = catalyst_residual(2, M)
    full = embed_residual(xi, M)
    assert full.shape == (M * M, M * M)
    tau_full = embezzling_state(M).to_state_vector()
    big = DensityMatrix.from_array(full, check=False)
    assert fidelity_with_pure(big, tau_full) == pytest.approx(
        fidelity_with_pure(xi, embezzling_state(M).amplitudes), abs=1e-12)
    with pytest.raises(DomainError):
        embed_residual(xi, M + 1)
    with pytest.raises(CapacityExceeded):
        embed_residual(catalyst_residual(2, 128)[0], 128)


def test_emb_catalyst_plan():
    plan = emb_catalyst_plan(2, 256, lemma2_bound(2, 256))
    assert plan.kind == CatalystKind.E
    assert plan.size == 256
    assert plan.dimension_log2 == pytest.approx(16.0)
    assert plan.predicted_consumption == pytest.approx(consumption_exact(2, 256))
