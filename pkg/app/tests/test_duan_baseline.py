import numpy as np
import pytest

from core.catalysis_emb import schmidt_rank_for
from core.duan_baseline import (
    EntropyFrontier, RegionLabel, lemma3_bound, lemma3_bound_for_entropy, pure_state_avg_fidelity,
    qutrit_region_map, shannon_entropy, simplex_grid,
)
from core.errors import DomainError, ShapeError
from core.qstates import SchmidtVector, SeededRng


def test_entropy_and_fidelity_examples():
    assert shannon_entropy([0.5, 0.5]) == pytest.approx(1.0)
    assert shannon_entropy([1.0, 0.0, 0.0]) == 0.0
    assert shannon_entropy(SchmidtVector.from_probs([1 / 3] * 3)) == pytest.approx(np.log2(3))
    assert pure_state_avg_fidelity([1.0, 0.0, 0.0], 3) == pytest.approx(0.5)
    assert pure_state_avg_fidelity([1.0], 3) == pytest.approx(0.5)
    assert pure_state_avg_fidelity([1 / 3] * 3, 3) == pytest.approx(1.0)
    assert pure_state_avg_fidelity([0.5, 0.5], 2) == pytest.approx(1.0)
    with pytest.raises(ShapeError):
        pure_state_avg_fidelity([0.25] * 4, 3)


def test_simplex_grid():
    g = simplex_grid(3, 4)
    assert g.shape == (15, 3)
    assert np.allclose(g.sum(axis=1), 1.0)
    assert len({tuple(r) for r in g}) == 15
    with pytest.raises(DomainError):
        simplex_grid(3, 0)


def test_frontier_is_monotone():
    fr = EntropyFrontier(3, 100)
    hs = np.linspace(0.0, np.log2(3), 40)
    vals = [fr.value(h) for h in hs]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    assert fr.value(0.0) == pytest.approx(0.5)
    assert fr.value(-1.0) == 0.0
    assert fr.best_point(-1.0) is None


def test_corner_and_full_entropy():
    assert lemma3_bound([1.0, 0.0, 0.0], 3) == pytest.approx(0.5)
    assert lemma3_bound([1 / 3] * 3, 3) == pytest.approx(1.0)
    assert lemma3_bound_for_entropy(np.log2(3), 3) == 1.0


def test_bound_never_below_own_fidelity():
    rng = SeededRng(5)
    fr = EntropyFrontier(3, 100)
    for _ in range(30):
        p = np.sort(rng.generator.dirichlet(np.ones(3)))[::-1]
        b = lemma3_bound(p, 3, frontier=fr)
        assert b >= pure_state_avg_fidelity(p, 3) - 1e-9
        assert b >= fr.value(shannon_entropy(p)) - 1e-12
        assert b <= 1.0


def test_qubits_gain_nothing():
    for l1 in np.linspace(0.55, 0.95, 9):
        p = [l1, 1 - l1]
        assert lemma3_bound(p, 2) == pytest.approx(pure_state_avg_fidelity(p, 2), abs=1e-9)


def test_nested_budgets_are_monotone():
    fr = EntropyFrontier(3, 100)
    hs = np.linspace(0.05, 1.5, 15)
    vals = [lemma3_bound_for_entropy(h, 3, frontier=fr) for h in hs]
    assert all(a <= b + 1e-3 for a, b in zip(vals, vals[1:]))


def test_grid_must_be_fine_enough():
    with pytest.raises(DomainError):
        lemma3_bound_for_entropy(0.5, 3, grid=50)


def test_qutrit_region_map_labels():
    pts = qutrit_region_map(50, threshold=0.9, epsilon_margin=0.01)
    assert len(pts) == len(simplex_grid(3, 50))
    corr = {p.label_correlated for p in pts}
    emb = {p.label_embezzling for p in pts}
    assert corr == {RegionLabel.ALREADY_ABOVE, RegionLabel.CORRELATED_BOOSTABLE, RegionLabel.NOT_GUARANTEED}
    assert RegionLabel.NOT_GUARANTEED not in emb

    m_required = schmidt_rank_for(3, 1 - 0.91)
    for p in pts:
        if p.probs in {(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)}:
            assert p.label_correlated == RegionLabel.NOT_GUARANTEED
        if p.label_embezzling == RegionLabel.EMBEZZLING_BOOSTABLE:
            assert p.M_required == m_required
        if p.f >= 0.9:
            assert p.label_correlated == p.label_embezzling == RegionLabel.ALREADY_ABOVE
        assert p.lemma3_bound >= p.f - 1e-9
        row = p.as_row()
        assert row["label_correlated"] == p.label_correlated.value


def test_qutrit_region_map_validates_inputs():
    with pytest.raises(DomainError):
        qutrit_region_map(20)
    with pytest.raises(DomainError):
        qutrit_region_map(50, threshold=0.995, epsilon_margin=0.01)
