import numpy as np
import pytest

from core.catalysis_cs import (
    TASK_DISTILL, TASK_TELEPORT, NminQuery, allowed_error, build_tau, catalyst_dimension_log2,
    catalyst_plan_from_spec, consumption_bound, copies_for_fidelity, cs_average_fidelity,
    cs_joint_state_exact, descent_ratio, evaluate_n, first_slot_marginal, marginal_after_cs,
    min_copies, min_p_teleport, nmin_over_p, nmin_search, plan_cs_catalyst,
)
from core.errors import CapacityExceeded, DomainError
from core.plans import CatalystKind
from core.qmat import dmax, dmax_many
from core.qstates import SeededRng, max_entangled_density, maximally_mixed, random_density, random_full_rank
from core.registry import load_fixture
from core.teleport import entanglement_fraction
from core.utils import ceil_tol


def _mixed():
    return maximally_mixed(4, split=(2, 2))


def test_copies_for_fidelity_examples():
    assert copies_for_fidelity(2, 2, 0.1) == 107
    assert copies_for_fidelity(0, 2, 0.1) == 27
    ns = [copies_for_fidelity(1.5, 2, e) for e in np.linspace(0.05, 0.5, 10)]
    assert all(a >= b for a, b in zip(ns, ns[1:]))
    assert copies_for_fidelity(5000.0, 2, 0.1, cap=1000) == 1000
    with pytest.raises(DomainError):
        copies_for_fidelity(1.0, 2, 1.0)


def test_build_tau():
    zeta = _mixed()
    assert build_tau(zeta, 0.0) is zeta
    assert entanglement_fraction(build_tau(zeta, 0.9)) == pytest.approx(0.925, abs=1e-12)
    with pytest.raises(DomainError):
        build_tau(zeta, 1.0)
    rng = SeededRng(1)
    z = random_full_rank(4, rng, split=(2, 2))
    fz = entanglement_fraction(z)
    for p in np.linspace(0.0, 0.95, 8):
        ft = entanglement_fraction(build_tau(z, p))
        assert 1.0 - ft == pytest.approx((1.0 - p) * (1.0 - fz), abs=1e-10)


def test_marginal_after_cs():
    rng = SeededRng(2)
    rho = random_density(4, rng, split=(2, 2))
    tau = build_tau(_mixed(), 0.5)
    assert np.allclose(marginal_after_cs(rho, tau, 1).matrix, rho.matrix)
    assert np.allclose(marginal_after_cs(rho, tau, 2).matrix, 0.5 * (rho.matrix + tau.matrix))
    with pytest.raises(DomainError):
        marginal_after_cs(rho, tau, 0)


def test_exact_joint_state_identical_inputs():
    tau = random_full_rank(2, SeededRng(3))
    _, P = cs_joint_state_exact(tau, tau, 3)
    assert P == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("n", [2, 3])
def test_exact_joint_state_respects_convex_split_bound(n):
    rng = SeededRng(10 + n)
    for _ in range(200):
        rho = random_density(4, rng)
        tau = random_full_rank(4, rng, min_eig=1e-3)
        k = dmax(rho, tau)
        joint, P = cs_joint_state_exact(rho, tau, n)
        assert P <= consumption_bound(k, n) + 1e-9
        marg = first_slot_marginal(joint, rho.dim, n)
        assert np.allclose(marg.matrix, marginal_after_cs(rho, tau, n).matrix, atol=1e-12)


def test_exact_joint_state_distance_does_not_grow_with_n():
    # simetrizar ω_n ⊗ τ da ω_(n+1): la distancia no puede crecer
    rng = SeededRng(14)
    for _ in range(100):
        rho = random_density(4, rng)
        tau = random_full_rank(4, rng, min_eig=1e-3)
        _, p2 = cs_joint_state_exact(rho, tau, 2)
        _, p3 = cs_joint_state_exact(rho, tau, 3)
        assert p3 <= p2 + 1e-9


def test_exact_joint_state_cap():
    rho = random_density(4, SeededRng(4))
    with pytest.raises(CapacityExceeded):
        cs_joint_state_exact(rho, rho, 4)


def test_consumption_helpers():
    assert consumption_bound(2.0, 4) == pytest.approx(1.0)
    assert min_copies(2.0, 0.5) == 16
    assert catalyst_dimension_log2(2, 3) == pytest.approx(4.0)
    assert catalyst_dimension_log2(2, 1) == 0.0
    with pytest.raises(DomainError):
        min_copies(1.0, 0.0)


@pytest.mark.parametrize("epsilon", [0.05, 0.1, 0.2])
def test_direct_plan_reaches_target_fidelity(epsilon):
    rng = SeededRng(20)
    zeta = _mixed()
    assert min_p_teleport(zeta, epsilon) == pytest.approx(1 - epsilon * 3 / (8 * 0.75))
    for _ in range(50):
        rho = random_density(4, rng, split=(2, 2))
        cat = plan_cs_catalyst(rho, zeta, epsilon)
        assert not cat.impractical
        assert cs_average_fidelity(rho, cat) >= 1.0 - epsilon - 1e-12
        plan = catalyst_plan_from_spec(cat, epsilon)
        assert plan.kind == CatalystKind.CS
        assert plan.size == cat.n
        assert plan.predicted_consumption == pytest.approx(consumption_bound(cat.k, cat.n))


def test_allowed_error():
    assert allowed_error(0.3, 2, TASK_TELEPORT) == pytest.approx(np.sqrt(0.45))
    assert allowed_error(0.3, 2, TASK_DISTILL) == pytest.approx(np.sqrt(0.3))
    with pytest.raises(DomainError):
        allowed_error(0.3, 2, "otra")


def test_nmin_over_p_beats_its_coarse_grid_and_satisfies_constraint():
    rng = SeededRng(30)
    rho = random_density(4, rng, split=(2, 2))
    zeta = random_full_rank(4, rng, split=(2, 2))
    eps = 0.1
    n_min, p_star = nmin_over_p(rho, zeta, eps, grid_points=1000)

    pt = evaluate_n(rho, zeta, eps, p_star)
    assert pt.feasible
    assert n_min >= pt.n_real * (1 - 1e-12)

    eps_p2 = allowed_error(eps, 2) ** 2
    lo = max(0.0, 1.0 - eps_p2 / (1.0 - entanglement_fraction(zeta)))
    grid = lo + (1.0 - lo) / 1000 * np.arange(1000)
    coarse = [evaluate_n(rho, zeta, eps, float(p)) for p in grid[::20]]
    assert n_min <= min(c.n for c in coarse if c.feasible)


def _dense_oracle(rho, zeta, eps, points=10_000, local=2001):
    """n(p) en una grilla densa y luego en una grilla fina alrededor del mejor punto."""
    phi = max_entangled_density(2).matrix
    one_minus_fz = 1.0 - entanglement_fraction(zeta)
    eps_p2 = allowed_error(eps, 2) ** 2
    lo = max(0.0, 1.0 - eps_p2 / one_minus_fz)

    def n_real(ps):
        taus = ps[:, None, None] * phi + (1.0 - ps)[:, None, None] * zeta.matrix
        k = dmax_many(rho, taus, strict=False)
        slack = np.sqrt(eps_p2) - np.sqrt((1.0 - ps) * one_minus_fz)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(slack > 0, np.exp2(k) / slack ** 2, np.inf)

    grid = lo + (1.0 - lo) / points * np.arange(points)
    vals = n_real(grid)
    i = int(np.argmin(vals))
    fine = np.linspace(grid[max(i - 1, 0)], min(grid[min(i + 1, points - 1)], 1.0 - 1e-12), local)
    best = min(float(vals[i]), float(np.min(n_real(fine))))
    return ceil_tol(best), vals


def test_nmin_over_p_matches_dense_grid_oracle():
    rng = SeededRng(31)
    eps = 0.1
    for _ in range(50):
        rho = random_density(4, rng, split=(2, 2))
        zeta = random_full_rank(4, rng, split=(2, 2))
        n_min, p_star = nmin_over_p(rho, zeta, eps)
        n_oracle, dense = _dense_oracle(rho, zeta, eps)
        assert abs(n_min - n_oracle) <= 1
        # la grilla gruesa es un subconjunto de la densa
        assert n_min <= ceil_tol(float(np.min(dense[::10])))
        pt = evaluate_n(rho, zeta, eps, p_star)
        assert pt.feasible
        assert n_min >= pt.n_real * (1 - 1e-12)


@pytest.mark.parametrize("epsilon", [0.8, 0.9])
def test_nmin_over_p_maximally_entangled_needs_one_copy(epsilon):
    phi = max_entangled_density(2)
    rng = SeededRng(32)
    zetas = [_mixed()] + [random_full_rank(4, rng, split=(2, 2)) for _ in range(2)]
    for zeta in zetas:
        n_min, p_star = nmin_over_p(phi, zeta, epsilon)
        assert n_min == 1
        assert 0.0 <= p_star < 1.0


def test_nmin_over_p_rejects_bad_epsilon():
    with pytest.raises(DomainError):
        nmin_over_p(_mixed(), _mixed(), 1.0)


def test_nmin_query_validates_inputs():
    rho = load_fixture("DR", 1)
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(DomainError):
            NminQuery(rho=rho, epsilon=bad, N=5, rng=SeededRng(0))
    with pytest.raises(DomainError):
        NminQuery(rho=rho, epsilon=0.1, N=0, rng=SeededRng(0))
    with pytest.raises(DomainError):
        NminQuery(rho=rho, epsilon=0.1, N=5, rng=SeededRng(0), task="otra")
    with pytest.raises(DomainError):
        NminQuery(rho=rho, epsilon=0.1, N=5, rng=SeededRng(0), threads=0)
    q = NminQuery(rho=rho, epsilon=0.1, N=0, rng=SeededRng(0), candidates=[_mixed()])
    assert q.N == 0


def test_nmin_search_degenerate_single_mixed_candidate():
    rho = load_fixture("DR", 1)
    res = nmin_search(NminQuery(rho=rho, epsilon=0.1, N=1, rng=SeededRng(0), candidates=[_mixed()]))
    assert res.n_min_N == res.n_min_mixed
    assert res.best_index == 0


def test_nmin_search_never_worse_than_mixed_and_deterministic():
    rho = load_fixture("DR", 1)
    for eps in (0.05, 0.1, 0.2):
        a = nmin_search(NminQuery(rho=rho, epsilon=eps, N=20, rng=SeededRng(7)))
        b = nmin_search(NminQuery(rho=rho, epsilon=eps, N=20, rng=SeededRng(7), threads=4))
        assert a.n_min_N <= a.n_min_mixed
        assert 0 <= a.best_index <= 20
        assert (a.n_min_N, a.n_min_mixed, a.best_index) == (b.n_min_N, b.n_min_mixed, b.best_index)
        assert a.p_star_best == b.p_star_best


def test_descent_ratio():
    assert descent_ratio(100, 80) == pytest.approx(0.2)
    assert descent_ratio(100, 100) == 0.0
    with pytest.raises(DomainError):
        descent_ratio(0, 0)
