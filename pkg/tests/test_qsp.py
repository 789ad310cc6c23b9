import math

import numpy as np
import pytest

from pae import (DomainError, SynthesisError, build_branch_unitary,
                 complete_target, ideal_branch_unitary, load_angles,
                 make_instance, realized_functions, save_angles, select_L,
                 select_L_empirical, sequential_error_budget, solve_angles,
                 state_error_bound, synthesize_shifter, truncate_target,
                 truncation_error_bound)
from pae.qsp import chebyshev_grid


def bessel_j_series(order, x, terms=40):
    """Independent Bessel evaluation: sum (-1)^m (x/2)^(2m+order) / (m! (m+order)!)."""
    total = 0.0
    for m in range(terms):
        total += ((-1) ** m * (x / 2.0) ** (2 * m + order)
                  / (math.factorial(m) * math.factorial(m + order)))
    return total


class TestTruncateTarget:
    def test_tiny_strength(self):
        t = truncate_target(1e-14, 6)
        assert t.cos_coeffs[0] == pytest.approx(1.0, abs=1e-14)
        assert np.max(np.abs(t.cos_coeffs[1:])) <= 1e-13
        assert np.max(np.abs(t.sin_coeffs)) <= 1e-13

    def test_delta_bound_value(self):
        # 4 * 1 / (2^6 * 6!) for T=1, L=10
        t = truncate_target(1.0, 10)
        assert t.delta == pytest.approx(4.0 / 46080.0, rel=1e-14)
        assert t.delta == pytest.approx(8.680555555555556e-05, rel=1e-12)

    def test_leading_coefficient_is_j0(self):
        t = truncate_target(1.0, 10)
        assert t.cos_coeffs[0] == pytest.approx(bessel_j_series(0, 1.0), abs=1e-14)
        assert t.cos_coeffs[0] == pytest.approx(0.7651976865579666, abs=1e-13)

    def test_coefficients_against_series(self):
        t = truncate_target(2.0, 14)
        for l in range(1, 8):
            ref = 2.0 * bessel_j_series(l, 2.0)
            if l % 2 == 0:
                assert t.cos_coeffs[l] == pytest.approx(ref, abs=1e-13)
            else:
                assert t.sin_coeffs[l] == pytest.approx(ref, abs=1e-13)

    def test_odd_length_rejected(self):
        with pytest.raises(DomainError):
            truncate_target(1.0, 9)


def eval_pair(a, c, thetas):
    ls = np.arange(len(a))
    return np.cos(np.outer(thetas, ls)) @ a, np.sin(np.outer(thetas, ls)) @ c


class TestCompleteTarget:
    def test_near_zero_strength_unchanged(self):
        a, c = complete_target(truncate_target(1e-15, 4))
        assert a[0] == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(a[1:])) <= 1e-12
        assert np.max(np.abs(c)) <= 1e-12

    @pytest.mark.parametrize("T,L", [(1, 10), (2, 14), (4, 22), (8, 34)])
    def test_within_8delta_of_exponential(self, T, L):
        target = truncate_target(T, L)
        a, c = complete_target(target)
        thetas = chebyshev_grid(4096)
        A, C = eval_pair(a, c, thetas)
        dev = np.max(np.abs(A + 1j * C - np.exp(-1j * T * np.sin(thetas))))
        assert dev <= 8 * target.delta

    @pytest.mark.parametrize("T,L", [(1, 10), (4, 22), (1, 20)])
    def test_feasibility(self, T, L):
        a, c = complete_target(truncate_target(T, L))
        thetas = chebyshev_grid(4096)
        A, C = eval_pair(a, c, thetas)
        assert np.sum(a) == pytest.approx(1.0, abs=1e-14)     # A(0) = 1
        assert float(np.max(A * A + C * C)) - 1.0 <= 1e-12    # margin >= 0

    def test_parity_structure(self):
        a, c = complete_target(truncate_target(2.0, 14))
        assert np.max(np.abs(a[1::2])) == 0.0   # cosine part even harmonics only
        assert np.max(np.abs(c[0::2])) == 0.0   # sine part odd harmonics only


class TestSolveAngles:
    def test_identity_target_both_methods(self):
        a = np.array([1.0, 0.0])
        c = np.array([0.0, 0.0])
        thetas = chebyshev_grid(512)
        for method in ("layer_peel", "optimize"):
            seq = solve_angles(a, c, 2, method=method)
            A, C = realized_functions(seq.xi, thetas)
            assert np.max(np.hypot(A - 1.0, C)) <= 1e-10
            assert seq.residual <= 1e-10
            assert len(seq) == 2

    def test_cross_method_agreement(self):
        # both solvers must realize the same (A, C) even though the angle
        # sequences themselves may differ
        target = truncate_target(1.0, 10)
        a, c = complete_target(target)
        thetas = chebyshev_grid(1024)
        peel = solve_angles(a, c, 10, method="layer_peel")
        opt = solve_angles(a, c, 10, method="optimize")
        assert peel.residual <= 1e-8
        assert opt.residual <= 1e-8
        Ap, Cp = realized_functions(peel.xi, thetas)
        Ao, Co = realized_functions(opt.xi, thetas)
        assert np.max(np.hypot(Ap - Ao, Cp - Co)) <= 1e-7

    @pytest.mark.parametrize("T,L", [(2, 14), (4, 22), (8, 34)])
    def test_layer_peel_residual(self, T, L):
        a, c = complete_target(truncate_target(T, L))
        seq = solve_angles(a, c, L, method="layer_peel")
        assert seq.residual <= 1e-8

    def test_realized_functions_normalized(self):
        # A^2 + B^2 + C^2 + D^2 = 1 on the grid
        seq = synthesize_shifter(2.0, 14).angles
        thetas = chebyshev_grid(2048)
        A, B, C, D = realized_functions(seq.xi, thetas, full=True)
        assert np.max(np.abs(A ** 2 + B ** 2 + C ** 2 + D ** 2 - 1.0)) <= 1e-9

    def test_achievability_invariants(self):
        seq = synthesize_shifter(1.0, 12).angles
        thetas = chebyshev_grid(2048)
        A, C = realized_functions(seq.xi, thetas)
        assert len(seq.xi) % 2 == 0
        assert np.max(A * A + C * C) <= 1.0 + 1e-9
        A0, C0 = realized_functions(seq.xi, np.array([0.0]))
        assert A0[0] == pytest.approx(1.0, abs=1e-12)
        assert abs(C0[0]) <= 1e-12

    def test_unknown_method(self):
        with pytest.raises(DomainError):
            solve_angles(np.array([1.0]), np.array([0.0]), 2, method="magic")


class TestBranchUnitary:
    def test_identity_angles(self):
        spec = synthesize_shifter(1e-15, 2)
        v = build_branch_unitary(spec, 0.7)
        assert np.max(np.abs(v - np.eye(4))) <= 1e-10

    def test_phi_zero_fixed_point(self):
        spec = synthesize_shifter(1.0, 10)
        inst = make_instance(0.5)        # phi = 0
        v = build_branch_unitary(spec, inst.theta)
        # the ideal shifter is the identity here; both tracked inputs stay put
        for col in (0, 2):
            assert np.linalg.norm((v - np.eye(4))[:, col]) <= spec.eps_oc

    def test_acquired_phase_at_a0(self):
        spec = synthesize_shifter(1.0, 10)
        inst = make_instance(0.0)        # phi = 2, ideal phase e^{-i}
        v = build_branch_unitary(spec, inst.theta)
        ideal = ideal_branch_unitary(1.0, inst.phi)
        assert np.linalg.norm((v - ideal)[:, 0]) <= spec.eps_oc
        assert v[0, 0] == pytest.approx(np.exp(-1j), abs=spec.eps_oc)

    def test_unitarity_random_triples(self):
        rng = np.random.default_rng(99)
        worst = 0.0
        for _ in range(16):
            T = float(rng.uniform(0.3, 4.0))
            L = int(2 * rng.integers(4, 12))
            spec = synthesize_shifter(T, L)
            for theta in rng.uniform(0.0, np.pi / 2, 4):
                v = build_branch_unitary(spec, float(theta))
                worst = max(worst, float(np.max(np.abs(v.conj().T @ v - np.eye(4)))))
        assert worst <= 1e-10

    @pytest.mark.parametrize("T", [1.0, 2.0, 4.0])
    def test_certified_state_error(self, T):
        # measured error over the amplitude grid within 17*sqrt(delta)
        L = select_L_empirical(T)
        spec = synthesize_shifter(T, L)
        delta = truncation_error_bound(T, L)
        worst = 0.0
        for a in np.linspace(0.0, 1.0, 101):
            inst = make_instance(float(a))
            v = spec.branch_unitary(inst.theta)
            ideal = ideal_branch_unitary(T, inst.phi)
            for col in (0, 2):   # |j>_b (x) |0..0>_plane inputs
                worst = max(worst, float(np.linalg.norm((v - ideal)[:, col])))
        assert worst <= 17.0 * math.sqrt(delta)
        assert worst <= spec.eps_oc

    def test_query_length_is_angle_count(self):
        # one oracle pair per angle: the accounted cost of one application
        for T, L in [(1.0, 10), (2.0, 14)]:
            spec = synthesize_shifter(T, L)
            assert len(spec.angles) == spec.L == L


class TestResourceSelectors:
    def test_select_l_constant_term(self):
        assert select_L(1e-15, 1.0 - 1e-12) == 10

    def test_select_l_values(self):
        assert select_L(1.0, 0.01) == 36     # e^2 + 4 ln(100) + 10 = 35.81
        assert select_L(10.0, 0.05) == 96    # 73.89 + 11.98 + 10 = 95.87

    def test_select_l_domain(self):
        with pytest.raises(DomainError):
            select_L(1.0, 0.0)
        with pytest.raises(DomainError):
            select_L(1.0, 1.5)

    def test_empirical_table(self):
        assert [select_L_empirical(t) for t in (1, 2, 4, 8)] == [10, 14, 22, 34]

    def test_empirical_fit_regime(self):
        assert select_L_empirical(16.0) == 58    # 2*ceil((2.72*16+13.64)/2)

    def test_empirical_tiny_strength(self):
        assert select_L_empirical(1e-6) == 2

    def test_sequential_budget_linear(self):
        assert sequential_error_budget(0.03, 1) == 0.03
        assert sequential_error_budget(0.01, 4) == pytest.approx(0.04)

    def test_sequential_budget_measured(self):
        # ||V^3 - Videal^3|| on the tracked inputs <= 3x the single-step error
        spec = synthesize_shifter(1.0, 10)
        inst = make_instance(0.3)
        v = spec.branch_unitary(inst.theta)
        ideal = ideal_branch_unitary(1.0, inst.phi)
        single = max(np.linalg.norm((v - ideal)[:, col]) for col in (0, 2))
        v3 = np.linalg.matrix_power(v, 3)
        i3 = np.linalg.matrix_power(ideal, 3)
        triple = max(np.linalg.norm((v3 - i3)[:, col]) for col in (0, 2))
        assert triple <= 3.0 * single + 1e-12


class TestSerialization:
    def test_roundtrip_bit_exact(self, tmp_path):
        spec = synthesize_shifter(2.0, 14)
        path = tmp_path / "angles.txt"
        save_angles(path, spec)
        loaded = load_angles(path)
        assert loaded.T == spec.T and loaded.L == spec.L
        assert loaded.angles.convention == "Wz"
        assert loaded.angles.residual == spec.angles.residual
        assert np.array_equal(loaded.angles.xi, spec.angles.xi)

    def test_header_format(self, tmp_path):
        spec = synthesize_shifter(1.0, 10)
        path = tmp_path / "angles.txt"
        save_angles(path, spec)
        lines = path.read_text().splitlines()
        head = lines[0].split()
        assert len(head) == 4 and head[1] == "10" and head[2] == "Wz"
        assert len(lines) == 1 + 10


def test_state_error_bound_below_17_sqrt():
    for delta in (1e-8, 1e-5, 1e-3):
        assert state_error_bound(delta) <= 17.0 * math.sqrt(delta)


def test_completion_failure_is_reported():
    # an L=2 target with material strength is not achievable: the constant
    # cosine part cannot reach A(0)=1 while A^2+C^2 <= 1 holds
    with pytest.raises(SynthesisError):
        complete_target(truncate_target(0.5, 2))
