import math

import numpy as np
import pytest

from diracflow import dirac1d
from diracflow.dirac1d import (
    GridSpec,
    assemble,
    bound_constants,
    doubled,
    fredholm_bounds,
    index_report,
    kernel_oracle_diagonal,
    kernel_vectors,
    lambda_sweep,
    make_cutoff,
    perturbation_invariance,
)
from diracflow.errors import (
    CutoffTooSmall,
    HypothesisUnmet,
    InvalidInput,
    NotDiagonalizable,
    NotInvertible,
)
from diracflow.scenarios import engineered_threshold_path, flat_tail_path
from diracflow.specflow import (
    PotentialPath,
    constant_path,
    conjugated_path,
    diagonal_path,
    tanh_path,
)

GRID = GridSpec(8.0, 320)  # h = 0.05


def neg_tanh_path():
    return diagonal_path([lambda t: -math.tanh(t)], (-10, 10), 161,
                         support=((-1.5, 1.5),), name="neg-tanh")


def pair_path():
    return diagonal_path([math.tanh, lambda t: -math.tanh(t)], (-10, 10), 161,
                         support=((-1.5, 1.5),), name="diag-pair")


class TestGridSpec:
    def test_spacing(self):
        g = GridSpec(8.0, 320)
        assert g.h == pytest.approx(0.05)
        assert g.nodes().size == 321
        assert g.midpoints().size == 320

    def test_auto_obeys_decay_rule(self):
        p = tanh_path()
        g = GridSpec.auto(p, decay=1e-8)
        c = p.min_gap_outside()
        b = max(abs(x) for x in p.hull())
        assert math.exp(-c * (g.length - b)) <= 1e-8 * (1 + 1e-9)

    def test_auto_needs_invertible_outside(self):
        p = PotentialPath(1, np.linspace(-1, 1, 9),
                          lambda t: np.array([[t]]), support=((-1, 1),))
        with pytest.raises(NotInvertible):
            GridSpec.auto(p)


class TestAssembly:
    def test_dirichlet_shape_bookkeeping(self):
        p = constant_path(np.array([[1.0]]), (-2, 2))
        op = assemble(p, GridSpec(2.0, 4), "dirichlet")
        assert op.matrix.shape == (3, 3)

    def test_aps_dimension_difference_tanh(self):
        op = assemble(tanh_path(), GRID, "aps")
        assert op.shape == (320, 321)
        assert op.structural_index == 1

    def test_aps_dimension_difference_pair(self):
        op = assemble(pair_path(), GRID, "aps")
        assert op.structural_index == 0

    def test_aps_requires_invertible_endpoints(self):
        p = PotentialPath(1, np.linspace(-1, 1, 9), lambda t: np.array([[t]]))
        with pytest.raises(NotInvertible):
            assemble(p, GridSpec(1.0, 16), "aps")

    def test_adjoint_is_reverse_negated_assembly(self):
        # D* equals the assembly of t -> -S(-t) up to index reversal
        p = flat_tail_path(3, 2)
        grid = GridSpec(6.0, 48)
        op = assemble(p, grid, "aps", 1.3)
        rev = PotentialPath(p.k, -p.grid[::-1], lambda t: -p.sample(-t),
                            support=tuple(sorted((-b, -a) for a, b in p.support)))
        op2 = assemble(rev, grid, "aps", 1.3)
        k, n = p.k, grid.n_cells
        row_rev = np.arange(n * k).reshape(n, k)[::-1].reshape(-1)
        # column blocks: boundary coefficient blocks swap ends
        kl = op.left_basis.shape[1]
        kr = op.right_basis.shape[1]
        interior = np.arange((n - 1) * k).reshape(n - 1, k)[::-1].reshape(-1)
        col_rev = np.concatenate([
            kl + (n - 1) * k + np.arange(kr), kl + interior, np.arange(kl)])
        reconstructed = op2.matrix[np.ix_(row_rev, col_rev)]
        s1 = np.linalg.svd(op.matrix, compute_uv=False)
        s2 = np.linalg.svd(op.matrix.conj().T, compute_uv=False)
        assert np.allclose(s1, s2, atol=1e-12)
        # the adjoint columns may differ by the eigenbasis phase convention
        # inside the boundary blocks, so compare singular values exactly
        s3 = np.linalg.svd(reconstructed, compute_uv=False)
        assert np.allclose(s1, s3, atol=1e-10)


class TestIndexReport:
    def test_tanh(self):
        rep = index_report(assemble(tanh_path(), GRID, "aps"))
        assert (rep.index, rep.dim_ker, rep.dim_coker) == (1, 1, 0)
        assert rep.structural_agrees and rep.refined_agrees

    def test_neg_tanh(self):
        rep = index_report(assemble(neg_tanh_path(), GRID, "aps"))
        assert (rep.index, rep.dim_ker, rep.dim_coker) == (-1, 0, 1)

    def test_constant_invertible(self):
        p = constant_path(np.array([[1.0]]), (-8, 8))
        rep = index_report(assemble(p, GRID, "aps"))
        assert (rep.index, rep.dim_ker, rep.dim_coker) == (0, 0, 0)

    def test_kernel_vector_matches_sech(self):
        op = assemble(tanh_path(), GRID, "aps")
        vec = kernel_vectors(op)[0]
        nodes = GRID.nodes()
        exact = 1.0 / np.cosh(nodes)
        exact /= np.linalg.norm(exact)
        vec = vec / np.linalg.norm(vec)
        phase = np.vdot(vec, exact)
        vec = vec * (phase / abs(phase))
        err = np.linalg.norm(vec - exact) / np.linalg.norm(exact)
        assert err <= 1e-3

    def test_kernel_error_halves_with_h(self):
        errs = []
        for grid in (GridSpec(8.0, 160), GridSpec(8.0, 320), GridSpec(8.0, 640)):
            op = assemble(tanh_path(), grid, "aps")
            vec = kernel_vectors(op)[0]
            nodes = grid.nodes()
            exact = 1.0 / np.cosh(nodes)
            exact /= np.linalg.norm(exact)
            vec = vec / np.linalg.norm(vec)
            phase = np.vdot(vec, exact)
            vec = vec * (phase / abs(phase))
            errs.append(np.linalg.norm(vec - exact))
        for a, b in zip(errs, errs[1:]):
            assert b <= 1.5 * 0.5 * a  # at least halves, within factor 3

    def test_unitary_conjugation_invariance(self):
        p = pair_path()

        def unitary(t):
            c, s = np.cos(0.3 * t), np.sin(0.3 * t)
            return np.array([[c, -s], [s, c]], dtype=complex)

        rep1 = index_report(assemble(p, GridSpec(8.0, 160), "aps"),
                            refine_check=False)
        rep2 = index_report(assemble(conjugated_path(p, unitary),
                                     GridSpec(8.0, 160), "aps"),
                            refine_check=False)
        assert rep1.index == rep2.index == 0


class TestDiagonalOracle:
    def test_tanh(self):
        o = kernel_oracle_diagonal(tanh_path())
        assert (o.dim_ker, o.dim_coker, o.index) == (1, 0, 1)

    def test_double_tanh(self):
        p = diagonal_path([math.tanh, math.tanh], (-10, 10), 81,
                          support=((-1.5, 1.5),))
        o = kernel_oracle_diagonal(p)
        assert (o.dim_ker, o.dim_coker, o.index) == (2, 0, 2)

    def test_always_positive(self):
        p = diagonal_path([lambda t: 1 + t * t], (-3, 3), 41)
        o = kernel_oracle_diagonal(p)
        assert (o.dim_ker, o.dim_coker, o.index) == (0, 0, 0)

    def test_non_commuting_rejected(self):
        def sampler(t):
            c, s = np.cos(t), np.sin(t)
            u = np.array([[c, -s], [s, c]])
            return u @ np.diag([1.0, -1.0]) @ u.T

        p = PotentialPath(2, np.linspace(0, 1, 9), sampler)
        with pytest.raises(NotDiagonalizable):
            kernel_oracle_diagonal(p)


class TestDoubled:
    def test_requires_dirichlet(self):
        with pytest.raises(InvalidInput):
            doubled(assemble(tanh_path(), GridSpec(8.0, 64), "aps"))

    def test_exact_anticommutation(self):
        op = assemble(tanh_path(), GridSpec(8.0, 64), "dirichlet")
        dbl = doubled(op)
        assert dbl.anticommutator_norm() == 0.0

    def test_constant_gap(self):
        p = constant_path(np.array([[1.0]]), (-8, 8))
        dbl = doubled(assemble(p, GridSpec(8.0, 200), "dirichlet"))
        ev = dbl.eigenvalues()
        assert np.abs(ev).min() >= 0.9

    def test_spectral_symmetry(self):
        op = assemble(flat_tail_path(1, 2), GridSpec(6.0, 48), "dirichlet", 1.2)
        ev = np.sort(doubled(op).eigenvalues())
        assert np.abs(ev + ev[::-1]).max() <= 1e-10

    def test_near_zero_mode_decays_with_length(self):
        smallest = []
        for length in (4.0, 6.0, 8.0):
            n = int(40 * length)
            dbl = doubled(assemble(tanh_path(), GridSpec(length, n), "dirichlet"))
            smallest.append(np.abs(dbl.eigenvalues()).min())
        assert smallest[2] < smallest[1] < smallest[0]

    def test_dirichlet_small_singular_values_count_kernel_plus_cokernel(self):
        fine = GridSpec(8.0, 1000)
        for path, expected in ((tanh_path(), 1), (neg_tanh_path(), 1),
                               (pair_path(), 2)):
            op = assemble(path, fine, "dirichlet")
            s = np.linalg.svd(op.matrix, compute_uv=False)
            assert int(np.sum(s < 1e-4)) == expected


class TestFredholmBounds:
    def test_threshold_formula_at_unit_gap(self):
        path, k_hat = engineered_threshold_path(alpha=0.4)
        rep = fredholm_bounds(path, 1.0, k_hat=k_hat)
        assert rep.c_hat == pytest.approx(1.0, abs=1e-12)
        assert rep.delta_hat == pytest.approx(0.4, abs=1e-3)
        threshold = rep.c_hat ** 2 / (rep.c_hat + 1.0)
        assert threshold == pytest.approx(0.5, abs=1e-12)
        assert rep.second_statement
        assert rep.passed
        # the positivity threshold on the coupling stays below 1
        assert rep.lambda0 < 1.0
        assert rep.epsilon == pytest.approx(
            0.5 * (rep.c_hat ** 2 - rep.delta_hat ** 2 * (1 + 1 / rep.c_hat) ** 2))

    def test_constant_invertible_without_cutoff(self):
        p = constant_path(np.diag([1.5, -2.0]), (-4, 4))
        rep = fredholm_bounds(p, 1.0, f=lambda t: 0.0,
                              grid=GridSpec(4.0, 120), k_hat=None)
        gap = 1.5
        assert rep.min_eig >= (1 - rep.disc_slack) * gap ** 2

    def test_tanh_with_strong_coupling(self):
        rep = fredholm_bounds(tanh_path(), 3.0, grid=GridSpec(8.0, 200))
        assert rep.passed
        assert rep.min_eig >= 0.8 * rep.epsilon

    def test_cutoff_too_small(self):
        p = tanh_path()
        with pytest.raises(CutoffTooSmall):
            fredholm_bounds(p, 3.0, f=lambda t: 0.1,
                            grid=GridSpec(8.0, 100))

    def test_coupling_below_threshold(self):
        path, k_hat = engineered_threshold_path(alpha=0.4)
        with pytest.raises(HypothesisUnmet):
            fredholm_bounds(path, 0.1, k_hat=k_hat)

    def test_bound_constants_zero_derivative_outside(self):
        p = flat_tail_path(2, 2)
        c, dh, dk, lam0 = bound_constants(p)
        assert dh <= 0.05  # constant plateaus: derivative vanishes outside K
        assert c >= 0.9
        assert lam0 <= 0.2


class TestSweepAndPerturbation:
    def test_tanh_sweep(self):
        rep = lambda_sweep(tanh_path(), [1.0, 2.0, 5.0, 10.0],
                           GridSpec(8.0, 200))
        assert rep.passed and rep.indices[0] == 1

    def test_constant_sweep(self):
        p = constant_path(np.array([[1.0]]), (-8, 8))
        rep = lambda_sweep(p, [1.0, 10.0], GridSpec(8.0, 160))
        assert rep.passed and rep.indices[0] == 0

    def test_zero_perturbation(self):
        p = tanh_path()
        rep = perturbation_invariance(p, p, 1.0, GridSpec(8.0, 160))
        assert rep.passed

    def test_interior_bump(self):
        from diracflow.scenarios import bump_perturbation
        from diracflow.specflow import perturbed_path

        p = tanh_path()
        bump, r = bump_perturbation(0, p, height=0.4)
        rep = perturbation_invariance(p, perturbed_path(p, bump, r), 1.0,
                                      GridSpec(8.0, 200))
        assert rep.passed and rep.base_index == 1
