import math

import numpy as np
import pytest

from dispwave import CellGrid, builtin_geometry, constant_field
from dispwave.cell import (
    CompatibilityError,
    ConvergenceError,
    MissingDependencyError,
    CellProblemSet,
    assemble,
    cell_problem_rhs,
    mu_even,
    multi_binom,
    multisets_of_order,
    run_algorithm_AC,
    solve_zero_mean,
    sub_multiindices,
)
from dispwave.reference import LAMINATE_EXACT


def laminate_sawtooth(grid: CellGrid) -> np.ndarray:
    """Exact first-order cell solution for the laminate, transverse direction.

    psi' = -i (1 - ahar/a); piecewise linear, purely imaginary, zero mean.
    """
    ahar = 5.0 / 16.0
    y = grid.axis(1)
    slope_in = -(1.0 - ahar / 2.0)
    slope_out = -(1.0 - ahar / 0.2)
    c = 2.0 * math.pi / 5.0
    vals = np.where(
        np.abs(y) < c,
        slope_in * y,
        np.sign(y) * (slope_in * c + slope_out * (np.abs(y) - c)),
    )
    vals -= vals.mean()
    return 1j * np.tile(vals, (grid.shape[0], 1))


def test_multiindex_helpers():
    assert multi_binom((2, 1), (1, 1)) == 2
    assert set(sub_multiindices((2, 1), 2)) == {(1, 1), (2, 0)}
    assert set(multisets_of_order(2, 2)) == {(2, 0), (1, 1), (0, 2)}
    assert len(multisets_of_order(3, 3)) == 10


def test_operator_is_periodic_laplacian_for_identity():
    grid = CellGrid((8, 8))
    op = assemble(constant_field(1.0), grid)
    A = op.to_sparse().toarray()
    assert np.allclose(A, A.T, atol=1e-14)
    assert np.allclose(A.sum(axis=1), 0.0, atol=1e-13)
    h2 = grid.spacing[0] ** 2
    assert A[0, 0] == pytest.approx(4.0 / h2)
    # kernel contains constants
    assert np.abs(op.apply(np.ones(grid.shape))).max() == 0.0


def test_operator_symmetric_psd_matrix_free(rng):
    grid = CellGrid((24, 18))
    op = assemble(builtin_geometry("cross"), grid)
    u = rng.normal(size=grid.shape)
    v = rng.normal(size=grid.shape)
    assert np.vdot(u, op.apply(v)) == pytest.approx(np.vdot(op.apply(u), v), rel=1e-12)
    z = u - u.mean()
    assert np.vdot(z, op.apply(z)).real > 0.0


def test_cosine_eigenfunction():
    grid = CellGrid((64, 48))
    op = assemble(constant_field(1.0), grid)
    v = np.cos(grid.node_mesh()[..., 0])
    out = op.apply(v)
    assert np.abs(out - v).max() < grid.spacing[0] ** 2 / 10.0


def test_laminate_operator_row_mean():
    # applied to a function of y1 only, the 2-direction-averaged action is an
    # arithmetic-mean-weighted second difference
    grid = CellGrid((32, 40))
    lam = builtin_geometry("laminate")
    op = assemble(lam, grid)
    f = np.cos(grid.node_mesh()[..., 0])
    out = op.apply(f).mean(axis=1)
    h = grid.spacing[0]
    lam_eig = (2.0 - 2.0 * math.cos(h)) / h**2
    assert np.abs(out - 0.92 * lam_eig * np.cos(grid.axis(0))).max() < 1e-12


def test_solve_zero_rhs():
    grid = CellGrid((16, 16))
    op = assemble(constant_field(1.0), grid)
    psi, info = solve_zero_mean(op, np.zeros(grid.shape))
    assert info.converged and info.iterations == 0
    assert np.all(psi == 0.0)


def test_solve_cosine():
    grid = CellGrid((48, 32))
    op = assemble(constant_field(1.0), grid)
    rhs = np.cos(grid.node_mesh()[..., 0])
    psi, info = solve_zero_mean(op, rhs, rtol=1e-12)
    assert info.converged
    assert np.abs(psi - rhs).max() < grid.spacing[0] ** 2 / 5.0


def test_solve_laminate_sawtooth():
    grid = CellGrid((6, 200))
    lam = builtin_geometry("laminate")
    op = assemble(lam, grid)
    cpset = CellProblemSet(grid)
    rhs = cell_problem_rhs((0, 1), cpset, op)
    psi, _ = solve_zero_mean(op, rhs, rtol=1e-12)
    exact = laminate_sawtooth(grid)
    assert np.abs(psi - exact).max() < 1e-10  # nodally exact for conforming grids


def test_solve_preconditioner_agreement():
    grid = CellGrid((30, 30))
    op = assemble(builtin_geometry("cross"), grid)
    cpset = CellProblemSet(grid)
    rhs = cell_problem_rhs((1, 0), cpset, op)
    p1, _ = solve_zero_mean(op, rhs, rtol=1e-12, preconditioner="fft")
    p2, _ = solve_zero_mean(op, rhs, rtol=1e-12, preconditioner="none")
    assert np.abs(p1 - p2).max() < 1e-9


def test_solve_compatibility_error():
    grid = CellGrid((16, 16))
    op = assemble(constant_field(1.0), grid)
    rhs = np.cos(grid.node_mesh()[..., 0]) + 0.5
    with pytest.raises(CompatibilityError):
        solve_zero_mean(op, rhs)


def test_solve_nonconvergence_error():
    grid = CellGrid((32, 32))
    op = assemble(builtin_geometry("cross"), grid)
    cpset = CellProblemSet(grid)
    rhs = cell_problem_rhs((1, 0), cpset, op)
    with pytest.raises(ConvergenceError):
        solve_zero_mean(op, rhs, maxiter=1, preconditioner="none")


def test_rhs_first_order_matches_divergence():
    grid = CellGrid((40, 40))
    lam = builtin_geometry("laminate")
    op = assemble(lam, grid)
    rhs = cell_problem_rhs((0, 1), CellProblemSet(grid), op)
    # i div(a e_2) with the conservative face stencil
    a = op.faces[1]
    manual = 1j * (a - np.roll(a, 1, axis=1)) / grid.spacing[1]
    assert np.abs(rhs - manual).max() < 1e-14


def test_rhs_constant_medium_chain():
    grid = CellGrid((12, 12))
    c = 1.3
    op = assemble(constant_field(c), grid)
    cpset = CellProblemSet(grid)
    rhs1 = cell_problem_rhs((1, 0), cpset, op)
    assert np.abs(rhs1).max() == 0.0
    cpset.psi[(1, 0)] = np.zeros(grid.shape, dtype=complex)
    cpset.psi[(0, 1)] = np.zeros(grid.shape, dtype=complex)
    assert mu_even((2, 0), cpset, op) == pytest.approx(2.0 * c)
    assert mu_even((1, 1), cpset, op) == pytest.approx(0.0)
    cpset.mu[(2, 0)] = 2.0 * c
    cpset.mu[(1, 1)] = 0.0
    cpset.mu[(0, 2)] = 2.0 * c
    rhs2 = cell_problem_rhs((2, 0), cpset, op)
    assert np.abs(rhs2).max() < 1e-14


def test_rhs_missing_dependency():
    grid = CellGrid((8, 8))
    op = assemble(constant_field(1.0), grid)
    with pytest.raises(MissingDependencyError, match="psi"):
        cell_problem_rhs((2, 0), CellProblemSet(grid), op)


def test_mu_even_rejects_odd_order():
    grid = CellGrid((8, 8))
    op = assemble(constant_field(1.0), grid)
    with pytest.raises(ValueError):
        mu_even((1, 0), CellProblemSet(grid), op)


def test_mu_laminate_means():
    grid = CellGrid((240, 320))
    result = run_algorithm_AC(builtin_geometry("laminate"), grid)
    assert result.cpset.mu[(2, 0)].real == pytest.approx(2 * 0.92, abs=1e-12)
    assert result.cpset.mu[(0, 2)].real == pytest.approx(2 * 0.3125, rel=1e-10)


def test_constant_medium_tensors():
    result = run_algorithm_AC(constant_field(1.7), CellGrid((16, 16)))
    assert np.allclose(result.A, 1.7 * np.eye(2), atol=1e-13)
    assert np.abs(result.C).max() < 1e-13
    assert result.imag_residue < 1e-14


def test_laminate_exact_oracle():
    result = run_algorithm_AC(builtin_geometry("laminate"), CellGrid((120, 160)))
    assert result.A[0, 0] == pytest.approx(LAMINATE_EXACT["a1"], abs=1e-12)
    assert result.A[1, 1] == pytest.approx(LAMINATE_EXACT["a2"], rel=1e-10)
    assert result.C[0, 0, 0, 0] == pytest.approx(LAMINATE_EXACT["alpha1"], rel=2e-3)
    assert result.C[1, 1, 1, 1] == pytest.approx(LAMINATE_EXACT["alpha2"], rel=2e-3)
    assert result.C[0, 0, 1, 1] == pytest.approx(LAMINATE_EXACT["beta"], rel=2e-3)


def test_laminate_refinement_order():
    coarse = run_algorithm_AC(builtin_geometry("laminate"), CellGrid((40, 40)))
    fine = run_algorithm_AC(builtin_geometry("laminate"), CellGrid((80, 80)))
    e_c = abs(coarse.C[0, 0, 0, 0] - LAMINATE_EXACT["alpha1"])
    e_f = abs(fine.C[0, 0, 0, 0] - LAMINATE_EXACT["alpha1"])
    assert e_f < e_c / 2.0  # order >= 1


def test_parity_of_cell_solutions(rect_matched):
    _, result, _ = rect_matched
    assert np.abs(result.cpset.psi[(1, 0)].real).max() == 0.0
    assert np.abs(result.cpset.psi[(0, 1)].real).max() == 0.0
    assert np.abs(result.cpset.psi[(2, 0)].imag).max() == 0.0
    assert np.abs(result.cpset.psi[(1, 1)].imag).max() == 0.0


def test_cross_axis_exchange_symmetry():
    result = run_algorithm_AC(builtin_geometry("cross"), CellGrid((54, 54)))
    assert result.A[0, 0] == pytest.approx(result.A[1, 1], rel=1e-10)
    assert result.C[0, 0, 0, 0] == pytest.approx(result.C[1, 1, 1, 1], rel=1e-9)


def test_A_positive_definite_and_C_nonpositive(rect_matched, rng):
    _, result, _ = rect_matched
    eigs = np.linalg.eigvalsh(result.A)
    assert eigs[0] > 0.0
    k = rng.normal(size=(200, 2))
    quartic = np.einsum("ijkl,ti,tj,tk,tl->t", result.C, k, k, k, k)
    assert np.max(quartic) <= 1e-12


def test_C_fully_symmetric(rect_matched):
    _, result, _ = rect_matched
    C = result.C
    for perm in [(1, 0, 2, 3), (2, 1, 0, 3), (3, 1, 2, 0), (0, 2, 1, 3)]:
        assert np.abs(C - np.transpose(C, perm)).max() == 0.0


def test_odd_mu_formula_vanishes(rect_matched):
    # evaluating the even-order average formula at odd orders gives ~0
    field, result, _ = rect_matched
    op = assemble(field, result.grid)
    cpset = result.cpset
    for alpha in [(1, 0), (2, 1), (1, 2), (3, 0)]:
        total = 0.0 + 0.0j
        n = 2
        for j in range(n):
            if alpha[j] == 0:
                continue
            prev = tuple(a - (1 if m == j else 0) for m, a in enumerate(alpha))
            psi = cpset.psi[prev] if sum(prev) else np.ones(result.grid.shape, complex)
            total += alpha[j] * op.apply_shift1(j, psi).mean()
        for i in range(n):
            for j in range(i, n):
                eij = tuple((1 if m == i else 0) + (1 if m == j else 0) for m in range(n))
                if any(e > a for e, a in zip(eij, alpha)):
                    continue
                prev = tuple(a - e for a, e in zip(alpha, eij))
                psi = cpset.psi[prev] if sum(prev) else np.ones(result.grid.shape, complex)
                total += multi_binom(alpha, eij) * op.apply_shift2(i, j, psi).mean()
        assert abs(total) < 1e-7


def test_nondiagonal_matrix_field_rejected():
    from dispwave.geometry import matrix_field

    def aniso(y):
        y = np.atleast_2d(y)
        m = np.tile(np.array([[2.0, 0.5], [0.5, 1.0]]), y.shape[:-1] + (1, 1))
        return m

    field = matrix_field(aniso, 2, gamma=0.5)
    from dispwave.geometry import GeometryError

    with pytest.raises(GeometryError, match="diagonal"):
        assemble(field, CellGrid((8, 8)))
