"""Periodic cell problems and the recursive chain for the effective tensors.

The elliptic cell operator is discretized by a conservative second-order
flux stencil with face-midpoint coefficients.  The wave-vector shift enters
through face-average operators, so the discrete operator family is exactly
quadratic in k; the recursive chain below then reproduces the k-Taylor
coefficients of the discrete lowest band, which is what the Bloch module
cross-validates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dataclass_field
from itertools import combinations_with_replacement

import numpy as np

from .geometry import CellGrid, CoefficientField, GeometryError, sample_faces

__all__ = [
    "CellField",
    "CellOperator",
    "CellProblemSet",
    "SolveInfo",
    "CompatibilityError",
    "ConvergenceError",
    "MissingDependencyError",
    "NumericalConsistencyError",
    "assemble",
    "solve_zero_mean",
    "cell_problem_rhs",
    "mu_even",
    "run_algorithm_AC",
    "ACResult",
]


class CompatibilityError(ValueError):
    """Right-hand side is incompatible with the zero-mean constraint."""


class ConvergenceError(RuntimeError):
    """Iterative solve failed to reach the requested tolerance."""


class MissingDependencyError(KeyError):
    """A prerequisite cell solution or derivative value is not available."""


class NumericalConsistencyError(RuntimeError):
    """A quantity that must be real carries too large an imaginary part."""


@dataclass
class CellField:
    """Complex scalar field on the periodic cell grid, zero-mean constrained."""

    grid: CellGrid
    values: np.ndarray

    def mean(self) -> complex:
        return complex(self.values.mean())


@dataclass
class SolveInfo:
    converged: bool
    iterations: int
    residual: float


# ---------------------------------------------------------------------------
# multi-index helpers

def multi_binom(alpha: tuple[int, ...], beta: tuple[int, ...]) -> int:
    out = 1
    for a, b in zip(alpha, beta):
        out *= math.comb(a, b)
    return out


def sub_multiindices(alpha: tuple[int, ...], order: int) -> list[tuple[int, ...]]:
    """All beta <= alpha with |beta| = order."""
    n = len(alpha)
    out: list[tuple[int, ...]] = []

    def rec(pos: int, remaining: int, prefix: tuple[int, ...]):
        if pos == n:
            if remaining == 0:
                out.append(prefix)
            return
        for b in range(min(alpha[pos], remaining) + 1):
            rec(pos + 1, remaining - b, prefix + (b,))

    rec(0, order, ())
    return out


def multisets_of_order(n: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices with |alpha| = order, i.e. index multisets as counts."""
    out = []
    for combo in combinations_with_replacement(range(n), order):
        alpha = [0] * n
        for i in combo:
            alpha[i] += 1
        out.append(tuple(alpha))
    return out


def unit_index(n: int, j: int) -> tuple[int, ...]:
    e = [0] * n
    e[j] = 1
    return tuple(e)


# ---------------------------------------------------------------------------
# the discrete operator family


class CellOperator:
    """Conservative flux discretization of f -> -div(a_Y grad f) on the cell.

    Also exposes the first and second wave-vector derivatives of the shifted
    operator -(grad + ik) . a_Y (grad + ik) and the full shifted apply; the
    shift is discretized with face averages, which makes the family exactly
    quadratic in k and Hermitian for every real k.
    """

    def __init__(self, field: CoefficientField, grid: CellGrid, faces=None):
        if not field.is_diagonal():
            raise GeometryError(
                "face-flux stencil requires a diagonal (or scalar) coefficient matrix"
            )
        self.field = field
        self.grid = grid
        fc = faces if faces is not None else sample_faces(field, grid)
        if not fc.conforming:
            warnings.warn(
                f"grid does not conform to coefficient jumps: {fc.message}", stacklevel=2
            )
        self.faces = fc.values
        self.h = grid.spacing

    # elementary face/node maps ------------------------------------------------
    def _fdiff(self, v: np.ndarray, j: int) -> np.ndarray:
        return (np.roll(v, -1, axis=j) - v) / self.h[j]

    def _favg(self, v: np.ndarray, j: int) -> np.ndarray:
        return 0.5 * (np.roll(v, -1, axis=j) + v)

    def _fdiff_adj(self, g: np.ndarray, j: int) -> np.ndarray:
        return (np.roll(g, 1, axis=j) - g) / self.h[j]

    def _favg_adj(self, g: np.ndarray, j: int) -> np.ndarray:
        return 0.5 * (np.roll(g, 1, axis=j) + g)

    # operator applications ------------------------------------------------------
    def apply(self, v: np.ndarray) -> np.ndarray:
        """-div(a grad v): sum_j D_j^T a_j D_j v."""
        out = np.zeros_like(v)
        for j in range(self.grid.dim):
            out += self._fdiff_adj(self.faces[j] * self._fdiff(v, j), j)
        return out

    def apply_shift1(self, j: int, v: np.ndarray) -> np.ndarray:
        """First k_j-derivative: i [D_j^T a M_j - M_j^T a D_j] v.

        Consistent with -i [(a grad v) . e_j + div(a e_j v)].
        """
        a = self.faces[j]
        real_part = self._fdiff_adj(a * self._favg(v, j), j) - self._favg_adj(
            a * self._fdiff(v, j), j
        )
        return 1j * real_part

    def apply_shift2(self, i: int, j: int, v: np.ndarray) -> np.ndarray:
        """Second k-derivative: 2 M_j^T a M_j v for i = j, zero otherwise."""
        if i != j:
            return np.zeros_like(v)
        a = self.faces[j]
        return 2.0 * self._favg_adj(a * self._favg(v, j), j)

    def apply_bloch(self, v: np.ndarray, k) -> np.ndarray:
        """Shifted operator at wave vector k (Hermitian PSD for real k)."""
        k = np.asarray(k, dtype=float)
        out = self.apply(v.astype(complex, copy=False) if not np.iscomplexobj(v) else v)
        out = out.astype(complex, copy=False)
        for j in range(self.grid.dim):
            if k[j] != 0.0:
                out += k[j] * self.apply_shift1(j, v)
                out += (0.5 * k[j] ** 2) * self.apply_shift2(j, j, v)
        return out

    def mean_coefficient(self) -> float:
        return float(np.mean([a.mean() for a in self.faces]))

    def to_sparse(self):
        """Explicit sparse matrix (tests and small grids)."""
        import scipy.sparse as sp

        n = self.grid.node_count
        idx = np.arange(n).reshape(self.grid.shape)
        rows, cols, vals = [], [], []
        for j, a in enumerate(self.faces):
            af = a / self.h[j] ** 2
            ab = np.roll(a, 1, axis=j) / self.h[j] ** 2
            plus = np.roll(idx, -1, axis=j)
            rows += [idx.ravel(), idx.ravel(), plus.ravel()]
            cols += [idx.ravel(), plus.ravel(), idx.ravel()]
            vals += [(af + ab).ravel(), -af.ravel(), -af.ravel()]
        A = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        )
        return A.tocsr()


def assemble(field: CoefficientField, grid: CellGrid) -> CellOperator:
    """Assemble the periodic cell operator for a conforming grid."""
    return CellOperator(field, grid)


# ---------------------------------------------------------------------------
# projected (preconditioned) conjugate gradients


class SpectralPreconditioner:
    """Constant-coefficient inverse via FFT, exact on the mean-free subspace.

    The symbol matches the face-average discretization of the shifted
    operator with the mean coefficient, so contrast is the only thing left
    for CG to resolve.
    """

    def __init__(self, grid: CellGrid, mean_coeff: float, k=None):
        k = np.zeros(grid.dim) if k is None else np.asarray(k, dtype=float)
        sym = np.zeros(grid.shape)
        for j in range(grid.dim):
            m = np.fft.fftfreq(grid.shape[j], d=1.0 / grid.shape[j])
            theta = 2.0 * math.pi * m / grid.shape[j]
            s = 2.0 * np.sin(theta / 2.0) / grid.spacing[j] + k[j] * np.cos(theta / 2.0)
            shape = [1] * grid.dim
            shape[j] = grid.shape[j]
            sym = sym + (s**2).reshape(shape)
        sym *= mean_coeff
        with np.errstate(divide="ignore"):
            inv = np.where(sym > 0.0, 1.0 / np.where(sym > 0.0, sym, 1.0), 0.0)
        self._inv = inv

    def __call__(self, r: np.ndarray) -> np.ndarray:
        out = np.fft.ifftn(np.fft.fftn(r) * self._inv)
        return out.real if not np.iscomplexobj(r) else out


def _project_mean(v: np.ndarray) -> np.ndarray:
    v -= v.mean()
    return v


def pcg(
    apply_op,
    b: np.ndarray,
    *,
    rtol: float = 1e-10,
    maxiter: int = 1000,
    precond=None,
    project: bool = False,
    x0: np.ndarray | None = None,
) -> tuple[np.ndarray, SolveInfo]:
    """Preconditioned CG for Hermitian positive (semi-)definite operators.

    With ``project`` the mean is removed from the iterates after every
    update, which pins the zero-mean representative on the semi-definite
    periodic operator.
    """
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), SolveInfo(True, 0, 0.0)
    x = np.zeros_like(b) if x0 is None else x0.copy()
    if project:
        _project_mean(x)
    r = b - apply_op(x)
    if project:
        _project_mean(r)
    z = precond(r) if precond is not None else r
    if project and precond is not None:
        _project_mean(z)
    p = z.copy()
    rz = float(np.real(np.vdot(r, z)))
    target = rtol * bnorm
    for it in range(1, maxiter + 1):
        Ap = apply_op(p)
        pAp = float(np.real(np.vdot(p, Ap)))
        if pAp <= 0.0:
            return x, SolveInfo(False, it, float(np.linalg.norm(r)))
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if project:
            _project_mean(x)
            _project_mean(r)
        rnorm = float(np.linalg.norm(r))
        if rnorm <= target:
            return x, SolveInfo(True, it, rnorm)
        z = precond(r) if precond is not None else r
        if project and precond is not None:
            _project_mean(z)
        rz_new = float(np.real(np.vdot(r, z)))
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, SolveInfo(False, maxiter, float(np.linalg.norm(r)))


def solve_zero_mean(
    op: CellOperator,
    rhs: np.ndarray,
    *,
    rtol: float = 1e-10,
    maxiter: int | None = None,
    preconditioner: str = "fft",
    compat_rtol: float | None = None,
) -> tuple[np.ndarray, SolveInfo]:
    """Solve op psi = rhs with <psi> = 0 by projected CG.

    Real and imaginary parts are solved independently (the operator is
    real).  The rhs must be compatible up to solver roundoff: its mean,
    relative to the rhs rms, may not exceed ``compat_rtol`` (default
    max(10*rtol, 1e-6); deep recursive chains accumulate roundoff-level
    means well above 10*rtol itself).  Roundoff-level means are projected
    off before solving.
    """
    rhs = np.asarray(rhs)
    if maxiter is None:
        maxiter = 20 * max(op.grid.shape)
    if compat_rtol is None:
        compat_rtol = max(10.0 * rtol, 1e-6)
    rms = float(np.linalg.norm(rhs)) / math.sqrt(rhs.size)
    if abs(complex(rhs.mean())) > compat_rtol * max(1.0, rms):
        raise CompatibilityError(
            f"rhs mean {complex(rhs.mean()):.3e} exceeds compatibility threshold"
        )
    precond = (
        SpectralPreconditioner(op.grid, op.mean_coefficient())
        if preconditioner == "fft"
        else None
    )

    def solve_real(b: np.ndarray) -> tuple[np.ndarray, SolveInfo]:
        b = b - b.mean()
        return pcg(
            op.apply, b, rtol=rtol, maxiter=maxiter, precond=precond, project=True
        )

    if np.iscomplexobj(rhs):
        xr, info_r = solve_real(np.ascontiguousarray(rhs.real))
        xi, info_i = solve_real(np.ascontiguousarray(rhs.imag))
        info = SolveInfo(
            info_r.converged and info_i.converged,
            max(info_r.iterations, info_i.iterations),
            math.hypot(info_r.residual, info_i.residual),
        )
        x = xr + 1j * xi
    else:
        x, info = solve_real(rhs.astype(float))
    if not info.converged:
        raise ConvergenceError(
            f"cell solve did not converge in {info.iterations} iterations "
            f"(residual {info.residual:.3e})"
        )
    return x, info


# ---------------------------------------------------------------------------
# the recursive chain


@dataclass
class CellProblemSet:
    """Cache of cell solutions psi^alpha and band derivatives mu^alpha.

    Keys are multi-indices (per-axis derivative counts), which are already
    canonical under permutations of the underlying index multiset.
    """

    grid: CellGrid
    psi: dict[tuple[int, ...], np.ndarray] = dataclass_field(default_factory=dict)
    mu: dict[tuple[int, ...], complex] = dataclass_field(default_factory=dict)

    def psi_field(self, alpha: tuple[int, ...]) -> CellField:
        return CellField(self.grid, self.psi[alpha])

    def require_psi(self, alpha: tuple[int, ...]) -> np.ndarray:
        if alpha not in self.psi:
            raise MissingDependencyError(f"psi^{alpha} has not been solved")
        return self.psi[alpha]

    def require_mu(self, alpha: tuple[int, ...]) -> complex:
        if sum(alpha) % 2 == 1:
            return 0.0
        if alpha not in self.mu:
            raise MissingDependencyError(f"mu^{alpha} has not been computed")
        return self.mu[alpha]


def _base_psi(grid: CellGrid) -> np.ndarray:
    return np.ones(grid.shape, dtype=complex)


def cell_problem_rhs(
    alpha: tuple[int, ...], cpset: CellProblemSet, op: CellOperator
) -> np.ndarray:
    """Right-hand side of the cell problem for psi^alpha.

    All lower-order psi and all even mu up to |alpha| must be present in
    the set; a missing prerequisite raises naming the missing index.
    """
    n = op.grid.dim
    alpha = tuple(alpha)
    order = sum(alpha)
    if order < 1:
        raise ValueError("alpha must have order >= 1")

    def psi_of(beta: tuple[int, ...]) -> np.ndarray:
        if sum(beta) == 0:
            return _base_psi(op.grid)
        return cpset.require_psi(beta)

    rhs = np.zeros(op.grid.shape, dtype=complex)
    for j in range(n):
        if alpha[j] == 0:
            continue
        prev = tuple(a - (1 if m == j else 0) for m, a in enumerate(alpha))
        rhs -= alpha[j] * op.apply_shift1(j, psi_of(prev))
    for i in range(n):
        for j in range(i, n):
            eij = tuple(
                (1 if m == i else 0) + (1 if m == j else 0) for m in range(n)
            )
            if any(e > a for e, a in zip(eij, alpha)):
                continue
            coeff = multi_binom(alpha, eij)
            prev = tuple(a - e for a, e in zip(alpha, eij))
            rhs -= coeff * op.apply_shift2(i, j, psi_of(prev))
    for even_order in range(2, order + 1, 2):
        for beta in sub_multiindices(alpha, even_order):
            mu_b = cpset.require_mu(beta)
            if mu_b == 0.0:
                continue
            rhs += multi_binom(alpha, beta) * mu_b * psi_of(
                tuple(a - b for a, b in zip(alpha, beta))
            )
    return rhs


def mu_even(
    alpha: tuple[int, ...], cpset: CellProblemSet, op: CellOperator
) -> complex:
    """Band derivative mu^alpha for even |alpha| by cell averages.

    Callers must use 0 for odd orders; calling with odd |alpha| is a
    contract violation.
    """
    alpha = tuple(alpha)
    n = op.grid.dim
    if sum(alpha) % 2 == 1:
        raise ValueError(f"mu^{alpha} with odd order is identically zero by symmetry")

    def psi_of(beta):
        if sum(beta) == 0:
            return _base_psi(op.grid)
        return cpset.require_psi(beta)

    total = 0.0 + 0.0j
    for j in range(n):
        if alpha[j] == 0:
            continue
        prev = tuple(a - (1 if m == j else 0) for m, a in enumerate(alpha))
        total += alpha[j] * op.apply_shift1(j, psi_of(prev)).mean()
    for i in range(n):
        for j in range(i, n):
            eij = tuple(
                (1 if m == i else 0) + (1 if m == j else 0) for m in range(n)
            )
            if any(e > a for e, a in zip(eij, alpha)):
                continue
            coeff = multi_binom(alpha, eij)
            prev = tuple(a - e for a, e in zip(alpha, eij))
            total += coeff * op.apply_shift2(i, j, psi_of(prev)).mean()
    return complex(total)


@dataclass
class ACResult:
    """Effective tensors with solver provenance."""

    A: np.ndarray
    C: np.ndarray
    cpset: CellProblemSet
    imag_residue: float
    solve_residuals: dict[tuple[int, ...], float]
    grid: CellGrid
    field_name: str


def _mu_is_skipped(alpha: tuple[int, ...], even_symmetric: bool) -> bool:
    """Under per-axis even symmetry only all-even multi-indices survive."""
    return even_symmetric and any(a % 2 == 1 for a in alpha)


def run_algorithm_AC(
    field: CoefficientField,
    grid: CellGrid,
    *,
    rtol: float = 1e-10,
    maxiter: int | None = None,
    preconditioner: str = "fft",
    respect_symmetry: bool | None = None,
    imag_tol: float = 1e-8,
) -> ACResult:
    """Five-step chain producing A and C from recursive cell problems.

    Steps: first-order problems, A from second-order averages, second- and
    third-order problems, C from fourth-order averages.  Only one problem
    per index multiset is solved; with per-axis even symmetry the tensor
    components that vanish identically are pinned to zero.
    """
    n = field.dim
    op = CellOperator(field, grid)
    cpset = CellProblemSet(grid)
    residuals: dict[tuple[int, ...], float] = {}
    even = field.even_symmetric if respect_symmetry is None else respect_symmetry

    def solve_alpha(alpha: tuple[int, ...]) -> None:
        rhs = cell_problem_rhs(alpha, cpset, op)
        # compatible by construction; the residual mean is CG noise from
        # earlier solves, amplified by 1/h, and is projected off
        psi, info = solve_zero_mean(
            op, rhs, rtol=rtol, maxiter=maxiter,
            preconditioner=preconditioner, compat_rtol=math.inf,
        )
        cpset.psi[alpha] = psi
        residuals[alpha] = info.residual

    def compute_mu(alpha: tuple[int, ...]) -> None:
        cpset.mu[alpha] = 0.0 if _mu_is_skipped(alpha, even) else mu_even(alpha, cpset, op)

    # step 1: first-order problems
    for j in range(n):
        solve_alpha(unit_index(n, j))
    # step 2: A entries
    for alpha in multisets_of_order(n, 2):
        compute_mu(alpha)
    # step 3: second-order problems
    for alpha in multisets_of_order(n, 2):
        solve_alpha(alpha)
    # step 4: third-order problems (mu^alpha = 0 for odd orders)
    for alpha in multisets_of_order(n, 3):
        if even and not _third_order_needed(alpha):
            continue
        solve_alpha(alpha)
    # step 5: C entries
    for alpha in multisets_of_order(n, 4):
        compute_mu(alpha)

    A = np.zeros((n, n))
    imag_residue = 0.0
    for i in range(n):
        for j in range(i, n):
            eij = tuple((1 if m == i else 0) + (1 if m == j else 0) for m in range(n))
            val = cpset.mu[eij]
            imag_residue = max(imag_residue, abs(val.imag) if isinstance(val, complex) else 0.0)
            A[i, j] = A[j, i] = 0.5 * np.real(val)

    C = np.zeros((n,) * 4)
    for idx in np.ndindex(*(n,) * 4):
        alpha = tuple(sum(1 for t in idx if t == m) for m in range(n))
        val = cpset.mu[alpha]
        imag_residue = max(imag_residue, abs(val.imag) if isinstance(val, complex) else 0.0)
        C[idx] = np.real(val) / 24.0

    scale = max(1.0, float(np.abs(A).max()))
    if imag_residue > imag_tol * scale:
        raise NumericalConsistencyError(
            f"imaginary residue {imag_residue:.3e} exceeds tolerance {imag_tol * scale:.3e}"
        )
    return ACResult(A, C, cpset, imag_residue, residuals, grid, field.name)


def _third_order_needed(alpha: tuple[int, ...]) -> bool:
    """Under even symmetry, psi^alpha (|alpha|=3) feeds some surviving mu^kappa.

    kappa = alpha + e_j must have all components even for some j, i.e.
    alpha has exactly one odd component.
    """
    return sum(a % 2 for a in alpha) == 1
