"""Lowest Bloch bands of the shifted cell operator, and the Taylor check.

This module is the independent oracle for the cell-problem chain: central
finite differences of the lowest band at k = 0 must reproduce the tensors
A and C.  The shifted operator shares its discretization with the cell
module, so the comparison is limited only by the k-stencil truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .cell import CellOperator, ConvergenceError, SpectralPreconditioner, pcg
from .geometry import CellGrid, CoefficientField

__all__ = [
    "BlochOperator",
    "BlochPoint",
    "TaylorReport",
    "assemble_shifted",
    "lowest_eigenpairs",
    "mu0",
    "band_path",
    "taylor_check",
]

TWO_PI = 2.0 * math.pi


class BlochOperator:
    """Hermitian PSD discretization of -(grad + ik) . a_Y (grad + ik)."""

    def __init__(self, op: CellOperator, k):
        self.op = op
        self.k = np.asarray(k, dtype=float)
        self.grid = op.grid

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.op.apply_bloch(v, self.k)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return self.apply(v)


def assemble_shifted(field: CoefficientField, grid: CellGrid, k) -> BlochOperator:
    """Shifted cell operator at wave vector k; at k = 0 it applies the
    plain real assembly unchanged."""
    k = np.asarray(k, dtype=float)
    if np.any(np.abs(k) > 0.5 + 1e-12):
        raise ValueError("wave vector components must lie in [-1/2, 1/2]")
    return BlochOperator(CellOperator(field, grid), k)


@dataclass
class BlochPoint:
    """Lowest eigenpairs of the shifted operator at one wave vector."""

    k: np.ndarray
    eigenvalues: np.ndarray
    eigenfields: list[np.ndarray]
    residuals: np.ndarray
    degenerate: bool = False

    @property
    def mu0(self) -> float:
        return float(self.eigenvalues[0])


def _cell_volume(grid: CellGrid) -> float:
    return TWO_PI ** grid.dim


def _l2_normalize(v: np.ndarray, grid: CellGrid) -> np.ndarray:
    norm = math.sqrt(float(np.vdot(v, v).real) / v.size * _cell_volume(grid))
    return v / norm


def lowest_eigenpairs(
    field: CoefficientField,
    grid: CellGrid,
    k,
    m: int = 1,
    *,
    tol: float = 1e-12,
    maxiter: int = 100,
    inner_rtol: float = 1e-12,
    seed: int = 7,
) -> BlochPoint:
    """Deflated block inverse iteration for the m lowest Bloch eigenpairs.

    At k = 0 the kernel (constants) is handled by mean projection and the
    zero eigenpair is returned exactly.  Eigenfields are L2(Y)-normalized.
    A cluster gap below 1e-10 sets the degeneracy flag.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if m > 10:
        raise ValueError("only small eigenpair counts are supported (m <= 10)")
    k = np.asarray(k, dtype=float)
    op = CellOperator(field, grid)
    bop = BlochOperator(op, k)
    at_zero = bool(np.all(k == 0.0))
    precond = SpectralPreconditioner(grid, op.mean_coefficient(), k=k)
    vol = _cell_volume(grid)

    want = m - 1 if at_zero else m
    fields: list[np.ndarray] = []
    values: list[float] = []
    residuals: list[float] = []
    if at_zero:
        const = np.full(grid.shape, 1.0 / math.sqrt(vol), dtype=complex)
        fields.append(const)
        values.append(0.0)
        residuals.append(0.0)

    if want > 0:
        rng = np.random.default_rng(seed)
        block = min(want + 2, grid.node_count - (1 if at_zero else 0))
        X = rng.normal(size=(block, *grid.shape)) + 1j * rng.normal(size=(block, *grid.shape))
        if at_zero:
            X -= X.mean(axis=tuple(range(1, X.ndim)), keepdims=True)
        X = _orthonormalize(X)
        theta = np.zeros(block)
        for _ in range(maxiter):
            Y = np.empty_like(X)
            for i in range(block):
                sol, info = pcg(
                    bop.apply,
                    X[i],
                    rtol=inner_rtol,
                    maxiter=40 * max(grid.shape),
                    precond=precond,
                    project=at_zero,
                )
                if not info.converged:
                    raise ConvergenceError(
                        f"inner solve stalled at residual {info.residual:.3e}"
                    )
                Y[i] = sol
            Y = _orthonormalize(Y)
            # Rayleigh-Ritz on the block
            H = np.empty((block, block), dtype=complex)
            AY = np.empty_like(Y)
            for i in range(block):
                AY[i] = bop.apply(Y[i])
            for i in range(block):
                for j in range(block):
                    H[i, j] = np.vdot(Y[i], AY[j])
            H = 0.5 * (H + H.conj().T)
            theta, U = np.linalg.eigh(H)
            X = np.tensordot(U.T, Y, axes=1)
            AX = np.tensordot(U.T, AY, axes=1)
            res = np.array(
                [
                    float(np.linalg.norm(AX[i] - theta[i] * X[i]) / np.linalg.norm(X[i]))
                    for i in range(want)
                ]
            )
            if np.all(res <= tol * max(1.0, float(abs(theta[want - 1])))):
                break
        else:
            raise ConvergenceError(
                f"eigensolver did not converge: residuals {res}"
            )
        for i in range(want):
            fields.append(_l2_normalize(X[i], grid))
            values.append(float(theta[i]))
            residuals.append(res[i])

    values_arr = np.array(values)
    gaps = np.diff(values_arr)
    degenerate = bool(np.any(gaps < 1e-10)) if gaps.size else False
    return BlochPoint(k, values_arr, fields, np.array(residuals), degenerate)


def _orthonormalize(X: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt over the leading block axis."""
    Y = X.copy()
    for i in range(Y.shape[0]):
        for j in range(i):
            Y[i] -= np.vdot(Y[j], Y[i]) * Y[j]
        norm = math.sqrt(float(np.vdot(Y[i], Y[i]).real))
        Y[i] /= norm
    return Y


def mu0(field: CoefficientField, grid: CellGrid, k, *, tol: float = 1e-12) -> float:
    """Lowest Bloch eigenvalue at wave vector k."""
    return lowest_eigenpairs(field, grid, k, 1, tol=tol).mu0


def band_path(
    field: CoefficientField,
    grid: CellGrid,
    waypoints,
    samples_per_segment: int,
    m: int,
    *,
    tol: float = 1e-10,
    workers: int = 1,
) -> list[BlochPoint]:
    """Sample the m lowest bands along straight segments between waypoints."""
    pts: list[np.ndarray] = []
    waypoints = [np.asarray(w, dtype=float) for w in waypoints]
    if len(waypoints) < 2:
        raise ValueError("need at least two waypoints")
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        for s in range(samples_per_segment):
            pts.append(a + (b - a) * s / samples_per_segment)
    pts.append(waypoints[-1])

    def solve(kvec):
        return lowest_eigenpairs(field, grid, kvec, m, tol=tol)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(solve, pts))
    return [solve(kv) for kv in pts]


# ---------------------------------------------------------------------------
# Taylor cross-validation of A and C


_D1 = {-1: -0.5, 1: 0.5}
_D2 = {-1: 1.0, 0: -2.0, 1: 1.0}
_D3 = {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5}
_D4 = {-2: 1.0, -1: -4.0, 0: 6.0, 1: -4.0, 2: 1.0}
_STENCILS = {1: _D1, 2: _D2, 3: _D3, 4: _D4}
# 4th-order-accurate pure second derivative; reuses the +-2 step points of
# the fourth-derivative stencil, so it costs no extra band evaluations
_D2_O4 = {-2: -1.0 / 12.0, -1: 4.0 / 3.0, 0: -2.5, 1: 4.0 / 3.0, 2: -1.0 / 12.0}


@dataclass
class TaylorReport:
    """Finite-difference band derivatives at k = 0 against 2A and 24C."""

    step: float
    second_fd: np.ndarray
    fourth_fd: dict[tuple[int, ...], float]
    dev_A: np.ndarray
    dev_C: dict[tuple[int, ...], float]
    max_rel_A: float
    max_rel_C: float
    odd_max: float = 0.0
    evaluations: int = 0

    def summary(self) -> str:
        lines = [
            f"step {self.step:g}: max |d2 mu0/2 - A| rel dev {self.max_rel_A:.3e}",
            f"            max |d4 mu0/24 - C| rel dev {self.max_rel_C:.3e}",
            f"            max |odd-derivative| {self.odd_max:.3e}",
            f"            band evaluations: {self.evaluations}",
        ]
        return "\n".join(lines)


def taylor_check(
    field: CoefficientField,
    grid: CellGrid,
    A: np.ndarray,
    C: np.ndarray,
    step: float = 0.02,
    *,
    tol: float = 1e-12,
    check_odd: bool = False,
) -> TaylorReport:
    """Central finite differences of mu0 at k = 0 against 2A and 24C.

    Uses mu0(-k) = mu0(k) and mu0(0) = 0 to halve the eigenvalue solves.
    Relative deviations for entries that vanish identically are measured
    against the largest entry of the exact tensor.
    """
    if not 0.005 <= step <= 0.05:
        raise ValueError("step must lie in [0.005, 0.05]")
    n = field.dim
    cache: dict[tuple[int, ...], float] = {}

    def mu_at(offsets: tuple[int, ...]) -> float:
        if all(o == 0 for o in offsets):
            return 0.0
        key = min(offsets, tuple(-o for o in offsets))
        if key not in cache:
            cache[key] = mu0(field, grid, np.asarray(key, dtype=float) * step, tol=tol)
        return cache[key]

    def fd(alpha: tuple[int, ...]) -> float:
        axes = [j for j in range(n) if alpha[j] > 0]
        if len(axes) == 1 and alpha[axes[0]] == 2:
            stencils = [_D2_O4]
        else:
            stencils = [_STENCILS[alpha[j]] for j in axes]
        total = 0.0
        from itertools import product

        for combo in product(*[s.items() for s in stencils]):
            offsets = [0] * n
            w = 1.0
            for (off, wt), j in zip(combo, axes):
                offsets[j] = off
                w *= wt
            total += w * mu_at(tuple(offsets))
        return total / step ** sum(alpha)

    from .cell import multisets_of_order

    second_fd = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            alpha = tuple(
                (1 if t == i else 0) + (1 if t == j else 0) for t in range(n)
            )
            second_fd[i, j] = second_fd[j, i] = fd(alpha)

    fourth_fd: dict[tuple[int, ...], float] = {}
    for alpha in multisets_of_order(n, 4):
        fourth_fd[alpha] = fd(alpha)

    twoA = 2.0 * A
    dev_A = np.abs(second_fd - twoA)
    floor_A = max(1e-300, float(np.abs(twoA).max()))
    rel_A = dev_A / np.maximum(np.abs(twoA), floor_A)
    dev_C: dict[tuple[int, ...], float] = {}
    rel_C_max = 0.0
    c24_floor = max(1e-300, 24.0 * float(np.abs(C).max()))
    for alpha, val in fourth_fd.items():
        idx = []
        for t in range(n):
            idx += [t] * alpha[t]
        exact = 24.0 * C[tuple(idx)]
        dev = abs(val - exact)
        dev_C[alpha] = dev
        rel_C_max = max(rel_C_max, dev / max(abs(exact), c24_floor))

    odd_max = 0.0
    if check_odd:
        for order in (1, 3):
            for alpha in multisets_of_order(n, order):
                odd_max = max(odd_max, abs(fd(alpha)))

    return TaylorReport(
        step,
        second_fd,
        fourth_fd,
        dev_A,
        dev_C,
        float(rel_A.max()),
        rel_C_max,
        odd_max,
        len(cache),
    )
