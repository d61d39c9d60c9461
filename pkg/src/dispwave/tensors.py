"""Tensor algebra for the dispersive model coefficients.

Constructs symmetric positive semi-definite tensors E (order 2) and F
(order 4) realizing the operator identity -C D^4 = E D^2 A D^2 - F D^4 for
a symmetric positive definite A and an arbitrary fourth-order C, entry by
entry in the frame that diagonalizes A.  Also provides the closed-form 2D
shortcut for media with per-axis even symmetry, definiteness checks, and
the ray-wise dispersion coefficient kappa(phi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

__all__ = [
    "DefinitenessError",
    "EffectiveModel",
    "KappaExtrema",
    "PsdReport",
    "contract2",
    "contract4",
    "decompose",
    "decompose_entry",
    "decompose_symmetric_2d",
    "diagonalize",
    "kappa",
    "kappa_contraction",
    "kappa_minimizer",
    "polar_angle",
    "psd_checks",
    "rotate_tensor4",
    "verify_decomposition",
]


class DefinitenessError(ValueError):
    """A tensor fails its required (semi-)definiteness."""


def contract2(M: np.ndarray, k: np.ndarray) -> np.ndarray:
    """sum_ij M_ij k_i k_j, batched over the leading axes of k."""
    return np.einsum("...i,ij,...j->...", k, M, k)


def contract4(T: np.ndarray, k: np.ndarray) -> np.ndarray:
    """sum_ijkl T_ijkl k_i k_j k_k k_l, batched over the leading axes of k."""
    return np.einsum("ijkl,...i,...j,...k,...l->...", T, k, k, k, k)


def _pos(x: float) -> float:
    return x if x > 0.0 else 0.0


def diagonalize(A: np.ndarray, *, tol: float = 1e-14) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal S and positive eigenvalues d with A = S^T diag(d) S.

    Cyclic Jacobi iterations; eigenvalues sorted ascending, the first
    nonzero component of each eigenvector made positive, and det(S) = +1
    enforced by flipping the sign of the last row if needed.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or not np.allclose(A, A.T, atol=1e-12):
        raise DefinitenessError("matrix must be symmetric")
    B = A.copy()
    V = np.eye(n)
    scale = max(1.0, float(np.abs(A).max()))
    for _ in range(60):
        off = math.sqrt(sum(B[p, q] ** 2 for p in range(n) for q in range(p + 1, n)))
        if off <= tol * scale:
            break
        for p in range(n):
            for q in range(p + 1, n):
                if abs(B[p, q]) <= 1e-300:
                    continue
                theta = (B[q, q] - B[p, p]) / (2.0 * B[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                B = J.T @ B @ J
                V = V @ J
    d = np.diag(B).copy()
    order = np.argsort(d)
    d = d[order]
    V = V[:, order]
    for col in range(n):
        lead = np.flatnonzero(np.abs(V[:, col]) > 1e-12)
        if lead.size and V[lead[0], col] < 0.0:
            V[:, col] = -V[:, col]
    S = V.T
    if np.linalg.det(S) < 0.0:
        S[-1, :] = -S[-1, :]
    if d[0] <= 0.0:
        raise DefinitenessError(f"matrix is not positive definite: eigenvalue {d[0]:.3e}")
    return S, d


def rotate_tensor4(C: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Rotate a fourth-order tensor so that C~ (S D)^4 = C D^4."""
    return np.einsum("ip,jq,kr,ls,pqrs->ijkl", S, S, S, S, C, optimize=True)


def decompose_entry(
    c: float, indices: tuple[int, int, int, int], diag: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """E/F parts cancelling a single entry c at the given index position.

    The diagonal-frame construction, case by case on the index pattern;
    indices with two pairs use the pair holding the first index, which is
    what collapses to the published 2D shortcut for symmetric media.
    All returned parts are symmetric and positive semi-definite.
    """
    diag = np.asarray(diag, dtype=float)
    n = diag.size
    E = np.zeros((n, n))
    F = np.zeros((n,) * 4)
    if c == 0.0:
        return E, F
    a = diag
    counts: dict[int, int] = {}
    for t in indices:
        counts[t] = counts.get(t, 0) + 1
    pattern = sorted(counts.values(), reverse=True)

    if pattern in ([4], [2, 2]):
        # two pairs (possibly equal): the pair of the first index is "i"
        i = indices[0]
        j = next(t for t in indices if t != i) if len(counts) == 2 else i
        E[i, i] += _pos(-c) / a[j]
        F[i, j, i, j] += _pos(c)
        for m in range(n):
            if m != j:
                F[i, m, i, m] += _pos(-c) / a[j] * a[m]
        return E, F

    if pattern == [3, 1]:
        i = max(counts, key=counts.get)
        j = min(counts, key=counts.get)
        ct = -c / (2.0 * a[i])
        E[i, j] += ct
        E[j, i] += ct
        E[i, i] += abs(ct)
        E[j, j] += abs(ct)
        for m in range(n):
            F[i, m, i, m] += abs(ct) * a[m]
            F[j, m, j, m] += abs(ct) * a[m]
            if m != i:
                F[i, m, j, m] += ct * a[m]
                F[j, m, i, m] += ct * a[m]
        return E, F

    if pattern == [2, 1, 1]:
        i = max(counts, key=counts.get)
        j, k = sorted(t for t in counts if t != i)
        ct = -c / (2.0 * a[i])
        E[j, k] += ct
        E[k, j] += ct
        E[j, j] += abs(ct)
        E[k, k] += abs(ct)
        for m in range(n):
            F[k, m, k, m] += abs(ct) * a[m]
            F[j, m, j, m] += abs(ct) * a[m]
            if m != i:
                F[k, m, j, m] += ct * a[m]
                F[j, m, k, m] += ct * a[m]
        return E, F

    # all four indices distinct: peel off a PSD rank-style block and reduce
    # the remainder, -|c|/2 (D_i^2 D_j^2 + D_k^2 D_l^2), through the pair case
    i, j, k, l = indices
    F[i, j, k, l] += 0.5 * c
    F[k, l, i, j] += 0.5 * c
    F[i, j, i, j] += 0.5 * abs(c)
    F[k, l, k, l] += 0.5 * abs(c)
    for pair in ((i, j), (k, l)):
        Ep, Fp = decompose_entry(-0.5 * abs(c), (pair[0], pair[1], pair[0], pair[1]), diag)
        E += Ep
        F += Fp
    return E, F


def decompose(A: np.ndarray, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Construct symmetric PSD E, F with -C D^4 = E D^2 A D^2 - F D^4.

    Four steps: diagonalize A, rotate C into the eigenframe, strip
    all-distinct-index entries into a PSD part F^ (empty for n <= 3),
    decompose the remaining entries case by case, and rotate back.
    """
    A = np.asarray(A, dtype=float)
    C = np.asarray(C, dtype=float)
    n = A.shape[0]
    S, d = diagonalize(A)
    Ct = rotate_tensor4(C, S)

    Fhat = np.zeros((n,) * 4)
    for idx in np.ndindex(*(n,) * 4):
        if len(set(idx)) == 4 and Ct[idx] != 0.0:
            c = Ct[idx]
            i, j, k, l = idx
            Fhat[i, j, k, l] += 0.5 * c
            Fhat[k, l, i, j] += 0.5 * c
            Fhat[i, j, i, j] += 0.5 * abs(c)
            Fhat[k, l, k, l] += 0.5 * abs(c)
    Cbar = Ct - Fhat

    Ebar = np.zeros((n, n))
    Fbar = np.zeros((n,) * 4)
    for idx in np.ndindex(*(n,) * 4):
        if len(set(idx)) == 4:
            # leftover all-distinct entries of Cbar define cancelling
            # operators (derivatives commute) and carry no content
            continue
        c = Cbar[idx]
        if c != 0.0:
            Ep, Fp = decompose_entry(float(c), idx, d)
            Ebar += Ep
            Fbar += Fp

    Etilde = Ebar
    Ftilde = Fbar + Fhat
    E = S.T @ Etilde @ S
    F = rotate_tensor4(Ftilde, S.T)
    return E, F


def decompose_symmetric_2d(
    a1: float, a2: float, alpha1: float, alpha2: float, beta: float
) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form E, F for the 2D even-symmetric coefficient structure.

    A = diag(a1, a2); C has C_iiii = alpha_i and the six mixed entries
    equal to beta, all others zero.
    """
    if a1 <= 0 or a2 <= 0:
        raise DefinitenessError("a1, a2 must be positive")
    E = np.zeros((2, 2))
    F = np.zeros((2, 2, 2, 2))
    E[0, 0] = _pos(-alpha1) / a1 + 3.0 * _pos(-beta) / a2
    E[1, 1] = _pos(-alpha2) / a2 + 3.0 * _pos(-beta) / a1
    F[0, 0, 0, 0] = _pos(alpha1) + 3.0 * (a1 / a2) * _pos(-beta)
    F[1, 1, 1, 1] = _pos(alpha2) + 3.0 * (a2 / a1) * _pos(-beta)
    F[1, 0, 1, 0] = (a1 / a2) * _pos(-alpha2) + 3.0 * _pos(beta)
    F[0, 1, 0, 1] = (a2 / a1) * _pos(-alpha1) + 3.0 * _pos(beta)
    return E, F


def verify_decomposition(
    A: np.ndarray,
    C: np.ndarray,
    E: np.ndarray,
    F: np.ndarray,
    trials: int = 100,
    seed: int = 0,
) -> float:
    """Max relative residual of C k^4 + (E k^2)(A k^2) - F k^4 over random k."""
    rng = np.random.default_rng(seed)
    n = A.shape[0]
    k = rng.normal(size=(trials, n))
    r = contract4(C, k) + contract2(E, k) * contract2(A, k) - contract4(F, k)
    scale = 1.0 + np.sum(k**2, axis=1) ** 2 * np.linalg.norm(C)
    return float(np.max(np.abs(r) / scale))


@dataclass
class PsdReport:
    ok: bool
    min_eig_E: float
    min_eig_F: float
    witness_E: np.ndarray | None = None
    witness_F: np.ndarray | None = None

    def __bool__(self) -> bool:
        return self.ok


def psd_checks(E: np.ndarray, F: np.ndarray, tol: float = 1e-12) -> PsdReport:
    """Positive semi-definiteness of E and of F as a quadratic form on matrices.

    F acts on (not necessarily symmetric) matrices xi through
    sum F_ijkl xi_ij xi_kl; major symmetry F_ijkl = F_klij makes the
    n^2 x n^2 matrix view symmetric.
    """
    n = E.shape[0]
    ew, ev = np.linalg.eigh(0.5 * (E + E.T))
    M = F.reshape(n * n, n * n)
    M = 0.5 * (M + M.T)
    fw, fv = np.linalg.eigh(M)
    ok = bool(ew[0] >= -tol and fw[0] >= -tol)
    return PsdReport(
        ok,
        float(ew[0]),
        float(fw[0]),
        None if ew[0] >= -tol else ev[:, 0],
        None if fw[0] >= -tol else fv[:, 0].reshape(n, n),
    )


# ---------------------------------------------------------------------------
# dispersion coefficient along rays


def kappa(
    a1: float, a2: float, alpha1: float, alpha2: float, beta: float, phi
) -> np.ndarray | float:
    """Ray-wise dispersion coefficient for the 2D even-symmetric structure."""
    phi = np.asarray(phi, dtype=float)
    c2 = np.cos(phi) ** 2
    s2 = np.sin(phi) ** 2
    out = 6.0 * beta * c2 * s2 / (a1 * a2) + alpha1 * c2**2 / a1**2 + alpha2 * s2**2 / a2**2
    return out if out.ndim else float(out)


def kappa_contraction(A_diag: np.ndarray, C: np.ndarray, phi) -> np.ndarray | float:
    """General contraction form: C xi^4 with xi = (cos/sqrt(a1), sin/sqrt(a2))."""
    a = np.asarray(A_diag, dtype=float)
    phi = np.asarray(phi, dtype=float)
    xi = np.stack([np.cos(phi) / math.sqrt(a[0]), np.sin(phi) / math.sqrt(a[1])], axis=-1)
    out = contract4(C, xi)
    return out if out.ndim else float(out)


def polar_angle(phi, a1: float, a2: float) -> np.ndarray | float:
    """Polar observation angle of the elliptic-frame ray angle phi."""
    phi = np.asarray(phi, dtype=float)
    out = np.arctan2(math.sqrt(a2) * np.sin(phi), math.sqrt(a1) * np.cos(phi))
    return out if out.ndim else float(out)


@dataclass
class KappaExtrema:
    """Both kappa extrema over [0, pi/2]; weakest dispersion = max kappa."""

    phi_weak: float
    kappa_weak: float
    phi_weak_polar: float
    phi_strong: float
    kappa_strong: float
    phi_strong_polar: float


def kappa_minimizer(
    a1: float, a2: float, alpha1: float, alpha2: float, beta: float
) -> KappaExtrema:
    """Locate the weak- and strong-dispersion angles of kappa on [0, pi/2].

    kappa <= 0 for exact coefficients, so weakest dispersion (smallest
    |kappa|) is the maximizer; both extrema are reported, each refined by
    golden-section from a 1024-point scan.  Ties resolve to the smallest
    angle.
    """

    def f(phi):
        return kappa(a1, a2, alpha1, alpha2, beta, phi)

    grid = np.linspace(0.0, math.pi / 2.0, 1024)
    vals = f(grid)

    def refine(sign: float) -> tuple[float, float]:
        signed = sign * vals
        best = signed.max()
        scale = max(1.0, float(np.abs(vals).max()))
        # ties resolve to the smallest angle; a tied scan is left unrefined
        tied = np.flatnonzero(signed >= best - 1e-12 * scale)
        i = int(tied[0])
        if tied.size > 1:
            return float(grid[i]), float(f(grid[i]))
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, grid.size - 1)]
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        x1 = hi - invphi * (hi - lo)
        x2 = lo + invphi * (hi - lo)
        f1, f2 = sign * f(x1), sign * f(x2)
        for _ in range(80):
            if f1 >= f2:
                hi, x2, f2 = x2, x1, f1
                x1 = hi - invphi * (hi - lo)
                f1 = sign * f(x1)
            else:
                lo, x1, f1 = x1, x2, f2
                x2 = lo + invphi * (hi - lo)
                f2 = sign * f(x2)
        phi = 0.5 * (lo + hi)
        return float(phi), float(f(phi))

    phi_w, k_w = refine(+1.0)
    phi_s, k_s = refine(-1.0)
    return KappaExtrema(
        phi_w, k_w, polar_angle(phi_w, a1, a2),
        phi_s, k_s, polar_angle(phi_s, a1, a2),
    )


# ---------------------------------------------------------------------------
# the assembled model


@dataclass
class EffectiveModel:
    """Tensor bundle (A, C, E, F) with provenance metadata."""

    A: np.ndarray
    C: np.ndarray
    E: np.ndarray
    F: np.ndarray
    metadata: dict = dataclass_field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def verify(self, trials: int = 100, tol: float = 1e-10) -> float:
        residual = verify_decomposition(self.A, self.C, self.E, self.F, trials)
        if residual > tol:
            raise DefinitenessError(f"decomposition residual {residual:.3e} > {tol:.1e}")
        report = psd_checks(self.E, self.F)
        if not report:
            raise DefinitenessError(
                f"E/F definiteness failure: min eig E {report.min_eig_E:.3e}, "
                f"F {report.min_eig_F:.3e}"
            )
        return residual

    @classmethod
    def from_tensors(
        cls, A, C, *, method: str = "auto", metadata: dict | None = None
    ) -> "EffectiveModel":
        """Build E, F for given A, C.

        ``symmetric-2d`` uses the closed-form shortcut (requires the 2D
        even-symmetric structure), ``general`` the entrywise algorithm;
        ``auto`` picks the shortcut when the structure allows it.
        """
        A = np.asarray(A, dtype=float)
        C = np.asarray(C, dtype=float)
        md = dict(metadata or {})
        use_sym = False
        if method in ("auto", "symmetric-2d"):
            use_sym = _has_symmetric_structure(A, C)
            if method == "symmetric-2d" and not use_sym:
                raise DefinitenessError(
                    "symmetric-2d decomposition requires diagonal A and the "
                    "even-symmetric C structure in 2D"
                )
        if use_sym:
            E, F = decompose_symmetric_2d(
                A[0, 0], A[1, 1], C[0, 0, 0, 0], C[1, 1, 1, 1], C[0, 0, 1, 1]
            )
            md.setdefault("decomposition", "symmetric-2d")
        else:
            E, F = decompose(A, C)
            md.setdefault("decomposition", "general")
        return cls(A, C, E, F, md)


def _has_symmetric_structure(A: np.ndarray, C: np.ndarray, tol: float = 1e-13) -> bool:
    if A.shape != (2, 2):
        return False
    if abs(A[0, 1]) > tol or abs(A[1, 0]) > tol:
        return False
    scale = max(1.0, float(np.abs(C).max()))
    beta = C[0, 0, 1, 1]
    for idx in np.ndindex(2, 2, 2, 2):
        ones = sum(idx)
        if ones in (1, 3):
            if abs(C[idx]) > tol * scale:
                return False
        elif ones == 2:
            if abs(C[idx] - beta) > tol * scale:
                return False
    return True
