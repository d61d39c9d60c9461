"""Periodic coefficient fields, grids, and the built-in material geometries.

The unit cell is Y = (-pi, pi)^n.  Coefficient fields are symmetric-matrix
valued maps on Y, represented by evaluators plus (for piecewise-constant
fields) an analytic list of axis-aligned boxes.  Piecewise-constant regions
use half-open boxes [lo, hi) so every point has exactly one value; jump
lines are recorded per axis so grids can be checked for conformity.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dataclass_field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

__all__ = [
    "Box",
    "CoefficientField",
    "CellGrid",
    "DomainGrid",
    "PeriodicBox",
    "FaceCoefficients",
    "ValidationReport",
    "GeometryError",
    "ValidationError",
    "builtin_geometry",
    "piecewise_constant_field",
    "constant_field",
    "matrix_field",
    "sample_faces",
    "validate_field",
    "field_from_config",
    "dump_field_csv",
]


class GeometryError(ValueError):
    """Raised for invalid geometry configuration."""


class ValidationError(ValueError):
    """Raised when a coefficient field violates its structural assumptions."""


def wrap_to_cell(y: np.ndarray) -> np.ndarray:
    """Map coordinates into the fundamental cell [-pi, pi) per axis."""
    return np.mod(np.asarray(y, dtype=float) + math.pi, TWO_PI) - math.pi


@dataclass(frozen=True)
class Box:
    """Axis-aligned half-open box [lo, hi) with a scalar coefficient value."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    value: float

    def __post_init__(self) -> None:
        if len(self.lo) != len(self.hi):
            raise GeometryError("box lo/hi dimension mismatch")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise GeometryError(f"box has empty extent: lo={self.lo}, hi={self.hi}")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def volume(self) -> float:
        return float(np.prod([h - l for l, h in zip(self.lo, self.hi)]))

    def contains(self, y: np.ndarray) -> np.ndarray:
        """Vectorized membership test; y has shape (..., dim)."""
        y = np.asarray(y)
        inside = np.ones(y.shape[:-1], dtype=bool)
        for j, (lo, hi) in enumerate(zip(self.lo, self.hi)):
            inside &= (y[..., j] >= lo) & (y[..., j] < hi)
        return inside


class CoefficientField:
    """Periodic symmetric-matrix-valued coefficient a_Y on the unit cell.

    The evaluator acts on wrapped coordinates; periodicity is built in.
    `gamma` is the declared ellipticity bound.  Symmetry flags let the cell
    solver skip tensor components that vanish identically.
    """

    def __init__(
        self,
        dim: int,
        matrix_eval: Callable[[np.ndarray], np.ndarray],
        gamma: float,
        *,
        scalar_eval: Callable[[np.ndarray], np.ndarray] | None = None,
        even_symmetric: bool = False,
        axis_exchange: bool = False,
        jumps: Sequence[Sequence[float]] | None = None,
        boxes: Sequence[Box] | None = None,
        background: float | None = None,
        name: str = "custom",
    ):
        if dim not in (1, 2, 3):
            raise GeometryError(f"dimension must be 1, 2 or 3, got {dim}")
        if gamma <= 0:
            raise GeometryError(f"ellipticity bound must be positive, got {gamma}")
        self.dim = dim
        self.gamma = float(gamma)
        self.even_symmetric = even_symmetric
        self.axis_exchange = axis_exchange
        self.name = name
        self._matrix_eval = matrix_eval
        self._scalar_eval = scalar_eval
        self.jumps: tuple[tuple[float, ...], ...] = tuple(
            tuple(sorted(set(js))) for js in (jumps if jumps is not None else [()] * dim)
        )
        self.boxes = tuple(boxes) if boxes is not None else None
        self.background = background

    @property
    def is_scalar(self) -> bool:
        return self._scalar_eval is not None

    def __call__(self, y: np.ndarray) -> np.ndarray:
        """Evaluate the matrix at points y (..., dim) -> (..., dim, dim)."""
        return self._matrix_eval(wrap_to_cell(y))

    def scalar(self, y: np.ndarray) -> np.ndarray:
        """Evaluate the scalar multiplier for scalar-times-identity fields."""
        if self._scalar_eval is None:
            raise GeometryError(f"field '{self.name}' is not scalar-times-identity")
        return self._scalar_eval(wrap_to_cell(y))

    def diagonal(self, y: np.ndarray) -> np.ndarray:
        """Diagonal entries a_jj at points y; shape (..., dim)."""
        if self._scalar_eval is not None:
            s = self.scalar(y)
            return np.repeat(s[..., None], self.dim, axis=-1)
        m = self(y)
        return np.diagonal(m, axis1=-2, axis2=-1)

    def is_diagonal(self, probes: int = 32) -> bool:
        """Check off-diagonal entries vanish at a deterministic probe set."""
        if self._scalar_eval is not None:
            return True
        pts = _lattice_points(probes, self.dim)
        m = self(pts)
        off = m - np.eye(self.dim) * np.diagonal(m, axis1=-2, axis2=-1)[..., None, :]
        # keep only the diagonal part and compare
        d = np.diagonal(m, axis1=-2, axis2=-1)
        md = np.zeros_like(m)
        ii = np.arange(self.dim)
        md[..., ii, ii] = d
        return bool(np.max(np.abs(m - md)) < 1e-14)

    def analytic_mean(self) -> float:
        """Cell average of the scalar value, exact for piecewise-constant fields."""
        if self.boxes is None or self.background is None:
            raise GeometryError("analytic mean requires a piecewise-constant field")
        return _piecewise_mean(self.boxes, self.background, self.dim)


def _piecewise_mean(boxes: Sequence[Box], background: float, dim: int) -> float:
    """Exact mean of a first-match piecewise-constant box arrangement."""
    cell_vol = TWO_PI**dim
    mean = background
    covered: list[Box] = []
    for b in boxes:
        vol = b.volume() - _overlap_volume(b, covered)
        mean += (b.value - background) * vol / cell_vol
        covered.append(b)
    return mean


def _overlap_volume(b: Box, earlier: Sequence[Box]) -> float:
    """Volume of b already claimed by earlier boxes (inclusion-exclusion)."""
    total = 0.0
    for r in range(1, len(earlier) + 1):
        for combo in combinations(earlier, r):
            inter = _intersect_all((b, *combo))
            if inter > 0:
                total += (-1) ** (r + 1) * inter
    return total


def _intersect_all(boxes: Sequence[Box]) -> float:
    vol = 1.0
    for j in range(boxes[0].dim):
        lo = max(b.lo[j] for b in boxes)
        hi = min(b.hi[j] for b in boxes)
        if hi <= lo:
            return 0.0
        vol *= hi - lo
    return vol


def _lattice_points(count: int, dim: int) -> np.ndarray:
    """Deterministic low-discrepancy points in Y (additive golden lattice)."""
    alphas = {1: [0.6180339887498949], 2: [0.7548776662466927, 0.5698402909980532],
              3: [0.8191725133961645, 0.6710436067037893, 0.5497004779019703]}[dim]
    i = np.arange(1, count + 1)[:, None]
    frac = np.mod(i * np.asarray(alphas)[None, :], 1.0)
    return (frac - 0.5) * TWO_PI


def piecewise_constant_field(
    boxes: Sequence[Box],
    background: float,
    *,
    dim: int = 2,
    offset: float = 0.0,
    mean_shift: bool = False,
    even_symmetric: bool | None = None,
    axis_exchange: bool | None = None,
    name: str = "custom",
) -> CoefficientField:
    """Scalar-times-identity field from half-open boxes over a background.

    Boxes are tested in order; the first containing box wins.  With
    ``mean_shift`` the analytic cell mean is subtracted and ``offset``
    added, keeping downstream tables free of quadrature error.
    """
    boxes = tuple(boxes)
    for b in boxes:
        if b.dim != dim:
            raise GeometryError(f"box dimension {b.dim} != field dimension {dim}")
    shift = offset - (_piecewise_mean(boxes, background, dim) if mean_shift else 0.0)
    boxes = tuple(Box(b.lo, b.hi, b.value + shift) for b in boxes)
    background = background + shift

    gamma = min([b.value for b in boxes] + [background])
    if gamma <= 0:
        raise GeometryError(f"piecewise field is not positive: min value {gamma}")

    def scalar_eval(y: np.ndarray) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        out = np.full(y.shape[:-1], background)
        unclaimed = np.ones(y.shape[:-1], dtype=bool)
        for b in boxes:
            hit = b.contains(y) & unclaimed
            out[hit] = b.value
            unclaimed &= ~hit
        return out

    def matrix_eval(y: np.ndarray) -> np.ndarray:
        s = scalar_eval(y)
        return s[..., None, None] * np.eye(dim)

    jumps = _box_jumps(boxes, dim)
    if even_symmetric is None:
        even_symmetric = _boxes_even_symmetric(boxes)
    if axis_exchange is None:
        axis_exchange = dim == 2 and _boxes_axis_exchange(boxes)
    return CoefficientField(
        dim,
        matrix_eval,
        gamma,
        scalar_eval=scalar_eval,
        even_symmetric=even_symmetric,
        axis_exchange=axis_exchange,
        jumps=jumps,
        boxes=boxes,
        background=background,
        name=name,
    )


def _box_jumps(boxes: Sequence[Box], dim: int) -> list[list[float]]:
    """Candidate jump hyperplanes per axis (box faces interior to the cell)."""
    jumps: list[set[float]] = [set() for _ in range(dim)]
    for b in boxes:
        for j in range(dim):
            for c in (b.lo[j], b.hi[j]):
                if -math.pi < c < math.pi:
                    jumps[j].add(c)
                # a face at -pi is only a jump if the box does not wrap around
                elif c == -math.pi and b.hi[j] < math.pi:
                    jumps[j].add(c)
    return [sorted(js) for js in jumps]


def _boxes_even_symmetric(boxes: Sequence[Box], tol: float = 1e-12) -> bool:
    """True if the arrangement is invariant under each axis reflection."""
    for j in range(boxes[0].dim if boxes else 0):
        for b in boxes:
            lo = list(b.lo)
            hi = list(b.hi)
            lo[j], hi[j] = -b.hi[j], -b.lo[j]
            if not _box_in_set(Box(tuple(lo), tuple(hi), b.value), boxes, tol):
                return False
    return True


def _boxes_axis_exchange(boxes: Sequence[Box], tol: float = 1e-12) -> bool:
    for b in boxes:
        swapped = Box((b.lo[1], b.lo[0]), (b.hi[1], b.hi[0]), b.value)
        if not _box_in_set(swapped, boxes, tol):
            return False
    return True


def _box_in_set(b: Box, boxes: Sequence[Box], tol: float) -> bool:
    for other in boxes:
        if (
            abs(other.value - b.value) < tol
            and all(abs(x - y) < tol for x, y in zip(other.lo, b.lo))
            and all(abs(x - y) < tol for x, y in zip(other.hi, b.hi))
        ):
            return True
    return False


def constant_field(value: float | np.ndarray, dim: int = 2) -> CoefficientField:
    """Homogeneous field; scalar value or constant symmetric matrix."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        c = float(arr)
        if c <= 0:
            raise GeometryError("constant coefficient must be positive")
        return piecewise_constant_field(
            [], c, dim=dim, even_symmetric=True, axis_exchange=True, name=f"constant({c})"
        )
    if arr.shape != (dim, dim) or not np.allclose(arr, arr.T):
        raise GeometryError("constant matrix must be symmetric (dim, dim)")
    eigs = np.linalg.eigvalsh(arr)
    if eigs[0] <= 0:
        raise GeometryError("constant matrix must be positive definite")

    def matrix_eval(y: np.ndarray) -> np.ndarray:
        y = np.atleast_2d(y)
        return np.broadcast_to(arr, y.shape[:-1] + (dim, dim)).copy()

    return CoefficientField(dim, matrix_eval, float(eigs[0]), name="constant-matrix")


def matrix_field(
    fn: Callable[[np.ndarray], np.ndarray],
    dim: int,
    gamma: float,
    **kwargs,
) -> CoefficientField:
    """Wrap a user evaluator y (..., dim) -> (..., dim, dim)."""
    return CoefficientField(dim, fn, gamma, **kwargs)


def builtin_geometry(name: str) -> CoefficientField:
    """The three built-in piecewise-constant geometries.

    ``rect``     : high-contrast rectangle with subtracted mean,
                   a = 0.5 + b - <b>, b = 1.6 on [-11pi/13, 11pi/13] x [-pi/3, pi/3], else 0.2.
    ``cross``    : value 2 on a symmetric cross of two overlapping bars, 0.2 outside.
    ``laminate`` : value 2 on the horizontal band |y2| <= 2pi/5, 0.2 outside.
    """
    if name == "rect":
        box = Box((-11 * math.pi / 13, -math.pi / 3), (11 * math.pi / 13, math.pi / 3), 1.6)
        return piecewise_constant_field(
            [box], 0.2, offset=0.5, mean_shift=True,
            even_symmetric=True, axis_exchange=False, name="rect",
        )
    if name == "cross":
        b1 = Box((-7 * math.pi / 9, -2 * math.pi / 9), (7 * math.pi / 9, 2 * math.pi / 9), 2.0)
        b2 = Box((-2 * math.pi / 9, -7 * math.pi / 9), (2 * math.pi / 9, 7 * math.pi / 9), 2.0)
        return piecewise_constant_field(
            [b1, b2], 0.2, even_symmetric=True, axis_exchange=True, name="cross"
        )
    if name == "laminate":
        band = Box((-math.pi, -2 * math.pi / 5), (math.pi, 2 * math.pi / 5), 2.0)
        return piecewise_constant_field(
            [band], 0.2, even_symmetric=True, axis_exchange=False, name="laminate"
        )
    raise GeometryError(f"unknown geometry '{name}' (expected rect, cross or laminate)")


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class CellGrid:
    """Uniform periodic grid on the unit cell Y = (-pi, pi)^n.

    Nodes sit at -pi + m*h_j; the node at +pi is identified with -pi.
    """

    shape: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(n < 2 for n in self.shape):
            raise GeometryError(f"cell grid needs >= 2 nodes per axis, got {self.shape}")

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(TWO_PI / n for n in self.shape)

    @property
    def node_count(self) -> int:
        return int(np.prod(self.shape))

    def axis(self, j: int) -> np.ndarray:
        return -math.pi + self.spacing[j] * np.arange(self.shape[j])

    def node_mesh(self) -> np.ndarray:
        axes = [self.axis(j) for j in range(self.dim)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def face_midpoints(self, j: int) -> np.ndarray:
        """Midpoints of the faces in direction j; same shape as the node grid."""
        pts = self.node_mesh()
        pts[..., j] += 0.5 * self.spacing[j]
        return pts


@dataclass(frozen=True)
class DomainGrid:
    """One-quadrant rectangular grid [0, L1] x ... with boundary tags.

    Nodes at m*h_j for m = 0..N_j inclusive.  Coordinate-axis sides carry
    homogeneous Neumann conditions, the outer sides homogeneous Dirichlet.
    """

    extents: tuple[float, ...]
    spacing: tuple[float, ...]
    bc_low: tuple[str, ...] = dataclass_field(default=())
    bc_high: tuple[str, ...] = dataclass_field(default=())

    def __post_init__(self) -> None:
        dim = len(self.extents)
        if len(self.spacing) != dim:
            raise GeometryError("extents/spacing dimension mismatch")
        for L, h in zip(self.extents, self.spacing):
            if h <= 0 or L <= 0:
                raise GeometryError("extents and spacings must be positive")
            ratio = L / h
            if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
                raise GeometryError(f"extent {L} is not an integer multiple of spacing {h}")
        if not self.bc_low:
            object.__setattr__(self, "bc_low", ("neumann",) * dim)
        if not self.bc_high:
            object.__setattr__(self, "bc_high", ("dirichlet",) * dim)
        for tag in (*self.bc_low, *self.bc_high):
            if tag not in ("neumann", "dirichlet"):
                raise GeometryError(f"unknown boundary tag '{tag}'")

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def shape(self) -> tuple[int, ...]:
        """Node counts per axis, boundary nodes included."""
        return tuple(int(round(L / h)) + 1 for L, h in zip(self.extents, self.spacing))

    def axis(self, j: int) -> np.ndarray:
        return self.spacing[j] * np.arange(self.shape[j])

    def node_mesh(self) -> np.ndarray:
        axes = [self.axis(j) for j in range(self.dim)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def face_midpoints(self, j: int) -> np.ndarray:
        """Midpoints of faces in direction j; axis j has one fewer entry."""
        axes = [self.axis(i) for i in range(self.dim)]
        axes[j] = axes[j][:-1] + 0.5 * self.spacing[j]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


@dataclass(frozen=True)
class PeriodicBox:
    """Fully periodic rectangular grid used by test harness runs."""

    extents: tuple[float, ...]
    shape: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.extents, self.shape))

    def axis(self, j: int) -> np.ndarray:
        return self.spacing[j] * np.arange(self.shape[j])

    def node_mesh(self) -> np.ndarray:
        axes = [self.axis(j) for j in range(self.dim)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def face_midpoints(self, j: int) -> np.ndarray:
        pts = self.node_mesh()
        pts[..., j] += 0.5 * self.spacing[j]
        return pts


# ---------------------------------------------------------------------------
# sampling


@dataclass
class FaceCoefficients:
    """Per-face diagonal coefficient values for conservative flux stencils."""

    values: tuple[np.ndarray, ...]
    spacing: tuple[float, ...]
    conforming: bool
    message: str = ""


def sample_faces(
    field: CoefficientField,
    grid: CellGrid | DomainGrid | PeriodicBox,
    eps: float = 1.0,
    origin: Sequence[float] | None = None,
) -> FaceCoefficients:
    """Sample a(x) = a_Y(x/eps + origin) at face midpoints, one array per axis.

    Direction-j faces carry the a_jj entry used by the flux stencil.  For
    piecewise-constant fields a non-conforming grid is flagged (values are
    still returned).
    """
    if eps <= 0:
        raise GeometryError("eps must be positive")
    dim = field.dim
    if grid.dim != dim:
        raise GeometryError("grid/field dimension mismatch")
    if origin is None:
        origin = np.zeros(dim)
    origin = np.asarray(origin, dtype=float)

    values = []
    for j in range(dim):
        pts = grid.face_midpoints(j) / eps + origin
        values.append(np.ascontiguousarray(field.diagonal(pts)[..., j]))

    conforming, message = _check_conformity(field, grid, eps, origin)
    return FaceCoefficients(tuple(values), grid.spacing, conforming, message)


def _check_conformity(field, grid, eps, origin) -> tuple[bool, str]:
    """Jump hyperplanes must coincide with grid node lines under x -> x/eps + y0."""
    if field.boxes is None:
        return True, ""
    node0 = -math.pi if isinstance(grid, CellGrid) else 0.0
    for j in range(field.dim):
        h = grid.spacing[j]
        period_cells = TWO_PI * eps / h
        if field.jumps[j] and abs(period_cells - round(period_cells)) > 1e-9 * period_cells:
            return False, f"axis {j}: period {TWO_PI * eps} is not an integer number of cells"
        for c in field.jumps[j]:
            x = eps * (c - origin[j])
            steps = (x - node0) / h
            if abs(steps - round(steps)) > 1e-9 * max(1.0, abs(steps)):
                return False, f"axis {j}: jump line at y={c} does not lie on a grid line"
    return True, ""


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    ok: bool
    gamma_found: float
    violations: list[str]

    def __bool__(self) -> bool:
        return self.ok


def validate_field(field: CoefficientField, samples: int = 1000) -> ValidationReport:
    """Check symmetry, periodicity and ellipticity at quasi-random points.

    Reports the worst ellipticity constant found; any violation yields a
    failing report listing the offending point.
    """
    if samples < 1:
        raise GeometryError("samples must be >= 1")
    pts = _lattice_points(samples, field.dim)
    mats = field(pts)
    violations: list[str] = []

    asym = np.abs(mats - np.swapaxes(mats, -1, -2)).max(axis=(-1, -2))
    worst = int(np.argmax(asym))
    if asym[worst] > 0.0:
        violations.append(f"symmetry violated at y={pts[worst]}: |a_ij - a_ji| = {asym[worst]:.3e}")

    for j in range(field.dim):
        shifted = pts.copy()
        shifted[:, j] += TWO_PI
        diff = np.abs(field(shifted) - mats).max(axis=(-1, -2))
        worst = int(np.argmax(diff))
        if diff[worst] > 1e-12:
            violations.append(f"periodicity violated along axis {j} at y={pts[worst]}")

    eigs = np.linalg.eigvalsh(mats)[..., 0]
    rng = np.random.default_rng(20260810)
    xi = rng.normal(size=(samples, field.dim))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    quad = np.einsum("si,sij,sj->s", xi, mats, xi)
    gamma_found = float(min(eigs.min(), quad.min()))
    worst = int(np.argmin(eigs))
    if gamma_found <= 0:
        violations.append(f"ellipticity violated at y={pts[worst]}: min eigenvalue {gamma_found:.3e}")

    if field.even_symmetric:
        for j in range(field.dim):
            mirrored = pts.copy()
            mirrored[:, j] *= -1.0
            diff = np.abs(field(mirrored) - mats).max(axis=(-1, -2))
            # points on jump lines legitimately disagree under the half-open
            # convention; skip samples within one part in 1e9 of a jump
            mask = np.ones(samples, dtype=bool)
            for c in field.jumps[j]:
                mask &= np.abs(np.abs(pts[:, j]) - abs(c)) > 1e-9
            bad = diff > 1e-12
            bad &= mask
            if np.any(bad):
                worst = int(np.argmax(diff * mask))
                violations.append(f"even symmetry violated along axis {j} at y={pts[worst]}")
                break

    return ValidationReport(not violations, gamma_found, violations)


# ---------------------------------------------------------------------------
# config and export


def field_from_config(cfg: dict) -> CoefficientField:
    """Build a field from a parsed geometry table.

    Keys: ``geometry`` = rect | cross | laminate | custom; for custom:
    ``boxes`` (list of {lo, hi, value}), ``background``, optional
    ``mean_shift``, ``offset``, ``dim``, ``even_symmetric``, ``axis_exchange``.
    """
    try:
        kind = cfg["geometry"]
    except KeyError:
        raise GeometryError("missing config key 'geometry'") from None
    if kind in ("rect", "cross", "laminate"):
        return builtin_geometry(kind)
    if kind != "custom":
        raise GeometryError(f"unknown geometry '{kind}'")
    try:
        raw_boxes = cfg["boxes"]
        background = float(cfg["background"])
    except KeyError as err:
        raise GeometryError(f"missing config key '{err.args[0]}' for custom geometry") from None
    dim = int(cfg.get("dim", 2))
    boxes = [Box(tuple(map(float, b["lo"])), tuple(map(float, b["hi"])), float(b["value"]))
             for b in raw_boxes]
    return piecewise_constant_field(
        boxes,
        background,
        dim=dim,
        offset=float(cfg.get("offset", 0.0)),
        mean_shift=bool(cfg.get("mean_shift", False)),
        even_symmetric=cfg.get("even_symmetric"),
        axis_exchange=cfg.get("axis_exchange"),
        name="custom",
    )


def dump_field_csv(field: CoefficientField, grid: CellGrid, path) -> None:
    """Write node samples as CSV with columns y1,y2,a11,a12,a22 (2D)."""
    if field.dim != 2:
        raise GeometryError("CSV dump is implemented for 2D fields")
    pts = grid.node_mesh()
    mats = field(pts)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y1", "y2", "a11", "a12", "a22"])
        flat_pts = pts.reshape(-1, 2)
        flat_m = mats.reshape(-1, 2, 2)
        for p, m in zip(flat_pts, flat_m):
            writer.writerow([f"{p[0]:.16g}", f"{p[1]:.16g}",
                             f"{m[0, 0]:.16g}", f"{m[0, 1]:.16g}", f"{m[1, 1]:.16g}"])
