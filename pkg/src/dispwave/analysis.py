"""Post-processing: error norms, rate fits, elliptic coordinates, ray
extraction, the moving frame, and the KdV shape comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from typing import Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .solvers import KdvProfile, WaveState, simulate_kdv
from .tensors import polar_angle

__all__ = [
    "RayProfile",
    "ConvergenceStudy",
    "RateFit",
    "ContractViolation",
    "l2_error",
    "fit_rate",
    "elliptic_coords",
    "elliptic_point",
    "extract_ray",
    "moving_frame",
    "kdv_compare",
    "trailing_mass",
]


class ContractViolation(ValueError):
    """Inputs violate a documented precondition."""


# ---------------------------------------------------------------------------
# error norms and rates


def _interpolator(state: WaveState) -> RegularGridInterpolator:
    axes = [state.grid.axis(j) for j in range(len(state.grid.spacing))]
    return RegularGridInterpolator(axes, state.u_now, method="linear",
                                   bounds_error=False, fill_value=0.0)


def l2_error(u: WaveState, w: WaveState) -> float:
    """L2 norm of u - w over the overlap, w interpolated onto u's grid.

    The states must carry the same time stamp within one time step.
    """
    if abs(u.time - w.time) > max(u.dt, w.dt) * (1.0 + 1e-9):
        raise ContractViolation(
            f"time stamps differ by {abs(u.time - w.time):.3g} > one step"
        )
    dim = len(u.grid.spacing)
    lim = [min(u.grid.axis(j)[-1], w.grid.axis(j)[-1]) for j in range(dim)]
    axes = [u.grid.axis(j) for j in range(dim)]
    masks = [ax <= lim[j] + 1e-12 for j, ax in enumerate(axes)]
    sub_axes = [ax[m] for ax, m in zip(axes, masks)]
    pts = np.stack(np.meshgrid(*sub_axes, indexing="ij"), axis=-1)
    u_sub = u.u_now[np.ix_(*[np.flatnonzero(m) for m in masks])]
    w_vals = _interpolator(w)(pts.reshape(-1, dim)).reshape(u_sub.shape)
    vol = float(np.prod(u.grid.spacing))
    return math.sqrt(float(np.sum((u_sub - w_vals) ** 2)) * vol)


@dataclass
class RateFit:
    slope: float
    intercept: float
    residual: float


@dataclass
class ConvergenceStudy:
    """(eps, final time, error) triples with the fitted power law."""

    entries: list[tuple[float, float, float]] = dataclass_field(default_factory=list)

    def add(self, eps: float, t_final: float, error: float) -> None:
        if error <= 0.0:
            raise ContractViolation("errors must be positive")
        self.entries.append((eps, t_final, error))

    def rate(self) -> RateFit:
        return fit_rate([(e, err) for e, _, err in self.entries])


def fit_rate(points: Sequence[tuple[float, float]]) -> RateFit:
    """Least-squares slope of log(error) against log(eps)."""
    if len(points) < 3:
        raise ContractViolation("rate fit needs at least 3 points")
    x = np.log([p[0] for p in points])
    y = np.log([p[1] for p in points])
    coeffs, res, *_ = np.polyfit(x, y, 1, full=True)
    residual = float(res[0]) if len(res) else 0.0
    return RateFit(float(coeffs[0]), float(coeffs[1]), residual)


# ---------------------------------------------------------------------------
# elliptic coordinates and rays


def elliptic_coords(x: np.ndarray, a_diag: Sequence[float]) -> tuple[float, float]:
    """Invert x = (r sqrt(a1) cos phi, r sqrt(a2) sin phi) on the quadrant.

    Returns r >= 0 and phi in [0, pi/2]; the origin maps to (0, 0).
    """
    a1, a2 = a_diag
    if a1 <= 0 or a2 <= 0:
        raise ContractViolation("a1, a2 must be positive")
    u = x[0] / math.sqrt(a1)
    v = x[1] / math.sqrt(a2)
    r = math.hypot(u, v)
    if r == 0.0:
        return 0.0, 0.0
    phi = math.atan2(v, u)
    return r, float(np.clip(phi, 0.0, math.pi / 2.0))


def elliptic_point(r: float, phi: float, a_diag: Sequence[float]) -> np.ndarray:
    a1, a2 = a_diag
    return np.array([r * math.sqrt(a1) * math.cos(phi), r * math.sqrt(a2) * math.sin(phi)])


@dataclass
class RayProfile:
    """Field samples along one elliptic-frame ray."""

    phi: float
    phi_polar: float
    r: np.ndarray
    values: np.ndarray
    time: float
    eps: float = 1.0
    truncated: bool = False
    derivative: np.ndarray | None = None


def extract_ray(
    state: WaveState,
    phi: float,
    a_diag: Sequence[float],
    r: np.ndarray,
    *,
    eps: float = 1.0,
) -> RayProfile:
    """Bilinear samples of the field at (r sqrt(a1) cos, r sqrt(a2) sin) phi."""
    r = np.asarray(r, dtype=float)
    if np.any(np.diff(r) <= 0.0):
        raise ContractViolation("radii must be strictly increasing")
    pts = np.stack(
        [r * math.sqrt(a_diag[0]) * math.cos(phi), r * math.sqrt(a_diag[1]) * math.sin(phi)],
        axis=-1,
    )
    hi = [state.grid.axis(j)[-1] for j in range(2)]
    lo = [state.grid.axis(j)[0] for j in range(2)]
    inside = np.all((pts >= lo) & (pts <= hi), axis=-1)
    truncated = not bool(inside.all())
    vals = _interpolator(state)(pts[inside])
    return RayProfile(
        phi,
        float(polar_angle(phi, a_diag[0], a_diag[1])),
        r[inside],
        vals,
        state.time,
        eps,
        truncated,
    )


def moving_frame(
    state: WaveState,
    phi: float,
    eps: float,
    a_diag: Sequence[float],
    r_window: tuple[float, float] = (-10.0, 10.0),
    samples: int = 257,
) -> RayProfile:
    """Front-centered ray profile W(r) = w(r + t/eps^2) at slow time t.

    The state's own time is the physical time t/eps^2.  Radii mapping to
    negative physical radius contribute 0; the returned profile also
    carries U = dW/dr by centered differences.
    """
    t_slow = state.time * eps * eps
    r = np.linspace(r_window[0], r_window[1], samples)
    R = r + state.time
    vals = np.zeros_like(r)
    keep = R >= 0.0
    pts = np.stack(
        [
            R[keep] * math.sqrt(a_diag[0]) * math.cos(phi),
            R[keep] * math.sqrt(a_diag[1]) * math.sin(phi),
        ],
        axis=-1,
    )
    hi = [state.grid.axis(j)[-1] for j in range(2)]
    lo = [state.grid.axis(j)[0] for j in range(2)]
    inside = np.all((pts >= lo) & (pts <= hi), axis=-1)
    truncated = not bool(inside.all())
    sub = np.zeros(int(keep.sum()))
    sub[inside] = _interpolator(state)(pts[inside])
    vals[keep] = sub
    dr = r[1] - r[0]
    deriv = np.gradient(vals, dr, edge_order=2)
    return RayProfile(
        phi,
        float(polar_angle(phi, a_diag[0], a_diag[1])),
        r,
        vals,
        t_slow,
        eps,
        truncated,
        deriv,
    )


def kdv_compare(
    profile_t1: RayProfile,
    kappa: float,
    profile_t2: RayProfile,
    *,
    pad_factor: int = 4,
) -> tuple[np.ndarray, float]:
    """Evolve the extracted U(t1) to t2 and measure the L2 discrepancy.

    Both profiles must carry the derivative channel (U = dW/dr) on the
    same radius window.
    """
    if profile_t1.derivative is None or profile_t2.derivative is None:
        raise ContractViolation("profiles must carry the derivative channel")
    if profile_t1.time >= profile_t2.time:
        raise ContractViolation("profiles must be ordered in time")
    if profile_t1.time <= 0.0:
        raise ContractViolation("slow times must be positive")
    r = profile_t1.r
    n = r.size
    dr = float(r[1] - r[0])
    pad = (pad_factor - 1) * n // 2
    big = np.concatenate([np.zeros(pad), profile_t1.derivative, np.zeros(pad)])
    r_big = (np.arange(big.size) - pad) * dr + r[0]
    evolved = simulate_kdv(
        kappa, KdvProfile(r_big, big, profile_t1.time), profile_t1.time, [profile_t2.time]
    )[0]
    predicted = evolved.values[pad : pad + n]
    diff = predicted - profile_t2.derivative
    return predicted, math.sqrt(float(np.sum(diff**2)) * dr)


def trailing_mass(
    profile: RayProfile, front_time: float, window: tuple[float, float] = (0.3, 0.9)
) -> float:
    """L2 mass of the profile over the trailing window r in [w0 t, w1 t]."""
    lo, hi = window[0] * front_time, window[1] * front_time
    sel = (profile.r >= lo) & (profile.r <= hi)
    if not np.any(sel):
        raise ContractViolation("trailing window contains no samples")
    dr = float(profile.r[1] - profile.r[0])
    return float(np.sum(profile.values[sel] ** 2) * dr)
