import math
import warnings

import numpy as np
import pytest

from dispwave import builtin_geometry, constant_field
from dispwave.geometry import GeometryError, sample_faces
from dispwave.solvers import (
    InitialData,
    InstabilityError,
    KdvProfile,
    SimConfig,
    default_domain_extent,
    discrete_energy,
    dispersion_omega,
    gaussian_fourier_profile,
    reference_veps,
    simulate_dispersive,
    simulate_heterogeneous,
    simulate_kdv,
)
from dispwave.tensors import EffectiveModel

from conftest import rk4_kdv


class CosineMode(InitialData):
    """Single Fourier mode initial data for periodic-box tests."""

    def __init__(self, k):
        super().__init__(kind="gaussian")
        self.k = np.asarray(k, dtype=float)

    def evaluate(self, points):
        return np.cos(points @ self.k)


def symmetric_model(a1, a2, al1, al2, be):
    C = np.zeros((2, 2, 2, 2))
    C[0, 0, 0, 0], C[1, 1, 1, 1] = al1, al2
    for idx in [(0, 0, 1, 1), (1, 1, 0, 0), (0, 1, 0, 1), (1, 0, 1, 0),
                (0, 1, 1, 0), (1, 0, 0, 1)]:
        C[idx] = be
    return EffectiveModel.from_tensors(np.diag([a1, a2]), C)


# ----------------------------------------------------------- heterogeneous


def test_zero_initial_data_stays_zero():
    class Zero(InitialData):
        def evaluate(self, points):
            return np.zeros(points.shape[:-1])

    cfg = SimConfig(eps=1.0, t_final=0.5, extents=(2.0, 2.0), spacing=(0.1, 0.1),
                    dt=0.01, initial=Zero())
    states = simulate_heterogeneous(constant_field(1.0), cfg, [0.5])
    assert np.all(states[0].u_now == 0.0)


def test_standing_mode_frequency():
    # single periodic mode: the discrete solution is exactly a cosine in time
    L, N = 2.0, 64
    k = np.array([2 * math.pi / L, 0.0])
    dt = 0.005
    cfg = SimConfig(eps=1.0, t_final=1.0, extents=(L, L), spacing=(L / N, L / N),
                    dt=dt, boundary="periodic", initial=CosineMode(k))
    states = simulate_heterogeneous(constant_field(1.0), cfg, [0.5, 1.0])
    grid = cfg.build_grid()
    base = np.cos(grid.node_mesh() @ k)
    for state in states:
        c = np.vdot(base, state.u_now).real / np.vdot(base, base).real
        h = L / N
        lam = (2 - 2 * math.cos(k[0] * h)) / h**2
        omega = 2.0 / dt * math.asin(0.5 * dt * math.sqrt(lam))
        assert c == pytest.approx(math.cos(omega * state.time), abs=1e-10)


def test_energy_conserved_over_1e4_steps():
    L, N = 2.0, 32
    k = np.array([2 * math.pi / L, 2 * math.pi / L])
    cfg = SimConfig(eps=1.0, t_final=10.0, extents=(L, L), spacing=(L / N, L / N),
                    dt=0.001, boundary="periodic", initial=CosineMode(k))
    field = constant_field(1.0)
    states = simulate_heterogeneous(field, cfg, [0.001, 10.0])
    fc = sample_faces(field, cfg.build_grid(), 1.0)
    e0 = discrete_energy(states[0], fc.values)
    e1 = discrete_energy(states[1], fc.values)
    assert abs(e1 - e0) < 1e-10 * abs(e0)


def test_cfl_guard():
    cfg = SimConfig(eps=0.1, t_final=1.0, extents=(1.0, 1.0), spacing=(0.1, 0.1),
                    dt=0.05)
    with pytest.raises(GeometryError, match="guard"):
        simulate_heterogeneous(constant_field(1.0), cfg, [1.0])


def test_instability_guard_reports_step():
    # a huge coefficient makes dt = 0.01 unstable while passing the h/4 guard
    cfg = SimConfig(eps=1.0, t_final=2.0, extents=(2.0, 2.0), spacing=(0.2, 0.2),
                    dt=0.01, boundary="periodic")
    with pytest.raises(InstabilityError, match="step"):
        simulate_heterogeneous(constant_field(3000.0), cfg, [2.0])


def test_snapshot_outside_range():
    cfg = SimConfig(eps=1.0, t_final=1.0, extents=(1.0, 1.0), spacing=(0.1, 0.1), dt=0.01)
    with pytest.raises(GeometryError, match="snapshot"):
        simulate_heterogeneous(constant_field(1.0), cfg, [2.0])


def test_init_style_full_vs_half():
    cfg_h = SimConfig(eps=1.0, t_final=0.01, extents=(2.0, 2.0), spacing=(0.1, 0.1),
                      dt=0.01, init_style="half")
    cfg_f = SimConfig(eps=1.0, t_final=0.01, extents=(2.0, 2.0), spacing=(0.1, 0.1),
                      dt=0.01, init_style="full")
    field = constant_field(1.0)
    u_h = simulate_heterogeneous(field, cfg_h, [0.01])[0]
    u_f = simulate_heterogeneous(field, cfg_f, [0.01])[0]
    diff = u_f.u_now - u_h.u_now
    assert np.abs(diff).max() > 0.0
    # the full-step starter doubles the first Taylor correction
    assert np.abs(u_f.u_now - u_h.u_prev - 2 * (u_h.u_now - u_h.u_prev)).max() < 1e-15


def test_determinism_bit_identical():
    h = (2 * math.pi * 0.25 / 13, 2 * math.pi * 0.25 / 12)
    extents = (34 * h[0], 31 * h[1])
    cfg = SimConfig(eps=0.25, t_final=1.0, extents=extents, spacing=h)
    field = builtin_geometry("rect")
    a = simulate_heterogeneous(field, cfg, [1.0])[0]
    b = simulate_heterogeneous(field, cfg, [1.0])[0]
    assert np.array_equal(a.u_now, b.u_now)


def test_quadrant_equals_full_domain_restriction():
    # smooth even medium: the quadrant run with Neumann axes reproduces the
    # full-domain run restricted to the quadrant to rounding
    def smooth(y):
        y = np.atleast_2d(y)
        s = 1.0 + 0.4 * np.cos(y[..., 0]) * np.cos(y[..., 1])
        return s[..., None, None] * np.eye(2)

    from dispwave.geometry import matrix_field

    field = matrix_field(smooth, 2, gamma=0.6, even_symmetric=True)
    L, h, eps, T = 3.0, 0.1, 0.5, 1.5
    quad = SimConfig(eps=eps, t_final=T, extents=(L, L), spacing=(h, h), dt=0.01)
    uq = simulate_heterogeneous(field, quad, [T])[0]
    full = SimConfig(eps=eps, t_final=T, extents=(2 * L, 2 * L), spacing=(h, h),
                     dt=0.01, bc_low=("dirichlet", "dirichlet"),
                     domain_offset=(L, L))
    uf = simulate_heterogeneous(field, full, [T])[0]
    n = int(round(L / h))
    restricted = uf.u_now[n:, n:]
    assert np.abs(restricted - uq.u_now).max() < 1e-10


# ----------------------------------------------------------- dispersive


def test_dispersive_eps_zero_path_bitwise():
    model = EffectiveModel(np.diag([0.3, 0.2]), np.zeros((2,) * 4),
                           np.zeros((2, 2)), np.zeros((2,) * 4))
    base = dict(t_final=2.0, extents=(8.0, 8.0), spacing=(0.2, 0.2), dt=0.02)
    w_eps = simulate_dispersive(model, SimConfig(eps=0.7, **base), [2.0])[0]
    w_zero = simulate_dispersive(model, SimConfig(eps=0.0, **base), [2.0])[0]
    assert np.array_equal(w_eps.u_now, w_zero.u_now)


def test_dispersive_dispersion_relation():
    model = symmetric_model(0.8750, 0.3019, -1.9185, -0.0933, 0.1448)
    eps = 0.3
    L, N = 2 * math.pi, 64
    k = np.array([2.0, 1.0])
    cfg = SimConfig(eps=eps, t_final=3.0, extents=(L, L), spacing=(L / N, L / N),
                    dt=0.02, boundary="periodic", initial=CosineMode(k))
    states = simulate_dispersive(model, cfg, [0.02 * s for s in range(100, 131)])
    grid = cfg.build_grid()
    base = np.cos(grid.node_mesh() @ k)
    c = np.array([np.vdot(base, s.u_now).real / np.vdot(base, base).real for s in states])
    omegas = [
        math.acos(np.clip((c[i + 1] + c[i - 1]) / (2 * c[i]), -1, 1)) / cfg.dt
        for i in range(1, len(c) - 1)
        if abs(c[i]) > 0.3
    ]
    measured = float(np.mean(omegas))
    assert measured == pytest.approx(dispersion_omega(model, eps, k), rel=5e-3)


def test_dispersive_determinism():
    model = symmetric_model(0.27, 0.15, -0.35, -0.04, 0.028)
    cfg = SimConfig(eps=0.2, t_final=1.0, extents=(6.0, 6.0), spacing=(0.2, 0.2), dt=0.02)
    a = simulate_dispersive(model, cfg, [1.0])[0]
    b = simulate_dispersive(model, cfg, [1.0])[0]
    assert np.array_equal(a.u_now, b.u_now)


def test_dispersive_quadrant_matches_full_domain():
    model = symmetric_model(0.27, 0.15, -0.35, -0.04, 0.028)
    L, eps, T = 4.0, 0.3, 1.0
    quad = SimConfig(eps=eps, t_final=T, extents=(L, L), spacing=(0.2, 0.2), dt=0.02)
    wq = simulate_dispersive(model, quad, [T])[0]
    full = SimConfig(eps=eps, t_final=T, extents=(2 * L, 2 * L), spacing=(0.2, 0.2),
                     dt=0.02, bc_low=("dirichlet", "dirichlet"), domain_offset=(L, L))
    wf = simulate_dispersive(model, full, [T])[0]
    n = int(round(L / 0.2))
    assert np.abs(wf.u_now[n:, n:] - wq.u_now).max() < 1e-9


# ----------------------------------------------------------- reference v


def test_veps_at_time_zero_reproduces_data():
    prof = gaussian_fourier_profile(dim=2, kmax=16.0, n_per_axis=64)
    pts = np.array([[0.0, 0.0], [0.3, -0.2], [1.0, 0.5]])
    v = reference_veps(prof, np.eye(2), np.zeros((2,) * 4), 0.1, 0.0, pts)
    f = np.exp(-4.0 * np.sum(pts**2, axis=1))
    assert np.abs(v - f).max() < 1e-6


def test_veps_dalembert_1d():
    a = 0.7
    prof = gaussian_fourier_profile(dim=1, kmax=16.0, n_per_axis=600)
    xs = np.linspace(-3.0, 3.0, 41)[:, None]
    t = 1.5
    v = reference_veps(prof, np.array([[a]]), np.zeros((1, 1, 1, 1)), 0.0, t, xs)
    c = math.sqrt(a)
    exact = 0.5 * (np.exp(-4 * (xs[:, 0] - c * t) ** 2) + np.exp(-4 * (xs[:, 0] + c * t) ** 2))
    assert np.abs(v - exact).max() < 1e-6


def test_veps_cross_validates_dispersive_solver():
    # two independent dispersive computations agree within the O(eps^2 T)
    # closeness bound of the two model variants
    model = symmetric_model(0.2784, 0.1506, -0.369, -0.034, 0.032)
    eps, T = 0.1, 2.0
    cfg = SimConfig(eps=eps, t_final=T, extents=(8.0, 8.0), spacing=(0.2, 0.2), dt=0.02)
    w = simulate_dispersive(model, cfg, [T])[0]
    prof = gaussian_fourier_profile(dim=2, kmax=14.0, n_per_axis=200)
    xs = np.stack(np.meshgrid(np.arange(0, 3.01, 0.25), np.arange(0, 3.01, 0.25),
                              indexing="ij"), -1).reshape(-1, 2)
    v = reference_veps(prof, model.A, model.C, eps, w.time, xs)
    from dispwave.analysis import _interpolator

    wi = _interpolator(w)(xs)
    assert np.abs(wi - v).max() < 2.5 * eps**2 * T


def test_veps_warns_when_quadrature_too_coarse():
    prof = gaussian_fourier_profile(dim=2, kmax=12.0, n_per_axis=16)
    with pytest.warns(UserWarning, match="quadrature"):
        reference_veps(prof, np.eye(2), np.zeros((2,) * 4), 0.1, 50.0,
                       np.array([[0.0, 0.0]]))


def test_gaussian_profile_reconstructs_gaussian():
    prof = gaussian_fourier_profile(dim=2, kmax=16.0, n_per_axis=64)
    data = InitialData(kind="fourier-profile", profile=prof)
    pts = np.array([[0.0, 0.0], [0.5, 0.5]])
    assert np.abs(data.evaluate(pts) - np.exp(-4 * np.sum(pts**2, -1))).max() < 1e-6


# ----------------------------------------------------------- kdv


def test_kdv_decay_only():
    r = np.linspace(-50, 50, 512, endpoint=False)
    prof = KdvProfile(r, np.exp(-(r**2)), 1.0)
    out = simulate_kdv(0.0, prof, 1.0, [4.0])[0]
    assert np.abs(out.values - 0.5 * prof.values).max() < 1e-14


def test_kdv_mass_invariant():
    r = np.linspace(-400, 400, 4096, endpoint=False)
    prof = KdvProfile(r, np.exp(-(r**2)), 1.0)
    h = r[1] - r[0]
    masses = [
        math.sqrt(p.time) * float(np.sum(p.values)) * h
        for p in simulate_kdv(-1.0, prof, 1.0, [1.0, 5.0, 20.0, 100.0])
    ]
    assert max(abs(m - masses[0]) for m in masses) < 1e-10


def test_kdv_airy_tail_side():
    # kappa < 0 sends the oscillatory tail to the left of the pulse
    r = np.linspace(-200, 200, 2048, endpoint=False)
    prof = KdvProfile(r, np.exp(-(r**2)), 1.0)
    out = simulate_kdv(-1.0, prof, 1.0, [5.0])[0]
    left = float(np.sum(out.values[r < -2.0] ** 2))
    right = float(np.sum(out.values[r > 2.0] ** 2))
    assert left > 10.0 * right


def test_kdv_vs_rk4_oracle():
    r = np.linspace(-50, 50, 512, endpoint=False)
    u0 = np.exp(-(r**2))
    prof = KdvProfile(r, u0, 1.0)
    spectral = simulate_kdv(-1.0, prof, 1.0, [1.5])[0]
    oracle = rk4_kdv(-1.0, r, u0, 1.0, 1.5, dt=2.5e-4)
    h = r[1] - r[0]
    disc = math.sqrt(float(np.sum((spectral.values - oracle) ** 2)) * h)
    assert disc < 1e-6


def test_kdv_requires_positive_times():
    r = np.linspace(-10, 10, 64, endpoint=False)
    prof = KdvProfile(r, np.exp(-(r**2)), 1.0)
    with pytest.raises(ValueError):
        simulate_kdv(0.1, prof, 0.0, [1.0])
    with pytest.raises(ValueError):
        simulate_kdv(0.1, prof, 1.0, [-1.0])


def test_kdv_wraparound_warning():
    r = np.linspace(-3, 3, 64, endpoint=False)
    prof = KdvProfile(r, np.exp(-(r**2) / 16.0), 1.0)
    with pytest.warns(UserWarning, match="wraparound"):
        simulate_kdv(0.0, prof, 1.0, [2.0])


def test_default_domain_extent_rule():
    assert default_domain_extent(0.25, 10.0) == pytest.approx(1.25 * 0.5 * 10 + 10)
