# Dev pilot for the eps-convergence study (rect geometry), to be folded into
# the CLI pipeline.  Prints per-eps errors, the fitted rate, and the
# criterion-10 trailing-mass ratio for the eps = 0.1 run.
import math
import sys
import time

import numpy as np

from dispwave import builtin_geometry, CellGrid
from dispwave.cell import run_algorithm_AC
from dispwave.tensors import EffectiveModel, kappa_minimizer
from dispwave.solvers import SimConfig, simulate_heterogeneous, simulate_dispersive, default_domain_extent
from dispwave.analysis import l2_error, fit_rate, extract_ray, trailing_mass

CELLS = (13, 12)

field = builtin_geometry("rect")
res = run_algorithm_AC(field, CellGrid(CELLS))
a1, a2 = res.A[0, 0], res.A[1, 1]
al1, al2, be = res.C[0, 0, 0, 0], res.C[1, 1, 1, 1], res.C[0, 0, 1, 1]
print(f"matched coarse tensors: a1={a1:.4f} a2={a2:.4f} al1={al1:.4f} al2={al2:.4f} be={be:.4f}")
model = EffectiveModel.from_tensors(res.A, res.C)
print("decomposition:", model.metadata["decomposition"], " E11", model.E[0, 0], " E22", model.E[1, 1])

eps_list = [float(s) for s in sys.argv[1:]] or [0.2, 0.15, 0.1]
points = []
state01 = None
for eps in eps_list:
    T = 0.5 / eps**2
    h = (2 * math.pi * eps / CELLS[0], 2 * math.pi * eps / CELLS[1])
    L0 = default_domain_extent(max(a1, a2), T)
    ext_u = tuple(math.ceil(L0 / hj) * hj for hj in h)
    cfg_u = SimConfig(eps=eps, t_final=T, extents=ext_u, spacing=h)
    t0 = time.time()
    u = simulate_heterogeneous(field, cfg_u, [T])[0]
    tu = time.time() - t0
    ext_w = tuple(math.ceil(L0 / 0.2) * 0.2 for _ in range(2))
    cfg_w = SimConfig(eps=eps, t_final=T, extents=ext_w, spacing=(0.2, 0.2), dt=0.02)
    t0 = time.time()
    w = simulate_dispersive(model, cfg_w, [T])[0]
    tw = time.time() - t0
    err = l2_error(u, w)
    print(f"eps={eps}: grid {u.u_now.shape} T={T:.1f} err={err:.5f}  (u {tu:.0f}s, w {tw:.0f}s)")
    points.append((eps, err))
    if abs(eps - 0.1) < 1e-12:
        state01 = (u, w)

if len(points) >= 3:
    fit = fit_rate(points)
    print(f"fitted rate p = {fit.slope:.4f}")

if state01 is not None:
    u, w = state01
    ex = kappa_minimizer(a1, a2, al1, al2, be)
    t = u.time
    r = np.arange(0.0, 0.95 * t / min(1.0, 1.0), u.grid.spacing[0])
    r = np.arange(0.0, 0.95 * t, u.grid.spacing[0])
    for state, tag in [(u, "u"), (w, "w")]:
        p0 = extract_ray(state, 0.0, (a1, a2), r)
        pm = extract_ray(state, ex.phi_weak, (a1, a2), r)
        m0 = trailing_mass(p0, t)
        mm = trailing_mass(pm, t)
        print(f"{tag}: trailing mass phi=0: {m0:.3e}  phi_m: {mm:.3e}  ratio {m0/mm:.2f}")
