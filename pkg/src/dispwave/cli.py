"""Command-line entry point: coefficient tables, decomposition, band
structure, simulations, and the end-to-end reproduction pipelines.

Every run writes a JSON manifest next to its artifacts with the fully
resolved configuration, input hashes, solver residual summaries, and wall
time; re-running a subcommand from a manifest reproduces its outputs
bit-identically at a fixed worker count.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 acceptance-check failure (``reproduce --check``).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from .analysis import (
    ContractViolation,
    ConvergenceStudy,
    extract_ray,
    l2_error,
)
from .bloch import band_path, taylor_check
from .cell import (
    CompatibilityError,
    ConvergenceError,
    NumericalConsistencyError,
    run_algorithm_AC,
)
from .geometry import (
    CellGrid,
    CoefficientField,
    DomainGrid,
    GeometryError,
    PeriodicBox,
    builtin_geometry,
    dump_field_csv,
    field_from_config,
)
from .reference import ACCEPTANCE_RESOLUTIONS, INDEPENDENT_CONVERGED, PUBLISHED
from .solvers import (
    InitialData,
    InstabilityError,
    KdvProfile,
    SimConfig,
    WaveState,
    default_domain_extent,
    simulate_dispersive,
    simulate_heterogeneous,
    simulate_kdv,
)
from .tensors import (
    DefinitenessError,
    EffectiveModel,
    kappa,
    kappa_minimizer,
    psd_checks,
    verify_decomposition,
)

CONFIG_ERRORS = (
    GeometryError,
    ContractViolation,
    CompatibilityError,
    FileNotFoundError,
    KeyError,
    ValueError,
    tomllib.TOMLDecodeError,
)
NUMERICAL_ERRORS = (
    ConvergenceError,
    InstabilityError,
    NumericalConsistencyError,
    DefinitenessError,
)


class AcceptanceFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# small io helpers


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float, str)):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    if isinstance(v, np.ndarray):
        return _toml_value(v.tolist())
    raise GeometryError(f"cannot serialize {type(v)} to TOML")


def write_toml(path: Path, tables: dict[str, dict]) -> None:
    lines = []
    for section, table in tables.items():
        lines.append(f"[{section}]")
        for key, value in table.items():
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    Path(path).write_text("\n".join(lines))


def read_toml(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def write_manifest(
    out_base: Path,
    subcommand: str,
    config: dict,
    inputs: list,
    residuals: dict,
    wall_time: float,
) -> Path:
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "version": __version__,
        "input_hashes": {str(p): _sha256(p) for p in inputs if Path(p).is_file()},
        "residuals": residuals,
        "wall_time_s": wall_time,
        "workers": int(os.environ.get("DISPWAVE_WORKERS", "1")),
    }
    path = Path(str(out_base) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=float))
    return path


def save_state(path: Path, state: WaveState, eps: float, csv_export: bool = False) -> None:
    grid = state.grid
    periodic = isinstance(grid, PeriodicBox)
    np.savez_compressed(
        path,
        u_now=state.u_now,
        u_prev=state.u_prev,
        time=state.time,
        dt=state.dt,
        step_index=state.step_index,
        extents=np.asarray(grid.extents),
        spacing=np.asarray(grid.spacing),
        periodic=periodic,
        eps=eps,
    )
    if csv_export:
        mesh = grid.node_mesh()
        with open(str(path) + ".csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x1", "x2", "u"])
            for p, v in zip(mesh.reshape(-1, 2), state.u_now.ravel()):
                writer.writerow([f"{p[0]:.9g}", f"{p[1]:.9g}", f"{v:.17g}"])


def load_state(path) -> tuple[WaveState, float]:
    data = np.load(path)
    extents = tuple(float(x) for x in data["extents"])
    spacing = tuple(float(x) for x in data["spacing"])
    if bool(data["periodic"]):
        shape = tuple(int(round(L / h)) for L, h in zip(extents, spacing))
        grid = PeriodicBox(extents, shape)
    else:
        grid = DomainGrid(extents, spacing)
    state = WaveState(
        grid,
        data["u_now"],
        data["u_prev"],
        float(data["time"]),
        float(data["dt"]),
        int(data["step_index"]),
    )
    return state, float(data["eps"])


def _parse_res(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.lower().split("x"))


def _load_field(args) -> CoefficientField:
    if getattr(args, "config", None):
        cfg = read_toml(args.config)
        return field_from_config(cfg)
    if getattr(args, "geometry", None):
        return builtin_geometry(args.geometry)
    raise GeometryError("missing config key 'geometry' (use --geometry or --config)")


def _load_model(path) -> EffectiveModel:
    data = read_toml(path)
    eff = data.get("effective", data)
    A = np.asarray(eff["A"], dtype=float)
    C = np.asarray(eff["C"], dtype=float)
    if "E" in eff and "F" in eff:
        model = EffectiveModel(A, C, np.asarray(eff["E"], float), np.asarray(eff["F"], float),
                               dict(eff.get("metadata", {})))
    else:
        model = EffectiveModel.from_tensors(A, C)
    return model


# ---------------------------------------------------------------------------
# subcommands


def cmd_coeffs(args) -> int:
    t0 = time.time()
    field = _load_field(args)
    grid = CellGrid(_parse_res(args.cell_res))
    result = run_algorithm_AC(field, grid, rtol=args.rtol)
    out = Path(args.out)
    tables = {
        "effective": {
            "geometry": field.name,
            "resolution": list(grid.shape),
            "rtol": args.rtol,
            "A": result.A,
            "C": result.C,
            "imag_residue": result.imag_residue,
            "max_solve_residual": max(result.solve_residuals.values()),
        }
    }
    if field.dim == 2 and field.even_symmetric:
        tables["effective"].update(
            a1=float(result.A[0, 0]), a2=float(result.A[1, 1]),
            alpha1=float(result.C[0, 0, 0, 0]), alpha2=float(result.C[1, 1, 1, 1]),
            beta=float(result.C[0, 0, 1, 1]),
        )
    write_toml(out, tables)
    if args.dump_fields:
        dump_dir = Path(args.dump_fields)
        dump_dir.mkdir(parents=True, exist_ok=True)
        for alpha, psi in result.cpset.psi.items():
            name = "psi_" + "".join(str(a) for a in alpha) + ".csv"
            mesh = grid.node_mesh()
            with open(dump_dir / name, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["y1", "y2", "re", "im"])
                for p, v in zip(mesh.reshape(-1, field.dim), psi.ravel()):
                    writer.writerow([f"{p[0]:.9g}", f"{p[1]:.9g}",
                                     f"{v.real:.17g}", f"{v.imag:.17g}"])
    write_manifest(
        out, "coeffs",
        {"geometry": field.name, "cell_res": list(grid.shape), "rtol": args.rtol},
        [args.config] if args.config else [],
        {"imag_residue": result.imag_residue,
         "max_solve_residual": max(result.solve_residuals.values())},
        time.time() - t0,
    )
    print(f"wrote {out}")
    if "a1" in tables["effective"]:
        e = tables["effective"]
        print(f"a1={e['a1']:.6f} a2={e['a2']:.6f} alpha1={e['alpha1']:.6f} "
              f"alpha2={e['alpha2']:.6f} beta={e['beta']:.6f}")
    return 0


def cmd_decompose(args) -> int:
    t0 = time.time()
    data = read_toml(args.infile)
    eff = data.get("effective", data)
    A = np.asarray(eff["A"], dtype=float)
    C = np.asarray(eff["C"], dtype=float)
    method = "symmetric-2d" if args.symmetric_2d else "general"
    model = EffectiveModel.from_tensors(A, C, method=method)
    residual = verify_decomposition(A, C, model.E, model.F, trials=args.trials)
    report = psd_checks(model.E, model.F)
    if not report:
        raise DefinitenessError(
            f"definiteness failure: min eig E {report.min_eig_E:.3e}, F {report.min_eig_F:.3e}"
        )
    out = Path(args.out)
    write_toml(out, {
        "effective": {
            "A": A, "C": C, "E": model.E, "F": model.F,
            "decomposition": model.metadata["decomposition"],
            "residual": residual,
            "min_eig_E": report.min_eig_E,
            "min_eig_F": report.min_eig_F,
        }
    })
    write_manifest(out, "decompose",
                   {"infile": str(args.infile), "method": method, "trials": args.trials},
                   [args.infile], {"residual": residual}, time.time() - t0)
    print(f"wrote {out}  (residual {residual:.3e}, min eig E {report.min_eig_E:.2e}, "
          f"F {report.min_eig_F:.2e})")
    return 0


def cmd_band(args) -> int:
    t0 = time.time()
    field = _load_field(args)
    grid = CellGrid(_parse_res(args.cell_res))
    waypoints = [tuple(float(x) for x in w.split(",")) for w in args.waypoints.split(";")]
    workers = args.workers or int(os.environ.get("DISPWAVE_WORKERS", "1"))
    points = band_path(field, grid, waypoints, args.samples, args.bands, workers=workers)
    out = Path(args.out)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"k{j+1}" for j in range(field.dim)]
                        + [f"mu{m}" for m in range(args.bands)])
        for pt in points:
            writer.writerow([f"{x:.9g}" for x in pt.k] + [f"{v:.12g}" for v in pt.eigenvalues])
    write_manifest(out, "band",
                   {"geometry": field.name, "cell_res": list(grid.shape),
                    "waypoints": args.waypoints, "samples": args.samples,
                    "bands": args.bands},
                   [args.config] if args.config else [],
                   {"max_residual": float(max(pt.residuals.max() for pt in points))},
                   time.time() - t0)
    print(f"wrote {out} ({len(points)} k-points)")
    return 0


def cmd_taylor_check(args) -> int:
    t0 = time.time()
    field = _load_field(args)
    grid = CellGrid(_parse_res(args.cell_res))
    result = run_algorithm_AC(field, grid)
    report = taylor_check(field, grid, result.A, result.C, args.step)
    print(report.summary())
    if args.out:
        Path(args.out).write_text(json.dumps({
            "step": report.step,
            "max_rel_A": report.max_rel_A,
            "max_rel_C": report.max_rel_C,
            "second_fd": report.second_fd.tolist(),
            "fourth_fd": {"".join(map(str, k)): v for k, v in report.fourth_fd.items()},
        }, indent=2))
        write_manifest(Path(args.out), "taylor-check",
                       {"geometry": field.name, "cell_res": list(grid.shape),
                        "step": args.step},
                       [], {"max_rel_A": report.max_rel_A, "max_rel_C": report.max_rel_C},
                       time.time() - t0)
    return 0


def _heterogeneous_config(args, field, a_max: float) -> SimConfig:
    cells = _parse_res(args.cells)
    h = tuple(2.0 * math.pi * args.eps / m for m in cells)
    L0 = args.extent or default_domain_extent(a_max, args.t_final)
    extents = tuple(math.ceil(L0 / hj) * hj for hj in h)
    return SimConfig(
        eps=args.eps, t_final=args.t_final, extents=extents, spacing=h,
        dt=args.dt, boundary=args.boundary, init_style=args.init_style,
    )


def cmd_simulate(args) -> int:
    t0 = time.time()
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    snapshots = [float(s) for s in args.snapshots.split(",")]
    if args.equation == "eps":
        field = _load_field(args)
        probe = field.scalar(np.zeros((1, field.dim))) if field.is_scalar else None
        a_max = float(np.max(np.abs(probe))) if probe is not None else 2.0
        cfg = _heterogeneous_config(args, field, a_max)
        states = simulate_heterogeneous(field, cfg, snapshots)
        tag = "ueps"
    else:
        model = _load_model(args.model)
        model.verify()
        a_max = float(np.max(np.diag(model.A)))
        L0 = args.extent or default_domain_extent(a_max, args.t_final)
        dx = args.dx
        extents = (math.ceil(L0 / dx) * dx,) * 2
        cfg = SimConfig(
            eps=args.eps, t_final=args.t_final, extents=extents, spacing=(dx, dx),
            dt=args.dt if args.dt else 0.02, boundary=args.boundary,
            init_style=args.init_style,
        )
        states = simulate_dispersive(model, cfg, snapshots)
        tag = "weps"
    files = []
    for state in states:
        path = outdir / f"{tag}_t{state.time:g}.npz"
        save_state(path, state, args.eps, csv_export=args.csv)
        files.append(path)
        print(f"wrote {path}")
    write_manifest(outdir / tag, "simulate",
                   {"equation": args.equation, "eps": args.eps,
                    "t_final": args.t_final, "snapshots": snapshots,
                    "extents": list(cfg.extents), "spacing": list(cfg.spacing),
                    "dt": cfg.dt, "boundary": cfg.boundary,
                    "init_style": cfg.init_style},
                   [p for p in [args.config, getattr(args, "model", None)] if p],
                   {}, time.time() - t0)
    return 0


def cmd_compare(args) -> int:
    u, _ = load_state(args.first)
    w, _ = load_state(args.second)
    err = l2_error(u, w)
    print(f"L2 error: {err:.8g}")
    return 0


def cmd_ray(args) -> int:
    state, eps = load_state(args.snapshot)
    r = np.arange(args.r_min, args.r_max + 1e-12, args.r_step)
    profile = extract_ray(state, args.angle, (args.a1, args.a2), r, eps=eps)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "value"])
        for rr, v in zip(profile.r, profile.values):
            writer.writerow([f"{rr:.9g}", f"{v:.17g}"])
    print(f"wrote {args.out} (phi={profile.phi:.4f}, polar={profile.phi_polar:.4f}"
          + (", truncated" if profile.truncated else "") + ")")
    return 0


def cmd_kdv(args) -> int:
    n = args.n
    r = -args.r_extent + 2.0 * args.r_extent / n * np.arange(n)
    values = np.exp(-(r**2))
    profile = KdvProfile(r, values, args.t0)
    times = [float(s) for s in args.times.split(",")]
    out_profiles = simulate_kdv(args.kappa, profile, args.t0, times)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r"] + [f"U_t{p.time:g}" for p in out_profiles])
        for i in range(n):
            writer.writerow([f"{r[i]:.9g}"] + [f"{p.values[i]:.12g}" for p in out_profiles])
    print(f"wrote {args.out}")
    return 0


def run_convergence(
    geometry: str = "rect",
    eps_list=(0.2, 0.15, 0.1),
    t0_factor: float = 0.5,
    cells: tuple[int, int] = (13, 12),
    collect_states: bool = False,
) -> tuple[ConvergenceStudy, EffectiveModel, list]:
    """End-to-end sweep: matched coarse tensors, both solvers, L2 errors.

    The effective model uses cell tensors computed at the same per-period
    resolution as the heterogeneous discretization, matching the protocol
    the published experiment describes.
    """
    field = builtin_geometry(geometry)
    result = run_algorithm_AC(field, CellGrid(cells))
    model = EffectiveModel.from_tensors(result.A, result.C)
    model.verify()
    a_max = float(np.max(np.diag(model.A)))
    study = ConvergenceStudy()
    kept = []
    for eps in eps_list:
        T = t0_factor / eps**2
        h = tuple(2.0 * math.pi * eps / m for m in cells)
        L0 = default_domain_extent(a_max, T)
        cfg_u = SimConfig(eps=eps, t_final=T,
                          extents=tuple(math.ceil(L0 / hj) * hj for hj in h), spacing=h)
        u = simulate_heterogeneous(field, cfg_u, [T])[0]
        Lw = math.ceil(L0 / 0.2) * 0.2
        cfg_w = SimConfig(eps=eps, t_final=T, extents=(Lw, Lw), spacing=(0.2, 0.2), dt=0.02)
        w = simulate_dispersive(model, cfg_w, [T])[0]
        study.add(eps, T, l2_error(u, w))
        if collect_states:
            kept.append((eps, u, w))
    return study, model, kept


def cmd_convergence(args) -> int:
    t0 = time.time()
    eps_list = [float(s) for s in args.eps_list.split(",")]
    study, model, _ = run_convergence(
        args.geometry, eps_list, args.T0, _parse_res(args.cells)
    )
    fit = study.rate()
    out = Path(args.out)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eps", "T", "error"])
        for eps, T, err in study.entries:
            writer.writerow([eps, T, f"{err:.10g}"])
    write_manifest(out, "convergence",
                   {"geometry": args.geometry, "eps_list": eps_list, "T0": args.T0,
                    "cells": args.cells},
                   [], {"rate": fit.slope, "intercept": fit.intercept}, time.time() - t0)
    for eps, T, err in study.entries:
        print(f"eps={eps:g}  T={T:g}  error={err:.6f}")
    print(f"fitted rate p = {fit.slope:.4f}")
    return 0


def compute_tables(resolutions: dict | None = None) -> dict:
    """Coefficient tables for the three geometries at the given resolutions."""
    resolutions = resolutions or ACCEPTANCE_RESOLUTIONS
    out = {}
    for name, res in resolutions.items():
        field = builtin_geometry(name)
        result = run_algorithm_AC(field, CellGrid(res))
        out[name] = {
            "resolution": res,
            "a1": float(result.A[0, 0]),
            "a2": float(result.A[1, 1]),
            "alpha1": float(result.C[0, 0, 0, 0]),
            "alpha2": float(result.C[1, 1, 1, 1]),
            "beta": float(result.C[0, 0, 1, 1]),
        }
    return out


def cmd_reproduce(args) -> int:
    t0 = time.time()
    if args.target == "tables":
        tables = compute_tables()
        failures = []
        print(f"{'geometry':10} {'coef':7} {'computed':>12} {'published':>12} "
              f"{'dev%':>8} {'independent':>12} {'dev%':>8}")
        for name, computed in tables.items():
            pub = PUBLISHED[name]["converged"]
            indep = INDEPENDENT_CONVERGED[name]
            tol = 0.02 if name == "laminate" else 0.03
            for key in ("a1", "a2", "alpha1", "alpha2", "beta"):
                dev_pub = abs(computed[key] - pub[key]) / abs(pub[key])
                dev_ind = abs(computed[key] - indep[key]) / abs(indep[key])
                print(f"{name:10} {key:7} {computed[key]:12.5f} {pub[key]:12.5f} "
                      f"{100 * dev_pub:8.2f} {indep[key]:12.5f} {100 * dev_ind:8.2f}")
                if dev_pub > tol:
                    failures.append(f"{name}.{key}: {100 * dev_pub:.2f}% vs published")
        print("\nnote: the published rect/cross fine-grid rows are not reproducible;")
        print("two independent discretizations agree with each other, with the")
        print("published coarse rows, and (for the laminate) with exact closed forms.")
        if args.check and failures:
            for f in failures:
                print("CHECK FAILED:", f)
            return 3
        write_manifest(Path("tables"), "reproduce-tables", {"resolutions": {
            k: list(v) for k, v in ACCEPTANCE_RESOLUTIONS.items()}},
            [], {}, time.time() - t0)
        return 0
    if args.target == "convergence":
        eps_list = [float(s) for s in args.eps_list.split(",")]
        study, _, _ = run_convergence(eps_list=eps_list)
        fit = study.rate()
        for eps, T, err in study.entries:
            print(f"eps={eps:g}  T={T:g}  error={err:.6f}")
        print(f"fitted rate p = {fit.slope:.4f}")
        if args.check and not (0.8 <= fit.slope <= 1.3):
            print(f"CHECK FAILED: rate {fit.slope:.4f} outside [0.8, 1.3]")
            return 3
        return 0
    raise GeometryError(f"unknown reproduce target '{args.target}'")


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dispwave",
        description="Dispersive effective wave models for periodic media",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_field_args(p):
        p.add_argument("--geometry", choices=["rect", "cross", "laminate"])
        p.add_argument("--config", help="TOML geometry config")

    p = sub.add_parser("coeffs", help="effective tensors A, C from cell problems")
    add_field_args(p)
    p.add_argument("--cell-res", default="208x192")
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--out", default="effective.toml")
    p.add_argument("--dump-fields", help="directory for cell-solution CSV dumps")
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("decompose", help="construct E, F from an effective.toml")
    p.add_argument("infile")
    p.add_argument("--out", default="ef.toml")
    p.add_argument("--symmetric-2d", action="store_true")
    p.add_argument("--trials", type=int, default=200)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("band", help="sample the lowest Bloch bands along a path")
    add_field_args(p)
    p.add_argument("--cell-res", default="64x64")
    p.add_argument("--waypoints", default="0,0;0.5,0;0.5,0.5;0,0")
    p.add_argument("--samples", type=int, default=16)
    p.add_argument("--bands", type=int, default=3)
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--out", default="band.csv")
    p.set_defaults(func=cmd_band)

    p = sub.add_parser("taylor-check", help="band derivatives against A and C")
    add_field_args(p)
    p.add_argument("--cell-res", default="104x96")
    p.add_argument("--step", type=float, default=0.02)
    p.add_argument("--out")
    p.set_defaults(func=cmd_taylor_check)

    p = sub.add_parser("simulate", help="run a wave simulation")
    p.add_argument("--equation", choices=["eps", "dispersive"], required=True)
    add_field_args(p)
    p.add_argument("--model", help="ef.toml with A, C (and optionally E, F)")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--t-final", type=float, required=True)
    p.add_argument("--snapshots", required=True, help="comma-separated times")
    p.add_argument("--cells", default="13x12", help="cells per period (eps equation)")
    p.add_argument("--dx", type=float, default=0.2)
    p.add_argument("--dt", type=float)
    p.add_argument("--extent", type=float)
    p.add_argument("--boundary", choices=["quadrant", "periodic"], default="quadrant")
    p.add_argument("--init-style", choices=["half", "full"], default="half")
    p.add_argument("--csv", action="store_true")
    p.add_argument("--out", default="snapshots")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="L2 error between two snapshots")
    p.add_argument("first")
    p.add_argument("second")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("convergence", help="eps sweep with rate fit")
    p.add_argument("--geometry", default="rect")
    p.add_argument("--eps-list", default="0.2,0.15,0.1")
    p.add_argument("--T0", type=float, default=0.5)
    p.add_argument("--cells", default="13x12")
    p.add_argument("--out", default="convergence.csv")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("ray", help="extract a ray profile from a snapshot")
    p.add_argument("snapshot")
    p.add_argument("--angle", type=float, required=True, help="elliptic angle")
    p.add_argument("--a1", type=float, required=True)
    p.add_argument("--a2", type=float, required=True)
    p.add_argument("--r-min", type=float, default=0.0)
    p.add_argument("--r-max", type=float, required=True)
    p.add_argument("--r-step", type=float, default=0.05)
    p.add_argument("--out", default="ray.csv")
    p.set_defaults(func=cmd_ray)

    p = sub.add_parser("kdv", help="evolve a Gaussian pulse-shape profile")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--times", required=True, help="comma-separated output times")
    p.add_argument("--r-extent", type=float, default=200.0)
    p.add_argument("--n", type=int, default=4096)
    p.add_argument("--out", default="kdv.csv")
    p.set_defaults(func=cmd_kdv)

    p = sub.add_parser("reproduce", help="end-to-end reproduction pipelines")
    p.add_argument("target", choices=["tables", "convergence"])
    p.add_argument("--check", action="store_true")
    p.add_argument("--eps-list", default="0.2,0.15,0.1")
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NUMERICAL_ERRORS as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 2
    except CONFIG_ERRORS as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
