"""Configuration-driven study runner and verification CLI.

Subcommands:

  run    --config FILE [--set key=value ...] [--threads N] [--export-matrices]
  verify --suite {kernels,jumps,calderon,energy-k0,conventions} [--threads N]

Config files are flat ``key = value`` text; command-line ``--set`` overrides
take precedence over the file, which takes precedence over defaults.  Runs
emit one CSV per (case, k, mode) with a fixed, golden-tested column order;
files are written atomically (temp + rename).  Exit code is 0 only if every
requested run completed and all embedded assertions passed.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import tempfile

import numpy as np

from .analysis import (ERROR_FIELDS, compute_errors, convergence_rates,
                       energy_identity_probe)
from .cases import get_case
from .coupling import assemble_T_matrix, build_system
from .meshes import cube_mesh
from .solver import solve

CSV_COLUMNS = ("level", "h", "p", "dofs_interior", "dofs_mortar",
               "dofs_trace", "rel_L2_omega", "rel_H1semi_omega",
               "scaled_rel_L2_m", "scaled_rel_L2_uext",
               "rate_L2_omega", "rate_H1semi_omega", "rate_m", "rate_uext",
               "solver", "residual", "iterations")

DEFAULTS = {
    "case": "tc1",
    "k_multiplier": "1.5",
    "degrees": "1",
    "levels": "3",
    "mode": "h-version",
    "solver": "schur",
    "output_dir": "results",
    "backend": "auto",
    "far_order": "3",
    "near_order": "7",
    "sing_order": "4",
    "quad_order": "",
    "fixed_level": "1",
}


class ConfigError(ValueError):
    pass


def parse_config(path=None, overrides=()):
    cfg = dict(DEFAULTS)
    if path is not None:
        with open(path) as fh:
            for ln, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{ln}: expected key = value")
                key, val = (part.strip() for part in line.split("=", 1))
                if key not in DEFAULTS:
                    raise ConfigError(f"{path}:{ln}: unknown key {key!r}")
                cfg[key] = val
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected key=value")
        key, val = (part.strip() for part in item.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"--set: unknown key {key!r}")
        cfg[key] = val
    return _validate(cfg)


def _validate(cfg):
    out = dict(cfg)
    if cfg["case"] not in ("tc1", "tc2", "poly-exact"):
        raise ConfigError(f"unknown case {cfg['case']!r}")
    try:
        out["k_multiplier"] = float(cfg["k_multiplier"])
        out["levels"] = int(cfg["levels"])
        out["degrees"] = tuple(int(d) for d in cfg["degrees"].split(","))
        out["far_order"] = int(cfg["far_order"])
        out["near_order"] = int(cfg["near_order"])
        out["sing_order"] = int(cfg["sing_order"])
        out["fixed_level"] = int(cfg["fixed_level"])
        out["quad_order"] = (int(cfg["quad_order"]) if cfg["quad_order"]
                             else None)
    except ValueError as exc:
        raise ConfigError(f"bad numeric value: {exc}") from exc
    if out["levels"] < 1:
        raise ConfigError("levels must be >= 1")
    if not set(out["degrees"]) <= {1, 2, 3}:
        raise ConfigError("degrees must be a subset of 1,2,3")
    if cfg["mode"] not in ("h-version", "p-version"):
        raise ConfigError(f"unknown mode {cfg['mode']!r}")
    if cfg["solver"] not in ("schur", "direct", "gmres"):
        raise ConfigError(f"unknown solver {cfg['solver']!r}")
    if out["k_multiplier"] <= 0:
        raise ConfigError("k_multiplier must be positive")
    if cfg["case"] == "tc2":
        out["k_multiplier"] = 1.0   # tc2 is pinned at k = sqrt(3) pi
    return out


def level_resolution(case_name, level):
    """Cube resolution per refinement level (level 0 is the coarsest)."""
    base = 10 if case_name == "tc2" else 2
    return base * 2 ** level


def _build_level(cfg, case, degree, level, threads):
    n = level_resolution(cfg["case"], level)
    mesh = cube_mesh(1.0, n)
    system = build_system(
        mesh, case, degree, far_order=cfg["far_order"],
        near_order=cfg["near_order"], sing_order=cfg["sing_order"],
        backend=None if cfg["backend"] == "auto" else cfg["backend"],
        threads=threads, quad_order=cfg["quad_order"])
    solution = solve(system, cfg["solver"])
    return system, solution


def _atomic_csv(path, rows):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".",
                               suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            writer.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _export(system, path_base):
    os.makedirs(os.path.dirname(path_base) or ".", exist_ok=True)
    np.savez_compressed(
        path_base + "_matrices.npz",
        A_blk=system.A_blk.toarray(), B1=system.B1.toarray(),
        B2=system.B2, B3=system.B3, B4=system.B4.toarray(),
        B5=system.B5, B6=system.B6, rhs_u=system.rhs_u,
        rhs_z=system.rhs_z, rhs_w=system.rhs_w)


def run_study(cfg, threads=1, export_matrices=False):
    """Execute the configured study; returns the list of CSV paths."""
    paths = []
    mode_tag = cfg["mode"].replace("-version", "")
    for degree in cfg["degrees"]:
        case = get_case(cfg["case"], cfg["k_multiplier"], degree)
        rows, reports = [], []
        if cfg["mode"] == "h-version":
            sweep = [(lv, degree) for lv in range(cfg["levels"])]
        else:
            sweep = [(cfg["fixed_level"], p) for p in cfg["degrees"]]
        for level, p in sweep:
            if cfg["mode"] == "p-version":
                case = get_case(cfg["case"], cfg["k_multiplier"], p)
            system, solution = _build_level(cfg, case, p, level, threads)
            report = compute_errors(solution, case, system,
                                    quad_order=cfg["quad_order"])
            reports.append(report)
            rates = [""] * 4
            if cfg["mode"] == "h-version" and len(reports) >= 2:
                rr = convergence_rates(reports)
                rates = [f"{rr[f]['pairwise'][-1]:.6f}" for f in ERROR_FIELDS]
            rows.append([level, f"{report.h:.8e}", p, *report.dofs,
                         *(f"{getattr(report, f):.8e}" for f in ERROR_FIELDS),
                         *rates, report.solver, f"{report.residual:.3e}",
                         report.iterations])
            if export_matrices:
                _export(system, os.path.join(
                    cfg["output_dir"],
                    f"{cfg['case']}_k{cfg['k_multiplier']:g}_p{p}_L{level}"))
        if cfg["mode"] == "p-version":
            name = f"{cfg['case']}_k{cfg['k_multiplier']:g}_{mode_tag}.csv"
        else:
            name = (f"{cfg['case']}_k{cfg['k_multiplier']:g}_p{degree}"
                    f"_{mode_tag}.csv")
        path = os.path.join(cfg["output_dir"], name)
        _atomic_csv(path, rows)
        paths.append(path)
        if cfg["mode"] == "p-version":
            break   # a p-version sweep already covered all degrees
    return paths


# ---------------------------------------------------------------------------
# verification suites
# ---------------------------------------------------------------------------

def _suite_kernels(threads):
    from .kernels import assemble_operators
    from .meshes import extract_boundary
    from .tracespace import TraceSpaces
    surf = extract_boundary(cube_mesh(1.0, 2))
    spaces = TraceSpaces(surf, 1)
    a = assemble_operators(spaces, 1.5, backend="python", threads=threads)
    checks = []
    try:
        b = assemble_operators(spaces, 1.5, backend="cython", threads=threads)
        diff = max(np.linalg.norm(a[x] - b[x]) / np.linalg.norm(a[x])
                   for x in a)
        checks.append(("backend_equivalence", diff, 1e-12))
    except ImportError:
        checks.append(("backend_equivalence_skipped", 0.0, 1.0))
    sym = np.linalg.norm(a["V_ww"] - a["V_ww"].T) / np.linalg.norm(a["V_ww"])
    checks.append(("single_layer_symmetry", sym, 1e-4))
    return checks


def _suite_conventions(threads):
    from .bemops import convention_audit
    from .kernels import assemble_operators
    from .meshes import extract_boundary
    from .tracespace import TraceSpaces
    surf = extract_boundary(cube_mesh(1.0, 2))
    spaces = TraceSpaces(surf, 1)
    ops = assemble_operators(spaces, 0.0, sing_order=6, threads=threads)
    audit = convention_audit(spaces, ops)
    return [("double_layer_constant", audit["double_layer_constant"], 1e-3),
            ("hypersingular_constant", audit["hypersingular_constant"], 1e-10),
            ("adjoint_transpose", audit["adjoint_transpose"], 1e-3)]


def _suite_jumps(threads):
    from .bemops import layer_potential
    from .meshes import extract_boundary
    from .tracespace import TraceSpaces
    surf = extract_boundary(cube_mesh(1.0, 2))
    spaces = TraceSpaces(surf, 1)
    k = 2.0
    dens = spaces.interpolate_z(lambda x: np.cos(x[:, 0]) + x[:, 1])
    sel = np.arange(0, len(surf.triangles), 5)
    cent = surf.corners()[sel].mean(axis=1)
    nrm = surf.normals[sel]
    # the double-layer jump equals the discrete density; the P1 interpolant
    # at a centroid is the mean of the corner coefficients
    exact = dens[spaces.z_elem[sel]].mean(axis=1)
    checks = []
    prev = None
    for eps, depth in ((3e-3, 7), (1e-3, 9), (3e-4, 11)):
        xp, xm = cent + eps * nrm, cent - eps * nrm
        sj = np.abs(layer_potential(spaces, "z", dens, xp, k, max_depth=depth)
                    - layer_potential(spaces, "z", dens, xm, k,
                                      max_depth=depth)).max()
        dj = np.abs(layer_potential(spaces, "z", dens, xp, k, kind="double",
                                    max_depth=depth)
                    - layer_potential(spaces, "z", dens, xm, k, kind="double",
                                      max_depth=depth) - exact).max()
        val = max(sj, dj)
        if prev is not None:
            checks.append((f"jump_decrease_eps{eps:g}",
                           0.0 if val < prev else val, 1e-12))
        prev = val
    checks.append(("jump_final", prev, 1e-3))
    return checks


def _suite_calderon(threads):
    from .bemops import calderon_residual
    from .kernels import assemble_operators
    from .meshes import extract_boundary
    from .tracespace import TraceSpaces
    src = np.array([1.2, 0.3, -0.4])
    k = 2.0
    prev = None
    checks = []
    for lev, n in enumerate((2, 4, 8)):
        surf = extract_boundary(cube_mesh(1.0, n))
        spaces = TraceSpaces(surf, 1)
        ops = assemble_operators(spaces, k, sing_order=5, threads=threads)
        dz = spaces.z_coords - src
        rz = np.linalg.norm(dz, axis=1)
        psi = np.exp(1j * k * rz) / (4 * np.pi * rz)
        nlw = spaces.w_elem.shape[1]
        pan = np.arange(spaces.nw) // nlw
        dw = spaces.w_coords - src
        rw = np.linalg.norm(dw, axis=1)
        gradu = dw * (np.exp(1j * k * rw) * (1j * k * rw - 1)
                      / (4 * np.pi * rw ** 3))[:, None]
        phi = np.einsum("ix,ix->i", gradu, surf.normals[pan])
        n1, n2 = calderon_residual(spaces, ops, psi, phi)
        val = max(n1, n2)
        if prev is not None:
            checks.append((f"calderon_ratio_level{lev}", val / prev, 1.0 / 1.5))
        prev = val
    return checks


def _suite_energy_k0(threads):
    checks = []
    case = get_case("tc1", 1.0)
    for lev, n in enumerate((2, 4)):
        sys0 = build_system(cube_mesh(1.0, n), case, 1, k=0.0,
                            threads=threads)
        T = assemble_T_matrix(sys0)
        disc = energy_identity_probe(T, sys0.A_blk, sys0.B5, -sys0.B3,
                                     trials=50)
        checks.append((f"energy_identity_level{lev}", disc, 1e-10))
    return checks


SUITES = {"kernels": _suite_kernels, "jumps": _suite_jumps,
          "calderon": _suite_calderon, "energy-k0": _suite_energy_k0,
          "conventions": _suite_conventions}


def run_verify(suite, threads=1):
    """Run one verification suite; returns (all_passed, checks)."""
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; expected one of "
                          f"{sorted(SUITES)}")
    checks = SUITES[suite](threads)
    ok = all(val <= thresh for _, val, thresh in checks)
    return ok, checks


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="fembem",
        description="FEM-BEM mortar coupling studies for the Helmholtz "
                    "transmission problem")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a configured convergence study")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--set", action="append", default=[], dest="sets",
                       metavar="KEY=VALUE")
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--export-matrices", action="store_true")
    p_ver = sub.add_parser("verify", help="run a verification suite")
    p_ver.add_argument("--suite", required=True)
    p_ver.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            cfg = parse_config(args.config, args.sets)
            paths = run_study(cfg, threads=args.threads,
                              export_matrices=args.export_matrices)
            for path in paths:
                print(f"wrote {path}")
            return 0
        ok, checks = run_verify(args.suite, threads=args.threads)
        for name, val, thresh in checks:
            status = "PASS" if val <= thresh else "FAIL"
            print(f"{status} {name} value={val:.3e} threshold={thresh:.3e}")
        return 0 if ok else 1
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
