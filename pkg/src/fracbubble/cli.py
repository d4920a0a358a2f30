"""Batch front door: config parsing, dispatch, result persistence, figures.

One command per process.  Every command writes its reports (JSON), sweep
tables (CSV), and figures (SVG) under the output directory, then a manifest
listing each produced file with its content hash.  Outputs carry no
timestamps, so identical configs reproduce identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import plots
from .bubbles import BubbleSpec, CutoffSpec, cutoff_profile, talenti, talenti_norms
from .domain import DomainSpec
from .errors import QuadratureError
from .experiments import (
    build_sphere_map,
    run_truncation_sweep,
    verify_borderline,
    verify_capacity_decay,
    verify_lower_mass,
    verify_upper_energy,
)
from .fields import Field, Grid
from .fraccore import FracParams
from .nehari import barycenter, energy
from .solver import SolveError, solve_critical_point

logger = logging.getLogger("fracbubble.cli")

COMMANDS = (
    "constants",
    "bubble-energy",
    "verify-estimates",
    "capacity",
    "sphere-map",
    "solve",
    "nehari",
)


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class RunConfig:
    command: str
    payload: dict
    out_dir: Path
    workers: int = 1
    seed: int = 0

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "payload": self.payload,
            "out_dir": str(self.out_dir),
            "workers": self.workers,
            "seed": self.seed,
        }


def _want(payload: dict, key: str, default):
    return payload.get(key, default)


def _params_from(payload: dict, path: str = "params", default: tuple | None = None) -> FracParams:
    block = payload.get("params")
    if block is None and default is not None:
        block = {"n": default[0], "s": default[1]}
    if not isinstance(block, dict):
        raise ConfigError(f"{path}: missing parameter block with n and s")
    n = block.get("n")
    s = block.get("s")
    if not isinstance(n, int) or n < 1:
        raise ConfigError(f"{path}.n: must be a positive integer, got {n!r}")
    if not isinstance(s, (int, float)) or not (0.0 < s < 1.0):
        raise ConfigError(f"{path}.s: must lie in (0, 1), got {s!r}")
    if n <= 2 * s:
        raise ConfigError(f"{path}: need n > 2 s, got n={n}, s={s}")
    return FracParams.make(n, float(s))


def _domain_from(payload: dict, path: str = "domain") -> DomainSpec:
    block = payload.get("domain", {})
    if not isinstance(block, dict):
        raise ConfigError(f"{path}: must be an object")
    try:
        return DomainSpec(**block)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


# -- command handlers --------------------------------------------------------


def cmd_constants(payload: dict, out: Path, config: RunConfig) -> tuple[list[Path], bool]:
    params = _params_from(payload)
    path = out / "constants.json"
    _write_json(path, params.as_dict())
    return [path], True


def cmd_bubble_energy(payload: dict, out: Path, config: RunConfig) -> tuple[list[Path], bool]:
    params = _params_from(payload, default=(2, 0.5))
    bubble = payload.get("bubble", {})
    eps = bubble.get("eps", 0.3)
    if not (isinstance(eps, (int, float)) and eps > 0):
        raise ConfigError(f"bubble.eps: must be positive, got {eps!r}")
    z = tuple(bubble.get("z", [0.0] * params.N))
    if len(z) != params.N:
        raise ConfigError(f"bubble.z: expected {params.N} coordinates, got {len(z)}")
    norms = talenti_norms(params, float(eps))
    report = {
        "params": params.as_dict(),
        "eps": eps,
        "z": list(z),
        "d": norms.d,
        "seminorm_sq": norms.seminorm,
        "mass": norms.mass,
        "rayleigh": norms.rayleigh,
        "uncertainty": norms.uncertainty,
        "mass_at_minimum": params.mass_at_minimum,
        "sharp_constant": params.s_sharp,
    }
    cutoff_spec = None
    cutoff = payload.get("cutoff")
    if cutoff is not None:
        try:
            cutoff_spec = CutoffSpec.from_dict(cutoff)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"cutoff: {exc}") from exc
        report["cutoff"] = cutoff_spec.to_dict()

    grid_block = payload.get("grid", {})
    half = grid_block.get("half_width", 8.0 * eps)
    points = grid_block.get("points", 161)
    grid = Grid.centered(z, float(half), int(points), dim=params.N)
    spec_b = BubbleSpec(eps=float(eps), z=z, d=norms.d)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        field = talenti(spec_b, grid, params)
        if cutoff_spec is not None:
            mesh = grid.meshgrid()
            pts = np.stack([m - c for m, c in zip(mesh, z)], axis=-1)
            field = field.copy_with(field.values * cutoff_profile(cutoff_spec, pts))
            rep = energy(field, params)
            report["sampled_field"] = rep.as_dict()
    files = [out / "bubble_energy.json"]
    _write_json(files[0], report)
    fig = out / "bubble_profile.svg"
    plots.field_heatmap(field, fig, title=f"bubble eps={eps}")
    files.append(fig)
    bin_path = out / "bubble_field.bin"
    field.save_binary(bin_path)
    files.append(bin_path)
    return files, True


def cmd_verify_estimates(payload: dict, out: Path, config: RunConfig) -> tuple[list[Path], bool]:
    params = _params_from(payload, default=(2, 0.25))
    eps = _want(payload, "eps", 0.2)
    if not (0.0 < eps < 1.0):
        raise ConfigError(f"eps: must lie in (0, 1), got {eps!r}")
    deltas = _want(payload, "deltas", [eps / 8, eps / 16, eps / 32, eps / 64])
    if len(deltas) < 4:
        raise ConfigError("deltas: need at least 4 sweep widths")
    domain = _domain_from(payload)
    z = payload.get("z")
    if z is None:
        z = [0.0] * (params.N - 1) + [domain.sphere_radius]
    rho = _want(payload, "rho", 0.8 * domain.max_bump_radius)
    tolerance = _want(payload, "tolerance", 0.15)

    sweep = run_truncation_sweep(params, eps, deltas, z, rho=rho)
    upper = verify_upper_energy(params, eps, deltas, z, rho=rho, tolerance=tolerance, sweep=sweep)
    lower = verify_lower_mass(params, eps, deltas, z, rho=rho, tolerance=tolerance, sweep=sweep)
    ok = upper.passed and lower.passed

    files = [out / "verify_estimates.json"]
    report = {
        "params": params.as_dict(),
        "eps": eps,
        "z": list(z),
        "rho": rho,
        "upper_energy": upper.as_dict(),
        "lower_mass": lower.as_dict(),
        "passed": ok,
    }

    borderline_block = payload.get("borderline")
    if borderline_block is not None:
        eps_list = borderline_block.get("eps_list", [0.3])
        alpha = borderline_block.get("alpha", 1.5)
        reports = verify_borderline(params, eps_list, alpha=alpha)
        report["borderline"] = [r.as_dict() for r in reports]
        ok = ok and all(r.passed for r in reports)
        report["passed"] = ok
        fig_b = out / "borderline.svg"
        plots.borderline_plot(reports, fig_b)
        files.append(fig_b)

    _write_json(files[0], report)
    table = out / "sweep.csv"
    _write_csv(
        table,
        ["delta", "seminorm_sq", "mass", "slab_cost"],
        zip(sweep.deltas, sweep.seminorms, sweep.masses, sweep.slab_costs),
    )
    files.append(table)
    for name, rep in (("rate_energy.svg", upper), ("rate_mass.svg", lower)):
        fig = out / name
        plots.rate_plot(rep, fig)
        files.append(fig)
    return files, ok


def cmd_capacity(payload: dict, out: Path, config: RunConfig) -> tuple[list[Path], bool]:
    thetas = _want(payload, "thetas", [1e-1, 1e-2, 1e-3, 1e-4])
    limit = _want(payload, "variation_limit", 2.0)
    try:
        report = verify_capacity_decay(thetas, variation_limit=limit)
    except ValueError as exc:
        raise ConfigError(f"thetas: {exc}") from exc
    files = [out / "capacity.json", out / "capacity.csv", out / "capacity.svg"]
    _write_json(files[0], report.as_dict())
    _write_csv(
        files[1],
        ["theta", "seminorm_sq", "product"],
        zip(report.thetas, report.seminorms, report.products),
    )
    plots.capacity_plot(report, files[2])
    return files, report.passed


def cmd_sphere_map(payload: dict, out: Path, config: RunConfig) -> tuple[list[Path], bool]:
    params = _params_from(payload, default=(2, 0.25))
    domain = _domain_from(payload)
    eps = _want(payload, "eps", 0.1)
    n_samples = _want(payload, "n_samples", 16)
    result = build_sphere_map(params, eps, domain, n_samples=n_samples)
    ok = result.degree == 1 and result.max_barycenter_offset < 1.0
    files = [out / "sphere_map.json", out / "sphere_map.csv", out / "sphere_map.svg"]
    _write_json(files[0], {**result.as_dict(), "passed": ok})
    _write_csv(
        files[1],
        ["z", "energy", "barycenter"],
        [
            (repr(list(z)), e, repr(list(b)))
            for z, e, b in zip(result.sample_points, result.energies, result.barycenters)
        ],
    )
    plots.sphere_map_plot(result, files[2])
    return files, ok


def cmd_solve(payload: dict, out: Path, config: RunConfig) -> tuple[list[Path], bool]:
    params = _params_from(payload, default=(2, 0.5))
    domain = _domain_from(payload)
    solver_block = payload.get("solver", {})
    tol = solver_block.get("tol", 1e-6)
    max_iter = solver_block.get("max_iter", 3000)
    start_eps = solver_block.get("start_eps", 0.3)
    result = solve_critical_point(
        domain,
        params,
        tol=tol,
        max_iter=max_iter,
        start_eps=start_eps,
        seed=config.seed,
    )
    success = (
        result.converged
        and result.in_window
        and result.level > params.c_inf
        and not result.concentration_flag
    )
    files = [out / "solve.json", out / "solution.bin", out / "solution.svg", out / "history.csv"]
    _write_json(files[0], {**result.as_dict(), "success": success, "c_inf": params.c_inf})
    result.solution.save_binary(files[1])
    plots.field_heatmap(result.solution, files[2], title=f"level {result.level:.4f}")
    _write_csv(
        files[3],
        ["iteration", "max_abs", "support_radius"],
        [(i, h.max_abs, h.support_radius) for i, h in enumerate(result.history)],
    )
    return files, success


def cmd_nehari(payload: dict, out: Path, config: RunConfig) -> tuple[list[Path], bool]:
    params = _params_from(payload, default=(2, 0.5))
    field_path = payload.get("field")
    if not field_path:
        raise ConfigError("field: path to a binary field file is required")
    path = Path(field_path)
    if not path.exists():
        raise ConfigError(f"field: file not found: {path}")
    u = Field.load_binary(path)
    if u.grid.dim != params.N:
        raise ConfigError(f"field: dimension {u.grid.dim} does not match params.n {params.N}")
    r3 = payload.get("r3", 4.0)
    rep = energy(u, params)
    beta = barycenter(u, params, float(r3))
    out_path = out / "nehari.json"
    _write_json(
        out_path,
        {
            "params": params.as_dict(),
            "field": str(path),
            "report": rep.as_dict(),
            "barycenter": [float(b) for b in beta],
            "r3": r3,
        },
    )
    return [out_path], True


_HANDLERS = {
    "constants": cmd_constants,
    "bubble-energy": cmd_bubble_energy,
    "verify-estimates": cmd_verify_estimates,
    "capacity": cmd_capacity,
    "sphere-map": cmd_sphere_map,
    "solve": cmd_solve,
    "nehari": cmd_nehari,
}


def run(config: RunConfig) -> int:
    """Dispatch one command; returns the process exit status."""
    if config.command not in _HANDLERS:
        print(f"unknown command: {config.command}", file=sys.stderr)
        return 2
    out = Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        files, ok = _HANDLERS[config.command](config.payload, out, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, SolveError, ValueError, RuntimeError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 1

    manifest = {
        "command": config.command,
        "config": config.payload,
        "workers": config.workers,
        "seed": config.seed,
        "passed": ok,
        "files": [
            {
                "path": f.name,
                "sha256": hashlib.sha256(f.read_bytes()).hexdigest(),
            }
            for f in files
        ],
    }
    _write_json(out / "manifest.json", manifest)
    if not ok:
        print(f"{config.command}: checks failed (see {out}/manifest.json)", file=sys.stderr)
        return 1
    return 0


def _load_payload(args) -> dict:
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config: file not found: {path}")
        try:
            payload = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc})")
        if not isinstance(payload, dict):
            raise ConfigError("config: top level must be an object")
        return payload
    return {}


def main(argv=None) -> int:
    level = os.environ.get("FRACBUBBLE_LOG", "error").lower()
    if level not in ("error", "info", "debug"):
        level = "error"
    logging.basicConfig(level=getattr(logging, level.upper()))

    parser = argparse.ArgumentParser(
        prog="fracbubble",
        description="desk-scale numerics for the fractional critical problem",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON config path")
        p.add_argument("--out", default="fracbubble_out", help="output directory")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)
        if name == "constants":
            p.add_argument("--n", type=int, default=None)
            p.add_argument("--s", type=float, default=None)
        if name == "nehari":
            p.add_argument("--field", default=None, help="binary field file")

    args = parser.parse_args(argv)
    try:
        payload = _load_payload(args)
        if args.command == "constants":
            block = payload.setdefault("params", {})
            if args.n is not None:
                block["n"] = args.n
            if args.s is not None:
                block["s"] = args.s
        if args.command == "nehari" and args.field is not None:
            payload["field"] = args.field
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    config = RunConfig(
        command=args.command,
        payload=payload,
        out_dir=Path(args.out),
        workers=args.workers,
        seed=args.seed,
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
