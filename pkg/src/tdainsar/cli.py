"""Command-line driver.

    tdainsar simulate --config cfg.json [--out DIR] [--seed N]
    tdainsar unwrap   out/manifest.json [--out DIR]
    tdainsar design   --config cfg.json [--out DIR] [--trials N] [--threads N]
    tdainsar estimate out/unwrap_summary.json [--truth out/scene.csv] [--heights-only] [--delays]
    tdainsar report   --config cfg.json [--out DIR] [--trials N] [--threads N]

Exit codes: 0 success, 1 invalid input, 2 computation failure. Errors are
printed to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import design, io, metrics
from .config import ConfigError, load_config
from .errors import FormatError, PhaseContinuityWarning, TdaError
from .estimate import build_joint_model, estimate_heights_only, solve_joint
from .geometry import (BaselineConfiguration, Mode, RadarGeometry, effective_baselines, equivalent_baselines,
                       height_ambiguity)
from .scene import (blocks_scene, canopy_scene, default_blocks, max_height_difference, ramp_scene,
                    read_dem_csv, write_dem_csv)
from .simulate import (OrbitErrorParams, geometry_to_dict, read_stack, simulate_stack, turbulence_screen,
                       write_stack)
from .unwrap import UnwrappedField, asymptotic_unwrap


class InputError(ValueError):
    pass


def build_geometry(cfg):
    g = cfg.geometry
    return RadarGeometry.from_frequency(g.frequency_ghz * 1e9, g.slant_range, g.incidence_deg,
                                        range_spacing=g.range_spacing, azimuth_spacing=g.azimuth_spacing,
                                        azimuth_time_step=g.azimuth_time_step)


def build_scene(cfg, seed):
    s = cfg.scene
    if s.generator == "dem":
        return read_dem_csv(s.dem_path)
    if s.generator == "canopy":
        return canopy_scene(s.rows, s.cols, s.mean_height, s.jitter_std, s.density, seed)
    field = ramp_scene(s.rows, s.cols, s.max_height)
    if s.generator == "ramp_blocks":
        blocks = ([b.model_dump() for b in s.blocks] if s.blocks is not None
                  else default_blocks(s.rows, s.cols, s.block_count, s.block_height))
        field = blocks_scene(field, blocks)
    return field


def build_configuration(cfg):
    c = cfg.configuration
    return BaselineConfiguration(c.antenna_baseline, c.satellite_baseline, Mode(c.mode))


def _grid(g):
    return design._grid(g.start, g.stop, g.step)


def build_design_settings(cfg, trials=None):
    d = cfg.design
    return design.DesignSettings(
        significance_alpha=d.alpha, coherence=cfg.coherence, expected_height_precision=d.expected_height_precision,
        max_height_difference=d.max_height_difference or 100.0, antenna_grid=_grid(d.antenna_grid),
        satellite_grid=_grid(d.satellite_grid), trials=trials or cfg.trials, seed=cfg.seed, max_int=d.max_int)


def _out_dir(args, cfg=None, default=None):
    if args.out:
        out = Path(args.out)
    elif cfg is not None:
        out = Path(cfg.output_dir)
    else:
        out = Path(default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args):
    return load_config(args.config, seed=args.seed, trials=args.trials)


def cmd_simulate(args):
    cfg = _load(args)
    geom = build_geometry(cfg)
    scene = build_scene(cfg, cfg.seed)
    bcfg = build_configuration(cfg)
    out = _out_dir(args, cfg)
    orbit = None if cfg.orbit is None else OrbitErrorParams(**cfg.orbit.model_dump())
    atmos = None
    if cfg.atmosphere is not None:
        a = cfg.atmosphere
        atmos = turbulence_screen(scene.rows, scene.cols, a.rms, a.exponent, a.outer_scale, seed=cfg.seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PhaseContinuityWarning)
        stack = simulate_stack(scene, geom, bcfg, cfg.coherence, orbit, atmos, seed=cfg.seed,
                               layer_height=cfg.atmosphere.layer_height if cfg.atmosphere else 1000.0)
    write_stack(stack, out, seed=cfg.seed)
    write_dem_csv(out / "scene.csv", scene, geom.azimuth_spacing, geom.range_spacing)
    manifest = io.read_json(out / "manifest.json")
    manifest["truth"] = "scene.csv"
    io.write_json(out / "manifest.json", manifest)
    b1 = effective_baselines(equivalent_baselines(bcfg)).shortest
    span, amb = max_height_difference(scene), float(height_ambiguity(geom, b1))
    status = "ok" if span < amb else "PC assumption at risk"
    print(f"height span {span:.2f} m vs height ambiguity {amb:.2f} m of B1 = {b1:g} m: {status}")
    print(f"wrote {len(stack)} interferograms to {out}")
    return 0


def cmd_unwrap(args):
    manifest = Path(args.manifest)
    stack = read_stack(manifest)
    out = _out_dir(args, default=manifest.parent)
    smoothing = (5, 15)
    if args.config:
        smoothing = _load(args).unwrap.smoothing
    res = asymptotic_unwrap(stack, smoothing=smoothing)
    members = []
    for k, f in enumerate(res.fields):
        name = f"unw_{k + 1}.csv"
        ifg = stack[k]
        io.write_grid_csv(out / name, {"b_perp": ifg.b_perp, "coherence": ifg.coherence, "kind": ifg.kind.value},
                          f.phase)
        members.append(name)
    bset = res.baseline_set
    summary = {
        "stack_manifest": str(Path(manifest).resolve()),
        "members": members,
        "reference_pixel": list(stack.reference_pixel),
        "effective_baselines": list(bset.effective),
        "combinations": [{"minuend": c.minuend, "subtrahend": c.subtrahend, "multiplier": c.multiplier,
                          "sign": c.sign} for c in bset.combination_map],
        "residue_counts": res.residue_counts,
        "link_failure_fractions": res.link_failure_fractions,
        "success_rate": res.success_rate,
    }
    io.write_json(out / "unwrap_summary.json", summary)
    fractions = ", ".join(f"{f:.4f}" for f in res.link_failure_fractions)
    print(f"unwrapped {len(members)} interferograms; share of pixels with bootstrap residual beyond pi per link: "
          f"{fractions} (smooth orbit or atmosphere trends count here too)")
    return 0


def cmd_design(args):
    cfg = _load(args)
    geom = build_geometry(cfg)
    settings = build_design_settings(cfg)
    out = _out_dir(args, cfg)
    reports = [design.optimize(geom, settings, m, refine_top_k=cfg.design.refine_top_k, threads=args.threads)
               for m in cfg.design.modes]
    design.write_report_csv(out / "design_grid.csv", reports)
    optimum = {f"mode{int(r.mode)}": {"selected": design.point_to_dict(r.selected), "reason": r.reason,
                                      "feasible_cells": len(r.feasible_points)} for r in reports}
    io.write_json(out / "design_optimum.json", optimum)
    for r in reports:
        sel = r.selected
        print(f"mode {int(r.mode)}: " + (f"L1={sel.l1:g} m L2={sel.l2:g} m" if sel else f"none ({r.reason})"))
    return 0


def _read_unwrapped(summary_path):
    summary_path = Path(summary_path)
    summary = io.read_json(summary_path)
    try:
        stack = read_stack(summary["stack_manifest"])
        members = summary["members"]
        ref = tuple(summary["reference_pixel"])
    except KeyError as exc:
        raise FormatError(f"{summary_path}: missing key {exc}") from exc
    fields = []
    for name in members:
        path = summary_path.parent / name
        _, grid = io.read_grid_csv(path)
        if grid.shape != stack.shape:
            raise FormatError(f"{path}: grid {grid.shape} does not match the stack {stack.shape}")
        try:
            fields.append(UnwrappedField(grid, ref))
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from exc
    return stack, fields


def _result_payload(result, stack):
    payload = {
        "orbit": {k: float(v) for k, v in zip(("delta_bc", "delta_bc_rate", "delta_bn", "delta_bn_rate"),
                                              result.orbit.as_array())},
        "orbit_std": None if result.orbit_std is None else [float(v) for v in result.orbit_std],
        "residual_rms": result.residual_rms,
        "condition_indicator": result.condition_indicator,
        "median_posterior_height_std": float(np.nanmedian(result.posterior_height_std)),
        "delays_estimated": result.delays is not None,
        "reference_pixel": list(stack.reference_pixel),
    }
    return payload


def cmd_estimate(args):
    stack, fields = _read_unwrapped(args.summary)
    out = _out_dir(args, default=Path(args.summary).parent)
    geom = stack.geometry
    truth = read_dem_csv(args.truth) if args.truth else None
    if truth is not None and truth.shape != stack.shape:
        raise InputError(f"{args.truth}: grid {truth.shape} does not match the stack {stack.shape}")
    opts = _load(args).estimate if args.config else None
    uncorrected = estimate_heights_only(stack, fields)
    if args.heights_only:
        result, label = uncorrected, "heights_only"
    else:
        delays = args.delays if args.delays is not None else (opts.delays if opts else None)
        orbit = not args.no_orbit and (opts.orbit if opts else True)
        offsets = opts.offsets if opts else True
        model = build_joint_model(stack, fields, orbit=orbit, delays=delays, offsets=offsets)
        result, label = solve_joint(model), "joint"
    write_dem_csv(out / "heights.csv", result.heights, geom.azimuth_spacing, geom.range_spacing)
    io.write_grid_csv(out / "posterior_height_std.csv", {}, result.posterior_height_std)
    payload = {"solver": label, **_result_payload(result, stack)}
    if result.offsets is not None:
        payload["offsets"] = [float(v) for v in result.offsets]
    if result.delays is not None:
        io.write_grid_csv(out / "delays.csv", {}, result.delays)
    if truth is not None:
        ref = stack.reference_pixel
        acc = metrics.compare(result.heights, truth, ref)
        acc_u = metrics.compare(uncorrected.heights, truth, ref)
        metrics.write_report_json(out / "accuracy.json", acc, {"solver": label})
        metrics.write_histogram_csv(out / "error_histogram.csv", acc)
        payload["accuracy"] = acc.to_dict()
        payload["uncorrected_std"] = acc_u.std
        payload["corrected_to_uncorrected_std_ratio"] = acc.std / acc_u.std if acc_u.std > 0 else None
    io.write_json(out / "estimate.json", payload)
    print(f"{label} solve: residual rms {result.residual_rms:.4f} rad, orbit {result.orbit}")
    return 0


def cmd_report(args):
    cfg = _load(args)
    geom = build_geometry(cfg)
    settings = build_design_settings(cfg)
    out = _out_dir(args, cfg)
    modes = [Mode(m) for m in cfg.design.modes]
    coherences = cfg.design.coherences
    sweep = design.coherence_sweep(geom, settings, modes, coherences, threads=args.threads)
    rows = [(int(m), r.coherence, r.max_satellite_baseline, r.min_antenna_baseline, r.best_sigma_h)
            for m in modes for r in sweep[m]]
    io.write_table_csv(out / "coherence_sweep.csv",
                       ("mode", "coherence", "max_satellite_baseline", "min_antenna_baseline", "best_sigma_h"), rows)
    simp = design.simplified_system_sweep(geom, settings, coherences, threads=args.threads)
    io.write_table_csv(out / "simplified_sweep.csv",
                       ("coherence", "full_max_satellite_baseline", "simplified_max_satellite_baseline", "ratio"),
                       [(c.coherence, c.full.max_satellite_baseline, c.simplified.max_satellite_baseline, c.ratio)
                        for c in simp])
    l1 = cfg.configuration.antenna_baseline
    table = []
    for m in modes:
        rep = design.optimize(geom, settings, m)
        l2 = rep.max_feasible_satellite_baseline(l1)
        if not np.isfinite(l2):
            table.append((int(m), l1, None, None, None, None, None, None))
            continue
        point = next(p for p in rep.points if p.feasible and p.l1 == l1 and p.l2 == l2)
        mc = design.monte_carlo_success_rate(geom, BaselineConfiguration(l1, l2, m), cfg.coherence, settings.trials,
                                             settings.seed, settings.max_int)
        table.append((int(m), l1, l2, point.sr_analytic, mc.sr_empirical, mc.sigma_h_sbi, mc.sigma_h_mbi,
                      mc.sigma_h_lbi))
    io.write_table_csv(out / "precision_table.csv",
                       ("mode", "l1", "l2", "sr_analytic", "sr_empirical", "sigma_h_sbi", "sigma_h_mbi",
                        "sigma_h_lbi"), table)
    io.write_json(out / "report.json", {
        "geometry": geometry_to_dict(geom),
        "coherences": list(coherences),
        "antenna_baseline": l1,
        "max_satellite_baseline_at_antenna_baseline": {f"mode{t[0]}": t[2] for t in table},
        "simplified_ratio": {str(c.coherence): c.ratio for c in simp},
        "trials": settings.trials,
        "seed": settings.seed,
    })
    print(f"report written to {out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="tdainsar", description="Tandem dual-antenna InSAR simulation and design")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="experiment configuration (JSON)")
        p.add_argument("--out", help="output directory (created if missing)")
        p.add_argument("--seed", type=int, help="root seed, overrides the configuration")
        p.add_argument("--trials", type=int, help="Monte Carlo trials, overrides the configuration")
        p.add_argument("--threads", type=int, default=1, help="worker threads, 0 = auto")
        return p

    common(sub.add_parser("simulate", help="write a synthetic interferogram stack")).set_defaults(func=cmd_simulate)
    p = common(sub.add_parser("unwrap", help="asymptotic unwrapping of a stack"))
    p.add_argument("manifest", help="stack manifest.json")
    p.set_defaults(func=cmd_unwrap)
    common(sub.add_parser("design", help="baseline grid search")).set_defaults(func=cmd_design)
    p = common(sub.add_parser("estimate", help="height inversion from unwrapped fields"))
    p.add_argument("summary", help="unwrap_summary.json")
    p.add_argument("--truth", help="truth DEM CSV for accuracy statistics")
    p.add_argument("--heights-only", action="store_true", help="longest baseline only, no error modelling")
    p.add_argument("--delays", action=argparse.BooleanOptionalAction, default=None,
                   help="per-pixel delays on mono-static rows (default: on when the stack has such rows)")
    p.add_argument("--no-orbit", action="store_true", help="drop the orbit error columns")
    p.set_defaults(func=cmd_estimate)
    common(sub.add_parser("report", help="coherence sweeps and precision table")).set_defaults(func=cmd_report)
    return parser


def _fail(code, exc, details=None):
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if details:
        payload["details"] = details
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 0:
        return _fail(1, InputError("--threads must be >= 0"))
    if args.trials is not None and args.trials < 1:
        return _fail(1, InputError("--trials must be >= 1"))
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(1, exc, exc.details)
    except (FormatError, InputError) as exc:
        return _fail(1, exc)
    except TdaError as exc:
        return _fail(2, exc)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(2, exc)


if __name__ == "__main__":
    sys.exit(main())
