"""Command-line surface: geometry generation, path tracing, snap analysis,
the swimmer model and the analytic verification suite.

Exit codes: 0 success, 1 verification/analysis failure, 2 partial trace,
3 configuration error. All artifacts are written atomically (temp + rename)
and every JSON artifact embeds the fully resolved configuration and the
tool version, so a run can be reproduced from its outputs alone.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import re
import sys

import numpy as np

from . import __version__
from .analysis import (
    EmulatedCurve,
    classify_stability,
    critical_force,
    emulate_displacement_control,
    energy_report,
    jumps_to_list,
    report_to_dict,
    save_curve_csv,
    save_trajectory_csv,
    trajectory_pair,
)
from .continuation import (
    SolverSettings,
    arc_length_trace,
    find_free_equilibria,
    load_path_csv,
    save_path_csv,
    save_path_sidecar,
)
from .errors import EmulationIncompleteError, SnapSpiralError, SpecificationError
from .geometry import build_structure, export_layout_svg, polyline_length, save_layout_json
from .robot import (
    MODE_FIX,
    MODE_PIN,
    RobotSpec,
    save_cycle_csv,
    save_summary_json,
    simulate_swim,
    summary_to_dict,
)
from .scenario import build_system, load_scenario_config, scenario_by_label
from .verification import run_all

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_PARTIAL = 2
EXIT_CONFIG = 3

VONMISES_LABEL = "vonmises-truss"


# ---------------------------------------------------------------------------
# shared plumbing

def _slug(label: str) -> str:
    return re.sub(r"[^a-z0-9+-]+", "_", label.lower()).strip("_")


def _out_dir(args) -> str:
    out = args.out or "out"
    os.makedirs(out, exist_ok=True)
    return out


def _resolve_scenario(args):
    """Builtin label or config file, with command-line overrides applied."""
    if getattr(args, "config", None):
        sc = load_scenario_config(args.config)
    else:
        sc = scenario_by_label(args.scenario or "fixed-fixed")
    if getattr(args, "stroke", None) is not None:
        sc = dataclasses.replace(
            sc, loading=dataclasses.replace(sc.loading, stroke=args.stroke))
    if getattr(args, "elem_len", None) is not None:
        sc = dataclasses.replace(sc, element_length=args.elem_len)
    if getattr(args, "E", None) is not None:
        sc = dataclasses.replace(
            sc, material=dataclasses.replace(
                sc.material, youngs_modulus=args.E))
    return sc


def _scenario_config(sc) -> dict:
    """The fully resolved configuration document embedded in artifacts."""
    return {
        "label": sc.label,
        "boundary": {"left": sc.boundary.left, "right": sc.boundary.right},
        "loading": {
            "attachment": sc.loading.attachment,
            "bar_length": sc.loading.bar_length,
            "bar_mode": sc.loading.bar_mode,
            "stroke": sc.loading.stroke,
            "direction": sc.loading.direction,
        },
        "material": {
            "youngs_modulus": sc.material.youngs_modulus,
            "density": sc.material.density,
        },
        "imperfection": sc.imperfection,
        "element_length": sc.element_length,
        "geometry": {
            "inclination_angle": sc.layout.inclination_angle,
            "anchor_offsets": list(sc.layout.anchor_offsets),
            "depth": sc.layout.depth,
            "coil_thickness": sc.layout.coil_thickness,
        },
    }


def _artifact_doc(config: dict, payload: dict) -> dict:
    doc = {"tool_version": __version__, "config": config}
    doc.update(payload)
    return doc


def _write_json(doc: dict, path: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# tiny deterministic SVG plots

def _svg_polyline(points, stroke, width) -> str:
    pts = " ".join(f"{x:.4f},{y:.4f}" for x, y in points)
    return (f'<polyline fill="none" stroke="{stroke}" '
            f'stroke-width="{width}" points="{pts}" />')


def _plot_svg(series, path: str, size: float = 320.0) -> None:
    """Plot (label, color, Nx2 array) series in a fixed-size SVG frame."""
    allpts = np.vstack([s[2] for s in series if len(s[2])])
    lo = allpts.min(axis=0)
    hi = allpts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    margin = 20.0

    def to_px(p):
        t = (p - lo) / span
        return np.column_stack([margin + t[:, 0] * (size - 2 * margin),
                                size - margin - t[:, 1] * (size - 2 * margin)])

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0f}" '
             f'height="{size:.0f}" viewBox="0 0 {size:.0f} {size:.0f}">',
             f'<rect width="100%" height="100%" fill="white" />']
    for label, color, pts in series:
        if len(pts) < 2:
            continue
        parts.append(_svg_polyline(to_px(np.asarray(pts, float)), color, 1.2))
    for k, (label, color, _) in enumerate(series):
        parts.append(f'<text x="{margin:.0f}" y="{14 + 12 * k}" '
                     f'font-size="10" fill="{color}">{label}</text>')
    parts.append("</svg>")
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write("\n".join(parts) + "\n")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# commands

def cmd_generate(args) -> int:
    out = _out_dir(args)
    sc = _resolve_scenario(args)
    layout = sc.layout
    json_path = os.path.join(out, "layout.json")
    svg_path = os.path.join(out, "layout.svg")
    save_layout_json(layout, json_path,
                     extra={"tool_version": __version__,
                            "config": _scenario_config(sc)})
    export_layout_svg(layout, svg_path)
    pts = np.vstack([layout.left_beam, layout.right_beam, layout.apex_block])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    arc = polyline_length(layout.left_beam)
    print(f"layout: bounding box [{lo[0]:.2f}, {lo[1]:.2f}] .. "
          f"[{hi[0]:.2f}, {hi[1]:.2f}] mm; beam arc length {arc:.2f} mm")
    print(f"wrote {json_path} and {svg_path}")
    return EXIT_OK


def _trace_one(sc, settings, out):
    system = build_system(sc)
    path = arc_length_trace(system, sc.loading.stroke, settings,
                            metadata={"scenario": sc.label})
    free = find_free_equilibria(system, path, settings)
    tip_node = system.mesh.tags["tip"]
    slug = _slug(sc.label)
    csv_path = os.path.join(out, f"{slug}_path.csv")
    json_path = os.path.join(out, f"{slug}_folds.json")
    save_path_csv(path, system, tip_node, csv_path)
    triples = [(p, s, float(system.mesh.strain_energy(p.state)))
               for p, s in free]
    save_path_sidecar(path, triples, json_path,
                      extra=_artifact_doc(_scenario_config(sc), {}))
    return path, csv_path, json_path


def cmd_trace(args) -> int:
    out = _out_dir(args)
    settings = SolverSettings()
    if getattr(args, "max_steps", None) is not None:
        settings = dataclasses.replace(settings, max_steps=args.max_steps)
    labels = args.scenarios or ([args.scenario] if args.scenario else [])
    if args.config:
        labels = [None]
    if not labels:
        raise SpecificationError("trace needs --scenario, labels or --config")

    status = EXIT_OK
    for label in labels:
        if label == VONMISES_LABEL:
            path, csv_path, json_path = _trace_vonmises(args, out, settings)
        else:
            ns = argparse.Namespace(**vars(args))
            ns.scenario = label
            sc = _resolve_scenario(ns)
            path, csv_path, json_path = _trace_one(sc, settings, out)
        nfolds = len(path.folds)
        print(f"{label or 'config'}: {len(path.points)} points, "
              f"{nfolds} folds, complete={path.complete} -> {csv_path}")
        if not path.complete:
            print(f"warning: partial trace ({path.warning}); "
                  f"artifacts flagged in {json_path}", file=sys.stderr)
            status = EXIT_PARTIAL
    return status


def _trace_vonmises(args, out, settings):
    """Builtin two-bar truss benchmark trace."""
    from .verification import TRUSS_RISE, vonmises_system

    system = vonmises_system()
    stroke = args.stroke if args.stroke is not None else 2.5 * TRUSS_RISE
    path = arc_length_trace(system, stroke, settings,
                            metadata={"scenario": VONMISES_LABEL})
    free = find_free_equilibria(system, path, settings)
    slug = _slug(VONMISES_LABEL)
    csv_path = os.path.join(out, f"{slug}_path.csv")
    json_path = os.path.join(out, f"{slug}_folds.json")
    save_path_csv(path, system, system.mesh.tags["tip"], csv_path)
    triples = [(p, s, float(system.mesh.strain_energy(p.state)))
               for p, s in free]
    config = {"label": VONMISES_LABEL, "stroke": stroke}
    save_path_sidecar(path, triples, json_path,
                      extra=_artifact_doc(config, {}))
    return path, csv_path, json_path


def _load_trace_artifacts(out, slug):
    csv_path = os.path.join(out, f"{slug}_path.csv")
    json_path = os.path.join(out, f"{slug}_folds.json")
    for p in (csv_path, json_path):
        if not os.path.exists(p):
            raise FileNotFoundError(p)
    path = load_path_csv(csv_path)
    with open(json_path) as fh:
        sidecar = json.load(fh)
    return path, sidecar


def _analyze_one(out, label) -> str:
    slug = _slug(label)
    path, sidecar = _load_trace_artifacts(out, slug)
    config = sidecar.get("config", {})
    stroke = config.get("loading", {}).get("stroke", config.get("stroke"))
    if stroke is None:
        raise SpecificationError(
            f"sidecar for {label!r} lacks the resolved stroke")

    curve = emulate_displacement_control(path, float(stroke))
    free = [(e["control_mm"], e["stable"], e.get("strain_energy_Nmm"))
            for e in sidecar.get("free_equilibria", [])]
    stability = classify_stability(free) if free else "unknown"
    report = energy_report(curve, path, free)
    load_tips = curve.phase_tips("loading")
    unload_tips = curve.phase_tips("unloading")
    pair = trajectory_pair(load_tips, unload_tips, float(stroke))

    save_curve_csv(curve, os.path.join(out, f"{slug}_curve.csv"))
    save_trajectory_csv(pair, os.path.join(out, f"{slug}_trajectory.csv"))
    doc = _artifact_doc(config, {
        "scenario": label,
        "stability": stability,
        "critical_force_N": critical_force(curve),
        "reciprocity": pair.reciprocity_class,
        "enclosed_trajectory_area_mm2": pair.enclosed_area,
        "energy": report_to_dict(report),
        "jumps": jumps_to_list(curve),
    })
    _write_json(doc, os.path.join(out, f"{slug}_energy.json"))

    lam_l, f_l = curve.phase_arrays("loading")
    lam_u, f_u = curve.phase_arrays("unloading")
    _plot_svg([("loading", "#1f77b4", np.column_stack([lam_l, f_l])),
               ("unloading", "#d62728", np.column_stack([lam_u, f_u]))],
              os.path.join(out, f"{slug}_curve.svg"))
    if len(pair.loading_path) and len(pair.unloading_path):
        _plot_svg([("loading", "#1f77b4", pair.loading_path),
                   ("unloading", "#d62728", pair.unloading_path)],
                  os.path.join(out, f"{slug}_trajectory.svg"))
    return (f"{label}: {stability}, {pair.reciprocity_class}, "
            f"critical_force={critical_force(curve):.4f} N, "
            f"dissipation_ratio={report.dissipation_ratio:.3e}, "
            f"area={pair.enclosed_area:.2f} mm^2")


def cmd_analyze(args) -> int:
    out = _out_dir(args)
    labels = args.scenarios or ([args.scenario] if args.scenario else [])
    if not labels:
        raise SpecificationError("analyze needs --scenario or labels")
    status = EXIT_OK
    for label in labels:
        try:
            print(_analyze_one(out, label))
        except FileNotFoundError as exc:
            print(f"{label}: missing trace artifact {exc}", file=sys.stderr)
            status = EXIT_FAILURE
        except (EmulationIncompleteError, SpecificationError) as exc:
            print(f"{label}: analysis failed: {exc}", file=sys.stderr)
            status = EXIT_FAILURE
    return status


ROBOT_SCENARIOS = {MODE_FIX: "fixed-pinned(fix)", MODE_PIN: "fixed-pinned(pin)"}


def cmd_robot(args) -> int:
    out = _out_dir(args)
    kwargs = {}
    if args.cycles is not None:
        kwargs["cycles"] = args.cycles
    modes = [args.mode] if args.mode else [MODE_FIX, MODE_PIN]
    settings = SolverSettings()

    results = {}
    for mode in modes:
        label = ROBOT_SCENARIOS[mode]
        sc = scenario_by_label(label)
        spec = RobotSpec(mode=mode, **kwargs)
        if args.elem_len is not None:
            sc = dataclasses.replace(sc, element_length=args.elem_len)
        if sc.loading.stroke < spec.pull_displacement:
            sc = dataclasses.replace(sc, loading=dataclasses.replace(
                sc.loading, stroke=spec.pull_displacement + 2.0))
        system = build_system(sc)
        path = arc_length_trace(system, sc.loading.stroke, settings,
                                metadata={"scenario": label})
        results[mode] = (spec, simulate_swim(spec, path, system.mesh.nodes))

    for mode, (spec, res) in results.items():
        slug = f"robot_{mode}"
        save_cycle_csv(res, os.path.join(out, f"{slug}_cycles.csv"), stride=10)
        doc = _artifact_doc(
            {"mode": mode, "scenario": ROBOT_SCENARIOS[mode],
             "robot": dataclasses.asdict(spec)},
            {"summary": summary_to_dict(res)})
        save_summary_json(doc, os.path.join(out, f"{slug}_summary.json"))
        cyc = ", ".join(f"{d:.2f}" for d in res.per_cycle_displacement)
        print(f"{mode}-mode per-cycle displacement (mm): [{cyc}] "
              f"mean {res.mean_cycle_displacement:.2f}")

    if len(results) == 2:
        mean_fix = results[MODE_FIX][1].mean_cycle_displacement
        mean_pin = results[MODE_PIN][1].mean_cycle_displacement
        ratio = mean_fix / mean_pin if mean_pin else float("inf")
        print(f"fix/pin mean displacement ratio: {ratio:.2f}")
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_all()
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} oracles passed")
    return EXIT_FAILURE if failed else EXIT_OK


# ---------------------------------------------------------------------------
# argument surface

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="snapspiral",
        description="Spiral-metabeam snapping structures: generate, trace, "
                    "analyze, robot, verify.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenarios=False):
        sp.add_argument("--config", help="scenario config JSON path")
        sp.add_argument("--out", help="output directory (default: out)")
        sp.add_argument("--scenario", help="builtin scenario label")
        sp.add_argument("--stroke", type=float, help="crosshead stroke (mm)")
        sp.add_argument("--elem-len", type=float, dest="elem_len",
                        help="target element length (mm)")
        sp.add_argument("--E", type=float, dest="E",
                        help="Young's modulus (MPa)")
        if scenarios:
            sp.add_argument("scenarios", nargs="*",
                            help="scenario labels (positional)")

    common(sub.add_parser("generate", help="layout JSON + SVG"))
    tp = sub.add_parser("trace", help="equilibrium path CSV + folds JSON")
    common(tp, scenarios=True)
    tp.add_argument("--max-steps", type=int, dest="max_steps",
                    help="continuation step budget override")
    common(sub.add_parser("analyze",
                          help="curves, energy report, trajectories"),
           scenarios=True)
    rp = sub.add_parser("robot", help="swimmer cycle simulation")
    rp.add_argument("--out", help="output directory (default: out)")
    rp.add_argument("--mode", choices=[MODE_FIX, MODE_PIN],
                    help="single actuation mode (default: both)")
    rp.add_argument("--cycles", type=int, help="number of actuation cycles")
    rp.add_argument("--elem-len", type=float, dest="elem_len",
                    help="target element length (mm)")
    sub.add_parser("verify", help="run the analytic oracle suite")
    return p


COMMANDS = {
    "generate": cmd_generate,
    "trace": cmd_trace,
    "analyze": cmd_analyze,
    "robot": cmd_robot,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (SpecificationError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SnapSpiralError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
