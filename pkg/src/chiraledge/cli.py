"""Command-line entry point: model-file I/O, subcommands, reproducible outputs.

Every JSON/CSV output embeds the tool version, a hash of the input model, the
seed, and the tolerances in force.  Floats are rounded to 12 significant
digits so repeated runs are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .companion import build_companion, decay_rate, propagate
from .config import DEFAULT_TOL, NUM_K_DEFAULT, Tolerances
from .errors import (
    ChiralEdgeError,
    NotChiral,
    ParseError,
    RangeZero,
    ShapeMismatch,
    SingularLeadingHop,
    UnbalancedGrading,
)
from .fixtures import FAMILIES, FIXTURE_NAMES, fixture
from .halfspace import edge_modes_companion, edge_modes_truncated, in_gap_scan
from .loops import full_deformation
from .models import (
    ChiralModel,
    chiral_split,
    detect_grading,
    h_pm_curve,
    load_model,
    model_to_dict,
)
from .spectrum import band_structure, certified_gap, chiral_gap_margin, detect_gap, gap_report_dict
from .verify import (
    EnsembleSpec,
    case_to_dict,
    random_chiral_ensemble,
    verify_bec,
    verify_two_band_strong,
)
from .winding import full_winding

_INPUT_ERRORS = (ParseError, ShapeMismatch, RangeZero, NotChiral, UnbalancedGrading)


# --- serialization helpers --------------------------------------------------


def _round12(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return float(f"{x:.12g}")


def _sanitize(obj):
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_round12(float(obj.real)), _round12(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        return _round12(float(obj))
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist())
    return obj


def _emit_json(doc: dict, out_path: str | None) -> None:
    text = json.dumps(_sanitize(doc), sort_keys=True, indent=1) + "\n"
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


def _csv_cell(x) -> str:
    if x is None or x == "":
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    v = float(x)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.12g}"


def _emit_csv(header, rows, meta: dict, out_path: str | None) -> None:
    lines = [f"# {k}={v}" for k, v in sorted(_flatten(meta).items())]
    lines.append(",".join(header))
    lines += [",".join(_csv_cell(c) for c in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


def _flatten(meta: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in meta.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


# --- input resolution -------------------------------------------------------


def _extract_tol_overrides(argv):
    rest, overrides = [], {}
    i = 0
    while i < len(argv):
        arg = argv[i]
        if arg.startswith("--tol."):
            body = arg[len("--tol.") :]
            if "=" in body:
                key, value = body.split("=", 1)
            else:
                key = body
                i += 1
                if i >= len(argv):
                    raise ParseError(f"--tol.{key} needs a value")
                value = argv[i]
            try:
                overrides[key] = float(value)
            except ValueError as exc:
                raise ParseError(f"tolerance override {key}={value!r} is not a number") from exc
        else:
            rest.append(arg)
        i += 1
    return rest, overrides


def _resolve_model(args, tol: Tolerances):
    """Returns (model, grading-or-None, canonical input bytes)."""
    path = args.model or getattr(args, "model_path", None)
    if args.fixture and path:
        raise ParseError("give either a model file or --fixture, not both")
    if args.fixture:
        cm = fixture(args.fixture)
        model, grading = cm.base, cm.grading
        raw = json.dumps(model_to_dict(model, grading), sort_keys=True).encode()
        return model, grading, raw
    if not path:
        raise ParseError("no model given; pass a model file or --fixture NAME")
    raw = Path(path).read_bytes()
    model, grading = load_model(path, tol=tol)
    return model, grading, raw


def _require_chiral(model, grading, args, tol: Tolerances) -> ChiralModel:
    if grading is None:
        if not getattr(args, "auto_grading", False):
            raise ParseError(
                "model has no grading; add a \"grading\" field or pass --auto-grading"
            )
        grading = detect_grading(model, tol)
        if grading is None:
            raise NotChiral("no bipartite grading exists for this model")
    return chiral_split(model, grading, tol=tol)


def _meta(raw: bytes, seed: int, tol: Tolerances, options: dict) -> dict:
    return {
        "tool": "chiraledge",
        "version": __version__,
        "input_sha256": hashlib.sha256(raw).hexdigest(),
        "seed": seed,
        "tolerances": tol.as_dict(),
        "options": options,
    }


def _parse_pair(text: str, what: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise ParseError(f"{what} must be 'LO,HI', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ParseError(f"{what} values must be numbers") from exc


def _parse_complex(text: str) -> complex:
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise ParseError(f"energy must be 'RE' or 'RE,IM', got {text!r}")


def _parse_ensemble(text: str, default_seed: int) -> EnsembleSpec:
    fields = {"seed": default_seed, "scale": 1.0, "gap_floor": 0.05}
    for token in text.split(","):
        key, _, value = token.partition("=")
        if key not in ("dim_v", "range", "count", "seed", "scale", "gap_floor"):
            raise ParseError(f"unknown ensemble field {key!r}")
        fields[key] = float(value) if key in ("scale", "gap_floor") else int(value)
    for req in ("dim_v", "range", "count"):
        if req not in fields:
            raise ParseError(f"ensemble spec needs {req}=...")
    return EnsembleSpec(
        seed=int(fields["seed"]),
        count=int(fields["count"]),
        dim_v=int(fields["dim_v"]),
        hop_range=int(fields["range"]),
        coefficient_scale=float(fields["scale"]),
        gap_floor=float(fields["gap_floor"]),
    )


# --- subcommands -------------------------------------------------------------


def _cmd_spectrum(args, tol) -> int:
    model, grading, raw = _resolve_model(args, tol)
    bands = band_structure(model, args.samples)
    around = 0.0 if grading is not None else None
    gap = detect_gap(bands, around)
    meta = _meta(raw, args.seed, tol, {"samples": args.samples, "around_energy": around})
    header = ["k"] + [f"E_{j + 1}" for j in range(model.dim_v)]
    rows = [[k] + list(es) for k, es in zip(bands.ks, bands.energies)]
    _emit_csv(header, rows, meta, args.out)
    if args.out:
        _emit_json({"meta": meta, "gap": gap_report_dict(gap)}, None)
    return 0


def _cmd_winding(args, tol) -> int:
    model, grading, raw = _resolve_model(args, tol)
    cm = _require_chiral(model, grading, args, tol)
    result = full_winding(cm, initial_samples=args.samples, tol=tol)
    meta = _meta(raw, args.seed, tol, {"samples": args.samples})
    _emit_json(
        {
            "meta": meta,
            "winding": result.winding,
            "method_phase": result.method_phase,
            "method_roots": result.method_roots,
            "samples_used": result.samples_used,
            "min_abs_det": result.min_abs_det,
        },
        args.out,
    )
    if args.curve_out:
        ks = -np.pi + 2.0 * np.pi * np.arange(args.samples) / args.samples
        dets = np.linalg.det(h_pm_curve(cm, np.exp(1j * ks)))
        _emit_csv(
            ["k", "det_re", "det_im"],
            [[k, d.real, d.imag] for k, d in zip(ks, dets)],
            meta,
            args.curve_out,
        )
    return 0


def _edge_report_dict(report) -> dict:
    return {
        "dim_ker_pm": report.dim_ker_pm,
        "dim_ker_mp": report.dim_ker_mp,
        "edge_index": report.edge_index,
        "method": report.method,
        "singular_values_near_zero": report.singular_values_near_zero,
        "truncation_cells": report.truncation_cells,
        "localization_lengths": report.localization_lengths,
        "dim_edge_total": report.dim_edge_total,
        "graded_decay_dims": report.graded_decay_dims,
    }


def _cmd_edge(args, tol) -> int:
    model, grading, raw = _resolve_model(args, tol)
    cm = _require_chiral(model, grading, args, tol)
    meta = _meta(raw, args.seed, tol, {"cells": args.cells, "method": args.method, "energy": args.energy})
    doc = {"meta": meta}
    truncated = companion = None
    if args.method in ("truncated", "both"):
        truncated = edge_modes_truncated(cm, cells=args.cells, energy=args.energy, tol=tol)
    if args.method in ("companion", "both"):
        try:
            companion = edge_modes_companion(cm, 0.0, tol)
        except SingularLeadingHop:
            if args.method == "companion":
                raise
            companion = None
    main = truncated or companion
    doc.update(_edge_report_dict(main))
    if truncated is not None and companion is not None:
        doc["method"] = "both"
        doc["companion"] = _edge_report_dict(companion)
        doc["routes_agree"] = (truncated.dim_ker_pm, truncated.dim_ker_mp) == (
            companion.dim_ker_pm,
            companion.dim_ker_mp,
        )
    _emit_json(doc, args.out)
    return 0


def _cmd_scan(args, tol) -> int:
    model, grading, raw = _resolve_model(args, tol)
    gap = certified_gap(model, around_energy=0.0 if grading is not None else None)
    if args.window:
        window = _parse_pair(args.window, "--window")
    else:
        delta = 0.05 * (gap.e_plus - gap.e_minus)
        window = (gap.e_minus + delta, gap.e_plus - delta)
    hits = in_gap_scan(model, args.cells, window, tol=tol, gap=gap)
    meta = _meta(raw, args.seed, tol, {"cells": args.cells, "window": list(window)})
    _emit_csv(
        ["energy", "localization_length", "side"],
        [[h.energy, h.localization_length, h.side] for h in hits],
        meta,
        args.out,
    )
    return 0


def _cmd_modes(args, tol) -> int:
    model, grading, raw = _resolve_model(args, tol)
    energy = _parse_complex(args.energy)
    comp = build_companion(model, energy, tol)
    try:
        values = [float(x) for x in args.initial.split(",")]
    except ValueError as exc:
        raise ParseError("--initial must be a comma-separated list of numbers") from exc
    n = comp.size
    if len(values) == n:
        initial = np.array(values, dtype=complex)
    elif len(values) == 2 * n:
        arr = np.array(values).reshape(n, 2)
        initial = arr[:, 0] + 1j * arr[:, 1]
    else:
        raise ParseError(
            f"--initial needs {n} real or {2 * n} interleaved re,im values, got {len(values)}"
        )
    steps = args.steps if args.steps is not None else 4 * model.hop_range + 4
    mode = propagate(comp, initial, steps=steps, first_cell=args.start, back_steps=args.back, tol=tol)
    meta = _meta(
        raw,
        args.seed,
        tol,
        {"energy": [energy.real, energy.imag], "steps": steps, "start": args.start, "back": args.back},
    )
    header = ["n"] + [x for j in range(model.dim_v) for x in (f"psi{j + 1}_re", f"psi{j + 1}_im")]
    rows = []
    for offset, cell in enumerate(mode.window):
        row = [mode.first_cell + offset]
        for z in cell:
            row += [z.real, z.imag]
        rows.append(row)
    _emit_csv(header, rows, meta, args.out)
    if args.out:
        try:
            rate = decay_rate(mode, tol)
        except ChiralEdgeError:
            rate = None
        _emit_json(
            {
                "meta": meta,
                "classification": mode.classification,
                "max_residual": mode.max_residual,
                "decay_rate": rate,
            },
            None,
        )
    return 0


def _cmd_deform(args, tol) -> int:
    model, grading, raw = _resolve_model(args, tol)
    cm = _require_chiral(model, grading, args, tol)
    path = full_deformation(cm, tol)
    meta = _meta(raw, args.seed, tol, {})
    _emit_json({"meta": meta, **path.to_dict()}, args.out)
    if args.csv_out:
        rows = []
        lams = np.exp(2j * np.pi * np.arange(64) / 64)
        for si, stage in enumerate(path.stages):
            ts = (
                [stage.t_start]
                if stage.t_start == stage.t_end
                else np.linspace(stage.t_start, stage.t_end, 9)
            )
            for t in ts:
                sv = np.linalg.svd(stage.evaluate(float(t), lams), compute_uv=False)
                rows.append([si, t, float(sv[:, -1].min())])
        _emit_csv(["stage", "t", "min_singular_value"], rows, meta, args.csv_out)
    return 0


def _verify_one(cm: ChiralModel, cells, tol) -> dict:
    entry = {"bec": case_to_dict(verify_bec(cm, cells=cells, tol=tol))}
    ok = entry["bec"]["passed"]
    if cm.dim_v == 2:
        entry["two_band"] = case_to_dict(verify_two_band_strong(cm, cells=cells, tol=tol))
        ok = ok and entry["two_band"]["passed"]
    entry["passed"] = ok
    return entry


def _cmd_verify(args, tol) -> int:
    if args.ensemble:
        spec = _parse_ensemble(args.ensemble, args.seed)
        models = random_chiral_ensemble(spec, tol=tol)
        raw = args.ensemble.encode()
        cases = []
        for i, cm in enumerate(models):
            entry = _verify_one(cm, args.cells, tol)
            entry["index"] = i
            cases.append(entry)
        passed = all(c["passed"] for c in cases)
        doc = {
            "meta": _meta(raw, spec.seed, tol, {"ensemble": args.ensemble, "cells": args.cells}),
            "cases": cases,
            "count": len(cases),
            "passed": passed,
        }
        _emit_json(doc, args.out)
        return 0 if passed else 1

    if args.fixture == "dimerized-all":
        names = ["dimerized-plus", "dimerized-minus", "dimerized-trivial"]
        raw = args.fixture.encode()
        doc_cases = {}
        passed = True
        for name in names:
            entry = _verify_one(fixture(name), args.cells, tol)
            doc_cases[name] = entry
            passed = passed and entry["passed"]
        doc = {
            "meta": _meta(raw, args.seed, tol, {"fixture": args.fixture, "cells": args.cells}),
            "cases": doc_cases,
            "passed": passed,
        }
        _emit_json(doc, args.out)
        return 0 if passed else 1

    model, grading, raw = _resolve_model(args, tol)
    cm = _require_chiral(model, grading, args, tol)
    entry = _verify_one(cm, args.cells, tol)
    doc = {"meta": _meta(raw, args.seed, tol, {"cells": args.cells}), **entry}
    _emit_json(doc, args.out)
    return 0 if entry["passed"] else 1


def _cmd_phase_diagram(args, tol) -> int:
    path = args.model or getattr(args, "model_path", None)
    if not path:
        raise ParseError("phase-diagram needs a family file")
    raw = Path(path).read_bytes()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc.msg}") from exc
    for fieldname in ("family", "param1", "param2"):
        if fieldname not in doc:
            raise ParseError(f"family file needs field {fieldname!r}")
    if doc["family"] not in FAMILIES:
        raise ParseError(f"unknown family {doc['family']!r}; available: {sorted(FAMILIES)}")
    builder, allowed = FAMILIES[doc["family"]]

    def axis(spec, which):
        for key in ("name", "min", "max"):
            if key not in spec:
                raise ParseError(f"{which} needs {key!r}")
        if spec["name"] not in allowed:
            raise ParseError(f"family {doc['family']!r} has parameters {allowed}, not {spec['name']!r}")
        return str(spec["name"]), float(spec["min"]), float(spec["max"])

    name1, lo1, hi1 = axis(doc["param1"], "param1")
    name2, lo2, hi2 = axis(doc["param2"], "param2")
    try:
        n1_str, n2_str = args.grid.lower().split("x")
        n1, n2 = int(n1_str), int(n2_str)
    except ValueError as exc:
        raise ParseError(f"--grid must be like 64x64, got {args.grid!r}") from exc

    rows = []
    for v1 in np.linspace(lo1, hi1, n1):
        for v2 in np.linspace(lo2, hi2, n2):
            cm = builder(**{name1: float(v1), name2: float(v2)})
            margin = chiral_gap_margin(cm, 256)
            winding = edge = ""
            if margin > 1e-9:
                try:
                    winding = full_winding(cm, tol=tol).winding
                except ChiralEdgeError:
                    winding = ""
                try:
                    # Auto cells refuse (empty field) when the decay is too
                    # slow to resolve the kernel, rather than undercounting.
                    edge = edge_modes_truncated(cm, cells=args.cells, tol=tol).edge_index
                except ChiralEdgeError:
                    edge = ""
            rows.append([v1, v2, winding, edge, margin])
    meta = _meta(raw, args.seed, tol, {"grid": args.grid, "cells": args.cells, "family": doc["family"]})
    _emit_csv([name1, name2, "winding", "edge_index", "gap_margin"], rows, meta, args.out)
    return 0


# --- parser -------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chiraledge",
        description="Bulk winding numbers, edge-mode counts and their correspondence "
        "for finite-range graded 1D lattice models.",
    )
    parser.add_argument("--version", action="version", version=f"chiraledge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("model_path", nargs="?", help="model JSON file")
    common.add_argument("--model", help="model JSON file (alternative to the positional)")
    common.add_argument(
        "--fixture", help=f"built-in fixture, one of: {', '.join(FIXTURE_NAMES)}; parametric via name:k=v,..."
    )
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--auto-grading", action="store_true", help="derive a grading by 2-coloring")

    p = sub.add_parser("spectrum", parents=[common], help="band structure CSV and gap report")
    p.add_argument("--samples", type=int, default=NUM_K_DEFAULT)
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("winding", parents=[common], help="bulk winding number")
    p.add_argument("--samples", type=int, default=NUM_K_DEFAULT)
    p.add_argument("--curve-out", help="CSV dump of the sampled block determinant")
    p.set_defaults(func=_cmd_winding)

    p = sub.add_parser("edge", parents=[common], help="edge-mode kernel dimensions and index")
    p.add_argument("--cells", type=int)
    p.add_argument("--energy", type=float, default=0.0)
    p.add_argument("--method", choices=["truncated", "companion", "both"], default="both")
    p.set_defaults(func=_cmd_edge)

    p = sub.add_parser("scan", parents=[common], help="in-gap spectrum of the truncated half-space")
    p.add_argument("--cells", type=int, default=100)
    p.add_argument("--window", help="energy window LO,HI (default: certified gap shrunk by 5%%)")
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("modes", parents=[common], help="propagate initial data into a lattice mode")
    p.add_argument("--energy", default="0")
    p.add_argument("--initial", required=True, help="comma-separated components (real or re,im pairs)")
    p.add_argument("--steps", type=int)
    p.add_argument("--start", type=int, default=1, help="index of the window's first cell")
    p.add_argument("--back", type=int, default=0, help="additional leftward steps")
    p.set_defaults(func=_cmd_modes)

    p = sub.add_parser("deform", parents=[common], help="deform the symbol to diagonal monomials")
    p.add_argument("--csv-out", help="CSV of certificate surfaces")
    p.set_defaults(func=_cmd_deform)

    p = sub.add_parser("verify", parents=[common], help="run the correspondence checks")
    p.add_argument("--cells", type=int)
    p.add_argument("--ensemble", help="e.g. dim_v=2,range=1,count=50,seed=1,gap_floor=0.05,scale=1.0")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("phase-diagram", parents=[common], help="parameter sweep over a 2-parameter family")
    p.add_argument("--grid", default="64x64")
    p.add_argument("--cells", type=int)
    p.set_defaults(func=_cmd_phase_diagram)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv, tol_overrides = _extract_tol_overrides(argv)
        tol = DEFAULT_TOL.replace(**tol_overrides)
    except (ParseError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, tol)
    except _INPUT_ERRORS as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(json.dumps({"error": "FileNotFound", "message": str(exc)}), file=sys.stderr)
        return 2
    except ChiralEdgeError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
