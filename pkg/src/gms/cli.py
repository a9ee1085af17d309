"""Configuration-driven experiment runner with machine-readable output.

One JSON config describes one experiment; the runner validates it, executes
the command, and writes a deterministic payload (CSV table or JSON record).
Identical config and seed reproduce the output bytes exactly, so wall time
is reported on stderr instead of being embedded in the files.

Commands
--------
figure2      solution-norm curves of the closed-form family over a full
             circle sweep, one column per requested constant
solve-torus  grid solves of the degree-1 problem across a refinement ladder,
             with closed-form cochain gaps per level
sweep-t      continuation sweep in the rescaling parameter with harmonic
             gaps and continuation bounds
thresholds   critical constants and class scales per degree, with the
             divergence flag
bi-check     seeded fuzz statistics for the four-dimensional identities
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .borninfeld import (
    bi_el_residual,
    det_identity_gap,
    random_selfdual_form,
    random_two_form,
    resolvent_asym_gap,
    sandwich,
    sd_split,
    wedge_square,
)
from .compare import closed_form_cochain_gap
from .energy import gms_model
from .errors import ConfigError, GmsError, NonConvergenceError, PrecisionError
from .exterior import build_torus, constant_form, fold_to_half_period
from .optimize import SolverConfig, minimize, t_sweep
from .reduced import (
    HFunction,
    builtin_h,
    class_scale,
    constant_for_class_scale,
    critical_class_scale,
    critical_constant,
    h_from_table,
    solution_norm_value,
)

COMMANDS = ("figure2", "solve-torus", "sweep-t", "thresholds", "bi-check")

_DEFAULTS = {
    "manifold": {"grids": [[32, 32]], "period1": 2 * math.pi, "period2": 2 * math.pi},
    "metric": {},
    "k": 1,
    "classSpec": {},
    "solver": {"gradTol": 1e-9, "maxNewton": 100, "maxCG": 2000},
    "quadrature": {"tol": 1e-8, "maxLevel": 20},
    "seed": 0,
    "samples": 1000,
    "thetaSamples": 257,
    "ks": None,
    "output": {"path": "-", "format": "json"},
}


@dataclass
class RunRecord:
    command: str
    config: dict
    version: str
    payload: dict
    wall_time: float = 0.0
    columns: list = field(default_factory=list)
    rows: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def _merge_defaults(raw: dict) -> dict:
    cfg = {}
    for key, default in _DEFAULTS.items():
        value = raw.get(key, default)
        if isinstance(default, dict) and isinstance(value, dict):
            merged = dict(default)
            merged.update(value)
            value = merged
        cfg[key] = value
    cfg["command"] = raw.get("command")
    return cfg


def _diagnose(cfg: dict) -> list:
    """Schema and invariant report; empty list means valid."""
    out = []
    command = cfg.get("command")
    if command not in COMMANDS:
        out.append(f"command: must be one of {', '.join(COMMANDS)}, got {command!r}")
        return out

    metric = cfg["metric"]
    if command != "bi-check":
        keys = set(metric) & {"builtin", "table"}
        if len(keys) != 1:
            out.append("metric: exactly one of 'builtin' or 'table' is required")
        elif "table" in keys and not Path(metric["table"]).is_file():
            out.append(f"metric.table: file not found: {metric['table']}")

    class_spec = cfg["classSpec"]
    has_c = "c" in class_spec
    has_kappa = "kappa" in class_spec
    has_ts = "ts" in class_spec
    if command == "figure2":
        if not has_c:
            out.append("classSpec.c: figure2 needs a constant or list of constants")
        else:
            cs = class_spec["c"] if isinstance(class_spec["c"], list) else [class_spec["c"]]
            if not cs or any(not isinstance(c, (int, float)) for c in cs):
                out.append("classSpec.c: entries must be numbers")
        if has_kappa or has_ts:
            out.append("classSpec: figure2 accepts only 'c'")
    elif command in ("solve-torus", "sweep-t"):
        if has_c == has_kappa:
            out.append("classSpec: exactly one of 'c' or 'kappa' is required")
        if has_c and not isinstance(class_spec["c"], (int, float)):
            out.append("classSpec.c: must be a number for this command")
        if cfg["k"] != 1:
            out.append("k: grid solves cover degree 1 only")
        if command == "sweep-t":
            ts = class_spec.get("ts")
            if not isinstance(ts, list) or not ts:
                out.append("classSpec.ts: a non-empty ascending list is required")
            elif any(t <= 0 for t in ts) or any(b <= a for a, b in zip(ts, ts[1:])):
                out.append("classSpec.ts: values must be positive and strictly ascending")
        elif has_ts:
            out.append("classSpec.ts: not accepted by solve-torus")
    elif has_c or has_kappa or has_ts:
        out.append(f"classSpec: not accepted by {command}")

    if command in ("solve-torus", "sweep-t"):
        grids = cfg["manifold"].get("grids")
        if (
            not isinstance(grids, list)
            or not grids
            or any(len(g) != 2 or min(g) < 4 for g in grids)
        ):
            out.append("manifold.grids: need a list of [n1, n2] pairs, each at least 4")
        # class resolution and closed-form gaps anchor the second coordinate
        # to a circumference of 2 pi
        if abs(cfg["manifold"]["period2"] - 2 * math.pi) > 1e-12:
            out.append("manifold.period2: closed-form comparisons need 2*pi")

    if command == "thresholds":
        ks = cfg["ks"] if cfg["ks"] is not None else [cfg["k"]]
        if not isinstance(ks, list) or any(
            not isinstance(k, int) or k < 1 for k in ks
        ):
            out.append("ks: degrees must be a list of integers >= 1")

    solver = cfg["solver"]
    if solver["gradTol"] <= 0 or solver["maxNewton"] <= 0 or solver["maxCG"] <= 0:
        out.append("solver: tolerances and iteration caps must be positive")
    quadrature = cfg["quadrature"]
    if quadrature["tol"] <= 0 or quadrature["maxLevel"] < 2:
        out.append("quadrature: tol must be positive and maxLevel at least 2")

    fmt = cfg["output"].get("format", "json")
    if fmt not in ("csv", "json"):
        out.append(f"output.format: must be 'csv' or 'json', got {fmt!r}")
    if cfg["thetaSamples"] < 8:
        out.append("thetaSamples: at least 8 samples are required")
    if cfg["samples"] < 1:
        out.append("samples: at least one fuzz sample is required")
    return out


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError([f"config: cannot read {path}: {err}"]) from err
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(
            [f"config: parse error at line {err.lineno}, column {err.colno}: {err.msg}"]
        ) from err
    if not isinstance(raw, dict):
        raise ConfigError(["config: top level must be a JSON object"])
    return raw


def validate(config_path) -> list:
    """Schema and invariant diagnostics for a config file, without executing."""
    try:
        raw = load_config(config_path)
    except ConfigError as err:
        return err.diagnostics
    return _diagnose(_merge_defaults(raw))


def _metric_h(cfg: dict) -> HFunction:
    metric = cfg["metric"]
    if "table" in metric:
        return h_from_table(metric["table"])
    return builtin_h(metric["builtin"])


def _solver_config(cfg: dict) -> SolverConfig:
    s = cfg["solver"]
    return SolverConfig(
        grad_tol=s["gradTol"], max_newton=s["maxNewton"], max_cg=s["maxCG"]
    )


# ---------------------------------------------------------------------------
# command payloads
# ---------------------------------------------------------------------------

def _run_figure2(cfg):
    h = _metric_h(cfg)
    k = cfg["k"]
    cs = cfg["classSpec"]["c"]
    cs = [float(c) for c in (cs if isinstance(cs, list) else [cs])]
    period = cfg["manifold"]["period2"]
    thetas = np.linspace(-period / 2.0, period / 2.0, cfg["thetaSamples"])
    folded = fold_to_half_period(thetas, period)
    curves = [
        {"c": c, "absAlpha": [float(v) for v in solution_norm_value(c, h, k, folded)]}
        for c in cs
    ]
    payload = {"theta": [float(t) for t in thetas], "curves": curves}
    columns = ["theta"] + [f"absAlpha_{c:g}" for c in cs]
    rows = [
        [payload["theta"][i]] + [curve["absAlpha"][i] for curve in curves]
        for i in range(len(thetas))
    ]
    return payload, columns, rows


def _resolve_class(cfg, h, quad_tol):
    class_spec = cfg["classSpec"]
    if "c" in class_spec:
        c = float(class_spec["c"])
        kappa = class_scale(c, h, 1, tol=quad_tol)
    else:
        kappa = float(class_spec["kappa"])
        c = constant_for_class_scale(kappa, h, 1, tol=max(quad_tol, 1e-13))
    return c, kappa


def _run_solve_torus(cfg):
    h = _metric_h(cfg)
    quad_tol = min(cfg["quadrature"]["tol"], 1e-12)
    c, kappa = _resolve_class(cfg, h, quad_tol)
    solver = _solver_config(cfg)
    manifold = cfg["manifold"]
    levels = []
    for n1, n2 in manifold["grids"]:
        grid, metric = build_torus(
            n1, n2, h, period1=manifold["period1"], period2=manifold["period2"]
        )
        sol = minimize(constant_form(grid, kappa2=kappa), metric, gms_model(), solver)
        levels.append(
            {
                "n1": n1,
                "n2": n2,
                "energy": sol.energy.value,
                "tvValue": sol.energy.tv_value,
                "supNorm": sol.energy.max_pointwise_norm,
                "gradNorm": sol.grad_norm,
                "newtonIters": sol.newton_iters,
                "cgIters": sol.cg_iters,
                "supGap": closed_form_cochain_gap(sol.alpha, c, h),
            }
        )
    payload = {"c": c, "kappa": kappa, "levels": levels}
    columns = [
        "n1", "n2", "energy", "tvValue", "supNorm",
        "gradNorm", "newtonIters", "cgIters", "supGap",
    ]
    rows = [[level[col] for col in columns] for level in levels]
    return payload, columns, rows


def _run_sweep_t(cfg):
    h = _metric_h(cfg)
    quad_tol = min(cfg["quadrature"]["tol"], 1e-12)
    c, kappa = _resolve_class(cfg, h, quad_tol)
    n1, n2 = cfg["manifold"]["grids"][0]
    manifold = cfg["manifold"]
    grid, metric = build_torus(
        n1, n2, h, period1=manifold["period1"], period2=manifold["period2"]
    )
    report = t_sweep(
        constant_form(grid, kappa2=kappa),
        metric,
        [float(t) for t in cfg["classSpec"]["ts"]],
        _solver_config(cfg),
    )
    entries = [
        {
            "t": e.t,
            "tGmsValue": e.tgms_value,
            "tvValue": e.tv_value,
            "supNorm": e.sup_norm,
            "harmonicGap": e.harmonic_gap,
            "gammaUpperBound": e.gamma_upper_bound,
            "gradNorm": e.solution.grad_norm,
            "newtonIters": e.solution.newton_iters,
        }
        for e in report.entries
    ]
    payload = {
        "c": c,
        "kappa": kappa,
        "harmonicSupNorm": report.harmonic_sup,
        "entries": entries,
    }
    columns = [
        "t", "tGmsValue", "tvValue", "supNorm",
        "harmonicGap", "gammaUpperBound", "gradNorm", "newtonIters",
    ]
    rows = [[entry[col] for col in columns] for entry in entries]
    return payload, columns, rows


def _run_thresholds(cfg):
    h = _metric_h(cfg)
    ks = cfg["ks"] if cfg["ks"] is not None else [cfg["k"]]
    quadrature = cfg["quadrature"]
    entries = []
    for k in ks:
        report = critical_class_scale(
            h, k, tol=quadrature["tol"], max_level=quadrature["maxLevel"]
        )
        entries.append(
            {
                "k": k,
                "cStar": critical_constant(h, k),
                "kappaStar": report.kappa_star,
                "divergent": report.divergent,
            }
        )
    payload = {"entries": entries}
    columns = ["k", "cStar", "kappaStar", "divergent"]
    rows = [[entry[col] for col in columns] for entry in entries]
    return payload, columns, rows


def _run_bi_check(cfg):
    rng = np.random.default_rng(cfg["seed"])
    samples = cfg["samples"]
    det_gap = wedge_gap = resolvent_gap = 0.0
    sandwich_violations = 0
    for _ in range(samples):
        f = random_two_form(rng)
        det_gap = max(det_gap, det_identity_gap(f))
        split = sd_split(f)
        wedge_gap = max(
            wedge_gap,
            abs(wedge_square(f) - (split.plus.norm_squared - split.minus.norm_squared)),
        )
        gms, bi, hodge = sandwich(f)
        if gms > bi + 1e-14 or bi > hodge + 1e-14:
            sandwich_violations += 1
        t = float(rng.uniform(-5.0, 5.0))
        resolvent_gap = max(resolvent_gap, resolvent_asym_gap(f, t))
    sd_count = max(1, samples // 10)
    residual_gap = hodge_gap = 0.0
    for _ in range(sd_count):
        f = random_selfdual_form(rng)
        residual_gap = max(
            residual_gap, float(np.max(np.abs(bi_el_residual(f) - f.as_matrix())))
        )
        _, bi, hodge = sandwich(f)
        hodge_gap = max(hodge_gap, abs(bi - hodge))
    stats = [
        ("samples", samples),
        ("seed", cfg["seed"]),
        ("detGapMax", float(det_gap)),
        ("wedgeSplitGapMax", float(wedge_gap)),
        ("sandwichViolations", sandwich_violations),
        ("resolventGapMax", float(resolvent_gap)),
        ("selfdualSamples", sd_count),
        ("selfdualResidualGapMax", float(residual_gap)),
        ("selfdualHodgeGapMax", float(hodge_gap)),
    ]
    payload = {name: value for name, value in stats}
    return payload, ["metric", "value"], [[name, value] for name, value in stats]


_RUNNERS = {
    "figure2": _run_figure2,
    "solve-torus": _run_solve_torus,
    "sweep-t": _run_sweep_t,
    "thresholds": _run_thresholds,
    "bi-check": _run_bi_check,
}


def run(raw_config: dict) -> RunRecord:
    """Validate and execute one experiment config."""
    cfg = _merge_defaults(raw_config)
    diagnostics = _diagnose(cfg)
    if diagnostics:
        raise ConfigError(diagnostics)
    start = time.perf_counter()
    payload, columns, rows = _RUNNERS[cfg["command"]](cfg)
    return RunRecord(
        command=cfg["command"],
        config=cfg,
        version=f"gms-v{__version__}",
        payload=payload,
        wall_time=time.perf_counter() - start,
        columns=columns,
        rows=rows,
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _format_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def record_to_csv(record: RunRecord) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(record.columns)
    for row in record.rows:
        writer.writerow([_format_cell(v) for v in row])
    return buf.getvalue()


def record_to_json(record: RunRecord) -> str:
    # wall time stays out of the document so identical runs give identical bytes
    doc = {
        "command": record.command,
        "config": record.config,
        "version": record.version,
        "payload": record.payload,
    }
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=True) + "\n"


def write_record(record: RunRecord, path: str, fmt: str) -> None:
    if fmt == "csv":
        text = record_to_csv(record)
        meta = record_to_json(
            RunRecord(
                command=record.command,
                config=record.config,
                version=record.version,
                payload={"table": path},
            )
        )
    else:
        text = record_to_json(record)
        meta = None
    if path == "-":
        sys.stdout.write(text)
        return
    Path(path).write_text(text, newline="")
    if meta is not None:
        Path(path).with_suffix(Path(path).suffix + ".meta.json").write_text(meta)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

_SVG_COMMANDS = ("figure2", "sweep-t", "solve-torus")
_SVG_PALETTE = ("#c0392b", "#2980b9", "#27ae60", "#8e44ad", "#d35400", "#16a085")


def render_svg(record: RunRecord, width: int = 640, height: int = 440) -> str:
    """Plain polyline chart of a numeric payload table, first column as x."""
    cols = record.columns
    rows = [[float(v) for v in row] for row in record.rows]
    xs = [row[0] for row in rows]
    margin = 52.0
    x_lo, x_hi = min(xs), max(xs)
    ys = [row[i] for row in rows for i in range(1, len(cols))]
    y_lo, y_hi = min(ys), max(ys)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0
    to_x = lambda v: margin + (v - x_lo) / x_span * (width - 2 * margin)
    to_y = lambda v: height - margin - (v - y_lo) / y_span * (height - 2 * margin)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" '
        f'stroke="black"/>',
        f'<text x="{margin}" y="{height - margin + 16}" font-size="10">{x_lo:g}</text>',
        f'<text x="{width - margin}" y="{height - margin + 16}" font-size="10" '
        f'text-anchor="end">{x_hi:g}</text>',
        f'<text x="{margin - 4}" y="{height - margin}" font-size="10" '
        f'text-anchor="end">{y_lo:g}</text>',
        f'<text x="{margin - 4}" y="{margin}" font-size="10" text-anchor="end">'
        f"{y_hi:g}</text>",
        f'<text x="{width / 2}" y="{height - 12}" font-size="11" '
        f'text-anchor="middle">{cols[0]}</text>',
    ]
    for i, name in enumerate(cols[1:], start=1):
        color = _SVG_PALETTE[(i - 1) % len(_SVG_PALETTE)]
        points = " ".join(f"{to_x(row[0]):.2f},{to_y(row[i]):.2f}" for row in rows)
        parts.append(f'<polyline points="{points}" fill="none" stroke="{color}"/>')
        parts.append(
            f'<text x="{width - margin + 4}" y="{margin + 14 * i}" font-size="10" '
            f'fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="gms", description="experiment runner for the form-energy solvers"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS + ("validate",):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a JSON config")
        if name != "validate":
            p.add_argument("--seed", type=int, default=None, help="override config seed")
            p.add_argument("--out", default=None, help="override output path")
            p.add_argument(
                "--format", choices=("csv", "json"), default=None,
                help="override output format",
            )
        if name in _SVG_COMMANDS:
            p.add_argument(
                "--svg", default=None,
                help="also render the payload table as an SVG line chart",
            )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "validate":
        diagnostics = validate(args.config)
        for line in diagnostics:
            print(line, file=sys.stderr)
        return 2 if diagnostics else 0
    try:
        raw = load_config(args.config)
        raw["command"] = raw.get("command", args.command)
        if raw["command"] != args.command:
            raise ConfigError(
                [f"command: config says {raw['command']!r} but CLI asked for "
                 f"{args.command!r}"]
            )
        if args.seed is not None:
            raw["seed"] = args.seed
        record = run(raw)
        output = record.config["output"]
        path = args.out if args.out is not None else output.get("path", "-")
        fmt = args.format if args.format is not None else output.get("format", "json")
        write_record(record, path, fmt)
        if getattr(args, "svg", None):
            Path(args.svg).write_text(render_svg(record))
        print(
            f"gms {record.command}: wrote {path} in {record.wall_time:.3f}s",
            file=sys.stderr,
        )
        return 0
    except ConfigError as err:
        for line in err.diagnostics:
            print(line, file=sys.stderr)
        return 2
    except (NonConvergenceError, PrecisionError) as err:
        print(f"gms {args.command}: {err}", file=sys.stderr)
        return 3
    except GmsError as err:
        print(f"gms {args.command}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
