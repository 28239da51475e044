"""Command-line front end: ``tpng-impact run | compare | validate``.

Exit codes: 0 success, 1 a run aborted, 2 configuration or CSV error,
3 a check failed.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import GuidanceError, ScenarioParseError, ValidationError
from .guidance import Variant, reaching_times
from .plotting import render_plots
from .scenario import (
    MalformedCsv, ScenarioSpec, default_scenario, load_scenario,
    read_trajectory_csv, write_summary_csv, write_trajectory_csv,
)
from .sim import RunSpec, SimResult, TrajectoryLog, simulate

log = logging.getLogger("tpng_impact")

EXIT_OK = 0
EXIT_ABORTED = 1
EXIT_CONFIG = 2
EXIT_CHECK = 3

OUT_ENV = "TPNG_OUT"
DEFAULT_OUT = "tpng_out"

S_MONOTONE_FLOOR = 1e-9
DECAY_RATE_TOL = 0.05
MIN_DECAY_SAMPLES = 200


@dataclass
class RunArtifacts:
    csv_path: Path
    summary: dict
    svgs: list[Path] = field(default_factory=list)


def _fmt(x, spec=".4f"):
    if x is None:
        return "-"
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, float):
        return "nan" if math.isnan(x) else format(x, spec)
    return str(x)


def print_table(headers, rows, out=None):
    out = out or sys.stdout
    cells = [[_fmt(v) for v in row] for row in rows]
    widths = [max(len(h), *(len(r[i]) for r in cells)) for i, h in enumerate(headers)]
    print("  ".join(h.rjust(w) for h, w in zip(headers, widths)), file=out)
    for r in cells:
        print("  ".join(c.rjust(w) for c, w in zip(r, widths)), file=out)


def _summary_table(results: list[SimResult]):
    headers = ["run", "hit", "t_f[s]", "miss[m]", "t_f-t_d[s]", "t_conv[s]", "J[m2/s3]",
               "|a_I|max", "|a_c|max", "clamp", "guard", "aborted"]
    rows = [[r.label, r.intercepted, r.t_f, r.miss, r.impact_time_error, r.convergence_time,
             r.control_effort_j, r.peak_a_i, r.peak_a_cmd, r.clamp_events, r.guard_events,
             r.aborted or "-"] for r in results]
    print_table(headers, rows)


def _output_root(args, spec: ScenarioSpec) -> Path:
    root = args.out or spec.out_dir or os.environ.get(OUT_ENV) or DEFAULT_OUT
    return Path(root) / spec.name


def _simulate_all(runs: list[RunSpec], jobs: int) -> list[tuple[SimResult, TrajectoryLog]]:
    if jobs > 1 and len(runs) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(runs))) as pool:
            return list(pool.map(simulate, runs))
    return [simulate(r) for r in runs]


def _safe_name(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_.=" else "_" for ch in label)


def write_artifacts(outcomes, out_dir: Path, plots: bool) -> list[RunArtifacts]:
    """Per-run CSVs, ``summary.csv`` and (optionally) the overlaid SVG panels."""
    out_dir.mkdir(parents=True, exist_ok=True)
    svgs = render_plots([lg for _, lg in outcomes], out_dir / "plots") if plots else []
    artifacts = []
    for result, lg in outcomes:
        path = write_trajectory_csv(lg, out_dir / f"{_safe_name(result.label)}.csv")
        artifacts.append(RunArtifacts(path, result.summary_row(), svgs))
    write_summary_csv([a.summary for a in artifacts], out_dir / "summary.csv")
    return artifacts


def _load(args) -> ScenarioSpec:
    spec = load_scenario(args.config) if args.config else default_scenario()
    return spec.with_overrides(t_d=getattr(args, "td", None), dt=getattr(args, "dt", None),
                               variant=getattr(args, "variant", None),
                               boundary_layer=getattr(args, "boundary_layer", None))


def cmd_run(args) -> int:
    spec = _load(args)
    outcomes = _simulate_all(spec.runs(), args.jobs)
    results = [r for r, _ in outcomes]
    _summary_table(results)
    out_dir = _output_root(args, spec)
    plots = spec.plots if args.plots is None else args.plots == "on"
    write_artifacts(outcomes, out_dir, plots)
    print(f"wrote {out_dir}")
    return EXIT_ABORTED if any(r.aborted for r in results) else EXIT_OK


def cmd_compare(args) -> int:
    spec = _load(args)
    base = spec.with_overrides(variant=Variant.STANDARD.value)
    if len(base.runs()) != 1:
        raise ValidationError("compare expects a single engagement (no sweep axes besides variant)")
    runs = []
    for variant in (Variant.STANDARD, Variant.EXPONENTIAL):
        run = spec.with_overrides(variant=variant.value).runs()[0]
        runs.append(RunSpec(run.initial, run.guidance, run.saturation, run.config, variant.value))
    outcomes = _simulate_all(runs, args.jobs)
    (std, _), (exp, lg_exp) = outcomes

    print_table(["reaching law", "t_conv[s]", "J[m2/s3]", "t_f[s]", "miss[m]"],
                [[r.label, r.convergence_time, r.control_effort_j, r.t_f, r.miss] for r in (std, exp)])
    s0 = float(lg_exp["s"][0])
    t_r1, t_r2 = reaching_times(s0, runs[1].guidance)
    print(f"S(0) = {s0:.6f}  analytic reaching times: t_r1 = {t_r1:.6f} s, t_r2 = {t_r2:.6f} s")

    out_dir = _output_root(args, spec)
    plots = spec.plots if args.plots is None else args.plots == "on"
    write_artifacts(outcomes, out_dir, plots)
    print(f"wrote {out_dir}")

    if std.aborted or exp.aborted:
        return EXIT_ABORTED
    ok = (std.convergence_time is not None and exp.convergence_time is not None
          and exp.convergence_time <= std.convergence_time)
    print(f"ordering t_conv(exponential) <= t_conv(standard): {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_CHECK


def _check_wellformed(lg: TrajectoryLog):
    t = lg["t"]
    problems = []
    if len(t) > 1 and not np.all(np.diff(t) > 0):
        problems.append("time column not strictly increasing")
    for name in ("x_i", "y_i", "x_t", "y_t", "r", "v_i", "gamma_i", "t_go", "e", "s", "a_i", "a_cmd"):
        if not np.all(np.isfinite(lg[name])):
            problems.append(f"non-finite values in {name}")
    for name in ("clamped", "b_guard"):
        if not np.all(np.isin(lg[name], (0.0, 1.0))):
            problems.append(f"{name} is not a 0/1 flag")
    return not problems, "; ".join(problems) or f"{len(t)} rows"


def _check_bounds(lg: TrajectoryLog, a_min: float, a_max: float):
    a = lg["a_i"]
    bad = np.nonzero(~((a > a_min) & (a < a_max)))[0]
    if len(bad):
        k = bad[0]
        return False, f"{len(bad)} samples outside ({a_min:g}, {a_max:g}); first t={lg['t'][k]:.4f} a_i={a[k]:.6g}"
    return True, f"a_i in [{a.min():.4f}, {a.max():.4f}]"


def _check_s_monotone(lg: TrajectoryLog):
    """|S| must not grow across a step unless a clamp or guard is involved."""
    s = np.abs(lg["s"])
    flagged = (lg["clamped"] > 0) | (lg["b_guard"] > 0)
    excused = flagged[:-1] | flagged[1:]
    growth = s[1:] - s[:-1]
    bad = np.nonzero((growth > S_MONOTONE_FLOOR * np.maximum(1.0, s[:-1])) & ~excused)[0]
    if len(bad):
        k = bad[0]
        return False, f"{len(bad)} increases; first at t={lg['t'][k + 1]:.4f} (+{growth[k]:.3e})"
    return True, f"{int(excused.sum())} flagged steps excused"


def _check_decay(lg: TrajectoryLog, alpha: float):
    """On the surface, e(t) decays like exp(-alpha t); fit the log-slope."""
    e = np.abs(lg["e"])
    s = np.abs(lg["s"])
    on = (s < 0.01 * alpha * e) & (e > 1e-7) & (lg["clamped"] == 0) & (lg["b_guard"] == 0)
    if on.sum() < MIN_DECAY_SAMPLES:
        return True, f"skipped: only {int(on.sum())} on-surface samples"
    slope = np.polyfit(lg["t"][on], np.log(e[on]), 1)[0]
    rate = -slope
    ok = abs(rate - alpha) <= DECAY_RATE_TOL * alpha
    return ok, f"fitted rate {rate:.4f} vs alpha {alpha:g} over {int(on.sum())} samples"


def cmd_validate(args) -> int:
    lg = read_trajectory_csv(args.csv)
    if args.config:
        spec = load_scenario(args.config)
        a_min, a_max = spec.saturation.a_min, spec.saturation.a_max
        alpha = spec.guidance["alpha"]
    else:
        a_min, a_max, alpha = -4.0, 8.0, 1.2
    a_min = args.a_min if args.a_min is not None else a_min
    a_max = args.a_max if args.a_max is not None else a_max
    alpha = args.alpha if args.alpha is not None else alpha

    checks = [("well-formed", _check_wellformed(lg)),
              ("acceleration bounds", _check_bounds(lg, a_min, a_max)),
              ("|S| monotone", _check_s_monotone(lg)),
              ("e decay rate", _check_decay(lg, alpha))]
    for name, (ok, detail) in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all(ok for _, (ok, _) in checks) else EXIT_CHECK


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tpng-impact",
        description="Impact-time guidance with bounded interceptor acceleration.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def sim_flags(p):
        p.add_argument("--config", help="scenario INI file (defaults built in)")
        p.add_argument("--out", help=f"output root (default ${OUT_ENV} or ./{DEFAULT_OUT})")
        p.add_argument("--dt", type=float, help="integration step [s]")
        p.add_argument("--jobs", type=_positive_int, default=1, help="parallel runs")
        p.add_argument("--plots", choices=("on", "off"), help="write SVG panels")
        p.add_argument("--boundary-layer", dest="boundary_layer",
                       help="tanh boundary-layer width for sign(S), or 'off'")

    p = sub.add_parser("run", help="simulate a scenario or sweep")
    sim_flags(p)
    p.add_argument("--td", type=float, help="desired impact time [s]")
    p.add_argument("--variant", choices=[v.value for v in Variant])
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="standard vs exponential reaching law")
    sim_flags(p)
    p.add_argument("--td", type=float, help="desired impact time [s]")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate", help="check invariants on a trajectory CSV")
    p.add_argument("csv")
    p.add_argument("--config", help="scenario the CSV came from (bounds and alpha)")
    p.add_argument("--a-min", dest="a_min", type=float)
    p.add_argument("--a-max", dest="a_max", type=float)
    p.add_argument("--alpha", type=float)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioParseError, ValidationError, MalformedCsv) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GuidanceError as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_ABORTED


if __name__ == "__main__":
    sys.exit(main())
