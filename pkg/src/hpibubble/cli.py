"""Command-line front end.

Every subcommand reads a panel (or a scenario), calls the library and
writes one file per region plus a pooled file into ``--out``.  CSV outputs
start with ``#`` lines naming the library version and the invocation; JSON
outputs carry the same under ``meta``.

Exit status: 0 on success, 1 on bad input or usage, 2 on internal errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import shlex
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .errors import HpiBubbleError, NoCrossoverError
from .fitting import TIME_UNITS, FitOptions, fit_model
from .forecast import evaluate_signs, forecast_levels, predict_signs
from .models import ModelKind, classify_regime
from .phase import (DEFAULT_SEGMENTATION, WHOLE_SPAN, PeriodSegmentation, all_points,
                    ode_singularity_time, regress_growth_on_price)
from .seasonality import decompose_bilinear, periodogram, pool_growth, sign_table
from .series import (MonthStamp, PricePanel, as_stamp, clip, compute_growth, dump_panel,
                     format_value, load_panel, month_profile, parse_window)
from .synth import ScenarioSpec, generate, truth_json


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage().strip()}\n{self.prog}: error: {message}")


# --------------------------------------------------------------------------- output

class Output:
    """Serialized writer for one run; every file gets the run's provenance."""

    def __init__(self, directory: Path, command: str, invocation: str):
        self.dir = directory
        self.command = command
        self.invocation = invocation
        self.written: list[Path] = []

    def _path(self, tag: str, ext: str) -> Path:
        safe = re.sub(r"[^A-Za-z0-9._-]", "_", tag)
        return self.dir / f"{self.command}_{safe}.{ext}"

    def csv(self, tag: str, header, rows) -> Path:
        lines = [f"# hpibubble {__version__}", f"# invocation: {self.invocation}", ",".join(header)]
        for row in rows:
            lines.append(",".join(_cell(v) for v in row))
        return self._write(self._path(tag, "csv"), "\n".join(lines) + "\n")

    def text(self, tag: str, body: str, ext: str = "csv") -> Path:
        head = f"# hpibubble {__version__}\n# invocation: {self.invocation}\n"
        return self._write(self._path(tag, ext), head + body)

    def json(self, tag: str, payload) -> Path:
        doc = {"meta": {"version": __version__, "invocation": self.invocation}, "data": payload}
        return self._write(self._path(tag, "json"), json.dumps(doc, indent=2, allow_nan=True) + "\n")

    def _write(self, path: Path, text: str) -> Path:
        path.write_text(text, encoding="utf-8")
        self.written.append(path)
        return path


def _cell(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return format_value(v)
    return str(v)


def _per_region(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _stamp_of(ordinal: float) -> str:
    base = MonthStamp.from_ordinal(math.floor(ordinal))
    return f"{base}+{ordinal - math.floor(ordinal):.2f}"


def _load(args) -> PricePanel:
    return load_panel(args.input)


def _clipped_panel(panel: PricePanel, win) -> PricePanel:
    if win is None:
        return panel
    kept = [s for s in (clip(s, *win) for s in panel) if s is not None]
    if not kept:
        raise HpiBubbleError(f"window {win[0]}:{win[1]} does not overlap the panel")
    return PricePanel.from_series(kept)


# --------------------------------------------------------------------------- subcommands

def cmd_ingest(args, out: Output):
    panel = _clipped_panel(_load(args), args.window)
    for s in panel:
        out.csv(s.region_code, ["date", "value"], zip(map(str, s.stamps()), s.values.tolist()))
        print(f"{s.region_code}: {len(s)} months {s.start}..{s.end}")
    out.text("pooled", dump_panel(panel))


def cmd_growth(args, out: Output):
    panel = _clipped_panel(_load(args), args.window)
    pooled = []
    for s in panel:
        g = compute_growth(s)
        rows = list(zip(map(str, g.stamps()), g.values.tolist()))
        out.csv(s.region_code, ["date", "growth"], rows)
        pooled += [(s.region_code, d, v) for d, v in rows]
        print(f"{s.region_code}: {len(g)} growth rates {g.start}..{g.end}, mean {g.values.mean():.5f}")
    out.csv("pooled", ["region", "date", "growth"], pooled)


def cmd_fit(args, out: Output):
    panel = _load(args)
    kind = ModelKind.parse(args.model)
    opts = FitOptions(n_starts=args.starts, max_evals=args.max_evals, seed=args.seed,
                      time_unit=args.time_unit)

    def one(s):
        try:
            return fit_model(kind, s, args.window, opts), None
        except NoCrossoverError as err:
            return getattr(err, "result", None), str(err)

    records = []
    for s, (res, problem) in zip(panel, _per_region(one, list(panel), args.workers)):
        rec = {"region": s.region_code}
        if res is not None:
            rec.update(res.to_dict())
            try:
                rec["regime"] = classify_regime(kind, res.params).value
            except HpiBubbleError:
                rec["regime"] = None
        if problem:
            rec["error"] = problem
        out.json(s.region_code, rec)
        records.append(rec)
        if problem:
            print(f"{s.region_code}: {kind.value} {problem}")
        else:
            p = res.params
            tc = f" t_c={_stamp_of(p.t_c)}" if hasattr(p, "t_c") else ""
            m = f" m={p.m:.4f}" if hasattr(p, "m") else ""
            print(f"{s.region_code}: {kind.value}{tc}{m} rms={res.rms:.4g} "
                  f"converged={res.converged}")
    out.json("pooled", records)


def _segmentation(text):
    if text is None:
        return DEFAULT_SEGMENTATION
    if text.strip().lower() in ("", "none"):
        return WHOLE_SPAN
    return PeriodSegmentation(tuple(as_stamp(x) for x in text.split(",")))


def cmd_phase(args, out: Output):
    panel = _clipped_panel(_load(args), args.window)
    seg = _segmentation(args.boundaries)
    pts = all_points(panel, seg)
    report = regress_growth_on_price(panel, seg)
    for code in panel.regions:
        sel = pts.select(pts.region == code)
        out.csv(code, ["period", "region", "date", "p", "g"], sel.rows())
        r = report.regions[code]
        print(f"{code}: n={r.n} slope/100={r.slope_per_100:.5f} intercept={r.intercept:.5f} "
              f"corr={r.correlation:.3f}")
    out.json("pooled", {
        "pooled": report.pooled.to_dict(),
        "periods": {k: v.to_dict() for k, v in report.periods.items()},
        "regions": {k: v.to_dict() for k, v in report.regions.items()},
        "region_corr_mean": report.region_corr_mean,
        "region_corr_std": report.region_corr_std,
        "boundaries": [str(b) for b in seg.boundaries],
    })
    r = report.pooled
    print(f"pooled: n={r.n} slope/100={r.slope_per_100:.5f} intercept={r.intercept:.5f} "
          f"corr={r.correlation:.3f} region corr {report.region_corr_mean:.3f} "
          f"+- {report.region_corr_std:.3f}")


def _ode_record(alpha, beta, p0, t0):
    t_c = ode_singularity_time(alpha, beta, p0, t0 if t0 is not None else 0.0)
    rec = {"alpha": alpha, "slope_per_100": 100.0 * alpha, "beta": beta,
           "intercept": -beta, "p0": p0, "threshold_price": beta / alpha,
           "t0": None if t0 is None else str(t0), "blows_up": t_c is not None}
    if t_c is not None:
        origin = 0.0 if t0 is None else float(as_stamp(t0).ordinal)
        rec["months_to_singularity"] = t_c - origin
        if t0 is not None:
            rec["t_c_ordinal"] = t_c
            rec["t_c_year"] = t_c / 12.0
            rec["t_c_month"] = _stamp_of(t_c)
    return rec


def _ode_line(rec):
    head = f"alpha={rec['alpha']:.4g} (slope/100={rec['slope_per_100']:.5f}) beta={rec['beta']:.5f} p0={rec['p0']:.4g}"
    if not rec["blows_up"]:
        return head + " no finite-time singularity"
    tail = f" t_c in {rec['months_to_singularity']:.2f} months"
    if "t_c_month" in rec:
        tail += f" ({rec['t_c_month']})"
    return head + tail


def cmd_ode(args, out: Output):
    if args.alpha is not None and args.slope_per_100 is not None:
        raise UsageError("give --alpha or --slope-per-100, not both")
    alpha = args.alpha if args.alpha is not None else (
        None if args.slope_per_100 is None else args.slope_per_100 / 100.0)
    beta = args.beta
    if args.input is None:
        if alpha is None or beta is None:
            raise UsageError("without --input both a slope (--alpha or --slope-per-100) and --beta are required")
        rec = _ode_record(alpha, beta, args.p0, args.t0)
        out.json("pooled", rec)
        print("pooled: " + _ode_line(rec))
        return
    panel = _clipped_panel(_load(args), args.window)
    if alpha is None or beta is None:
        fit = regress_growth_on_price(panel).pooled
        alpha = fit.alpha if alpha is None else alpha
        beta = fit.beta if beta is None else beta
    for s in panel:
        rec = _ode_record(alpha, beta, float(s.values[-1]), s.end)
        rec["region"] = s.region_code
        out.json(s.region_code, rec)
        print(f"{s.region_code}: " + _ode_line(rec))
    rec = _ode_record(alpha, beta, args.p0, args.t0)
    out.json("pooled", rec)
    print("pooled: " + _ode_line(rec))


def cmd_spectrum(args, out: Output):
    panel = _clipped_panel(_load(args), args.window)
    growth = [compute_growth(s) for s in panel]
    grams = _per_region(lambda g: periodogram(g, args.oversample, args.max_frequency), growth, args.workers)
    grams.append(periodogram(pool_growth(growth) if len(growth) > 1 else growth[0],
                             args.oversample, args.max_frequency, series_id="pooled"))
    for pg in grams:
        out.csv(pg.series_id, ["frequency", "power", "mirrored"],
                zip(pg.frequencies.tolist(), pg.power.tolist(), pg.mirrored.tolist()))
        print(f"{pg.series_id}: peak at f={pg.peak_frequency(0, 6.0):.3f}/yr, variance {pg.variance():.4g}")


def cmd_profile(args, out: Output):
    panel = _load(args)
    lo, hi = args.window if args.window else (None, None)
    growth = [compute_growth(s) for s in panel]
    for g in growth:
        prof = month_profile([g], lo, hi)
        out.json(g.region_code, prof.to_dict())
        k = int(prof.mean.argmax())
        print(f"{g.region_code}: strongest month {prof.to_dict()['months'][k]['month']} "
              f"mean {prof.mean[k]:.5f}")
    prof = month_profile(growth, lo, hi)
    out.json("pooled", prof.to_dict())


def _decomposition_record(dec):
    return {"years": dec.years, "f": dec.f.tolist(), "j": dec.j.tolist(), "h": dec.h.tolist(),
            "residual_rms": dec.residual_rms, "iterations": dec.iterations,
            "converged": dec.converged, "degenerate": dec.degenerate,
            "argmax_f": dec.argmax_year("f"), "argmax_j": dec.argmax_year("j")}


def cmd_decompose(args, out: Output):
    panel = _load(args)
    years = None
    if args.years:
        a, _, b = args.years.partition(":")
        years = (int(a), int(b or a))
    growth = [compute_growth(s) for s in panel]
    decs = _per_region(lambda g: decompose_bilinear(g, years), growth, args.workers)
    decs.append(decompose_bilinear(growth, years))
    for code, dec in zip(panel.regions + ["pooled"], decs):
        out.json(code, _decomposition_record(dec))
        print(f"{code}: years {dec.years[0]}-{dec.years[-1]} argmax f {dec.argmax_year('f')}, "
              f"argmax j {dec.argmax_year('j')}, residual rms {dec.residual_rms:.3g}")


SIGN_HEADER = ["month", "plus_pct", "minus_pct", "sign", "pct"]


def cmd_signs(args, out: Output):
    panel = _load(args)
    growth = [compute_growth(s) for s in panel]
    for g in growth:
        tab = sign_table([g], args.from_, args.to, args.attribution)
        out.csv(g.region_code, SIGN_HEADER, tab.rows())
        print(f"{g.region_code}: {''.join(tab.dominant_sign)}")
    tab = sign_table(growth, args.from_, args.to, args.attribution)
    out.csv("pooled", SIGN_HEADER, tab.rows())
    print(f"pooled: {''.join(tab.dominant_sign)}")


def cmd_forecast(args, out: Output):
    panel = _load(args)
    fcs = _per_region(lambda code: forecast_levels(panel, code, args.scheme, args.window, args.horizon),
                      panel.regions, args.workers)
    pooled = []
    for fc in fcs:
        rows = list(fc.rows())
        out.csv(fc.region_code, ["date", "level", "low", "high"], rows)
        pooled += [(fc.region_code, *r) for r in rows]
        print(f"{fc.region_code}: {fc.scheme.value} from {fc.origin}, "
              f"{fc.dates[-1]} level {fc.predicted_levels[-1]:.4g}")
    out.csv("pooled", ["region", "date", "level", "low", "high"], pooled)


def cmd_evaluate(args, out: Output):
    train = _load(args)
    realized_panel = load_panel(args.realized) if args.realized else train
    if args.months is None:
        raise UsageError("--months YYYY-MM:YYYY-MM is required")
    lo, hi = args.months
    months = [lo.shift(k) for k in range(hi - lo + 1)]
    table = sign_table([compute_growth(s) for s in train], args.from_, args.to, args.attribution)
    pred = predict_signs(table, months)
    realized = [compute_growth(s) for s in realized_panel]
    for g in realized:
        ev = evaluate_signs(pred, [g])
        out.csv(g.region_code, ["month", "predicted", "hits", "totals", "zeros", "ratio"], ev.rows())
        print(f"{g.region_code}: {int(ev.hits.sum())}/{int(ev.totals.sum())} signs right")
    ev = evaluate_signs(pred, realized)
    out.csv("pooled", ["month", "predicted", "hits", "totals", "zeros", "ratio"], ev.rows())
    print(f"pooled: {int(ev.hits.sum())}/{int(ev.totals.sum())} = {ev.overall:.3f}")


def cmd_synth(args, out: Output):
    with open(args.spec, encoding="utf-8") as fh:
        raw = json.load(fh)
    if args.seed is not None:
        raw["seed"] = args.seed
    spec = ScenarioSpec.from_dict(raw)
    panel, truth = generate(spec)
    for s in panel:
        out.csv(s.region_code, ["date", "value"], zip(map(str, s.stamps()), s.values.tolist()))
        print(f"{s.region_code}: {len(s)} months {s.start}..{s.end} seed {spec.seed}")
    out.text("pooled", dump_panel(panel))
    out.text("truth", truth_json(truth) + "\n", ext="json")


COMMANDS = {
    "ingest": (cmd_ingest, "load and validate a panel, rewrite it canonically"),
    "growth": (cmd_growth, "monthly log growth rates"),
    "fit": (cmd_fit, "fit a trend model to each region"),
    "phase": (cmd_phase, "growth versus price points and regressions"),
    "ode": (cmd_ode, "finite-time singularity of the growth-price law"),
    "spectrum": (cmd_spectrum, "periodogram of growth rates"),
    "profile": (cmd_profile, "calendar-month mean and spread of growth"),
    "decompose": (cmd_decompose, "bilinear seasonal decomposition"),
    "signs": (cmd_signs, "sign table of month-over-month growth changes"),
    "forecast": (cmd_forecast, "seasonal level forecast"),
    "evaluate": (cmd_evaluate, "score sign predictions against realized data"),
    "synth": (cmd_synth, "generate a synthetic panel from a scenario file"),
}

# subcommands that run without --input
NO_INPUT = {"synth", "ode"}


def _window(text):
    try:
        return parse_window(text)
    except (HpiBubbleError, ValueError) as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def _month(text):
    try:
        return as_stamp(text)
    except (HpiBubbleError, ValueError) as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hpibubble", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hpibubble {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    for name, (_, helptext) in COMMANDS.items():
        p = sub.add_parser(name, help=helptext, description=helptext)
        p.add_argument("--input", help="panel file (date column plus one column per region)")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--config", help="JSON file of option defaults; explicit flags win")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                       help="worker threads for per-region work")
        p.add_argument("--window", type=_window, help="inclusive YYYY-MM:YYYY-MM")
        if name == "fit":
            p.add_argument("--model", default="power-law", choices=[k.value for k in ModelKind])
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--starts", type=int, default=32)
            p.add_argument("--max-evals", type=int, default=2000)
            p.add_argument("--time-unit", default="month", choices=sorted(TIME_UNITS))
        elif name == "phase":
            p.add_argument("--boundaries", help="comma-separated months opening new periods, or 'none'")
        elif name == "ode":
            p.add_argument("--alpha", type=float, help="slope per index unit")
            p.add_argument("--slope-per-100", type=float, help="slope per 100 index units")
            p.add_argument("--beta", type=float)
            p.add_argument("--p0", type=float, default=100.0)
            p.add_argument("--t0", type=_month, help="start month of the pooled record")
        elif name == "spectrum":
            p.add_argument("--oversample", type=int, default=1)
            p.add_argument("--max-frequency", type=float, default=6.0)
        elif name == "decompose":
            p.add_argument("--years", help="inclusive FIRST:LAST calendar years")
        elif name in ("signs", "evaluate"):
            p.add_argument("--from", dest="from_", type=_month)
            p.add_argument("--to", type=_month)
            p.add_argument("--attribution", default="later", choices=["later", "earlier"])
            if name == "evaluate":
                p.add_argument("--realized", help="panel with the months to score (default: --input)")
                p.add_argument("--months", type=_window, help="predicted months YYYY-MM:YYYY-MM")
        elif name == "forecast":
            p.add_argument("--scheme", default="pooled", choices=["pooled", "per-index"])
            p.add_argument("--horizon", type=int, default=12)
        elif name == "synth":
            p.add_argument("--spec", required=True, help="scenario JSON file")
            p.add_argument("--seed", type=int, help="overrides the scenario seed")
    return parser


def _apply_config(parser, argv, args):
    """Re-parse with config values as defaults so explicit flags still win."""
    with open(args.config, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    if "from" in cfg:
        cfg["from_"] = cfg.pop("from")
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise UsageError(f"unknown option(s) in {args.config}: {', '.join(unknown)}")
    # string values go through the same converters as flags
    for action in sub._actions:
        if action.dest in cfg and action.type is not None and isinstance(cfg[action.dest], str):
            cfg[action.dest] = action.type(cfg[action.dest])
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def _validate_paths(args):
    for flag in ("input", "spec", "realized", "config"):
        path = getattr(args, flag, None)
        if path is not None and not Path(path).is_file():
            raise UsageError(f"--{flag}: no such file: {path}")
    if args.command not in NO_INPUT and args.input is None:
        raise UsageError(f"{args.command} needs --input")
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    out = Path(args.out)
    if out.exists() and not out.is_dir():
        raise UsageError(f"--out: not a directory: {out}")
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise UsageError(f"--out: not writable: {out}")


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            if not Path(args.config).is_file():
                raise UsageError(f"--config: no such file: {args.config}")
            args = _apply_config(parser, argv, args)
        _validate_paths(args)
    except UsageError as err:
        print(err, file=sys.stderr)
        return 1
    except SystemExit as err:  # --help and --version
        return 0 if not err.code else 1
    except (json.JSONDecodeError, argparse.ArgumentTypeError, ValueError) as err:
        print(f"hpibubble: error: {err}", file=sys.stderr)
        return 1

    out = Output(Path(args.out), args.command, shlex.join(["hpibubble", *argv]))
    try:
        COMMANDS[args.command][0](args, out)
    except UsageError as err:
        print(f"hpibubble {args.command}: error: {err}", file=sys.stderr)
        return 1
    except (HpiBubbleError, KeyError, ValueError, OSError, json.JSONDecodeError) as err:
        print(f"hpibubble {args.command}: error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # noqa: BLE001
        print(f"hpibubble {args.command}: internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
