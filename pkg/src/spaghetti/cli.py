"""Command-line front end: CSV series in, JSON or CSV plot data out.

The JSON document carries the input points, one record per leave-one-out
function, the prediction band on the evaluation grid, and both comparator
fits.  CSV output carries the band only; the nested per-function records
have no natural flat layout.  All numbers are rendered with 17 significant
digits so identical runs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from .ensemble import Ensemble, PredictionBand, band, build_ensemble, default_grid
from .errors import DegenerateInput, NotPositiveDefinite, ParseError
from .fit import FitConfig, SpaghettiFunction, TimeSeries

VERSION = "0.1.0"

EMIT_SECTIONS = ("functions", "band", "comparators")


@dataclass(frozen=True)
class RunConfig:
    """Everything one invocation needs: paths, formats, grid, fit ranges."""

    input_path: str
    output_path: str | None = None
    output_format: str = "json"
    grid_start: float | None = None
    grid_end: float | None = None
    grid_count: int = 401
    lambda_lo: float = 1e-6
    lambda_hi: float = 1e6
    lambda_ppd: int = 8
    sigma_lo_factor: float = 0.25
    sigma_hi_factor: float = 2.0
    refine: int = 36
    emit: tuple[str, ...] = EMIT_SECTIONS

    def __post_init__(self):
        if self.output_format not in ("json", "csv"):
            raise DegenerateInput(f"unknown format {self.output_format!r}")
        if self.grid_count < 2:
            raise DegenerateInput(f"grid count must be at least 2, got {self.grid_count}")
        if not self.lambda_lo < self.lambda_hi:
            raise DegenerateInput(
                f"lambda range is empty: lo={self.lambda_lo} hi={self.lambda_hi}"
            )
        bad = [name for name in self.emit if name not in EMIT_SECTIONS]
        if bad:
            raise DegenerateInput(f"unknown emit section {bad[0]!r}")

    def fit_config(self) -> FitConfig:
        return FitConfig(
            lambda_lo=self.lambda_lo,
            lambda_hi=self.lambda_hi,
            lambda_points_per_decade=self.lambda_ppd,
            sigma_lo_factor=self.sigma_lo_factor,
            sigma_hi_factor=self.sigma_hi_factor,
            refine_iterations=self.refine,
        )

    def grid(self, series: TimeSeries) -> np.ndarray:
        """Evaluation grid; data-driven bounds unless both ends are given."""
        if self.grid_start is None and self.grid_end is None:
            return default_grid(series, self.grid_count)
        lo = default_grid(series, 2)[0] if self.grid_start is None else self.grid_start
        hi = default_grid(series, 2)[-1] if self.grid_end is None else self.grid_end
        if not lo < hi:
            raise DegenerateInput(f"grid range is empty: start={lo} end={hi}")
        return np.linspace(lo, hi, self.grid_count)


def parse_csv(path: str) -> TimeSeries:
    """Read "x,y" rows into a series.

    A single leading header row is allowed and detected by any field that
    does not parse as a number.  Blank lines are skipped.  Line numbers in
    errors are 1-based and count every physical line, header included.
    """
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    points = []
    for number, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        fields = [f.strip() for f in text.split(",")]
        if len(fields) != 2:
            raise ParseError(number, f"expected two comma-separated fields, got {len(fields)}")
        try:
            pair = (float(fields[0]), float(fields[1]))
        except ValueError:
            # a header is only ever line 1, and announces itself by a
            # non-numeric first field ("x,y"); anything else is bad data
            if number == 1 and not points and _unparseable(fields[0]):
                continue
            offending = fields[0] if _unparseable(fields[0]) else fields[1]
            raise ParseError(number, f"not a number: {offending!r}") from None
        points.append(pair)
    if not points:
        raise ParseError(len(lines) + 1, "no data rows")
    return TimeSeries.from_points(points)


def _unparseable(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return True
    return False


def _render(value) -> str:
    """17-significant-digit rendering shared by the JSON and CSV writers."""
    return format(float(value), ".17g")


def _json(value, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _render(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, dict):
        if not value:
            return "{}"
        inner = ",\n".join(
            f'{pad}  "{key}": {_json(item, indent + 1)}' for key, item in value.items()
        )
        return "{\n" + inner + "\n" + pad + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        items = list(value)
        if not items:
            return "[]"
        flat = all(isinstance(v, (int, float, np.integer, np.floating)) for v in items)
        if flat:
            return "[" + ", ".join(_json(v) for v in items) + "]"
        inner = ",\n".join(f"{pad}  {_json(v, indent + 1)}" for v in items)
        return "[\n" + inner + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _function_record(fn: SpaghettiFunction, xs: np.ndarray) -> dict:
    record = {}
    if fn.left_out is not None:
        record["left_out"] = fn.left_out
    record.update(
        {
            "a": fn.line.intercept,
            "b": fn.line.slope,
            "sigma": fn.basis.sigma,
            "lambda": fn.lam,
            "weights": fn.weights,
            "values": fn(xs),
        }
    )
    return record


def _document(cfg: RunConfig, ensemble: Ensemble, xs: np.ndarray, pb: PredictionBand) -> dict:
    doc = {
        "points": [{"x": x, "y": y} for x, y in ensemble.series.points],
    }
    if "functions" in cfg.emit:
        doc["functions"] = [_function_record(fn, xs) for fn in ensemble.functions]
    if "band" in cfg.emit:
        doc["band"] = {
            "xs": pb.xs,
            "mu": pb.mu,
            "s": pb.s,
            "lower": pb.lower,
            "upper": pb.upper,
            "median": pb.median,
        }
    if "comparators" in cfg.emit:
        line = ensemble.least_squares_line
        doc["comparators"] = {
            "least_squares_line": {
                "a": line.intercept,
                "b": line.slope,
                "values": line(xs),
            },
            "least_rough_interpolator": _function_record(ensemble.least_rough, xs),
        }
    doc["config"] = {
        "format": cfg.output_format,
        "grid": {"start": xs[0], "end": xs[-1], "count": xs.size},
        "lambda": {"lo": cfg.lambda_lo, "hi": cfg.lambda_hi, "points_per_decade": cfg.lambda_ppd},
        "sigma": {"lo_factor": cfg.sigma_lo_factor, "hi_factor": cfg.sigma_hi_factor},
        "refine": cfg.refine,
        "emit": list(cfg.emit),
    }
    doc["version"] = VERSION
    return doc


def _band_csv(pb: PredictionBand) -> str:
    rows = ["x,mu,s,lower,upper,median"]
    for i in range(pb.xs.size):
        rows.append(
            ",".join(
                _render(column[i])
                for column in (pb.xs, pb.mu, pb.s, pb.lower, pb.upper, pb.median)
            )
        )
    return "\n".join(rows) + "\n"


def run(cfg: RunConfig) -> int:
    """Execute one configured run; returns the process exit code."""
    try:
        series = parse_csv(cfg.input_path)
        ensemble = build_ensemble(series, cfg.fit_config())
        xs = cfg.grid(series)
        pb = band(ensemble, xs)
        if cfg.output_format == "csv":
            text = _band_csv(pb)
        else:
            text = _json(_document(cfg, ensemble, xs, pb)) + "\n"
        if cfg.output_path is None:
            sys.stdout.write(text)
        else:
            with open(cfg.output_path, "w", encoding="utf-8", newline="\n") as handle:
                handle.write(text)
    except OSError as exc:
        target = exc.filename if exc.filename else cfg.input_path
        print(f"error: {target}: {exc.strerror or exc}", file=sys.stderr)
        return 1
    except (ParseError, DegenerateInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NotPositiveDefinite as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


def _emit_list(text: str) -> tuple[str, ...]:
    names = tuple(name.strip() for name in text.split(",") if name.strip())
    if "all" in names:
        return EMIT_SECTIONS
    for name in names:
        if name not in EMIT_SECTIONS:
            raise argparse.ArgumentTypeError(f"unknown section {name!r}")
    return names


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spaghetti",
        description="Leave-one-out penalized kernel fits with prediction band, from a CSV time series.",
    )
    parser.add_argument("--input", required=True, help="CSV file of x,y rows (one optional header line)")
    parser.add_argument("--output", default=None, help="output file (default: stdout)")
    parser.add_argument("--format", default="json", choices=("json", "csv"), help="output format")
    parser.add_argument("--grid-start", type=float, default=None, help="evaluation grid start (default: x1 - 0.5 span)")
    parser.add_argument("--grid-end", type=float, default=None, help="evaluation grid end (default: xn + 0.5 span)")
    parser.add_argument("--grid-count", type=int, default=401, help="evaluation grid size")
    parser.add_argument("--lambda-lo", type=float, default=1e-6, help="smallest penalty weight searched")
    parser.add_argument("--lambda-hi", type=float, default=1e6, help="largest penalty weight searched")
    parser.add_argument("--lambda-ppd", type=int, default=8, help="penalty grid points per decade")
    parser.add_argument("--sigma-lo-factor", type=float, default=0.25, help="kernel width floor, times the smallest gap")
    parser.add_argument("--sigma-hi-factor", type=float, default=2.0, help="kernel width ceiling, times the span")
    parser.add_argument("--refine", type=int, default=36, help="golden-section iterations after each grid search")
    parser.add_argument("--emit", type=_emit_list, default=EMIT_SECTIONS, metavar="SECTIONS",
                        help="comma-separated subset of functions,band,comparators, or all")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; that slot is reserved for
        # numerical failures, so fold usage errors into the input-error code
        return 0 if exc.code == 0 else 1
    try:
        cfg = RunConfig(
            input_path=args.input,
            output_path=args.output,
            output_format=args.format,
            grid_start=args.grid_start,
            grid_end=args.grid_end,
            grid_count=args.grid_count,
            lambda_lo=args.lambda_lo,
            lambda_hi=args.lambda_hi,
            lambda_ppd=args.lambda_ppd,
            sigma_lo_factor=args.sigma_lo_factor,
            sigma_hi_factor=args.sigma_hi_factor,
            refine=args.refine,
            emit=args.emit,
        )
    except DegenerateInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run(cfg)
