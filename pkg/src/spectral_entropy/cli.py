"""Command-line entry point.

Exit codes: 0 success, 2 input error, 3 resource error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import re
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import dimension as dim
from . import timeseries as ts
from .entropy import ResourceError, entropy_curve
from .measures import CellBudgetError, MeasureResourceError
from .specfile import SpecError, resolve

EXIT_OK, EXIT_INPUT, EXIT_RESOURCE = 0, 2, 3

COMMANDS = ("describe", "entropy-scan", "dimension", "timeseries-synth", "timeseries-analyze")


class ConfigError(ValueError):
    pass


def parse_times(expr: str) -> list[int]:
    """``"2^a..2^b"`` (dyadic sweep), ``"a..b"`` or a comma list of integers."""
    expr = expr.replace(" ", "")
    m = re.fullmatch(r"2\^(\d+)\.\.2\^(\d+)", expr)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        if a > b:
            raise ConfigError(f"empty time range {expr!r}")
        return [2**k for k in range(a, b + 1)]
    try:
        times = [int(t) for t in expr.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse times {expr!r}") from None
    if any(t < 1 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
        raise ConfigError("times must be strictly increasing positive integers")
    return times


def parse_depths(expr: str) -> list[int]:
    """``"a..b"`` or a comma list of integers."""
    expr = expr.replace(" ", "")
    m = re.fullmatch(r"(\d+)\.\.(\d+)", expr)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        if a > b:
            raise ConfigError(f"empty depth range {expr!r}")
        return list(range(a, b + 1))
    try:
        return [int(d) for d in expr.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse depths {expr!r}") from None


@dataclass
class RunConfig:
    command: str
    spec_path: str | None = None
    times: list = field(default_factory=list)
    method: str = "eig"
    epsilon: float = 0.01
    depths: list = field(default_factory=list)
    base: int | None = None
    seed: int = 0
    length: int = 4096
    kind: str = "info"
    samples: int = 200
    input: str | None = None
    output: str | None = None
    format: str = "json"

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.command != "timeseries-analyze" and not self.spec_path:
            raise ConfigError("--spec is required")
        if self.command == "timeseries-analyze" and not self.input:
            raise ConfigError("--input is required")
        if self.method not in ("eig", "bf"):
            raise ConfigError("--method must be eig or bf")
        if self.format not in ("csv", "json"):
            raise ConfigError("--format must be csv or json")
        if not 0 < self.epsilon < 1:
            raise ConfigError("--epsilon must lie in (0, 1)")
        if self.base is not None and self.base < 2:
            raise ConfigError("--base must be >= 2")
        if self.length < 1:
            raise ConfigError("--length must be positive")
        if self.kind not in ("info", "fractal", "hausdorff"):
            raise ConfigError("--kind must be info, fractal or hausdorff")
        if any(d < 0 for d in self.depths):
            raise ConfigError("depths must be non-negative")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spectral-entropy",
                                description="Spectral measures, time-averaging entropy and dimensions.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--spec", dest="spec_path", help="preset name or measure-spec JSON file")
        sp.add_argument("--output", help="output file (default stdout)")
        sp.add_argument("--format", choices=["csv", "json"], default="json")
        return sp

    common(sub.add_parser("describe", help="measure profile"))
    sp = common(sub.add_parser("entropy-scan", help="entropy against T"))
    sp.add_argument("--times", default="2^1..2^8")
    sp.add_argument("--method", choices=["eig", "bf"], default="eig")
    sp = common(sub.add_parser("dimension", help="dimension estimate"))
    sp.add_argument("--kind", choices=["info", "fractal", "hausdorff"], default="info")
    sp.add_argument("--epsilon", type=float, default=0.01)
    sp.add_argument("--depths", default=None)
    sp.add_argument("--base", type=int, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--samples", type=int, default=200)
    ts_p = sub.add_parser("timeseries", help="synthesize or analyze stationary series")
    ts_sub = ts_p.add_subparsers(dest="action", required=True)
    sp = common(ts_sub.add_parser("synth"))
    sp.add_argument("--length", type=int, default=4096)
    sp.add_argument("--depths", default="12", help="refinement depth for the continuous part")
    sp.add_argument("--base", type=int, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(format="csv")
    sp = common(ts_sub.add_parser("analyze"))
    sp.add_argument("--input", required=True)
    sp.add_argument("--times", default="2^3..2^9")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    d = vars(ns).copy()
    cmd = d.pop("command")
    if cmd == "timeseries":
        cmd = f"timeseries-{d.pop('action')}"
    d["times"] = parse_times(d["times"]) if d.get("times") else []
    d["depths"] = parse_depths(d["depths"]) if d.get("depths") else []
    cfg = RunConfig(command=cmd, **d)
    cfg.validate()
    return cfg


def _emit_json(obj, out) -> None:
    json.dump(obj, out, indent=2, default=_json_default)
    out.write("\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _finite(x: float):
    return x if math.isfinite(x) else None


def cmd_describe(cfg: RunConfig, out) -> None:
    m, spec = resolve(cfg.spec_path)
    t = np.arange(-8, 9)
    f = m.fourier(t)
    profile = {
        "kind": spec["kind"],
        "params": spec.get("params", {}),
        "measure": m.describe(),
        "known_dimensions": m.known_dimensions(),
        "fourier": [{"t": int(k), "re": float(z.real), "im": float(z.imag)} for k, z in zip(t, f)],
        "config": asdict(cfg),
    }
    if "log2_mu" in profile["measure"]:
        profile["appendix_log2_mu"] = profile["measure"]["log2_mu"]
    _emit_json(profile, out)


def cmd_entropy_scan(cfg: RunConfig, out, err) -> None:
    m, _ = resolve(cfg.spec_path)
    if len(cfg.times) < 2:
        raise ConfigError("--times needs at least two values")
    curve = entropy_curve(m, cfg.times, method=cfg.method)
    rows = [(int(T), float(S), float(S / math.log(T)) if T > 1 else math.nan)
            for T, S in zip(curve.times, curve.entropies)]
    summary = {"slope": curve.slope, "intercept": curve.intercept, "residual": curve.residual,
               "fit_window": list(curve.fit_window), "method": cfg.method, "config": asdict(cfg)}
    if cfg.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["T", "S", "S_over_lnT"])
        for T, S, r in rows:
            w.writerow([T, repr(S), repr(r)])
        _emit_json(summary, err)
    else:
        _emit_json({"rows": [{"T": T, "S": S, "S_over_lnT": _finite(r)} for T, S, r in rows],
                    "summary": summary}, out)


def cmd_dimension(cfg: RunConfig, out) -> None:
    m, _ = resolve(cfg.spec_path)
    depths = cfg.depths or None
    if cfg.kind == "info":
        est = dim.information_dimension(m, cfg.base, depths)
    elif cfg.kind == "fractal":
        est = dim.fractal_dimension(m, cfg.epsilon, cfg.base, depths)
    else:
        b = cfg.base or dim.native_base(m)
        scales = dim.geometric_scales(b, min(depths), max(depths)) if depths else None
        est = dim.hausdorff_estimate(m, cfg.seed, cfg.samples, scales)
    payload = est.to_dict() | {"config": asdict(cfg)}
    if cfg.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["depth", "statistic"])
        for a, b in est.per_depth:
            w.writerow([repr(float(a)), repr(float(b))])
    else:
        _emit_json(payload, out)


def cmd_timeseries(cfg: RunConfig, out) -> None:
    if cfg.command == "timeseries-synth":
        m, _ = resolve(cfg.spec_path)
        depth = cfg.depths[0] if cfg.depths else 12
        s = ts.synthesize(m, cfg.length, depth, cfg.seed, cfg.base)
        if cfg.format == "csv":
            ts.write_series_csv(s, out)
        else:
            _emit_json({"re": s.values.real, "im": s.values.imag, "origin": s.origin,
                        "config": asdict(cfg)}, out)
        return
    s = ts.read_series_csv(cfg.input)
    times = cfg.times or parse_times("2^3..2^9")
    curve = ts.spectrum_dimension(s, times)
    payload = curve.to_dict() | {"config": asdict(cfg)}
    if cfg.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["T", "S"])
        for T, S in curve.points:
            w.writerow([T, repr(S)])
    else:
        _emit_json(payload, out)


def run(cfg: RunConfig, out, err) -> None:
    if cfg.command == "describe":
        cmd_describe(cfg, out)
    elif cfg.command == "entropy-scan":
        cmd_entropy_scan(cfg, out, err)
    elif cfg.command == "dimension":
        cmd_dimension(cfg, out)
    else:
        cmd_timeseries(cfg, out)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT
    try:
        cfg = config_from_args(ns)
        if cfg.output:
            with open(cfg.output, "w", newline="") as fh:
                run(cfg, fh, sys.stderr)
        else:
            run(cfg, sys.stdout, sys.stderr)
    except (ResourceError, CellBudgetError, MeasureResourceError, MemoryError) as e:
        print(f"resource error: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ConfigError, SpecError, ts.SeriesFormatError, ts.InsufficientLengthError, ValueError, OSError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
