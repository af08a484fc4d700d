"""Command-line front end: rates, bounds, simulate, sweep, verify.

Exit codes: 0 success, 1 configuration or domain error, 2 I/O error,
3 verdict or verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .acceptance import run_all
from .harness import (
    ConfigError,
    ExperimentConfig,
    collect_transcripts,
    compare_bounds,
    report_flat_row,
    run_experiment,
    write_transcripts_csv,
)
from .infotheory import (
    BoundNotActiveError,
    BoundQuery,
    awgn_capacity,
    chebyshev_error_bound,
    induced_sigma2,
    leakage_budget,
    rate_squeezed_homodyne,
    sk_error_bound,
    sk_error_bound_log10,
    tetration_error_bound,
    tetration_order,
)
from .protocol import make_codebook

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_VERDICT = 3

THREADS_ENV_VAR = "SKWIRETAP_THREADS"


class CliError(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; 2 is reserved for I/O here
    def error(self, message: str):
        raise CliError(EXIT_CONFIG, message)


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, f"{THREADS_ENV_VAR}={raw!r} is not an integer") from exc
    return max(1, value)


def _load_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(
            EXIT_CONFIG, f"malformed JSON in {path} at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc


def _flatten(obj, prefix: str = "") -> dict:
    flat: dict = {}
    if isinstance(obj, Mapping):
        for key, value in obj.items():
            flat.update(_flatten(value, f"{prefix}{key}."))
    elif isinstance(obj, (list, tuple)):
        for idx, value in enumerate(obj):
            flat.update(_flatten(value, f"{prefix}{idx}."))
    else:
        flat[prefix[:-1]] = obj
    return flat


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _emit(result: dict, fmt: str, out: Optional[str]) -> None:
    if fmt == "json":
        text = json.dumps(result, indent=2)
    elif fmt == "csv":
        flat = _flatten(result)
        header = ",".join(flat.keys())
        row = ",".join(_format_cell(v) for v in flat.values())
        text = f"{header}\n{row}"
    else:
        flat = _flatten(result)
        width = max(len(k) for k in flat)
        text = "\n".join(f"{k:<{width}}  {_format_cell(v)}" for k, v in flat.items())
    if out:
        try:
            Path(out).write_text(text + "\n")
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot write {out}: {exc}") from exc
    else:
        print(text)


# ---------------------------------------------------------------------------
# Physical-parameter input shared by rates/bounds
# ---------------------------------------------------------------------------

_PHYSICS_FIELDS = ("eta", "n_th", "n_s", "sigma2", "n", "rate", "tap_variance")


def _physics_params(args) -> dict:
    params = {}
    if args.config:
        obj = _load_json(args.config)
        unknown = set(obj) - set(_PHYSICS_FIELDS)
        if unknown:
            raise CliError(EXIT_CONFIG, f"unknown fields in {args.config}: {sorted(unknown)}")
        params.update(obj)
    for field in _PHYSICS_FIELDS:
        value = getattr(args, field, None)
        if value is not None:
            params[field] = value
    for field in ("eta", "n_s", "n", "rate"):
        if field not in params:
            raise CliError(EXIT_CONFIG, f"missing required parameter --{field.replace('_', '-')}")
    params.setdefault("n_th", 0.0)
    params.setdefault("tap_variance", None)
    if params.get("sigma2") is None:
        params["sigma2"] = induced_sigma2(params["eta"], params["n_th"])
    params["n"] = int(params["n"])
    return params


def cmd_rates(args) -> int:
    p = _physics_params(args)
    query = BoundQuery(
        n_s=p["n_s"], sigma2=p["sigma2"], eta=p["eta"], n_th=p["n_th"], n=p["n"], rate=p["rate"]
    )
    p_h = awgn_capacity(query.n_s, query.sigma2)
    realized = make_codebook(query.n, query.rate, query.n_s).realized_rate
    if query.eta < 1.0:
        p_sq, p_sq_note = rate_squeezed_homodyne(query.eta, query.n_s), None
    else:
        p_sq, p_sq_note = None, "domain: eta < 1 required for the squeezed-state rate"
    result = {
        "inputs": {k: p[k] for k in ("eta", "n_th", "n_s", "sigma2", "n", "rate")},
        "sigma2": query.sigma2,
        "p_h": p_h,
        "p_sq": p_sq,
        **({"p_sq_note": p_sq_note} if p_sq_note else {}),
        "realized_rate": realized,
        "effective_rate": query.n / (query.n + 1) * realized,
    }
    _emit(result, args.format, args.out)
    return EXIT_OK


def cmd_bounds(args) -> int:
    p = _physics_params(args)
    query = BoundQuery(
        n_s=p["n_s"], sigma2=p["sigma2"], eta=p["eta"], n_th=p["n_th"], n=p["n"], rate=p["rate"]
    )
    p_h = awgn_capacity(query.n_s, query.sigma2)
    sk = sk_error_bound(query)
    tet: dict
    try:
        order = tetration_order(query)
        if order >= 1:
            tb = tetration_error_bound(query)
            tet = {
                "order": tb.order,
                "bound": tb.value,
                "underflow": tb.underflow,
                "log10_bound": tb.log10_value if math.isfinite(tb.log10_value) else None,
            }
        else:
            tet = {"order": order, "note": "not active: tower order below 1 at this n"}
    except (BoundNotActiveError, ValueError):
        tet = {"note": "not applicable: rate >= P_H"}
    leak = None
    if p["tap_variance"] is not None:
        budget = leakage_budget(
            query.eta, query.n_th, query.n_s, query.sigma2, p["tap_variance"], query.n
        )
        leak = {
            "tap_capacity": budget.tap_capacity,
            "eve_entropy_bound": budget.eve_entropy_bound,
            "total_bits": budget.total_bits,
            "per_mode_bits": budget.per_mode_bits,
        }
    def _finite(value: float):
        return value if math.isfinite(value) else None

    result = {
        "inputs": {k: p[k] for k in _PHYSICS_FIELDS},
        "p_h": p_h,
        "sk_bound": sk,
        "sk_bound_log10": _finite(sk_error_bound_log10(query)),
        "chebyshev_bound": _finite(chebyshev_error_bound(1.0, query.sigma2, query)),
        "tetration": tet,
        "leakage": leak,
    }
    _emit(result, args.format, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    obj = _load_json(args.config)
    if args.seed is not None:
        obj["root_seed"] = args.seed
    cfg = ExperimentConfig.from_dict(obj)
    report = run_experiment(cfg, threads=args.threads)
    verdict = compare_bounds(report)

    out_dir = Path(args.out or ".")
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(report.to_json() + "\n")
        if args.dump_transcripts:
            with open(out_dir / "transcripts.csv", "w") as fh:
                write_transcripts_csv(collect_transcripts(cfg), fh)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write outputs under {out_dir}: {exc}") from exc

    if args.format == "json":
        print(json.dumps({"report": report.to_dict(), "verdict": verdict.to_dict()}, indent=2))
    elif args.format == "csv":
        flat = _flatten(verdict.to_dict())
        print(",".join(flat.keys()))
        print(",".join(_format_cell(v) for v in flat.values()))
    else:
        print(verdict.format_table())
    return EXIT_OK if verdict.passed else EXIT_VERDICT


_SWEEP_AXES = ("n", "rate", "n_s", "eta", "trials")


def _sweep_values(axis: str, spec: Mapping) -> list:
    unknown = set(spec) - {"axis", "start", "stop", "steps"}
    if unknown:
        raise CliError(EXIT_CONFIG, f"unknown sweep fields: {sorted(unknown)}")
    try:
        start, stop, steps = float(spec["start"]), float(spec["stop"]), int(spec["steps"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(EXIT_CONFIG, f"sweep needs numeric start/stop and integer steps: {exc}") from exc
    if steps < 1:
        raise CliError(EXIT_CONFIG, f"sweep steps={steps} must be >= 1")
    values = np.linspace(start, stop, steps)
    if axis in ("n", "trials"):
        ints = [int(round(v)) for v in values]
        if len(set(ints)) != len(ints):
            raise CliError(EXIT_CONFIG, f"sweep over {axis} produced duplicate integer points")
        return ints
    return [float(v) for v in values]


def _apply_axis(base: dict, axis: str, value) -> dict:
    obj = json.loads(json.dumps(base))  # deep copy
    if axis in ("n", "rate", "trials"):
        obj[axis] = value
    elif axis == "eta":
        if obj.get("channel", {}).get("type") != "thermal":
            raise CliError(EXIT_CONFIG, "sweeping eta requires a thermal channel config")
        obj["channel"]["eta"] = value
    elif axis == "n_s":
        if obj.get("channel", {}).get("type") == "thermal":
            obj["channel"]["n_s"] = value
        else:
            obj["n_s"] = value
    return obj


def cmd_sweep(args) -> int:
    obj = _load_json(args.config)
    sweep_spec = obj.pop("sweep", None)
    if sweep_spec is None:
        raise CliError(EXIT_CONFIG, "sweep config requires a 'sweep' object")
    axes = [a for a in _SWEEP_AXES if a == sweep_spec.get("axis")]
    if not axes:
        raise CliError(EXIT_CONFIG, f"sweep axis must be one of {_SWEEP_AXES}")
    if args.seed is not None:
        obj["root_seed"] = args.seed
    axis = axes[0]
    values = _sweep_values(axis, sweep_spec)

    rows = []
    for value in values:
        cfg = ExperimentConfig.from_dict(_apply_axis(obj, axis, value))
        report = run_experiment(cfg, threads=args.threads)
        rows.append(report_flat_row(report))

    out_path = Path(args.out or "sweep.csv")
    try:
        with open(out_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {out_path}: {exc}") from exc
    print(f"wrote {len(rows)} sweep rows to {out_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_all(progress=print)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_OK if not failed else EXIT_VERDICT


def _add_common(parser: argparse.ArgumentParser, config_required: bool = False) -> None:
    parser.add_argument("--config", required=config_required, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="override root seed")
    parser.add_argument("--out", default=None, help="output path")
    parser.add_argument("--format", choices=("json", "csv", "table"), default="table")
    parser.add_argument("--threads", type=int, default=None, help="worker process count")
    parser.add_argument("--dump-transcripts", action="store_true")


def _add_physics(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--eta", type=float, help="transmissivity in (0, 1]")
    parser.add_argument("--n-th", dest="n_th", type=float, help="thermal photon number >= 0")
    parser.add_argument("--n-s", dest="n_s", type=float, help="mean photon number per mode > 0")
    parser.add_argument("--sigma2", type=float, help="override the induced noise variance")
    parser.add_argument("--n", type=int, help="estimation rounds after round 0")
    parser.add_argument("--rate", type=float, help="nominal rate in bits/round")
    parser.add_argument("--tap-variance", dest="tap_variance", type=float, help="eavesdropper tap noise variance")


def build_parser() -> _Parser:
    parser = _Parser(prog="skwiretap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_rates = sub.add_parser("rates", help="closed-form achievable rates")
    _add_physics(p_rates)
    _add_common(p_rates)
    p_rates.set_defaults(func=cmd_rates)

    p_bounds = sub.add_parser("bounds", help="analytic error bounds and the leakage budget")
    _add_physics(p_bounds)
    _add_common(p_bounds)
    p_bounds.set_defaults(func=cmd_bounds)

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo experiment from a JSON config")
    _add_common(p_sim, config_required=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="run an experiment per point along one axis")
    _add_common(p_sweep, config_required=True)
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the built-in verification suite")
    _add_common(p_verify)
    p_verify.set_defaults(func=cmd_verify)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "threads", None) is None:
            args.threads = _default_threads()
        if args.threads < 1:
            raise CliError(EXIT_CONFIG, f"--threads {args.threads} must be >= 1")
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
