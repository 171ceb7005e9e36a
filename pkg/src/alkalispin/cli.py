"""Command-line interface: ``alkalispin {eigen,sweep,simulate,fit,budget,probe}``.

Tabular results are CSV with ``#`` header lines carrying the config hash and
column units; records are sorted-key JSON with a ``config_sha256`` field.
Exit status is 0 on success, 1 for configuration errors and 2 for numerical
failures. Identical configurations give byte-identical output.
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, config as cfgmod
from .analysis import (
    MetricError,
    fit_damped_sinusoid,
    log_envelope_curvature,
    one_over_e_time,
    spectral_linewidth,
)
from .dynamics import (
    IntegrationError,
    Trace,
    default_time_grid,
    integrate,
    probe_lifetime,
    simulate_gaussian_probe,
    time_grid,
)
from .eigen import build_matrix, dominant_coherence, eigenmodes, suppression_factor, sweep_field
from .model import DomainError
from .rates import ConfigurationError, budget

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

SWEEP_UNITS = {
    "B_gauss": "G", "omega1_rad_s": "rad/s", "gamma1_s": "1/s", "omega2_rad_s": "rad/s",
    "gamma2_s": "1/s", "T2_dominant_s": "s", "T2_fit_s": "s",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message)


def _num(x) -> str:
    """Shortest round-trip text for a float."""
    x = float(x) + 0.0  # no negative zero
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj) + 0.0
        return x if math.isfinite(x) else _num(x)
    return obj


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_csv(header: Sequence[str], rows, command: str, digest: str, units: dict) -> str:
    buf = io.StringIO()
    buf.write(f"# alkalispin {command}\n")
    buf.write(f"# config_sha256: {digest}\n")
    buf.write("# units: " + " ".join(f"{h}={units[h]}" for h in header if h in units) + "\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else _num(v) for v in row) + "\n")
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# -- subcommands ---------------------------------------------------------------


def _setup(cfg):
    species = cfgmod.species_from(cfg)
    rates = cfgmod.rates_from(cfg)
    initial = cfgmod.initial_from(cfg, species, rates)
    return species, rates, initial


def _grid(cfg, matrix, initial) -> np.ndarray:
    tcfg = cfg["time"]
    n = int(tcfg["n_samples"])
    if n < 2:
        raise ConfigurationError("time.n_samples must be >= 2")
    if tcfg.get("t_end") is not None:
        return time_grid(cfgmod.check_positive("time.t_end", float(tcfg["t_end"])), n)
    return default_time_grid(matrix, initial, n, float(tcfg["n_decay"]))


def cmd_eigen(cfg, digest, args) -> str:
    species, rates, initial = _setup(cfg)
    B = float(cfg["B"])
    matrix = build_matrix(species, rates, B)
    modes = eigenmodes(matrix, initial)
    T2, omega = dominant_coherence(matrix, initial)
    record = {
        "B_gauss": B,
        "config_sha256": digest,
        "rates": rates.as_dict(),
        "modes": [
            {
                "eigenvalue": [md.eigenvalue.real, md.eigenvalue.imag],
                "gamma_s": md.gamma,
                "omega_rad_s": md.omega,
                "vector": [[c.real, c.imag] for c in md.vector],
                "weight": [md.weight.real, md.weight.imag],
                "degenerate": md.degenerate,
            }
            for md in modes
        ],
        "T2_dominant_s": T2,
        "omega_dominant_rad_s": omega,
    }
    try:
        record["suppression_factor"] = suppression_factor(species, rates)
    except DomainError:
        record["suppression_factor"] = None
    return dump_json(record)


def cmd_sweep(cfg, digest, args) -> str:
    species, rates, initial = _setup(cfg)
    fields = cfgmod.fields_from(cfg)
    rows = sweep_field(species, rates, fields, initial)
    header = list(SWEEP_UNITS)[:6]
    with_fit = cfg.get("metric") == "fit"
    if cfg.get("metric") not in (None, "fit"):
        raise ConfigurationError("sweep metric must be 'fit' or unset")
    if with_fit:
        header.append("T2_fit_s")
    header.append("error")
    out = []
    for r in rows:
        error = r.error or ""
        values = [r.B, r.omega1, r.gamma1, r.omega2, r.gamma2, r.T2_dominant]
        if with_fit:
            T2_fit = math.nan
            if not error:
                try:
                    matrix = build_matrix(species, rates, r.B)
                    trace = integrate(matrix, initial, _grid(cfg, matrix, initial), rel_tol=float(cfg["rel_tol"]))
                    T2_fit = fit_damped_sinusoid(trace).T2
                except (ArithmeticError, ValueError) as exc:
                    error = f"{type(exc).__name__}: {exc}"
            values.append(T2_fit)
        out.append(values + [error.replace(",", ";").replace("\n", " ")])
    return write_csv(header, out, "sweep", digest, SWEEP_UNITS)


def cmd_simulate(cfg, digest, args) -> str:
    species, rates, initial = _setup(cfg)
    matrix = build_matrix(species, rates, float(cfg["B"]))
    trace = integrate(matrix, initial, _grid(cfg, matrix, initial), rel_tol=float(cfg["rel_tol"]))
    y = trace.y
    sigma = float(cfg["noise"]["sigma"])
    if sigma < 0:
        raise ConfigurationError("noise.sigma must be >= 0")
    if sigma > 0:
        rng = np.random.default_rng(int(cfg["noise"]["seed"]))
        y = y + rng.normal(0.0, sigma, len(y))
    return write_csv(["t_s", "Sx"], zip(trace.t, y), "simulate", digest, {"t_s": "s", "Sx": "arb"})


def read_trace(path: str, column: str | None = None) -> tuple[Trace, bytes]:
    """Load a CSV trace (``#`` comments, then a header row naming ``t_s``)."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc.strerror}") from None
    lines = [ln for ln in raw.decode().splitlines() if ln.strip() and not ln.startswith("#")]
    if len(lines) < 2:
        raise ConfigurationError(f"{path}: no data rows")
    names = [h.strip() for h in lines[0].split(",")]
    if "t_s" not in names:
        raise ConfigurationError(f"{path}: header must name a 't_s' column")
    ycol = column or next((h for h in names if h != "t_s"), None)
    if ycol not in names:
        raise ConfigurationError(f"{path}: no column {ycol!r}")
    it, iy = names.index("t_s"), names.index(ycol)
    try:
        data = [(float(r.split(",")[it]), float(r.split(",")[iy])) for r in lines[1:]]
    except (ValueError, IndexError):
        raise ConfigurationError(f"{path}: malformed data row") from None
    t, y = np.array(data).T
    try:
        return Trace(t, y), raw
    except ValueError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def cmd_fit(cfg, digest, args) -> str:
    if not args.input:
        raise ConfigurationError("fit needs an input CSV")
    trace, raw = read_trace(args.input, args.column)
    result = fit_damped_sinusoid(trace)
    if not result.converged:
        raise MetricError(f"fit did not converge in {result.iterations} iterations")
    record = result.as_dict()
    record["config_sha256"] = digest
    record["input_sha256"] = hashlib.sha256(raw).hexdigest()
    return dump_json(record)


def cmd_budget(cfg, digest, args) -> str:
    species = cfgmod.species_from(cfg)
    b = budget(cfgmod.cell_from(cfg), species, cfgmod.probe_rate_from(cfg))
    record = b.as_dict()
    record["config_sha256"] = digest
    record["q_sd"] = species.q_sd
    return dump_json(record)


def _probe_record_grid(cfg, species, rates, profile, B, k) -> np.ndarray:
    records = cfg["probe"].get("records")
    if records:
        t_end, n = records[k]
        return time_grid(cfgmod.check_positive("probe record t_end", float(t_end)), int(n))
    # no explicit record: ten dominant decay times of the mean-rate shell
    mean_pr = profile.R_pr_peak * float(np.dot(profile.intensity(), profile.intensity()) / profile.intensity().sum())
    mean_rates = rates.replace(R_pr=rates.R_pr + mean_pr)
    matrix = build_matrix(species, mean_rates, B)
    T2, omega = dominant_coherence(matrix, cfgmod.initial_from(cfg, species, rates))
    span = 10.0 * T2
    n = max(4000, int(math.ceil(50.0 * span * abs(omega) / (2.0 * math.pi))))
    return time_grid(span, n)


def cmd_probe(cfg, digest, args) -> str:
    species, rates, initial = _setup(cfg)
    profile = cfgmod.profile_from(cfg, species, rates)
    fields = cfg["probe"].get("fields") or [float(cfg["B"])]
    records = cfg["probe"].get("records")
    if records and len(records) != len(fields):
        raise ConfigurationError("probe.records needs one (t_end, n) per field")
    results, traces = [], []
    for k, B in enumerate(fields):
        t = _probe_record_grid(cfg, species, rates, profile, float(B), k)
        tr = simulate_gaussian_probe(species, rates, profile, float(B), initial, t, float(cfg["rel_tol"]))
        traces.append((float(B), tr))
        results.append({
            "B_gauss": float(B),
            "t_1e_s": one_over_e_time(tr),
            "fwhm_hz": spectral_linewidth(tr),
            "log_envelope_curvature": log_envelope_curvature(tr),
        })
    record = {
        "config_sha256": digest,
        "R_pr_peak": profile.R_pr_peak,
        "T1_composite_s": probe_lifetime(species, rates, profile),
        "fields": results,
    }
    if len(results) >= 2:
        record["ratio_1e"] = results[0]["t_1e_s"] / results[-1]["t_1e_s"]
        record["ratio_linewidth"] = results[-1]["fwhm_hz"] / results[0]["fwhm_hz"]
    if args.trace_out:
        rows = [(B, ti, yi) for B, tr in traces for ti, yi in zip(tr.t, tr.y)]
        _emit(write_csv(["B_gauss", "t_s", "Sx"], rows, "probe", digest,
                        {"B_gauss": "G", "t_s": "s", "Sx": "arb"}), args.trace_out)
    return dump_json(record)


COMMANDS = {
    "eigen": (cmd_eigen, "eigenmodes of the generator at one field (JSON)"),
    "sweep": (cmd_sweep, "eigenmodes across a field sweep (CSV)"),
    "simulate": (cmd_simulate, "time-domain <S_x> trace at one field (CSV)"),
    "fit": (cmd_fit, "damped-sinusoid fit of a CSV trace (JSON)"),
    "budget": (cmd_budget, "relaxation-rate budget of a cell (JSON)"),
    "probe": (cmd_probe, "Gaussian-probe traces and decay metrics (JSON, optional CSV)"),
}


def _initial_arg(text: str):
    if text in ("relaxed", "spin-temperature"):
        return text
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        raise argparse.ArgumentTypeError(f"not a state name or JSON pair: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="alkalispin", description="Transverse spin relaxation of alkali vapors.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--config", help="JSON or TOML configuration file")
        p.add_argument("--preset", help="sr, sesr or pr")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--B", type=float, help="field, G")
        p.add_argument("--R-sr", type=float, dest="R_sr", help="spin-rotation rate, 1/s")
        p.add_argument("--R-se", type=float, dest="R_se", help="spin-exchange rate, 1/s")
        p.add_argument("--R-pr", type=float, dest="R_pr", help="probe rate, 1/s")
        p.add_argument("--R-diff", type=float, dest="R_diff", help="diffusion rate, 1/s")
        p.add_argument("--initial", type=_initial_arg,
                       help='relaxed, spin-temperature or a JSON pair like "[1, [0.03, 0]]"')
        p.add_argument("--rel-tol", type=float, dest="rel_tol")
        p.add_argument("--t-end", type=float, dest="t_end", help="record length, s")
        p.add_argument("--n-samples", type=int, dest="n_samples")
        if name == "sweep":
            p.add_argument("--B-min", type=float, dest="B_min")
            p.add_argument("--B-max", type=float, dest="B_max")
            p.add_argument("--count", type=int)
            p.add_argument("--spacing", choices=cfgmod.SPACINGS)
            p.add_argument("--include-zero", action=argparse.BooleanOptionalAction, dest="include_zero")
            p.add_argument("--metric", choices=("fit",))
        if name == "simulate":
            p.add_argument("--noise", type=float, help="Gaussian noise sigma added to the trace")
            p.add_argument("--seed", type=int)
        if name == "fit":
            p.add_argument("input", nargs="?", help="CSV trace with a t_s column")
            p.add_argument("--column", help="signal column (default: first after t_s)")
        if name == "probe":
            p.add_argument("--trace-out", dest="trace_out", help="also write the traces as CSV")
    return parser


def _overrides(args) -> dict:
    o: dict = {}
    v = vars(args)
    if v.get("B") is not None:
        o["B"] = v["B"]
    rates = {k: v[k] for k in ("R_sr", "R_se", "R_pr", "R_diff") if v.get(k) is not None}
    if rates:
        o["rates"] = rates
    for key in ("initial", "rel_tol", "metric"):
        if v.get(key) is not None:
            o[key] = v[key]
    time = {k: v[k] for k in ("t_end", "n_samples") if v.get(k) is not None}
    if time:
        o["time"] = time
    sweep = {k: v[k] for k in ("B_min", "B_max", "count", "spacing", "include_zero") if v.get(k) is not None}
    if sweep:
        o["sweep"] = sweep
    noise = {k: v[a] for k, a in (("sigma", "noise"), ("seed", "seed")) if v.get(a) is not None}
    if noise:
        o["noise"] = noise
    return o


def run(argv: Sequence[str] | None = None) -> int:
    """Parse `argv`, run the subcommand and return the exit status."""
    try:
        args = build_parser().parse_args(argv)
        file_layer = cfgmod.load_file(args.config) if args.config else None
        cfg = cfgmod.resolve(file_layer, _overrides(args), preset=args.preset)
        if cfg.get("rates") is None and cfg.get("cell") is None and args.command != "fit":
            raise ConfigurationError("no rates: give --preset, --config or --R-* flags")
        digest = cfgmod.config_hash(cfg)
        func = COMMANDS[args.command][0]
        _emit(func(cfg, digest, args), args.out)
        return EXIT_OK
    except (ConfigurationError, DomainError, TypeError) as exc:
        print(f"alkalispin: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, MetricError, ArithmeticError, ValueError) as exc:
        print(f"alkalispin: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())
