"""Command-line driver: simulate | density | husimi | verify | sweep.

Exit codes: 0 success, 1 usage error, 2 invalid configuration, 3 Fock truncation
too small (or, for ``verify``, 4 when a check misses its threshold).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .fock import TruncationError, TruncationPolicy, analytic_to_fock, fidelity, run_protocol_oracle, suggest_dimension
from .observables import (
    PhaseSpaceGrid,
    PositionGrid,
    flatness_report,
    husimi_q,
    position_density,
    to_csv,
    to_json,
)
from .protocol import build_superposition, dyadic_schedule, success_probability

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_TRUNCATION, EXIT_CHECK_FAILED = 0, 1, 2, 3, 4

TAU_TAGS = {
    "4*exp(-r)": lambda r: 4.0 * math.exp(-r),
    "exp(-r)/2": lambda r: 0.5 * math.exp(-r),
}

FIDELITY_TOL = 1e-8
PROBABILITY_TOL = 1e-8
DENSITY_TOL = 1e-6
HUSIMI_TOL = 1e-5


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    r: list[float] = field(default_factory=lambda: [0.0])
    # each entry is a float literal or a key of TAU_TAGS
    tau: list[float | str] = field(default_factory=lambda: [1.0])
    pulses: int = 4
    position_grid: PositionGrid | None = None
    phase_grid: PhaseSpaceGrid | None = None
    oracle: TruncationPolicy = field(default_factory=TruncationPolicy)
    out: Path = Path("out")
    format: str = "both"
    coverage: float = 0.8

    def validate(self, sweep: bool = False) -> None:
        if not self.r:
            raise ConfigError("empty r list")
        if not self.tau:
            raise ConfigError("empty tau list")
        if not sweep and (len(self.r) != 1 or len(self.tau) != 1):
            raise ConfigError("lists of r or tau are only accepted by 'sweep'")
        if self.pulses < 1:
            raise ConfigError("empty schedule")
        for r in self.r:
            if not math.isfinite(r):
                raise ConfigError(f"r must be finite, got {r}")
            for t in self.tau:
                if resolve_tau(t, r) <= 0:
                    raise ConfigError(f"tau must be positive, got {t!r}")
        if self.format not in ("csv", "json", "both"):
            raise ConfigError(f"format must be csv, json or both, got {self.format!r}")
        if not 0 < self.coverage < 1:
            raise ConfigError(f"coverage must lie in (0, 1), got {self.coverage}")

    @property
    def single(self) -> tuple[float, float, str]:
        r, t = self.r[0], self.tau[0]
        return r, resolve_tau(t, r), tau_label(t)


def tau_label(tau: float | str) -> str:
    return tau if isinstance(tau, str) else "literal"


def resolve_tau(tau: float | str, r: float) -> float:
    if isinstance(tau, str):
        if tau in TAU_TAGS:
            return TAU_TAGS[tau](r)
        if tau == "literal":
            raise ConfigError("tau tag 'literal' needs a numeric --tau")
        try:
            return float(tau)
        except ValueError:
            raise ConfigError(f"unknown tau tag {tau!r}; expected a number or one of {sorted(TAU_TAGS)}") from None
    return float(tau)


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def load_config(path: str | Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return data


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge the config file with command-line flags (flags win)."""
    data = load_config(args.config)
    known = {"r", "tau", "pulses", "grids", "oracle", "output", "coverage"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        cfg = RunConfig()
        if "r" in data:
            cfg.r = [float(v) for v in _as_list(data["r"])]
        if "tau" in data:
            cfg.tau = [v if isinstance(v, str) else float(v) for v in _as_list(data["tau"])]
        if "pulses" in data:
            cfg.pulses = int(data["pulses"])
        grids = data.get("grids") or {}
        if "position" in grids:
            cfg.position_grid = PositionGrid(**grids["position"])
        if "phase" in grids:
            cfg.phase_grid = PhaseSpaceGrid(**grids["phase"])
        if "oracle" in data:
            cfg.oracle = TruncationPolicy(**data["oracle"])
        output = data.get("output") or {}
        if "dir" in output:
            cfg.out = Path(output["dir"])
        if "format" in output:
            cfg.format = str(output["format"])
        if "coverage" in data:
            cfg.coverage = float(data["coverage"])

        if args.r is not None:
            cfg.r = list(args.r)
        if args.tau is not None:
            cfg.tau = list(args.tau)
        if args.tau_tag is not None:
            if args.tau_tag == ["literal"]:
                if args.tau is None:
                    raise ConfigError("tau tag 'literal' needs a numeric --tau")
            else:
                cfg.tau = list(args.tau_tag)
        if args.pulses is not None:
            cfg.pulses = args.pulses
        if args.dim is not None:
            cfg.oracle = replace(cfg.oracle, dimension=args.dim)
        if args.out is not None:
            cfg.out = Path(args.out)
        if args.format is not None:
            cfg.format = args.format
        if args.coverage is not None:
            cfg.coverage = args.coverage
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    return cfg


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _params(cfg: RunConfig) -> dict[str, Any]:
    r, tau, tag = cfg.single
    return {"r": r, "tau": tau, "tau_tag": tag, "pulses": cfg.pulses}


def _write(cfg: RunConfig, stem: str, csv_text: str | None, json_text: str | None) -> list[Path]:
    written = []
    if cfg.format in ("csv", "both") and csv_text is not None:
        written.append(cfg.out / f"{stem}.csv")
        write_atomic(written[-1], csv_text)
    if cfg.format in ("json", "both") and json_text is not None:
        written.append(cfg.out / f"{stem}.json")
        write_atomic(written[-1], json_text)
    return written


def cmd_simulate(cfg: RunConfig) -> int:
    r, tau, tag = cfg.single
    schedule = dyadic_schedule(cfg.pulses, tau)
    state = build_superposition(schedule, r)
    summary = {
        **_params(cfg),
        "pulse_areas": list(schedule.areas),
        "components": [
            {"amplitude": c.amplitude, "weight_re": complex(c.weight).real, "weight_im": complex(c.weight).imag}
            for c in state.components
        ],
        "norm_constant": state.norm_constant,
        "success_probability": success_probability(schedule, r),
    }
    buf = io.StringIO()
    for k in ("r", "tau", "tau_tag", "pulses", "norm_constant", "success_probability"):
        v = summary[k]
        buf.write(f"# {k}={v:.17g}\n" if isinstance(v, float) else f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["amplitude", "weight_re", "weight_im"])
    for c in summary["components"]:
        w.writerow([f"{c['amplitude']:.17g}", f"{c['weight_re']:.17g}", f"{c['weight_im']:.17g}"])
    for p in _write(cfg, "summary", buf.getvalue(), json.dumps(summary, indent=1, sort_keys=True)):
        print(p)
    return EXIT_OK


def cmd_density(cfg: RunConfig) -> int:
    r, tau, _ = cfg.single
    state = build_superposition(dyadic_schedule(cfg.pulses, tau), r)
    result = position_density(state, cfg.position_grid)
    result.params = _params(cfg)
    flat = flatness_report(result, cfg.coverage)
    result.params.update(
        ripple=flat.ripple,
        plateau_lo=flat.plateau_window[0],
        plateau_hi=flat.plateau_window[1],
        plateau_mass=flat.plateau_mass,
        coverage=flat.coverage,
    )
    for p in _write(cfg, "density", to_csv(result), to_json(result, flat)):
        print(p)
    return EXIT_OK


def cmd_husimi(cfg: RunConfig) -> int:
    r, tau, _ = cfg.single
    state = build_superposition(dyadic_schedule(cfg.pulses, tau), r)
    result = husimi_q(state, cfg.phase_grid)
    result.params = _params(cfg)
    for p in _write(cfg, "husimi", to_csv(result), to_json(result)):
        print(p)
    return EXIT_OK


def verify_checks(cfg: RunConfig) -> dict[str, Any]:
    """Oracle equivalence, probability bookkeeping and grid normalisation for one config."""
    r, tau, _ = cfg.single
    schedule = dyadic_schedule(cfg.pulses, tau)
    state = build_superposition(schedule, r)
    vib, p_oracle = run_protocol_oracle(schedule, r, cfg.oracle)
    analytic = analytic_to_fock(state, cfg.oracle.dimension, cfg.oracle.tail_mass_bound)
    fid = fidelity(vib, analytic)
    p_analytic = state.norm_constant**2
    dens = position_density(state, cfg.position_grid).integral_estimate
    q = husimi_q(state, cfg.phase_grid).integral_estimate
    checks = {
        "fidelity": (fid, 1 - fid <= FIDELITY_TOL),
        "probability_mismatch": (abs(p_oracle - p_analytic), abs(p_oracle - p_analytic) <= PROBABILITY_TOL),
        "density_integral_error": (abs(dens - 1), abs(dens - 1) <= DENSITY_TOL),
        "husimi_integral_error": (abs(q - 1), abs(q - 1) <= HUSIMI_TOL),
    }
    return checks


def cmd_verify(cfg: RunConfig) -> int:
    try:
        checks = verify_checks(cfg)
    except TruncationError as exc:
        r, tau, _ = cfg.single
        hint = suggest_dimension((2**cfg.pulses - 1) * tau, r)
        print(f"error: {exc}\nraise the Fock dimension, e.g. --dim {hint}", file=sys.stderr)
        return EXIT_TRUNCATION
    ok = True
    for name, (value, passed) in checks.items():
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {name} = {value:.6e}")
    print("PASS" if ok else "FAIL")
    report = {k: {"value": v, "pass": bool(p)} for k, (v, p) in checks.items()}
    report.update(_params(cfg), dimension=cfg.oracle.dimension, passed=bool(ok))
    _write(cfg, "verify", None, json.dumps(report, indent=1, sort_keys=True))
    return EXIT_OK if ok else EXIT_CHECK_FAILED


SWEEP_COLUMNS = ["r", "tau_tag", "tau", "pulses", "plateau_lo", "plateau_hi", "ripple", "plateau_mass", "coverage"]


def sweep_rows(cfg: RunConfig) -> list[dict[str, Any]]:
    rows = []
    for tau_spec in cfg.tau:
        for r in cfg.r:
            tau = resolve_tau(tau_spec, r)
            state = build_superposition(dyadic_schedule(cfg.pulses, tau), r)
            flat = flatness_report(position_density(state, cfg.position_grid), cfg.coverage)
            rows.append({
                "r": r, "tau_tag": tau_label(tau_spec), "tau": tau, "pulses": cfg.pulses,
                "plateau_lo": flat.plateau_window[0], "plateau_hi": flat.plateau_window[1],
                "ripple": flat.ripple, "plateau_mass": flat.plateau_mass, "coverage": flat.coverage,
            })
    return rows


def cmd_sweep(cfg: RunConfig) -> int:
    rows = sweep_rows(cfg)
    buf = io.StringIO()
    buf.write("# ripple = (max - min) / mean of the density over the central coverage window\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for row in rows:
        w.writerow([f"{row[c]:.17g}" if isinstance(row[c], float) else row[c] for c in SWEEP_COLUMNS])
    for p in _write(cfg, "sweep", buf.getvalue(), json.dumps(rows, indent=1, sort_keys=True)):
        print(p)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "density": cmd_density,
    "husimi": cmd_husimi,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--r", type=float, nargs="+", help="squeeze parameter(s)")
    common.add_argument("--tau", type=float, nargs="+", help="literal tau value(s)")
    common.add_argument("--tau-tag", nargs="+", choices=[*TAU_TAGS, "literal"], help="tau convention(s)")
    common.add_argument("--pulses", type=int, help="number of interaction+measurement rounds P")
    common.add_argument("--dim", type=int, help="Fock dimension for the oracle")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=["csv", "json", "both"])
    common.add_argument("--coverage", type=float, help="probability held by the flatness window (default 0.8)")

    parser = _Parser(prog="quasirect", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        cfg.validate(sweep=args.command == "sweep")
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TruncationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION


if __name__ == "__main__":
    sys.exit(main())
