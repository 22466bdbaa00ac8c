"""Command-line experiment runner.

Subcommands emit plot-ready data series as CSV or JSON:

    percwalk simulate --lattice_side 4 --lambda 0.5 --noise_kind dephasing --gamma 0.1
    percwalk table1
    percwalk curves --gamma 0.1 --a 0.7
    percwalk mixing-time --noise_kind bitflip --gamma 0.05 --target 0.3
    percwalk gamma-tune
    percwalk validate

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines, then command-line flags (flags win).
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import logging
import math
import sys
import time
import warnings
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    CONVENTIONS,
    DomainError,
    SingularLimitWarning,
    UnreachableTargetError,
    avg_distance_theta,
    bitflip_evolution,
    dephasing_evolution,
    f_bit,
    f_dep,
    mixing_time_bit,
    mixing_time_dep,
    tune_gamma_dep,
)
from .channels import NOISE_KINDS, calibrate
from .lattice import build_lattice, zone_decompose, zone_normalization, zone_probabilities
from .qmatrix import IDENTITY_2, trace_distance
from .records import ResultRecord, write_record
from .walk import (
    EXACT_MAX_EDGES,
    REPRESENTATIONS,
    CoinSpec,
    initial_state,
    observe_exact,
    observe_factorized,
    observe_monte_carlo,
)
from .zonemodel import BlochCoinState

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_RESOURCE = 3
EXIT_UNREACHABLE = 4

ENGINES = ("auto", "exact", "factorized", "monte-carlo")
FORMATS = ("csv", "json")
DEFAULT_MAX_SIDE = 24
TABLE1_A = (1.0, 0.9, 0.8, 0.7, 0.6, 0.5)
TUNE_A = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


class ConfigError(ValueError):
    pass


class ResourceCapError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    lattice_side: int = 4
    lam: float = 0.5
    noise_kind: str = "none"
    gamma: float = 0.0
    coin_alpha: float = math.pi / 2
    coin_beta: float = math.pi / 4
    a: float = 1.0
    theta: float = math.pi / 2
    phi: float = math.pi / 2
    steps: int = 10
    trajectories: int = 1000
    seed: int = 0
    output_path: str | None = None
    output_format: str = "csv"
    # None selects the command's own default (continuous for curves, per-step for mixing times)
    convention: str | None = None
    engine: str = "auto"
    representation: str = "auto"
    workers: int = 1
    dt: float = 1.0
    n_vertices: int = 10_000
    target: float | None = None
    d0: float | None = None
    t_max: float | None = None
    t_points: int = 201
    a_grid: str = ",".join(str(a) for a in TUNE_A)
    gamma_max: float = 2.0
    max_side: int = DEFAULT_MAX_SIDE
    timestamp: bool = True

    def validate(self) -> "ExperimentConfig":
        checks = [
            (self.lattice_side >= 2, "lattice_side must be >= 2"),
            (0.0 <= self.lam <= 1.0, "lambda must lie in [0, 1]"),
            (0.0 <= self.a <= 1.0, "a must lie in [0, 1]"),
            (self.gamma >= 0.0, "gamma must be >= 0"),
            (self.noise_kind in NOISE_KINDS, f"noise_kind must be one of {NOISE_KINDS}"),
            (self.steps >= 0, "steps must be >= 0"),
            (self.trajectories >= 1, "trajectories must be >= 1"),
            (self.seed >= 0, "seed must be >= 0"),
            (self.output_format in FORMATS, f"output_format must be one of {FORMATS}"),
            (self.convention is None or self.convention in CONVENTIONS,
             f"convention must be one of {CONVENTIONS}"),
            (self.engine in ENGINES, f"engine must be one of {ENGINES}"),
            (self.representation in REPRESENTATIONS, f"representation must be one of {REPRESENTATIONS}"),
            (self.workers >= 1, "workers must be >= 1"),
            (self.dt > 0, "dt must be > 0"),
            (self.n_vertices >= 16, "n_vertices must be >= 16"),
            (self.t_points >= 2, "t_points must be >= 2"),
            (self.t_max is None or self.t_max > 0, "t_max must be > 0"),
            (self.d0 is None or 0.0 <= self.d0 <= 1.0, "d0 must lie in [0, 1]"),
            (self.max_side >= 2, "max_side must be >= 2"),
            (self.gamma_max > 0, "gamma_max must be > 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        self.parsed_a_grid()
        if self.noise_kind == "bitflip" and -math.expm1(-self.gamma * self.dt) / 2 > 0.5:
            raise ConfigError("bit-flip probability out of range")
        return self

    def parsed_a_grid(self) -> list[float]:
        try:
            grid = [float(s) for s in str(self.a_grid).split(",") if s.strip()]
        except ValueError as exc:
            raise ConfigError(f"a_grid must be comma-separated numbers: {exc}") from None
        if not grid or any(not 0.0 < a <= 1.0 for a in grid):
            raise ConfigError("a_grid entries must lie in (0, 1]")
        return grid

    def echo(self) -> dict:
        """Config fields that influence results (the output location and timestamp do not)."""
        d = dataclasses.asdict(self)
        for k in ("output_path", "timestamp", "workers"):
            d.pop(k)
        return d


# config-file / flag aliases onto dataclass field names
ALIASES = {"lambda": "lam"}
FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, raw):
    if not isinstance(raw, str):
        return raw
    kind = FIELD_TYPES[key]
    text = raw.strip()
    if "None" in kind and text.lower() in ("", "none", "null"):
        return None
    try:
        if kind.startswith("bool"):
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind.startswith("int"):
            return int(text)
        if kind.startswith("float"):
            return float(text)
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {raw!r}") from None
    return text


def _canonical(key: str) -> str:
    key = key.strip().replace("-", "_")
    key = ALIASES.get(key, key)
    if key not in FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    return key


def read_config_file(path: str | Path) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        key = _canonical(key)
        out[key] = _coerce(key, value)
    return out


def build_config(file_values: dict | None = None, flag_values: dict | None = None) -> ExperimentConfig:
    merged = {}
    for source in (file_values or {}, flag_values or {}):
        for k, v in source.items():
            key = _canonical(k)
            merged[key] = _coerce(key, v)
    return ExperimentConfig(**merged).validate()


# --- commands --------------------------------------------------------------------


def _provenance(cfg: ExperimentConfig, **extra) -> dict:
    return {"engine_version": __version__, "seed": cfg.seed, **extra}


def _record(cmd: str, cfg: ExperimentConfig, series=None, scalars=None, **prov) -> ResultRecord:
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds") if cfg.timestamp else None
    return ResultRecord(command=cmd, config=cfg.echo(), series=series or {}, scalars=scalars or {},
                        provenance=_provenance(cfg, **prov), generated=stamp)


def _pick_engine(cfg: ExperimentConfig, lattice) -> str:
    if cfg.engine != "auto":
        return cfg.engine
    return "exact" if lattice.E <= EXACT_MAX_EDGES else "monte-carlo"


def cmd_simulate(cfg: ExperimentConfig) -> ResultRecord:
    """Per-step zone probabilities, their normalization and the coin distance to I/2."""
    if cfg.lattice_side > cfg.max_side:
        raise ResourceCapError(
            f"lattice_side={cfg.lattice_side} exceeds the dense-engine cap {cfg.max_side} "
            f"(density matrix is (2N)^2 = {(2 * cfg.lattice_side**2) ** 2} entries); "
            f"use lattice_side <= {cfg.max_side} or the analytic commands")
    lattice = build_lattice(cfg.lattice_side)
    zones = zone_decompose(lattice)
    engine = _pick_engine(cfg, lattice)
    if engine == "exact" and lattice.E > EXACT_MAX_EDGES:
        raise ResourceCapError(
            f"exact enumeration needs at most {EXACT_MAX_EDGES} bonds, lattice has {lattice.E}; "
            "use engine factorized or monte-carlo")
    coin = CoinSpec(cfg.coin_alpha, cfg.coin_beta)
    noise = calibrate(cfg.noise_kind, cfg.gamma, cfg.dt)
    rho0 = initial_state(lattice, BlochCoinState(cfg.a, cfg.theta, cfg.phi).matrix())
    args = (rho0, cfg.steps, cfg.lam, coin, noise, lattice)
    if engine == "exact":
        obs = observe_exact(*args)
    elif engine == "factorized":
        obs = observe_factorized(*args)
    else:
        obs = observe_monte_carlo(*args, cfg.trajectories, seed=cfg.seed, workers=cfg.workers,
                                  representation=cfg.representation)

    probs = np.array([zone_probabilities(p, zones) for p in obs.position])
    cols: dict[str, list] = {"step": list(range(cfg.steps + 1))}
    for m in range(probs.shape[1]):
        cols[f"P_{m}"] = probs[:, m].tolist()
    cols["normalization"] = [zone_normalization(p) for p in probs]
    cols["coin_distance"] = [trace_distance(c, IDENTITY_2 / 2) for c in obs.coin]
    return _record("simulate", cfg, {"zones": cols},
                   {"M": lattice.M, "max_zone": zones.max_zone, "N": lattice.N, "E": lattice.E},
                   engine=engine)


def cmd_table1(cfg: ExperimentConfig) -> ResultRecord:
    """Theta-averaged initial coin distance at ``n_vertices`` for the standard ``a`` values."""
    vals = [avg_distance_theta(a, cfg.n_vertices) for a in TABLE1_A]
    return _record("table1", cfg, {"table1": {"a": list(TABLE1_A), "analytic_bound": vals}},
                   {"N": cfg.n_vertices})


def _tunable_rows(cfg: ExperimentConfig) -> dict:
    rows = {"a": [], "rhs": [], "gamma_root": [], "residual": [], "status": []}
    for a in cfg.parsed_a_grid():
        sol = tune_gamma_dep(a, cfg.n_vertices, gamma_max=cfg.gamma_max)
        rows["a"].append(a)
        rows["rhs"].append(sol.rhs)
        rows["gamma_root"].append(sol.gamma if sol.found else math.nan)
        rows["residual"].append(sol.residual if sol.found else math.nan)
        rows["status"].append("ok" if sol.found else "no-solution")
    return rows


def cmd_curves(cfg: ExperimentConfig) -> ResultRecord:
    """Distance-vs-time curves, the tunable-rate table and the ``f(M, gamma)`` functions."""
    if cfg.gamma <= 0:
        raise ConfigError("curves needs gamma > 0")
    conv = cfg.convention or "continuous"
    N = cfg.n_vertices
    M = math.isqrt(N) // 2
    t_max = cfg.t_max or 20.0 / cfg.gamma
    t = np.linspace(0.0, t_max, cfg.t_points)
    d0 = cfg.d0 if cfg.d0 is not None else avg_distance_theta(cfg.a, N)
    if not d0 <= 1.0:
        raise ConfigError(f"bit-flip initial distance {d0} exceeds 1; pass d0 explicitly")
    try:
        dep = dephasing_evolution(t, N, cfg.a, cfg.gamma, conv)
        bit = bitflip_evolution(t, d0, cfg.gamma, conv)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    g = np.linspace(cfg.gamma_max / cfg.t_points, cfg.gamma_max, cfg.t_points)
    series = {
        "dephasing_time": {"t": t.tolist(), "distance": np.asarray(dep).tolist()},
        "bitflip_time": {"t": t.tolist(), "distance": np.asarray(bit).tolist()},
        "tunable_rate": _tunable_rows(cfg),
        "f_functions": {"gamma": g.tolist(), "f_dep": [f_dep(M, x) for x in g],
                        "f_bit": [f_bit(M, x) for x in g]},
    }
    return _record("curves", cfg, series, {"N": N, "M": M, "d0_bitflip": d0, "convention": conv})


def cmd_mixing_time(cfg: ExperimentConfig) -> ResultRecord:
    """Time for the averaged coin distance to reach ``target``; raises if unreachable."""
    if cfg.target is None:
        raise ConfigError("mixing-time needs --target")
    conv = cfg.convention or "per-step"
    N = cfg.n_vertices
    if cfg.noise_kind == "dephasing":
        t = mixing_time_dep(cfg.target, N, cfg.a, cfg.gamma, conv)
        d0 = None
    elif cfg.noise_kind == "bitflip":
        d0 = cfg.d0 if cfg.d0 is not None else avg_distance_theta(cfg.a, N)
        t = mixing_time_bit(cfg.target, d0, cfg.gamma, conv)
    else:
        raise ConfigError("mixing-time needs noise_kind dephasing or bitflip")
    scalars = {"t_mix": t, "target": cfg.target, "noise_kind": cfg.noise_kind, "gamma": cfg.gamma,
               "N": N, "a": cfg.a, "convention": conv}
    if d0 is not None:
        scalars["d0"] = d0
    return _record("mixing-time", cfg, scalars=scalars)


def cmd_gamma_tune(cfg: ExperimentConfig) -> ResultRecord:
    return _record("gamma-tune", cfg, {"tunable_rate": _tunable_rows(cfg)},
                   {"N": cfg.n_vertices, "M": math.isqrt(cfg.n_vertices) // 2})


def cmd_validate(cfg: ExperimentConfig) -> ResultRecord:
    """Run the oracle-equivalence suite and tabulate each check."""
    from .validation import run_suite

    results = run_suite(seed=cfg.seed)
    cols = {"check": [r.name for r in results], "value": [r.value for r in results],
            "tolerance": [r.tolerance for r in results], "passed": [r.passed for r in results],
            "seconds": [r.seconds for r in results]}
    return _record("validate", cfg, {"checks": cols}, {"all_passed": all(r.passed for r in results)})


COMMANDS = {
    "simulate": cmd_simulate,
    "table1": cmd_table1,
    "curves": cmd_curves,
    "mixing-time": cmd_mixing_time,
    "gamma-tune": cmd_gamma_tune,
    "validate": cmd_validate,
}


# --- argument parsing ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="percwalk", description="Percolated quantum walk experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("--no-timestamp", "--no_timestamp", dest="timestamp", action="store_const",
                        const=False, default=argparse.SUPPRESS,
                        help="omit the '# generated' line so output is byte-stable")
    for f in fields(ExperimentConfig):
        if f.name == "timestamp":
            continue
        names = [f"--{f.name}"]
        if "_" in f.name:
            names.append(f"--{f.name.replace('_', '-')}")
        if f.name == "lam":
            names = ["--lambda", "--lam"]
        common.add_argument(*names, dest=f.name, default=argparse.SUPPRESS, metavar=f.name.upper())
    subs = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        subs.add_parser(name, parents=[common], help=(fn.__doc__ or "").split("\n")[0])
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    command = ns.pop("command")
    config_path = ns.pop("config", None)
    verbose = ns.pop("verbose", False)
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        file_values = read_config_file(config_path) if config_path else {}
        cfg = build_config(file_values, ns)
        start = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SingularLimitWarning)
            record = COMMANDS[command](cfg)
        if cfg.timestamp:
            record.provenance["seconds"] = round(time.perf_counter() - start, 3)
        write_record(record, cfg.output_path, cfg.output_format)
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except UnreachableTargetError as exc:
        print(f"error: unreachable target: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE
    except (ConfigError, DomainError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if command == "validate" and not record.scalars["all_passed"]:
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
