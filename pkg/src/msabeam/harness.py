"""Monte Carlo harness: experiment configuration, paired trials, delimited
output.

One trial draws one scenario from (base_seed + trial) and runs every
configured scheme on it, so scheme comparisons are paired. Output is a CSV
with a fixed header plus a JSON summary; identical configurations produce
identical bytes regardless of the worker count (rows are sorted before
writing, and wall-clock recording is off by default because measured times
are not reproducible).
"""

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from functools import partial

import numpy as np

from .channels import SPEED_OF_LIGHT, ChannelContext, ScenarioConfig, build_scenario
from .arrays import movable_geometry
from .engine import SCHEME_RUNNERS, AOConfig, strict_modulus_rate
from .objective import beam_gains, sum_rate

EXPERIMENTS = ("single", "convergence", "region_sweep", "power_sweep")
ALL_SCHEMES = ("proposed", "sparse_upa", "dense_upa", "exhaustive")

CSV_HEADER = ("experiment,scheme,trial,seed,sweep_value,iteration,"
              "sum_rate,sum_rate_exact,wall_ms")


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending field."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "single"
    carrier_hz: float = 30e9
    num_subarrays: int = 16
    antennas_per_subarray: int = 4
    num_users: int = 16
    paths_per_user: int = 6
    aperture_lambdas: float = 20.0
    region_sweep: tuple = (1.0, 2.0, 4.0)
    power_sweep_dbm: tuple = (0.0, 10.0, 20.0)
    power_dbm: float = 10.0
    noise_dbm: float = -80.0
    rho: float = 30.0
    step0: float = 0.1
    eps_conv: float = 1e-3
    eps_step: float = 1e-3
    eps_admm: float = 1e-3
    max_outer: int = 200
    trials: int = 1000
    base_seed: int = 1
    schemes: tuple = ("proposed", "sparse_upa", "dense_upa")
    out: str = "results.csv"
    eval_channel: str = "both"
    workers: int = 1
    grid_step_lambdas: float = 0.01
    grid_cap: int = 40000
    min_distance: float = 5.0
    max_distance: float = 30.0
    record_wall: bool = False
    strict_modulus: bool = False


# presets: paper-scale defaults above; desk is the small paired setup used
# by the fast studies and the test suite
PRESETS = {
    "paper": {},
    "desk": {
        "num_subarrays": 4,
        "num_users": 4,
        "paths_per_user": 3,
        "trials": 50,
        "max_outer": 60,
        "aperture_lambdas": 2.0,
        "grid_step_lambdas": 0.05,
        # placement step ladder rescaled to centimeter boxes, same 7-probe
        # structure as the full-scale defaults
        "step0": 1e-4,
        "eps_step": 1e-6,
        "schemes": ALL_SCHEMES,
    },
}


def dbm_to_watts(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


def wavelength_of(config):
    return SPEED_OF_LIGHT / config.carrier_hz


_BOOL_WORDS = {"true": True, "1": True, "yes": True, "on": True,
               "false": False, "0": False, "no": False, "off": False}


def _convert(name, kind, raw):
    raw = raw.strip()
    try:
        if kind is bool:
            if raw.lower() not in _BOOL_WORDS:
                raise ValueError("expected a boolean")
            return _BOOL_WORDS[raw.lower()]
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is tuple:
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            if name == "schemes":
                return tuple(parts)
            return tuple(float(p) for p in parts)
        return raw
    except ValueError as exc:
        raise ConfigError(f"setting '{name}': cannot parse {raw!r} ({exc})") from None


def parse_settings_text(text):
    """`key = value` lines; '#' starts a comment; keys must be known."""
    mapping = {}
    for lineno, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, raw = line.split("=", 1)
        mapping[key.strip()] = raw.strip()
    return mapping


def make_config(preset=None, file_path=None, overrides=None):
    """Layered configuration: defaults, then preset, then file, then overrides."""
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset '{preset}' (have: {', '.join(PRESETS)})")
    config = replace(ExperimentConfig(), **PRESETS.get(preset or "paper", {}))
    field_types = {f.name: type(getattr(config, f.name)) for f in fields(config)}
    layers = []
    if file_path is not None:
        try:
            with open(file_path, "r", encoding="utf-8") as fh:
                layers.append(parse_settings_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
    if overrides:
        layers.append(dict(overrides))
    for layer in layers:
        updates = {}
        for key, raw in layer.items():
            if key not in field_types:
                raise ConfigError(f"unknown setting '{key}'")
            value = raw if not isinstance(raw, str) else _convert(key, field_types[key], raw)
            updates[key] = value
        config = replace(config, **updates)
    validate_config(config)
    return config


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


def validate_config(config):
    _require(config.experiment in EXPERIMENTS,
             f"experiment must be one of {EXPERIMENTS}, got '{config.experiment}'")
    _require(len(config.schemes) > 0, "schemes: need at least one scheme")
    for s in config.schemes:
        _require(s in ALL_SCHEMES, f"schemes: unknown scheme '{s}'")
    _require(config.carrier_hz > 0, "carrier_hz must be positive")
    for name in ("rho", "step0", "eps_conv", "eps_step", "eps_admm",
                 "aperture_lambdas", "grid_step_lambdas", "min_distance"):
        _require(getattr(config, name) > 0, f"{name} must be positive")
    _require(config.max_distance > config.min_distance,
             "max_distance must exceed min_distance")
    _require(config.trials >= 1, "trials must be at least 1")
    if config.experiment == "region_sweep":
        _require(len(config.region_sweep) > 0, "region_sweep must be non-empty")
    if config.experiment == "power_sweep":
        _require(len(config.power_sweep_dbm) > 0, "power_sweep_dbm must be non-empty")
    _require(config.max_outer >= 1, "max_outer must be at least 1")
    _require(config.workers >= 1, "workers must be at least 1")
    _require(config.num_users >= 1, "num_users must be at least 1")
    _require(config.paths_per_user >= 1, "paths_per_user must be at least 1")
    _require(config.eval_channel in ("hybrid", "exact", "both"),
             f"eval_channel must be hybrid/exact/both, got '{config.eval_channel}'")
    m_root = math.isqrt(config.num_subarrays)
    _require(m_root * m_root == config.num_subarrays,
             "num_subarrays must be a perfect square for the tiled layout")
    n_root = math.isqrt(config.antennas_per_subarray)
    _require(n_root * n_root == config.antennas_per_subarray,
             "antennas_per_subarray must be a perfect square")

    lam = wavelength_of(config)
    footprint = (n_root - 1) * 0.5 * lam
    for a in _aperture_values(config):
        cell = a * lam / m_root
        _require(cell >= footprint - 1e-12,
                 f"aperture {a} wavelengths: per-subarray frame smaller than "
                 f"the subarray footprint")
        if "exhaustive" in config.schemes:
            side = cell - footprint
            step = config.grid_step_lambdas * lam
            count = (int(side / step + 1e-9) + 1) ** 2
            _require(count <= config.grid_cap,
                     f"aperture {a} wavelengths: placement lattice has {count} "
                     f"points per subarray (cap {config.grid_cap}); use "
                     f"desk-scale regions or drop the exhaustive scheme")


def _aperture_values(config):
    if config.experiment == "region_sweep":
        return tuple(config.region_sweep)
    return (config.aperture_lambdas,)


def _sweep_values(config):
    if config.experiment == "region_sweep":
        return tuple(config.region_sweep)
    if config.experiment == "power_sweep":
        return tuple(config.power_sweep_dbm)
    return (config.aperture_lambdas,)


def scenario_config(config):
    return ScenarioConfig(
        num_users=config.num_users,
        paths_per_user=config.paths_per_user,
        wavelength=wavelength_of(config),
        min_distance=config.min_distance,
        max_distance=config.max_distance,
        noise_power=dbm_to_watts(config.noise_dbm))


def geometry_for(config, aperture_lambdas):
    lam = wavelength_of(config)
    return movable_geometry(config.num_subarrays, config.antennas_per_subarray,
                            lam, aperture_lambdas * lam)


def ao_config(config, power_dbm):
    return AOConfig(
        power=dbm_to_watts(power_dbm),
        rho=config.rho,
        step0=config.step0,
        eps_conv=config.eps_conv,
        eps_step=config.eps_step,
        eps_admm=config.eps_admm,
        max_outer=config.max_outer,
        grid_step=config.grid_step_lambdas * wavelength_of(config),
        grid_cap=config.grid_cap)


@dataclass
class ResultRow:
    experiment: str
    scheme: str
    trial: int
    seed: int
    sweep_value: float
    iteration: int
    sum_rate: float
    sum_rate_exact: float  # None when not evaluated
    wall_ms: float


def _exact_rate(scenario, geometry, state):
    h = ChannelContext(scenario, geometry).exact(state.positions)
    G = beam_gains(h, state.w_stack, state.V)
    return sum_rate(G, scenario.noise_power)


def run_trial(config, trial):
    """All rows and final rates for one trial (one scenario, all schemes)."""
    seed = config.base_seed + trial
    scenario = build_scenario(scenario_config(config), seed)
    rows = []
    finals = []
    for sweep_value in _sweep_values(config):
        aperture = sweep_value if config.experiment == "region_sweep" \
            else config.aperture_lambdas
        power_dbm = sweep_value if config.experiment == "power_sweep" \
            else config.power_dbm
        geometry = geometry_for(config, aperture)
        aocfg = ao_config(config, power_dbm)
        for scheme in config.schemes:
            result = SCHEME_RUNNERS[scheme](scenario, geometry, aocfg, seed)
            wall_ms = result.wall_s * 1000.0 if config.record_wall else 0.0
            final_rate = result.rates[-1]
            if config.strict_modulus:
                final_rate = strict_modulus_rate(scenario, geometry, result, aocfg)
            exact = None
            if config.eval_channel in ("exact", "both"):
                exact = _exact_rate(scenario, geometry, result.state)
            reported = exact if config.eval_channel == "exact" else final_rate
            if config.experiment == "convergence":
                last = len(result.rates) - 1
                for i, rate in enumerate(result.rates):
                    rows.append(ResultRow(
                        config.experiment, scheme, trial, seed, sweep_value, i,
                        rate, exact if i == last else None,
                        wall_ms if i == last else 0.0))
            else:
                rows.append(ResultRow(
                    config.experiment, scheme, trial, seed, sweep_value,
                    result.iterations, final_rate, exact, wall_ms))
            finals.append((scheme, sweep_value, reported))
    return rows, finals


def run_experiment(config):
    """(rows, summary) over all trials; deterministic for a fixed config."""
    validate_config(config)
    trials = range(config.trials)
    if config.workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            per_trial = list(pool.map(partial(run_trial, config), trials))
    else:
        per_trial = [run_trial(config, t) for t in trials]

    rows = [row for trial_rows, _ in per_trial for row in trial_rows]
    finals = [f for _, trial_finals in per_trial for f in trial_finals]
    order = {s: i for i, s in enumerate(config.schemes)}
    rows.sort(key=lambda r: (order[r.scheme], r.sweep_value, r.trial, r.iteration))
    return rows, summarize(config, finals)


def summarize(config, finals):
    """Per-scheme, per-sweep mean and standard error of the reported rate."""
    schemes = {}
    for scheme in config.schemes:
        points = []
        for value in _sweep_values(config):
            rates = np.array([r for s, v, r in finals
                              if s == scheme and v == value])
            if rates.size == 0:
                points.append({"sweep_value": value, "mean": None,
                               "stderr": None, "trials": 0})
                continue
            stderr = float(rates.std(ddof=1) / math.sqrt(rates.size)) \
                if rates.size > 1 else 0.0
            points.append({"sweep_value": value,
                           "mean": float(rates.mean()),
                           "stderr": stderr,
                           "trials": int(rates.size)})
        schemes[scheme] = points
    return {"experiment": config.experiment,
            "trials": config.trials,
            "schemes": schemes}


def _fmt(x):
    return format(float(x), ".9g")


def render_csv(rows):
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join([
            r.experiment,
            r.scheme,
            str(r.trial),
            str(r.seed),
            _fmt(r.sweep_value),
            str(r.iteration),
            _fmt(r.sum_rate),
            "" if r.sum_rate_exact is None else _fmt(r.sum_rate_exact),
            _fmt(r.wall_ms),
        ]))
    return "\n".join(lines) + "\n"


def emit_csv(rows, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_csv(rows))


def summary_path(out_path):
    if out_path.endswith(".csv"):
        return out_path[:-4] + ".summary.json"
    return out_path + ".summary.json"


def emit_summary(summary, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
