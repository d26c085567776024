"""Command line front end: run experiments, validate configs, self-check."""

import argparse
import sys

import numpy as np

from .analog import admm_solve, build_analog_subproblem
from .arrays import fixed_geometry
from .channels import ChannelContext, ScenarioConfig, build_scenario
from .engine import init_state
from .harness import (ConfigError, emit_csv, emit_summary, make_config,
                      run_experiment, summary_path)
from .objective import beam_gains, scale_update, sinr_values, sum_rate, transformed_rate
from .oracles import best_feasible_analog, fd_gradient
from .positions import build_position_subproblem, placement_gradient, placement_objective


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="msabeam",
        description="Movable-subarray hybrid beamforming: optimizer and "
                    "Monte Carlo harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p):
        p.add_argument("--config", help="key = value settings file")
        p.add_argument("--preset", choices=("paper", "desk"),
                       help="named starting point for the settings")
        p.add_argument("--set", dest="assignments", action="append", default=[],
                       metavar="KEY=VALUE", help="override one setting")
        p.add_argument("--out", help="output CSV path")
        p.add_argument("--seed", type=int, help="base seed for trial draws")
        p.add_argument("--trials", type=int, help="number of Monte Carlo trials")
        p.add_argument("--scheme", action="append", default=None,
                       help="scheme to run (repeatable)")
        p.add_argument("--experiment",
                       choices=("single", "convergence", "region_sweep", "power_sweep"))
        p.add_argument("--workers", type=int, help="parallel trial workers")

    run_p = sub.add_parser("run", help="run an experiment and write CSV + summary")
    add_config_flags(run_p)

    val_p = sub.add_parser("validate", help="check a configuration and exit")
    add_config_flags(val_p)

    sub.add_parser("oracle", help="run slow reference checks on a small system")
    return parser


def _collect_overrides(args):
    overrides = {}
    for assignment in args.assignments:
        if "=" not in assignment:
            raise ConfigError(f"--set expects KEY=VALUE, got {assignment!r}")
        key, value = assignment.split("=", 1)
        overrides[key.strip()] = value.strip()
    if args.out is not None:
        overrides["out"] = args.out
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.scheme is not None:
        overrides["schemes"] = tuple(args.scheme)
    if args.experiment is not None:
        overrides["experiment"] = args.experiment
    if args.workers is not None:
        overrides["workers"] = args.workers
    return overrides


def _cmd_run(args):
    try:
        config = make_config(preset=args.preset, file_path=args.config,
                             overrides=_collect_overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        rows, summary = run_experiment(config)
        emit_csv(rows, config.out)
        emit_summary(summary, summary_path(config.out))
    except Exception as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {len(rows)} rows to {config.out}")
    print(f"wrote summary to {summary_path(config.out)}")
    return 0


def _cmd_validate(args):
    try:
        config = make_config(preset=args.preset, file_path=args.config,
                             overrides=_collect_overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print("configuration ok")
    print(f"  experiment: {config.experiment}")
    print(f"  schemes:    {', '.join(config.schemes)}")
    print(f"  trials:     {config.trials}")
    print(f"  output:     {config.out}")
    return 0


def _oracle_system(seed=7):
    """Small two-subarray setup the reference solver can handle."""
    lam = 0.01
    geometry = fixed_geometry([(-0.02, 0.0), (0.02, 0.0)], 4, lam, 0.1)
    scen_cfg = ScenarioConfig(num_users=2, paths_per_user=2, wavelength=lam,
                              noise_power=1e-9)
    scenario = build_scenario(scen_cfg, seed)
    return scenario, geometry


def _cmd_oracle(_args):
    from .engine import AOConfig

    failures = 0

    def report(name, ok, detail):
        nonlocal failures
        status = "ok" if ok else "FAIL"
        print(f"{status:4s}  {name}: {detail}")
        if not ok:
            failures += 1

    scenario, geometry = _oracle_system()
    ctx = ChannelContext(scenario, geometry)
    config = AOConfig(power=1e-3, max_outer=5)
    state = init_state(ctx, config, seed=3)
    h = ctx.hybrid(state.positions)
    G = beam_gains(h, state.w_stack, state.V)
    eta = sinr_values(G, scenario.noise_power)
    mu = scale_update(G, eta, scenario.noise_power)

    rate = sum_rate(G, scenario.noise_power)
    surrogate_rate = transformed_rate(G, eta, mu, scenario.noise_power)
    gap = abs(surrogate_rate - rate) / max(1.0, abs(rate))
    report("surrogate tightness", gap <= 1e-9, f"relative gap {gap:.3e}")

    sub = build_analog_subproblem(h, state.V, eta, mu, config.power, config.rho)
    # matched-phase warm start, as the AO loop provides after its first pass
    w0 = np.where(np.abs(sub.lin) > 0, sub.lin / np.maximum(np.abs(sub.lin), 1e-300), 1.0)
    result = admm_solve(sub, w0, tol=1e-6, max_iter=20000)
    from .analog import analog_objective
    admm_value = analog_objective(sub, result.w)
    ref_value, _ = best_feasible_analog(sub, num_restarts=6, seed=11)
    report("analog vs reference", admm_value >= ref_value - 1e-3,
           f"admm {admm_value:.6f}, reference {ref_value:.6f}")

    psub = build_position_subproblem(ctx, state.w_stack, state.V, eta, mu,
                                     state.positions, 0)
    point = state.positions[0]
    grad = placement_gradient(psub, point)
    fd = fd_gradient(lambda p: placement_objective(psub, p), point,
                     step=1e-6 * geometry.wavelength)
    denom = max(np.linalg.norm(fd), 1e-12)
    rel = np.linalg.norm(grad - fd) / denom
    report("placement gradient", rel <= 1e-4, f"relative error {rel:.3e}")

    if failures:
        print(f"{failures} check(s) failed")
        return 3
    print("all checks passed")
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "validate":
        return _cmd_validate(args)
    return _cmd_oracle(args)


if __name__ == "__main__":
    sys.exit(main())
