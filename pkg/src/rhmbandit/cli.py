"""Command line entry point: ``rhmb run | oracle | validate | selftest``.

Failures print a single line ``error: <kind>: <message>`` on stderr and
exit with status 2 (usage or configuration) or 1 (runtime).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import oracle
from .env import EnvironmentSpec
from .exceptions import ConfigurationError, ModelError
from .harness.config import AGENTS, PROFILES, ExperimentConfig, config_from_dict, load_config
from .harness.presets import PRESETS
from .harness.runner import OutputError, RunFailure, realization_specs, run_experiment

EXIT_USAGE, EXIT_RUNTIME = 2, 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _agents(text):
    agents = tuple(a.strip() for a in text.split(",") if a.strip())
    bad = [a for a in agents if a not in AGENTS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown agent(s) {bad}; choose from {list(AGENTS)}")
    return agents


def build_parser():
    p = _Parser(prog="rhmb", description="Restless hidden Markov bandit experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a Monte Carlo batch and write CSVs")
    run.add_argument("--config", type=Path)
    run.add_argument("--preset", choices=sorted(PRESETS))
    run.add_argument("--profile", choices=sorted(PROFILES),
                     help="desk (default, T=1e5, 20x5 runs) or full (T=1e6, 100x20 runs)")
    run.add_argument("--horizon", type=int)
    run.add_argument("--realizations", type=int)
    run.add_argument("--trajectories", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--agents", type=_agents, help="comma separated, e.g. hucrl,joint")
    run.add_argument("--out", type=str)
    run.add_argument("--jobs", type=int)

    orc = sub.add_parser("oracle", help="print μ_S, ρ(π*), π* and model constants")
    src = orc.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(PRESETS))
    src.add_argument("--config", type=Path)
    src.add_argument("--spec", type=Path, help="JSON environment spec")
    orc.add_argument("--seed", type=int, default=0)
    orc.add_argument("--realization", type=int, default=0)
    orc.add_argument("--json", action="store_true", help="machine readable output")

    val = sub.add_parser("validate", help="check a TOML config or JSON spec")
    val.add_argument("path", type=Path)

    st = sub.add_parser("selftest", help="run the LP, recovery and coverage property suites")
    st.add_argument("--quick", action="store_true", help="smaller sample sizes")
    st.add_argument("--seed", type=int, default=0)
    return p


def _run_config(args) -> ExperimentConfig:
    overrides = dict(horizon=args.horizon, realizations=args.realizations,
                     trajectories=args.trajectories, seed=args.seed, agents=args.agents,
                     out=args.out, jobs=args.jobs)
    if args.profile:
        for k, v in PROFILES[args.profile].items():
            overrides[k] = overrides[k] if overrides[k] is not None else v
    if args.config is not None:
        if args.preset:
            overrides["preset"] = args.preset
        return load_config(args.config, overrides)
    if not args.preset:
        raise UsageError("run needs --config or --preset")
    return config_from_dict({}, overrides={**overrides, "preset": args.preset})


def cmd_run(args):
    cfg = _run_config(args)
    out, results = run_experiment(cfg)
    print(f"wrote {len(results)} runs to {out}")
    return 0


def _oracle_spec(args) -> EnvironmentSpec:
    if args.spec is not None:
        try:
            return EnvironmentSpec.from_dict(json.loads(args.spec.read_text()))
        except OSError as exc:
            raise ConfigurationError(f"cannot read spec {args.spec}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"spec {args.spec} is not valid JSON: {exc.msg}") from None
    if args.config is not None:
        cfg = load_config(args.config, {"seed": args.seed})
    else:
        cfg = config_from_dict({}, overrides={"preset": args.preset, "seed": args.seed})
    if not 0 <= args.realization < cfg.realizations:
        raise ConfigurationError(
            f"realization must be in [0, {cfg.realizations}) (got {args.realization})")
    return realization_specs(cfg.replace(realizations=args.realization + 1))[args.realization]


def oracle_summary(spec) -> dict:
    mu = oracle.stationary_distribution(spec.transition)
    pol = oracle.optimal_policy(spec)
    rho = oracle.average_reward(spec, pol.arms, pol.actions)
    c = oracle.compute_constants(spec)
    return {
        "mu_S": mu.tolist(),
        "rho_star": rho,
        "policy": [{"prev_state": s, "arm": int(pol.arms[s]), "action": pol.actions[s].tolist(),
                    "value": float(pol.values[s])} for s in range(spec.num_states)],
        "constants": {"T_M": c.T_M, "T_S": c.T_S, "r_max": c.r_max,
                      "C_theta_max": c.C_theta_max, "Delta": c.Delta},
    }


def cmd_oracle(args):
    summary = oracle_summary(_oracle_spec(args))
    if args.json:
        print(json.dumps(summary, indent=2))
        return 0
    fmt = lambda xs: "(" + ", ".join(f"{x:.4f}" for x in xs) + ")"  # noqa: E731
    print(f"mu_S={fmt(summary['mu_S'])}")
    print(f"rho_star={summary['rho_star']:.6f}")
    for row in summary["policy"]:
        action = "(" + ", ".join(f"{x:g}" for x in row["action"]) + ")"
        print(f"pi_star[{row['prev_state']}]: arm={row['arm']} action={action} value={row['value']:.6f}")
    c = summary["constants"]
    print(" ".join(f"{k}={v:.6g}" for k, v in c.items()))
    return 0


def cmd_validate(args):
    path = args.path
    if path.suffix == ".json":
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigurationError(f"cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path} is not valid JSON: {exc.msg}") from None
        spec = EnvironmentSpec.from_dict(data)
        oracle.stationary_distribution(spec.transition)
        print(f"ok: environment spec with |S|={spec.num_states} |B|={spec.num_arms} N={spec.dim}")
    else:
        cfg = load_config(path)
        print(f"ok: config with T={cfg.horizon}, {cfg.realizations}x{cfg.trajectories} runs, "
              f"agents={','.join(cfg.agents)}")
    return 0


def cmd_selftest(args):
    from .selftest import run_selftest

    report = run_selftest(quick=args.quick, seed=args.seed)
    for line in report.lines():
        print(line)
    if not report.ok:
        raise RunFailure(f"{report.n_failed} selftest check(s) failed")
    return 0


COMMANDS = {"run": cmd_run, "oracle": cmd_oracle, "validate": cmd_validate,
            "selftest": cmd_selftest}


def _fail(kind, message, code):
    one_line = " ".join(str(message).split())
    print(f"error: {kind}: {one_line}", file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    except (ConfigurationError, ModelError) as exc:
        return _fail("config", exc, EXIT_USAGE)
    except OutputError as exc:
        return _fail("io", exc, EXIT_RUNTIME)
    except RunFailure as exc:
        return _fail("run", exc, EXIT_RUNTIME)


if __name__ == "__main__":
    sys.exit(main())
