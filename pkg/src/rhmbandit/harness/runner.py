"""Monte Carlo execution and CSV/metadata persistence.

Output layout under ``cfg.out``::

    runs/r{realization}_j{trajectory}_{agent}.csv   t,regret,reward,rounds,recovery_failures
    aggregate.csv                                  t,agent,mean_regret,stderr,n_runs
    metadata.json                                  config echo, per-realization oracle data

Every file is written after all runs finish, in sorted key order, so the
bytes depend on the master seed only.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import __version__, oracle
from ..agents import LEARNERS
from ..env import EnvironmentSpec, HiddenMarkovBanditEnv
from ..simulation import simulate, simulate_known_state
from .config import ExperimentConfig
from .seeds import AGENT_CODES, agent_seed, realization_seed, seed_words, trajectory_seed

logger = logging.getLogger(__name__)

RUN_COLUMNS = ("t", "regret", "reward", "rounds", "recovery_failures")
AGGREGATE_COLUMNS = ("t", "agent", "mean_regret", "stderr", "n_runs")


class RunFailure(RuntimeError):
    """A single run raised; carries the run key and its child seed fingerprint."""


class OutputError(OSError):
    """Writing results failed; the message names the offending path."""


@dataclass
class RunResult:
    realization: int
    trajectory: int
    agent: str
    t: np.ndarray
    regret: np.ndarray
    reward: np.ndarray
    rounds: np.ndarray
    recovery_failures: np.ndarray


@dataclass
class Realization:
    spec: EnvironmentSpec
    policy: oracle.OptimalPolicy
    rho_star: float
    constants: oracle.ModelConstants


def realization_specs(cfg: ExperimentConfig):
    """θ-realizations of the setup, identical for every agent."""
    if isinstance(cfg.setup, EnvironmentSpec):
        return [cfg.setup] * cfg.realizations
    return [cfg.setup.sample(np.random.default_rng(realization_seed(cfg.seed, r)))
            for r in range(cfg.realizations)]


def prepare_realization(spec, with_delta=True) -> Realization:
    policy = oracle.optimal_policy(spec)
    rho = oracle.average_reward(spec, policy.arms, policy.actions)
    return Realization(spec, policy, rho, oracle.compute_constants(spec, with_delta))


def make_learner(agent, cfg, seed):
    return LEARNERS[agent](alpha=cfg.alpha, epsilon=cfg.epsilon, alpha_eps=cfg.alpha_eps,
                           gamma=cfg.gamma, random_state=seed)


def run_single(cfg: ExperimentConfig, real: Realization, r, j, agent) -> RunResult:
    """One agent on trajectory ``j`` of realization ``r``, traced at geometric checkpoints."""
    cps = oracle.geometric_checkpoints(cfg.horizon)
    env = HiddenMarkovBanditEnv(real.spec, seed=trajectory_seed(cfg.seed, r, j))
    if agent == "oracle_known_state":
        rewards, _ = simulate_known_state(env, real.policy.arms, real.policy.actions, cfg.horizon)
        rounds = np.zeros(len(cps), dtype=np.int64)
        failures = np.zeros(len(cps), dtype=np.int64)
    else:
        learner = make_learner(agent, cfg, agent_seed(cfg.seed, r, j, agent))
        learner.reset(real.spec.knowledge())
        log = simulate(learner, env, cfg.horizon)
        rewards = log.rewards
        # a round starting at time s is under way once s < t steps have been played
        rounds = np.searchsorted(log.round_starts, cps, side="left")
        failures = np.cumsum(log.recovery_failures)[cps - 1]
    trace = oracle.regret_trace(rewards, real.rho_star, cps)
    return RunResult(r, j, agent, trace.t, trace.regret, trace.reward, rounds, failures)


def _task(args):
    cfg, real, r, j, agent = args
    try:
        return run_single(cfg, real, r, j, agent)
    except Exception as exc:  # re-raised with the run's identity
        words = seed_words(agent_seed(cfg.seed, r, j, agent))
        raise RunFailure(
            f"run realization={r} trajectory={j} agent={agent} "
            f"(master seed {cfg.seed}, child seed {words}) failed: {type(exc).__name__}: {exc}"
        ) from exc


def run_all(cfg: ExperimentConfig, realizations=None):
    """Execute every (realization, trajectory, agent) run; results sorted by key."""
    if realizations is None:
        realizations = [prepare_realization(s) for s in realization_specs(cfg)]
    tasks = [(cfg, realizations[r], r, j, a)
             for r in range(cfg.realizations)
             for j in range(cfg.trajectories)
             for a in cfg.agents]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * cfg.jobs))))
    else:
        results = [_task(t) for t in tasks]
    results.sort(key=lambda res: (res.realization, res.trajectory, AGENT_CODES[res.agent]))
    return realizations, results


def aggregate(results, agents):
    """Mean and standard error of regret per (agent, checkpoint)."""
    rows = []
    for agent in agents:
        runs = [res for res in results if res.agent == agent]
        if not runs:
            continue
        R = np.stack([res.regret for res in runs])
        n = R.shape[0]
        mean = R.mean(axis=0)
        stderr = R.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.full(R.shape[1], np.nan)
        for t, m, s in zip(runs[0].t, mean, stderr):
            rows.append((int(t), agent, float(m), float(s), n))
    return rows


def _fmt(x):
    if isinstance(x, (int, np.integer)) or isinstance(x, str):
        return str(x)
    return repr(float(x))


def _write_csv(path, header, rows):
    text = ",".join(header) + "\n" + "".join(",".join(_fmt(v) for v in row) + "\n" for row in rows)
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None


def run_path(out, res: RunResult) -> Path:
    return Path(out) / "runs" / f"r{res.realization:03d}_j{res.trajectory:03d}_{res.agent}.csv"


def metadata(cfg, realizations):
    reals = []
    for r, real in enumerate(realizations):
        c = real.constants
        reals.append({
            "index": r,
            "rho_star": real.rho_star,
            "mu_S": oracle.stationary_distribution(real.spec.transition).tolist(),
            "policy": {"arms": real.policy.arms.tolist(), "actions": real.policy.actions.tolist()},
            "constants": {"T_M": c.T_M, "T_S": c.T_S, "r_max": c.r_max,
                          "C_theta_max": c.C_theta_max, "Delta": c.Delta},
            "spec": real.spec.to_dict(),
        })
    return {
        "package_version": __version__,
        "master_seed": int(cfg.seed),
        "seed_scheme": "SeedSequence(master, spawn_key=...) with (0, r) realization, "
                       "(1, r, j) trajectory, (2, r, j, agent_code) agent",
        "agent_codes": AGENT_CODES,
        "config": cfg.to_dict(),
        "realizations": reals,
    }


def write_outputs(cfg, realizations, results):
    out = Path(cfg.out)
    try:
        (out / "runs").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {out / 'runs'}: {exc.strerror}") from None
    for res in results:
        rows = zip(res.t, res.regret, res.reward, res.rounds, res.recovery_failures)
        _write_csv(run_path(out, res), RUN_COLUMNS,
                   [(int(t), g, w, int(k), int(f)) for t, g, w, k, f in rows])
    _write_csv(out / "aggregate.csv", AGGREGATE_COLUMNS, aggregate(results, cfg.agents))
    meta_path = out / "metadata.json"
    try:
        meta_path.write_text(json.dumps(metadata(cfg, realizations), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {meta_path}: {exc.strerror}") from None
    return out


def run_experiment(cfg: ExperimentConfig):
    """Run the whole batch and write its files; returns ``(out_dir, results)``."""
    cfg.validate()
    realizations, results = run_all(cfg)
    logger.info("finished %d runs", len(results))
    return write_outputs(cfg, realizations, results), results
