"""Property suites behind ``rhmb selftest``: LP exactness, policy exactness,
state recovery and confidence coverage.

Each check returns a :class:`Check`; :func:`run_selftest` collects them.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ._kernels import confidence_width
from .agents.hucrl import compute_policy, optimistic_vertex_values
from .agents.optimism import optimistic_batch
from .env import EnvironmentSpec, HiddenMarkovBanditEnv
from .geometry import Hypercube, VertexPolytope
from .inference import ConfidenceParams, CountTables, conf_theta_all, est_theta, est_transition
from .reference import brute_force_optimistic, brute_force_policy_values
from .simulation import simulate
from .validation import TIE_TOL


@dataclass
class Check:
    name: str
    ok: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}: {self.detail} ({self.seconds:.1f}s)"


@dataclass
class Report:
    checks: list = field(default_factory=list)

    @property
    def ok(self):
        return all(c.ok for c in self.checks)

    @property
    def n_failed(self):
        return sum(not c.ok for c in self.checks)

    def lines(self):
        return [c.line() for c in self.checks]


def _timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    check = fn(*args, **kwargs)
    check.seconds = time.perf_counter() - t0
    return check


# ---------------------------------------------------------------------------
# optimistic LP


def random_box_instance(rng, max_size=5):
    n = int(rng.integers(1, max_size + 1))
    center = rng.dirichlet(np.ones(n))
    if rng.random() < 0.2:
        # sparse centre: some entries exactly zero
        center[rng.random(n) < 0.4] = 0.0
        if center.sum() == 0:
            center[0] = 1.0
        center /= center.sum()
    half_width = float(rng.choice([0.0, 1.0, rng.random(), rng.random() * 0.1]))
    if rng.random() < 0.3:
        values = rng.integers(-3, 4, size=n).astype(float)  # ties
    else:
        values = rng.normal(size=n) * 10
    return center, half_width, values


def check_lp(n_instances=10_000, seed=0, tol=1e-10):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        center, hw, values = random_box_instance(rng)
        p, value = optimistic_batch(center, hw, values)
        _, ref = brute_force_optimistic(center, hw, values)
        feasible = (abs(p.sum() - 1) < 1e-12 and np.all(p >= -1e-15)
                    and np.all(np.abs(p - center) <= hw + 1e-12))
        worst = max(worst, abs(value - ref) if feasible else np.inf)
    return Check("optimistic LP vs corner enumeration", worst <= tol,
                 f"{n_instances} instances, max |value diff| = {worst:.2e} (tol {tol:g})")


# ---------------------------------------------------------------------------
# round policy


def random_policy_instance(rng, max_states=3, max_arms=3, max_thetas=3, max_vertices=8):
    S = int(rng.integers(1, max_states + 1))
    B = int(rng.integers(1, max_arms + 1))
    N = int(rng.integers(1, 4))
    if rng.random() < 0.5 and 2 ** N <= max_vertices:
        actions = Hypercube.unit(N)
    else:
        k = int(rng.integers(N + 1, max_vertices + 1)) if N + 1 <= max_vertices else N + 1
        pts = np.unique(rng.integers(-3, 4, size=(k, N)).astype(float), axis=0)
        try:
            actions = VertexPolytope(pts[_extreme(pts)])
        except Exception:
            actions = Hypercube.unit(N)
    thetas, probs = [], []
    for _ in range(B):
        used, row, prow = set(), [], []
        for _ in range(S):
            k = int(rng.integers(1, max_thetas + 1))
            while True:
                th = rng.integers(-5, 6, size=(k, N))
                keys = {tuple(v) for v in th}
                if len(keys) == k and not keys & used:
                    break
            used |= keys
            row.append(th.astype(float))
            prow.append(rng.dirichlet(np.ones(k)))
        thetas.append(row)
        probs.append(prow)
    P = 0.8 * rng.dirichlet(np.ones(S), size=S) + 0.2 / S
    spec = EnvironmentSpec(P, thetas, probs, actions)
    counts = CountTables(spec.knowledge().theta_sizes())
    # random but consistent counts
    s = 0
    for _ in range(int(rng.integers(0, 60))):
        b = int(rng.integers(B))
        s_next = int(rng.choice(S, p=P[s]))
        counts.record_transition(s, s_next, b, int(rng.integers(len(thetas[b][s_next]))))
        s = s_next
    counts.t += int(rng.integers(0, 3))
    return spec, counts


def _extreme(pts):
    from scipy.spatial import ConvexHull, QhullError

    try:
        return np.sort(ConvexHull(pts).vertices)
    except (QhullError, ValueError):
        # flat point set: keep the lexicographic extremes of a line
        order = np.lexsort(pts.T[::-1])
        return np.array([order[0], order[-1]])


def check_policy(n_instances=200, seed=0, alpha=3.1):
    rng = np.random.default_rng(seed)
    params = ConfidenceParams(alpha)
    mismatches = 0
    for _ in range(n_instances):
        spec, counts = random_policy_instance(rng)
        kn = spec.knowledge()
        V = np.asarray(kn.actions.vertices, dtype=float)
        V = V[np.lexsort(V.T[::-1])]
        policy = compute_policy(counts, kn, params, V)
        fast = np.einsum("ij,bjv->ibv", est_transition(counts),
                         optimistic_vertex_values(counts, params, [[V @ th.T for th in row]
                                                                   for row in kn.thetas]))
        theta_hat = [[est_theta(counts, b, s) for s in range(spec.num_states)]
                     for b in range(spec.num_arms)]
        ref = brute_force_policy_values(est_transition(counts), theta_hat,
                                        conf_theta_all(counts, params), kn.thetas, V)
        for s in range(spec.num_states):
            ref_set = np.flatnonzero(ref[s].ravel() >= ref[s].max() - TIE_TOL)
            fast_set = np.flatnonzero(fast[s].ravel() >= fast[s].max() - TIE_TOL)
            chosen = policy.arms[s] * len(V) + policy.vertex_indices[s]
            if (not np.array_equal(ref_set, fast_set) or chosen != ref_set[0]
                    or abs(policy.values[s] - ref[s].max()) > 1e-9):
                mismatches += 1
    return Check("round policy vs exhaustive enumeration", mismatches == 0,
                 f"{n_instances} instances, {mismatches} mismatching states")


# ---------------------------------------------------------------------------
# state recovery


def check_recovery(presets=("1a", "2a"), runs=20, horizon=100_000, seed=0, learner="hucrl"):
    from .agents import LEARNERS
    from .harness.presets import load_preset
    from .harness.seeds import agent_seed, realization_seed, trajectory_seed

    failures = diagnostics = steps = 0
    for name in presets:
        recipe = load_preset(name)
        for r in range(runs):
            spec = recipe.sample(np.random.default_rng(realization_seed(seed, r)))
            agent = LEARNERS[learner](random_state=agent_seed(seed, r, 0, learner))
            agent.reset(spec.knowledge())
            log = simulate(agent, HiddenMarkovBanditEnv(spec, trajectory_seed(seed, r, 0)), horizon)
            failures += int(log.recovery_failures.sum())
            diagnostics += log.n_diagnostics
            steps += horizon
    return Check(f"state recovery on {','.join(presets)}", failures == 0 and diagnostics == 0,
                 f"{steps} steps, {failures} wrong states, {diagnostics} diagnostic events")


# ---------------------------------------------------------------------------
# confidence coverage


@dataclass
class Coverage:
    freq_s: float          # largest per-entry exceedance frequency of the transition estimate
    bound_s: float
    freq_theta: float      # largest per-entry exceedance frequency of the θ estimates
    bound_theta: float
    trials: int

    def stderr(self, freq):
        return float(np.sqrt(freq * (1 - freq) / self.trials))

    @property
    def ok(self):
        return (self.freq_s <= self.bound_s + 3 * self.stderr(self.freq_s)
                and self.freq_theta <= self.bound_theta + 3 * self.stderr(self.freq_theta))


def confidence_coverage(transition, theta_probs, t=2000, trials=10_000, alpha=3.1, seed=0,
                        initial_state=0):
    """Exceedance frequencies of |P̂ - P| over the confidence widths after ``t - 1`` transitions.

    Trajectories run in lockstep. Each step the arm is drawn uniformly at
    random and θ from its distribution in the state reached. ``theta_probs[b][s]``
    are the θ distributions.
    """
    rng = np.random.default_rng(seed)
    P = np.asarray(transition, dtype=float)
    S = P.shape[0]
    B = len(theta_probs)
    K = max(len(q) for row in theta_probs for q in row)
    cdf_s = np.cumsum(P, axis=1)
    cdf_s[:, -1] = 1.0
    cdf_th = np.ones((B, S, K))
    sizes = np.zeros((B, S), dtype=np.int64)
    for b in range(B):
        for s in range(S):
            q = np.asarray(theta_probs[b][s], dtype=float)
            sizes[b, s] = q.size
            cdf_th[b, s, :q.size] = np.cumsum(q)
            cdf_th[b, s, q.size - 1:] = 1.0
    n_trans = np.zeros((trials, S, S), dtype=np.int64)
    n_theta = np.zeros((trials, B, S, K), dtype=np.int64)
    state = np.full(trials, initial_state, dtype=np.int64)
    rows = np.arange(trials)
    for _ in range(t - 1):
        nxt = (rng.random(trials)[:, None] >= cdf_s[state]).sum(axis=1)
        arm = rng.integers(B, size=trials)
        k = (rng.random(trials)[:, None] >= cdf_th[arm, nxt]).sum(axis=1)
        n_trans[rows, state, nxt] += 1
        n_theta[rows, arm, nxt, k] += 1
        state = nxt

    n_state = n_trans.sum(axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        P_hat = np.where(n_state[..., None] > 0, n_trans / n_state[..., None], 1.0 / S)
    width_s = np.vectorize(lambda n: confidence_width(float(t), alpha, float(S * S), int(n)))(n_state)
    exceed_s = np.abs(P_hat - P) > width_s[..., None]
    freq_s = float(exceed_s.mean(axis=0).max())

    n_bs = n_theta.sum(axis=3)
    freq_theta = 0.0
    bound_theta = np.inf
    for b in range(B):
        for s in range(S):
            k = sizes[b, s]
            q = np.asarray(theta_probs[b][s], dtype=float)
            n = n_bs[:, b, s]
            with np.errstate(invalid="ignore", divide="ignore"):
                q_hat = np.where(n[:, None] > 0, n_theta[:, b, s, :k] / n[:, None], 1.0 / k)
            card = float(k * B * S)
            width = np.vectorize(lambda m: confidence_width(float(t), alpha, card, int(m)))(n)
            freq_theta = max(freq_theta, float((np.abs(q_hat - q) > width[:, None]).mean(axis=0).max()))
            bound_theta = min(bound_theta, (t - 1.0) ** (-alpha) / (2 * k * B * S))
    bound_s = (t - 1.0) ** (-alpha + 1) / (2 * S * S)
    return Coverage(freq_s, bound_s, freq_theta, bound_theta, trials)


def check_coverage(t=2000, trials=10_000, seed=0):
    from .harness.presets import load_preset

    recipe = load_preset("1a")
    cov = confidence_coverage(recipe.transition, recipe.theta_probs, t, trials, seed=seed)
    return Check("confidence coverage on the 1a chain", cov.ok,
                 f"t={t}, {trials} trials: transition {cov.freq_s:.2e} (bound {cov.bound_s:.2e}), "
                 f"θ {cov.freq_theta:.2e} (bound {cov.bound_theta:.2e})")


# ---------------------------------------------------------------------------


def run_selftest(quick=False, seed=0) -> Report:
    report = Report()
    if quick:
        report.checks.append(_timed(check_lp, 1000, seed))
        report.checks.append(_timed(check_policy, 30, seed))
        report.checks.append(_timed(check_recovery, ("1a",), 2, 10_000, seed))
        report.checks.append(_timed(check_coverage, 500, 1000, seed))
    else:
        report.checks.append(_timed(check_lp, 10_000, seed))
        report.checks.append(_timed(check_policy, 200, seed))
        report.checks.append(_timed(check_recovery, ("1a", "2a"), 20, 100_000, seed))
        report.checks.append(_timed(check_coverage, 2000, 10_000, seed))
    return report
