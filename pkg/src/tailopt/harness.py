"""Experiment runner: configs, trajectories, persistence, sweeps.

A run is described by a flat ``RunConfig`` (built from an INI-style config
file and/or CLI flags), expanded into problem + noise + space + schedule,
and executed seed by seed.  Every run directory is self-describing: the
resolved config is echoed verbatim alongside the trajectory CSV, the
burn-in certificate, and a summary.

Trajectory CSV schema (floats serialized with 17 significant digits so
they round-trip exactly):

    t,f,grad_norm,m_norm,eps_hat,eps,clipped,eta

where f and grad_norm are taken at the pre-step iterate w_t, m_norm /
eps_hat at the post-update momentum m_t, eps is the clipped single-sample
error at the query point, and eta is the learning rate actually applied.
"""

from __future__ import annotations

import configparser
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from tailopt.analysis import fit_rate_exponent
from tailopt.optimizers import (BurnInCertificate, HyperParams,
                                burn_in_certificate, clipped_momentum_step,
                                extrapolated_step, init_state, rate_exponent,
                                recommend_output, schedule, warmup_lr_schedule)
from tailopt.problems import HeavyTailNoise, calibrate_grad_bound, make_problem
from tailopt.spaces import NormedSpace

__all__ = [
    "ConfigError",
    "RunConfig",
    "Trajectory",
    "build_experiment",
    "run_trajectory",
    "run",
    "rate_sweep",
    "burn_in_compare",
    "check_trajectory_invariants",
    "descent_check",
    "eps_hat_check",
    "last_iterate_check",
    "write_trajectory_csv",
    "CSV_HEADER",
]

CSV_HEADER = "t,f,grad_norm,m_norm,eps_hat,eps,clipped,eta"

THREADS_ENV = "TAILOPT_THREADS"


class ConfigError(ValueError):
    """A run configuration field failed validation."""


@dataclass
class RunConfig:
    algorithm: str = "nsgd"          # nsgd | nigt
    problem: str = "cosine_sum"      # cosine_sum | quadratic
    dim: int = 10
    amplitude: float = 1.0
    eig_min: float = 1.0
    eig_max: float = 2.0
    start_value: float = 2.0
    q: float = 2.0                   # primal norm exponent, in (1, 2]
    p_moment: float = 1.5
    tail_index: float = 1.8
    noise_scale: float = 1.0
    T: int = 10_000
    b: float = 1.0                   # alpha schedule constant
    s: float = 1.0                   # learning-rate schedule constant
    delta: float = 0.1
    seed: int = 0
    seeds: int = 1
    warmup: str = "none"             # none | hold
    warmup_steps: int | None = None  # override; default = certificate burn-in
    order: str = ""                  # "" derives from algorithm
    calib_samples: int = 20_000
    safety: float = 1.5
    out: str = ""

    _SECTIONS = {
        "run": ["algorithm", "q", "T", "b", "s", "delta", "seed", "seeds",
                "warmup", "warmup_steps", "order", "out"],
        "problem": ["problem", "dim", "amplitude", "eig_min", "eig_max",
                    "start_value"],
        "noise": ["p_moment", "tail_index", "noise_scale", "calib_samples",
                  "safety"],
    }

    def validate(self) -> "RunConfig":
        if self.algorithm not in ("nsgd", "nigt"):
            raise ConfigError(f"algorithm: expected nsgd or nigt, got {self.algorithm!r}")
        if self.problem not in ("cosine_sum", "quadratic"):
            raise ConfigError(f"problem: expected cosine_sum or quadratic, got {self.problem!r}")
        if self.dim < 1:
            raise ConfigError(f"dim: must be positive, got {self.dim}")
        if not (1.0 < self.q <= 2.0):
            raise ConfigError(f"q: primal exponent must lie in (1, 2], got {self.q}")
        if not (1.0 < self.p_moment <= 2.0):
            raise ConfigError(f"p_moment: must lie in (1, 2], got {self.p_moment}")
        if self.tail_index <= self.p_moment:
            raise ConfigError(
                f"tail_index: must exceed p_moment={self.p_moment}, got {self.tail_index}")
        if self.noise_scale < 0:
            raise ConfigError(f"noise_scale: must be nonnegative, got {self.noise_scale}")
        if self.T < 1:
            raise ConfigError(f"T: must be at least 1, got {self.T}")
        if self.b <= 0 or self.s <= 0:
            raise ConfigError(f"b, s: schedule constants must be positive, got {self.b}, {self.s}")
        if not (0.0 < self.delta < 1.0):
            raise ConfigError(f"delta: must lie in (0, 1), got {self.delta}")
        if self.seeds < 1:
            raise ConfigError(f"seeds: must be at least 1, got {self.seeds}")
        if self.warmup not in ("none", "hold"):
            raise ConfigError(f"warmup: expected none or hold, got {self.warmup!r}")
        if self.warmup_steps is not None and self.warmup_steps < 0:
            raise ConfigError(f"warmup_steps: must be nonnegative, got {self.warmup_steps}")
        if self.order not in ("", "first", "second"):
            raise ConfigError(f"order: expected first or second, got {self.order!r}")
        if self.calib_samples < 10_000:
            raise ConfigError(f"calib_samples: need at least 10000, got {self.calib_samples}")
        if self.safety < 1.0:
            raise ConfigError(f"safety: must be at least 1, got {self.safety}")
        return self

    @property
    def schedule_order(self) -> str:
        if self.order:
            return self.order
        return "first" if self.algorithm == "nsgd" else "second"

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        parser = configparser.ConfigParser()
        parser.optionxform = str  # keep key case (T vs t)
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
        cfg = cls()
        types = {f.name: f.type for f in fields(cls)}
        for section, names in cls._SECTIONS.items():
            if not parser.has_section(section):
                continue
            for key, raw in parser.items(section):
                if key not in names:
                    raise ConfigError(f"unknown key {key!r} in section [{section}]")
                setattr(cfg, key, _parse_field(key, raw, types[key]))
        return cfg

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        parser.optionxform = str
        for section, names in self._SECTIONS.items():
            parser[section] = {}
            for name in names:
                value = getattr(self, name)
                parser[section][name] = "" if value is None else str(value)
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()


def _parse_field(key: str, raw: str, typ) -> object:
    raw = raw.strip()
    if raw == "":
        return None if key == "warmup_steps" else ""
    try:
        if typ in (int, "int"):
            return int(raw)
        if typ in (float, "float"):
            return float(raw)
        if "int" in str(typ) and "None" in str(typ):
            return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from exc
    return raw


@dataclass
class Experiment:
    """A resolved configuration: problem, noise, space, schedule, certificate."""

    config: RunConfig
    problem: object
    noise: HeavyTailNoise
    space: NormedSpace
    hp: HyperParams
    cert: BurnInCertificate
    lr_seq: np.ndarray


def build_experiment(config: RunConfig, horizon: int | None = None) -> Experiment:
    """Expand a config into runnable pieces; calibrates the moment bound.

    Calibration uses its own substream of the base seed so that per-seed
    trajectory streams stay untouched, and happens once per experiment so
    every seed shares the same schedule.
    """
    config.validate()
    T = config.T if horizon is None else horizon
    problem = make_problem(config.problem, config.dim, amplitude=config.amplitude,
                           eig_min=config.eig_min, eig_max=config.eig_max,
                           start_value=config.start_value)
    space = NormedSpace(dim=config.dim, primal_exponent=config.q)
    noise = HeavyTailNoise(p_moment=config.p_moment, tail_index=config.tail_index,
                           scale=config.noise_scale)
    calib_rng = np.random.default_rng([config.seed, 0x0CA11B])
    calibrate_grad_bound(problem, noise, space, calib_rng,
                         n_samples=config.calib_samples, safety=config.safety)
    try:
        hp = schedule(T, config.p_moment, noise.grad_bound, config.delta,
                      order=config.schedule_order, alpha_scale=config.b,
                      lr_scale=config.s)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cert = burn_in_certificate(hp, problem.lipschitz, problem.hessian_lipschitz,
                               space.smooth_constant)
    if config.warmup == "hold" and config.warmup_steps is not None:
        hold = replace(cert, burn_in=min(config.warmup_steps, T))
        lr_seq = warmup_lr_schedule(hp, hold, "hold")
    else:
        lr_seq = warmup_lr_schedule(hp, cert, config.warmup)
    return Experiment(config=config, problem=problem, noise=noise, space=space,
                      hp=hp, cert=cert, lr_seq=lr_seq)


@dataclass
class Trajectory:
    seed: int
    algorithm: str
    hp: HyperParams
    cert: BurnInCertificate
    steps: np.ndarray
    objective: np.ndarray
    grad_norm: np.ndarray
    m_norm: np.ndarray
    eps_hat: np.ndarray
    eps: np.ndarray
    clipped: np.ndarray
    lr: np.ndarray
    clip_norm: np.ndarray = field(repr=False)
    sample_norm: np.ndarray = field(repr=False)
    step_len: np.ndarray = field(repr=False)
    w_norm: np.ndarray = field(repr=False)
    final_w: np.ndarray = field(repr=False)
    final_f: float = 0.0
    selected_step: int = 0

    @property
    def horizon(self) -> int:
        return self.steps.size

    def summary(self) -> dict:
        sel = self.selected_step
        return {
            "seed": self.seed,
            "algorithm": self.algorithm,
            "T": self.horizon,
            "final_f": self.final_f,
            "last_recorded_f": float(self.objective[-1]),
            "avg_grad_norm": float(self.grad_norm.mean()),
            "min_grad_norm": float(self.grad_norm.min()),
            "selected_step": sel,
            "selected_m_norm": float(self.m_norm[sel - 1]),
            "selected_grad_norm": float(self.grad_norm[sel - 1]),
            "clip_fraction": float(self.clipped.mean()),
        }


def run_trajectory(exp: Experiment, seed: int) -> Trajectory:
    """Execute one seeded trajectory of the configured algorithm."""
    problem, noise, space, hp = exp.problem, exp.noise, exp.space, exp.hp
    T = hp.horizon
    rng = np.random.default_rng(seed)
    state = init_state(problem.start)
    objective = np.empty(T)
    grad_norm = np.empty(T)
    m_norm = np.empty(T)
    eps_hat = np.empty(T)
    eps = np.empty(T)
    clipped = np.zeros(T, dtype=np.uint8)
    clip_norm = np.empty(T)
    sample_norm = np.empty(T)
    step_len = np.empty(T)
    w_norm = np.empty(T)
    nigt = exp.config.algorithm == "nigt"
    oracle = lambda x: noise.sample(problem, space, x, rng)
    for t in range(T):
        w_t = state.w
        grad_t = problem.gradient(w_t)
        objective[t] = problem.value(w_t)
        grad_norm[t] = space.dual_norm(grad_t)
        lr_t = exp.lr_seq[t]
        if nigt:
            state, info = extrapolated_step(state, oracle, hp, space, lr=lr_t)
            query_grad = problem.gradient(info.query)
        else:
            g = noise.sample(problem, space, w_t, rng, grad=grad_t)
            state, info = clipped_momentum_step(state, g, hp, space, lr=lr_t)
            query_grad = grad_t
        m_norm[t] = space.dual_norm(state.m)
        eps_hat[t] = space.dual_norm(state.m - grad_t)
        eps[t] = space.dual_norm(info.g_clip - query_grad)
        clipped[t] = info.clipped
        clip_norm[t] = info.clip_norm
        sample_norm[t] = info.sample_norm
        step_len[t] = space.primal_norm(state.w - state.w_prev)
        w_norm[t] = space.primal_norm(w_t)
    traj = Trajectory(seed=seed, algorithm=exp.config.algorithm, hp=hp,
                      cert=exp.cert, steps=np.arange(1, T + 1),
                      objective=objective, grad_norm=grad_norm, m_norm=m_norm,
                      eps_hat=eps_hat, eps=eps, clipped=clipped,
                      lr=exp.lr_seq.copy(), clip_norm=clip_norm,
                      sample_norm=sample_norm, step_len=step_len, w_norm=w_norm,
                      final_w=state.w.copy(), final_f=float(problem.value(state.w)))
    traj.selected_step = recommend_output(m_norm, exp.cert.burn_in)
    for arr in (traj.steps, traj.objective, traj.grad_norm, traj.m_norm,
                traj.eps_hat, traj.eps, traj.clipped, traj.lr, traj.clip_norm,
                traj.sample_norm, traj.step_len, traj.w_norm):
        arr.flags.writeable = False
    return traj


# ---------------------------------------------------------------------------
# trajectory-level invariants


def check_trajectory_invariants(traj: Trajectory, hp: HyperParams | None = None,
                                rel_tol: float = 1e-12) -> dict[str, bool]:
    """Structural invariants of a recorded trajectory.

    - step_length: whenever m_t is nonzero, ||w_{t+1} - w_t|| equals the
      applied learning rate to relative tolerance.  Storing w_{t+1} rounds
      each component by eps*|w_i|, so the realized difference carries an
      irreducible absolute error of order eps*||w_t|| on top of the
      relative one; the tolerance accounts for both.
    - momentum_ball: ||m_t|| <= tau (convex combination of clipped samples).
    - tau_consistency: clipped steps sit exactly at the threshold and
      unclipped steps below it, against the *intended* hyperparameters
      (pass the intended hp to detect a run that clipped elsewhere).
    """
    hp = hp or traj.hp
    moving = traj.m_norm > 0.0
    float_floor = 8.0 * np.finfo(float).eps * (traj.w_norm[moving] + traj.lr[moving])
    ok_len = np.all(np.abs(traj.step_len[moving] - traj.lr[moving])
                    <= rel_tol * np.maximum(traj.lr[moving], 1e-300) + float_floor)
    ok_ball = np.all(traj.m_norm <= hp.tau * (1.0 + rel_tol))
    was_clipped = traj.clipped.astype(bool)
    ok_tau = (np.all(np.abs(traj.clip_norm[was_clipped] - hp.tau) <= 1e-9 * hp.tau)
              and np.all(traj.clip_norm[~was_clipped] <= hp.tau * (1.0 + rel_tol)))
    return {"step_length": bool(ok_len), "momentum_ball": bool(ok_ball),
            "tau_consistency": bool(ok_tau)}


def descent_check(traj: Trajectory, cert: BurnInCertificate | None = None,
                  tol: float = 1e-9) -> tuple[int, int]:
    """(qualifying steps, violations) of the certified-descent condition.

    A step t qualifies when t >= burn-in and ||m_t|| >= the momentum
    threshold; it violates when F(w_{t+1}) >= F(w_t) - (lr_t/2)||m_t|| + tol.
    """
    cert = cert or traj.cert
    T = traj.horizon
    f_next = np.empty(T)
    f_next[:-1] = traj.objective[1:]
    f_next[-1] = traj.final_f
    qualify = (traj.steps >= max(cert.burn_in, 1)) & \
              (traj.m_norm >= cert.momentum_threshold)
    viol = f_next >= traj.objective - 0.5 * traj.lr * traj.m_norm + tol
    return int(np.sum(qualify)), int(np.sum(qualify & viol))


def eps_hat_check(traj: Trajectory, cert: BurnInCertificate | None = None) -> int:
    """Count of post-burn-in steps whose momentum error exceeds the bound."""
    cert = cert or traj.cert
    idx = traj.steps >= max(cert.burn_in, 1)
    return int(np.sum(traj.eps_hat[idx] > cert.momentum_error_bound))


def last_iterate_check(traj: Trajectory, cert: BurnInCertificate | None = None,
                       tol: float = 1e-9) -> bool:
    """Last recorded objective is no worse than at the last sub-threshold step."""
    cert = cert or traj.cert
    start = max(cert.burn_in, 1)
    idx = np.nonzero((traj.steps >= start) &
                     (traj.m_norm < cert.momentum_threshold))[0]
    t_hat = int(traj.steps[idx[-1]]) if idx.size else start
    return bool(traj.objective[-1] <= traj.objective[t_hat - 1] + tol)


def raw_descent_violations(traj: Trajectory, start_step: int, tol: float = 1e-9) -> int:
    """Count of steps t >= start_step where the objective failed to descend
    by (lr_t/2)||m_t||, regardless of the momentum threshold."""
    T = traj.horizon
    f_next = np.empty(T)
    f_next[:-1] = traj.objective[1:]
    f_next[-1] = traj.final_f
    idx = traj.steps >= max(start_step, 1)
    viol = f_next >= traj.objective - 0.5 * traj.lr * traj.m_norm + tol
    return int(np.sum(idx & viol))


# ---------------------------------------------------------------------------
# persistence


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(traj: Trajectory, path: str):
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for i in range(traj.horizon):
            fh.write(",".join([
                str(int(traj.steps[i])),
                _fmt(traj.objective[i]),
                _fmt(traj.grad_norm[i]),
                _fmt(traj.m_norm[i]),
                _fmt(traj.eps_hat[i]),
                _fmt(traj.eps[i]),
                str(int(traj.clipped[i])),
                _fmt(traj.lr[i]),
            ]) + "\n")


def write_key_values(path: str, entries: dict):
    with open(path, "w") as fh:
        for key, value in entries.items():
            if isinstance(value, float):
                fh.write(f"{key}={_fmt(value)}\n")
            else:
                fh.write(f"{key}={value}\n")


def certificate_entries(hp: HyperParams, cert: BurnInCertificate) -> dict:
    return {
        "order": cert.order,
        "T": hp.horizon,
        "p_moment": hp.p_moment,
        "grad_bound": hp.grad_bound,
        "alpha": hp.alpha,
        "beta": hp.beta,
        "lr": hp.lr,
        "tau": hp.tau,
        "delta": cert.delta,
        "log_factor": cert.log_factor,
        "concentration_factor": cert.concentration_factor,
        "error_scale": cert.error_scale,
        "burn_in": cert.burn_in,
        "momentum_error_bound": cert.momentum_error_bound,
        "momentum_threshold": cert.momentum_threshold,
    }


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _run_seeds(exp: Experiment, seeds: list[int]) -> list[Trajectory]:
    workers = _thread_count()
    if workers == 1 or len(seeds) == 1:
        return [run_trajectory(exp, s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda s: run_trajectory(exp, s), seeds))


def run(config: RunConfig, out_dir: str | None = None,
        plots: bool = False) -> list[Trajectory]:
    """Run the configured experiment over its seed batch, writing artifacts.

    Per-seed subdirectories receive trajectory.csv, certificate.txt and
    summary.txt; the resolved config is echoed once at the top level.
    Outputs are byte-stable for a fixed (config, seed).
    """
    exp = build_experiment(config)
    seeds = [config.seed + i for i in range(config.seeds)]
    trajectories = _run_seeds(exp, seeds)
    out = out_dir if out_dir is not None else (config.out or None)
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "config.txt"), "w") as fh:
            fh.write(config.to_ini())
        for traj in trajectories:
            sub = os.path.join(out, f"seed_{traj.seed:04d}")
            os.makedirs(sub, exist_ok=True)
            write_trajectory_csv(traj, os.path.join(sub, "trajectory.csv"))
            write_key_values(os.path.join(sub, "certificate.txt"),
                             certificate_entries(exp.hp, exp.cert))
            write_key_values(os.path.join(sub, "summary.txt"), traj.summary())
            if plots:
                from tailopt._svg import line_chart
                with open(os.path.join(sub, "objective.svg"), "w") as fh:
                    fh.write(line_chart([(traj.steps, traj.objective, "F(w_t)")],
                                        title="objective", x_label="t",
                                        y_label="F"))
                with open(os.path.join(sub, "grad_norm.svg"), "w") as fh:
                    fh.write(line_chart([(traj.steps, traj.grad_norm,
                                          "||grad F(w_t)||")],
                                        title="gradient norm", x_label="t",
                                        y_label="dual norm", log_y=True))
    return trajectories


# ---------------------------------------------------------------------------
# sweeps and comparisons


@dataclass
class RateSweepResult:
    horizons: np.ndarray
    avg_grad: np.ndarray     # seed-averaged mean_t ||grad F(w_t)||
    min_grad: np.ndarray     # seed-averaged min_t ||grad F(w_t)||
    slope: float
    stderr: float
    target: float            # scheduled decay exponent (negated slope target)

    def rows(self) -> list[dict]:
        return [{"T": int(T), "avg_grad_norm": float(a), "min_grad_norm": float(m)}
                for T, a, m in zip(self.horizons, self.avg_grad, self.min_grad)]


def rate_sweep(config: RunConfig, horizons, n_seeds: int | None = None) -> RateSweepResult:
    """Average-gradient-norm decay across horizons, with a log-log fit."""
    horizons = sorted(int(t) for t in horizons)
    if len(horizons) < 3:
        raise ConfigError("rate sweep needs at least three horizons")
    n_seeds = n_seeds or config.seeds
    avg_rows, min_rows = [], []
    for T in horizons:
        exp = build_experiment(config, horizon=T)
        trajs = _run_seeds(exp, [config.seed + i for i in range(n_seeds)])
        avg_rows.append(float(np.mean([t.grad_norm.mean() for t in trajs])))
        min_rows.append(float(np.mean([t.grad_norm.min() for t in trajs])))
    slope, stderr = fit_rate_exponent(horizons, avg_rows)
    target = rate_exponent(config.p_moment, config.schedule_order)
    return RateSweepResult(horizons=np.asarray(horizons, dtype=float),
                           avg_grad=np.asarray(avg_rows),
                           min_grad=np.asarray(min_rows),
                           slope=slope, stderr=stderr, target=-target)


@dataclass
class BurnInCompareResult:
    burn_in: int
    final_f: dict[str, np.ndarray]          # mode -> per-seed final objective
    min_grad: dict[str, np.ndarray]         # mode -> per-seed min grad norm
    post_burn_in_violations: dict[str, np.ndarray]

    def mode_summary(self, mode: str) -> dict:
        f = self.final_f[mode]
        g = self.min_grad[mode]
        v = self.post_burn_in_violations[mode]
        half = 1.96 / np.sqrt(f.size)
        return {
            "mode": mode,
            "seeds": int(f.size),
            "final_f_mean": float(f.mean()),
            "final_f_band": float(f.std(ddof=1) * half) if f.size > 1 else 0.0,
            "min_grad_mean": float(g.mean()),
            "min_grad_band": float(g.std(ddof=1) * half) if g.size > 1 else 0.0,
            "violations_mean": float(v.mean()),
        }


def burn_in_compare(config: RunConfig, n_seeds: int | None = None) -> BurnInCompareResult:
    """Paired comparison of warmup modes over a common seed batch.

    Both modes share noise streams seed for seed.  The violation counter
    is the raw post-burn-in count of steps that failed to descend by half
    the step-length-weighted momentum norm.
    """
    n_seeds = n_seeds or config.seeds
    seeds = [config.seed + i for i in range(n_seeds)]
    final_f, min_grad, violations = {}, {}, {}
    burn_in = 0
    for mode in ("none", "hold"):
        cfg = replace(config, warmup=mode)
        exp = build_experiment(cfg)
        burn_in = exp.cert.burn_in if cfg.warmup_steps is None else \
            min(cfg.warmup_steps, exp.hp.horizon)
        trajs = _run_seeds(exp, seeds)
        final_f[mode] = np.array([t.final_f for t in trajs])
        min_grad[mode] = np.array([t.grad_norm.min() for t in trajs])
        violations[mode] = np.array(
            [raw_descent_violations(t, burn_in + 1) for t in trajs])
    return BurnInCompareResult(burn_in=burn_in, final_f=final_f,
                               min_grad=min_grad,
                               post_burn_in_violations=violations)
