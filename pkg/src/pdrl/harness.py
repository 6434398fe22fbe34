"""Seeded multi-trial experiment runner, CSV persistence, and solve statistics.

Trial i always uses seed base_seed + i for network init, environment resets,
and action sampling, and every algorithm sees the same seed sequence, so a
pair of runs differs only in the update rule. The CSV schema is one row per
episode:

    algorithm,trial,episode,reward,steps

with floats written in round-trip repr form (parse(serialize(x)) == x
bitwise), UTF-8, LF line endings. Trials are independent and may run on
worker threads; records are merged by trial index so parallelism never
changes the output bytes.
"""
from __future__ import annotations

import statistics
import warnings
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .agents import ALGORITHMS, AgentConfig, EpisodeResult, run_episode
from .envs import CartPoleEnv
from .nets import init_mlp

CSV_HEADER = "algorithm,trial,episode,reward,steps"
SOLVE_THRESHOLD = 195.0
SOLVE_WINDOW = 100


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for a batch of seeded trials (one or more algorithms)."""

    algorithms: tuple[str, ...] = ("primal_dual",)
    trials: int = 10
    max_episodes: int = 1000
    eta_v: float = 0.001
    eta_pi: float = 0.00001
    gamma: float = 0.99
    c: float = 1.0
    max_steps: int = 200
    hidden: tuple[int, ...] = (64, 64)
    base_seed: int = 0
    stop_on_solve: bool = False
    solve_threshold: float = SOLVE_THRESHOLD
    solve_window: int = SOLVE_WINDOW
    workers: int = 1
    include_start_term: bool = True

    def validate(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.max_episodes < 1:
            raise ValueError("max_episodes must be >= 1")
        if any(w < 1 for w in self.hidden):
            raise ValueError("hidden widths must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        for algo in self.algorithms:
            if algo not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {algo!r}")
        self.agent_config("primal_dual").validate()

    def agent_config(self, algorithm: str) -> AgentConfig:
        return AgentConfig(eta_v=self.eta_v, eta_pi=self.eta_pi, gamma=self.gamma,
                           c=self.c, max_steps=self.max_steps, algorithm=algorithm,
                           include_start_term=self.include_start_term)


@dataclass
class RunRecord:
    """All episodes of one (algorithm, trial) pair, indices contiguous from 1."""

    algorithm: str
    trial: int
    episodes: list[EpisodeResult] = field(default_factory=list)

    def rewards(self) -> np.ndarray:
        return np.array([e.cumulative_reward for e in self.episodes])


def run_trial(config: ExperimentConfig, algorithm: str, trial: int,
              env_factory=CartPoleEnv) -> RunRecord:
    """One seeded trial: init networks, run episodes, optionally stop at solve."""
    rng = np.random.default_rng(config.base_seed + trial)
    env = env_factory()
    agent_cfg = config.agent_config(algorithm)
    value_net = init_mlp((env.obs_dim, *config.hidden, 1), rng)
    policy_net = init_mlp((env.obs_dim, *config.hidden, env.n_actions), rng)
    record = RunRecord(algorithm=algorithm, trial=trial)
    window: deque[float] = deque(maxlen=config.solve_window)
    for episode in range(1, config.max_episodes + 1):
        result, _ = run_episode(value_net, policy_net, env, agent_cfg, rng,
                                episode_index=episode)
        record.episodes.append(result)
        window.append(result.cumulative_reward)
        if (config.stop_on_solve and len(window) == config.solve_window
                and sum(window) / len(window) >= config.solve_threshold):
            break
    return record


def run_experiment(config: ExperimentConfig, env_factory=CartPoleEnv,
                   out_path: str | None = None,
                   progress=None) -> list[RunRecord]:
    """Run trials for every configured algorithm.

    A failing trial is reported with its index and the remaining trials
    proceed; its partial record is kept. With out_path set, records are
    appended to the CSV as each trial completes, in deterministic
    (algorithm, trial) order regardless of worker count.
    """
    config.validate()
    jobs = [(algo, trial) for algo in config.algorithms
            for trial in range(config.trials)]

    def job(algo_trial):
        algo, trial = algo_trial
        try:
            return run_trial(config, algo, trial, env_factory=env_factory)
        except Exception as exc:  # record and continue with other trials
            warnings.warn(f"trial {trial} ({algo}) failed: {exc}", RuntimeWarning)
            return RunRecord(algorithm=algo, trial=trial)

    records = []
    sink = open(out_path, "w", encoding="utf-8", newline="\n") if out_path else None
    try:
        if sink:
            sink.write(CSV_HEADER + "\n")
        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                futures = [pool.submit(job, jt) for jt in jobs]
                for fut in futures:  # submission order keeps output deterministic
                    record = fut.result()
                    records.append(record)
                    if sink:
                        _write_rows(sink, record)
                        sink.flush()
                    if progress:
                        progress(record)
        else:
            for jt in jobs:
                record = job(jt)
                records.append(record)
                if sink:
                    _write_rows(sink, record)
                    sink.flush()
                if progress:
                    progress(record)
    finally:
        if sink:
            sink.close()
    return records


# -- CSV persistence -----------------------------------------------------------

def _write_rows(fh, record: RunRecord) -> None:
    for ep in record.episodes:
        fh.write(f"{record.algorithm},{record.trial},{ep.episode_index},"
                 f"{ep.cumulative_reward!r},{ep.steps}\n")


def write_records(records: list[RunRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for record in records:
            _write_rows(fh, record)


def read_records(path: str) -> list[RunRecord]:
    """Parse the episode CSV back into RunRecords (exact round trip)."""
    by_key: dict[tuple[str, int], RunRecord] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 fields, got {len(parts)}")
            algo, trial, episode, reward, steps = parts
            key = (algo, int(trial))
            record = by_key.setdefault(key, RunRecord(algorithm=algo, trial=int(trial)))
            record.episodes.append(EpisodeResult(int(episode), float(reward), int(steps)))
    return list(by_key.values())


# -- statistics ----------------------------------------------------------------

def detect_solved(record: RunRecord, threshold: float = SOLVE_THRESHOLD,
                  window: int = SOLVE_WINDOW) -> int | None:
    """First episode index whose trailing `window` episodes average >= threshold.

    Indices are 1-based; None if the record never satisfies the criterion.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    rewards = record.rewards()
    if rewards.size < window:
        return None
    sums = np.cumsum(rewards)
    windowed = sums[window - 1:].copy()
    windowed[1:] -= sums[:-window]
    hits = np.nonzero(windowed / window >= threshold)[0]
    return int(hits[0]) + window if hits.size else None


def aggregate_curves(records: list[RunRecord]) -> tuple[np.ndarray, np.ndarray]:
    """Per-episode (mean, 0.5 * sample std) across trials.

    Sample std uses the n-1 denominator; a single trial yields a zero band.
    Ragged records are truncated to the shortest length with a warning.
    """
    if not records:
        raise ValueError("need at least one record")
    lengths = [len(r.episodes) for r in records]
    n_eps = min(lengths)
    if n_eps == 0:
        raise ValueError("a record has no episodes")
    if len(set(lengths)) > 1:
        warnings.warn(f"ragged trials truncated to {n_eps} episodes", RuntimeWarning)
    data = np.stack([r.rewards()[:n_eps] for r in records])
    data = np.sort(data, axis=0)  # canonical order: trial permutation cannot
    # perturb the floating-point summation
    mean = data.mean(axis=0)
    if data.shape[0] > 1:
        half_std = 0.5 * data.std(axis=0, ddof=1)
    else:
        half_std = np.zeros(n_eps)
    return mean, half_std


def write_aggregates(records: list[RunRecord], path: str) -> None:
    """Per-algorithm aggregate CSV: algorithm,episode,mean,half_std."""
    algos = sorted({r.algorithm for r in records})
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("algorithm,episode,mean,half_std\n")
        for algo in algos:
            group = [r for r in records if r.algorithm == algo]
            mean, half_std = aggregate_curves(group)
            for i, (m, h) in enumerate(zip(mean, half_std), start=1):
                fh.write(f"{algo},{i},{float(m)!r},{float(h)!r}\n")


def solve_episodes(records: list[RunRecord], threshold: float = SOLVE_THRESHOLD,
                   window: int = SOLVE_WINDOW) -> list[int]:
    """Solve episode per trial; an unsolved trial is censored at its length."""
    out = []
    for record in records:
        solved = detect_solved(record, threshold, window)
        out.append(solved if solved is not None else len(record.episodes))
    return out


def compare_report(pd_records: list[RunRecord], ac_records: list[RunRecord],
                   threshold: float = SOLVE_THRESHOLD,
                   window: int = SOLVE_WINDOW) -> tuple[str, str]:
    """Summary of solve statistics for the two algorithms.

    Returns (text, csv). Unsolved trials are censored at their episode count;
    the report states rates and medians without any significance claim.
    """
    if not pd_records or not ac_records:
        raise ValueError("both record lists must be non-empty")
    rows = []
    stats = {}
    for name, records in (("primal_dual", pd_records), ("actor_critic", ac_records)):
        eps = solve_episodes(records, threshold, window)
        solved = [detect_solved(r, threshold, window) is not None for r in records]
        stats[name] = {
            "trials": len(records),
            "solve_rate": sum(solved) / len(records),
            "median_solve": statistics.median(eps),
            "mean_solve": statistics.mean(eps),
        }
        s = stats[name]
        rows.append(f"{name},{s['trials']},{s['solve_rate']!r},"
                    f"{float(s['median_solve'])!r},{float(s['mean_solve'])!r}")
    diff = stats["primal_dual"]["median_solve"] - stats["actor_critic"]["median_solve"]
    lines = [
        f"solve criterion: mean reward >= {threshold} over {window} consecutive episodes",
        "(unsolved trials censored at their episode count)",
    ]
    for name in ("primal_dual", "actor_critic"):
        s = stats[name]
        lines.append(f"{name}: {s['trials']} trials, solve rate {s['solve_rate']:.2f}, "
                     f"median solve episode {s['median_solve']}, "
                     f"mean {s['mean_solve']:.1f}")
    lines.append(f"median solve episode difference (primal_dual - actor_critic): {diff}")
    csv_text = "algorithm,trials,solve_rate,median_solve_episode,mean_solve_episode\n"
    csv_text += "\n".join(rows) + "\n"
    return "\n".join(lines), csv_text
