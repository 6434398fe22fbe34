"""Command-line entry point.

Subcommands:

    solve-tabular  exact LP-duality solve of an instance file (V*, greedy
                   policy, occupancy measure, duality diagnostics)
    pd-tabular     run the tabular primal-dual iteration, emit duality-gap CSV
    train          seeded multi-trial training runs on cart-pole, episode CSV
    compare        solve-statistics report from two episode CSVs
    gradcheck      finite-difference verification of the network gradients

Exit status is 0 on success and 2 on configuration errors.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import duality, harness, primal_dual
from .mdp import evaluate_policy_return, load_mdp, validate
from .nets import gradient_check_suite

ALGO_NAMES = {"pd": "primal_dual", "ac": "actor_critic"}


def _fmt_vector(x) -> str:
    return "[" + ", ".join(f"{v:.6f}" for v in x) + "]"


def cmd_solve_tabular(args) -> int:
    mdp = load_mdp(args.instance)
    problems = validate(mdp)
    if problems:
        print("invalid instance:", file=sys.stderr)
        for p in problems:
            print(f"  {p}", file=sys.stderr)
        return 2
    v_star, iters = duality.value_iteration(mdp, tol=args.tol)
    policy = duality.greedy_policy(mdp, v_star)
    mu = duality.occupancy_measure(mdp, policy)
    gap = abs(evaluate_policy_return(mdp, policy) - float(mdp.q @ v_star.v))
    slack = duality.complementary_slackness_residual(mdp, v_star, mu)
    lagrangian = duality.lagrangian_value(mdp, v_star, mu, c=0.0)
    print(f"instance: {args.instance} "
          f"(S={mdp.n_states}, A={mdp.n_actions}, gamma={mdp.gamma})")
    print(f"value iteration: {iters} sweeps to tol={args.tol}")
    print(f"V* = {_fmt_vector(v_star.v)}")
    print(f"greedy actions = {[int(a) for a in np.argmax(policy.probs, axis=1)]}")
    print("occupancy measure mu*(s,a):")
    for s in range(mdp.n_states):
        print(f"  s={s}: {_fmt_vector(mu.mu[s])}")
    print(f"(1-gamma) q.V*              = {(1 - mdp.gamma) * float(mdp.q @ v_star.v):.12f}")
    print(f"Lagrangian L(V*, mu*, c=0)  = {lagrangian:.12f}")
    print(f"|J(greedy) - q.V*|          = {gap:.3e}")
    print(f"slackness max|mu.A|         = {slack:.3e}")
    return 0


def cmd_pd_tabular(args) -> int:
    mdp = load_mdp(args.instance)
    rng = np.random.default_rng(args.seed) if args.seed is not None else None
    state = primal_dual.pd_init(mdp, rng)
    gap_every = args.gap_every or max(1, args.iters // 100)
    state, gaps = primal_dual.run_primal_dual(
        mdp, args.eta_v, args.eta_mu, args.c, args.iters,
        state=state, gap_every=gap_every)
    lines = ["step,duality_gap"]
    lines += [f"{step},{gap!r}" for step, gap in gaps]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    pi = duality.policy_from_dual(state.mu)
    print(f"final duality gap: {primal_dual.duality_gap(state, mdp)!r}", file=sys.stderr)
    print(f"final dual-policy actions: {[int(a) for a in np.argmax(pi.probs, axis=1)]}",
          file=sys.stderr)
    return 0


def cmd_train(args) -> int:
    if args.algo == "both":
        algorithms = ("primal_dual", "actor_critic")
    else:
        algorithms = (ALGO_NAMES[args.algo],)
    config = harness.ExperimentConfig(
        algorithms=algorithms,
        trials=args.trials,
        max_episodes=args.episodes,
        eta_v=args.eta_v,
        eta_pi=args.eta_pi,
        gamma=args.gamma,
        c=args.c,
        max_steps=args.max_steps,
        hidden=(args.hidden, args.hidden),
        base_seed=args.seed,
        stop_on_solve=args.stop_on_solve,
        workers=args.workers,
    )

    def progress(record):
        solved = harness.detect_solved(record)
        tail = f"solved at episode {solved}" if solved else "not solved"
        print(f"{record.algorithm} trial {record.trial}: "
              f"{len(record.episodes)} episodes, {tail}", file=sys.stderr)

    harness.run_experiment(config, out_path=args.out, progress=progress)
    print(f"wrote {args.out}", file=sys.stderr)
    return 0


def cmd_compare(args) -> int:
    pd_records = harness.read_records(args.pd)
    ac_records = harness.read_records(args.ac)
    text, csv_text = harness.compare_report(pd_records, ac_records)
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(csv_text)
    if args.aggregate_out:
        harness.write_aggregates(pd_records + ac_records, args.aggregate_out)
    return 0


def cmd_gradcheck(args) -> int:
    results = gradient_check_suite(n_nets=args.nets, seed=args.seed)
    worst = 0.0
    for rec in results:
        status = "ok" if rec["max_rel_err"] <= args.tol else "FAIL"
        print(f"net {rec['net']:2d} {rec['kind']:10s} sizes={rec['sizes']} "
              f"max_rel_err={rec['max_rel_err']:.3e} {status}")
        worst = max(worst, rec["max_rel_err"])
    print(f"worst relative error: {worst:.3e} (tolerance {args.tol})")
    return 0 if worst <= args.tol else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdrl")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-tabular", help="exact duality solve of an instance file")
    p.add_argument("instance")
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_solve_tabular)

    p = sub.add_parser("pd-tabular", help="tabular primal-dual iteration")
    p.add_argument("instance")
    p.add_argument("--eta-v", type=float, default=0.05)
    p.add_argument("--eta-mu", type=float, default=0.05)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--iters", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=None,
                   help="randomize the initial iterate (default: V=0, mu uniform)")
    p.add_argument("--gap-every", type=int, default=0,
                   help="steps between duality-gap samples (default iters/100)")
    p.add_argument("--out", default=None, help="gap CSV path (default stdout)")
    p.set_defaults(func=cmd_pd_tabular)

    p = sub.add_parser("train", help="seeded cart-pole training trials")
    p.add_argument("--algo", choices=["pd", "ac", "both"], default="both")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--episodes", type=int, default=1000)
    p.add_argument("--eta-v", type=float, default=0.001)
    p.add_argument("--eta-pi", type=float, default=0.00001)
    p.add_argument("--gamma", type=float, default=0.99)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--hidden", type=int, default=64,
                   help="width of each of the two hidden layers")
    p.add_argument("--max-steps", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--stop-on-solve", action="store_true",
                   help="end a trial once the solve criterion is met")
    p.add_argument("--out", default="runs.csv")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compare", help="solve-statistics report from two CSVs")
    p.add_argument("--pd", required=True, help="primal-dual episode CSV")
    p.add_argument("--ac", required=True, help="actor-critic episode CSV")
    p.add_argument("--out", default=None, help="summary CSV path")
    p.add_argument("--aggregate-out", default=None,
                   help="per-episode mean/half_std CSV path")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--nets", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-5)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
