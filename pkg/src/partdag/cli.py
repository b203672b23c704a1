"""Command-line front end.

Subcommands wire the pipeline stages together over files:

* ``synth``   writes a ground-truth model and a dataset drawn from it
* ``gadget``  runs candidate selection, preprocessing, the partition
  chains and DAG generation
* ``beeps``   samples causal-effect posteriors for a file of DAGs
* ``eval``    scores posterior-mean effects against a ground truth
* ``exact``   small-n reference: partition function and coverage

Exit codes: 0 on success, 2 for unusable flag values, 1 for runtime
failures.  All commands are deterministic for a fixed ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .dataio import BgeHyper, load_csv, save_csv, standardize
from .effects import ancestor_posterior, effect_summary, run_beeps
from .errors import DegreeOutOfRange, KTooLarge, PartdagError, SizeOutOfRange, TooLarge
from .exact import coverage_exact, posterior_by_dag_enumeration, posterior_by_partition_sum
from .graphs import Dag
from .pipeline import SELECTORS, build_node_tables, run_pipeline, select_candidates
from .synth import GroundTruth, generate_data, generate_model


WORKERS_ENV = "PARTDAG_WORKERS"


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonnegative_float(text):
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _fraction(text):
    value = float(text)
    if not 0.0 <= value < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1), got {value}")
    return value


def _id_list(text):
    return tuple(int(tok) for tok in text.split(",") if tok.strip() != "")


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _load_data(args):
    d = load_csv(args.data, header=not args.no_header)
    if getattr(args, "standardize", False):
        d = standardize(d)
    return d


def _hyper(args, n):
    base = BgeHyper.default(n)
    return BgeHyper(
        args.alpha_mu if args.alpha_mu is not None else base.alpha_mu,
        args.alpha_w if args.alpha_w is not None else base.alpha_w,
        base.nu,
        base.t_mat,
    )


def _add_data_flags(p):
    p.add_argument("--data", required=True, help="CSV file of observations")
    p.add_argument("--no-header", action="store_true", help="data file has no header row")
    p.add_argument("--standardize", action="store_true", help="scale columns to zero mean, unit variance")
    p.add_argument("--alpha-mu", type=float, default=None, help="prior equivalent sample size for the mean")
    p.add_argument("--alpha-w", type=float, default=None, help="prior degrees of freedom (default n+2)")


def cmd_synth(args) -> int:
    if args.avg_degree > args.n - 1:
        raise DegreeOutOfRange(f"avg-degree {args.avg_degree} exceeds n-1 = {args.n - 1}")
    rng = np.random.default_rng(args.seed)
    truth = generate_model(args.n, args.avg_degree, rng)
    data = generate_data(truth, args.N, rng)
    os.makedirs(args.out, exist_ok=True)
    save_csv(os.path.join(args.out, "data.csv"), data)
    with open(os.path.join(args.out, "truth.json"), "w") as fh:
        fh.write(truth.to_json())
    return 0


def cmd_gadget(args) -> int:
    data = _load_data(args)
    n = data.n_variables
    if not 1 <= args.k <= n - 1:
        raise KTooLarge(f"k={args.k} outside [1, {n - 1}]")
    os.makedirs(args.out, exist_ok=True)
    diag_path = os.path.join(args.out, "diagnostics.log")
    diag = open(diag_path, "w")
    try:
        result = run_pipeline(
            data,
            k=args.k,
            selector=args.selector,
            greedy_tail=args.greedy_tail,
            chains=args.chains,
            steps=args.steps,
            thinning=args.thinning,
            n_dags=args.dags,
            burn_in_fraction=args.burn_in,
            seed=args.seed,
            hyper=_hyper(args, n),
            workers=_workers(),
        )
        with open(os.path.join(args.out, "candidates.json"), "w") as fh:
            fh.write(result.assignment.to_json())
        for node, k, count in result.tau_diagnostics:
            diag.write(f"tau node={node} K={k} exceptions={count}\n")
        kept = len(result.partitions)
        first = len(result.mcmc.samples) - kept
        with open(os.path.join(args.out, "partitions.jsonl"), "w") as fh:
            for pos in range(first, len(result.mcmc.samples)):
                fh.write(
                    json.dumps(
                        {
                            "step": result.mcmc.sample_steps[pos],
                            "log_score": result.mcmc.sample_scores[pos],
                            "parts": result.mcmc.samples[pos].node_lists(),
                        }
                    )
                    + "\n"
                )
        with open(os.path.join(args.out, "dags.jsonl"), "w") as fh:
            for s, g in enumerate(result.dags):
                fh.write(
                    json.dumps(
                        {"sample_index": s, "parents": [sorted(p) for p in g.parent_sets]}
                    )
                    + "\n"
                )
        for idx, rate in enumerate(result.mcmc.acceptance_rates()):
            diag.write(f"chain {idx} acceptance {rate:.6f}\n")
        diag.write(f"swap acceptance {result.mcmc.swap_rate():.6f}\n")
        diag.write("status ok\n")
    except BaseException as exc:
        diag.write(f"status error {exc}\n")
        raise
    finally:
        diag.close()
    return 0


def _read_dags(path) -> list:
    dags = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                dags.append(Dag.from_parent_lists(json.loads(line)["parents"]))
    return dags


def cmd_beeps(args) -> int:
    data = _load_data(args)
    dags = _read_dags(args.dags)
    rng = np.random.default_rng(args.seed)
    mats = run_beeps(dags, data, _hyper(args, data.n_variables), rng, intervened=args.intervene)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "effects.jsonl"), "w") as fh:
        for s, m in enumerate(mats):
            fh.write(
                json.dumps({"sample_index": s, "effects": [float(v) for v in m.a_mat.ravel()]})
                + "\n"
            )
    summary = effect_summary(mats)
    anc = ancestor_posterior(dags)
    n = data.n_variables
    if args.pairs:
        pairs = [tuple(p) for p in args.pairs]
    else:
        pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    payload = {
        "n": n,
        "intervened": list(args.intervene),
        "pairs": [
            {
                "target": i,
                "source": j,
                "mean": float(summary["mean"][i, j]),
                "q05": float(summary["q_lo"][i, j]),
                "q95": float(summary["q_hi"][i, j]),
            }
            for i, j in pairs
        ],
        "mean_effects": summary["mean"].tolist(),
        "ancestor_posterior": anc.tolist(),
    }
    with open(os.path.join(args.out, "summary.json"), "w") as fh:
        json.dump(payload, fh)
    return 0


def cmd_eval(args) -> int:
    with open(args.summary) as fh:
        summary = json.load(fh)
    with open(args.truth) as fh:
        truth = GroundTruth.from_json(fh.read())
    n = truth.dag.n
    if summary["n"] != n:
        raise PartdagError(f"summary has n={summary['n']} but truth has n={n}")
    est = np.asarray(summary["mean_effects"])
    true = truth.true_effects.a_mat
    off = ~np.eye(n, dtype=bool)
    mse = float(np.mean((est[off] - true[off]) ** 2))
    zero_mse = float(np.mean(true[off] ** 2))

    anc_est = np.asarray(summary["ancestor_posterior"])
    anc_true = np.zeros((n, n), dtype=bool)
    for i, mask in enumerate(truth.dag.ancestor_masks()):
        for j in range(n):
            anc_true[i, j] = bool(mask >> j & 1)
    predicted = (anc_est > 0.5) & off
    if predicted.sum() == 0:
        precision = None
    else:
        precision = float((predicted & anc_true).sum() / predicted.sum())
    report = {
        "n": n,
        "mse": mse,
        "zero_baseline_mse": zero_mse,
        "ancestor_precision_at_0.5": precision,
    }
    print(json.dumps(report))
    return 0


def cmd_exact(args) -> int:
    data = _load_data(args)
    n = data.n_variables
    if not 1 <= args.k <= n - 1:
        raise KTooLarge(f"k={args.k} outside [1, {n - 1}]")
    h = _hyper(args, n)
    if args.method == "enumeration" and n > 5:
        raise TooLarge(f"DAG enumeration limited to n <= 5, got {n}")
    if n > 9:
        raise TooLarge(f"exact reference limited to n <= 9, got {n}")
    tables, taus = build_node_tables(data, h, _full_assignment(n), _workers())
    if args.method == "enumeration":
        exact = posterior_by_dag_enumeration(tables)
    else:
        exact = posterior_by_partition_sum(taus, tables)
    rng = np.random.default_rng(args.seed)
    assignment = select_candidates(data, args.k, args.selector, h, rng)
    coverage, mean_coverage = coverage_exact(assignment, exact, tables)
    print(
        json.dumps(
            {
                "n": n,
                "k": args.k,
                "selector": args.selector,
                "log_z": exact.log_z,
                "coverage": coverage,
                "mean_coverage": mean_coverage,
            }
        )
    )
    return 0


def _full_assignment(n):
    from .candidates import CandidateAssignment

    return CandidateAssignment(
        n - 1, tuple(tuple(j for j in range(n) if j != i) for i in range(n))
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="partdag",
        description="Bayesian DAG sampling and linear causal effect posteriors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a ground-truth model and data")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--avg-degree", type=_nonnegative_float, required=True)
    p.add_argument("--N", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("gadget", help="sample DAGs from the posterior")
    _add_data_flags(p)
    p.add_argument("--k", type=_positive_int, required=True, help="candidate parents per node")
    p.add_argument("--selector", choices=SELECTORS, default="greedy-lite")
    p.add_argument("--greedy-tail", type=int, default=6, help="batch size of the final greedy-lite step")
    p.add_argument("--chains", type=_positive_int, default=16)
    p.add_argument("--steps", type=_positive_int, default=100_000)
    p.add_argument("--thinning", type=_positive_int, default=None)
    p.add_argument("--burn-in", type=_fraction, default=0.5)
    p.add_argument("--dags", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_gadget)

    p = sub.add_parser("beeps", help="sample causal effects for stored DAGs")
    _add_data_flags(p)
    p.add_argument("--dags", required=True, help="dags.jsonl produced by the gadget command")
    p.add_argument("--intervene", type=_id_list, default=())
    p.add_argument("--pairs", type=lambda s: [_id_list(p) for p in s.split(";")], default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_beeps)

    p = sub.add_parser("eval", help="score a summary against a ground truth")
    p.add_argument("--summary", required=True)
    p.add_argument("--truth", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("exact", help="exact reference quantities for small n")
    _add_data_flags(p)
    p.add_argument("--k", type=_positive_int, required=True)
    p.add_argument("--selector", choices=SELECTORS, default="greedy")
    p.add_argument("--method", choices=("partition", "enumeration"), default="partition")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_exact)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (KTooLarge, SizeOutOfRange, DegreeOutOfRange) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (PartdagError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
