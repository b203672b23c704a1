"""End-to-end orchestration: candidates, tables, simulation, DAG draws."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .candidates import (
    CandidateAssignment,
    select_back_forth,
    select_greedy,
    select_greedy_lite,
    select_opt,
    select_top,
)
from .dataio import BgeHyper, DataMatrix
from .dagsampling import sample_dags
from .errors import KTooLarge
from .exact import posterior_by_partition_sum
from .mcmc import McmcConfig, McmcRun, run
from .scores import build_score_table
from .tau import build_tau

SELECTORS = ("top", "greedy", "greedy-lite", "back-forth", "opt")


@dataclass
class PipelineResult:
    assignment: CandidateAssignment
    tables: list
    taus: list
    mcmc: McmcRun
    partitions: list
    dags: list
    tau_diagnostics: list


def select_candidates(
    d: DataMatrix, k: int, selector: str, h: BgeHyper, rng, greedy_tail: int = 6
) -> CandidateAssignment:
    if selector == "top":
        return select_top(d, k, h)
    if selector == "greedy":
        return select_greedy(d, k, h)
    if selector == "greedy-lite":
        return select_greedy_lite(d, k, min(greedy_tail, k), h)
    if selector == "back-forth":
        return select_back_forth(d, k, rng, h)
    if selector == "opt":
        n = d.n_variables
        full = [
            build_score_table(i, tuple(j for j in range(n) if j != i), d, h)
            for i in range(n)
        ]
        taus = [build_tau(t) for t in full]
        exact = posterior_by_partition_sum(taus, full)
        return select_opt(exact, k)
    raise ValueError(f"unknown selector {selector!r}; choose from {SELECTORS}")


def _node_tables(args):
    d, h, i, cands = args
    table = build_score_table(i, cands, d, h)
    return table, build_tau(table)


def build_node_tables(d: DataMatrix, h: BgeHyper, assignment: CandidateAssignment, workers: int = 1):
    """Score and tau tables for every node; independent builds may run in
    worker processes."""
    jobs = [(d, h, i, assignment.sets[i]) for i in range(d.n_variables)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(_node_tables, jobs))
    else:
        pairs = [_node_tables(job) for job in jobs]
    tables = [p[0] for p in pairs]
    taus = [p[1] for p in pairs]
    return tables, taus


def run_pipeline(
    d: DataMatrix,
    k: int,
    selector: str = "greedy-lite",
    greedy_tail: int = 6,
    chains: int = 16,
    steps: int = 100_000,
    thinning: int | None = None,
    n_dags: int = 1000,
    burn_in_fraction: float = 0.5,
    seed=None,
    hyper: BgeHyper | None = None,
    workers: int = 1,
) -> PipelineResult:
    """Candidate selection, preprocessing, simulation and DAG generation.

    ``thinning=None`` picks the largest stride that still yields at least
    ``n_dags`` stored partitions; the last ``n_dags`` of them are the ones
    converted to DAGs.
    """
    n = d.n_variables
    if not 1 <= k <= n - 1:
        raise KTooLarge(f"k={k} outside [1, {n - 1}]")
    if hyper is None:
        hyper = BgeHyper.default(n)
    root = np.random.SeedSequence(seed)
    rng_select, rng_mcmc, rng_dags = (np.random.default_rng(s) for s in root.spawn(3))

    assignment = select_candidates(d, k, selector, hyper, rng_select, greedy_tail)
    tables, taus = build_node_tables(d, hyper, assignment, workers)
    diagnostics = [(t.node, t.k, t.exception_count) for t in taus]

    post_burn = steps - int(burn_in_fraction * steps)
    if thinning is None:
        thinning = max(1, post_burn // n_dags)
    cfg = McmcConfig(chains, steps, thinning, burn_in_fraction)
    mcmc_run = run(cfg, taus, rng_mcmc)

    partitions = mcmc_run.samples[-n_dags:]
    dags = sample_dags(partitions, tables, rng_dags)
    return PipelineResult(assignment, tables, taus, mcmc_run, partitions, dags, diagnostics)
