"""Bayesian sampling of DAG structures and linear causal effects.

The pipeline restricts each node's parents to a small candidate set,
precomputes score-sum tables over the candidate subset lattice, simulates
a Metropolis-coupled Markov chain on root-partitions, converts stored
partitions to DAG samples, and finally draws edge weights per DAG to
obtain posterior samples of pairwise causal effects.  Exact brute-force
references for small node counts back every stage.
"""

from .candidates import (
    CandidateAssignment,
    select_back_forth,
    select_greedy,
    select_greedy_lite,
    select_opt,
    select_top,
)
from .dataio import BgeHyper, DataMatrix, PosteriorStats, load_csv, posterior_stats, standardize
from .dagsampling import (
    IntervalSumTable,
    build_interval_sums,
    sample_dags,
    sample_parents,
    sample_parents_bruteforce,
)
from .effects import (
    EffectMatrix,
    LinearDagParams,
    RowPosterior,
    ancestor_posterior,
    effects,
    joint_effects,
    row_posterior,
    run_beeps,
    sample_row,
)
from .errors import PartdagError
from .estimators import CausalEffectSampler, DagPosteriorSampler
from .exact import (
    ExactPosterior,
    coverage_exact,
    markov_equivalence_class,
    posterior_by_dag_enumeration,
    posterior_by_partition_sum,
)
from .graphs import Dag
from .lattice import SubsetArray, fast_zeta, log_add, log_sub
from .mcmc import (
    ChainState,
    McmcConfig,
    RootPartition,
    coupled_swap,
    enumerate_moves,
    mh_step,
    partition_score,
    propose,
    root_partition_of,
    run,
)
from .pipeline import run_pipeline
from .scores import LocalScoreTable, bge_log_marginal, build_score_table, log_dag_prior_factor
from .synth import GroundTruth, generate_data, generate_model
from .tau import TauTable, build_tau, tau_query

__version__ = "0.1.0"
