"""Scikit-learn style front door to the samplers.

Both estimators follow the usual conventions: all configuration lives in
``__init__`` arguments mirrored to attributes (so ``get_params`` /
``set_params`` and grid search work), ``fit`` consumes a data matrix and
exposes its results through trailing-underscore attributes.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .dataio import BgeHyper, standardize
from .effects import ancestor_posterior, effect_summary, run_beeps
from .pipeline import run_pipeline
from .validation import check_data


def _resolve_hyper(n, alpha_mu, alpha_w):
    base = BgeHyper.default(n)
    return BgeHyper(
        alpha_mu if alpha_mu is not None else base.alpha_mu,
        alpha_w if alpha_w is not None else base.alpha_w,
        base.nu,
        base.t_mat,
    )


class DagPosteriorSampler(BaseEstimator):
    """Posterior sampler over DAG structures.

    ``fit`` selects candidate parents, precomputes score-sum tables, runs
    the coupled partition chains and converts the stored partitions to
    DAG samples.

    Attributes after fitting include ``candidates_``, ``partitions_``,
    ``dags_`` and per-chain ``acceptance_rates_``.
    """

    def __init__(
        self,
        n_candidates=None,
        selector="greedy-lite",
        greedy_tail=6,
        n_chains=16,
        n_steps=50_000,
        n_dags=500,
        thinning=None,
        burn_in_fraction=0.5,
        alpha_mu=None,
        alpha_w=None,
        scale_data=False,
        random_state=None,
    ):
        self.n_candidates = n_candidates
        self.selector = selector
        self.greedy_tail = greedy_tail
        self.n_chains = n_chains
        self.n_steps = n_steps
        self.n_dags = n_dags
        self.thinning = thinning
        self.burn_in_fraction = burn_in_fraction
        self.alpha_mu = alpha_mu
        self.alpha_w = alpha_w
        self.scale_data = scale_data
        self.random_state = random_state

    def fit(self, X, y=None):
        d = check_data(X)
        if self.scale_data:
            d = standardize(d)
        n = d.n_variables
        k = self.n_candidates if self.n_candidates is not None else min(n - 1, 10)
        result = run_pipeline(
            d,
            k=k,
            selector=self.selector,
            greedy_tail=self.greedy_tail,
            chains=self.n_chains,
            steps=self.n_steps,
            thinning=self.thinning,
            n_dags=self.n_dags,
            burn_in_fraction=self.burn_in_fraction,
            seed=self.random_state,
            hyper=_resolve_hyper(n, self.alpha_mu, self.alpha_w),
        )
        self.n_features_in_ = n
        self.feature_names_in_ = np.asarray(d.columns, dtype=object)
        self.data_ = d
        self.candidates_ = result.assignment
        self.partitions_ = result.partitions
        self.dags_ = result.dags
        self.acceptance_rates_ = result.mcmc.acceptance_rates()
        self.swap_rate_ = result.mcmc.swap_rate()
        self.tau_diagnostics_ = result.tau_diagnostics
        return self

    def _check_fitted(self):
        if not hasattr(self, "dags_"):
            raise NotFittedError("call fit before using the sampler")

    def edge_posterior(self) -> np.ndarray:
        """Entry (i, j): fraction of sampled DAGs containing edge j -> i."""
        self._check_fitted()
        n = self.n_features_in_
        counts = np.zeros((n, n))
        for g in self.dags_:
            for i, parents in enumerate(g.parent_sets):
                for j in parents:
                    counts[i, j] += 1.0
        return counts / len(self.dags_)


class CausalEffectSampler(BaseEstimator):
    """Posterior over total linear causal effects.

    Runs the DAG sampler, then draws edge weights for every sampled DAG
    and maps them to effect matrices; ``posterior_mean_`` holds the pairwise
    point estimates and ``effect_samples_`` the full sampled posterior.
    """

    def __init__(
        self,
        n_candidates=None,
        selector="greedy-lite",
        greedy_tail=6,
        n_chains=16,
        n_steps=50_000,
        n_dags=500,
        thinning=None,
        burn_in_fraction=0.5,
        alpha_mu=None,
        alpha_w=None,
        scale_data=False,
        intervened=(),
        random_state=None,
    ):
        self.n_candidates = n_candidates
        self.selector = selector
        self.greedy_tail = greedy_tail
        self.n_chains = n_chains
        self.n_steps = n_steps
        self.n_dags = n_dags
        self.thinning = thinning
        self.burn_in_fraction = burn_in_fraction
        self.alpha_mu = alpha_mu
        self.alpha_w = alpha_w
        self.scale_data = scale_data
        self.intervened = intervened
        self.random_state = random_state

    def fit(self, X, y=None):
        sampler = DagPosteriorSampler(
            n_candidates=self.n_candidates,
            selector=self.selector,
            greedy_tail=self.greedy_tail,
            n_chains=self.n_chains,
            n_steps=self.n_steps,
            n_dags=self.n_dags,
            thinning=self.thinning,
            burn_in_fraction=self.burn_in_fraction,
            alpha_mu=self.alpha_mu,
            alpha_w=self.alpha_w,
            scale_data=self.scale_data,
            random_state=self.random_state,
        )
        sampler.fit(X)
        d = sampler.data_
        n = sampler.n_features_in_
        rng = np.random.default_rng(
            np.random.SeedSequence(self.random_state).spawn(4)[3]
        )
        mats = run_beeps(
            sampler.dags_,
            d,
            _resolve_hyper(n, self.alpha_mu, self.alpha_w),
            rng,
            intervened=tuple(self.intervened),
        )
        summary = effect_summary(mats)
        self.dag_sampler_ = sampler
        self.n_features_in_ = n
        self.feature_names_in_ = sampler.feature_names_in_
        self.dags_ = sampler.dags_
        self.effect_samples_ = np.stack([m.a_mat for m in mats])
        self.posterior_mean_ = summary["mean"]
        self.effect_q05_ = summary["q_lo"]
        self.effect_q95_ = summary["q_hi"]
        self.ancestor_posterior_ = ancestor_posterior(sampler.dags_)
        return self

    def effect_distribution(self, target: int, source: int) -> np.ndarray:
        """Sampled posterior of the effect of ``source`` on ``target``."""
        if not hasattr(self, "effect_samples_"):
            raise NotFittedError("call fit before querying effects")
        return self.effect_samples_[:, int(target), int(source)]
