"""Ground-truth linear Gaussian models and data drawn from them.

Models are sampled over a random topological order with a fixed edge
probability calibrated so the expected neighbourhood size (in plus out
degree) matches the requested average; edge coefficients are uniform on
plus/minus [0.1, 2] and error variances uniform on [0.5, 2].
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataio import DataMatrix
from .effects import EffectMatrix, LinearDagParams, effects
from .errors import DegreeOutOfRange
from .graphs import Dag

COEF_LOW, COEF_HIGH = 0.1, 2.0
VAR_LOW, VAR_HIGH = 0.5, 2.0


@dataclass(frozen=True)
class GroundTruth:
    dag: Dag
    params: LinearDagParams
    true_effects: EffectMatrix

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.dag.n,
                "parents": [sorted(s) for s in self.dag.parent_sets],
                "b_mat": self.params.b_mat.tolist(),
                "q_diag": self.params.q_diag.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        obj = json.loads(text)
        dag = Dag.from_parent_lists(obj["parents"])
        params = LinearDagParams(np.asarray(obj["b_mat"]), np.asarray(obj["q_diag"]))
        return cls(dag, params, effects(params))


def generate_model(n: int, avg_degree: float, rng) -> GroundTruth:
    """Random DAG with expected total degree ``avg_degree`` per node.

    Each of the n(n-1)/2 forward pairs of a uniformly random order becomes
    an edge independently with probability avg_degree / (n - 1).
    """
    if not 0 <= avg_degree <= n - 1:
        raise DegreeOutOfRange(f"avg_degree {avg_degree} outside [0, {n - 1}]")
    order = [int(v) for v in rng.permutation(n)]
    p_edge = avg_degree / (n - 1)
    b = np.zeros((n, n))
    parents = [set() for _ in range(n)]
    for a_pos in range(n):
        for b_pos in range(a_pos + 1, n):
            if rng.random() < p_edge:
                src, dst = order[a_pos], order[b_pos]
                sign = 1.0 if rng.random() < 0.5 else -1.0
                b[dst, src] = sign * rng.uniform(COEF_LOW, COEF_HIGH)
                parents[dst].add(src)
    variances = rng.uniform(VAR_LOW, VAR_HIGH, size=n)
    params = LinearDagParams(b, 1.0 / variances)
    return GroundTruth(Dag.from_parent_lists(parents), params, effects(params))


def generate_data(gt: GroundTruth, n_samples: int, rng) -> DataMatrix:
    """Zero-mean draws: independent errors with variances 1/q pushed
    through the structural equations."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    n = gt.dag.n
    sd = 1.0 / np.sqrt(gt.params.q_diag)
    errors = rng.standard_normal((n_samples, n)) * sd
    x = errors @ gt.true_effects.a_mat.T
    return DataMatrix.from_array(x)
