"""Linear Gaussian structural causal models and dataset simulation.

A model assigns every non-environment node the weighted sum of its
predictor parents plus standard normal noise.  Generation walks the
causal order and divides each freshly generated column by its own
empirical standard deviation (preventing variance accumulation along
the order) before any children are generated; a node targeted by the
environment is standardized first and then overwritten with the
intervention value on interventional rows.  The environment itself is
iid Bernoulli, splitting the sample into an observational (E=0) and an
interventional (E=1) regime.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .graph import ENV, Dag, _bits
from .rng import make_rng
from .varset import VarSet

# The default coefficient magnitude window keeps effects bounded away
# from zero so invariance violations are detectable at moderate n.
COEF_LOW = 0.5
COEF_HIGH = 2.0


@dataclass(frozen=True)
class LinearScm:
    """Coefficients over the (X, Y)-internal edges of a DAG plus the
    environment's intervention targets and strength."""

    dag: Dag
    coefficients: dict[tuple[int, int], float]
    intervention_targets: VarSet
    intervention_strength: float
    env_probability: float = 0.5

    def __post_init__(self):
        internal = {
            (p, c)
            for p, c in self.dag.edges()
            if p != ENV and c != ENV
        }
        if set(self.coefficients) != internal:
            raise ValueError("coefficients must cover exactly the non-environment edges")
        if not 0.0 < self.env_probability < 1.0:
            raise ValueError("env_probability must be in (0, 1)")
        if self.intervention_targets.mask & ~self.dag.predictor_mask():
            raise ValueError("intervention targets must be predictors")

    @property
    def d(self) -> int:
        return self.dag.d

    def to_json(self) -> str:
        return json.dumps(
            {
                "d": self.dag.d,
                "mode": self.dag.mode,
                "edges": sorted(self.dag.edges()),
                "coefficients": [
                    [p, c, self.coefficients[(p, c)]]
                    for p, c in sorted(self.coefficients)
                ],
                "targets": list(self.intervention_targets.indices()),
                "strength": self.intervention_strength,
                "env_probability": self.env_probability,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "LinearScm":
        obj = json.loads(text)
        dag = Dag(obj["d"], [tuple(e) for e in obj["edges"]], mode=obj.get("mode", "exogenous"))
        coefficients = {(p, c): float(b) for p, c, b in obj["coefficients"]}
        return cls(
            dag=dag,
            coefficients=coefficients,
            intervention_targets=VarSet(obj["targets"]),
            intervention_strength=float(obj["strength"]),
            env_probability=float(obj.get("env_probability", 0.5)),
        )


@dataclass(frozen=True, eq=False)
class Dataset:
    """n samples of (E, X, Y); env is the binary environment label."""

    env: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        env = np.asarray(self.env)
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 2:
            raise ValueError("x must be a 2d array")
        n = x.shape[0]
        if env.shape != (n,) or y.shape != (n,):
            raise ValueError("env, x and y must agree on the sample count")
        if not np.isin(env, (0, 1)).all():
            raise ValueError("env must be binary")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise ValueError("x and y must be finite with no missing values")
        object.__setattr__(self, "env", env.astype(np.int8))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["E"] + [f"X{k}" for k in range(1, self.d + 1)] + ["Y"])
        for i in range(self.n):
            writer.writerow(
                [int(self.env[i])]
                + [repr(float(v)) for v in self.x[i]]
                + [repr(float(self.y[i]))]
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Dataset":
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if not rows:
            raise ValueError("empty dataset")
        header = [c.strip() for c in rows[0]]
        d = len(header) - 2
        expected = ["E"] + [f"X{k}" for k in range(1, d + 1)] + ["Y"]
        if header != expected:
            raise ValueError(f"dataset header must be {expected}, got {header}")
        body = np.array([[float(v) for v in row] for row in rows[1:]])
        return cls(env=body[:, 0], x=body[:, 1 : d + 1], y=body[:, d + 1])


def sample_scm(
    dag: Dag,
    strength: float,
    rng: np.random.Generator | None = None,
    coef_low: float = COEF_LOW,
    coef_high: float = COEF_HIGH,
    env_probability: float = 0.5,
) -> LinearScm:
    """Draw random edge coefficients for a DAG.

    Magnitudes are uniform on (coef_low, coef_high) with an independent
    random sign, i.e. the two-sided law U((-hi, -lo) u (lo, hi)).
    Intervention targets are the environment's children.
    """
    if dag.mode != "exogenous":
        raise ValueError("SCM sampling expects an exogenous-mode DAG")
    if rng is None:
        rng = make_rng(None)
    coefficients = {}
    for p, c in sorted(dag.edges()):
        if p == ENV or c == ENV:
            continue
        magnitude = rng.uniform(coef_low, coef_high)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        coefficients[(p, c)] = float(sign * magnitude)
    targets = VarSet.from_mask(dag.child_masks[ENV] & dag.predictor_mask())
    return LinearScm(
        dag=dag,
        coefficients=coefficients,
        intervention_targets=targets,
        intervention_strength=strength,
        env_probability=env_probability,
    )


def simulate(scm: LinearScm, n: int, rng: np.random.Generator | None = None) -> Dataset:
    """Generate n samples from the model.

    Nodes are visited in causal order; each column is standardized by
    its empirical standard deviation immediately after generation, and
    intervention targets are then overwritten with the intervention
    strength on the E=1 rows.
    """
    if n < 2:
        raise ValueError("need n >= 2 to standardize columns")
    if rng is None:
        rng = make_rng(None)
    dag = scm.dag
    d = dag.d
    env = (rng.random(n) < scm.env_probability).astype(np.int8)
    interventional = env == 1
    values = np.zeros((n, d + 2))
    values[:, ENV] = env
    targets = scm.intervention_targets.mask
    for node in dag.topological_order:
        if node == ENV:
            continue
        col = rng.standard_normal(n)
        for parent in _bits(dag.parent_masks[node]):
            if parent == ENV:
                continue
            col += scm.coefficients[(parent, node)] * values[:, parent]
        sd = col.std()
        if sd == 0.0:
            raise ValueError("degenerate column with zero standard deviation")
        col = col / sd
        if targets >> node & 1:
            col[interventional] = scm.intervention_strength
        values[:, node] = col
    return Dataset(env=env, x=values[:, 1 : d + 1], y=values[:, d + 1])
