"""Sparse linear per-class query models.

A model is just a weight per feature string; scoring a token is the dot
product of those weights with the token's binary feature bag. Training is
L2-regularized logistic regression over independently labeled tokens, so
the learned weights double as retrieval queries. The bias is trained too
but kept out of the retrieval weights: adding a constant to every score
cannot change an ordering, while the uncertainty threshold needs it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.optimize
import scipy.sparse
import scipy.special

from .errors import ModelFormatError, SingleClassError, TrainingError
from .features import FeatureVector, feature_family

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    l2: float = 1.0
    max_iter: int = 200
    tol: float = 1e-6
    pos_weight_cap: float = 10.0
    seed: int = 0

    def to_json(self) -> dict:
        return {
            "l2": self.l2,
            "max_iter": self.max_iter,
            "tol": self.tol,
            "pos_weight_cap": self.pos_weight_cap,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class LabeledToken:
    token_id: int
    feature_vector: FeatureVector
    label: bool


@dataclass(frozen=True)
class QueryModel:
    class_name: str
    weights: dict[str, float]
    bias: float = 0.0
    trained_on: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for feat, w in self.weights.items():
            if not math.isfinite(w):
                raise ModelFormatError(f"non-finite weight for {feat!r}")
            if w == 0.0:
                raise ModelFormatError(f"zero weight stored for {feat!r}")
        if not math.isfinite(self.bias):
            raise ModelFormatError("non-finite bias")

    def size(self) -> int:
        return len(self.weights)

    def score(self, fv: FeatureVector) -> float:
        return sum(self.weights.get(f, 0.0) for f in sorted(fv))

    def log_odds(self, fv: FeatureVector) -> float:
        return self.score(fv) + self.bias


def train(
    labeled: list[LabeledToken],
    hp: TrainConfig = TrainConfig(),
    class_name: str = "",
) -> QueryModel:
    """Fit an L2-regularized logistic model on per-token binary labels.

    Deterministic for fixed data and order (the optimizer starts at zero
    and uses no randomness). Positives are up-weighted by
    min(pos_weight_cap, n_neg/n_pos) to stabilize the early rounds where
    a session has one or two positives among dozens of negatives.
    """
    if not labeled:
        raise TrainingError("no labeled tokens")
    n_pos = sum(1 for ex in labeled if ex.label)
    n_neg = len(labeled) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError(
            "labeled data has a single class; keep ranking with the prior model"
        )

    feats = sorted({f for ex in labeled for f in ex.feature_vector})
    col = {f: j for j, f in enumerate(feats)}
    indptr = [0]
    indices = []
    for ex in labeled:
        indices.extend(sorted(col[f] for f in ex.feature_vector))
        indptr.append(len(indices))
    X = scipy.sparse.csr_matrix(
        (
            np.ones(len(indices), dtype=np.float64),
            np.asarray(indices, dtype=np.int64),
            np.asarray(indptr, dtype=np.int64),
        ),
        shape=(len(labeled), len(feats)),
    )
    y = np.array([1.0 if ex.label else -1.0 for ex in labeled])
    pos_weight = min(hp.pos_weight_cap, n_neg / n_pos)
    sample_w = np.where(y > 0, pos_weight, 1.0)

    def objective(wb):
        w, b = wb[:-1], wb[-1]
        z = y * (X @ w + b)
        # log(1 + e^-z), computed stably on both tails
        loss = np.where(z > 0, np.log1p(np.exp(-np.abs(z))), -z + np.log1p(np.exp(-np.abs(z))))
        val = float(sample_w @ loss) + 0.5 * hp.l2 * float(w @ w)
        sig = scipy.special.expit(-z)  # dloss/dz = -sigmoid(-z)
        coef = -sample_w * sig * y
        grad_w = X.T @ coef + hp.l2 * w
        grad_b = float(coef.sum())
        return val, np.concatenate([grad_w, [grad_b]])

    x0 = np.zeros(len(feats) + 1)
    result = scipy.optimize.minimize(
        objective,
        x0,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": hp.max_iter, "ftol": hp.tol, "gtol": 1e-9},
    )
    w, b = result.x[:-1], float(result.x[-1])
    weights = {f: float(w[j]) for f, j in col.items() if w[j] != 0.0}
    return QueryModel(
        class_name=class_name,
        weights=weights,
        bias=b,
        trained_on=len(labeled),
        meta={
            **hp.to_json(),
            "pos_weight": pos_weight,
            "converged": bool(result.success),
            "iterations": int(result.nit),
        },
    )


def prune(model: QueryModel, max_features: int) -> QueryModel:
    """Keep the max_features largest-|weight| entries (ties: feature asc)."""
    if max_features < 1:
        raise ValueError("max_features must be >= 1")
    if model.size() <= max_features:
        return model
    ranked = sorted(model.weights.items(), key=lambda kv: (-abs(kv[1]), kv[0]))
    kept = dict(sorted(ranked[:max_features]))
    return QueryModel(
        class_name=model.class_name,
        weights=kept,
        bias=model.bias,
        trained_on=model.trained_on,
        meta={**model.meta, "pruned_to": max_features},
    )


def uncertainty(model: QueryModel, fv: FeatureVector) -> float:
    """Negative distance from the decision boundary; 0 is maximally unsure."""
    return -abs(model.log_odds(fv))


def feature_importance(
    models: list[tuple[QueryModel, float]]
) -> list[tuple[str, float]]:
    """Rank feature families by uAP-weighted membership in models' top-10.

    Each model contributes its uAP score once per family slot among its ten
    largest-|weight| features.
    """
    if not models:
        raise ValueError("need at least one model")
    mass: dict[str, float] = {}
    for model, uap in models:
        top = sorted(model.weights.items(), key=lambda kv: (-abs(kv[1]), kv[0]))[:10]
        for feat, _w in top:
            fam = feature_family(feat)
            mass[fam] = mass.get(fam, 0.0) + uap
    return sorted(mass.items(), key=lambda kv: (-kv[1], kv[0]))


# --- serialization -----------------------------------------------------------

def format_model(model: QueryModel) -> str:
    lines = [
        f"entityscout-model\t{MODEL_FORMAT_VERSION}",
        f"class\t{model.class_name}",
        f"bias\t{model.bias!r}",
        f"trained_on\t{model.trained_on}",
        f"meta\t{json.dumps(model.meta, sort_keys=True)}",
        "--",
    ]
    for feat, w in sorted(model.weights.items()):
        lines.append(f"{feat}\t{w!r}")
    return "".join(line + "\n" for line in lines)


def save_model(model: QueryModel, path: str | Path) -> None:
    Path(path).write_text(format_model(model), encoding="utf-8")


def load_model(path: str | Path) -> QueryModel:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("entityscout-model\t"):
        raise ModelFormatError(f"{path}: not a model file")
    version = lines[0].split("\t", 1)[1]
    if version != str(MODEL_FORMAT_VERSION):
        raise ModelFormatError(f"{path}: unsupported model version {version}")
    header: dict[str, str] = {}
    body_start = None
    for i, line in enumerate(lines[1:], start=1):
        if line == "--":
            body_start = i + 1
            break
        key, _, value = line.partition("\t")
        header[key] = value
    if body_start is None:
        raise ModelFormatError(f"{path}: missing header terminator")
    weights: dict[str, float] = {}
    for lineno, line in enumerate(lines[body_start:], start=body_start + 1):
        if not line:
            continue
        feat, sep, value = line.rpartition("\t")
        if not sep:
            raise ModelFormatError(f"{path}:{lineno}: bad weight line")
        w = float(value)
        if not math.isfinite(w):
            raise ModelFormatError(f"{path}:{lineno}: non-finite weight")
        if w != 0.0:
            weights[feat] = w
    try:
        return QueryModel(
            class_name=header.get("class", ""),
            weights=weights,
            bias=float(header.get("bias", "0.0")),
            trained_on=int(header.get("trained_on", "0")),
            meta=json.loads(header.get("meta", "{}")),
        )
    except (ValueError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: bad header field ({exc})") from exc
