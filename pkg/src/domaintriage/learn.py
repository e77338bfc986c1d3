"""The four member classifiers and the majority-vote ensemble.

Everything here is written against plain numpy arrays: X is (n, p)
float64, y is (n,) int with labels in {0, 1}.  Matrices fed to the
trainers must already be standardized (see :class:`Standardizer`,
which also owns median imputation of absent values).  Training is
fully deterministic given the seed; forests derive one child seed per
tree (seed + tree index), which is what makes parallel and serial
training produce identical models.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from domaintriage.model import DomainTriageError, FeatureVector

FORMAT_VERSION = 1


class EmptyData(DomainTriageError):
    """A trainer received no rows."""


class ConstantColumn(DomainTriageError):
    """A column with no variance (or no observed values) cannot be
    standardized; prune it first."""


class NonFiniteLoss(DomainTriageError):
    """Gradient descent diverged."""


class EmptyTrainSet(DomainTriageError):
    """kNN has no rows to look up neighbors in."""


class EmptyVotes(DomainTriageError):
    """Majority vote over zero votes is undefined."""


class FeatureDimensionMismatch(DomainTriageError):
    """A vector's width does not match what the model was trained on."""


class VersionMismatch(DomainTriageError):
    """Serialized model from an unknown format version."""


class CorruptPayload(DomainTriageError):
    """Serialized model bytes that cannot be decoded."""


# --- standardization ------------------------------------------------------

@dataclass
class Standardizer:
    """Median imputation followed by z-scoring, with statistics frozen
    at fit time.

    Absent entries (NaN) are replaced by the training median of their
    column *before* the mean/stddev are computed, so the recorded
    statistics describe exactly the matrix the trainers will see.
    Stddev is the population form (divide by n).
    """

    medians: np.ndarray
    means: np.ndarray
    stds: np.ndarray

    @classmethod
    def fit(cls, x) -> "Standardizer":
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[0] < 2:
            raise EmptyData("standardizer needs a matrix with at least 2 rows")
        all_absent = np.isnan(x).all(axis=0)
        if all_absent.any():
            cols = np.flatnonzero(all_absent).tolist()
            raise ConstantColumn(f"columns {cols} have no observed values")
        medians = np.nanmedian(x, axis=0)
        filled = np.where(np.isnan(x), medians, x)
        means = filled.mean(axis=0)
        stds = filled.std(axis=0)
        if (stds <= 0).any() or not np.isfinite(stds).all():
            cols = np.flatnonzero(~(stds > 0)).tolist()
            raise ConstantColumn(f"columns {cols} are constant")
        return cls(medians=medians, means=means, stds=stds)

    def transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(1, -1)
        if x.shape[1] != self.means.shape[0]:
            raise FeatureDimensionMismatch(
                f"expected {self.means.shape[0]} columns, got {x.shape[1]}"
            )
        filled = np.where(np.isnan(x), self.medians, x)
        return (filled - self.means) / self.stds


def fit_standardizer(x) -> Standardizer:
    return Standardizer.fit(x)


def apply_standardizer(standardizer: Standardizer, x) -> np.ndarray:
    return standardizer.transform(x)


# --- decision tree --------------------------------------------------------

@dataclass
class TreeNode:
    """Either a split (feature, threshold, children) or a leaf holding
    the probability of label 1.  Rows go left when value <= threshold."""

    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    prob: float = -1.0

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"p": self.prob}
        return {
            "f": self.feature,
            "t": self.threshold,
            "l": self.left.to_dict(),
            "r": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "TreeNode":
        if "p" in obj:
            return cls(prob=float(obj["p"]))
        return cls(
            feature=int(obj["f"]),
            threshold=float(obj["t"]),
            left=cls.from_dict(obj["l"]),
            right=cls.from_dict(obj["r"]),
        )


def _best_split(x, y, idx, feat_ids, min_leaf):
    """Exhaustive best (feature, threshold) by weighted Gini.

    Candidate thresholds are midpoints between consecutive distinct
    sorted values; both sides must keep at least min_leaf rows.  Lower
    cost wins; ties go to the earlier feature, then lower threshold.
    Returns (cost, feature, threshold) or None.
    """
    n = len(idx)
    best = None
    for f in feat_ids:
        col = x[idx, f]
        order = np.argsort(col, kind="stable")
        sv = col[order]
        sy = y[idx][order]
        pos_cum = np.cumsum(sy)
        total_pos = int(pos_cum[-1])
        # boundary after sorted position i: left block is 0..i
        i = np.arange(min_leaf - 1, n - min_leaf)
        if len(i) == 0:
            continue
        distinct = sv[i] != sv[i + 1]
        i = i[distinct]
        if len(i) == 0:
            continue
        thresholds = (sv[i] + sv[i + 1]) / 2.0
        # adjacent representable floats: midpoint cannot separate them
        usable = (sv[i] < thresholds) & (thresholds < sv[i + 1])
        i, thresholds = i[usable], thresholds[usable]
        if len(i) == 0:
            continue
        ln = i + 1
        rn = n - ln
        lp = pos_cum[i]
        rp = total_pos - lp
        gini_l = 1.0 - (lp * lp + (ln - lp) * (ln - lp)) / (ln * ln)
        gini_r = 1.0 - (rp * rp + (rn - rp) * (rn - rp)) / (rn * rn)
        cost = (ln * gini_l + rn * gini_r) / n
        k = int(np.argmin(cost))
        if best is None or cost[k] < best[0]:
            best = (float(cost[k]), int(f), float(thresholds[k]))
    return best


def train_decision_tree(
    x,
    y,
    max_depth: int = 12,
    min_leaf: int = 5,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> TreeNode:
    """Greedy CART-style tree on Gini impurity.

    ``max_features``/``rng`` are for forest use: when set, every split
    considers a fresh random feature subset.  Without them the tree is
    fully deterministic.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    if x.ndim != 2 or len(x) == 0:
        raise EmptyData("no rows to train on")
    if len(x) != len(y):
        raise EmptyData(f"{len(x)} rows but {len(y)} labels")
    p = x.shape[1]
    subset = max_features is not None and max_features < p

    def grow(idx: np.ndarray, depth: int) -> TreeNode:
        pos = int(y[idx].sum())
        n = len(idx)
        if pos == 0 or pos == n or depth >= max_depth or n < 2 * min_leaf:
            return TreeNode(prob=pos / n)
        if subset:
            feat_ids = np.sort(rng.choice(p, size=max_features, replace=False))
        else:
            feat_ids = range(p)
        found = _best_split(x, y, idx, feat_ids, min_leaf)
        if found is None:
            return TreeNode(prob=pos / n)
        _, feature, threshold = found
        mask = x[idx, feature] <= threshold
        return TreeNode(
            feature=feature,
            threshold=threshold,
            left=grow(idx[mask], depth + 1),
            right=grow(idx[~mask], depth + 1),
        )

    return grow(np.arange(len(x)), 0)


def tree_predict_proba(root: TreeNode, x) -> np.ndarray:
    """Leaf probability of label 1 for every row of ``x``."""
    x = np.asarray(x, dtype=float)
    out = np.empty(len(x), dtype=float)

    def walk(node: TreeNode, idx: np.ndarray) -> None:
        if node.is_leaf:
            out[idx] = node.prob
            return
        mask = x[idx, node.feature] <= node.threshold
        walk(node.left, idx[mask])
        walk(node.right, idx[~mask])

    walk(root, np.arange(len(x)))
    return out


# --- random forest --------------------------------------------------------

def train_random_forest(
    x,
    y,
    n_trees: int = 100,
    max_features: int | None = None,
    bootstrap: bool = True,
    seed: int = 0,
    max_depth: int = 12,
    min_leaf: int = 5,
    n_jobs: int = 1,
) -> list[TreeNode]:
    """Bagged trees with per-split random feature subsets.

    ``max_features`` defaults to ceil(sqrt(p)).  Tree i draws all its
    randomness from seed + i, so the result does not depend on whether
    trees were built serially or in parallel.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    if x.ndim != 2 or len(x) == 0:
        raise EmptyData("no rows to train on")
    n, p = x.shape
    mf = max_features if max_features is not None else math.ceil(math.sqrt(p))

    def build(i: int) -> TreeNode:
        rng = np.random.default_rng(seed + i)
        if bootstrap:
            sample = rng.integers(0, n, size=n)
            xs, ys = x[sample], y[sample]
        else:
            xs, ys = x, y
        return train_decision_tree(
            xs, ys, max_depth=max_depth, min_leaf=min_leaf,
            max_features=mf if mf < p else None, rng=rng,
        )

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(build, range(n_trees)))
    return [build(i) for i in range(n_trees)]


def forest_predict_proba(trees: list[TreeNode], x) -> np.ndarray:
    """Mean of member-tree leaf probabilities."""
    x = np.asarray(x, dtype=float)
    acc = np.zeros(len(x), dtype=float)
    for tree in trees:
        acc += tree_predict_proba(tree, x)
    return acc / len(trees)


# --- logistic regression ---------------------------------------------------

def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def lr_loss(w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray, l2: float) -> float:
    """Mean log-loss plus l2*||w||^2/2 (bias unpenalized)."""
    # overflow here means divergence, reported as NonFiniteLoss by the
    # trainer rather than as a numpy warning
    with np.errstate(over="ignore"):
        z = x @ w + b
        per_row = np.logaddexp(0.0, z) - y * z
        return float(per_row.mean() + 0.5 * l2 * (w @ w))


def lr_gradient(
    w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray, l2: float
) -> tuple[np.ndarray, float]:
    z = x @ w + b
    residual = _sigmoid(z) - y
    grad_w = x.T @ residual / len(x) + l2 * w
    grad_b = float(residual.mean())
    return grad_w, grad_b


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    final_loss: float
    losses: list[float] = field(default_factory=list, repr=False)

    def scores(self, x) -> np.ndarray:
        return _sigmoid(np.asarray(x, dtype=float) @ self.weights + self.bias)


def train_logistic_regression(
    x,
    y,
    l2: float = 1e-4,
    lr: float = 0.1,
    epochs: int = 500,
) -> LogisticModel:
    """Full-batch gradient descent from zero weights.

    Records the loss before every update plus the final loss; aborts
    with NonFiniteLoss if the loss ever stops being finite.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or len(x) == 0:
        raise EmptyData("no rows to train on")
    w = np.zeros(x.shape[1], dtype=float)
    b = 0.0
    losses = []
    for _ in range(epochs):
        loss = lr_loss(w, b, x, y, l2)
        if not math.isfinite(loss):
            raise NonFiniteLoss(f"loss became {loss} during training")
        losses.append(loss)
        grad_w, grad_b = lr_gradient(w, b, x, y, l2)
        w = w - lr * grad_w
        b = b - lr * grad_b
    final = lr_loss(w, b, x, y, l2)
    if not math.isfinite(final):
        raise NonFiniteLoss(f"loss became {final} during training")
    losses.append(final)
    return LogisticModel(weights=w, bias=b, final_loss=final, losses=losses)


# --- k nearest neighbors ----------------------------------------------------

def predict_knn(train_x, train_y, query, k: int = 5) -> tuple[int, float]:
    """Label and positive-fraction score of the k nearest rows.

    Euclidean distance; equidistant candidates at the boundary are
    taken in row order (stable sort).  Score exactly 0.5 → label 0.
    """
    scores = knn_scores(train_x, train_y, np.asarray(query, dtype=float).reshape(1, -1), k)
    score = float(scores[0])
    return (1 if score > 0.5 else 0), score


def knn_scores(train_x, train_y, queries, k: int = 5) -> np.ndarray:
    train_x = np.asarray(train_x, dtype=float)
    train_y = np.asarray(train_y, dtype=int)
    queries = np.asarray(queries, dtype=float)
    n = len(train_x)
    if n == 0:
        raise EmptyTrainSet("no training rows")
    if not (1 <= k <= n):
        raise ValueError(f"k must be in 1..{n}, got {k}")
    if queries.ndim == 1:
        queries = queries.reshape(1, -1)
    if queries.shape[1] != train_x.shape[1]:
        raise FeatureDimensionMismatch(
            f"train has {train_x.shape[1]} columns, query has {queries.shape[1]}"
        )
    out = np.empty(len(queries), dtype=float)
    chunk = max(1, 2_000_000 // max(n, 1))
    for start in range(0, len(queries), chunk):
        q = queries[start:start + chunk]
        d2 = ((q[:, None, :] - train_x[None, :, :]) ** 2).sum(axis=2)
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        out[start:start + len(q)] = train_y[order].sum(axis=1) / k
    return out


# --- ensemble ---------------------------------------------------------------

def majority_vote(votes) -> int:
    """Label 1 iff strictly more than half the votes are 1; a tie on an
    even vote count is benign (0)."""
    votes = list(votes)
    if not votes:
        raise EmptyVotes("no votes to aggregate")
    for v in votes:
        if v not in (0, 1):
            raise ValueError(f"votes must be 0 or 1, got {v!r}")
    return 1 if sum(votes) > len(votes) / 2 else 0


@dataclass
class Member:
    """One trained classifier inside the ensemble: a kind tag plus the
    model object it wraps."""

    kind: str
    tree: TreeNode | None = None
    trees: list[TreeNode] | None = None
    logistic: LogisticModel | None = None
    knn_x: np.ndarray | None = None
    knn_y: np.ndarray | None = None
    knn_k: int = 5

    def scores(self, x: np.ndarray) -> np.ndarray:
        """Score in [0,1] per row of (already standardized) ``x``."""
        if self.kind == "dt":
            return tree_predict_proba(self.tree, x)
        if self.kind == "rf":
            return forest_predict_proba(self.trees, x)
        if self.kind == "lr":
            return self.logistic.scores(x)
        if self.kind == "knn":
            return knn_scores(self.knn_x, self.knn_y, x, self.knn_k)
        raise ValueError(f"unknown member kind {self.kind!r}")

    def votes(self, x: np.ndarray) -> np.ndarray:
        return (self.scores(x) > 0.5).astype(int)


DEFAULT_MODELS = ("rf", "dt", "knn", "lr")

DEFAULT_PARAMS = {
    "n_trees": 100,
    "max_depth": 12,
    "min_leaf": 5,
    "knn_k": 5,
    "l2": 1e-4,
    "lr_rate": 0.1,
    "lr_epochs": 500,
}


@dataclass
class EnsembleModel:
    """Trained members plus everything needed to score a raw
    17-feature vector: the selected feature indices and the fitted
    standardizer."""

    members: list[Member]
    selected_features: list[int]
    standardizer: Standardizer
    seed: int
    params: dict

    @property
    def k(self) -> int:
        return len(self.members)


def train_ensemble(
    x17,
    y,
    selected_features: list[int],
    models: tuple[str, ...] = DEFAULT_MODELS,
    seed: int = 0,
    n_jobs: int = 1,
    **overrides,
) -> EnsembleModel:
    """Standardize the selected columns and train each requested member.

    ``x17`` is the raw (n, 17) matrix with NaN for absent entries.
    Hyperparameter overrides: n_trees, max_depth, min_leaf, knn_k, l2,
    lr_rate, lr_epochs.
    """
    params = dict(DEFAULT_PARAMS)
    unknown = set(overrides) - set(params)
    if unknown:
        raise ValueError(f"unknown hyperparameters: {sorted(unknown)}")
    params.update(overrides)
    if not models:
        raise ValueError("need at least one member model")
    x17 = np.asarray(x17, dtype=float)
    y = np.asarray(y, dtype=int)
    if len(x17) == 0:
        raise EmptyData("no rows to train on")
    sel = list(selected_features)
    if not sel or len(set(sel)) != len(sel):
        raise ValueError("selected_features must be non-empty and unique")
    if min(sel) < 0 or max(sel) >= x17.shape[1]:
        raise FeatureDimensionMismatch(
            f"selected feature index out of range for {x17.shape[1]} columns"
        )
    standardizer = Standardizer.fit(x17[:, sel])
    xs = standardizer.transform(x17[:, sel])

    members = []
    for kind in models:
        if kind == "rf":
            trees = train_random_forest(
                xs, y, n_trees=params["n_trees"], seed=seed,
                max_depth=params["max_depth"], min_leaf=params["min_leaf"],
                n_jobs=n_jobs,
            )
            members.append(Member(kind="rf", trees=trees))
        elif kind == "dt":
            tree = train_decision_tree(
                xs, y, max_depth=params["max_depth"], min_leaf=params["min_leaf"]
            )
            members.append(Member(kind="dt", tree=tree))
        elif kind == "knn":
            if not (1 <= params["knn_k"] <= len(xs)):
                raise ValueError(f"knn_k must be in 1..{len(xs)}")
            members.append(Member(kind="knn", knn_x=xs.copy(), knn_y=y.copy(),
                                  knn_k=params["knn_k"]))
        elif kind == "lr":
            logistic = train_logistic_regression(
                xs, y, l2=params["l2"], lr=params["lr_rate"],
                epochs=params["lr_epochs"],
            )
            members.append(Member(kind="lr", logistic=logistic))
        else:
            raise ValueError(f"unknown model kind {kind!r}")
    return EnsembleModel(
        members=members,
        selected_features=sel,
        standardizer=standardizer,
        seed=seed,
        params=params,
    )


def _raw_row(features) -> np.ndarray:
    if isinstance(features, FeatureVector):
        row = features.to_row()
    else:
        row = list(features)
    return np.array([np.nan if v is None else float(v) for v in row], dtype=float)


def ensemble_scores(model: EnsembleModel, x17) -> tuple[np.ndarray, np.ndarray]:
    """Batch scoring: returns (labels, vote-fraction scores) for an
    (n, 17) raw feature matrix."""
    x17 = np.asarray(x17, dtype=float)
    if x17.ndim == 1:
        x17 = x17.reshape(1, -1)
    xs = model.standardizer.transform(x17[:, model.selected_features])
    vote_sum = np.zeros(len(xs), dtype=int)
    for member in model.members:
        vote_sum += member.votes(xs)
    k = model.k
    labels = (vote_sum > k / 2).astype(int)
    return labels, vote_sum / k


def ensemble_predict(model: EnsembleModel, features) -> tuple[int, float]:
    """Score one domain: majority-vote label plus the vote fraction
    (the fraction is only a ranking statistic for ROC purposes)."""
    row = _raw_row(features)
    if row.shape[0] != 17:
        raise FeatureDimensionMismatch(f"expected 17 features, got {row.shape[0]}")
    labels, scores = ensemble_scores(model, row.reshape(1, -1))
    return int(labels[0]), float(scores[0])


# --- serialization ----------------------------------------------------------

def _member_payload(member: Member) -> dict:
    if member.kind == "dt":
        return {"kind": "dt", "tree": member.tree.to_dict()}
    if member.kind == "rf":
        return {"kind": "rf", "trees": [t.to_dict() for t in member.trees]}
    if member.kind == "lr":
        return {
            "kind": "lr",
            "weights": member.logistic.weights.tolist(),
            "bias": member.logistic.bias,
            "final_loss": member.logistic.final_loss,
        }
    if member.kind == "knn":
        return {
            "kind": "knn",
            "x": member.knn_x.tolist(),
            "y": member.knn_y.tolist(),
            "k": member.knn_k,
        }
    raise ValueError(f"unknown member kind {member.kind!r}")


def _member_from_payload(obj: dict) -> Member:
    kind = obj["kind"]
    if kind == "dt":
        return Member(kind="dt", tree=TreeNode.from_dict(obj["tree"]))
    if kind == "rf":
        return Member(kind="rf", trees=[TreeNode.from_dict(t) for t in obj["trees"]])
    if kind == "lr":
        return Member(
            kind="lr",
            logistic=LogisticModel(
                weights=np.asarray(obj["weights"], dtype=float),
                bias=float(obj["bias"]),
                final_loss=float(obj["final_loss"]),
            ),
        )
    if kind == "knn":
        return Member(
            kind="knn",
            knn_x=np.asarray(obj["x"], dtype=float),
            knn_y=np.asarray(obj["y"], dtype=int),
            knn_k=int(obj["k"]),
        )
    raise CorruptPayload(f"unknown member kind {kind!r}")


def serialize_model(model: EnsembleModel) -> bytes:
    """Deterministic JSON bytes: same model → same bytes."""
    payload = {
        "format_version": FORMAT_VERSION,
        "seed": model.seed,
        "params": model.params,
        "selected_features": list(model.selected_features),
        "standardizer": {
            "medians": model.standardizer.medians.tolist(),
            "means": model.standardizer.means.tolist(),
            "stds": model.standardizer.stds.tolist(),
        },
        "members": [_member_payload(m) for m in model.members],
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"),
                      allow_nan=False).encode("ascii")


def deserialize_model(data: bytes) -> EnsembleModel:
    try:
        payload = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptPayload(f"not valid model JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise CorruptPayload("model payload is not an object")
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"format_version {version!r}, expected {FORMAT_VERSION}")
    try:
        std = payload["standardizer"]
        return EnsembleModel(
            members=[_member_from_payload(m) for m in payload["members"]],
            selected_features=[int(i) for i in payload["selected_features"]],
            standardizer=Standardizer(
                medians=np.asarray(std["medians"], dtype=float),
                means=np.asarray(std["means"], dtype=float),
                stds=np.asarray(std["stds"], dtype=float),
            ),
            seed=int(payload["seed"]),
            params=dict(payload["params"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptPayload(f"model payload missing or malformed field: {exc}") from exc
