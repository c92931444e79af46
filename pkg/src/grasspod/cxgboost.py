"""Constrained multivariate gradient-boosted regression trees.

Trees map parameters theta in R^d to vectors y in R^(nr-r) under the hard
requirement that every updated training prediction stays inside the closed
ball of radius pi/2.  With the squared loss the per-leaf weight problem

    min_w  G^T w + 1/2 w^T ((sum h_i) + lambda) I w
    s.t.   ||w + yhat_i||_2 <= pi/2   for samples i routed to the leaf

has an isotropic Hessian, so its solution is exactly the Euclidean
projection of the unconstrained optimum -G / (sum h_i + lambda) onto the
intersection of the sample balls; the projection is computed with Dykstra's
alternating method when more than one ball is active.

Feasibility is inductive: predictions start at zero, each leaf solve keeps
yhat + w inside the ball, and the shrinkage update yhat + eta*w is a convex
combination of two ball points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "DEFAULT_RADIUS",
    "SolverFailure",
    "TrainConfig",
    "Split",
    "Leaf",
    "Ensemble",
    "EmbeddedDataset",
    "LeafProblem",
    "gradients",
    "solve_leaf_qcqp",
    "grow_tree",
    "fit",
    "predict",
]

DEFAULT_RADIUS = np.pi / 2


class SolverFailure(RuntimeError):
    """Leaf QCQP did not converge within the iteration cap."""


@dataclass(frozen=True)
class TrainConfig:
    """Boosting hyperparameters.

    ``enforce_ball=False`` disables the ball constraints entirely and is used
    only to compare against unconstrained reference boosting.
    """

    rounds: int
    learning_rate: float
    max_depth: int
    leaf_penalty: float = 1e-3
    l2_penalty: float = 1e-2
    subsample: float = 1.0
    min_samples_leaf: int = 1
    rng_seed: int = 0
    enforce_ball: bool = True

    def __post_init__(self):
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.leaf_penalty < 0.0 or self.l2_penalty < 0.0:
            raise ValueError("penalties must be >= 0")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError("subsample must lie in (0, 1]")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


@dataclass(frozen=True)
class Leaf:
    weight: np.ndarray


TreeNode = Union[Split, Leaf]


def tree_predict(node: TreeNode, theta: np.ndarray) -> np.ndarray:
    while isinstance(node, Split):
        node = node.left if theta[node.feature] < node.threshold else node.right
    return node.weight


def _tree_apply(node: TreeNode, thetas: np.ndarray, out: np.ndarray, rows: np.ndarray) -> None:
    if isinstance(node, Leaf):
        out[rows] = node.weight
        return
    mask = thetas[rows, node.feature] < node.threshold
    _tree_apply(node.left, thetas, out, rows[mask])
    _tree_apply(node.right, thetas, out, rows[~mask])


@dataclass(frozen=True)
class Ensemble:
    """Ordered additive ensemble with shrinkage eta; base prediction is zero."""

    trees: tuple
    learning_rate: float
    output_dim: int

    def predict(self, theta: np.ndarray) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float)).ravel()
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta contains non-finite entries")
        y = np.zeros(self.output_dim)
        for tree in self.trees:
            y += self.learning_rate * tree_predict(tree, theta)
        return y

    def predict_batch(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        out = np.zeros((thetas.shape[0], self.output_dim))
        step = np.zeros_like(out)
        rows = np.arange(thetas.shape[0])
        for tree in self.trees:
            _tree_apply(tree, thetas, step, rows)
            out += self.learning_rate * step
        return out


def predict(model: Ensemble, theta: np.ndarray) -> np.ndarray:
    return model.predict(theta)


@dataclass(frozen=True)
class EmbeddedDataset:
    """Training pairs (theta_i, y_i) with every target inside the open ball."""

    thetas: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        thetas = np.atleast_2d(np.array(self.thetas, dtype=float))
        targets = np.atleast_2d(np.array(self.targets, dtype=float))
        if thetas.shape[0] != targets.shape[0]:
            raise ValueError("thetas and targets disagree on sample count")
        if thetas.shape[0] < 1 or thetas.shape[1] < 1:
            raise ValueError("need at least one sample and one feature")
        if not (np.all(np.isfinite(thetas)) and np.all(np.isfinite(targets))):
            raise ValueError("dataset contains non-finite entries")
        norms = np.linalg.norm(targets, axis=1)
        if np.any(norms >= DEFAULT_RADIUS):
            bad = np.nonzero(norms >= DEFAULT_RADIUS)[0]
            raise ValueError(
                f"targets outside the open pi/2 ball at rows {bad.tolist()}"
            )
        thetas.flags.writeable = False
        targets.flags.writeable = False
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "targets", targets)

    @property
    def n_samples(self) -> int:
        return self.thetas.shape[0]

    @property
    def n_features(self) -> int:
        return self.thetas.shape[1]

    @property
    def output_dim(self) -> int:
        return self.targets.shape[1]


@dataclass(frozen=True)
class LeafProblem:
    """Aggregated quantities of one leaf's weight subproblem.

    centers are the prior predictions yhat^(k-1) of the samples whose ball
    constraints the leaf must respect; all of them lie in the closed ball by
    the feasibility induction, so w = 0 is always feasible.
    """

    gradient_sum: np.ndarray
    hessian_scale: float
    centers: np.ndarray
    l2_penalty: float = 0.0


def gradients(y_true: np.ndarray, y_pred: np.ndarray) -> tuple[np.ndarray, float]:
    """Gradient and scalar Hessian multiplier of the squared loss
    l = 1/2 ||y - yhat||^2: g = yhat - y, h = 1 (identity Hessian)."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred shapes differ")
    return y_pred - y_true, 1.0


def _project_ball(x: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    delta = x - center
    norm = float(np.linalg.norm(delta))
    if norm <= radius:
        return x
    return center + delta * (radius / norm)


def solve_leaf_qcqp(
    problem: LeafProblem,
    radius: float = DEFAULT_RADIUS,
    max_iter: int = 10_000,
    tol: float = 1e-10,
) -> np.ndarray:
    """Minimize G^T w + 1/2 (H + lambda) ||w||^2 over the intersection of the
    balls ||w + c_i|| <= radius.

    The unconstrained minimizer is returned exactly when it is feasible with
    margin 1e-12; otherwise the answer is its Euclidean projection onto the
    feasible set (single-ball closed form, Dykstra beyond that).
    """
    g = np.asarray(problem.gradient_sum, dtype=float).ravel()
    scale = problem.hessian_scale + problem.l2_penalty
    if scale <= 0.0:
        raise ValueError("Hessian scale plus l2 penalty must be positive")
    centers = np.atleast_2d(np.asarray(problem.centers, dtype=float))
    if centers.shape[0] == 0:
        return -g / scale
    center_norms = np.linalg.norm(centers, axis=1)
    if center_norms.max() > radius + 1e-9:
        raise ValueError("infeasible leaf: a prior prediction lies outside the ball")

    w_star = -g / scale
    dists = np.linalg.norm(w_star + centers, axis=1)
    if dists.max() <= radius - 1e-12:
        return w_star

    ball_centers = -centers
    if centers.shape[0] == 1:
        return _project_ball(w_star, ball_centers[0], radius)

    x = w_star.copy()
    increments = np.zeros_like(centers)
    for _ in range(max_iter):
        shift = 0.0
        for i in range(centers.shape[0]):
            s = x + increments[i]
            x_new = _project_ball(s, ball_centers[i], radius)
            increments[i] = s - x_new
            shift = max(shift, float(np.max(np.abs(x_new - x))))
            x = x_new
        if shift < tol:
            violation = np.linalg.norm(x + centers, axis=1).max() - radius
            if violation <= 1e-9:
                return x
    raise SolverFailure(
        f"Dykstra projection did not converge within {max_iter} cycles"
    )


def _leaf_objective(w: np.ndarray, g_sum: np.ndarray, scale: float) -> float:
    return float(g_sum @ w + 0.5 * scale * (w @ w))


def _solve_leaf(
    g_sum: np.ndarray,
    count: int,
    centers: np.ndarray | None,
    center_norm_max: float,
    cfg: TrainConfig,
    radius: float,
) -> tuple[np.ndarray, float]:
    """Leaf weight and its objective value.  A triangle-inequality shortcut
    skips the per-center feasibility scan in the common interior case."""
    scale = count + cfg.l2_penalty
    w = -g_sum / scale
    if cfg.enforce_ball:
        if center_norm_max + float(np.linalg.norm(w)) > radius - 1e-12:
            problem = LeafProblem(g_sum, float(count), centers, cfg.l2_penalty)
            try:
                w = solve_leaf_qcqp(problem, radius)
            except SolverFailure:
                w = np.zeros_like(g_sum)
    return w, _leaf_objective(w, g_sum, scale)


def grow_tree(
    thetas: np.ndarray,
    grads: np.ndarray,
    centers: np.ndarray,
    inbag: np.ndarray,
    routed: np.ndarray,
    cfg: TrainConfig,
    radius: float = DEFAULT_RADIUS,
) -> TreeNode:
    """Grow one regression tree by exact greedy search.

    Split candidates are the midpoints between consecutive distinct sorted
    feature values of the in-bag samples; each candidate's children are
    scored with their constrained leaf solutions, and the split with maximal
    gain = parent objective - child objectives - leaf_penalty is kept while
    positive.  ``routed`` carries every training sample through the tree so
    out-of-bag predictions also stay inside the ball when subsampling.
    """
    center_norms = np.linalg.norm(centers, axis=1)

    def node_solve(rows_inbag: np.ndarray, rows_all: np.ndarray):
        g_sum = grads[rows_inbag].sum(axis=0)
        return _solve_leaf(
            g_sum,
            len(rows_inbag),
            centers[rows_all],
            float(center_norms[rows_all].max()),
            cfg,
            radius,
        )

    def build(rows_inbag: np.ndarray, rows_all: np.ndarray, depth: int) -> TreeNode:
        w, parent_obj = node_solve(rows_inbag, rows_all)
        if depth >= cfg.max_depth or len(rows_inbag) < max(2, cfg.min_samples_leaf):
            return Leaf(w)
        best_gain = 0.0
        best = None
        for j in range(thetas.shape[1]):
            values = thetas[rows_inbag, j]
            order = np.argsort(values, kind="stable")
            sorted_vals = values[order]
            sorted_grads = np.cumsum(grads[rows_inbag][order], axis=0)
            g_total = sorted_grads[-1]
            for p in range(1, len(rows_inbag)):
                if sorted_vals[p] <= sorted_vals[p - 1]:
                    continue
                if p < cfg.min_samples_leaf or len(rows_inbag) - p < cfg.min_samples_leaf:
                    continue
                tau = 0.5 * (sorted_vals[p - 1] + sorted_vals[p])
                left_all = rows_all[thetas[rows_all, j] < tau]
                right_all = rows_all[thetas[rows_all, j] >= tau]
                _, left_obj = _solve_leaf(
                    sorted_grads[p - 1], p, centers[left_all],
                    float(center_norms[left_all].max()), cfg, radius,
                )
                _, right_obj = _solve_leaf(
                    g_total - sorted_grads[p - 1], len(rows_inbag) - p,
                    centers[right_all], float(center_norms[right_all].max()),
                    cfg, radius,
                )
                gain = parent_obj - left_obj - right_obj - cfg.leaf_penalty
                if gain > best_gain:
                    best_gain = gain
                    best = (j, tau)
        if best is None:
            return Leaf(w)
        j, tau = best
        left_in = rows_inbag[thetas[rows_inbag, j] < tau]
        right_in = rows_inbag[thetas[rows_inbag, j] >= tau]
        left_all = rows_all[thetas[rows_all, j] < tau]
        right_all = rows_all[thetas[rows_all, j] >= tau]
        return Split(
            feature=j,
            threshold=tau,
            left=build(left_in, left_all, depth + 1),
            right=build(right_in, right_all, depth + 1),
        )

    return build(inbag, routed, 0)


def fit(dataset: EmbeddedDataset, cfg: TrainConfig, radius: float = DEFAULT_RADIUS) -> Ensemble:
    """Train the constrained ensemble (Algorithm: K rounds of gradient
    computation, optional seeded row subsampling, greedy tree growth with
    per-leaf QCQP weights, shrinkage update)."""
    thetas = dataset.thetas
    targets = dataset.targets
    n, dim = targets.shape
    preds = np.zeros_like(targets)
    rng = np.random.default_rng(cfg.rng_seed)
    all_rows = np.arange(n)
    trees = []
    prev_loss = 0.5 * float(np.sum(targets * targets))
    for _ in range(cfg.rounds):
        grads = preds - targets
        if cfg.subsample < 1.0:
            size = max(1, int(round(cfg.subsample * n)))
            inbag = np.sort(rng.choice(n, size=size, replace=False))
        else:
            inbag = all_rows
        tree = grow_tree(thetas, grads, preds, inbag, all_rows, cfg, radius)
        trees.append(tree)
        step = np.zeros_like(preds)
        _tree_apply(tree, thetas, step, all_rows)
        preds = preds + cfg.learning_rate * step
        if cfg.enforce_ball:
            worst = float(np.linalg.norm(preds, axis=1).max())
            if worst > radius + 1e-9:
                raise RuntimeError(
                    f"ball feasibility violated during training: {worst:.12f}"
                )
        if cfg.subsample >= 1.0:
            loss = 0.5 * float(np.sum((targets - preds) ** 2))
            if loss > prev_loss + 1e-9:
                raise RuntimeError("training loss increased on a full-sample round")
            prev_loss = loss
    return Ensemble(trees=tuple(trees), learning_rate=cfg.learning_rate, output_dim=dim)
