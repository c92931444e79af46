"""Experiment orchestration: splits, cross-validation, metrics, statistics.

The relative reconstruction error of a predicted basis is
||D - Phi Phi^T D||_F / ||D||_F, never below the rank-r truncation floor
sqrt(sum_{i>r} s_i^2 / sum_i s_i^2) of the case's own singular spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .baseline import InterpModel, interp_predict
from .chart import Chart, RADIUS, build_chart, embed, select_reference, wrap_back
from .cxgboost import EmbeddedDataset, Ensemble, TrainConfig, fit
from .grassmann import PodBasis
from .pod import SnapshotMatrix, compute_pod

__all__ = [
    "ErrorStats",
    "Case",
    "CaseRecord",
    "TrainedModel",
    "split_mod3",
    "kfold",
    "relative_error",
    "truncation_floor",
    "train_model",
    "baseline_from_model",
    "evaluate_method",
    "run_split_experiment",
    "run_cv",
]

CLIP_NORM = RADIUS - 1e-9


@dataclass(frozen=True)
class ErrorStats:
    """The seven reported statistics of a per-case error sample."""

    mean: float
    std: float
    median: float
    q25: float
    q75: float
    min: float
    max: float

    def __post_init__(self):
        ordered = (self.min, self.q25, self.median, self.q75, self.max)
        if any(a > b + 1e-12 for a, b in zip(ordered, ordered[1:])) or self.std < 0.0:
            raise ValueError(f"inconsistent statistics {self}")

    @classmethod
    def from_values(cls, values) -> "ErrorStats":
        v = np.asarray(list(values), dtype=float)
        if v.size == 0:
            raise ValueError("no values to aggregate")
        q25, median, q75 = np.percentile(v, [25.0, 50.0, 75.0])
        return cls(
            mean=float(v.mean()),
            std=float(v.std()),
            median=float(median),
            q25=float(q25),
            q75=float(q75),
            min=float(v.min()),
            max=float(v.max()),
        )

    def as_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "median": self.median,
            "q25": self.q25,
            "q75": self.q75,
            "min": self.min,
            "max": self.max,
        }


def split_mod3(sorted_params: list) -> tuple[list[int], list[int]]:
    """0-based deterministic split: index i goes to training iff i mod 3 == 0."""
    items = list(sorted_params)
    if any(b < a for a, b in zip(items, items[1:])):
        raise ValueError("parameters must be sorted ascending")
    train = [i for i in range(len(items)) if i % 3 == 0]
    test = [i for i in range(len(items)) if i % 3 != 0]
    return train, test


def kfold(n_items: int, k: int = 5, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Seeded shuffle followed by contiguous near-equal folds; each index
    appears in exactly one test fold."""
    if k < 1 or k > n_items:
        raise ValueError(f"need 1 <= k <= {n_items}, got k = {k}")
    perm = np.random.default_rng(seed).permutation(n_items)
    folds = np.array_split(perm, k)
    out = []
    for i, test in enumerate(folds):
        train = np.concatenate([folds[j] for j in range(k) if j != i]) if k > 1 else np.array([], dtype=int)
        out.append((np.sort(train), np.sort(test)))
    return out


def relative_error(d_true: SnapshotMatrix, basis: PodBasis) -> float:
    """||Phi Phi^T D - D||_F / ||D||_F (projection reconstruction)."""
    d = d_true.data
    if basis.n != d.shape[0]:
        raise ValueError("basis and snapshots disagree on ambient dimension")
    total = float(np.linalg.norm(d))
    if total == 0.0:
        raise ValueError("zero-norm snapshot matrix")
    phi = basis.matrix
    return float(np.linalg.norm(d - phi @ (phi.T @ d))) / total


def truncation_floor(singular_values: np.ndarray, rank: int) -> float:
    """Smallest relative error achievable at the given rank."""
    s = np.asarray(singular_values, dtype=float)
    total = float(s @ s)
    if total == 0.0:
        return 0.0
    tail = float(s[rank:] @ s[rank:])
    return float(np.sqrt(max(tail, 0.0) / total))


@dataclass(frozen=True)
class Case:
    """One parameter point with its snapshot matrix.

    POD results are memoized per rank; cross-validation revisits each case
    several times and the thin SVD dominates at wave scale.
    """

    theta: np.ndarray
    snapshots: SnapshotMatrix
    _pods: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        theta = np.atleast_1d(np.array(self.theta, dtype=float)).ravel()
        theta.flags.writeable = False
        object.__setattr__(self, "theta", theta)

    def pod(self, rank: int):
        if rank not in self._pods:
            self._pods[rank] = compute_pod(self.snapshots, rank)
        return self._pods[rank]


@dataclass(frozen=True)
class CaseRecord:
    method: str
    theta: tuple
    error: float
    floor: float
    clipped: bool = False
    status: str = "ok"


@dataclass
class TrainedModel:
    """Chart plus fitted ensemble; predictions outside the ball are clipped
    radially (counted), mirroring the baseline's guard."""

    chart: Chart
    ensemble: Ensemble
    config: TrainConfig
    rank: int
    problem: str
    train_thetas: np.ndarray
    train_targets: np.ndarray
    reference_policy: str | int = "minimax"
    clip_count: int = field(default=0, compare=False)

    def predict_y(self, theta: np.ndarray) -> np.ndarray:
        y = self.ensemble.predict(theta)
        norm = float(np.linalg.norm(y))
        if norm > CLIP_NORM:
            y = y * (CLIP_NORM / norm)
            self.clip_count += 1
        return y

    def predict_basis(self, theta: np.ndarray) -> PodBasis:
        return wrap_back(self.chart, self.predict_y(theta))


def train_model(
    cases: list[Case],
    rank: int,
    cfg: TrainConfig,
    reference_policy: str | int = "minimax",
    problem: str = "",
) -> TrainedModel:
    """POD per training case, reference selection, chart build, embedding,
    constrained boosting fit."""
    if not cases:
        raise ValueError("no training cases")
    bases = [c.pod(rank).basis for c in cases]
    thetas = np.vstack([c.theta for c in cases])
    ref_idx = select_reference(bases, thetas, reference_policy)
    chart = build_chart(bases[ref_idx])
    ys = np.vstack([embed(chart, b) for b in bases])
    dataset = EmbeddedDataset(thetas, ys)
    ensemble = fit(dataset, cfg)
    return TrainedModel(
        chart=chart,
        ensemble=ensemble,
        config=cfg,
        rank=rank,
        problem=problem,
        train_thetas=thetas,
        train_targets=ys,
        reference_policy=reference_policy,
    )


def baseline_from_model(model: TrainedModel, scheme: str = "auto") -> InterpModel:
    """Interpolation baseline over the identical chart and embeddings, so the
    regressor is the only varying component."""
    return InterpModel(
        chart=model.chart,
        thetas=model.train_thetas,
        targets=model.train_targets,
        scheme=scheme,
    )


def _predict_for(method: str, model: TrainedModel | None, baseline: InterpModel | None, theta):
    if method == "cxgb":
        before = model.clip_count
        y = model.predict_y(theta)
        return wrap_back(model.chart, y), model.clip_count > before
    if method == "interp":
        before = baseline.clip_count
        y = interp_predict(baseline, theta)
        return wrap_back(baseline.chart, y), baseline.clip_count > before
    raise ValueError(f"unknown method {method!r}")


def evaluate_method(
    method: str,
    cases: list[Case],
    rank: int,
    model: TrainedModel | None = None,
    baseline: InterpModel | None = None,
) -> tuple[list[CaseRecord], ErrorStats | None]:
    """Per-case relative errors and their statistics for one method.

    ``oracle`` uses each case's own POD basis and lands exactly on the
    truncation floor.  Prediction failures are recorded per case, not fatal.
    """
    records = []
    errors = []
    for case in cases:
        pod = case.pod(rank)
        floor = truncation_floor(pod.singular_values, rank)
        clipped = False
        try:
            if method == "oracle":
                basis = pod.basis
            else:
                basis, clipped = _predict_for(method, model, baseline, case.theta)
            err = relative_error(case.snapshots, basis)
        except Exception as exc:  # recorded, not fatal
            records.append(
                CaseRecord(
                    method=method,
                    theta=tuple(case.theta.tolist()),
                    error=float("nan"),
                    floor=floor,
                    clipped=clipped,
                    status=f"failed: {type(exc).__name__}: {exc}",
                )
            )
            continue
        if err < floor - 1e-9:
            raise RuntimeError(
                f"error {err} below the truncation floor {floor}; metric bug"
            )
        records.append(
            CaseRecord(
                method=method,
                theta=tuple(case.theta.tolist()),
                error=err,
                floor=floor,
                clipped=clipped,
            )
        )
        errors.append(err)
    stats = ErrorStats.from_values(errors) if errors else None
    return records, stats


def run_split_experiment(
    train_cases: list[Case],
    test_cases: list[Case],
    rank: int,
    cfg: TrainConfig,
    methods: tuple[str, ...] = ("cxgb", "interp"),
    reference_policy: str | int = "minimax",
    problem: str = "",
) -> dict:
    """Train once on the training split and evaluate each method on the test
    split."""
    model = train_model(train_cases, rank, cfg, reference_policy, problem)
    baseline = baseline_from_model(model) if "interp" in methods else None
    out = {"records": [], "stats": {}, "model": model, "baseline": baseline}
    for method in methods:
        records, stats = evaluate_method(
            method, test_cases, rank, model=model, baseline=baseline
        )
        out["records"].extend(records)
        out["stats"][method] = stats
    return out


def run_cv(
    cases: list[Case],
    rank: int,
    cfg: TrainConfig,
    k: int = 5,
    seed: int = 0,
    methods: tuple[str, ...] = ("cxgb", "interp"),
    reference_policy: str | int = "minimax",
    problem: str = "",
) -> dict:
    """K-fold cross-validation with pooled per-case errors per method."""
    folds = kfold(len(cases), k, seed)
    records = []
    fold_stats = []
    pooled: dict[str, list[float]] = {m: [] for m in methods}
    for fold_idx, (train_idx, test_idx) in enumerate(folds):
        result = run_split_experiment(
            [cases[i] for i in train_idx],
            [cases[i] for i in test_idx],
            rank,
            cfg,
            methods,
            reference_policy,
            problem,
        )
        entry = {"fold": fold_idx, "stats": {}}
        for method in methods:
            method_records = [r for r in result["records"] if r.method == method]
            records.extend((fold_idx, r) for r in method_records)
            ok = [r.error for r in method_records if r.status == "ok"]
            pooled[method].extend(ok)
            entry["stats"][method] = (
                ErrorStats.from_values(ok) if ok else None
            )
        fold_stats.append(entry)
    pooled_stats = {
        m: ErrorStats.from_values(v) if v else None for m, v in pooled.items()
    }
    return {
        "records": records,
        "fold_stats": fold_stats,
        "pooled": pooled_stats,
        "seed": seed,
        "folds": k,
    }
