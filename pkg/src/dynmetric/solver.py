"""LogDet metric learning with dynamically regenerated pair constraints.

Each training cycle rebuilds the nearest-neighbor pair sets under the
previous metric, then runs cyclic Bregman projections (one closed-form
rank-one update per pair) until the dual variables settle.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .constraints import PairSet, build_pairset
from .dataset import Dataset
from .errors import DegenerateDataset, InputError, NumericalBreakdown, SingleClassDataset
from .metric import MahalanobisMetric, is_psd, min_eigenvalue, pairwise_distances, rank_one_update_

log = logging.getLogger(__name__)

EPS = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    gamma: float = 1.0
    cycles: int = 5
    max_sweeps: int = 1000
    conv_tol: float = 1e-3
    percentile_low: float = 5.0
    percentile_high: float = 95.0
    pair_sample_cap: int = 10000
    seed: int = 0
    rescale_thresholds: bool = False
    carry_slack: bool = True

    def __post_init__(self):
        if not self.gamma > 0:
            raise InputError(f"gamma must be > 0, got {self.gamma}")
        if self.cycles < 0:
            raise InputError(f"cycles must be >= 0, got {self.cycles}")
        if self.max_sweeps < 1:
            raise InputError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        if not self.conv_tol > 0:
            raise InputError(f"conv_tol must be > 0, got {self.conv_tol}")
        if not 0 < self.percentile_low < self.percentile_high < 100:
            raise InputError("percentiles must satisfy 0 < low < high < 100")
        if self.pair_sample_cap < 1:
            raise InputError("pair_sample_cap must be >= 1")


@dataclass(frozen=True)
class Thresholds:
    upper: float  # U, bound for similar pairs
    lower: float  # L, bound for dissimilar pairs

    def __post_init__(self):
        if not 0 < self.upper <= self.lower:
            raise ValueError(f"thresholds must satisfy 0 < U <= L, got U={self.upper}, L={self.lower}")


def _nearest_rank(sorted_vals, pct):
    rank = max(1, math.ceil(pct / 100.0 * len(sorted_vals)))
    return float(sorted_vals[rank - 1])


def _sampled_pair_distances(X, A, cap, seed):
    n = X.shape[0]
    if n * (n - 1) // 2 <= cap:
        D = pairwise_distances(X, A)
        return D[np.triu_indices(n, k=1)]
    rng = np.random.default_rng(seed)
    i = rng.integers(n, size=cap)
    j = rng.integers(n - 1, size=cap)
    j += j >= i
    Z = X[i] - X[j]
    return np.maximum(np.einsum("ij,ij->i", Z @ A, Z), 0.0)


def compute_thresholds(ds: Dataset, cfg: SolverConfig, metric=None) -> Thresholds:
    """Nearest-rank percentiles of pairwise squared distances as (U, L).

    Distances are Euclidean unless ``metric`` is given. When there are more
    than ``cfg.pair_sample_cap`` pairs a seeded uniform sample is used.
    """
    if ds.n < 2:
        raise DegenerateDataset("need at least 2 samples to compute thresholds")
    A = np.eye(ds.dim) if metric is None else metric.matrix
    dists = np.sort(_sampled_pair_distances(ds.X, A, cfg.pair_sample_cap, cfg.seed))
    positive = dists[dists > 0]
    if positive.size == 0:
        raise DegenerateDataset("all samples are identical; no positive pair distance")
    upper = _nearest_rank(dists, cfg.percentile_low)
    lower = _nearest_rank(dists, cfg.percentile_high)
    if upper <= 0:
        upper = float(positive[0])
    if lower <= upper:
        lower = upper * (1 + 1e-6)
    return Thresholds(upper, lower)


@dataclass
class SolverState:
    """Mutable state of one cycle's projection loop.

    ``A`` is the working metric (a writable array), ``prior`` the metric the
    cycle started from. ``diffs``, ``sign``, ``slack`` and ``multiplier`` are
    aligned with ``pairs``: row ``t`` of ``diffs`` is ``x_i - x_j`` for pair
    ``t``, ``sign`` is +1/-1 for similar/dissimilar.
    """

    A: np.ndarray
    prior: MahalanobisMetric
    thresholds: Thresholds
    pairs: list
    diffs: np.ndarray
    sign: np.ndarray
    slack: np.ndarray
    multiplier: np.ndarray
    skipped: set = field(default_factory=set)

    @classmethod
    def start(cls, X, pairset: PairSet, prior: MahalanobisMetric, thresholds: Thresholds, carried=None):
        """Warm start from ``prior`` with zero duals.

        Slack starts at U (similar) or L (dissimilar), except for pairs found
        in ``carried``, a ``{(pair.key, pair.relation): slack}`` map from the
        previous cycle.
        """
        pairs = list(pairset)
        d = X.shape[1]
        if pairs:
            ii = np.array([p.i for p in pairs])
            jj = np.array([p.j for p in pairs])
            diffs = X[ii] - X[jj]
        else:
            diffs = np.empty((0, d))
        sign = np.array([p.relation.sign for p in pairs], dtype=float)
        slack = np.where(sign > 0, thresholds.upper, thresholds.lower)
        if carried:
            for t, p in enumerate(pairs):
                slack[t] = carried.get((p.key, p.relation), slack[t])
        return cls(
            A=np.array(prior.matrix),
            prior=prior,
            thresholds=thresholds,
            pairs=pairs,
            diffs=diffs,
            sign=sign,
            slack=slack,
            multiplier=np.zeros(len(pairs)),
        )

    @property
    def metric(self) -> MahalanobisMetric:
        return MahalanobisMetric(self.A)

    def slack_by_pair(self) -> dict:
        return {(p.key, p.relation): float(s) for p, s in zip(self.pairs, self.slack)}


def project_pair(state: SolverState, t: int, gamma: float) -> float:
    """Bregman projection of the working metric onto the constraint of pair ``t``.

    Updates ``state`` in place and returns the step ``alpha`` (0 when the pair
    is skipped because its points coincide under the current metric).
    """
    z = state.diffs[t]
    Az = state.A @ z
    p = float(z @ Az)
    if p <= EPS:
        if t not in state.skipped:
            state.skipped.add(t)
            pair = state.pairs[t]
            log.warning("pair (%d, %d) has zero distance; skipped", pair.i, pair.j)
        return 0.0

    delta = state.sign[t]
    xi = state.slack[t]
    lam = state.multiplier[t]
    alpha = min(lam, delta / 2.0 * (1.0 / p - gamma / xi))
    if alpha == 0.0:
        return 0.0

    denom = 1.0 - delta * alpha * p
    if denom <= EPS:
        raise NumericalBreakdown(f"1 - delta*alpha*p = {denom!r} for pair {state.pairs[t]}")
    slack_denom = gamma + delta * alpha * xi
    if slack_denom <= EPS:
        raise NumericalBreakdown(f"gamma + delta*alpha*xi = {slack_denom!r} for pair {state.pairs[t]}")

    beta = delta * alpha / denom
    state.slack[t] = gamma * xi / slack_denom
    state.multiplier[t] = lam - alpha
    rank_one_update_(state.A, z, beta, Az)
    return alpha


@dataclass(frozen=True)
class Convergence:
    sweeps: int
    conv: float


def inner_solve(state: SolverState, cfg: SolverConfig) -> Convergence:
    """Sweep all pairs in order until the normalized multiplier change drops below tolerance."""
    if not state.pairs:
        return Convergence(0, 0.0)
    gamma = cfg.gamma
    npairs = len(state.pairs)
    conv = math.inf
    sweep = 0
    while sweep < cfg.max_sweeps:
        sweep += 1
        moved = 0.0
        for t in range(npairs):
            moved += abs(project_pair(state, t, gamma))
        conv = moved / max(1.0, float(np.abs(state.multiplier).sum()))
        if conv < cfg.conv_tol:
            break
    return Convergence(sweep, conv)


@dataclass
class CycleRecord:
    cycle: int
    n_similar: int
    n_dissimilar: int
    sweeps: int
    conv: float
    elapsed_ms: float
    pairs: PairSet = field(repr=False, compare=False)
    metric: MahalanobisMetric = field(repr=False, compare=False)

    def summary(self) -> str:
        return (
            f"cycle {self.cycle}: |S|={self.n_similar} |D|={self.n_dissimilar} "
            f"sweeps={self.sweeps} conv={self.conv:.3g} time={self.elapsed_ms:.1f}ms"
        )


@dataclass
class TrainingLog:
    thresholds: Thresholds | None
    cycles: list = field(default_factory=list)
    total_ms: float = 0.0

    def to_dict(self):
        return {
            "thresholds": None if self.thresholds is None else asdict(self.thresholds),
            "cycles": [
                {k: getattr(c, k) for k in ("cycle", "n_similar", "n_dissimilar", "sweeps", "conv", "elapsed_ms")}
                for c in self.cycles
            ],
            "total_ms": self.total_ms,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)


def train(ds: Dataset, cfg: SolverConfig = SolverConfig()):
    """Learn a metric on ``ds``.

    Starts from the identity; every cycle rebuilds the pairs under the
    previous metric, uses that metric as the prior and warm start, zeroes the
    multipliers and projects to convergence. New pairs start with slack at the
    thresholds. A pair that was also in the previous cycle keeps its final
    slack when ``cfg.carry_slack`` is set; otherwise every cycle restarts from
    the thresholds, which lets the same violated pairs be pushed again each
    cycle.

    Returns
    -------
    metric : MahalanobisMetric
    log : TrainingLog
    """
    if len(ds.class_table) < 2:
        raise SingleClassDataset(f"need at least 2 classes, found {len(ds.class_table)}")
    t_start = time.perf_counter()
    metric = MahalanobisMetric.identity(ds.dim)
    if cfg.cycles == 0:
        return metric, TrainingLog(None)
    thresholds = compute_thresholds(ds, cfg)
    tlog = TrainingLog(thresholds)
    carried = None
    for k in range(1, cfg.cycles + 1):
        t0 = time.perf_counter()
        pairs = build_pairset(ds, metric, k)
        if cfg.rescale_thresholds and k > 1:
            thresholds = compute_thresholds(ds, cfg, metric)
        state = SolverState.start(ds.X, pairs, metric, thresholds, carried)
        try:
            rec = inner_solve(state, cfg)
        except NumericalBreakdown as exc:
            raise NumericalBreakdown(f"cycle {k}: {exc}") from exc
        metric = state.metric
        if cfg.carry_slack:
            carried = state.slack_by_pair()
        if not is_psd(metric):
            raise NumericalBreakdown(f"cycle {k}: metric lost PSD (min eigenvalue {min_eigenvalue(metric):.3g})")
        elapsed = (time.perf_counter() - t0) * 1e3
        tlog.cycles.append(
            CycleRecord(k, len(pairs.similar), len(pairs.dissimilar), rec.sweeps, rec.conv, elapsed, pairs, metric)
        )
        log.info(tlog.cycles[-1].summary())
    tlog.total_ms = (time.perf_counter() - t_start) * 1e3
    return metric, tlog
