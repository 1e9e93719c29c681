"""Learning a contour and exponent for stable-rank interleaving distances.

Parameters ``theta = (mu_1..mu_k, sigma_1..sigma_k, lambda_2..lambda_k, p)``
define the density ``floor + sum_i lambda_i N(mu_i, sigma_i)`` with
``lambda_1 = 1``. Distances are interleaving distances between stable ranks
with ``q = 1``. The loss rewards small intra-class and large inter-class
distances and is minimized by projected gradient descent with heavy-ball
momentum on finite-difference gradients.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .barcode import INF, Barcode
from .contours import DEFAULT_FLOOR, GaussianMixtureContour
from .distances import MetricChoice, pairwise_matrix
from .stable_rank import interleaving_fast

LABELS = ("A", "B")
FD_REL_STEP = 1e-5


@dataclass(frozen=True)
class LabeledDataset:
    """Samples ``(id, barcode, label)`` with labels in ``{"A", "B"}``."""

    ids: tuple[str, ...]
    barcodes: tuple[Barcode, ...]
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if not (len(self.ids) == len(self.barcodes) == len(self.labels)):
            raise ValueError("ids, barcodes and labels must have equal length")
        bad = set(self.labels) - set(LABELS)
        if bad:
            raise ValueError(f"labels must be A or B, got {sorted(bad)}")

    @classmethod
    def from_samples(cls, samples: Sequence[tuple[str, Barcode, str]]) -> "LabeledDataset":
        ids, bcs, labels = zip(*samples) if samples else ((), (), ())
        return cls(tuple(ids), tuple(bcs), tuple(labels))

    def __len__(self) -> int:
        return len(self.ids)

    def check_both_labels(self) -> None:
        if set(self.labels) != set(LABELS):
            raise ValueError("dataset must contain both labels A and B")

    def filtration_range(self) -> float:
        ends = [v for X in self.barcodes for b in X for v in (b.birth, b.death) if math.isfinite(v)]
        return max(ends, default=1.0) or 1.0


@dataclass(frozen=True)
class MetricParams:
    """Mixture means, widths, weights ``lambda_2..lambda_k`` and exponent ``p``."""

    mu: tuple[float, ...]
    sigma: tuple[float, ...]
    lam: tuple[float, ...]
    p: float
    floor: float = DEFAULT_FLOOR

    def __post_init__(self) -> None:
        k = len(self.mu)
        if k < 1 or len(self.sigma) != k or len(self.lam) != k - 1:
            raise ValueError("need k means, k widths and k-1 weights")
        for name in ("mu", "sigma", "lam"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        object.__setattr__(self, "p", float(self.p))

    @property
    def k(self) -> int:
        return len(self.mu)

    @property
    def weights(self) -> tuple[float, ...]:
        return (1.0,) + self.lam

    def to_vector(self) -> np.ndarray:
        return np.array(self.mu + self.sigma + self.lam + (self.p,))

    @classmethod
    def from_vector(cls, v: Sequence[float], k: int, floor: float = DEFAULT_FLOOR) -> "MetricParams":
        v = [float(x) for x in v]
        if len(v) != 3 * k:
            raise ValueError(f"expected {3 * k} parameters for k={k}, got {len(v)}")
        return cls(tuple(v[:k]), tuple(v[k:2 * k]), tuple(v[2 * k:3 * k - 1]), v[-1], floor)

    def is_feasible(self, sigma_min: float = 0.0, lam_min: float = 0.0) -> bool:
        return (self.p >= 1 and all(s > 0 and s >= sigma_min for s in self.sigma)
                and all(w > 0 and w >= lam_min for w in self.lam))

    def contour(self) -> GaussianMixtureContour:
        return GaussianMixtureContour.from_params(self.mu, self.sigma, self.weights, self.floor)

    def metric(self) -> MetricChoice:
        return MetricChoice(p=self.p, q=1.0, contour=self.contour())

    def to_dict(self) -> dict:
        return asdict(self)


def project(theta: MetricParams, sigma_min: float, lam_min: float) -> MetricParams:
    """Clip onto ``{p >= 1, sigma_i >= sigma_min, lambda_i >= lam_min}``."""
    return MetricParams(theta.mu, tuple(max(s, sigma_min) for s in theta.sigma),
                        tuple(max(w, lam_min) for w in theta.lam), max(theta.p, 1.0), theta.floor)


def random_params(rng: np.random.Generator, k: int, span: float, floor: float = DEFAULT_FLOOR) -> MetricParams:
    """Random feasible start: means over the range, widths 2-50% of it, weights in [0.5, 2], p in [1, 10]."""
    return MetricParams(
        mu=tuple(rng.uniform(0.0, span, size=k)),
        sigma=tuple(rng.uniform(0.02 * span, 0.5 * span, size=k)),
        lam=tuple(rng.uniform(0.5, 2.0, size=k - 1)),
        p=float(rng.uniform(1.0, 10.0)),
        floor=floor,
    )


class BarcodeBatch:
    """Barcodes padded into arrays so that all pairwise distances vectorize."""

    def __init__(self, barcodes: Sequence[Barcode]):
        fin = [[(b.birth, b.death) for b in X if not b.is_infinite] for X in barcodes]
        self.n_finite = np.array([len(f) for f in fin], dtype=int)
        self.n_infinite = np.array([X.n_infinite for X in barcodes], dtype=int)
        width = int(self.n_finite.max(initial=0))
        self.births = np.zeros((len(fin), width))
        self.deaths = np.zeros((len(fin), width))
        self.mask = np.zeros((len(fin), width), dtype=bool)
        for s, f in enumerate(fin):
            if f:
                arr = np.array(f)
                self.births[s, :len(f)] = arr[:, 0]
                self.deaths[s, :len(f)] = arr[:, 1]
                self.mask[s, :len(f)] = True

    def lifetimes(self, theta: MetricParams) -> np.ndarray:
        """Lifetimes under the contour of ``theta``; padding entries are ``inf``."""
        mu = np.array(theta.mu)
        sigma = np.array(theta.sigma)
        w = np.array(theta.weights)
        a = self.births[..., None]
        b = self.deaths[..., None]
        life = theta.floor * (self.deaths - self.births) + np.sum(
            w * (ndtr((b - mu) / sigma) - ndtr((a - mu) / sigma)), axis=-1)
        return np.where(self.mask, life, INF)

    def reversed_prefix_norms(self, life: np.ndarray, p: float) -> np.ndarray:
        """Row ``s`` holds ``P_s(n_s - i)`` for ``i = 0..width``, zero past ``n_s``."""
        S, width = life.shape
        srt = np.sort(life, axis=1)
        prefix = np.zeros((S, width + 1))
        if width:
            fin = np.where(np.isfinite(srt), srt, 0.0)
            if p == INF:
                prefix[:, 1:] = np.maximum.accumulate(fin, axis=1)
            elif p == 1.0:
                prefix[:, 1:] = np.cumsum(fin, axis=1)
            else:
                with np.errstate(divide="ignore"):
                    logs = np.where(fin > 0, p * np.log(np.where(fin > 0, fin, 1.0)), -INF)
                prefix[:, 1:] = np.exp(np.logaddexp.accumulate(logs, axis=1) / p)
        i = np.arange(width + 1)
        idx = self.n_finite[:, None] - i[None, :]
        out = np.take_along_axis(prefix, np.clip(idx, 0, width), axis=1)
        return np.where(idx >= 0, out, 0.0)

    def distance_matrix(self, theta: MetricParams) -> np.ndarray:
        R = self.reversed_prefix_norms(self.lifetimes(theta), theta.p)
        D = np.max(np.abs(R[:, None, :] - R[None, :, :]), axis=-1) if R.shape[1] else \
            np.zeros((len(R), len(R)))
        # q = 1, so kappa = 1
        D = np.where(self.n_infinite[:, None] == self.n_infinite[None, :], D, INF)
        np.fill_diagonal(D, 0.0)
        return np.maximum(D, D.T)


def distance_matrix(data: LabeledDataset, theta: MetricParams, jobs: int = 1) -> np.ndarray:
    """Pairwise interleaving distances under ``theta`` using one call per pair."""
    m = theta.metric()
    return pairwise_matrix(list(data.barcodes), lambda X, Y: interleaving_fast(X, Y, m), jobs=jobs)


def loss_from_matrix(D: np.ndarray, labels: Sequence[str]) -> float:
    """``sum_{A,A} d^2 / sum_{A,all} d^2 + sum_{B,B} d^2 / sum_{B,all} d^2`` over ordered pairs.

    Raises:
        ValueError: when a class has zero total squared distance.
    """
    is_a = np.array([lab == "A" for lab in labels])
    D2 = np.asarray(D, dtype=float) ** 2
    total = 0.0
    for cls in (is_a, ~is_a):
        den = D2[cls].sum()
        if not den > 0:
            raise ValueError("degenerate dataset: a class has zero total distance to the data")
        total += D2[np.ix_(cls, cls)].sum() / den
    return float(total)


class Objective:
    """Loss as a function of the parameter vector, with cached barcode arrays."""

    def __init__(self, data: LabeledDataset, k: int, floor: float = DEFAULT_FLOOR):
        data.check_both_labels()
        self.data = data
        self.k = k
        self.floor = floor
        self.batch = BarcodeBatch(data.barcodes)

    def params(self, v: Sequence[float]) -> MetricParams:
        return MetricParams.from_vector(v, self.k, self.floor)

    def __call__(self, v: Sequence[float]) -> float:
        return loss_from_matrix(self.batch.distance_matrix(self.params(v)), self.data.labels)


def loss(data: LabeledDataset, theta: MetricParams) -> float:
    return Objective(data, theta.k, theta.floor)(theta.to_vector())


def fd_steps(v: np.ndarray) -> np.ndarray:
    return FD_REL_STEP * np.maximum(1.0, np.abs(v))


def _grad(obj: Objective, v: np.ndarray) -> np.ndarray:
    h = fd_steps(v)
    g = np.zeros_like(v)
    base = None
    for i in range(len(v)):
        up = v.copy()
        up[i] += h[i]
        lo = v.copy()
        lo[i] -= h[i]
        fu = obj(up)
        # p is the last coordinate; step forward only where a backward probe leaves p >= 1
        if i == len(v) - 1 and lo[i] < 1.0:
            if base is None:
                base = obj(v)
            fl, width = base, h[i]
        else:
            fl, width = obj(lo), 2 * h[i]
        if not (math.isfinite(fu) and math.isfinite(fl)):
            raise ValueError(f"non-finite loss while probing coordinate {i}")
        g[i] = (fu - fl) / width
    return g


def grad_fd(data: LabeledDataset, theta: MetricParams) -> np.ndarray:
    """Central finite-difference gradient with steps ``1e-5 * max(1, |theta_i|)``.

    The exponent ``p`` uses a forward difference when the backward probe
    would drop below 1.
    """
    obj = Objective(data, theta.k, theta.floor)
    return _grad(obj, theta.to_vector())


def directional_estimates(obj: Objective, v: np.ndarray, u: np.ndarray, h: float) -> tuple[float, float]:
    """Central difference quotients of the loss along ``u`` at steps ``h`` and ``h/2``."""
    def quotient(s: float) -> float:
        return (obj(v + s * u) - obj(v - s * u)) / (2 * s)
    return quotient(h), quotient(h / 2)


@dataclass
class TrainConfig:
    iters: int = 2000
    step: float = 1e-2
    momentum: float = 0.9
    seed: int = 0
    k: int = 2
    sigma_min: float | None = None  # default 1e-3 * filtration range
    lam_min: float = 1e-4
    floor: float = DEFAULT_FLOOR
    theta0: list[float] | str = "random"

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown training config keys: {sorted(unknown)}")
        cfg = cls(**d)
        if cfg.iters < 0 or cfg.step <= 0 or not 0 <= cfg.momentum < 1 or cfg.k < 1:
            raise ValueError("invalid training config: need iters >= 0, step > 0, 0 <= momentum < 1, k >= 1")
        return cfg


@dataclass
class TrainResult:
    theta: MetricParams
    best_loss: float
    losses: list[float] = field(default_factory=list)
    best: list[float] = field(default_factory=list)
    thetas: list[np.ndarray] = field(default_factory=list)

    def trace_csv(self) -> str:
        k = self.theta.k
        names = [f"mu{i + 1}" for i in range(k)] + [f"sigma{i + 1}" for i in range(k)] \
            + [f"lambda{i + 2}" for i in range(k - 1)] + ["p"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "loss", "best"] + names)
        for it, (l, b, th) in enumerate(zip(self.losses, self.best, self.thetas)):
            w.writerow([it, repr(l), repr(b)] + [repr(float(x)) for x in th])
        return buf.getvalue()


def train(data: LabeledDataset, theta0: MetricParams, iters: int = 2000, step: float = 1e-2,
          momentum: float = 0.9, sigma_min: float | None = None, lam_min: float = 1e-4) -> TrainResult:
    """Projected heavy-ball gradient descent on the loss.

    Means and widths are stepped in units of the filtration range, so one
    ``step`` moves every coordinate by a comparable relative amount. After
    each update ``p``, the widths and the weights are clipped to the
    feasible set. Returns the best parameters seen and the loss trace; entry
    ``i`` of the trace is the loss at the ``i``-th iterate.

    Raises:
        ValueError: on an infeasible start or a non-finite loss.
    """
    span = data.filtration_range()
    sigma_min = 1e-3 * span if sigma_min is None else sigma_min
    if not theta0.is_feasible(sigma_min, lam_min):
        raise ValueError("initial parameters are not feasible")
    k = theta0.k
    obj = Objective(data, k, theta0.floor)
    scale = np.concatenate([np.full(2 * k, span), np.ones(k)])
    v = theta0.to_vector()
    vel = np.zeros_like(v)
    result = TrainResult(theta0, INF)
    for it in range(iters + 1):
        f = obj(v)
        if not math.isfinite(f):
            raise ValueError(f"non-finite loss at iteration {it}")
        if f < result.best_loss:
            result.best_loss = f
            result.theta = obj.params(v)
        result.losses.append(f)
        result.best.append(result.best_loss)
        result.thetas.append(v.copy())
        if it == iters:
            break
        g = _grad(obj, v)
        # scale**2: a unit step in range-normalized coordinates
        vel = momentum * vel - step * scale ** 2 * g
        v = project(obj.params(v + vel), sigma_min, lam_min).to_vector()
    return result


def params_from_config(cfg: TrainConfig, span: float) -> MetricParams:
    if cfg.theta0 == "random":
        return random_params(np.random.default_rng(cfg.seed), cfg.k, span, cfg.floor)
    if isinstance(cfg.theta0, str):
        raise ValueError(f"theta0 must be 'random' or a list of numbers, got {cfg.theta0!r}")
    return MetricParams.from_vector(cfg.theta0, cfg.k, cfg.floor)


def load_train_config(path: str | Path) -> TrainConfig:
    return TrainConfig.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
