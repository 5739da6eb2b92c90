"""Feature-design regression surrogate for the SZFDPC sum rate.

Raw samples are ``[p_1..p_N, Re(H) entries, Im(H) entries]``; a PCA-based
contribution score picks ``l = N + K*min(M, N)`` of them, which are mapped
to ``[1, log_b |x|]`` and fed to a linear regressor.
"""
from __future__ import annotations

import csv
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ao import solve
from .channels import ChannelSet, ScenarioConfig, generate_channels, snr_to_power
from .errors import DimensionError

LOG_FLOOR = 1e-12
SNR_SET = (0.0, 10.0, 20.0, 30.0, 40.0)
METHODS = ("ols", "ridge", "pcr")


@dataclass
class FeatureDataset:
    features: np.ndarray  # p x s, one column per sample
    targets: np.ndarray
    meta: tuple[int, int, int]

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.targets = np.asarray(self.targets, dtype=float)
        N, M, K = self.meta
        if self.features.shape[0] != N + 2 * N * M * K:
            raise DimensionError(
                f"expected {N + 2 * N * M * K} features for (N,M,K)={self.meta}, "
                f"got {self.features.shape[0]}")
        if self.features.shape[1] != self.targets.size:
            raise DimensionError("feature columns and targets disagree")
        if not (np.isfinite(self.features).all() and np.isfinite(self.targets).all()):
            raise ValueError("dataset contains non-finite entries")

    @property
    def n_samples(self):
        return self.targets.size

    def subset(self, idx):
        return FeatureDataset(self.features[:, idx], self.targets[idx], self.meta)


@dataclass
class FeatureDesign:
    selected: np.ndarray
    d: int
    log_base: float
    mean: np.ndarray
    scale: np.ndarray
    eigenvalues: np.ndarray | None = field(default=None, repr=False)


@dataclass
class RegressionModel:
    weights: np.ndarray
    method: str
    lam: float = 0.0
    design: FeatureDesign | None = None
    rank_deficient: bool = False

    def predict(self, Phi):
        return np.asarray(Phi) @ self.weights

    def to_dict(self):
        out = {"method": self.method, "lambda": self.lam,
               "weights": self.weights.tolist(), "rank_deficient": bool(self.rank_deficient)}
        if self.design is not None:
            dz = self.design
            out["design"] = {"selected": dz.selected.tolist(), "d": dz.d,
                             "log_base": dz.log_base, "mean": dz.mean.tolist(),
                             "scale": dz.scale.tolist()}
        return out

    @classmethod
    def from_dict(cls, data):
        design = None
        if "design" in data:
            dz = data["design"]
            design = FeatureDesign(np.array(dz["selected"], dtype=int), dz["d"], dz["log_base"],
                                   np.array(dz["mean"]), np.array(dz["scale"]))
        return cls(np.array(data["weights"]), data["method"], data["lambda"], design,
                   data.get("rank_deficient", False))


def raw_features(config: ScenarioConfig, chans: ChannelSet):
    H = np.stack(chans.channels)
    return np.concatenate([config.per_antenna_power, H.real.ravel(), H.imag.ravel()])


def sample_configs(n_tx, n_rx, n_users, n_samples=240, snrs=SNR_SET, seed=0, tolerance=1e-6):
    """Scenarios with SNRs cycled over ``snrs`` and flat-Dirichlet per-antenna ratios."""
    configs = []
    for i in range(n_samples):
        ss = np.random.SeedSequence([seed, i])
        rng = np.random.default_rng(ss)
        P = snr_to_power(snrs[i % len(snrs)])
        ratio = rng.dirichlet(np.ones(n_tx))
        ratio /= ratio.sum()
        configs.append(ScenarioConfig(n_tx, n_rx, n_users, P, P * ratio, tolerance,
                                      seed=int(ss.generate_state(1)[0])))
    return configs


def _solve_sample(config):
    chans = generate_channels(config)
    sol, _ = solve(config, chans)
    return raw_features(config, chans), sol.sum_rate


def build_dataset(configs, workers=1):
    """Run the AO solver on each scenario; columns follow ``configs`` order."""
    dims = {(c.n_tx, c.n_rx, c.n_users) for c in configs}
    if len(dims) != 1:
        raise DimensionError(f"all configs must share (N, M, K), got {sorted(dims)}")
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_solve_sample, configs, chunksize=4))
    else:
        results = [_solve_sample(c) for c in configs]
    X = np.column_stack([r[0] for r in results])
    y = np.array([r[1] for r in results])
    return FeatureDataset(X, y, dims.pop())


def n_selected(meta):
    N, M, K = meta
    return N + K * min(M, N)


def _standardize(X):
    mean = X.mean(axis=1)
    scale = X.std(axis=1, ddof=1)
    scale[~(scale > 0)] = 1.0
    return mean, scale


def select_features(train: FeatureDataset, log_base=np.e, standardize=False):
    """Rank raw features by their absolute loadings on the components with eigenvalue > 1.

    By default the eigenvalues are those of the sample covariance of the raw
    features. With ``standardize=True`` the correlation matrix is used instead.
    """
    X = train.features
    p, s = X.shape
    if s < 2:
        raise ValueError("need at least two samples")
    l = n_selected(train.meta)
    assert l < p
    mean, scale = _standardize(X)
    if not standardize:
        scale = np.ones(p)
    Z = (X - mean[:, None]) / scale[:, None]
    lam, U = np.linalg.eigh(Z @ Z.T / (s - 1))
    keep = lam > 1.0
    if not keep.any():
        keep[-1] = True
    contrib = np.abs(U[:, keep]).sum(axis=1)
    order = np.lexsort((np.arange(p), -np.round(contrib, 10)))
    return FeatureDesign(np.sort(order[:l]), int(keep.sum()), float(log_base), mean, scale,
                         lam[::-1])


def transform(design: FeatureDesign, x):
    """``[1, log_b max(|x_sel|, floor)]``; ``x`` is one sample or a p x s matrix."""
    x = np.asarray(x, dtype=float)
    sel = np.abs(x[design.selected])
    logs = np.log(np.maximum(sel, LOG_FLOOR)) / np.log(design.log_base)
    if x.ndim == 1:
        return np.concatenate([[1.0], logs])
    return np.vstack([np.ones(x.shape[1]), logs]).T


def _lstsq(Phi, y):
    w, _, rank, _ = np.linalg.lstsq(Phi, y, rcond=None)
    return w, rank < Phi.shape[1]


def fit(method, Phi, y, lam=1.0, pcr_threshold=1.0, allow_underdetermined=False):
    """Fit linear weights on a design matrix whose first column is the intercept."""
    Phi = np.asarray(Phi, dtype=float)
    y = np.asarray(y, dtype=float)
    s, n = Phi.shape
    method = method.lower()
    if method == "ols":
        if s < n and not allow_underdetermined:
            raise ValueError(f"OLS needs at least {n} samples, got {s}")
        w, deficient = _lstsq(Phi, y)
        if deficient:
            warnings.warn("rank-deficient OLS; using minimum-norm solution")
        return RegressionModel(w, "ols", 0.0, rank_deficient=deficient)
    if method == "ridge":
        if lam < 0:
            raise ValueError("ridge penalty must be nonnegative")
        pen = np.full(n, lam)
        pen[0] = 0.0
        w = np.linalg.solve(Phi.T @ Phi + np.diag(pen), Phi.T @ y)
        return RegressionModel(w, "ridge", float(lam))
    if method == "pcr":
        F = Phi[:, 1:]
        mean = F.mean(axis=0)
        scale = F.std(axis=0, ddof=1)
        scale[~(scale > 0)] = 1.0
        Z = (F - mean) / scale
        ev, U = np.linalg.eigh(Z.T @ Z / (s - 1))
        keep = ev > pcr_threshold
        if not keep.any():
            keep[-1] = True
        Uk = U[:, keep]
        beta, deficient = _lstsq(np.column_stack([np.ones(s), Z @ Uk]), y)
        coef = Uk @ beta[1:] / scale
        w = np.concatenate([[beta[0] - coef @ mean], coef])
        return RegressionModel(w, "pcr", 0.0, rank_deficient=deficient)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def fit_pipeline(train: FeatureDataset, method="ols", lam=1.0, log_base=np.e, standardize=False):
    design = select_features(train, log_base, standardize)
    model = fit(method, transform(design, train.features), train.targets, lam)
    model.design = design
    return model


def predict(model: RegressionModel, features):
    return model.predict(transform(model.design, features))


def fit_raw_ols(train: FeatureDataset):
    """Baseline: least squares on untransformed features (minimum norm if underdetermined)."""
    Phi = np.column_stack([np.ones(train.n_samples), train.features.T])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return fit("ols", Phi, train.targets, allow_underdetermined=True)


def predict_raw(model, features):
    features = np.atleast_2d(np.asarray(features, dtype=float).T).T
    return model.predict(np.column_stack([np.ones(features.shape[1]), features.T]))


def rrmse(y, y_hat):
    """Relative RMSE in percent; ``nan`` when the targets are constant."""
    y = np.asarray(y, dtype=float)
    den = np.sum((y - y.mean()) ** 2)
    if den == 0:
        return float("nan")
    return float(100.0 * np.sqrt(np.sum((y - np.asarray(y_hat)) ** 2) / den))


def fold_indices(n, folds, seed=0):
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, folds)


def evaluate_arrmse(method, dataset: FeatureDataset, folds=10, seed=0, lam=1.0,
                    log_base=np.e, standardize=False):
    """Mean RRMSE (percent) over k folds and the per-fold values."""
    if folds < 2 or dataset.n_samples < folds:
        raise ValueError("need folds >= 2 and at least as many samples as folds")
    scores = []
    for test in fold_indices(dataset.n_samples, folds, seed):
        train = np.setdiff1d(np.arange(dataset.n_samples), test)
        model = fit_pipeline(dataset.subset(train), method, lam, log_base, standardize)
        score = rrmse(dataset.targets[test], predict(model, dataset.features[:, test]))
        if np.isnan(score):
            warnings.warn("constant test targets; fold skipped")
            continue
        scores.append(score)
    return float(np.mean(scores)), scores


def train_test_split(n, n_train, seed=0):
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def save_dataset(path, ds: FeatureDataset):
    N, M, K = ds.meta
    p = ds.features.shape[0]
    with open(path, "w", newline="") as fh:
        fh.write(f"# n_tx={N} n_rx={M} n_users={K}\n")
        w = csv.writer(fh)
        w.writerow([f"feature_{i}" for i in range(p)] + ["target"])
        for j in range(ds.n_samples):
            w.writerow([repr(float(v)) for v in ds.features[:, j]] + [repr(float(ds.targets[j]))])


def load_dataset(path):
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ValueError(f"{path}: missing '# n_tx=.. n_rx=.. n_users=..' line")
        meta = dict(kv.split("=") for kv in first[1:].split())
        rows = list(csv.reader(fh))
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    return FeatureDataset(data[:, :-1].T, data[:, -1],
                          (int(meta["n_tx"]), int(meta["n_rx"]), int(meta["n_users"])))


def save_model(path, model: RegressionModel):
    Path(path).write_text(json.dumps(model.to_dict(), indent=1) + "\n")


def load_model(path):
    return RegressionModel.from_dict(json.loads(Path(path).read_text()))
