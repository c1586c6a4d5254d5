"""Broad Learning System: random feature and enhancement nodes with ridge output weights.

The expanded input ``A`` is the column concatenation of node outputs in the
order they were added.  Feature groups map the raw input,
``Z = phi(X We + beta)``; enhancement groups map feature outputs,
``H = xi(s * (Z Wh + beta))``.  Only the output weights are trained, by one
of the incremental solvers in :mod:`bls_ridge.solvers`.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.special import expit

from .linalg import ShapeError, as_matrix
from .solvers import ColumnBuffer, IncrementalSolver, make_solver

__all__ = [
    "ACTIVATIONS",
    "TUNERS",
    "BlsConfig",
    "FeatureGroup",
    "EnhancementGroup",
    "BlsNetwork",
    "tansig",
    "sparse_autoencoder_tuner",
    "build_initial",
    "add_enhancement_nodes",
    "add_feature_nodes",
    "predict",
    "classify",
]


def tansig(x: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """``2 / (1 + exp(-2x)) - 1``, evaluated as ``tanh`` for accuracy."""
    return np.tanh(x, out=out)


def _linear(x, out=None):
    if out is None:
        return x
    out[...] = x
    return out


def _sigmoid(x, out=None):
    return expit(x, out=out)


ACTIVATIONS: dict[str, Callable] = {"linear": _linear, "tansig": tansig, "sigmoid": _sigmoid}


def _activation(name: str) -> Callable:
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ValueError(f"unknown activation {name!r}; choose from {sorted(ACTIVATIONS)}") from None


# -- feature tuners -------------------------------------------------------

def _shrink(v: np.ndarray, t: float) -> np.ndarray:
    return np.maximum(v - t, 0.0) - np.maximum(-v - t, 0.0)


def _lasso_admm(Z: np.ndarray, X: np.ndarray, lam: float, iters: int) -> np.ndarray:
    """Sparse ``B`` approximately minimizing ``||Z B - X||^2 / 2 + lam |B|_1`` by ADMM."""
    ZZ = Z.T @ Z
    ZZ[np.diag_indices_from(ZZ)] += 1.0
    inv = np.linalg.inv(ZZ)
    base = inv @ (Z.T @ X)
    o = np.zeros_like(base)
    u = np.zeros_like(base)
    for _ in range(iters):
        c = base + inv @ (o - u)
        o = _shrink(c + u, lam)
        u += c - o
    return o


def _minmax_fold(X: np.ndarray, We: np.ndarray, beta: np.ndarray):
    """Fold a per-column min-max rescaling of ``X We + beta`` into the weights."""
    T = X @ We + beta
    lo, hi = T.min(axis=0), T.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return We / span, ((beta - lo) / span).reshape(1, -1)


def sparse_autoencoder_tuner(X, We, beta, *, lam: float = 1e-3, iters: int = 50):
    """Replace random feature weights by a sparse autoencoder fit.

    The random map ``X We + beta`` is min-max scaled, a sparse linear map
    from it back to ``X`` is fitted by iterative shrinkage, and its
    transpose becomes the new feature weights.  Outputs are min-max scaled
    on ``X`` with the scaling folded into the returned weights.
    """
    Z = X @ We + beta
    lo, hi = Z.min(axis=0), Z.max(axis=0)
    Z = (Z - lo) / np.where(hi > lo, hi - lo, 1.0)
    tuned = _lasso_admm(Z, X, lam, iters).T.copy()
    return _minmax_fold(X, tuned, np.zeros((1, tuned.shape[1])))


#: Feature tuners by name.  A tuner maps ``(X, We, beta)`` to new ``(We, beta)``.
TUNERS: dict[str, Callable | None] = {"none": None, "sparse": sparse_autoencoder_tuner}


# -- types ----------------------------------------------------------------

@dataclass
class BlsConfig:
    """Network construction settings.

    Attributes
    ----------
    solver : str
        Registry name from :data:`bls_ridge.solvers.SOLVERS`.
    lam : float
        Ridge parameter (``lam_eps`` for the generalized-inverse baselines).
    seed : int
        Seed of the PCG64 generator that draws every random weight.
    scale : float
        Enhancement pre-activation scale.
    scale_mode : {"max", "fixed"}
        ``"max"`` multiplies by ``scale / max|Z Wh + beta|`` measured on the
        training data when the group is created, so that the largest
        pre-activation has magnitude ``scale``.  ``"fixed"`` multiplies by
        ``scale`` itself.
    tuner : str
        Feature tuner name from :data:`TUNERS`.
    """

    solver: str = "chol"
    lam: float = 1e-8
    seed: int = 0
    scale: float = 0.8
    scale_mode: str = "max"
    feature_activation: str = "linear"
    enhancement_activation: str = "tansig"
    tuner: str = "none"

    def __post_init__(self):
        _activation(self.feature_activation)
        _activation(self.enhancement_activation)
        if self.scale_mode not in ("max", "fixed"):
            raise ValueError(f"scale_mode must be 'max' or 'fixed', got {self.scale_mode!r}")
        if not self.scale >= 0:
            raise ValueError(f"scale must be non-negative, got {self.scale!r}")
        if self.tuner not in TUNERS:
            raise ValueError(f"unknown tuner {self.tuner!r}; choose from {sorted(TUNERS)}")
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam!r}")


@dataclass
class FeatureGroup:
    We: np.ndarray
    beta: np.ndarray
    activation: str = "linear"

    def __post_init__(self):
        if self.We.ndim != 2 or self.We.shape[1] < 1 or self.beta.shape != (1, self.We.shape[1]):
            raise ShapeError(f"bad feature group shapes We {self.We.shape}, beta {self.beta.shape}")
        if not (np.isfinite(self.We).all() and np.isfinite(self.beta).all()):
            raise ValueError("feature group weights must be finite")

    @property
    def size(self) -> int:
        return self.We.shape[1]

    def output(self, X: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        pre = np.matmul(X, self.We, out=out)
        pre += self.beta
        return _activation(self.activation)(pre, out=pre)


@dataclass
class EnhancementGroup:
    """Nonlinear map of the outputs of the feature groups listed in ``inputs``.

    ``parent`` is the index of the enhancement group that an extension
    group belongs to, or ``None`` for a group over all features.
    """

    Wh: np.ndarray
    beta: np.ndarray
    inputs: tuple[int, ...]
    scale: float = 1.0
    activation: str = "tansig"
    parent: int | None = None

    def __post_init__(self):
        self.inputs = tuple(int(i) for i in self.inputs)
        if self.Wh.ndim != 2 or self.Wh.shape[1] < 1 or self.beta.shape != (1, self.Wh.shape[1]):
            raise ShapeError(f"bad enhancement group shapes Wh {self.Wh.shape}, beta {self.beta.shape}")
        if not (np.isfinite(self.Wh).all() and np.isfinite(self.beta).all()):
            raise ValueError("enhancement group weights must be finite")

    @property
    def size(self) -> int:
        return self.Wh.shape[1]

    def preactivation(self, Z: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        pre = np.matmul(Z, self.Wh, out=out)
        pre += self.beta
        return pre

    def output(self, Z: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        pre = self.preactivation(Z, out=out)
        pre *= self.scale
        return _activation(self.activation)(pre, out=pre)


# -- network --------------------------------------------------------------

_PREDICT_CHUNK = 4096


class BlsNetwork:
    """A growing broad learning network.

    Build with :meth:`build`, grow with :meth:`add_enhancement_nodes` and
    :meth:`add_feature_nodes`, and evaluate with :meth:`predict` /
    :meth:`classify`.  The training inputs and targets are held until
    :meth:`release_training_data` is called.
    """

    def __init__(self, config: BlsConfig):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.feature_groups: list[FeatureGroup] = []
        self.enhancement_groups: list[EnhancementGroup] = []
        # Column order of A: ("f", i) or ("e", j) per group.
        self.layout: list[tuple[str, int]] = []
        self.solver: IncrementalSolver | None = None
        self._W: np.ndarray | None = None
        self._X: np.ndarray | None = None
        self._Y: np.ndarray | None = None
        self.last_update_seconds = 0.0

    # -- sizes ----------------------------------------------------------
    @property
    def input_dim(self) -> int:
        return self.feature_groups[0].We.shape[0] if self.feature_groups else 0

    @property
    def n_feature_nodes(self) -> int:
        return sum(g.size for g in self.feature_groups)

    @property
    def n_enhancement_nodes(self) -> int:
        return sum(g.size for g in self.enhancement_groups)

    @property
    def k(self) -> int:
        return self.n_feature_nodes + self.n_enhancement_nodes

    @property
    def W(self) -> np.ndarray:
        return self.solver.W if self.solver is not None else self._W

    def _group(self, kind: str, i: int):
        return self.feature_groups[i] if kind == "f" else self.enhancement_groups[i]

    # -- node generation ------------------------------------------------
    def _uniform(self, *shape) -> np.ndarray:
        return self.rng.uniform(-1.0, 1.0, size=shape)

    def _new_feature_group(self, X: np.ndarray, f: int) -> FeatureGroup:
        We = self._uniform(X.shape[1], f)
        beta = self._uniform(1, f)
        tuner = TUNERS[self.config.tuner]
        if tuner is not None:
            We, beta = tuner(X, We, beta)
        return FeatureGroup(We, beta, self.config.feature_activation)

    def _new_enhancement_group(self, Z: np.ndarray, inputs, e: int,
                               out: np.ndarray, parent=None) -> EnhancementGroup:
        """Create a group reading ``Z`` and write its training output into ``out``."""
        g = EnhancementGroup(self._uniform(Z.shape[1], e), self._uniform(1, e), inputs,
                             1.0, self.config.enhancement_activation, parent)
        pre = g.preactivation(Z, out=out)
        s = self.config.scale
        if self.config.scale_mode == "max":
            peak = max(float(pre.max()), -float(pre.min())) if pre.size else 0.0
            s = s / peak if peak > 0 else s
        g.scale = float(s)
        pre *= s
        _activation(g.activation)(pre, out=pre)
        return g

    def _features(self, X: np.ndarray, groups) -> np.ndarray:
        return np.hstack([self.feature_groups[i].output(X) for i in groups])

    @staticmethod
    def _check_counts(**counts) -> None:
        for name, v in counts.items():
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")

    # -- construction ---------------------------------------------------
    @classmethod
    def build(cls, X, Y, n_groups: int, f_per_group: int, m_groups: int,
              e_per_group: int, config: BlsConfig | None = None,
              capacity: int | None = None) -> "BlsNetwork":
        """Generate ``n_groups x f_per_group`` feature and ``m_groups x e_per_group``
        enhancement nodes and initialize the solver.

        ``capacity`` reserves room for the final node count so later
        additions do not reallocate ``A``.
        """
        config = config or BlsConfig()
        X = as_matrix(X, "X")
        Y = as_matrix(Y, "Y")
        if X.shape[0] != Y.shape[0]:
            raise ShapeError(f"X has shape {X.shape} but Y has shape {Y.shape}")
        cls._check_counts(n_groups=n_groups, f_per_group=f_per_group,
                          m_groups=m_groups, e_per_group=e_per_group)
        if n_groups < 1 or f_per_group < 1:
            raise ValueError("at least one non-empty feature group is required")
        if (m_groups == 0) != (e_per_group == 0):
            raise ValueError("m_groups and e_per_group must both be zero or both positive")

        net = cls(config)
        net._X, net._Y = X, Y
        l = X.shape[0]
        nf, ne = n_groups * f_per_group, m_groups * e_per_group
        buf = ColumnBuffer(l, max(capacity or 0, nf + ne))
        block = buf.extend(nf + ne)
        for i in range(n_groups):
            g = net._new_feature_group(X, f_per_group)
            g.output(X, out=block[:, i * f_per_group:(i + 1) * f_per_group])
            net.feature_groups.append(g)
            net.layout.append(("f", i))
        Z = block[:, :nf]
        inputs = tuple(range(n_groups))
        for j in range(m_groups):
            lo = nf + j * e_per_group
            g = net._new_enhancement_group(Z, inputs, e_per_group, block[:, lo:lo + e_per_group])
            net.enhancement_groups.append(g)
            net.layout.append(("e", j))
        net.solver = make_solver(config.solver, config.lam)
        t0 = time.perf_counter()
        net.solver.fit(buf, Y)
        net.last_update_seconds = time.perf_counter() - t0
        return net

    def _require_training(self) -> None:
        if self.solver is None or self._X is None:
            raise RuntimeError("network has no training state; call refit(X, Y) first")

    def _solve(self, H: np.ndarray, Y) -> None:
        t0 = time.perf_counter()
        self.solver.update(H, Y)
        self.last_update_seconds = time.perf_counter() - t0
        if Y is not None:
            self._Y = self.solver.Y

    def add_enhancement_nodes(self, count: int, Y=None) -> "BlsNetwork":
        """Append one enhancement group of ``count`` nodes over all current features."""
        self._require_training()
        self._check_counts(count=count)
        if count < 1:
            raise ValueError("count must be at least 1")
        inputs = tuple(range(len(self.feature_groups)))
        Z = self._features(self._X, inputs)
        H = np.empty((self._X.shape[0], count), order="F")
        g = self._new_enhancement_group(Z, inputs, count, H)
        self._solve(H, Y)
        self.enhancement_groups.append(g)
        self.layout.append(("e", len(self.enhancement_groups) - 1))
        return self

    def primary_enhancement_groups(self) -> list[int]:
        return [j for j, g in enumerate(self.enhancement_groups) if g.parent is None]

    def add_feature_nodes(self, f_count: int, ex_enh: int = 0, extra_enh: int = 0,
                          Y=None) -> "BlsNetwork":
        """Append a feature group with its enhancement extensions.

        Parameters
        ----------
        f_count : int
            Size of the new feature group.
        ex_enh : int
            Enhancement nodes reading only the new feature group, split as
            evenly as possible over the existing primary enhancement groups
            (earlier groups take the remainder).
        extra_enh : int
            Additional enhancement nodes over all features, new included.
        Y : ndarray, optional
            Targets; defaults to the training targets.

        All new columns enter the solver as a single update.
        """
        self._require_training()
        self._check_counts(f_count=f_count, ex_enh=ex_enh, extra_enh=extra_enh)
        if f_count < 1:
            raise ValueError("f_count must be at least 1")
        X = self._X
        parents = self.primary_enhancement_groups()
        if ex_enh and not parents:
            raise ValueError("no enhancement groups to extend")
        sizes = []
        if ex_enh:
            base, rem = divmod(ex_enh, len(parents))
            sizes = [(p, base + (i < rem)) for i, p in enumerate(parents) if base + (i < rem)]
        q = f_count + ex_enh + extra_enh
        H = np.empty((X.shape[0], q), order="F")

        fg = self._new_feature_group(X, f_count)
        Znew = fg.output(X, out=H[:, :f_count])
        new_f = len(self.feature_groups)
        new_groups, col = [], f_count
        for parent, size in sizes:
            g = self._new_enhancement_group(Znew, (new_f,), size, H[:, col:col + size], parent)
            new_groups.append(g)
            col += size
        if extra_enh:
            Zall = np.hstack([self._features(X, range(new_f)), Znew])
            g = self._new_enhancement_group(Zall, tuple(range(new_f + 1)), extra_enh,
                                            H[:, col:col + extra_enh])
            new_groups.append(g)

        self._solve(H, Y)
        self.feature_groups.append(fg)
        self.layout.append(("f", new_f))
        for g in new_groups:
            self.enhancement_groups.append(g)
            self.layout.append(("e", len(self.enhancement_groups) - 1))
        return self

    # -- evaluation -----------------------------------------------------
    def expand(self, X) -> np.ndarray:
        """Expanded input ``A(X)`` with columns in insertion order."""
        X = as_matrix(X, "X")
        if X.shape[1] != self.input_dim:
            raise ShapeError(f"X has {X.shape[1]} columns, network expects {self.input_dim}")
        A = np.empty((X.shape[0], self.k), order="F")
        feats = [g.output(X) for g in self.feature_groups]
        col = 0
        for kind, i in self.layout:
            g = self._group(kind, i)
            out = A[:, col:col + g.size]
            if kind == "f":
                out[...] = feats[i]
            else:
                g.output(np.hstack([feats[j] for j in g.inputs]), out=out)
            col += g.size
        return A

    def predict(self, X, chunk: int = _PREDICT_CHUNK) -> np.ndarray:
        X = as_matrix(X, "X")
        W = self.W
        if W is None:
            raise RuntimeError("network has no output weights")
        out = np.empty((X.shape[0], W.shape[1]))
        for s in range(0, X.shape[0], chunk):
            out[s:s + chunk] = self.expand(X[s:s + chunk]) @ W
        return out

    def classify(self, X, chunk: int = _PREDICT_CHUNK) -> np.ndarray:
        """Per-row argmax of :meth:`predict`; ties go to the lowest index."""
        return np.argmax(self.predict(X, chunk), axis=1)

    def accuracy(self, X, labels) -> float:
        return float(np.mean(self.classify(X) == np.asarray(labels)))

    # -- training state -------------------------------------------------
    def release_training_data(self) -> None:
        """Drop the training data and solver, keeping only the output weights."""
        if self.solver is not None:
            self._W = self.solver.W
        self.solver = None
        self._X = self._Y = None

    def refit(self, X, Y) -> "BlsNetwork":
        """Rebuild the solver from the stored groups on training data ``X, Y``."""
        X = as_matrix(X, "X")
        Y = as_matrix(Y, "Y")
        self._X, self._Y = X, Y
        self.solver = make_solver(self.config.solver, self.config.lam)
        self.solver.fit(self.expand(X), Y)
        self._W = None
        return self

    # -- persistence ----------------------------------------------------
    def save(self, path) -> None:
        """Write an ``.npz`` snapshot: weights as float64 arrays plus JSON metadata.

        The snapshot holds the config, group shapes and settings, the
        column layout, the generator state and ``W``.  Loading restores
        predictions bit for bit.
        """
        arrays = {}
        for i, g in enumerate(self.feature_groups):
            arrays[f"f{i}_We"], arrays[f"f{i}_beta"] = g.We, g.beta
        for j, g in enumerate(self.enhancement_groups):
            arrays[f"e{j}_Wh"], arrays[f"e{j}_beta"] = g.Wh, g.beta
        if self.W is not None:
            arrays["W"] = self.W
        meta = {
            "format": "bls-ridge-network/1",
            "config": asdict(self.config),
            "features": [{"activation": g.activation} for g in self.feature_groups],
            "enhancements": [
                {"inputs": list(g.inputs), "scale": g.scale.hex(),
                 "activation": g.activation, "parent": g.parent}
                for g in self.enhancement_groups
            ],
            "layout": [[kind, i] for kind, i in self.layout],
            "rng_state": self.rng.bit_generator.state,
        }
        arrays["meta"] = np.array(json.dumps(meta))
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path) -> "BlsNetwork":
        """Restore a network saved by :meth:`save` (prediction-ready; call
        :meth:`refit` to continue training)."""
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            if meta.get("format") != "bls-ridge-network/1":
                raise ValueError(f"{path}: not a saved network")
            net = cls(BlsConfig(**meta["config"]))
            net.rng.bit_generator.state = meta["rng_state"]
            for i, fm in enumerate(meta["features"]):
                net.feature_groups.append(FeatureGroup(z[f"f{i}_We"], z[f"f{i}_beta"], fm["activation"]))
            for j, em in enumerate(meta["enhancements"]):
                net.enhancement_groups.append(EnhancementGroup(
                    z[f"e{j}_Wh"], z[f"e{j}_beta"], tuple(em["inputs"]),
                    float.fromhex(em["scale"]), em["activation"], em["parent"]))
            net.layout = [(kind, int(i)) for kind, i in meta["layout"]]
            net._W = z["W"] if "W" in z else None
        return net


# -- functional aliases ---------------------------------------------------

def build_initial(X, Y, n_groups, f_per_group, m_groups, e_per_group,
                  config: BlsConfig | None = None, capacity=None) -> BlsNetwork:
    return BlsNetwork.build(X, Y, n_groups, f_per_group, m_groups, e_per_group, config, capacity)


def add_enhancement_nodes(net: BlsNetwork, count: int, Y=None) -> BlsNetwork:
    return net.add_enhancement_nodes(count, Y)


def add_feature_nodes(net: BlsNetwork, f_count: int, ex_enh: int = 0, extra_enh: int = 0,
                      Y=None) -> BlsNetwork:
    return net.add_feature_nodes(f_count, ex_enh, extra_enh, Y)


def predict(net: BlsNetwork, X) -> np.ndarray:
    return net.predict(X)


def classify(net: BlsNetwork, X) -> np.ndarray:
    return net.classify(X)
