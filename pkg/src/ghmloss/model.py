"""MLP encoder with a classifier head, manual backprop and Adam."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

NORM_EPS = 1e-12


@dataclass(frozen=True)
class MLPConfig:
    input_dim: int
    num_classes: int
    hidden_dims: tuple = (64, 64)
    embed_dim: int = 128
    activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if self.input_dim < 1 or self.num_classes < 2 or any(h < 1 for h in self.hidden_dims):
            raise ValueError("layer sizes must be positive and num_classes >= 2")
        if self.embed_dim < 2:
            raise ValueError("embed_dim must be >= 2")
        if self.activation != "relu":
            raise ValueError(f"unsupported activation {self.activation!r}")


class MLP:
    """input -> [affine, ReLU] * len(hidden_dims) -> affine feature h.

    The metric branch uses h / ||h||; the classifier head is an affine map of h.
    """

    def __init__(self, config: MLPConfig, params: dict | None = None):
        self.config = config
        self.params = params if params is not None else self._init_params()

    @property
    def n_hidden(self) -> int:
        return len(self.config.hidden_dims)

    def _init_params(self) -> dict:
        rng = np.random.default_rng(self.config.seed)
        sizes = [self.config.input_dim, *self.config.hidden_dims, self.config.embed_dim]
        params = {}
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            params[f"W{i}"] = rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in)
            params[f"b{i}"] = np.zeros(fan_out)
        d = self.config.embed_dim
        params["Wc"] = rng.standard_normal((d, self.config.num_classes)) * np.sqrt(1.0 / d)
        params["bc"] = np.zeros(self.config.num_classes)
        return params

    def forward(self, inputs: np.ndarray, return_cache: bool = False):
        x = np.asarray(inputs, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.config.input_dim:
            raise ValueError(f"expected inputs of shape (N, {self.config.input_dim}), got {x.shape}")
        acts = [x]
        for i in range(self.n_hidden):
            acts.append(np.maximum(acts[-1] @ self.params[f"W{i}"] + self.params[f"b{i}"], 0.0))
        k = self.n_hidden
        h = acts[-1] @ self.params[f"W{k}"] + self.params[f"b{k}"]
        norms = np.maximum(np.linalg.norm(h, axis=1, keepdims=True), NORM_EPS)
        emb = h / norms
        logits = h @ self.params["Wc"] + self.params["bc"]
        if return_cache:
            return emb, logits, (acts, h, norms, emb)
        return emb, logits

    __call__ = forward

    def backward(self, cache, d_emb: np.ndarray, d_logits: np.ndarray) -> dict:
        acts, h, norms, emb = cache
        grads = {"Wc": h.T @ d_logits, "bc": d_logits.sum(axis=0)}
        dh = d_logits @ self.params["Wc"].T
        dh += (d_emb - emb * np.sum(emb * d_emb, axis=1, keepdims=True)) / norms
        k = self.n_hidden
        grads[f"W{k}"] = acts[-1].T @ dh
        grads[f"b{k}"] = dh.sum(axis=0)
        da = dh @ self.params[f"W{k}"].T
        for i in reversed(range(k)):
            dz = da * (acts[i + 1] > 0)
            grads[f"W{i}"] = acts[i].T @ dz
            grads[f"b{i}"] = dz.sum(axis=0)
            da = dz @ self.params[f"W{i}"].T
        return grads

    def save(self, path) -> None:
        doc = {
            "config": asdict(self.config),
            "params": {k: {"shape": list(v.shape), "data": v.ravel().tolist()} for k, v in self.params.items()},
        }
        Path(path).write_text(json.dumps(doc))

    @classmethod
    def load(cls, path) -> MLP:
        doc = json.loads(Path(path).read_text())
        cfg = MLPConfig(**doc["config"])
        params = {k: np.asarray(v["data"], dtype=np.float64).reshape(v["shape"]) for k, v in doc["params"].items()}
        return cls(cfg, params)


@dataclass
class Adam:
    """Adam with L2 weight decay added to the gradient, as in torch.optim.Adam."""

    lr: float = 1e-4
    weight_decay: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params: dict, grads: dict) -> None:
        self.step_count += 1
        t = self.step_count
        for name, p in params.items():
            g = grads[name]
            if self.weight_decay:
                g = g + self.weight_decay * p
            m = self.m.get(name)
            if m is None:
                m = self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            v = self.v[name]
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            m_hat = m / (1 - self.beta1**t)
            v_hat = v / (1 - self.beta2**t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
