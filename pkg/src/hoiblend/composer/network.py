"""Composer MLP: bounded blend-coefficient heads over a small dense net."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True)
class BlendHeads:
    w: np.ndarray
    r: np.ndarray
    mu: np.ndarray


@dataclass
class ComposerParams:
    """MLP weights plus the head bounds.

    The final linear layer produces 2*d_body + s values split into the three
    heads; sigmoid and scaled tanh keep every bound satisfied by construction.
    """

    weights: list[np.ndarray]  # alternating W (out,in) and b (out,)
    obs_dim: int
    d_body: int
    s: int
    hidden: tuple[int, ...]
    rho: float = 0.2
    sigma: float = 0.08

    def __post_init__(self):
        if self.rho <= 0 or self.sigma < 0:
            raise ValidationError("rho must be positive and sigma non-negative")

    @property
    def head_dim(self) -> int:
        return 2 * self.d_body + self.s

    @classmethod
    def create(cls, obs_dim: int, d_body: int, s: int = 4, hidden: tuple[int, ...] = (32, 32),
               rho: float = 0.2, sigma: float = 0.08, init_scale: float = 0.0,
               seed: int = 0, head_dim: int | None = None) -> "ComposerParams":
        """Fresh parameters; init_scale 0 gives the neutral w=0.5, r=0, mu=0 start.

        head_dim overrides the default 2*d_body+s output width for policies
        that reuse this container as a plain MLP.
        """
        rng = np.random.default_rng(seed)
        sizes = [obs_dim, *hidden, head_dim if head_dim is not None else 2 * d_body + s]
        weights: list[np.ndarray] = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            scale = init_scale / np.sqrt(fan_in) if init_scale > 0 else 0.0
            weights.append(rng.normal(0.0, 1.0, (fan_out, fan_in)) * scale)
            weights.append(np.zeros(fan_out))
        return cls(weights, obs_dim, d_body, s, tuple(hidden), rho, sigma)

    def flatten(self) -> np.ndarray:
        return np.concatenate([w.ravel() for w in self.weights])

    def with_flat(self, flat: np.ndarray) -> "ComposerParams":
        flat = np.asarray(flat, dtype=float)
        out: list[np.ndarray] = []
        pos = 0
        for w in self.weights:
            out.append(flat[pos:pos + w.size].reshape(w.shape).copy())
            pos += w.size
        if pos != flat.size:
            raise ValidationError(f"flat vector has {flat.size} values, expected {pos}")
        return ComposerParams(out, self.obs_dim, self.d_body, self.s, self.hidden, self.rho, self.sigma)

    @property
    def size(self) -> int:
        return sum(w.size for w in self.weights)

    def to_dict(self) -> dict:
        return {
            "obs_dim": self.obs_dim,
            "d_body": self.d_body,
            "s": self.s,
            "hidden": list(self.hidden),
            "rho": self.rho,
            "sigma": self.sigma,
            "flat": self.flatten().tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ComposerParams":
        base = cls.create(int(d["obs_dim"]), int(d["d_body"]), int(d["s"]),
                          tuple(int(h) for h in d["hidden"]), float(d["rho"]), float(d["sigma"]))
        return base.with_flat(np.asarray(d["flat"], dtype=float))


def mlp_forward(params: ComposerParams, obs: np.ndarray) -> np.ndarray:
    h = np.asarray(obs, dtype=float)
    if h.shape != (params.obs_dim,):
        raise ValidationError(f"observation has shape {h.shape}, expected ({params.obs_dim},)")
    n_layers = len(params.weights) // 2
    for i in range(n_layers):
        w, b = params.weights[2 * i], params.weights[2 * i + 1]
        h = w @ h + b
        if i < n_layers - 1:
            h = np.tanh(h)
    return h


def composer_forward(params: ComposerParams, obs: np.ndarray) -> BlendHeads:
    """Head nonlinearities: sigmoid for w, rho*tanh for r, sigma*tanh for mu."""
    raw = mlp_forward(params, obs)
    d = params.d_body
    w = 1.0 / (1.0 + np.exp(-raw[:d]))
    r = params.rho * np.tanh(raw[d:2 * d])
    mu = params.sigma * np.tanh(raw[2 * d:])
    return BlendHeads(w=w, r=r, mu=mu)
