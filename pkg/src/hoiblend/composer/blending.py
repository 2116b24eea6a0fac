"""Action-space blending primitives: delta buffer, PCA basis, blend rule."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError

EIG_TOL = 1e-12


class DeltaBuffer:
    """FIFO ring of recent body-action differences between the two experts."""

    def __init__(self, dim: int, capacity: int = 16):
        if capacity < 1:
            raise ValidationError("buffer capacity must be at least 1")
        self.dim = int(dim)
        self.capacity = int(capacity)
        self._ring: deque[np.ndarray] = deque(maxlen=capacity)

    def push(self, delta: np.ndarray) -> None:
        delta = np.asarray(delta, dtype=float)
        if delta.shape != (self.dim,):
            raise ValidationError(f"delta must have shape ({self.dim},), got {delta.shape}")
        self._ring.append(delta)

    def __len__(self) -> int:
        return len(self._ring)

    def entries(self) -> np.ndarray:
        """Stacked entries, oldest first; shape (n, dim)."""
        if not self._ring:
            return np.zeros((0, self.dim))
        return np.stack(list(self._ring))

    def clear(self) -> None:
        self._ring.clear()


@dataclass(frozen=True)
class EigenBasis:
    """Column-orthonormal exploration basis with descending eigenvalues.

    Columns beyond the available PCA rank are zero and flag the basis stale;
    the exploration term then contributes nothing along them.
    """

    u: np.ndarray  # (dim, s)
    eigenvalues: np.ndarray  # (s,)
    stale: bool

    @classmethod
    def empty(cls, dim: int, s: int) -> "EigenBasis":
        return cls(np.zeros((dim, s)), np.zeros(s), True)

    @property
    def rank(self) -> int:
        return int(np.sum(np.linalg.norm(self.u, axis=0) > 0.5))


def update_basis(buffer: DeltaBuffer, s: int = 4) -> EigenBasis:
    """Top-s principal directions of the mean-centered buffer entries.

    Population covariance (divisor n) keeps the identity "discarded variance
    equals the sum of discarded eigenvalues" exact. Sign convention: the
    largest-magnitude component of each column is positive. Never raises on
    short buffers; it degrades to a (partially) zero, stale basis.
    """
    dim = buffer.dim
    n = len(buffer)
    if n < 2:
        return EigenBasis.empty(dim, s)
    x = buffer.entries()
    xc = x - x.mean(axis=0)
    cov = xc.T @ xc / n
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    eigvecs = eigvecs[:, order]

    scale = max(float(eigvals[0]), 1.0)
    rank = int(min(s, n - 1, np.sum(eigvals > EIG_TOL * scale)))

    u = np.zeros((dim, s))
    vals = np.zeros(s)
    for c in range(rank):
        v = eigvecs[:, c]
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        u[:, c] = v
        vals[c] = eigvals[c]
    return EigenBasis(u, vals, stale=rank < s)


@dataclass(frozen=True)
class ComposerOutput:
    """Blend coefficients and the resolved full-dimensional action."""

    w: np.ndarray
    r: np.ndarray
    mu: np.ndarray
    action: np.ndarray

    @property
    def body_action(self) -> np.ndarray:
        return self.action[: self.w.shape[0]]

    @property
    def hand_action(self) -> np.ndarray:
        return self.action[self.w.shape[0]:]


def blend(a_phc: np.ndarray, a_im_full: np.ndarray, w: np.ndarray, r: np.ndarray,
          mu: np.ndarray, basis: EigenBasis) -> ComposerOutput:
    """Final action: per-DoF interpolation/extrapolation plus basis exploration.

    Body action is a_phc + (w + r) * (a_im_body - a_phc) + U @ mu; the hand
    action passes through from the full-coverage expert unchanged.
    """
    a_phc = np.asarray(a_phc, dtype=float)
    a_im_full = np.asarray(a_im_full, dtype=float)
    d_body = a_phc.shape[0]
    if a_im_full.shape[0] < d_body:
        raise ValidationError(
            f"full expert action ({a_im_full.shape[0]}) shorter than body action ({d_body})")
    w = np.asarray(w, dtype=float)
    r = np.asarray(r, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if w.shape != (d_body,) or r.shape != (d_body,):
        raise ValidationError("w and r must match the body action dimension")
    if basis.u.shape[0] != d_body or basis.u.shape[1] != mu.shape[0]:
        raise ValidationError(
            f"basis {basis.u.shape} incompatible with body dim {d_body} and mu {mu.shape}")

    delta = a_im_full[:d_body] - a_phc
    a_body = a_phc + (w + r) * delta + basis.u @ mu
    return ComposerOutput(w=w, r=r, mu=mu, action=np.concatenate([a_body, a_im_full[d_body:]]))
