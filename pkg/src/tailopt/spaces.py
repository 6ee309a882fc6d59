"""Finite-dimensional l_p / l_r norm pairs with 2-smooth dual norms.

The primal space (where iterates live) carries the l_p norm for some
p in (1, 2]; its dual (where gradients and momentum live) carries the
conjugate l_r norm, 1/p + 1/r = 1, so r in [2, inf).  That dual norm
satisfies the two-sided smoothness inequality

    ||x + y||_r^2  <=  ||x||_r^2 + <grad ||x||_r^2, y> + C ||y||_r^2

with C = r - 1 = 1/(p - 1)  (C = 1 in the Euclidean case p = r = 2),
which is what ``smooth_norm_gap`` evaluates pointwise.  Conjugate norms
with exponent below 2 are *not* 2-smooth for any constant, which is why
the primal exponent is restricted to (1, 2].

``duality_map`` sends a dual vector v to the unit primal vector d(v)
maximizing the pairing, <v, d(v)> = ||v||_r; it is the direction a
normalized gradient step moves in.

All vector operations accept arrays of shape ``(..., dim)`` and act on
the last axis, returning scalars for single vectors and arrays for
batches.  Norms factor out the largest component magnitude before
exponentiating so heavy-tailed inputs cannot overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["NormedSpace"]


def _lp_norm(v: np.ndarray, p: float) -> np.ndarray | float:
    """l_p norm along the last axis, max-factored against overflow.

    The Euclidean case takes a direct sum-of-squares path (identical
    accumulation order for single vectors and batches) and only falls back
    to max-factoring if the squares overflow.
    """
    v = np.asarray(v, dtype=float)
    if p == 2.0:
        ss = (v * v).sum(axis=-1)
        if v.ndim == 1:
            ss = float(ss)
            if math.isfinite(ss):
                return math.sqrt(ss)
        elif np.isfinite(ss).all():
            return np.sqrt(ss)
    a = np.abs(v)
    m = a.max(axis=-1, keepdims=True)
    safe = np.where(m > 0.0, m, 1.0)
    s = ((a / safe) ** p).sum(axis=-1)
    out = np.squeeze(safe, axis=-1) * s ** (1.0 / p)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class NormedSpace:
    """An l_p primal / l_r dual norm pair on R^dim.

    Parameters
    ----------
    dim : int
        Ambient dimension, at least 1.
    primal_exponent : float
        The p of the primal l_p norm; must lie in (1, 2].  Larger primal
        exponents are rejected because the conjugate dual norm would not
        be 2-smooth, which every certificate downstream relies on.
    """

    dim: int
    primal_exponent: float = 2.0
    dual_exponent: float = field(init=False)
    smooth_power: float = field(init=False, default=2.0)
    smooth_constant: float = field(init=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")
        p = float(self.primal_exponent)
        if not (1.0 < p <= 2.0):
            raise ValueError(f"primal exponent must lie in (1, 2], got {p}")
        r = p / (p - 1.0)
        object.__setattr__(self, "primal_exponent", p)
        object.__setattr__(self, "dual_exponent", r)
        # r - 1 = 1/(p - 1); equals 1 exactly in the Euclidean case.
        object.__setattr__(self, "smooth_constant", max(1.0, r - 1.0))

    @classmethod
    def euclidean(cls, dim: int) -> "NormedSpace":
        return cls(dim=dim, primal_exponent=2.0)

    @classmethod
    def from_dual_exponent(cls, dim: int, dual_exponent: float) -> "NormedSpace":
        """Space whose gradient-side norm is l_r for the given r >= 2."""
        r = float(dual_exponent)
        if not (2.0 <= r < np.inf):
            raise ValueError(f"dual exponent must lie in [2, inf), got {r}")
        return cls(dim=dim, primal_exponent=r / (r - 1.0))

    def _check_dim(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dim:
            raise ValueError(f"vector has dim {v.shape[-1]}, space has dim {self.dim}")
        return v

    def primal_norm(self, w) -> np.ndarray | float:
        """l_p norm of a primal vector (batch)."""
        return _lp_norm(self._check_dim(w), self.primal_exponent)

    def dual_norm(self, v) -> np.ndarray | float:
        """l_r norm of a dual vector (batch)."""
        return _lp_norm(self._check_dim(v), self.dual_exponent)

    def pairing(self, v, w) -> np.ndarray | float:
        """Application <v, w> of a dual vector to a primal vector."""
        v = self._check_dim(v)
        w = self._check_dim(w)
        out = np.sum(v * w, axis=-1)
        return float(out) if out.ndim == 0 else out

    def duality_map(self, v) -> np.ndarray:
        """Unit primal vector d(v) with <v, d(v)> = ||v||_r; d(0) = 0.

        Componentwise d(v)_i = sign(v_i) |v_i|^(r-1) / ||v||_r^(r-1).  The
        zero convention means an optimizer takes no step on zero signal.
        """
        v = self._check_dim(v)
        r = self.dual_exponent
        if r == 2.0:
            n = _lp_norm(v, 2.0)
            if v.ndim == 1:
                return v / n if n > 0.0 else np.zeros_like(v)
            n = np.asarray(n)[..., np.newaxis]
            return np.where(n > 0.0, v / np.where(n > 0.0, n, 1.0), 0.0)
        m = np.abs(v).max(axis=-1, keepdims=True)
        safe = np.where(m > 0.0, m, 1.0)
        u = np.abs(v) / safe
        s = (u ** r).sum(axis=-1, keepdims=True)
        denom = np.where(s > 0.0, s, 1.0) ** ((r - 1.0) / r)
        d = np.sign(v) * u ** (r - 1.0) / denom
        return np.where(m > 0.0, d, 0.0)

    def clip_dual(self, v, threshold: float) -> np.ndarray:
        """Rescale v to dual norm at most ``threshold``, keeping direction.

        Vectors already inside the threshold ball are returned unchanged.
        """
        if not threshold > 0.0:
            raise ValueError(f"clip threshold must be positive, got {threshold}")
        v = self._check_dim(v)
        n = np.asarray(self.dual_norm(v))[..., np.newaxis]
        scale = np.where(n > threshold, threshold / np.where(n > 0.0, n, 1.0), 1.0)
        return v * scale

    def dual_sq_norm_grad(self, x) -> np.ndarray:
        """Gradient of x -> ||x||_r^2, zero at the origin.

        Closed form 2 ||x||_r^(2-r) sign(x_i) |x_i|^(r-1), max-factored.
        """
        x = self._check_dim(x)
        r = self.dual_exponent
        if r == 2.0:
            return 2.0 * x
        m = np.max(np.abs(x), axis=-1, keepdims=True)
        safe = np.where(m > 0.0, m, 1.0)
        u = np.abs(x) / safe
        s = np.sum(u ** r, axis=-1, keepdims=True)
        g = 2.0 * safe * np.where(s > 0.0, s, 1.0) ** ((2.0 - r) / r) \
            * np.sign(x) * u ** (r - 1.0)
        return np.where(m > 0.0, g, 0.0)

    def smooth_norm_gap(self, x, y) -> np.ndarray | float:
        """Slack of the 2-smoothness inequality of the dual norm at (x, y).

        Returns ||x||^2 + <grad ||x||^2, y> + C ||y||^2 - ||x + y||^2,
        which is nonnegative up to rounding for every supported space.
        """
        x = self._check_dim(x)
        y = self._check_dim(y)
        nx = np.asarray(self.dual_norm(x), dtype=float)
        ny = np.asarray(self.dual_norm(y), dtype=float)
        nxy = np.asarray(self.dual_norm(x + y), dtype=float)
        cross = np.sum(self.dual_sq_norm_grad(x) * y, axis=-1)
        out = nx ** 2 + cross + self.smooth_constant * ny ** 2 - nxy ** 2
        return float(out) if out.ndim == 0 else out
