"""Metric windows: bounded sampling regions together with their distance.

Three window kinds are supported:

* ``box``   - the axis-aligned cube [0, side]^d with the Euclidean metric.
* ``torus`` - [0, side)^d with per-axis wrap-around (minimum-image metric).
  This is the default window for invariance-sensitive experiments since it
  restores the translation invariance a hard box boundary destroys.
* ``disk``  - the Poincare disk model of the hyperbolic plane.  The window
  is the centered hyperbolic ball of radius ``extent`` (not the full open
  disk), so uniform sampling has finite intensity.

A window is immutable and every operation on it is a pure function of its
arguments, so instances are safe to share across worker processes.

Distance comparisons elsewhere in the package are done on *comparison
keys* (squared minimum-image distance for flat windows, the arcosh
argument for the disk), which are monotone in the true distance and avoid
square-root rounding.  Keys convert back to true distances with
:meth:`MetricWindow.distance_from_key`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

BOX = "box"
TORUS = "torus"
DISK = "disk"
KINDS = (BOX, TORUS, DISK)

__all__ = ["BOX", "TORUS", "DISK", "KINDS", "MetricWindow", "unit_ball_volume"]


def unit_ball_volume(d: int) -> float:
    """Volume of the d-dimensional Euclidean unit ball."""
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


@dataclass(frozen=True)
class MetricWindow:
    """A bounded region with a metric and uniform sampling.

    kind:      one of "box", "torus", "disk".
    dimension: ambient dimension d (the disk forces d = 2).
    extent:    side length per axis (box/torus) or the hyperbolic radius
               of the sampling ball (disk).  Strictly positive.
    """

    kind: str
    dimension: int
    extent: float

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown window kind {self.kind!r}")
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        if self.kind == DISK and self.dimension != 2:
            raise ValueError("the Poincare disk window is two-dimensional")
        if not self.extent > 0:
            raise ValueError("extent must be strictly positive")

    # ------------------------------------------------------------------
    # Geometry of the window itself
    # ------------------------------------------------------------------

    def volume(self) -> float:
        """Total measure of the window (hyperbolic area for the disk)."""
        if self.kind == DISK:
            return 2.0 * math.pi * (math.cosh(self.extent) - 1.0)
        return self.extent ** self.dimension

    def diameter(self) -> float:
        """Largest distance realizable between two window points."""
        if self.kind == DISK:
            return 2.0 * self.extent
        if self.kind == TORUS:
            return (self.extent / 2.0) * math.sqrt(self.dimension)
        return self.extent * math.sqrt(self.dimension)

    def center(self) -> np.ndarray:
        """Canonical probe center: the middle of the box/torus, the origin
        of the disk."""
        if self.kind == DISK:
            return np.zeros(2)
        return np.full(self.dimension, self.extent / 2.0)

    def ball_volume(self, r: float) -> float:
        """Measure of a metric ball of radius r.

        On the torus this is only meaningful while the ball does not wrap,
        so r >= side/2 is rejected.
        """
        if r < 0:
            raise ValueError("radius must be nonnegative")
        if self.kind == DISK:
            return 2.0 * math.pi * (math.cosh(r) - 1.0)
        if self.kind == TORUS and r >= self.extent / 2.0:
            raise ValueError(
                f"ball radius {r} not supported on a torus of side {self.extent}"
                " (r must be < side/2)"
            )
        return unit_ball_volume(self.dimension) * r ** self.dimension

    # ------------------------------------------------------------------
    # Point handling
    # ------------------------------------------------------------------

    def _check_coords(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != self.dimension:
            raise ValueError(
                f"point has {p.shape[-1]} coordinates, window is {self.dimension}-dimensional"
            )
        return p

    def canonicalize(self, p) -> np.ndarray:
        """Map coordinates to their canonical representative.

        Torus coordinates wrap into [0, side) per axis; box and disk
        coordinates are returned unchanged.
        """
        p = self._check_coords(p)
        if self.kind == TORUS:
            return np.mod(p, self.extent)
        return p

    def contains(self, p, tol: float = 1e-9) -> bool:
        """Whether a (canonical) point lies in the window."""
        p = self._check_coords(p)
        if self.kind == BOX:
            return bool(np.all(p >= -tol) and np.all(p <= self.extent + tol))
        if self.kind == TORUS:
            return bool(np.all(p >= 0) and np.all(p < self.extent))
        rho = float(np.dot(p, p))
        if rho >= 1.0:
            return False
        return math.acosh(1.0 + 2.0 * rho / (1.0 - rho)) <= self.extent + tol

    def sample_uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n points uniformly with respect to the window's measure.

        Disk sampling is uniform in hyperbolic area: the hyperbolic radius
        s has CDF (cosh s - 1)/(cosh R - 1), and a hyperbolic radius s sits
        at Euclidean radius tanh(s/2) in the disk model.
        """
        if n == 0:
            return np.empty((0, self.dimension))
        if self.kind == DISK:
            u = rng.random(n)
            s = np.arccosh(1.0 + u * (math.cosh(self.extent) - 1.0))
            rho = np.tanh(s / 2.0)
            theta = rng.uniform(0.0, 2.0 * math.pi, n)
            return np.column_stack([rho * np.cos(theta), rho * np.sin(theta)])
        pts = rng.random((n, self.dimension)) * self.extent
        return self.canonicalize(pts)

    # ------------------------------------------------------------------
    # Distances
    # ------------------------------------------------------------------

    def distance(self, p, q) -> float:
        """Metric distance between two points of the window."""
        p = self._check_coords(p)
        q = self._check_coords(q)
        if self.kind == DISK:
            return float(self.distance_from_key(self._disk_key(p[None, :], q[None, :])[0, 0]))
        delta = np.abs(p - q)
        if self.kind == TORUS:
            delta = np.minimum(delta, self.extent - delta)
        return float(np.sqrt(np.dot(delta, delta)))

    def _disk_key(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        # key = cosh(distance) = 1 + 2|a-b|^2 / ((1-|a|^2)(1-|b|^2))
        sq = _sq_euclid(a, b)
        wa = 1.0 - np.einsum("ij,ij->i", a, a)
        wb = 1.0 - np.einsum("ij,ij->i", b, b)
        key = 1.0 + 2.0 * sq / (wa[:, None] * wb[None, :])
        return np.maximum(key, 1.0)

    def distance_key_matrix(self, a, b) -> np.ndarray:
        """Comparison-key matrix between two point arrays.

        Keys are squared minimum-image distances (box/torus) or
        cosh(distance) (disk).  They order pairs exactly like true
        distances and equal keys mean equal distances.
        """
        a = np.atleast_2d(self._check_coords(a))
        b = np.atleast_2d(self._check_coords(b))
        if self.kind == DISK:
            return self._disk_key(a, b)
        if self.kind == TORUS:
            delta = np.abs(a[:, None, :] - b[None, :, :])
            delta = np.minimum(delta, self.extent - delta)
            return np.einsum("ijk,ijk->ij", delta, delta)
        return _sq_euclid(a, b)

    def distance_from_key(self, key):
        """Convert comparison keys back to true distances."""
        key = np.asarray(key, dtype=float)
        if self.kind == DISK:
            return np.arccosh(np.maximum(key, 1.0))
        return np.sqrt(key)

    def distance_matrix(self, a, b) -> np.ndarray:
        return self.distance_from_key(self.distance_key_matrix(a, b))

    def distances_to(self, points, q) -> np.ndarray:
        """Distances from every row of ``points`` to the single point q."""
        q = np.atleast_2d(self._check_coords(q))
        return self.distance_matrix(points, q)[:, 0]


def _sq_euclid(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)
