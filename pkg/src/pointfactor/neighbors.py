"""Nearest-neighbor queries over window points.

Two execution routes share one contract:

* an all-pairs route on comparison keys, used for small inputs and for
  the hyperbolic disk (whose metric a k-d tree cannot index directly);
* a ``scipy.spatial.cKDTree`` route for larger flat inputs, periodic via
  ``boxsize`` on the torus.

Exact distance ties are broken deterministically (smallest candidate id
for a fixed query point, lexicographically smallest sorted id pair
between pairs) and counted in the supplied :class:`Degeneracies`.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .degeneracy import Degeneracies
from .metric import DISK, TORUS, MetricWindow

# Above this active-set size the flat-window route switches to a k-d tree.
ALL_PAIRS_LIMIT = 400
_CHUNK = 1024


def _tree(window: MetricWindow, pts: np.ndarray) -> cKDTree:
    boxsize = window.extent if window.kind == TORUS else None
    return cKDTree(pts, boxsize=boxsize)


def _row_keys(window: MetricWindow, pts: np.ndarray, i: int) -> np.ndarray:
    keys = window.distance_key_matrix(pts[i : i + 1], pts)[0]
    keys[i] = np.inf
    return keys


def _nn_allpairs(window, pts, degeneracies):
    """Per-row nearest neighbor over an (m, d) array, ties resolved to the
    smallest candidate index."""
    m = len(pts)
    nn_idx = np.empty(m, dtype=np.int64)
    nn_key = np.empty(m)
    for lo in range(0, m, _CHUNK):
        hi = min(lo + _CHUNK, m)
        keys = window.distance_key_matrix(pts[lo:hi], pts)
        rows = np.arange(lo, hi)
        keys[rows - lo, rows] = np.inf
        nn_key[lo:hi] = keys.min(axis=1)
        nn_idx[lo:hi] = keys.argmin(axis=1)
        ties = (keys == nn_key[lo:hi, None]).sum(axis=1) > 1
        if ties.any() and degeneracies is not None:
            degeneracies.distance_ties += int(ties.sum())
        # argmin already returns the smallest index among equal minima
    return nn_idx, nn_key


def _nn_kdtree(window, pts, degeneracies):
    m = len(pts)
    tree = _tree(window, pts)
    kq = min(m, 4)
    dist, idx = tree.query(pts, k=kq)
    own = np.arange(m)[:, None]
    non_self = idx != own
    first = non_self.argmax(axis=1)
    rows = np.arange(m)
    nn_idx = idx[rows, first]
    nn_dist = dist[rows, first]
    # exact ties among returned candidates, or possibly beyond them
    maybe = (non_self & (dist == nn_dist[:, None])).sum(axis=1) > 1
    maybe |= dist[:, -1] == nn_dist
    for i in np.flatnonzero(maybe):
        keys = _row_keys(window, pts, i)
        best = keys.min()
        cands = np.flatnonzero(keys == best)
        if len(cands) > 1 and degeneracies is not None:
            degeneracies.distance_ties += 1
        nn_idx[i] = cands[0]
        nn_dist[i] = float(window.distance_from_key(best))
    return nn_idx, nn_dist


def nn_info(
    window: MetricWindow,
    points: np.ndarray,
    active: np.ndarray | None = None,
    degeneracies: Degeneracies | None = None,
):
    """Nearest neighbor of every active point within the active set.

    Returns ``(nn_ids, nn_dists)`` aligned with ``active`` (all points
    when ``active`` is None).  Requires at least two active points.
    """
    points = np.asarray(points, dtype=float)
    if active is None:
        active = np.arange(len(points), dtype=np.int64)
    else:
        active = np.asarray(active, dtype=np.int64)
    m = len(active)
    if m < 2:
        raise ValueError("nearest-neighbor queries need at least two points")
    pts = points[active]
    if window.kind == DISK or m <= ALL_PAIRS_LIMIT:
        loc_idx, keys = _nn_allpairs(window, pts, degeneracies)
        dists = np.asarray(window.distance_from_key(keys))
    else:
        loc_idx, dists = _nn_kdtree(window, pts, degeneracies)
    return active[loc_idx], dists


def nn_distances(window: MetricWindow, points: np.ndarray) -> np.ndarray:
    """Distance from every point to its nearest other point."""
    _, dists = nn_info(window, points)
    return dists


def closest_pair(
    window: MetricWindow,
    points: np.ndarray,
    active: np.ndarray,
    degeneracies: Degeneracies | None = None,
) -> tuple[int, int, float]:
    """Globally closest pair among the active ids, tie-broken to the
    lexicographically smallest sorted id pair."""
    active = np.sort(np.asarray(active, dtype=np.int64))
    nn_ids, nn_dists = nn_info(window, points, active, degeneracies)
    best = nn_dists.min()
    pairs = set()
    for pos in np.flatnonzero(nn_dists == best):
        i, j = int(active[pos]), int(nn_ids[pos])
        pairs.add((min(i, j), max(i, j)))
    if len(pairs) > 1 and degeneracies is not None:
        degeneracies.distance_ties += len(pairs) - 1
    i, j = min(pairs)
    return i, j, float(best)


def knn_ids(window: MetricWindow, points: np.ndarray, cap: int) -> np.ndarray:
    """Ids of the ``cap`` nearest other points, per point, nearest first.

    Ties fall back to ascending id via a stable sort.
    """
    n = len(points)
    cap = min(cap, n - 1)
    out = np.empty((n, cap), dtype=np.int64)
    if cap == 0:
        return out
    if window.kind != DISK and n > ALL_PAIRS_LIMIT:
        tree = _tree(window, points)
        _, idx = tree.query(points, k=cap + 1)
        own = np.arange(n)[:, None]
        for i in range(n):
            row = idx[i][idx[i] != i]
            out[i] = row[:cap]
        return out
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        keys = window.distance_key_matrix(points[lo:hi], points)
        rows = np.arange(lo, hi)
        keys[rows - lo, rows] = np.inf
        order = np.argsort(keys, axis=1, kind="stable")
        out[lo:hi] = order[:, :cap]
    return out


def pair_keys(
    window: MetricWindow, points: np.ndarray, ii: np.ndarray, jj: np.ndarray
) -> np.ndarray:
    """Comparison keys for an explicit list of id pairs."""
    a = points[np.asarray(ii, dtype=np.int64)]
    b = points[np.asarray(jj, dtype=np.int64)]
    if window.kind == DISK:
        sq = np.einsum("ij,ij->i", a - b, a - b)
        wa = 1.0 - np.einsum("ij,ij->i", a, a)
        wb = 1.0 - np.einsum("ij,ij->i", b, b)
        return np.maximum(1.0 + 2.0 * sq / (wa * wb), 1.0)
    delta = np.abs(a - b)
    if window.kind == TORUS:
        delta = np.minimum(delta, window.extent - delta)
    return np.einsum("ij,ij->i", delta, delta)


def pair_distances(
    window: MetricWindow, points: np.ndarray, ii: np.ndarray, jj: np.ndarray
) -> np.ndarray:
    return np.asarray(window.distance_from_key(pair_keys(window, points, ii, jj)))


def condensed_keys(window: MetricWindow, points: np.ndarray) -> np.ndarray:
    """Upper-triangle comparison keys in lexicographic pair order."""
    n = len(points)
    parts = []
    for i in range(n - 1):
        parts.append(window.distance_key_matrix(points[i : i + 1], points[i + 1 :])[0])
    if not parts:
        return np.empty(0)
    return np.concatenate(parts)


def condensed_to_pair(n: int, index: int) -> tuple[int, int]:
    """Invert the lexicographic condensed pair index."""
    i = 0
    offset = index
    row = n - 1
    while offset >= row:
        offset -= row
        row -= 1
        i += 1
    return i, i + 1 + offset
