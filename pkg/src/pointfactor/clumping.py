"""Nested clump partitions built from seeds and spherical cutters.

Level-k seeds are points with another point strictly within the seed
radius a(k) = exp[-k(1 - 1/(2d))]; each seed carries a cutter, the sphere
of radius r(k) = e^k around it.  Two points share a level-k clump when no
cutter of level k..k_max separates them (one strictly inside the sphere,
the other strictly outside).  Because side-of-cutter is a per-point bit,
the partition at each level is the grouping by identical bit signatures
over all cutters of that level and above, and coarsening from one level
to the next holds by construction.

This separation equivalence coarsens the true partition into connected
components of space minus the cutter spheres, which is enough for every
property used downstream (a clump enclosed by a cutter stays confined to
its ball) at a fraction of the cost of sphere-arrangement topology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import neighbors
from .degeneracy import Degeneracies
from .metric import TORUS, MetricWindow
from .pointgen import PointConfiguration

_CHUNK = 512


@dataclass(frozen=True)
class ClumpingParams:
    """Level schedule: seed radii shrink geometrically while cutter radii
    grow as e^k, so high levels cut rarely but enclose huge regions."""

    dimension: int
    k_max: int

    def __post_init__(self) -> None:
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if self.dimension < 1:
            raise ValueError("dimension must be positive")

    def seed_radius(self, k: int) -> float:
        return math.exp(-k * (1.0 - 1.0 / (2.0 * self.dimension)))

    def cutter_radius(self, k: int) -> float:
        return math.exp(float(k))

    @staticmethod
    def default_for(window: MetricWindow) -> "ClumpingParams":
        # r(k_max) reaches past the window diameter, so the top level has
        # no effective cutters and always forms a single clump.
        k_max = max(1, math.ceil(math.log(window.diameter())))
        return ClumpingParams(window.dimension, k_max)


@dataclass(frozen=True)
class Cutter:
    """Separating sphere: all window points at ``radius`` from a seed."""

    center_id: int
    center: np.ndarray
    radius: float
    level: int


@dataclass(frozen=True)
class ClumpHierarchy:
    """Clump labels per point for each level 1..k_max.

    ``labels[k]`` assigns every point id a dense clump label; labels are
    numbered by first point occurrence, so they are stable under reruns.
    ``dropped_levels`` lists torus levels whose cutter radius reached
    side/2 and therefore separates nothing.
    """

    n: int
    k_max: int
    labels: dict[int, np.ndarray]
    cutters: dict[int, tuple[Cutter, ...]]
    dropped_levels: tuple[int, ...]
    params: ClumpingParams

    def partition(self, level: int) -> list[list[int]]:
        """Clumps at a level as id lists, ordered by clump label."""
        lab = self.labels[level]
        groups: list[list[int]] = [[] for _ in range(int(lab.max()) + 1 if len(lab) else 0)]
        for i, g in enumerate(lab):
            groups[int(g)].append(i)
        return groups

    def top_is_single_clump(self) -> bool:
        lab = self.labels[self.k_max]
        return len(lab) == 0 or int(lab.max()) == 0


def find_seeds(
    cfg: PointConfiguration,
    k: int,
    params: ClumpingParams,
    nn_dist: np.ndarray | None = None,
    degeneracies: Degeneracies | None = None,
) -> list[Cutter]:
    """Cutters of level k: one per point whose nearest other point lies
    strictly within the seed radius a(k)."""
    if k < 1:
        raise ValueError("level must be at least 1")
    if cfg.n < 2:
        return []
    if nn_dist is None:
        nn_dist = neighbors.nn_distances(cfg.window, cfg.points)
    a_k = params.seed_radius(k)
    if degeneracies is not None:
        degeneracies.distance_ties += int(np.count_nonzero(nn_dist == a_k))
    r_k = params.cutter_radius(k)
    return [
        Cutter(center_id=int(i), center=cfg.points[i], radius=r_k, level=k)
        for i in np.flatnonzero(nn_dist < a_k)
    ]


def _inside_bits(
    window: MetricWindow,
    points: np.ndarray,
    cutters: list[Cutter],
    degeneracies: Degeneracies | None,
) -> np.ndarray:
    """(n, m) bit matrix: point strictly-inside-or-on each cutter sphere.

    A point exactly on a sphere counts as inside and increments the
    on-cutter degeneracy counter.
    """
    n = len(points)
    centers = np.array([c.center for c in cutters])
    radii = np.array([c.radius for c in cutters])
    bits = np.empty((n, len(cutters)), dtype=bool)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        d = window.distance_matrix(points[lo:hi], centers)
        if degeneracies is not None:
            degeneracies.on_cutter_points += int(np.count_nonzero(d == radii[None, :]))
        bits[lo:hi] = d <= radii[None, :]
    return bits


def _first_occurrence_labels(rows: np.ndarray) -> np.ndarray:
    _, first, inverse = np.unique(rows, axis=0, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inverse.ravel()]


def build_hierarchy(
    cfg: PointConfiguration,
    params: ClumpingParams | None = None,
    degeneracies: Degeneracies | None = None,
) -> ClumpHierarchy:
    """Build all levels top-down so nesting holds by construction.

    The level-k grouping refines the level-(k+1) grouping with the bits of
    level-k cutters only; two points get the same level-k label exactly
    when they agree on every cutter of level k and above.
    """
    if params is None:
        params = ClumpingParams.default_for(cfg.window)
    if params.dimension != cfg.window.dimension:
        raise ValueError("params dimension does not match the window")
    window = cfg.window
    n = cfg.n
    nn_dist = (
        neighbors.nn_distances(window, cfg.points) if n >= 2 else np.empty(0)
    )
    labels: dict[int, np.ndarray] = {}
    cutters: dict[int, tuple[Cutter, ...]] = {}
    dropped: list[int] = []
    group = np.zeros(n, dtype=np.int64)
    for k in range(params.k_max, 0, -1):
        level_cutters = find_seeds(cfg, k, params, nn_dist=nn_dist, degeneracies=degeneracies)
        if window.kind == TORUS and params.cutter_radius(k) >= window.extent / 2.0:
            if level_cutters:
                dropped.append(k)
            level_cutters = []
        cutters[k] = tuple(level_cutters)
        if level_cutters and n:
            bits = _inside_bits(window, cfg.points, level_cutters, degeneracies)
            rows = np.column_stack([group[:, None], np.packbits(bits, axis=1)])
            group = _first_occurrence_labels(rows)
        labels[k] = group.copy()
    return ClumpHierarchy(
        n=n,
        k_max=params.k_max,
        labels=labels,
        cutters=cutters,
        dropped_levels=tuple(sorted(dropped)),
        params=params,
    )


def is_coarsening(fine: np.ndarray, coarse: np.ndarray) -> bool:
    """Whether every fine clump lies inside a single coarse clump."""
    if len(fine) != len(coarse):
        raise ValueError("label arrays must have equal length")
    seen: dict[int, int] = {}
    for f, c in zip(fine.tolist(), coarse.tolist()):
        if f in seen:
            if seen[f] != c:
                return False
        else:
            seen[f] = c
    return True


def partition_by_pairwise_separation(
    cfg: PointConfiguration, params: ClumpingParams | None = None
) -> dict[int, np.ndarray]:
    """Brute-force cross-check: pairwise separation tests plus transitive
    closure, one level at a time, with no shared machinery with
    :func:`build_hierarchy`.  Quadratic in points; small inputs only.
    """
    if params is None:
        params = ClumpingParams.default_for(cfg.window)
    window = cfg.window
    n = cfg.n
    out: dict[int, np.ndarray] = {}
    all_cutters: list[Cutter] = []
    for k in range(1, params.k_max + 1):
        if window.kind == TORUS and params.cutter_radius(k) >= window.extent / 2.0:
            continue
        a_k = params.seed_radius(k)
        for i in range(n):
            for j in range(n):
                if j != i and window.distance(cfg.points[i], cfg.points[j]) < a_k:
                    all_cutters.append(
                        Cutter(
                            center_id=i,
                            center=cfg.points[i],
                            radius=params.cutter_radius(k),
                            level=k,
                        )
                    )
                    break
    for level in range(1, params.k_max + 1):
        parent = list(range(n))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        relevant = [c for c in all_cutters if c.level >= level]
        for i in range(n):
            for j in range(i + 1, n):
                separated = False
                for c in relevant:
                    di = window.distance(cfg.points[i], c.center)
                    dj = window.distance(cfg.points[j], c.center)
                    if (di <= c.radius) != (dj <= c.radius):
                        separated = True
                        break
                if not separated:
                    parent[find(i)] = find(j)
        roots = [find(i) for i in range(n)]
        relabel: dict[int, int] = {}
        lab = np.empty(n, dtype=np.int64)
        for i, r in enumerate(roots):
            if r not in relabel:
                relabel[r] = len(relabel)
            lab[i] = relabel[r]
        out[level] = lab
    return out


def enclosure_stats(
    configs,
    params: ClumpingParams | None = None,
    levels=(1, 2, 3, 4),
    probe_radius: float = 1.0,
) -> list[dict]:
    """Empirical enclosure and intersection frequencies per level.

    Over an ensemble of configurations, estimates the probability that a
    ball of radius 1 at the window center lies strictly inside some
    level-k cutter (a seed closer than r(k) - 1 to the center) and the
    probability that a centered ball of radius ``probe_radius`` meets
    some level-k cutter (a seed at distance within probe_radius of r(k)).

    Torus levels whose cutters cannot fit (side <= 2 r(k) + 2 probe
    radius) are skipped and flagged in the output row.
    """
    rows = {
        k: {"level": k, "runs": 0, "enclosed": 0, "intersected": 0, "skipped": False}
        for k in levels
    }
    for cfg in configs:
        window = cfg.window
        if params is None:
            cfg_params = ClumpingParams.default_for(window)
        else:
            cfg_params = params
        if cfg_params.k_max < max(levels):
            cfg_params = ClumpingParams(window.dimension, max(levels))
        center = window.center()
        if cfg.n >= 2:
            nn_dist = neighbors.nn_distances(window, cfg.points)
            d_center = window.distances_to(cfg.points, center)
        else:
            nn_dist = np.empty(0)
            d_center = np.empty(0)
        for k in levels:
            r_k = cfg_params.cutter_radius(k)
            if window.kind == TORUS and window.extent <= 2.0 * r_k + 2.0 * probe_radius:
                rows[k]["skipped"] = True
                continue
            seeds = nn_dist < cfg_params.seed_radius(k)
            rows[k]["runs"] += 1
            if bool(np.any(seeds & (d_center < r_k - 1.0))):
                rows[k]["enclosed"] += 1
            near = (d_center > r_k - probe_radius) & (d_center < r_k + probe_radius)
            if bool(np.any(seeds & near)):
                rows[k]["intersected"] += 1
    out = []
    for k in levels:
        row = rows[k]
        runs = row["runs"]
        out.append(
            {
                "level": k,
                "runs": runs,
                "enclosed_fraction": row["enclosed"] / runs if runs else None,
                "intersect_fraction": row["intersected"] / runs if runs else None,
                "skipped": row["skipped"],
            }
        )
    return out
