"""Point configuration generators and the non-equidistance check.

Generators are deterministic functions of (window, parameters, seed); a
run is reproduced exactly by replaying its seed.  Ensembles derive
per-run seeds from a master seed with :func:`derive_seeds`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import neighbors
from .metric import DISK, TORUS, MetricWindow

# Poisson counts are drawn through numpy's generator (PCG64 stream); the
# label is recorded in run manifests so the sampling route is auditable.
POISSON_ALGORITHM = "numpy-pcg64-poisson"

# Lattice coordinates are snapped to this grid so that equal lattice
# distances stay exactly equal as stored doubles (see perturbed_lattice).
_LATTICE_QUANTUM = 2.0 ** -20

_ENRICH_RETRIES = 32


@dataclass(frozen=True)
class PointConfiguration:
    """An indexed finite point set in a metric window.

    Points are stored as an (n, d) float array in canonical coordinates
    and are indexed by their row, giving dense ids 0..n-1.  ``rng_seed``
    is the seed that produced the configuration (0 for hand-built ones).
    """

    window: MetricWindow
    points: np.ndarray
    rng_seed: int = 0

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, self.window.dimension)
        if pts.ndim != 2 or pts.shape[1] != self.window.dimension:
            raise ValueError(
                f"points must be an (n, {self.window.dimension}) array, got shape {pts.shape}"
            )
        pts = self.window.canonicalize(pts)
        for p in pts:
            if not self.window.contains(p):
                raise ValueError(f"point {p} lies outside the window")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return len(self.points)

    def distance(self, i: int, j: int) -> float:
        return self.window.distance(self.points[i], self.points[j])


@dataclass(frozen=True)
class NonEquidistanceReport:
    """Outcome of scanning all pair distances for an exact repeat.

    ``holds`` is False exactly when a witness (w, x, y, z) exists: two
    distinct unordered pairs {w,x} and {y,z} whose stored distances are
    exactly equal and positive.
    """

    holds: bool
    witness: tuple[int, int, int, int] | None = None
    distance: float | None = None

    def __post_init__(self) -> None:
        if self.holds != (self.witness is None):
            raise ValueError("witness must be present exactly when the check fails")


def derive_seeds(master_seed: int, count: int) -> list[int]:
    """Independent per-run seeds split from a master seed.

    Uses numpy's SeedSequence state expansion, so the mapping is stable
    across runs and platforms.
    """
    state = np.random.SeedSequence(master_seed).generate_state(count, dtype=np.uint64)
    return [int(s) for s in state]


def sample_poisson(window: MetricWindow, intensity: float, seed: int) -> PointConfiguration:
    """Poisson sample: N ~ Poisson(intensity * |window|), then N points
    uniform in the window.  Deterministic given (window, intensity, seed)."""
    if not intensity > 0:
        raise ValueError("intensity must be strictly positive")
    mean = intensity * window.volume()
    if not math.isfinite(mean):
        raise ValueError("intensity * window volume must be finite")
    rng = np.random.default_rng(seed)
    n = int(rng.poisson(mean))
    pts = window.sample_uniform(rng, n)
    return PointConfiguration(window, pts, rng_seed=seed)


def _quantize(x: np.ndarray) -> np.ndarray:
    return np.floor(x / _LATTICE_QUANTUM) * _LATTICE_QUANTUM


def perturbed_lattice(d: int, side: int, seed: int) -> PointConfiguration:
    """The integer lattice on a torus of the given side, under a uniform
    random translation (plus, for d = 2, a uniform rotation about the
    window center applied before wrapping).

    Translation and rotated basis vectors are snapped to a 2^-20 grid:
    with dyadic coordinates, equal lattice gaps produce bit-identical
    stored distances, which is what this adversarial fixture exists to
    exhibit.  A rotated lattice does not tile the torus, so the d = 2
    variant has seam artifacts near the wrap boundary; that is accepted.
    """
    if d not in (1, 2, 3):
        raise ValueError("perturbed lattices are supported for d in {1, 2, 3}")
    if int(side) != side or side < 1:
        raise ValueError("side must be a positive integer")
    if d == 2 and side > 64:
        raise ValueError("side > 64 would overflow exact distance arithmetic for d=2")
    side = int(side)
    window = MetricWindow(TORUS, d, float(side))
    rng = np.random.default_rng(seed)
    shift = _quantize(rng.random(d))
    lattice = np.array(list(product(range(side), repeat=d)), dtype=float)
    if d == 2:
        theta = rng.uniform(0.0, 2.0 * math.pi)
        c = _quantize(np.array([math.cos(theta)]))[0]
        s = _quantize(np.array([math.sin(theta)]))[0]
        ctr = side / 2.0
        dx = lattice[:, 0] - ctr
        dy = lattice[:, 1] - ctr
        pts = np.column_stack([dx * c - dy * s + ctr, dx * s + dy * c + ctr])
    else:
        pts = lattice
    pts = np.mod(pts + shift, float(side))
    return PointConfiguration(window, pts, rng_seed=seed)


def _disk_geodesic_points(anchor: np.ndarray, phi: float, arc_lengths: np.ndarray) -> np.ndarray:
    # Mobius-translate points on a geodesic ray from the origin out to the
    # anchor; the translation is an isometry, so consecutive hyperbolic
    # gaps equal the requested arc-length increments.
    a = complex(anchor[0], anchor[1])
    w = np.tanh(arc_lengths / 2.0) * np.exp(1j * phi)
    z = (a + w) / (1.0 + np.conj(a) * w)
    return np.column_stack([z.real, z.imag])


def enrich_descending_chains(
    cfg: PointConfiguration, chain_length: int, ratio: float, seed: int
) -> PointConfiguration:
    """Append a geometric chain of extra points to a random anchor.

    ``chain_length`` points are laid along a straight segment (a geodesic
    on the disk) from a uniformly chosen anchor, with consecutive gaps
    g, g*ratio, g*ratio^2, ... where g is half the anchor's
    nearest-neighbor distance.  The result therefore contains a strictly
    descending chain of at least ``chain_length`` steps.  On windows that
    cannot wrap, a chain leaving the window is retried with a fresh
    direction a bounded number of times.
    """
    if cfg.n < 2:
        raise ValueError("need at least two points to size the chain gap")
    if chain_length < 2:
        raise ValueError("chain_length must be at least 2")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie strictly between 0 and 1")
    window = cfg.window
    rng = np.random.default_rng(seed)
    anchor_id = int(rng.integers(cfg.n))
    anchor = cfg.points[anchor_id]
    nn_ids, nn_dists = neighbors.nn_info(window, cfg.points)
    g = float(nn_dists[anchor_id]) / 2.0
    if g <= 0.0:
        raise ValueError("anchor coincides with another point; no positive gap exists")
    arcs = g * np.cumsum(ratio ** np.arange(chain_length))

    for _ in range(_ENRICH_RETRIES):
        if window.kind == DISK:
            phi = rng.uniform(0.0, 2.0 * math.pi)
            extra = _disk_geodesic_points(anchor, phi, arcs)
        else:
            direction = rng.normal(size=window.dimension)
            direction /= np.linalg.norm(direction)
            extra = anchor[None, :] + arcs[:, None] * direction[None, :]
            if window.kind == TORUS:
                extra = window.canonicalize(extra)
        if all(window.contains(p) for p in extra):
            pts = np.vstack([cfg.points, extra])
            return PointConfiguration(window, pts, rng_seed=seed)
    raise ValueError("chain left the window in every attempted direction")


def check_non_equidistant(cfg: PointConfiguration) -> NonEquidistanceReport:
    """Scan all unordered pair distances for an exact positive repeat.

    Pairs are scanned in lexicographic id order and distances compared as
    stored doubles, never with a tolerance.  The witness returned is the
    first repeat that scan encounters.
    """
    n = cfg.n
    if n < 2:
        return NonEquidistanceReport(holds=True)
    keys = neighbors.condensed_keys(cfg.window, cfg.points)
    dists = np.asarray(cfg.window.distance_from_key(keys))
    order = np.argsort(dists, kind="stable")
    ordered = dists[order]
    best_second: int | None = None
    best_first: int | None = None
    pos = 0
    m = len(ordered)
    while pos < m:
        end = pos + 1
        while end < m and ordered[end] == ordered[pos]:
            end += 1
        if end - pos >= 2 and ordered[pos] > 0.0:
            group = np.sort(order[pos:end])
            if best_second is None or int(group[1]) < best_second:
                best_second = int(group[1])
                best_first = int(group[0])
        pos = end
    if best_second is None:
        return NonEquidistanceReport(holds=True)
    w, x = neighbors.condensed_to_pair(n, best_first)
    y, z = neighbors.condensed_to_pair(n, best_second)
    return NonEquidistanceReport(
        holds=False, witness=(w, x, y, z), distance=float(dists[best_first])
    )
