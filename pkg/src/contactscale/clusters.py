"""R-clustering of infected sites, rescaled cluster measure and mesoscopic boxes."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import ParameterError
from .process import CanonicalConfig, Configuration

NORMS = {"sup": np.inf, "l1": 1}


@dataclass
class ClusterSet:
    """Components as ``(anchor, mark)``: lexicographic-minimum site and canonical shape."""

    components: list  # [(anchor tuple, CanonicalConfig)]
    R: int
    norm: str = "sup"

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def sites(self):
        """All sites, reconstructed as anchor + mark."""
        out = []
        for anchor, mark in self.components:
            out.extend(tuple(a + b for a, b in zip(anchor, z)) for z in mark.sites)
        return sorted(out)

    def max_diameter(self) -> int:
        return max((m.width for _, m in self.components), default=0)

    def to_json(self) -> dict:
        return {"R": self.R, "norm": self.norm,
                "components": [[list(a), m.to_json()] for a, m in self.components]}


def _as_coords(eta) -> np.ndarray:
    if isinstance(eta, Configuration):
        eta = eta.sites
    arr = np.asarray(list(eta) if not isinstance(eta, np.ndarray) else eta, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if arr.size else arr.reshape(0, 1)
    return arr


def component_labels(coords: np.ndarray, R: int, norm: str = "sup") -> np.ndarray:
    """Component label per row of ``coords``; sites at distance < R are linked."""
    n = len(coords)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    # integer coordinates: distance < R  <=>  distance <= R - 1/2
    pairs = cKDTree(coords).query_pairs(R - 0.5, p=NORMS[norm], output_type="ndarray")
    g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(g, directed=False)
    return labels


def extract_clusters(eta, R: int, norm: str = "sup") -> ClusterSet:
    """Connected components of the graph joining sites of ``eta`` at distance < R."""
    if R < 1:
        raise ParameterError("R must be a positive integer")
    if norm not in NORMS:
        raise ParameterError(f"unknown norm {norm!r}")
    coords = _as_coords(eta)
    if len(coords) == 0:
        return ClusterSet([], int(R), norm)
    coords = coords[np.lexsort(coords.T[::-1])]
    labels = component_labels(coords, R, norm)
    comps = []
    # rows are lexicographically sorted, so the first row of a label is its anchor
    order = np.argsort(labels, kind="stable")
    bounds = np.flatnonzero(np.diff(labels[order])) + 1
    for grp in np.split(order, bounds):
        pts = coords[grp]
        anchor = pts[0]
        comps.append((tuple(int(c) for c in anchor),
                      CanonicalConfig(tuple(map(tuple, (pts - anchor).tolist())))))
    comps.sort()
    return ClusterSet(comps, int(R), norm)


@dataclass
class MarkedMeasure:
    """Rescaled anchors with their marks, restricted to ``[-K, K]^d``."""

    locations: np.ndarray  # (n, d) float
    anchors: np.ndarray  # (n, d) int, microscopic positions
    marks: list
    scale: float
    K: float

    def __len__(self):
        return len(self.marks)

    def to_jsonl(self) -> str:
        return "".join(json.dumps({"location": loc.tolist(), "mark": m.to_json()}) + "\n"
                       for loc, m in zip(self.locations, self.marks))

    @classmethod
    def from_jsonl(cls, text: str, scale: float, K: float) -> "MarkedMeasure":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        locs = np.array([r["location"] for r in rows], dtype=float)
        anchors = np.rint(locs / scale).astype(np.int64) if rows else np.zeros((0, 1), np.int64)
        return cls(locs, anchors, [CanonicalConfig.from_json(r["mark"]) for r in rows], scale, K)


def marked_measure(clusters: ClusterSet, alpha_hat: float, t: float, K: float, d: int | None = None):
    """Anchors scaled by ``exp(-alpha t / d)``; points outside ``[-K, K]^d`` are dropped."""
    if not alpha_hat > 0:
        raise ParameterError("alpha_hat must be positive")
    if d is None:
        d = len(clusters.components[0][0]) if clusters.components else 1
    scale = math.exp(-alpha_hat * t / d)
    if not clusters.components:
        return MarkedMeasure(np.zeros((0, d)), np.zeros((0, d), np.int64), [], scale, K)
    anchors = np.array([a for a, _ in clusters.components], dtype=np.int64)
    locs = anchors * scale
    keep = np.abs(locs).max(axis=1) <= K
    marks = [m for (_, m), k in zip(clusters.components, keep) if k]
    return MarkedMeasure(locs[keep], anchors[keep], marks, scale, K)


@dataclass
class MesoGrid:
    """Boxes ``j (2R+1) + [-R, R]^d``, ``|j|_inf <= m``, covering the viewing window."""

    R: int
    d: int
    m: int
    scale: float = 1.0

    @property
    def spacing(self) -> int:
        return 2 * self.R + 1

    @property
    def shape(self) -> tuple:
        return (2 * self.m + 1,) * self.d

    @property
    def n_boxes(self) -> int:
        return (2 * self.m + 1) ** self.d

    @property
    def half_width(self) -> int:
        """Microscopic half-width of the union of boxes."""
        return self.m * self.spacing + self.R

    @classmethod
    def covering(cls, R: int, d: int, K: float, scale: float) -> "MesoGrid":
        """Smallest grid whose boxes cover ``[-K, K]^d`` after rescaling by ``scale``."""
        reach = K / scale
        m = max(0, math.ceil((reach - R) / (2 * R + 1)))
        return cls(int(R), d, m, scale)

    @classmethod
    def with_boxes(cls, R: int, d: int, n_per_axis: int, scale: float = 1.0) -> "MesoGrid":
        if n_per_axis % 2 != 1:
            raise ParameterError("boxes per axis must be odd so the grid is centred")
        return cls(int(R), d, n_per_axis // 2, scale)

    def viewing_K(self) -> float:
        """Rescaled half-width of the grid cover."""
        return self.half_width * self.scale

    def box_of(self, anchors: np.ndarray) -> np.ndarray:
        """Grid multi-index of each anchor (shifted to start at 0); -1 rows fall outside."""
        anchors = np.asarray(anchors, dtype=np.int64).reshape(-1, self.d)
        j = np.floor_divide(anchors + self.R, self.spacing) + self.m
        outside = ((j < 0) | (j > 2 * self.m)).any(axis=1)
        j[outside] = -1
        return j


@dataclass
class BoxCounts:
    counts: np.ndarray  # shape grid.shape
    grid: MesoGrid = field(repr=False)

    @property
    def voids(self) -> np.ndarray:
        return self.counts == 0

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def rectangle(self, lo, hi) -> int:
        """Count over the block of boxes with indices ``lo <= j < hi`` per axis."""
        sl = tuple(slice(a, b) for a, b in zip(lo, hi))
        return int(self.counts[sl].sum())


def box_statistics(measure: MarkedMeasure, grid: MesoGrid, mark_class=None) -> BoxCounts:
    """Per-box counts of points whose mark lies in ``mark_class`` (None = every mark)."""
    counts = np.zeros(grid.shape, dtype=np.int64)
    if len(measure) == 0:
        return BoxCounts(counts, grid)
    sel = np.ones(len(measure), dtype=bool)
    if mark_class is not None:
        mark_class = set(mark_class)
        sel = np.array([m in mark_class for m in measure.marks], dtype=bool)
    j = grid.box_of(measure.anchors[sel])
    inside = (j >= 0).all(axis=1)
    np.add.at(counts, tuple(j[inside].T), 1)
    return BoxCounts(counts, grid)


def box_counts_from_anchors(anchors: np.ndarray, grid: MesoGrid) -> np.ndarray:
    """Fast path used by the experiments: counts straight from anchor coordinates."""
    counts = np.zeros(grid.shape, dtype=np.int64)
    if len(anchors):
        j = grid.box_of(anchors)
        inside = (j >= 0).all(axis=1)
        np.add.at(counts, tuple(j[inside].T), 1)
    return counts
