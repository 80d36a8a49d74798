"""Node sets on the unit sphere: file loading, generators and mesh norms."""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyFile, MissingPointSet, NormError, ParseError

log = logging.getLogger(__name__)

__all__ = [
    "PointSet",
    "load_points",
    "save_points",
    "fibonacci_points",
    "random_points",
    "gauss_product_points",
    "mesh_norm",
    "nearest_distance",
    "find_point_file",
    "FETCH_NOTE",
]

FOUR_PI = 4.0 * np.pi
#: nearest-node search switches from brute force to a k-d tree above this size
BRUTE_FORCE_MAX = 4000

FETCH_NOTE = """\
Point files are plain text with three whitespace-separated reals per row
(lines starting with '#' are comments).  Symmetric spherical t-designs and
maximum-determinant node sets are distributed by R. S. Womersley
(https://web.maths.unsw.edu.au/~rsw/Sphere/).  Download them yourself and
place them in one directory; a file is matched to a node count N when its
name contains N zero-padded to five digits, e.g. 'ss053.01434' for N = 1434.
Point the tools at that directory with --points-dir or 'points_dir =' in a
config file.  Without files the experiment drivers fall back to spherical
Fibonacci nodes of the same sizes.
"""


@dataclass(frozen=True)
class PointSet:
    """An immutable node set with a quadrature rule.

    Attributes
    ----------
    nodes : ndarray, shape (N, 3)
        Unit vectors.
    source : str
        ``"file:<path>"``, ``"fibonacci"``, ``"random:<seed>"`` or ``"gauss:<deg>"``.
    design_strength : int or None
        Polynomial degree integrated exactly by the rule, when known.
    weights : ndarray or None
        Per-node quadrature weights.  ``None`` means equal weights ``4 pi / N``.
    """

    nodes: np.ndarray
    source: str = "array"
    design_strength: int | None = None
    weights: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        nodes = np.ascontiguousarray(np.atleast_2d(np.asarray(self.nodes, dtype=float)))
        if nodes.ndim != 2 or nodes.shape[1] != 3 or len(nodes) < 1:
            raise ValueError("nodes must be a non-empty (N, 3) array")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        if self.weights is not None:
            w = np.ascontiguousarray(np.asarray(self.weights, dtype=float))
            if w.shape != (len(nodes),):
                raise ValueError("weights must have one entry per node")
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)

    @property
    def N(self) -> int:
        return len(self.nodes)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def weight(self) -> float:
        """Equal quadrature weight ``4 pi / N``."""
        return FOUR_PI / self.N

    def quadrature_weights(self) -> np.ndarray:
        if self.weights is not None:
            return self.weights
        return np.full(self.N, self.weight)

    def integrate(self, values) -> np.ndarray:
        """Quadrature of ``values`` (first axis over nodes)."""
        values = np.asarray(values, dtype=float)
        return np.tensordot(self.quadrature_weights(), values, axes=(0, 0))


def _parse_rows(lines, path) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(lines, 1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.replace(",", " ").split()
        if len(parts) != 3:
            raise ParseError(f"{path}:{lineno}: expected 3 values, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise EmptyFile(f"{path}: no points")
    return np.array(rows)


def load_points(path, normalize_tol: float = 1e-6, design_strength: int | None = None) -> PointSet:
    """Read a point file with three whitespace-separated reals per row.

    Rows whose norm lies within ``normalize_tol`` of one are renormalised.

    Raises
    ------
    ParseError
        A row does not hold three reals.
    NormError
        A row norm lies outside ``[1 - tol, 1 + tol]``.
    EmptyFile
        No data rows.
    """
    path = Path(path)
    if not path.exists():
        raise MissingPointSet(str(path))
    with open(path) as fh:
        pts = _parse_rows(fh, path)
    norms = np.linalg.norm(pts, axis=1)
    bad = np.abs(norms - 1.0) > normalize_tol
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NormError(f"{path}: row {i + 1} has norm {norms[i]:.6g}")
    # rows already unit to rounding are kept as read so round trips are bitwise
    pts = np.where((np.abs(norms - 1.0) <= 4e-16)[:, None], pts, pts / norms[:, None])
    return PointSet(pts, source=f"file:{path}", design_strength=design_strength)


def save_points(points: PointSet, path) -> None:
    """Write nodes with 17 significant digits (bitwise round trip)."""
    np.savetxt(path, points.nodes, fmt="%.17g", header=f"N={points.N} source={points.source}")


def fibonacci_points(N: int) -> PointSet:
    """Spherical Fibonacci lattice with ``N`` nodes."""
    if N < 1:
        raise ValueError("N must be positive")
    i = np.arange(N, dtype=float)
    z = 1.0 - (2.0 * i + 1.0) / N
    golden = (1.0 + np.sqrt(5.0)) / 2.0
    phi = 2.0 * np.pi * np.mod(i / golden, 1.0)
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    return PointSet(pts, source="fibonacci")


def random_points(N: int, seed: int) -> PointSet:
    """I.i.d. uniform nodes from normalised Gaussian draws."""
    if N < 1:
        raise ValueError("N must be positive")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((N, 3))
    g /= np.linalg.norm(g, axis=1)[:, None]
    return PointSet(g, source=f"random:{seed}")


def gauss_product_points(degree: int) -> PointSet:
    """Gauss-Legendre in ``cos(theta)`` times equispaced longitudes.

    Integrates all polynomials of total degree ``<= degree`` exactly, with
    unequal weights.  Used where an exact rule of known strength is needed.
    """
    n_t = degree // 2 + 1
    n_p = degree + 1
    z, wz = np.polynomial.legendre.leggauss(n_t)
    phi = 2.0 * np.pi * (np.arange(n_p) + 0.5) / n_p
    Z, P = np.meshgrid(z, phi, indexing="ij")
    r = np.sqrt(1.0 - Z**2)
    pts = np.column_stack([(r * np.cos(P)).ravel(), (r * np.sin(P)).ravel(), Z.ravel()])
    w = np.repeat(wz * (2.0 * np.pi / n_p), n_p)
    return PointSet(pts, source=f"gauss:{degree}", design_strength=degree, weights=w)


def nearest_distance(nodes: np.ndarray, queries: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Geodesic distance from each query to its nearest node."""
    nodes = np.asarray(nodes, dtype=float)
    queries = np.asarray(queries, dtype=float)
    if len(nodes) <= BRUTE_FORCE_MAX:
        best = np.empty(len(queries))
        for lo in range(0, len(queries), chunk):
            t = queries[lo:lo + chunk] @ nodes.T
            best[lo:lo + chunk] = t.max(axis=1)
        return np.arccos(np.clip(best, -1.0, 1.0))
    chord, _ = cKDTree(nodes).query(queries)
    return 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))


def _circumcentres(nodes: np.ndarray, seeds: np.ndarray) -> np.ndarray:
    # spherical circumcentre of the three nodes nearest to each seed, taken
    # on the seed's side; local maxima of the distance field sit there
    _, idx = cKDTree(nodes).query(seeds, k=3)
    a, b, c = (nodes[idx[:, j]] for j in range(3))
    n = np.cross(b - a, c - a)
    norm = np.linalg.norm(n, axis=1)
    ok = norm > 1e-15
    n = n[ok] / norm[ok, None]
    n *= np.sign(np.einsum("ij,ij->i", n, seeds[ok]))[:, None]
    return n


def mesh_norm(points: PointSet, resolution: int | None = None, refine: bool = True) -> float:
    """Fill distance estimated on a Fibonacci covering grid.

    Converges from below as ``resolution`` grows; defaults to ``20 N``
    (at least 20000 grid points).  With ``refine`` the grid points within
    two grid spacings of the maximum are moved to the circumcentre of their
    three nearest nodes, which removes most of the grid bias; the estimate
    stays a lower bound.
    """
    if resolution is None:
        resolution = max(20 * points.N, 20000)
    grid = fibonacci_points(int(resolution)).nodes
    d = nearest_distance(points.nodes, grid)
    h = float(d.max())
    if refine and points.N >= 3:
        spacing = np.sqrt(4.0 * np.pi / len(grid))
        seeds = grid[d >= h - 2.0 * spacing]
        cc = _circumcentres(points.nodes, seeds)
        if len(cc):
            h = max(h, float(nearest_distance(points.nodes, cc).max()))
    return h


def find_point_file(directory, N: int) -> Path:
    """Locate the file for ``N`` nodes in ``directory``.

    Raises :class:`MissingPointSet` if no file name contains ``N`` padded to
    five digits.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise MissingPointSet(f"point directory {directory} not found")
    tag = f"{N:05d}"
    hits = sorted(p for p in directory.iterdir() if p.is_file() and tag in p.name)
    if not hits:
        raise MissingPointSet(f"no point file for N={N} in {directory}")
    if len(hits) > 1:
        log.warning("several files match N=%d, using %s", N, hits[0])
    return hits[0]


def default_points_dir() -> str | None:
    return os.environ.get("SPHVQI_POINTS_DIR")
