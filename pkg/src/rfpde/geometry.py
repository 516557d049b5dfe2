"""Computational domains and seeded collocation sampling.

Domains: axis-aligned boxes (unit square, rectangles, hypercubes, space-time
boxes), annuli and Koch snowflakes.  Box faces are labelled ``"x{j}-"`` and
``"x{j}+"`` (1-based axis ``j``, lower/upper face); annulus components are
``"inner"`` and ``"outer"``; the Koch boundary is ``"boundary"``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, ResourceLimit, SamplingFailure

BOUNDARY_EXCLUSION = 1e-12
MIN_ACCEPTANCE = 1e-3
MAX_KOCH_LEVEL = 8


# --------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or not lo:
            raise InvalidArgument("box bounds must be non-empty and of equal length")
        if any(a >= b for a, b in zip(lo, hi)):
            raise InvalidArgument(f"box needs lo < hi componentwise, got {lo}, {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dimension(self) -> int:
        return len(self.lo)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.lo), np.array(self.hi)

    def face_labels(self) -> list[str]:
        return [f"x{j + 1}{s}" for j in range(self.dimension) for s in "-+"]

    def face_measure(self, label: str) -> float:
        j = int(label[1:-1]) - 1
        return math.prod(h - l for i, (l, h) in enumerate(zip(self.lo, self.hi)) if i != j)


def rectangle(a: float, b: float) -> Box:
    return Box((0.0, 0.0), (a, b))


def hypercube(d: int, lo: float = -1.0, hi: float = 1.0) -> Box:
    return Box((lo,) * d, (hi,) * d)


@dataclass(frozen=True)
class Annulus:
    inner: float
    outer: float

    def __post_init__(self):
        if not 0 < self.inner < self.outer:
            raise InvalidArgument(f"annulus needs 0 < inner < outer, got {self.inner}, {self.outer}")

    dimension = 2

    def bounds(self):
        return np.full(2, -self.outer), np.full(2, self.outer)


@dataclass(frozen=True)
class Koch:
    level: int

    def __post_init__(self):
        if self.level < 0:
            raise InvalidArgument("Koch level must be non-negative")
        if self.level > MAX_KOCH_LEVEL:
            raise ResourceLimit(f"Koch level {self.level} exceeds {MAX_KOCH_LEVEL}")

    dimension = 2

    @property
    def polygon(self) -> "Polygon":
        return koch_polygon(self.level)

    def bounds(self):
        v = self.polygon.vertices
        return v.min(axis=0), v.max(axis=0)


Domain = Box | Annulus | Koch


@dataclass(frozen=True)
class BoundaryGroup:
    points: np.ndarray
    normals: np.ndarray | None
    label: str


# --------------------------------------------------------------------------
# polygons


@dataclass(frozen=True, eq=False)
class Polygon:
    """Closed counter-clockwise polygon; the last vertex connects to the first."""

    vertices: np.ndarray

    @property
    def n_edges(self) -> int:
        return len(self.vertices)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        p = self.vertices
        return p, np.roll(p, -1, axis=0)

    def area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x1", "x2"])
            for x1, x2 in self.vertices:
                w.writerow([repr(float(x1)), repr(float(x2))])


_KOCH_CACHE: dict[int, Polygon] = {}


def koch_polygon(level: int) -> Polygon:
    """Koch snowflake after ``level`` refinements.

    The base equilateral triangle is centred at (0.5, 0.5) with circumradius
    0.5 and one vertex pointing up.  Every edge is split in thirds and the
    middle third replaced by an outward equilateral bump.
    """
    if level < 0:
        raise InvalidArgument("Koch level must be non-negative")
    if level > MAX_KOCH_LEVEL:
        raise ResourceLimit(f"Koch level {level} exceeds {MAX_KOCH_LEVEL}")
    if level in _KOCH_CACHE:
        return _KOCH_CACHE[level]
    ang = np.deg2rad([90.0, 210.0, 330.0])
    pts = np.column_stack([0.5 + 0.5 * np.cos(ang), 0.5 + 0.5 * np.sin(ang)])
    c, s = math.cos(-math.pi / 3), math.sin(-math.pi / 3)
    rot = np.array([[c, -s], [s, c]])
    for _ in range(level):
        p, q = pts, np.roll(pts, -1, axis=0)
        d = (q - p) / 3.0
        a = p + d
        tip = a + d @ rot.T  # clockwise turn points outward for CCW order
        b = p + 2.0 * d
        pts = np.stack([p, a, tip, b], axis=1).reshape(-1, 2)
    poly = Polygon(pts)
    poly.vertices.setflags(write=False)
    _KOCH_CACHE[level] = poly
    return poly


def koch_area(level: int, base_area: float) -> float:
    return base_area * (1.0 + sum((4.0 / 9.0) ** (i - 1) for i in range(1, level + 1)) / 3.0)


def _points_in_polygon(poly: Polygon, pts: np.ndarray, chunk: int = 2048) -> np.ndarray:
    # even-odd ray casting along +x
    a, b = poly.edges()
    ax, ay, bx, by = a[:, 0], a[:, 1], b[:, 0], b[:, 1]
    out = np.empty(len(pts), dtype=bool)
    for s in range(0, len(pts), chunk):
        x = pts[s:s + chunk, 0:1]
        y = pts[s:s + chunk, 1:2]
        straddle = (ay > y) != (by > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = ax + (y - ay) * (bx - ax) / (by - ay)
        out[s:s + chunk] = np.count_nonzero(straddle & (x < xcross), axis=1) % 2 == 1
    return out


def _distance_to_polygon(poly: Polygon, pts: np.ndarray, chunk: int = 1024) -> np.ndarray:
    a, b = poly.edges()
    ab = b - a
    len2 = np.einsum("ij,ij->i", ab, ab)
    out = np.empty(len(pts))
    for s in range(0, len(pts), chunk):
        p = pts[s:s + chunk, None, :]
        t = np.clip(np.einsum("pej,ej->pe", p - a, ab) / len2, 0.0, 1.0)
        closest = a + t[..., None] * ab
        out[s:s + chunk] = np.sqrt(((p - closest) ** 2).sum(axis=-1)).min(axis=1)
    return out


# --------------------------------------------------------------------------
# membership


def contains(domain: Domain, points) -> np.ndarray | bool:
    """Membership test; accepts one point or a (P, k) array."""
    x = np.asarray(points, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != domain.dimension:
        raise InvalidArgument(f"points of dimension {x.shape[1]} for a {domain.dimension}-d domain")
    if isinstance(domain, Box):
        lo, hi = domain.bounds()
        res = np.all((x >= lo) & (x <= hi), axis=1)
    elif isinstance(domain, Annulus):
        r = np.hypot(x[:, 0], x[:, 1])
        res = (r >= domain.inner) & (r <= domain.outer)
    elif isinstance(domain, Koch):
        res = _points_in_polygon(domain.polygon, x)
    else:
        raise InvalidArgument(f"unsupported domain {domain!r}")
    return bool(res[0]) if single else res


def distance_to_boundary(domain: Domain, x: np.ndarray) -> np.ndarray:
    if isinstance(domain, Box):
        lo, hi = domain.bounds()
        return np.minimum(np.abs(x - lo), np.abs(hi - x)).min(axis=1)
    if isinstance(domain, Annulus):
        r = np.hypot(x[:, 0], x[:, 1])
        return np.minimum(np.abs(r - domain.inner), np.abs(domain.outer - r))
    return _distance_to_polygon(domain.polygon, x)


# --------------------------------------------------------------------------
# sampling


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def sample_interior(domain: Domain, n: int, seed) -> np.ndarray:
    """``n`` i.i.d. uniform points strictly inside the domain.

    Candidates are drawn uniformly from the bounding box in batches and
    rejected when outside or within 1e-12 of the boundary.
    """
    if int(n) != n or n < 1:
        raise InvalidArgument(f"n must be a positive integer, got {n!r}")
    n = int(n)
    rng = _rng(seed)
    lo, hi = domain.bounds()
    accepted: list[np.ndarray] = []
    count = drawn = 0
    batch = max(1024, 2 * n)
    while count < n:
        cand = rng.uniform(lo, hi, size=(batch, len(lo)))
        keep = contains(domain, cand)
        if keep.any():
            idx = np.flatnonzero(keep)
            keep[idx] = distance_to_boundary(domain, cand[idx]) > BOUNDARY_EXCLUSION
        good = cand[keep]
        drawn += batch
        accepted.append(good)
        count += len(good)
        if count / drawn < MIN_ACCEPTANCE:
            raise SamplingFailure(
                f"acceptance rate {count / drawn:.2e} below {MIN_ACCEPTANCE:g} for {domain!r}"
            )
    return np.concatenate(accepted)[:n]


def _resolve_faces(domain: Box, subset) -> list[str]:
    faces = domain.face_labels()
    if subset is None or subset == "boundary":
        return faces
    wanted = [subset] if isinstance(subset, str) else list(subset)
    for lab in wanted:
        if lab not in faces:
            raise InvalidArgument(f"unknown boundary label {lab!r}; box faces are {faces}")
    return wanted


def _sample_box_boundary(domain: Box, n: int, rng, subset) -> tuple[np.ndarray, np.ndarray]:
    faces = _resolve_faces(domain, subset)
    k = domain.dimension
    lo, hi = domain.bounds()
    if k == 1:
        # faces are single points; cycle through them instead of drawing
        which = np.arange(n) % len(faces)
    else:
        meas = np.array([domain.face_measure(f) for f in faces])
        which = rng.choice(len(faces), size=n, p=meas / meas.sum())
    pts = rng.uniform(lo, hi, size=(n, k))
    normals = np.zeros((n, k))
    for fi, lab in enumerate(faces):
        sel = which == fi
        j = int(lab[1:-1]) - 1
        upper = lab.endswith("+")
        pts[sel, j] = hi[j] if upper else lo[j]
        normals[sel, j] = 1.0 if upper else -1.0
    return pts, normals


def _sample_polygon_boundary(poly: Polygon, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    a, b = poly.edges()
    ab = b - a
    lengths = np.hypot(ab[:, 0], ab[:, 1])
    edge = rng.choice(len(a), size=n, p=lengths / lengths.sum())
    t = rng.uniform(0.0, 1.0, size=n)
    pts = a[edge] + t[:, None] * ab[edge]
    normals = np.column_stack([ab[edge, 1], -ab[edge, 0]]) / lengths[edge, None]
    return pts, normals


def sample_boundary(domain: Domain, n: int, seed, subset=None) -> BoundaryGroup:
    """``n`` points uniform by boundary measure, with unit outward normals.

    ``subset`` selects boundary components: a face label or list of labels for
    boxes, ``"inner"``/``"outer"`` for annuli.
    """
    if int(n) != n or n < 1:
        raise InvalidArgument(f"n must be a positive integer, got {n!r}")
    n = int(n)
    rng = _rng(seed)
    if isinstance(domain, Box):
        pts, normals = _sample_box_boundary(domain, n, rng, subset)
        label = "boundary" if subset is None else (subset if isinstance(subset, str) else ",".join(subset))
    elif isinstance(domain, Annulus):
        if subset not in ("inner", "outer"):
            raise InvalidArgument(f"annulus boundary label must be 'inner' or 'outer', got {subset!r}")
        radius = domain.inner if subset == "inner" else domain.outer
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
        radial = np.column_stack([np.cos(theta), np.sin(theta)])
        pts = radius * radial
        normals = radial if subset == "outer" else -radial
        label = subset
    elif isinstance(domain, Koch):
        if subset not in (None, "boundary"):
            raise InvalidArgument(f"unknown Koch boundary label {subset!r}")
        pts, normals = _sample_polygon_boundary(domain.polygon, n, rng)
        label = "boundary"
    else:
        raise InvalidArgument(f"unsupported domain {domain!r}")
    return BoundaryGroup(pts, normals, label)


def evaluation_grid(domain: Box, per_axis: int = 100) -> np.ndarray:
    """Tensor grid of ``per_axis`` points per axis spanning a box, endpoints included."""
    lo, hi = domain.bounds()
    axes = [np.linspace(l, h, per_axis) for l, h in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])
