"""Sampling domains: finite unions of axis-aligned boxes.

Membership in a :class:`Domain` is half-open per axis (``lo <= x < hi``), the
same convention as the cells of a grid and the draws of
:func:`uniform_samples`. Unions that are not domains, such as the
truncation set ``M``, use closed membership.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import AdmissibilityError

# Interior test inflation; box faces closer than this to an integer are read as on it.
_ETA = 1e-7


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi):
            raise ValueError("box corners have different dimensions")
        if any(not (math.isfinite(a) and math.isfinite(b)) for a, b in zip(lo, hi)):
            raise ValueError("box corners must be finite")
        if any(b <= a for a, b in zip(lo, hi)):
            raise ValueError(f"degenerate box {lo} -> {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def n(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def contains(self, pts) -> np.ndarray:
        pts = _as_points(pts, self.n)
        return np.all((pts >= self.lo) & (pts < self.hi), axis=-1)

    def contains_closed(self, pts) -> np.ndarray:
        pts = _as_points(pts, self.n)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)

    def meets_closed(self, lo, hi) -> bool:
        return all(a <= d and c <= b for a, b, c, d in zip(self.lo, self.hi, lo, hi))

    def contains_box(self, other: "Box") -> bool:
        return all(a <= c and d <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def expanded(self, lo_pad: float, hi_pad: float) -> "Box":
        return Box(tuple(v - lo_pad for v in self.lo), tuple(v + hi_pad for v in self.hi))

    def __str__(self):
        return " x ".join(f"[{a:g}, {b:g}]" for a, b in zip(self.lo, self.hi))


def _as_points(pts, n: int) -> np.ndarray:
    pts = np.asarray(pts, dtype=np.float64)
    if n == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
        pts = pts[..., None]
    return pts


def parse_boxes(text: str) -> list[Box]:
    """Parse ``"lo hi lo hi ...; lo hi ..."``: one box per ``;``, one ``lo hi`` pair per axis."""
    boxes = []
    for chunk in text.split(";"):
        vals = [float(v) for v in chunk.replace(",", " ").replace("[", " ").replace("]", " ").split()]
        if not vals:
            continue
        if len(vals) % 2:
            raise ValueError(f"box {chunk.strip()!r} needs lo/hi pairs")
        boxes.append(Box(vals[0::2], vals[1::2]))
    if not boxes:
        raise ValueError("no boxes given")
    return boxes


class BoxUnion:
    """Union of closed boxes."""

    def __init__(self, boxes: Iterable[Box]):
        self.boxes = tuple(b if isinstance(b, Box) else Box(*b) for b in boxes)
        if not self.boxes:
            raise ValueError("empty box union")
        dims = {b.n for b in self.boxes}
        if len(dims) != 1:
            raise ValueError("boxes of mixed dimension")
        self.n = dims.pop()

    def __repr__(self):
        return f"{type(self).__name__}({'; '.join(str(b) for b in self.boxes)})"

    @property
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.min([b.lo for b in self.boxes], axis=0)
        hi = np.max([b.hi for b in self.boxes], axis=0)
        return lo, hi

    def contains_closed(self, pts) -> np.ndarray:
        out = self.boxes[0].contains_closed(pts)
        for b in self.boxes[1:]:
            out |= b.contains_closed(pts)
        return out

    def contains(self, pts) -> np.ndarray:
        return self.contains_closed(pts)

    def covers_box(self, lo, hi) -> bool:
        """Whether the closed box ``[lo, hi]`` lies inside the union."""
        axes = []
        for k in range(self.n):
            cuts = {lo[k], hi[k]}
            for b in self.boxes:
                for v in (b.lo[k], b.hi[k]):
                    if lo[k] < v < hi[k]:
                        cuts.add(v)
            c = np.array(sorted(cuts))
            axes.append(0.5 * (c[:-1] + c[1:]))
        mids = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.n)
        return bool(np.all(self.contains_closed(mids)))

    @cached_property
    def measure(self) -> float:
        """Lebesgue measure of the union (overlaps counted once)."""
        cuts = [np.unique(np.concatenate([[b.lo[k], b.hi[k]] for b in self.boxes]))
                for k in range(self.n)]
        mids = np.stack(np.meshgrid(*[0.5 * (c[:-1] + c[1:]) for c in cuts], indexing="ij"), axis=-1)
        vols = np.ones(mids.shape[:-1])
        for k, c in enumerate(cuts):
            shape = [1] * self.n
            shape[k] = -1
            vols = vols * np.diff(c).reshape(shape)
        inside = self.contains_closed(mids.reshape(-1, self.n)).reshape(vols.shape)
        return float(vols[inside].sum())

    def merged(self) -> "BoxUnion":
        """Drop boxes contained in others; in 1-D also fuse overlapping intervals."""
        if self.n == 1:
            ivs = sorted((b.lo[0], b.hi[0]) for b in self.boxes)
            out = [list(ivs[0])]
            for a, b in ivs[1:]:
                if a <= out[-1][1]:
                    out[-1][1] = max(out[-1][1], b)
                else:
                    out.append([a, b])
            return BoxUnion(Box((a,), (b,)) for a, b in out)
        keep = []
        for i, b in enumerate(self.boxes):
            if any(j != i and o.contains_box(b) and (o != b or j < i) for j, o in enumerate(self.boxes)):
                continue
            keep.append(b)
        return BoxUnion(keep)


class Domain(BoxUnion):
    """Compact sampling region: boxes with pairwise disjoint interiors and measure >= 1."""

    def __init__(self, boxes: Iterable[Box] | Sequence | str, check_measure: bool = True):
        if isinstance(boxes, str):
            boxes = parse_boxes(boxes)
        super().__init__(boxes)
        for b1, b2 in itertools.combinations(self.boxes, 2):
            if all(max(a, c) < min(b, d) for a, b, c, d in zip(b1.lo, b1.hi, b2.lo, b2.hi)):
                raise ValueError(f"boxes {b1} and {b2} overlap")
        if check_measure and self.measure < 1.0:
            raise AdmissibilityError(f"domain measure {self.measure:g} < 1")

    @classmethod
    def interval(cls, lo: float, hi: float) -> "Domain":
        return cls([Box((lo,), (hi,))])

    @classmethod
    def cube(cls, lo: float, hi: float, n: int) -> "Domain":
        return cls([Box((lo,) * n, (hi,) * n)])

    @cached_property
    def measure(self) -> float:
        return float(sum(b.volume for b in self.boxes))

    @property
    def mu(self) -> float:
        return self.measure

    def contains(self, pts) -> np.ndarray:
        out = self.boxes[0].contains(pts)
        for b in self.boxes[1:]:
            out |= b.contains(pts)
        return out

    @cached_property
    def boundary_cubes(self) -> np.ndarray:
        return boundary_cubes(self)

    @property
    def boundary_cube_count(self) -> int:
        return len(self.boundary_cubes)

    def to_text(self) -> str:
        """Boxes in the ``"lo hi ...; ..."`` form accepted by the constructor."""
        return "; ".join(" ".join(f"{a:g} {b:g}" for a, b in zip(bx.lo, bx.hi)) for bx in self.boxes)


def measure(domain: Domain) -> float:
    if domain.measure < 1.0:
        raise AdmissibilityError(f"domain measure {domain.measure:g} < 1")
    return domain.measure


def boundary_cubes(domain: BoxUnion) -> np.ndarray:
    """Integer corners ``m`` of the closed unit cubes ``m + [0, 1]^n`` meeting the boundary.

    A connected cube misses the boundary exactly when it lies in the
    exterior (misses every closed box) or in the interior (a slightly
    inflated copy is covered by the union).
    """
    lo, hi = domain.bounding_box
    ranges = [range(int(math.floor(a)) - 1, int(math.ceil(b)) + 1) for a, b in zip(lo, hi)]
    hits = []
    for m in itertools.product(*ranges):
        clo = tuple(float(v) for v in m)
        chi = tuple(v + 1.0 for v in clo)
        if not any(b.meets_closed(clo, chi) for b in domain.boxes):
            continue
        if domain.covers_box(tuple(v - _ETA for v in clo), tuple(v + _ETA for v in chi)):
            continue
        hits.append(m)
    return np.array(hits, dtype=np.int64).reshape(-1, domain.n)


def boundary_cube_count(domain: BoxUnion) -> int:
    return len(boundary_cubes(domain))


@dataclass
class SampleSet:
    points: np.ndarray
    seed: object = None

    @property
    def r(self) -> int:
        return self.points.shape[0]

    def __len__(self):
        return self.r


def uniform_samples(domain: Domain, r: int, seed=None) -> SampleSet:
    """``r`` i.i.d. uniform points: a box chosen by volume, then uniform inside it."""
    if r < 1:
        raise ValueError("need r >= 1 sample points")
    rng = np.random.default_rng(seed)
    vols = np.array([b.volume for b in domain.boxes])
    lo = np.array([b.lo for b in domain.boxes])
    hi = np.array([b.hi for b in domain.boxes])
    if len(vols) == 1:
        which = np.zeros(r, dtype=np.intp)
    else:
        which = rng.choice(len(vols), size=r, p=vols / vols.sum())
    u = rng.random((r, domain.n))
    pts = lo[which] + u * (hi[which] - lo[which])
    return SampleSet(pts, seed)


def concentration_ratio(f, domain: Domain, p: float) -> float:
    """``int_Omega |f|^p / ||f||_p^p``."""
    from .space import lp_norm_pp

    total = lp_norm_pp(f, p)
    if total == 0.0:
        raise ValueError("concentration ratio of the zero function is undefined")
    return lp_norm_pp(f, p, domain) / total


def gamma_occupancy(lattice, domain: Domain) -> float:
    """``|Gamma cap Omega| / mu(Omega)``."""
    nodes = lattice.nodes if hasattr(lattice, "nodes") else np.asarray(lattice, dtype=np.float64)
    return float(np.count_nonzero(domain.contains(nodes))) / domain.measure
