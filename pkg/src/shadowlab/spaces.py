"""State spaces: circle, interval, finite metric spaces, and binary products.

Points are plain Python values: a float in [0, 1) for the circle, a float in
[0, 1] for the interval, an integer index for finite spaces, and a 2-tuple of
factor points for products. Circle representatives are always reduced to
[0, 1) before any metric evaluation so results are bit-reproducible.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .errors import PointOutsideSpaceError

CIRCLE = "circle"
INTERVAL = "interval"
FINITE = "finite"
PRODUCT = "product"


def circle_reduce(x: float) -> float:
    """Canonical representative of x in [0, 1)."""
    r = x % 1.0
    return 0.0 if r == 1.0 else r


def circle_distance(a: float, b: float) -> float:
    gap = abs(circle_reduce(a) - circle_reduce(b))
    return min(gap, 1.0 - gap)


def circle_signed_gap(base: float, other: float) -> float:
    """Signed displacement in [-1/2, 1/2) taking `base` to `other` on the circle."""
    gap = (circle_reduce(other) - circle_reduce(base)) % 1.0
    return gap - 1.0 if gap >= 0.5 else gap


@dataclass(frozen=True)
class StateSpace:
    """One of the four representable metric spaces.

    For ``finite`` kind, ``distances`` is the explicit symmetric matrix and
    points are the indices 0..n-1. For ``product`` kind, ``factors`` holds the
    two component spaces and the metric is the max metric.
    """

    kind: str
    description: str = ""
    distances: Optional[Tuple[Tuple[float, ...], ...]] = None
    factors: Optional[Tuple["StateSpace", "StateSpace"]] = None

    def distance(self, a, b) -> float:
        if self.kind == CIRCLE:
            return circle_distance(a, b)
        if self.kind == INTERVAL:
            return abs(a - b)
        if self.kind == FINITE:
            return self.distances[a][b]
        left, right = self.factors
        return max(left.distance(a[0], b[0]), right.distance(a[1], b[1]))

    @property
    def diameter(self) -> float:
        if self.kind == CIRCLE:
            return 0.5
        if self.kind == INTERVAL:
            return 1.0
        if self.kind == FINITE:
            return max(max(row) for row in self.distances)
        return max(f.diameter for f in self.factors)

    def contains(self, p, tol: float = 1e-9) -> bool:
        if self.kind == CIRCLE:
            return isinstance(p, float) or isinstance(p, int)
        if self.kind == INTERVAL:
            return -tol <= p <= 1.0 + tol
        if self.kind == FINITE:
            return isinstance(p, int) and 0 <= p < len(self.distances)
        return (
            isinstance(p, tuple)
            and len(p) == 2
            and self.factors[0].contains(p[0], tol)
            and self.factors[1].contains(p[1], tol)
        )

    def require(self, p, tol: float = 1e-9):
        if not self.contains(p, tol):
            raise PointOutsideSpaceError(f"point {p!r} outside {self.kind} space", witness=p)
        return self.reduce(p)

    def reduce(self, p):
        """Canonical representative (mod-1 reduction on circle factors)."""
        if self.kind == CIRCLE:
            return circle_reduce(p)
        if self.kind == PRODUCT:
            return (self.factors[0].reduce(p[0]), self.factors[1].reduce(p[1]))
        return p

    def displace(self, p, amount: float, sign: int):
        """A point at metric distance ~`amount` from p, biased toward `sign`.

        On the circle the realized distance is exactly min(amount, 1-amount)
        for amount <= 1; on the interval the direction flips if it would leave
        [0, 1]; on finite spaces the point with distance closest to `amount`
        wins (ties -> lowest index). Products displace both components.
        """
        if amount == 0.0:
            return p
        if self.kind == CIRCLE:
            return circle_reduce(p + sign * amount)
        if self.kind == INTERVAL:
            cand = p + sign * amount
            if not 0.0 <= cand <= 1.0:
                cand = p - sign * amount
            if not 0.0 <= cand <= 1.0:
                cand = min(1.0, max(0.0, p + sign * amount))
            return cand
        if self.kind == FINITE:
            best = p
            best_err = abs(0.0 - amount)
            for q in range(len(self.distances)):
                err = abs(self.distances[p][q] - amount)
                if err < best_err:
                    best, best_err = q, err
            return best
        return (
            self.factors[0].displace(p[0], amount, sign),
            self.factors[1].displace(p[1], amount, sign),
        )

    def random_point(self, rng: random.Random):
        if self.kind == CIRCLE:
            return rng.random()
        if self.kind == INTERVAL:
            return rng.random()
        if self.kind == FINITE:
            return rng.randrange(len(self.distances))
        return (self.factors[0].random_point(rng), self.factors[1].random_point(rng))

    @property
    def points(self) -> list:
        """All points of a finite (or finite-product) space."""
        if self.kind == FINITE:
            return list(range(len(self.distances)))
        if self.kind == PRODUCT:
            return [(a, b) for a in self.factors[0].points for b in self.factors[1].points]
        raise PointOutsideSpaceError(f"{self.kind} space is not enumerable")

    @property
    def is_enumerable(self) -> bool:
        if self.kind == FINITE:
            return True
        if self.kind == PRODUCT:
            return all(f.is_enumerable for f in self.factors)
        return False

    def min_positive_distance(self) -> float:
        pts = self.points
        return min(
            self.distance(a, b) for i, a in enumerate(pts) for b in pts[i + 1 :]
        )

    def descriptor(self) -> dict:
        if self.kind == FINITE:
            return {"kind": FINITE, "distances": [list(r) for r in self.distances]}
        if self.kind == PRODUCT:
            return {"kind": PRODUCT, "factors": [f.descriptor() for f in self.factors]}
        return {"kind": self.kind}


def circle_space(description: str = "circle R/Z with arc metric") -> StateSpace:
    return StateSpace(kind=CIRCLE, description=description)


def interval_space(description: str = "unit interval [0,1]") -> StateSpace:
    return StateSpace(kind=INTERVAL, description=description)


def finite_space(distances: Sequence[Sequence[float]], description: str = "") -> StateSpace:
    matrix = tuple(tuple(float(v) for v in row) for row in distances)
    n = len(matrix)
    for i in range(n):
        if matrix[i][i] != 0.0:
            raise ValueError(f"nonzero diagonal at {i}")
        for j in range(n):
            if matrix[i][j] != matrix[j][i]:
                raise ValueError(f"asymmetric entry ({i},{j})")
            if i != j and matrix[i][j] <= 0.0:
                raise ValueError(f"nonpositive off-diagonal ({i},{j})")
            for k in range(n):
                if matrix[i][j] > matrix[i][k] + matrix[k][j] + 1e-12:
                    raise ValueError(f"triangle inequality fails at ({i},{j},{k})")
    return StateSpace(kind=FINITE, description=description or f"{n}-point space", distances=matrix)


def product_space(left: StateSpace, right: StateSpace) -> StateSpace:
    return StateSpace(
        kind=PRODUCT,
        description=f"({left.description}) x ({right.description})",
        factors=(left, right),
    )


def space_from_descriptor(desc: dict) -> StateSpace:
    kind = desc.get("kind")
    if kind == CIRCLE:
        return circle_space()
    if kind == INTERVAL:
        return interval_space()
    if kind == FINITE:
        return finite_space(desc["distances"])
    if kind == PRODUCT:
        left, right = desc["factors"]
        return product_space(space_from_descriptor(left), space_from_descriptor(right))
    raise ValueError(f"unknown space kind {kind!r}")
