"""Time-varying map families: schedules, concrete maps, and built-in systems.

A family is a sequence of onto maps f_n: X_n -> X_{n+1} with the composition
F_n = f_{n-1} o ... o f_0 and F_0 = identity. Expanding families additionally
expose inverse branches: local right inverses defined on balls of radius
`branch_radius` whose Lipschitz constants are the per-step contraction rates.

Built-ins bracket the hypothesis boundary of the pullback shadowing
guarantee: constant doubling (rate 1/2), alternating doubling/tripling, a
slowly expanding family whose rates n/(n+1) have infinite product zero but
supremum one, and a control family with rates 1-2^-n whose infinite product
stays positive. Rate indexing is one-based to match the telescoping
products 2e * prod_{i=1..k} rate_i: the map applied at time j carries
rate_{j+1}.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .errors import (
    IndexOutOfScheduleError,
    InvalidBranchIdError,
    NotExpandingError,
    PointOutsideBranchDomainError,
    ScheduleMismatchError,
)
from .spaces import (
    StateSpace,
    circle_reduce,
    circle_signed_gap,
    circle_space,
    finite_space,
    product_space,
    space_from_descriptor,
)


@dataclass(frozen=True)
class Schedule:
    """Eventually periodic (head + cycle) or rule-backed infinite sequence."""

    head: tuple = ()
    cycle: tuple = ()
    rule: Optional[Callable[[int], object]] = None

    def at(self, n: int):
        if n < 0:
            raise IndexOutOfScheduleError(f"negative time index {n}")
        if n < len(self.head):
            return self.head[n]
        if self.cycle:
            return self.cycle[(n - len(self.head)) % len(self.cycle)]
        if self.rule is not None:
            return self.rule(n)
        raise IndexOutOfScheduleError(
            f"index {n} beyond finite schedule of length {len(self.head)}"
        )

    @property
    def finite_length(self) -> Optional[int]:
        if not self.cycle and self.rule is None:
            return len(self.head)
        return None


def constant_schedule(value) -> Schedule:
    return Schedule(cycle=(value,))


# ---------------------------------------------------------------------------
# Concrete maps


class CircleLinearMap:
    """f(x) = degree * x mod 1 on the circle."""

    def __init__(self, degree: int):
        if degree < 1:
            raise ValueError("degree must be >= 1")
        self.degree = degree

    def apply(self, x: float) -> float:
        return circle_reduce(self.degree * circle_reduce(x))

    def preimages(self, w: float) -> list:
        w = circle_reduce(w)
        return [circle_reduce((w + j) / self.degree) for j in range(self.degree)]

    def branch_of(self, x: float) -> int:
        return min(int(circle_reduce(x) * self.degree), self.degree - 1)

    def branch_contraction(self, branch: int) -> float:
        return 1.0 / self.degree

    def inverse_branch_point(self, branch: int, w: float, y: float) -> float:
        if not 0 <= branch < self.degree:
            raise InvalidBranchIdError(f"branch {branch} not in 0..{self.degree - 1}")
        z = self.preimages(w)[branch]
        return circle_reduce(z + circle_signed_gap(w, y) / self.degree)

    @property
    def num_branches(self) -> int:
        return self.degree

    def descriptor(self) -> dict:
        return {"map": "circle_linear", "degree": self.degree}


class TwoSlopeCircleMap:
    """Degree-2 piecewise-linear circle covering with one slow branch.

    Branch 0 maps [0, lam) onto the circle with slope 1/lam; branch 1 maps
    [lam, 1) with slope 1/(1-lam). Inverse branches are affine with
    contractions lam and 1-lam, so the advertised rate is max(lam, 1-lam).
    At lam = 1/2 this is exactly the doubling map.
    """

    def __init__(self, lam: float):
        if not 0.0 < lam < 1.0:
            raise ValueError("lam must be in (0,1)")
        self.lam = lam

    def apply(self, x: float) -> float:
        x = circle_reduce(x)
        if x < self.lam:
            return circle_reduce(x / self.lam)
        return circle_reduce((x - self.lam) / (1.0 - self.lam))

    def preimages(self, w: float) -> list:
        w = circle_reduce(w)
        return [self.lam * w, self.lam + (1.0 - self.lam) * w]

    def branch_of(self, x: float) -> int:
        return 0 if circle_reduce(x) < self.lam else 1

    def branch_contraction(self, branch: int) -> float:
        # A branch continued across the degree-2 wrap picks up the other
        # piece's slope, so the certified contraction is the worse of the two.
        return max(self.lam, 1.0 - self.lam)

    def _lift_inverse(self, t: float) -> float:
        # Inverse of the lifted covering; G(t + 2) = G(t) + 1.
        base = math.floor(t / 2.0)
        r = t - 2.0 * base
        if r < 1.0:
            val = self.lam * r
        else:
            val = self.lam + (1.0 - self.lam) * (r - 1.0)
        return val + base

    def inverse_branch_point(self, branch: int, w: float, y: float) -> float:
        if branch not in (0, 1):
            raise InvalidBranchIdError(f"branch {branch} not in (0, 1)")
        w = circle_reduce(w)
        return circle_reduce(self._lift_inverse(w + branch + circle_signed_gap(w, y)))

    @property
    def num_branches(self) -> int:
        return 2

    def descriptor(self) -> dict:
        return {"map": "two_slope_circle", "lam": self.lam}


class CircleRotation:
    """Isometry x -> x + alpha mod 1. Single inverse branch, contraction 1."""

    def __init__(self, alpha: float):
        self.alpha = circle_reduce(alpha)

    def apply(self, x: float) -> float:
        return circle_reduce(circle_reduce(x) + self.alpha)

    def preimages(self, w: float) -> list:
        return [circle_reduce(w - self.alpha)]

    def branch_of(self, x: float) -> int:
        return 0

    def branch_contraction(self, branch: int) -> float:
        return 1.0

    def inverse_branch_point(self, branch: int, w: float, y: float) -> float:
        if branch != 0:
            raise InvalidBranchIdError("rotation has a single branch")
        return circle_reduce(self.preimages(w)[0] + circle_signed_gap(w, y))

    @property
    def num_branches(self) -> int:
        return 1

    def descriptor(self) -> dict:
        return {"map": "circle_rotation", "alpha": self.alpha}


class IdentityMap:
    """Identity on any space."""

    def __init__(self, space: StateSpace):
        self.space = space

    def apply(self, x):
        return self.space.reduce(x)

    def preimages(self, w) -> list:
        return [self.space.reduce(w)]

    def branch_of(self, x) -> int:
        return 0

    def branch_contraction(self, branch: int) -> float:
        return 1.0

    def inverse_branch_point(self, branch: int, w, y):
        if branch != 0:
            raise InvalidBranchIdError("identity has a single branch")
        return self.space.reduce(y)

    @property
    def num_branches(self) -> int:
        return 1

    def descriptor(self) -> dict:
        return {"map": "identity"}


class FiniteMap:
    """Table-driven map on a finite space; onto-ness checked at construction."""

    def __init__(self, space: StateSpace, table: Sequence[int]):
        self.space = space
        self.table = tuple(int(v) for v in table)
        n = len(space.distances)
        if len(self.table) != n:
            raise ValueError("table length must equal space size")
        if set(self.table) != set(range(n)):
            raise ValueError("map is not onto its codomain")

    def apply(self, x: int) -> int:
        return self.table[x]

    def preimages(self, w: int) -> list:
        return [i for i, v in enumerate(self.table) if v == w]

    def branch_of(self, x: int) -> int:
        return self.preimages(self.table[x]).index(x)

    def branch_contraction(self, branch: int) -> float:
        return 1.0

    def inverse_branch_point(self, branch: int, w: int, y: int) -> int:
        pre = self.preimages(w)
        if not 0 <= branch < len(pre):
            raise InvalidBranchIdError(f"branch {branch} not in 0..{len(pre) - 1}")
        if y != w:
            pre_y = self.preimages(y)
            if len(pre_y) <= branch:
                raise InvalidBranchIdError(f"branch {branch} undefined over {y}")
            return pre_y[branch]
        return pre[branch]

    @property
    def num_branches(self) -> int:
        return max(len(self.preimages(w)) for w in range(len(self.table)))

    def descriptor(self) -> dict:
        return {"map": "finite", "table": list(self.table)}


class ProductMap:
    """Componentwise pair map with branch ids as (left, right) pairs."""

    def __init__(self, left, right):
        self.left = left
        self.right = right

    def apply(self, x):
        return (self.left.apply(x[0]), self.right.apply(x[1]))

    def preimages(self, w) -> list:
        return [
            (a, b)
            for a in self.left.preimages(w[0])
            for b in self.right.preimages(w[1])
        ]

    def branch_of(self, x):
        return (self.left.branch_of(x[0]), self.right.branch_of(x[1]))

    def branch_contraction(self, branch) -> float:
        return max(
            self.left.branch_contraction(branch[0]),
            self.right.branch_contraction(branch[1]),
        )

    def inverse_branch_point(self, branch, w, y):
        return (
            self.left.inverse_branch_point(branch[0], w[0], y[0]),
            self.right.inverse_branch_point(branch[1], w[1], y[1]),
        )

    @property
    def num_branches(self) -> int:
        return self.left.num_branches * self.right.num_branches

    def descriptor(self) -> dict:
        return {"map": "product", "factors": [self.left.descriptor(), self.right.descriptor()]}


# ---------------------------------------------------------------------------
# Orbit segments and families


@dataclass(frozen=True)
class OrbitSegment:
    """A finite run of an exact orbit; points[i] lives in X_{start_index+i}."""

    start_index: int
    points: tuple

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class MapFamily:
    """A time-varying family with optional expanding structure.

    ``rates`` holds the contraction rate of the map applied at each time
    index (the inverse-branch Lipschitz constant), ``branch_radius`` the
    shared branch-domain radius delta_0. ``sup_rate`` is a certified upper
    bound on all rates strictly below 1 when one exists, else None.
    """

    name: str
    spaces: Schedule
    maps: Schedule
    rates: Optional[Schedule] = None
    branch_radius: Optional[float] = None
    expanding: bool = False
    sup_rate: Optional[float] = None
    is_isometry: bool = False

    def space_at(self, n: int) -> StateSpace:
        return self.spaces.at(n)

    def map_at(self, n: int):
        return self.maps.at(n)

    def rate_at(self, n: int) -> float:
        if self.rates is None:
            raise NotExpandingError(f"family {self.name!r} has no contraction rates")
        return self.rates.at(n)

    @property
    def constant_spaces(self) -> bool:
        sched = self.spaces
        return sched.finite_length is None and not sched.head and len(sched.cycle) == 1

    @property
    def is_finite_state(self) -> bool:
        return self.constant_spaces and self.space_at(0).is_enumerable

    def evaluate(self, n: int, x):
        """f_n(x), with domain/codomain membership enforced."""
        space = self.space_at(n)
        x = space.require(x)
        y = self.map_at(n).apply(x)
        return self.space_at(n + 1).require(y)

    def compose(self, x, horizon: int) -> OrbitSegment:
        """The orbit segment [x, F_1(x), ..., F_horizon(x)]."""
        if horizon < 0:
            raise ValueError("horizon must be >= 0")
        points = [self.space_at(0).require(x)]
        for n in range(horizon):
            points.append(self.evaluate(n, points[-1]))
        return OrbitSegment(start_index=0, points=tuple(points))

    def orbit_point(self, x, n: int):
        """F_n(x) without storing the whole segment."""
        p = self.space_at(0).require(x)
        for i in range(n):
            p = self.evaluate(i, p)
        return p

    def require_expanding(self):
        if not self.expanding or self.rates is None or self.branch_radius is None:
            raise NotExpandingError(f"family {self.name!r} is not expanding")

    def inverse_branch(self, n: int, w, branch, y):
        """Apply the branch of f_n^{-1} selected at preimage `branch`, at y.

        The branch is defined on the ball B(w, delta_0); the returned point is
        the unique preimage of y in that branch's neighborhood.
        """
        self.require_expanding()
        space_out = self.space_at(n + 1)
        w = space_out.require(w)
        y = space_out.require(y)
        if space_out.distance(w, y) >= self.branch_radius:
            raise PointOutsideBranchDomainError(
                f"d(w, y) = {space_out.distance(w, y)} >= delta_0 = {self.branch_radius}",
                witness=(w, y),
            )
        return self.space_at(n).reduce(self.map_at(n).inverse_branch_point(branch, w, y))


@dataclass(frozen=True)
class ExpansivenessReport:
    """Outcome of a finite-horizon expansiveness search. Falsifier only."""

    epsilon0: float
    horizon: int
    pairs_checked: int
    counterexample: Optional[tuple]

    @property
    def falsified(self) -> bool:
        return self.counterexample is not None


def expansiveness_falsifier(
    family: MapFamily,
    epsilon0: float,
    horizon: int,
    samples: int,
    seed: int = 0,
) -> ExpansivenessReport:
    """Search for x != y whose orbits stay epsilon0-close through the horizon.

    A surviving pair is evidence against expansiveness at this horizon; the
    absence of one certifies nothing ("not falsified at this horizon").
    """
    if epsilon0 <= 0:
        raise ValueError("epsilon0 must be positive")
    space = family.space_at(0)
    rng = random.Random(seed)
    pairs = []
    if space.is_enumerable:
        pts = space.points
        pairs = [(a, b) for i, a in enumerate(pts) for b in pts[i + 1 :]][:samples]
    else:
        # Near-diagonal pairs separate last; seed the search with them.
        grid = max(2, int(math.isqrt(samples)))
        for i in range(grid):
            x = i / grid
            pairs.append((x, space.reduce(x + epsilon0 / 2)))
        while len(pairs) < samples:
            x = space.random_point(rng)
            pairs.append((x, space.displace(x, rng.random() * epsilon0, 1)))
    checked = 0
    for x, y in pairs:
        if x == y:
            continue
        checked += 1
        a, b = x, y
        close = True
        for n in range(horizon + 1):
            if family.space_at(n).distance(a, b) > epsilon0:
                close = False
                break
            if n < horizon:
                a = family.evaluate(n, a)
                b = family.evaluate(n, b)
        if close:
            return ExpansivenessReport(epsilon0, horizon, checked, (x, y))
    return ExpansivenessReport(epsilon0, horizon, checked, None)


# ---------------------------------------------------------------------------
# Built-in families

DELTA0_CIRCLE = 0.25


def doubling_family() -> MapFamily:
    return MapFamily(
        name="doubling",
        spaces=constant_schedule(circle_space()),
        maps=constant_schedule(CircleLinearMap(2)),
        rates=constant_schedule(0.5),
        branch_radius=DELTA0_CIRCLE,
        expanding=True,
        sup_rate=0.5,
    )


def tripling_family() -> MapFamily:
    return MapFamily(
        name="tripling",
        spaces=constant_schedule(circle_space()),
        maps=constant_schedule(CircleLinearMap(3)),
        rates=constant_schedule(1.0 / 3.0),
        branch_radius=DELTA0_CIRCLE,
        expanding=True,
        sup_rate=1.0 / 3.0,
    )


def alternating_family() -> MapFamily:
    """f_n doubles at even n, triples at odd n; rates alternate 1/2, 1/3."""
    return MapFamily(
        name="alternating",
        spaces=constant_schedule(circle_space()),
        maps=Schedule(cycle=(CircleLinearMap(2), CircleLinearMap(3))),
        rates=Schedule(cycle=(0.5, 1.0 / 3.0)),
        branch_radius=DELTA0_CIRCLE,
        expanding=True,
        sup_rate=0.5,
    )


def slow_expanding_family() -> MapFamily:
    """Rates climb to 1 but their infinite product still vanishes.

    The map at time j is the two-slope covering with rate (j+1)/(j+2), i.e.
    the one-based rate sequence n/(n+1); partial products telescope to
    1/(k+1). sup rate = 1 is not attained, separating the product-zero
    hypothesis from the bounded-sup one.
    """
    return MapFamily(
        name="slow_expanding",
        spaces=constant_schedule(circle_space()),
        maps=Schedule(rule=lambda j: TwoSlopeCircleMap((j + 1) / (j + 2))),
        rates=Schedule(rule=lambda j: (j + 1) / (j + 2)),
        branch_radius=DELTA0_CIRCLE,
        expanding=True,
        sup_rate=None,
    )


def barely_expanding_family() -> MapFamily:
    """Negative control: rates 1 - 2^-n whose infinite product stays positive."""
    return MapFamily(
        name="barely_expanding",
        spaces=constant_schedule(circle_space()),
        maps=Schedule(rule=lambda j: TwoSlopeCircleMap(1.0 - 0.5 ** (j + 1))),
        rates=Schedule(rule=lambda j: 1.0 - 0.5 ** (j + 1)),
        branch_radius=DELTA0_CIRCLE,
        expanding=True,
        sup_rate=None,
    )


def identity_family(space: Optional[StateSpace] = None) -> MapFamily:
    space = space or circle_space()
    return MapFamily(
        name="identity",
        spaces=constant_schedule(space),
        maps=constant_schedule(IdentityMap(space)),
        is_isometry=True,
    )


GOLDEN_ALPHA = (math.sqrt(5.0) - 1.0) / 2.0


def rotation_family(alpha: float = GOLDEN_ALPHA) -> MapFamily:
    return MapFamily(
        name="rotation",
        spaces=constant_schedule(circle_space()),
        maps=constant_schedule(CircleRotation(alpha)),
        is_isometry=True,
    )


def _cycle_metric(n: int) -> list:
    half = n // 2
    return [
        [min(abs(i - j), n - abs(i - j)) / half for j in range(n)] for i in range(n)
    ]


def finite_cycle_family(n: int = 3) -> MapFamily:
    """Cyclic permutation i -> i+1 mod n with the normalized cycle metric."""
    space = finite_space(_cycle_metric(n), description=f"{n}-cycle")
    table = [(i + 1) % n for i in range(n)]
    return MapFamily(
        name=f"finite_cycle_{n}",
        spaces=constant_schedule(space),
        maps=constant_schedule(FiniteMap(space, table)),
        is_isometry=True,
    )


def identity_pair_family() -> MapFamily:
    """Two points at distance 1 with the identity map."""
    space = finite_space([[0.0, 1.0], [1.0, 0.0]], description="two points")
    return MapFamily(
        name="identity_pair",
        spaces=constant_schedule(space),
        maps=constant_schedule(IdentityMap(space)),
        is_isometry=True,
    )


def two_bit_swap_family() -> MapFamily:
    """Coordinate swap on 2-bit words with the (halved) Hamming metric."""
    dist = [[bin(i ^ j).count("1") / 2.0 for j in range(4)] for i in range(4)]
    space = finite_space(dist, description="2-bit words")
    table = [((s & 1) << 1) | (s >> 1) for s in range(4)]
    return MapFamily(
        name="two_bit_swap",
        spaces=constant_schedule(space),
        maps=constant_schedule(FiniteMap(space, table)),
        is_isometry=True,
    )


EIGHT_STATE_CYCLE = (0, 1, 2)
EIGHT_STATE_PARK = 0.01


def eight_state_family() -> MapFamily:
    """Eight states: an invariant 3-cycle plus a 5-cycle parked nearby.

    States 0,1,2 form the invariant cycle A (mutual distance 1); states 3..7
    cycle among themselves, each parked 0.01 from an anchor cycle state so
    that every orbit stays uniformly close to A. The map is a permutation
    (onto), so the complement of A is invariant too; closeness to A, not
    absorption, is what the averaged-shadowing scenarios rely on.
    """
    eta = EIGHT_STATE_PARK
    anchors = {3: 0, 4: 1, 5: 2, 6: 0, 7: 1}
    n = 8
    dist = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            ai = anchors.get(i) if i >= 3 else i
            aj = anchors.get(j) if j >= 3 else j
            base = 0.0 if ai == aj else 1.0
            pad = (eta if i >= 3 else 0.0) + (eta if j >= 3 else 0.0)
            dist[i][j] = base + pad
    space = finite_space(dist, description="8 states around a 3-cycle")
    table = [1, 2, 0, 4, 5, 6, 7, 3]
    return MapFamily(
        name="eight_state",
        spaces=constant_schedule(space),
        maps=constant_schedule(FiniteMap(space, table)),
    )


def product_family(left: MapFamily, right: MapFamily) -> MapFamily:
    """The product system on X x Y with the max metric.

    Expanding structure survives when both factors carry it: branch pairs are
    the product branches, per-step rates are the max of the factor rates, and
    the branch radius is the min of the factor radii.
    """
    left_len = left.maps.finite_length
    right_len = right.maps.finite_length
    if left_len is not None and right_len is not None and left_len != right_len:
        raise ScheduleMismatchError(
            f"finite schedules of lengths {left_len} and {right_len}"
        )
    if left.constant_spaces and right.constant_spaces:
        spaces = constant_schedule(product_space(left.space_at(0), right.space_at(0)))
    else:
        spaces = Schedule(rule=lambda n: product_space(left.space_at(n), right.space_at(n)))
    maps = Schedule(rule=lambda n: ProductMap(left.map_at(n), right.map_at(n)))
    expanding = left.expanding and right.expanding
    rates = None
    radius = None
    sup = None
    if expanding:
        rates = Schedule(rule=lambda n: max(left.rate_at(n), right.rate_at(n)))
        radius = min(left.branch_radius, right.branch_radius)
        if left.sup_rate is not None and right.sup_rate is not None:
            sup = max(left.sup_rate, right.sup_rate)
    return MapFamily(
        name=f"{left.name}*{right.name}",
        spaces=spaces,
        maps=maps,
        rates=rates,
        branch_radius=radius,
        expanding=expanding,
        sup_rate=sup,
        is_isometry=left.is_isometry and right.is_isometry,
    )


BUILTIN_FAMILIES = {
    "doubling": doubling_family,
    "tripling": tripling_family,
    "alternating": alternating_family,
    "slow_expanding": slow_expanding_family,
    "barely_expanding": barely_expanding_family,
    "identity": identity_family,
    "rotation": rotation_family,
    "finite_cycle": finite_cycle_family,
    "identity_pair": identity_pair_family,
    "two_bit_swap": two_bit_swap_family,
    "eight_state": eight_state_family,
}


def family_from_descriptor(desc: dict) -> MapFamily:
    """Build a family from the declarative JSON descriptor used by the CLI."""
    kind = desc.get("kind")
    if kind == "product":
        left, right = desc["factors"]
        return product_family(family_from_descriptor(left), family_from_descriptor(right))
    if kind not in BUILTIN_FAMILIES:
        raise ValueError(f"unknown family kind {kind!r}")
    params = {k: v for k, v in desc.items() if k not in ("kind",)}
    if kind == "identity" and "space" in params:
        params["space"] = space_from_descriptor(params["space"])
    return BUILTIN_FAMILIES[kind](**params)
