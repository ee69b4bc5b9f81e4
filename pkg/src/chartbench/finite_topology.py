"""Decision procedures for finite topological spaces.

Subsets of the point set are encoded as integer bitmasks: bit ``i`` is set
when ``points[i]`` belongs to the subset.  Point sets are capped at 64
elements so that every subset fits a single machine word.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Optional, Sequence

MAX_POINTS = 64
MAX_ENUMERATION_POINTS = 4
MAX_HOMEOMORPHISM_POINTS = 8
MAX_INDUCED_OPENS = 1 << 20


class TopologyError(ValueError):
    """Base class for errors raised by this module."""


class CapacityError(TopologyError):
    pass


class DomainError(TopologyError):
    pass


class NotABaseError(TopologyError):
    """Raised when a family fails to be a base; ``witness`` is the offending subset."""

    def __init__(self, message: str, witness: int):
        super().__init__(message)
        self.witness = witness


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def bits(mask: int) -> Iterable[int]:
    """Indices of the set bits of ``mask`` in increasing order."""
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


def full_mask(n: int) -> int:
    return (1 << n) - 1


def _check_capacity(n: int) -> None:
    if n > MAX_POINTS:
        raise CapacityError(f"{n} points exceeds the capacity of {MAX_POINTS}")


def _check_family(n: int, family: Iterable[int]) -> list[int]:
    full = full_mask(n)
    out = []
    for m in family:
        if m < 0 or m & ~full:
            raise DomainError(f"subset mask {m:#x} uses bits outside {n} points")
        out.append(m)
    return out


@dataclass(frozen=True, init=False)
class FiniteSpace:
    """A finite point set together with a family of open subsets.

    ``opens`` is stored sorted and duplicate free.  Construction does not
    check the topology axioms; use :func:`verify_topology` for that.
    """

    points: tuple
    opens: tuple[int, ...]
    _index: dict = field(repr=False, compare=False, hash=False)
    _open_set: frozenset = field(repr=False, compare=False, hash=False)

    def __init__(self, points: Sequence[Hashable], opens: Iterable[int]):
        pts = tuple(points)
        _check_capacity(len(pts))
        if len(set(pts)) != len(pts):
            raise DomainError("point labels must be unique")
        fam = sorted(set(_check_family(len(pts), opens)))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "opens", tuple(fam))
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(pts)})
        object.__setattr__(self, "_open_set", frozenset(fam))

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def full(self) -> int:
        return full_mask(len(self.points))

    def index(self, label: Hashable) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise DomainError(f"unknown point {label!r}") from None

    def subset(self, labels: Iterable[Hashable]) -> int:
        """Bitmask of the given point labels."""
        m = 0
        for lab in labels:
            m |= 1 << self.index(lab)
        return m

    def labels(self, mask: int) -> tuple:
        return tuple(self.points[i] for i in bits(mask))

    def is_open(self, mask: int) -> bool:
        return mask in self._open_set

    def is_closed(self, mask: int) -> bool:
        return (self.full & ~mask) in self._open_set

    @property
    def closed_sets(self) -> tuple[int, ...]:
        return tuple(sorted(self.full & ~u for u in self.opens))

    def __repr__(self) -> str:
        opens = ", ".join("{" + ",".join(map(str, self.labels(u))) + "}" for u in self.opens)
        return f"FiniteSpace(points={list(self.points)!r}, opens=[{opens}])"


@dataclass(frozen=True)
class TopologyReport:
    is_topology: bool
    violations: tuple[tuple[str, tuple[int, ...]], ...]


def trivial_space(points: Sequence[Hashable]) -> FiniteSpace:
    pts = tuple(points)
    return FiniteSpace(pts, {0, full_mask(len(pts))})


def discrete_space(points: Sequence[Hashable]) -> FiniteSpace:
    pts = tuple(points)
    return FiniteSpace(pts, range(1 << len(pts)))


def sierpinski_space(points: Sequence[Hashable] = (1, 2)) -> FiniteSpace:
    """Two points, with the first one open."""
    return FiniteSpace(tuple(points), {0, 0b01, 0b11})


# -- axioms and generated topologies ---------------------------------------


def verify_topology(points: Sequence[Hashable], family: Iterable[int]) -> TopologyReport:
    """Check the three topology axioms, recording one witness per failed axiom.

    Union closure is checked pairwise, which is equivalent to closure under
    arbitrary unions for a finite family.
    """
    n = len(points)
    _check_capacity(n)
    fam = sorted(set(_check_family(n, family)))
    members = set(fam)
    full = full_mask(n)
    violations = []
    if 0 not in members:
        violations.append(("empty", (0,)))
    if full not in members:
        violations.append(("full", (full,)))
    union_w = inter_w = None
    for a, b in itertools.combinations(fam, 2):
        if union_w is None and (a | b) not in members:
            union_w = (a, b, a | b)
        if inter_w is None and (a & b) not in members:
            inter_w = (a, b, a & b)
        if union_w and inter_w:
            break
    if union_w:
        violations.append(("union", union_w))
    if inter_w:
        violations.append(("intersection", inter_w))
    return TopologyReport(not violations, tuple(violations))


def _closed_under(members: set, op) -> set:
    out = set(members)
    frontier = list(out)
    while frontier:
        new = []
        snapshot = list(out)
        for a in frontier:
            for b in snapshot:
                c = op(a, b)
                if c not in out:
                    out.add(c)
                    new.append(c)
        frontier = new
    return out


def generate_from_subbase(points: Sequence[Hashable], family: Iterable[int]) -> FiniteSpace:
    """Topology of all unions of finite intersections of ``family``.

    The intersection of no members is taken to be the whole set, so the
    empty subbase yields the trivial topology.
    """
    n = len(points)
    _check_capacity(n)
    full = full_mask(n)
    fam = set(_check_family(n, family)) | {full}
    inters = _closed_under(fam, lambda a, b: a & b)
    opens = _closed_under(inters, lambda a, b: a | b) | {0}
    return FiniteSpace(points, opens)


def _union_below(family: Iterable[int], target: int) -> int:
    u = 0
    for b in family:
        if b & ~target == 0:
            u |= b
    return u


def generate_from_base(points: Sequence[Hashable], family: Iterable[int]) -> FiniteSpace:
    """Topology whose opens are the unions of ``family`` members.

    Raises :class:`NotABaseError` when the unions do not form a topology.  The
    witness is either the whole set (members fail to cover it) or an
    intersection of two members that is not a union of members.
    """
    n = len(points)
    _check_capacity(n)
    full = full_mask(n)
    fam = sorted(set(_check_family(n, family)))
    if _union_below(fam, full) != full:
        raise NotABaseError("family does not cover the point set", full)
    for a, b in itertools.combinations(fam, 2):
        c = a & b
        if _union_below(fam, c) != c:
            raise NotABaseError(
                f"intersection {c:#x} of members {a:#x} and {b:#x} is not a union of members", c
            )
    opens = _closed_under(set(fam), lambda a, b: a | b) | {0}
    return FiniteSpace(points, opens)


def is_base_of(space: FiniteSpace, family: Iterable[int]) -> bool:
    fam = list(family)
    for m in fam:
        if not space.is_open(m):
            raise DomainError(f"family member {space.labels(m)} is not open")
    return all(_union_below(fam, u) == u for u in space.opens if u)


# -- interior, closure and friends -----------------------------------------


def interior(space: FiniteSpace, a: int) -> int:
    return _union_below(space.opens, a)


def closure(space: FiniteSpace, a: int) -> int:
    out = space.full
    for c in space.closed_sets:
        if a & ~c == 0:
            out &= c
    return out


def boundary(space: FiniteSpace, a: int) -> int:
    return closure(space, a) & ~interior(space, a)


def is_dense(space: FiniteSpace, a: int, b: int) -> bool:
    """True iff the closure of ``a`` equals ``b``; requires ``a`` inside ``b``."""
    if a & ~b:
        raise DomainError("dense check requires A to be a subset of B")
    return closure(space, a) == b


def is_neighborhood(space: FiniteSpace, v: int, x: int) -> bool:
    """True iff some open set contains point index ``x`` and sits inside ``v``."""
    bit = 1 << x
    return any(u & bit and u & ~v == 0 for u in space.opens)


def are_separated(space: FiniteSpace, a: int, b: int) -> bool:
    return closure(space, a) & b == 0 and a & closure(space, b) == 0


def find_clopen(space: FiniteSpace) -> Optional[int]:
    """First proper nonempty subset that is both open and closed, if any."""
    for u in space.opens:
        if u and u != space.full and space.is_closed(u):
            return u
    return None


def is_connected(space: FiniteSpace, a: Optional[int] = None) -> bool:
    if a is not None:
        space = relative_topology(space, a)
    return find_clopen(space) is None


def is_compact(space: FiniteSpace) -> bool:
    """Always true: a finite space has finitely many opens, so every cover is finite.

    The informative computation is :func:`minimal_subcover`.
    """
    return True


def refines(finer: Iterable[int], coarser: Iterable[int]) -> bool:
    """True iff every member of ``finer`` lies inside some member of ``coarser``."""
    coarse = list(coarser)
    return all(any(v & ~u == 0 for u in coarse) for v in finer)


def minimal_subcover(space: FiniteSpace, cover: Sequence[int], a: Optional[int] = None) -> tuple[int, ...]:
    """A smallest subfamily of ``cover`` whose union contains ``a``.

    Subfamilies are tried by increasing size and, within a size, in the
    lexicographic order of their positions in ``cover``.
    """
    if a is None:
        a = space.full
    cover = list(cover)
    for u in cover:
        if not space.is_open(u):
            raise DomainError(f"cover member {space.labels(u)} is not open")
    total = 0
    for u in cover:
        total |= u
    if a & ~total:
        raise DomainError(f"cover misses points {space.labels(a & ~total)}")
    for k in range(len(cover) + 1):
        for combo in itertools.combinations(range(len(cover)), k):
            u = 0
            for i in combo:
                u |= cover[i]
            if a & ~u == 0:
                return tuple(cover[i] for i in combo)
    raise AssertionError("unreachable: the full cover covers a")


def hausdorff_witness(space: FiniteSpace) -> Optional[tuple[int, int]]:
    """First pair of point indices lacking disjoint open neighborhoods."""
    n = space.n
    around = [[u for u in space.opens if u >> i & 1] for i in range(n)]
    for i, j in itertools.combinations(range(n), 2):
        if not any(u & v == 0 for u in around[i] for v in around[j]):
            return i, j
    return None


def is_hausdorff(space: FiniteSpace) -> bool:
    return hausdorff_witness(space) is None


def _compress(mask: int, onto: int) -> int:
    """Re-index the bits of ``mask`` that lie in ``onto`` to consecutive positions."""
    out = 0
    for k, i in enumerate(bits(onto)):
        if mask >> i & 1:
            out |= 1 << k
    return out


def relative_topology(space: FiniteSpace, a: int) -> FiniteSpace:
    pts = space.labels(a)
    return FiniteSpace(pts, {_compress(u & a, a) for u in space.opens})


def product_topology(s1: FiniteSpace, s2: FiniteSpace) -> FiniteSpace:
    """Product space; the pair ``(p, q)`` has index ``i * len(s2.points) + j``."""
    n1, n2 = s1.n, s2.n
    if n1 * n2 > MAX_POINTS:
        raise CapacityError(f"product of {n1} and {n2} points exceeds {MAX_POINTS}")
    pts = [(p, q) for p in s1.points for q in s2.points]
    base = set()
    for u in s1.opens:
        for v in s2.opens:
            m = 0
            for i in bits(u):
                m |= v << (i * n2)
            base.add(m)
    return generate_from_base(pts, base)


# -- maps -------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteMap:
    """A total function ``source.points -> target.points`` by index."""

    source: FiniteSpace
    target: FiniteSpace
    image: tuple[int, ...]

    def __post_init__(self):
        img = tuple(int(i) for i in self.image)
        if len(img) != self.source.n:
            raise DomainError(f"map image has {len(img)} entries for {self.source.n} points")
        for i in img:
            if not 0 <= i < self.target.n:
                raise DomainError(f"image index {i} outside target")
        object.__setattr__(self, "image", img)

    @classmethod
    def from_labels(cls, source: FiniteSpace, target: FiniteSpace, assignment: Mapping) -> "FiniteMap":
        missing = [p for p in source.points if p not in assignment]
        if missing:
            raise DomainError(f"assignment misses points {missing}")
        return cls(source, target, tuple(target.index(assignment[p]) for p in source.points))

    def __call__(self, label):
        return self.target.points[self.image[self.source.index(label)]]

    def preimage(self, mask: int) -> int:
        return _preimage(self.image, mask)

    def image_of(self, mask: int) -> int:
        out = 0
        for i in bits(mask):
            out |= 1 << self.image[i]
        return out

    @property
    def is_bijective(self) -> bool:
        return self.source.n == self.target.n and len(set(self.image)) == self.source.n

    def inverse(self) -> "FiniteMap":
        if not self.is_bijective:
            raise DomainError("map is not bijective")
        inv = [0] * self.target.n
        for i, j in enumerate(self.image):
            inv[j] = i
        return FiniteMap(self.target, self.source, tuple(inv))

    def then(self, g: "FiniteMap") -> "FiniteMap":
        """The composite ``g ∘ self``."""
        return FiniteMap(self.source, g.target, tuple(g.image[j] for j in self.image))


def _preimage(image: Sequence[int], mask: int) -> int:
    out = 0
    for i, j in enumerate(image):
        if mask >> j & 1:
            out |= 1 << i
    return out


def is_continuous(f: FiniteMap) -> bool:
    return all(f.source.is_open(f.preimage(v)) for v in f.target.opens)


def is_open_map(f: FiniteMap) -> bool:
    return all(f.target.is_open(f.image_of(u)) for u in f.source.opens)


def is_closed_map(f: FiniteMap) -> bool:
    return all(f.target.is_closed(f.image_of(c)) for c in f.source.closed_sets)


def is_homeomorphism(f: FiniteMap) -> bool:
    return f.is_bijective and is_continuous(f) and is_continuous(f.inverse())


def find_homeomorphism(s1: FiniteSpace, s2: FiniteSpace) -> Optional[FiniteMap]:
    """First homeomorphism in lexicographic order of the image tuple, or None."""
    if max(s1.n, s2.n) > MAX_HOMEOMORPHISM_POINTS:
        raise CapacityError(f"homeomorphism search is limited to {MAX_HOMEOMORPHISM_POINTS} points")
    if s1.n != s2.n or len(s1.opens) != len(s2.opens):
        return None
    # open-set sizes must match as multisets
    if sorted(map(popcount, s1.opens)) != sorted(map(popcount, s2.opens)):
        return None
    for perm in itertools.permutations(range(s1.n)):
        f = FiniteMap(s1, s2, perm)
        if is_continuous(f) and is_open_map(f):
            return f
    return None


def _as_image(f, source_points: Sequence, target_points: Sequence) -> tuple[int, ...]:
    if isinstance(f, Mapping):
        tindex = {p: i for i, p in enumerate(target_points)}
        try:
            return tuple(tindex[f[p]] for p in source_points)
        except KeyError as e:
            raise DomainError(f"map is undefined or leaves the target at {e}") from None
    img = tuple(int(i) for i in f)
    if len(img) != len(source_points) or any(not 0 <= i < len(target_points) for i in img):
        raise DomainError("raw map must give a valid target index for every source point")
    return img


def induced_pushforward(f, source: FiniteSpace, target_points: Sequence[Hashable]) -> FiniteSpace:
    """Finest topology on ``target_points`` making ``f`` continuous.

    ``f`` is a sequence of target indices or a mapping of labels.  A target
    subset is open iff its preimage is open; points outside the image of
    ``f`` are therefore unconstrained.
    """
    tpts = tuple(target_points)
    _check_capacity(len(tpts))
    img = _as_image(f, source.points, tpts)
    im = 0
    for j in img:
        im |= 1 << j
    outside = full_mask(len(tpts)) & ~im
    free = popcount(outside)
    saturated = set()
    for u in source.opens:
        s = 0
        for i in bits(u):
            s |= 1 << img[i]
        if _preimage(img, s) == u:
            saturated.add(s)
    if len(saturated) << free > MAX_INDUCED_OPENS:
        raise CapacityError("induced topology has too many open sets to list")
    free_bits = list(bits(outside))
    extras = []
    for combo in range(1 << free):
        extras.append(sum(1 << free_bits[k] for k in range(free) if combo >> k & 1))
    opens = {s | t for s in saturated for t in extras}
    out = FiniteSpace(tpts, opens)
    _assert_induced(out, FiniteMap(source, out, img))
    return out


def induced_pullback(f, source_points: Sequence[Hashable], target: FiniteSpace) -> FiniteSpace:
    """Coarsest topology on ``source_points`` making ``f`` continuous."""
    spts = tuple(source_points)
    img = _as_image(f, spts, target.points)
    out = FiniteSpace(spts, {_preimage(img, v) for v in target.opens})
    _assert_induced(out, FiniteMap(out, target, img))
    return out


def _assert_induced(space: FiniteSpace, f: FiniteMap) -> None:
    if not verify_topology(space.points, space.opens).is_topology:
        raise AssertionError("induced family is not a topology")
    if not is_continuous(f):
        raise AssertionError("map is not continuous for the induced topology")


def inclusion(space: FiniteSpace, a: int) -> tuple[int, ...]:
    """Raw map of the inclusion of subset ``a`` into ``space``."""
    return tuple(bits(a))


# -- enumeration ------------------------------------------------------------


def _is_topology_fast(members: frozenset, fam: Sequence[int]) -> bool:
    for a, b in itertools.combinations(fam, 2):
        if (a | b) not in members or (a & b) not in members:
            return False
    return True


def enumerate_topologies(n: int, count_only: bool = True):
    """Count (and optionally list) every topology on ``n`` labelled points.

    Candidates are all families containing the empty and full sets, taken
    in increasing order of the bitmask that selects the proper nonempty
    subsets.  Returns the count, or ``(count, spaces)`` when ``count_only``
    is false.
    """
    if n < 0:
        raise DomainError("n must be non-negative")
    if n > MAX_ENUMERATION_POINTS:
        raise CapacityError(f"exhaustive enumeration is limited to n <= {MAX_ENUMERATION_POINTS}")
    full = full_mask(n)
    proper = list(range(1, full))
    points = tuple(range(1, n + 1))
    count = 0
    found = []
    for sel in range(1 << len(proper)):
        fam = [0] + [proper[k] for k in range(len(proper)) if sel >> k & 1] + ([full] if full else [])
        if _is_topology_fast(frozenset(fam), fam):
            count += 1
            if not count_only:
                found.append(FiniteSpace(points, fam))
    return count if count_only else (count, found)
