"""Branch data of covers of the sphere and their realizability.

Two closed-form criteria (three branch points with one of shape
``(m+1, 1, ..., 1)``, and the multi-point generalisation) are paired with a
brute-force oracle that searches for permutations ``s_1 ... s_k = id`` with
prescribed cycle types generating a transitive group.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

DEFAULT_MAX_DEGREE = 7


class DegreeMismatchError(ValueError):
    pass


class InvalidBranchShapeError(ValueError):
    pass


class DegreeCapError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    parts: Tuple[int, ...]

    def __post_init__(self):
        parts = tuple(sorted((int(p) for p in self.parts), reverse=True))
        if not parts or parts[-1] < 1:
            raise ValueError(f"invalid partition {self.parts}")
        object.__setattr__(self, "parts", parts)

    @property
    def d(self) -> int:
        return sum(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    @property
    def is_trivial(self) -> bool:
        return len(self.parts) == self.d

    @property
    def branching(self) -> int:
        return self.d - len(self.parts)

    @classmethod
    def parse(cls, text: str) -> "Partition":
        return cls(tuple(int(t) for t in text.replace(" ", "").split(",") if t))

    @classmethod
    def hook(cls, m: int, d: int) -> "Partition":
        """The partition ``(m+1, 1, ..., 1)`` of ``d``."""
        if m < 1 or m + 1 > d:
            raise InvalidBranchShapeError(f"(m+1,1,...,1) with m={m} is not a partition of {d}")
        return cls((m + 1,) + (1,) * (d - m - 1))

    def __str__(self) -> str:
        return ",".join(map(str, self.parts))


@dataclass(frozen=True)
class BranchData:
    d: int
    partitions: Tuple[Partition, ...]
    allow_trivial: bool = False

    def __post_init__(self):
        parts = tuple(p if isinstance(p, Partition) else Partition(tuple(p)) for p in self.partitions)
        object.__setattr__(self, "partitions", parts)
        for p in parts:
            if p.d != self.d:
                raise DegreeMismatchError(f"partition {p} does not sum to d={self.d}")
            if p.is_trivial and not self.allow_trivial:
                raise ValueError(f"trivial partition {p} is not a branch point")

    @classmethod
    def parse(cls, d: int, text: str, allow_trivial: bool = False) -> "BranchData":
        return cls(d, tuple(Partition.parse(t) for t in text.split("|")), allow_trivial)

    def __str__(self) -> str:
        return "|".join(str(p) for p in self.partitions)


def total_branching(data: BranchData) -> int:
    return sum(p.branching for p in data.partitions)


def source_genus(data: BranchData) -> Optional[int]:
    """Genus of the covering surface forced by Riemann-Hurwitz over the sphere."""
    twice = total_branching(data) - 2 * data.d + 2
    if twice < 0 or twice % 2:
        return None
    return twice // 2


def _gcd_parts(a: Partition, b: Partition) -> int:
    return reduce(math.gcd, a.parts + b.parts)


def boccara_realizable(a: Partition, b: Partition, m: int) -> bool:
    """Realizability of ``{a, b, (m+1, 1, ..., 1)}`` by a rational map."""
    d = a.d
    if b.d != d:
        raise DegreeMismatchError(f"{a} and {b} have different degrees")
    if m < 1 or m + 1 > d:
        raise DegreeMismatchError(f"(m+1,1,...,1) with m={m} is not a partition of {d}")
    v = a.branching + b.branching + m
    if v % 2:
        return False
    if v >= 2 * d:
        return True
    if v == 2 * d - 2:
        return m * _gcd_parts(a, b) < d
    return False


def song_xu_realizable(a: Partition, b: Partition, ms: Sequence[int]) -> bool:
    """Realizability of ``{a, b, (m_1+1, 1..), ..., (m_l+1, 1..)}`` where the
    ``m_i`` sum to ``len(a) + len(b) - 2``."""
    d = a.d
    if b.d != d:
        raise DegreeMismatchError(f"{a} and {b} have different degrees")
    ms = list(ms)
    target = len(a) + len(b) - 2
    if not ms or target <= 0 or sum(ms) != target:
        raise InvalidBranchShapeError(
            f"sum(ms)={sum(ms)} must equal len(a)+len(b)-2={target} > 0")
    if min(ms) < 1 or max(ms) + 1 > d:
        raise InvalidBranchShapeError(f"some (m+1,1,...,1) is not a partition of {d}")
    return max(ms) * _gcd_parts(a, b) < d


# ---------------------------------------------------------------- oracle

Perm = Tuple[int, ...]


def cycle_type(p: Perm) -> Tuple[int, ...]:
    seen = [False] * len(p)
    lens = []
    for i in range(len(p)):
        if not seen[i]:
            n, j = 0, i
            while not seen[j]:
                seen[j] = True
                j = p[j]
                n += 1
            lens.append(n)
    return tuple(sorted(lens, reverse=True))


@lru_cache(maxsize=None)
def _classes(d: int) -> Dict[Tuple[int, ...], Tuple[Perm, ...]]:
    out: Dict[Tuple[int, ...], List[Perm]] = {}
    for p in itertools.permutations(range(d)):
        out.setdefault(cycle_type(p), []).append(p)
    return {k: tuple(v) for k, v in out.items()}


def conjugacy_class(parts: Tuple[int, ...], d: int) -> Tuple[Perm, ...]:
    return _classes(d)[tuple(sorted(parts, reverse=True))]


def canonical_perm(parts: Tuple[int, ...]) -> Perm:
    """Cycles (0 1 .. k-1)(k ..) laid out consecutively, longest first."""
    p, start = [], 0
    for k in sorted(parts, reverse=True):
        p.extend(start + (i + 1) % k for i in range(k))
        start += k
    return tuple(p)


def _compose(p: Perm, q: Perm) -> Perm:
    return tuple(p[i] for i in q)


def _inverse(p: Perm) -> Perm:
    inv = [0] * len(p)
    for i, j in enumerate(p):
        inv[j] = i
    return tuple(inv)


def _merge(labels: Tuple[int, ...], p: Perm) -> Tuple[int, ...]:
    """Join the orbit labelling ``labels`` with the cycles of ``p`` (union-find)."""
    parent = list(labels)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in enumerate(p):
        ri, rj = find(i), find(j)
        if ri != rj:
            if ri < rj:
                parent[rj] = ri
            else:
                parent[ri] = rj
    return tuple(find(i) for i in range(len(parent)))


def _sign(parts: Iterable[int]) -> int:
    return -1 if sum(k - 1 for k in parts) % 2 else 1


def oracle_realizable(data: BranchData, require_genus: Optional[int] = 0,
                      max_degree: int = DEFAULT_MAX_DEGREE) -> bool:
    """Exhaustive permutation search.

    ``require_genus=None`` accepts any genus.  The first permutation is fixed to
    a canonical representative (conjugation invariance); the last one is
    determined by the product of the others.
    """
    d = data.d
    if d > max_degree:
        raise DegreeCapError(f"degree {d} exceeds oracle cap {max_degree}; raise max_degree at your own cost")
    if d > DEFAULT_MAX_DEGREE:
        warnings.warn(f"oracle search at degree {d} may be very slow", RuntimeWarning)
    if require_genus is not None and source_genus(data) != require_genus:
        return False
    parts = [p.parts for p in data.partitions]
    if not parts:
        return d == 1
    if d == 1:
        return True
    if len(parts) == 1:
        return False  # a single permutation equal to id is intransitive for d > 1
    # largest class fixed first, second largest determined last, the rest
    # smallest first to keep the branching factor low early
    order = sorted(parts, key=lambda p: len(conjugacy_class(p, d)), reverse=True)
    first, last, middle = order[0], order[1], sorted(order[2:], key=lambda p: len(conjugacy_class(p, d)))
    seq = middle
    branch = [d - len(p) for p in seq] + [d - len(last)]
    suffix_branch = [sum(branch[i:]) for i in range(len(branch) + 1)]
    suffix_sign = [math.prod(_sign(p) for p in (seq + [last])[i:]) for i in range(len(seq) + 2)]
    classes = [conjugacy_class(p, d) for p in seq]
    target_last = tuple(sorted(last, reverse=True))

    s1 = canonical_perm(first)
    identity_labels = tuple(range(d))
    visited = set()

    def n_cycles(p):
        return len(cycle_type(p))

    def n_orbits(labels):
        return len(set(labels))

    def dfs(j: int, prod: Perm, labels: Tuple[int, ...]) -> bool:
        rem = suffix_branch[j]
        if d - n_cycles(prod) > rem or n_orbits(labels) - 1 > rem:
            return False
        if _sign(cycle_type(prod)) != suffix_sign[j]:
            return False
        if j == len(seq):
            sk = _inverse(prod)
            if cycle_type(sk) != target_last:
                return False
            return n_orbits(_merge(labels, sk)) == 1
        key = (j, prod, labels)
        if key in visited:
            return False
        visited.add(key)
        for s in classes[j]:
            if dfs(j + 1, _compose(prod, s), _merge(labels, s)):
                return True
        return False

    return dfs(0, s1, _merge(identity_labels, s1))


# ---------------------------------------------------------------- enumeration helpers


def partitions_of(n: int, max_part: Optional[int] = None) -> List[Tuple[int, ...]]:
    """All partitions of ``n`` (non-increasing tuples), parts bounded by ``max_part``."""
    if max_part is None:
        max_part = n
    if n == 0:
        return [()]
    out = []
    for k in range(min(n, max_part), 0, -1):
        for rest in partitions_of(n - k, k):
            out.append((k,) + rest)
    return out


def boccara_shapes(d: int):
    """Every (a, b, m) with nontrivial a, b (unordered pair) and 1 <= m <= d-1."""
    nontrivial = [Partition(p) for p in partitions_of(d) if len(p) < d]
    for i, a in enumerate(nontrivial):
        for b in nontrivial[i:]:
            for m in range(1, d):
                yield a, b, m


def song_xu_shapes(d: int):
    """Every (a, b, ms) with nontrivial a, b satisfying the shape hypothesis."""
    nontrivial = [Partition(p) for p in partitions_of(d) if len(p) < d]
    for i, a in enumerate(nontrivial):
        for b in nontrivial[i:]:
            total = len(a) + len(b) - 2
            if total <= 0:
                continue
            for ms in partitions_of(total, d - 1):
                yield a, b, ms


def boccara_data(a: Partition, b: Partition, m: int) -> BranchData:
    return BranchData(a.d, (a, b, Partition.hook(m, a.d)))


def song_xu_data(a: Partition, b: Partition, ms: Sequence[int]) -> BranchData:
    return BranchData(a.d, (a, b) + tuple(Partition.hook(m, a.d) for m in ms))
