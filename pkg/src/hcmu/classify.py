"""Admissible singularity configurations for non-CSC HCMU metrics on the sphere.

A configuration is described by an :class:`ExtremalProfile`: how many smooth
maxima (``i1``) and smooth minima (``i2``) the curvature has, and which role
each prescribed singular point plays (saddle, maximum, minimum or cusp).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import List, Optional

INT_TOL = 1e-9


class InvalidAngleError(ValueError):
    """Angle parameter outside the admissible range (negative or exactly 1)."""


class NoMetricError(ValueError):
    """The prescribed angles admit no non-CSC HCMU metric at all."""


class Role(str, Enum):
    SADDLE = "Saddle"
    MAX = "Max"
    MIN = "Min"
    CUSP = "Cusp"
    ABSENT = "Absent"


@dataclass(frozen=True)
class AngleSpec:
    alpha: float
    beta: Optional[float] = None

    def __post_init__(self):
        for name, v in (("alpha", self.alpha), ("beta", self.beta)):
            if v is None:
                continue
            if v < 0:
                raise InvalidAngleError(f"{name}={v} is negative")
            if v == 1:
                raise InvalidAngleError(f"{name}=1 is a smooth point, not a singularity")
        if self.beta is not None and self.alpha == 0 and self.beta == 0:
            raise NoMetricError("two cusps admit no HCMU metric")

    @property
    def n_points(self) -> int:
        return 1 if self.beta is None else 2

    def angles(self) -> List[float]:
        return [self.alpha] if self.beta is None else [self.alpha, self.beta]


@dataclass(frozen=True)
class ExtremalProfile:
    """One admissible configuration.

    ``i1``/``i2`` count *smooth* maxima/minima only; a singular point sitting at
    an extremum is recorded through its role instead.  ``lam`` is the residue
    ratio (``-inf`` in the cusp regime, where the minimum value is pinned to
    ``-K1/2``).
    """

    alpha: float
    beta: Optional[float]
    i1: int
    i2: int
    role1: Role
    role2: Role
    lam: float
    case_label: str
    notes: tuple = field(default=())

    @property
    def angles(self) -> AngleSpec:
        return AngleSpec(self.alpha, self.beta)

    @property
    def is_cusp(self) -> bool:
        return Role.CUSP in (self.role1, self.role2)

    @property
    def n_saddles(self) -> int:
        return (self.role1 == Role.SADDLE) + (self.role2 == Role.SADDLE)

    def roles(self) -> List[Role]:
        return [self.role1] if self.beta is None else [self.role1, self.role2]

    def to_json(self) -> dict:
        d = asdict(self)
        d["role1"] = self.role1.value
        d["role2"] = self.role2.value
        d["lambda"] = None if math.isinf(self.lam) else self.lam
        del d["lam"]
        d["notes"] = list(self.notes)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ExtremalProfile":
        lam = d["lambda"]
        return cls(
            alpha=d["alpha"],
            beta=d["beta"],
            i1=int(d["i1"]),
            i2=int(d["i2"]),
            role1=Role(d["role1"]),
            role2=Role(d["role2"]),
            lam=-math.inf if lam is None else float(lam),
            case_label=d["case_label"],
            notes=tuple(d.get("notes", ())),
        )


@dataclass(frozen=True)
class ObstructionData:
    chi: int
    saddle_angles: List[float]
    n_total: int
    j_saddles: int
    s_smooth: int


def as_integer(x: float) -> Optional[int]:
    """Return ``round(x)`` when ``x`` is an integer within ``INT_TOL``."""
    r = round(x)
    return int(r) if abs(x - r) <= INT_TOL else None


def _saddle_int(x: float) -> Optional[int]:
    n = as_integer(x)
    return n if n is not None and n >= 2 else None


def _divides(a: float, b: float) -> bool:
    """``a | b`` for integers given as floats."""
    ai, bi = as_integer(a), as_integer(b)
    return ai is not None and bi is not None and ai != 0 and bi % ai == 0


INTEGRAL_WEIGHT_NOTE = ("integral residue weights with i2 >= 1: the form would be dlog of a rational "
                        "map of degree i1 ramified to order i1+i2 at the saddle, so no form exists")


def integral_weights(lam: float, e: float) -> bool:
    """Both ``lam`` and ``lam*e`` are integers."""
    return as_integer(lam) is not None and as_integer(lam * e) is not None


def form_obstructed(profile: "ExtremalProfile") -> bool:
    return INTEGRAL_WEIGHT_NOTE in profile.notes


# ---------------------------------------------------------------- one point


def classify_one(alpha: float) -> List[ExtremalProfile]:
    if alpha < 0 or alpha == 1:
        raise InvalidAngleError(f"alpha={alpha} must be >= 0 and != 1")
    if alpha == 0:
        # cusp at the minimum, one smooth maximum
        return [ExtremalProfile(0.0, None, 1, 0, Role.CUSP, Role.ABSENT, -math.inf, "cusp")]
    out = []
    if alpha < 1:
        # singular minimum, one smooth maximum: 1 + lam*alpha = 0
        out.append(ExtremalProfile(alpha, None, 1, 0, Role.MIN, Role.ABSENT, -1.0 / alpha, "football/min"))
    else:
        # singular maximum, one smooth minimum: alpha + lam = 0
        out.append(ExtremalProfile(alpha, None, 0, 1, Role.MAX, Role.ABSENT, -alpha, "football/max"))
    a = _saddle_int(alpha)
    if a is not None:
        for i1 in range(a, 0, -1):
            i2 = a + 1 - i1
            if i2 < 1 or i1 <= i2:
                continue
            if i2 == 1:
                label = "saddle/single-min"
            elif i1 % i2 != 0:
                label = "saddle/non-divisible"
            else:
                continue
            out.append(ExtremalProfile(float(a), None, i1, i2, Role.SADDLE, Role.ABSENT, -i1 / i2, label))
    return out


# ---------------------------------------------------------------- two points


def _saddle_with_extremum(s: int, e: float, e_role: Role) -> List[tuple]:
    """(i1, i2, lam, label, notes) for a saddle of angle ``s`` and another
    singular point of angle ``e`` at an extremum of K.  Ordered by decreasing i1."""
    e_int = _saddle_int(e)
    res = []
    for i1 in range(s, -1, -1):
        i2 = s - i1
        if e_role == Role.MAX:
            if i2 < 1 or not (i1 + e > i2):
                continue
            lam = -(i1 + e) / i2
            if e_int is None:
                label, notes = "saddle+max/free", ()
            elif i2 == 1:
                label, notes = "saddle+max/single-min", ()
            elif _divides(i2, i1 + e_int):
                if not (i1 + e_int > s - 1):
                    continue
                label, notes = "saddle+max/divisible", ()
            else:
                label, notes = "saddle+max/non-divisible", ()
        else:
            if i1 < 1 or not (i1 > i2 + e):
                continue
            lam = -i1 / (i2 + e)
            if e_int is None:
                label, notes = "saddle+min/free", ()
                if integral_weights(lam, e) and i2 >= 1:
                    notes = (INTEGRAL_WEIGHT_NOTE,)
            elif i2 == 0:
                label, notes = "saddle+min/no-smooth-min", ()
            else:
                m = i2 + e_int
                if i1 % m == 0 or not (m * i1 > (s - 1) * math.gcd(m, i1)):
                    continue
                label = "saddle+min/non-divisible"
                notes = ("divisibility condition taken as (i2+e) does not divide i1 with strict inequality",)
        res.append((i1, i2, lam, label, notes))
    return res


def _two_saddles(a: int, b: int) -> List[tuple]:
    res = []
    for i1 in range(a + b - 1, 0, -1):
        i2 = a + b - i1
        if i2 < 1 or i1 <= i2:
            continue
        if i2 == 1:
            label, notes = "two-saddle/single-min", ()
        elif i1 % i2 == 0:
            if i1 < max(a, b):
                continue
            label = "two-saddle/divisible"
            notes = ("bound taken as i1 >= max(alpha, beta)",)
        else:
            label, notes = "two-saddle/non-divisible", ()
        res.append((i1, i2, -i1 / i2, label, notes))
    return res


def classify_two(alpha: float, beta: float) -> List[ExtremalProfile]:
    """All admissible profiles on the sphere with two singular points.

    Order: footballs, cusp cases, saddle at the ``alpha`` point (other point at
    a maximum, then at a minimum), the same with the points swapped, and
    finally two-saddle profiles; inside each group by decreasing ``i1``.
    """
    for name, v in (("alpha", alpha), ("beta", beta)):
        if v < 0 or v == 1:
            raise InvalidAngleError(f"{name}={v} must be >= 0 and != 1")
    if alpha == 0 and beta == 0:
        raise NoMetricError("two cusps admit no HCMU metric")

    out: List[ExtremalProfile] = []
    P = ExtremalProfile

    if alpha == 0 or beta == 0:
        cusp_first = alpha == 0
        cone = beta if cusp_first else alpha

        def mk(i1, role_cone, label):
            r1, r2 = (Role.CUSP, role_cone) if cusp_first else (role_cone, Role.CUSP)
            return P(alpha, beta, i1, 0, r1, r2, -math.inf, label)

        out.append(mk(0, Role.MAX, "cusp/football"))
        c = _saddle_int(cone)
        if c is not None:
            out.append(mk(c, Role.SADDLE, "cusp/saddle"))
        return out

    if not math.isclose(alpha, beta, rel_tol=0, abs_tol=INT_TOL):
        if alpha > beta:
            out.append(P(alpha, beta, 0, 0, Role.MAX, Role.MIN, -alpha / beta, "football"))
        else:
            out.append(P(alpha, beta, 0, 0, Role.MIN, Role.MAX, -beta / alpha, "football"))

    for first in (True, False):
        s_val, e_val = (alpha, beta) if first else (beta, alpha)
        s = _saddle_int(s_val)
        if s is None:
            continue
        for e_role in (Role.MAX, Role.MIN):
            for i1, i2, lam, label, notes in _saddle_with_extremum(s, e_val, e_role):
                r1, r2 = (Role.SADDLE, e_role) if first else (e_role, Role.SADDLE)
                out.append(P(alpha, beta, i1, i2, r1, r2, lam, label, notes))

    a, b = _saddle_int(alpha), _saddle_int(beta)
    if a is not None and b is not None:
        for i1, i2, lam, label, notes in _two_saddles(a, b):
            out.append(P(alpha, beta, i1, i2, Role.SADDLE, Role.SADDLE, lam, label, notes))
    return out


def classify(angles: AngleSpec) -> List[ExtremalProfile]:
    if angles.beta is None:
        return classify_one(angles.alpha)
    return classify_two(angles.alpha, angles.beta)


# ---------------------------------------------------------------- obstruction


def obstruction_data(profile: ExtremalProfile) -> ObstructionData:
    angles = [profile.alpha] if profile.beta is None else [profile.alpha, profile.beta]
    saddles = [a for a, r in zip(angles, profile.roles()) if r == Role.SADDLE]
    return ObstructionData(
        chi=2,
        saddle_angles=saddles,
        n_total=len(angles),
        j_saddles=len(saddles),
        s_smooth=profile.i1 + profile.i2,
    )


def check_obstruction(profile: ExtremalProfile, angles: Optional[AngleSpec] = None) -> float:
    """Sum over saddles of (1 - angle) + (#non-saddle singular points) + #smooth critical points.

    Must equal the Euler characteristic 2 for an admissible profile.
    """
    d = obstruction_data(profile)
    total = sum(1 - a for a in d.saddle_angles) + (d.n_total - d.j_saddles) + d.s_smooth
    r = round(total)
    return int(r) if abs(total - r) <= INT_TOL else total


def residue_ratio_ok(profile: ExtremalProfile) -> bool:
    return profile.lam < -1
