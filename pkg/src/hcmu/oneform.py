"""Character 1-forms on the Riemann sphere.

A form is stored in factored shape ``omega = kappa * Z(z) / D(z) dz`` where
``Z`` carries the zeros (saddle points of K) and ``D`` the simple poles
(extremal points of K).  Poles come in groups of equal residue; the residue of
every pole in a group is ``sigma * weight``.

For saddle profiles the pole positions are unknown.  Writing every group as a
monic polynomial ``G_g``, the partial-fraction identity

    sum_g weight_g * G_g'/G_g  =  c * Z / prod_g G_g

becomes the polynomial numerator identity
``sum_g weight_g G_g' prod_{h != g} G_h = c Z`` which is solved in coefficient
space by damped Gauss-Newton with random restarts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from .classify import AngleSpec, ExtremalProfile, Role, as_integer, classify, form_obstructed

ROOT_TOL = 1e-6
RESIDUAL_TOL = 1e-10


class InvalidProfileError(ValueError):
    pass


class NoConvergenceError(RuntimeError):
    def __init__(self, msg, best_residual=math.inf):
        super().__init__(msg)
        self.best_residual = best_residual


class DegenerateSolutionError(RuntimeError):
    pass


# ---------------------------------------------------------------- constants


def sigma_from_bounds(k1: float, k2: float, factor_one: bool = False) -> float:
    """Residue of the character form at a smooth maximum of K.

    ``factor_one=True`` returns the variant without the factor 3, which gives
    smooth extremal points an angle of 2*pi/3 and is kept only for comparison.
    """
    num = 1.0 if factor_one else 3.0
    return -num / ((k1 - k2) * (2 * k1 + k2))


def lambda_from_bounds(k1: float, k2: float) -> float:
    return -(2 * k1 + k2) / (2 * k2 + k1)


def bounds_from_lambda(lam: float, k1: float = 1.0) -> Tuple[float, float]:
    """Invert ``lam = -(2 K1 + K2)/(K1 + 2 K2)`` at fixed K1."""
    if not lam < -1:
        raise InvalidProfileError(f"lambda={lam} must be < -1")
    return k1, -k1 * (2 + lam) / (2 * lam + 1)


def cusp_sigma(mu: float) -> float:
    """Residue at a smooth maximum in the cusp regime (K in (mu, -2 mu))."""
    return -1.0 / (3 * mu * mu)


def lambda_of(profile: ExtremalProfile, angles: Optional[AngleSpec] = None) -> float:
    """Residue ratio from the residue theorem: maxima side + lam * minima side = 0."""
    if profile.is_cusp:
        return -math.inf
    vals = [profile.alpha] if profile.beta is None else [profile.alpha, profile.beta]
    top = profile.i1 + sum(a for a, r in zip(vals, profile.roles()) if r == Role.MAX)
    bottom = profile.i2 + sum(a for a, r in zip(vals, profile.roles()) if r == Role.MIN)
    if bottom == 0 or top == 0:
        raise InvalidProfileError("profile needs at least one maximum and one minimum")
    return -top / bottom


# ---------------------------------------------------------------- model


@dataclass(frozen=True)
class PoleGroup:
    name: str  # P: smooth maxima, A: singular maximum, Q: smooth minima, B: singular minimum, C: cusp
    weight: float
    roots: Tuple[complex, ...]


@dataclass(frozen=True)
class GaugeSpec:
    pin: complex = -1.0
    product: complex = 2.0

    def to_json(self):
        return {"pin": [self.pin.real, self.pin.imag] if isinstance(self.pin, complex) else [float(self.pin), 0.0],
                "product": [complex(self.product).real, complex(self.product).imag]}

    @classmethod
    def from_json(cls, d):
        return cls(complex(*d["pin"]), complex(*d["product"]))


@dataclass(frozen=True)
class SingularPoint:
    name: str  # "alpha" or "beta"
    loc: Optional[complex]  # None is the point at infinity
    angle: float
    role: Role


@dataclass(frozen=True)
class OneFormModel:
    profile: ExtremalProfile
    regime: str  # "conical" | "cusp"
    sigma: float
    lam: float
    groups: Tuple[PoleGroup, ...]
    zeros: Tuple[Tuple[complex, int], ...]
    kappa: complex
    c: complex
    weight_scale: float
    residue_at_infinity: float
    singular_points: Tuple[SingularPoint, ...]
    gauge: Optional[GaugeSpec] = None
    seed: Optional[int] = None
    residual: float = 0.0
    flags: Tuple[str, ...] = field(default=())

    # -- poles and residues

    @property
    def poles(self) -> List[Tuple[complex, float]]:
        return [(complex(r), self.sigma * g.weight) for g in self.groups for r in g.roots]

    def group(self, name: str) -> Optional[PoleGroup]:
        for g in self.groups:
            if g.name == name:
                return g
        return None

    @property
    def p_roots(self) -> Tuple[complex, ...]:
        g = self.group("P")
        return g.roots if g else ()

    @property
    def q_roots(self) -> Tuple[complex, ...]:
        g = self.group("Q")
        return g.roots if g else ()

    @property
    def p_coeffs(self) -> np.ndarray:
        return npoly.polyfromroots(self.p_roots) if self.p_roots else np.ones(1, complex)

    @property
    def q_coeffs(self) -> np.ndarray:
        return npoly.polyfromroots(self.q_roots) if self.q_roots else np.ones(1, complex)

    @property
    def pole_locations(self) -> np.ndarray:
        return np.array([p for p, _ in self.poles], dtype=complex)

    @property
    def residues(self) -> np.ndarray:
        return np.array([r for _, r in self.poles], dtype=float)

    @property
    def infinity_is_pole(self) -> bool:
        return self.residue_at_infinity != 0.0

    def zero_poly(self) -> np.ndarray:
        z = np.ones(1, complex)
        for loc, order in self.zeros:
            for _ in range(order):
                z = npoly.polymul(z, [-loc, 1])
        return z

    # -- evaluation

    def w(self, z):
        """``omega/dz`` in the finite chart."""
        z = np.asarray(z, dtype=complex)
        num = np.full(z.shape, self.kappa, dtype=complex)
        for loc, order in self.zeros:
            num = num * (z - loc) ** order
        den = np.ones(z.shape, dtype=complex)
        for p in self.pole_locations:
            den = den * (z - p)
        return num / den

    def w_inf(self, u):
        """``omega/du`` in the chart ``u = 1/z`` around infinity."""
        u = np.asarray(u, dtype=complex)
        m = sum(o for _, o in self.zeros)
        n = len(self.pole_locations)
        num = np.full(u.shape, -self.kappa, dtype=complex)
        for loc, order in self.zeros:
            num = num * (1 - loc * u) ** order
        den = np.ones(u.shape, dtype=complex)
        for p in self.pole_locations:
            den = den * (1 - p * u)
        return num / den * u ** (n - m - 2)

    def residue_sum(self) -> float:
        return float(self.residues.sum() + self.residue_at_infinity)

    def expected_angle_at_pole(self, residue: float, k_bounds=None) -> float:
        """Cone angle / 2pi read off from a residue."""
        if self.regime == "cusp":
            return residue / self.sigma if residue < 0 else 0.0
        if residue < 0:
            return residue / self.sigma
        return residue / (self.sigma * self.lam)

    def critical_points(self) -> List[Tuple[Optional[complex], float, str]]:
        """Every pole and zero with its expected angle (in units of 2pi) and kind."""
        out = []
        for loc, order in self.zeros:
            out.append((complex(loc), float(order + 1), "saddle"))
        for loc, r in self.poles:
            out.append((loc, self.expected_angle_at_pole(r), "max" if r < 0 else "min"))
        if self.infinity_is_pole:
            r = self.residue_at_infinity
            out.append((None, self.expected_angle_at_pole(r), "max" if r < 0 else "min"))
        return out

    def rescaled(self, sigma: float) -> "OneFormModel":
        """Same pole/zero configuration, residues scaled to a new ``sigma``."""
        f = sigma / self.sigma
        return replace(self, sigma=sigma, kappa=self.kappa * f,
                       residue_at_infinity=self.residue_at_infinity * f)

    # -- serialisation

    def to_json(self) -> dict:
        def cj(z):
            z = complex(z)
            return [z.real, z.imag]

        return {
            "alpha": self.profile.alpha,
            "beta": self.profile.beta,
            "i1": self.profile.i1,
            "i2": self.profile.i2,
            "lambda": None if math.isinf(self.lam) else self.lam,
            "sigma": self.sigma,
            "p_roots": [cj(z) for z in self.p_roots],
            "q_roots": [cj(z) for z in self.q_roots],
            "c": cj(self.c),
            "gauge": self.gauge.to_json() if self.gauge else None,
            "seed": self.seed,
            "residual": self.residual,
            "profile": self.profile.to_json(),
            "regime": self.regime,
            "groups": [{"name": g.name, "weight": g.weight, "roots": [cj(z) for z in g.roots]} for g in self.groups],
            "zeros": [{"loc": cj(l), "order": o} for l, o in self.zeros],
            "kappa": cj(self.kappa),
            "weight_scale": self.weight_scale,
            "residue_at_infinity": self.residue_at_infinity,
            "singular_points": [{"name": s.name, "loc": None if s.loc is None else cj(s.loc),
                                 "angle": s.angle, "role": s.role.value} for s in self.singular_points],
            "flags": list(self.flags),
        }

    @classmethod
    def from_json(cls, d: dict) -> "OneFormModel":
        def jc(v):
            return complex(v[0], v[1])

        lam = d["lambda"]
        return cls(
            profile=ExtremalProfile.from_json(d["profile"]),
            regime=d["regime"],
            sigma=float(d["sigma"]),
            lam=-math.inf if lam is None else float(lam),
            groups=tuple(PoleGroup(g["name"], float(g["weight"]), tuple(jc(z) for z in g["roots"]))
                         for g in d["groups"]),
            zeros=tuple((jc(z["loc"]), int(z["order"])) for z in d["zeros"]),
            kappa=jc(d["kappa"]),
            c=jc(d["c"]),
            weight_scale=float(d["weight_scale"]),
            residue_at_infinity=float(d["residue_at_infinity"]),
            singular_points=tuple(SingularPoint(s["name"], None if s["loc"] is None else jc(s["loc"]),
                                                float(s["angle"]), Role(s["role"]))
                                  for s in d["singular_points"]),
            gauge=GaugeSpec.from_json(d["gauge"]) if d.get("gauge") else None,
            seed=d.get("seed"),
            residual=float(d.get("residual", 0.0)),
            flags=tuple(d.get("flags", ())),
        )


# ---------------------------------------------------------------- footballs


def _default_sigma(lam: float) -> float:
    return sigma_from_bounds(*bounds_from_lambda(lam))


def football_form(alpha: float, sigma: float, beta: Optional[float] = None,
                  profile: Optional[ExtremalProfile] = None) -> OneFormModel:
    """Rotationally symmetric form with poles at 0 (minimum) and infinity (maximum).

    With one angle, ``alpha > 1`` is the maximum and the minimum is smooth;
    ``alpha < 1`` is the minimum and the maximum is smooth.  With two angles the
    larger one is the maximum.
    """
    if alpha <= 0:
        raise InvalidProfileError("football angle must be positive")
    flags = ()
    if beta is None:
        if alpha == 1:
            flags = ("non-singular",)
            a_max, a_min = 1.0, 1.0
        elif alpha > 1:
            a_max, a_min = alpha, 1.0
        else:
            a_max, a_min = 1.0, alpha
        if profile is None and alpha != 1:
            profile = classify(AngleSpec(alpha))[0]
    else:
        a_max, a_min = max(alpha, beta), min(alpha, beta)
        if profile is None:
            profile = classify(AngleSpec(alpha, beta))[0]
    if profile is None:
        profile = ExtremalProfile(1.0, None, 1, 1, Role.ABSENT, Role.ABSENT, -1.0, "smooth")
    lam = -a_max / a_min
    r0 = -sigma * a_max  # = sigma * lam * a_min
    pts = []
    vals = [profile.alpha] if profile.beta is None else [profile.alpha, profile.beta]
    for name, a, role in zip(("alpha", "beta"), vals, profile.roles()):
        if role == Role.MAX:
            pts.append(SingularPoint(name, None, a, role))
        elif role == Role.MIN:
            pts.append(SingularPoint(name, 0j, a, role))
    return OneFormModel(
        profile=profile, regime="conical", sigma=sigma, lam=lam,
        groups=(PoleGroup("B" if a_min != 1 else "Q", lam * a_min, (0j,)),),
        zeros=(), kappa=complex(r0), c=complex(1.0), weight_scale=1.0,
        residue_at_infinity=-r0, singular_points=tuple(pts), flags=flags,
    )


def cusp_football_form(alpha: float, mu: float, profile: Optional[ExtremalProfile] = None) -> OneFormModel:
    """Conical maximum of angle ``alpha`` at 0, cusp (minimum) at infinity."""
    if mu >= 0 or alpha <= 0:
        raise InvalidProfileError("need mu < 0 and alpha > 0")
    sigma = cusp_sigma(mu)
    if profile is None:
        profile = classify(AngleSpec(alpha, 0.0))[0]
    r0 = sigma * alpha
    return OneFormModel(
        profile=profile, regime="cusp", sigma=sigma, lam=-math.inf,
        groups=(PoleGroup("A", alpha, (0j,)),), zeros=(), kappa=complex(r0), c=complex(1.0),
        weight_scale=1.0, residue_at_infinity=-r0,
        singular_points=(SingularPoint("alpha" if profile.role1 == Role.MAX else "beta", 0j, alpha, Role.MAX),
                         SingularPoint("beta" if profile.role1 == Role.MAX else "alpha", None, 0.0, Role.CUSP)),
    )


def cusp_saddle_form(alpha: int, mu: float, gauge: GaugeSpec = GaugeSpec(),
                     profile: Optional[ExtremalProfile] = None) -> OneFormModel:
    """Saddle of angle ``alpha`` at 0, ``alpha`` smooth maxima, cusp at infinity.

    ``omega = sigma * P'/P dz`` with ``P = z**alpha - t``; ``t`` fixed by the
    product-of-roots gauge.
    """
    if mu >= 0:
        raise InvalidProfileError("need mu < 0")
    a = int(alpha)
    sigma = cusp_sigma(mu)
    if profile is None:
        profile = [p for p in classify(AngleSpec(a, 0.0)) if Role.SADDLE in p.roles()][0]
    t = -((-1) ** a) * complex(gauge.product)
    coeffs = np.zeros(a + 1, complex)
    coeffs[0], coeffs[a] = -t, 1
    roots = tuple(complex(r) for r in np.roots(coeffs[::-1]))
    saddle_first = profile.role1 == Role.SADDLE
    return OneFormModel(
        profile=profile, regime="cusp", sigma=sigma, lam=-math.inf,
        groups=(PoleGroup("P", 1.0, roots),), zeros=((0j, a - 1),), kappa=complex(sigma * a),
        c=complex(a), weight_scale=1.0, residue_at_infinity=-sigma * a,
        singular_points=(SingularPoint("alpha" if saddle_first else "beta", 0j, float(a), Role.SADDLE),
                         SingularPoint("beta" if saddle_first else "alpha", None, 0.0, Role.CUSP)),
        gauge=gauge,
    )


# ---------------------------------------------------------------- saddle solver


@dataclass
class _Layout:
    """Group structure, zeros and gauge roles for one saddle profile."""

    names: List[str]
    weights: List[float]
    degrees: List[int]
    zeros: List[Tuple[complex, int]]
    weight_scale: float
    pinned: int  # index of the group holding the pinned root
    product: int  # index of the group whose root product is prescribed
    singular_points: List[SingularPoint]

    @property
    def n_unknowns(self):
        return sum(self.degrees) + 1

    @property
    def total_degree(self):
        return sum(self.degrees)


def _layout(profile: ExtremalProfile) -> _Layout:
    roles = profile.roles()
    vals = [profile.alpha] if profile.beta is None else [profile.alpha, profile.beta]
    names = ["alpha", "beta"]
    saddles = [i for i, r in enumerate(roles) if r == Role.SADDLE]
    if not saddles:
        raise InvalidProfileError("profile has no saddle point")
    lam = lambda_of(profile)
    groups = []
    zeros = []
    pts = []
    for k, i in enumerate(saddles):
        loc = 0j if k == 0 else 1 + 0j
        s = as_integer(vals[i])
        zeros.append((loc, s - 1))
        pts.append(SingularPoint(names[i], loc, float(s), Role.SADDLE))
    ext = [i for i, r in enumerate(roles) if r in (Role.MAX, Role.MIN)]
    e = vals[ext[0]] if ext else None
    e_role = roles[ext[0]] if ext else None
    if profile.i1:
        groups.append(("P", 1.0, profile.i1))
    if e_role == Role.MAX:
        groups.append(("A", e, 1))
    if profile.i2:
        groups.append(("Q", lam, profile.i2))
    if e_role == Role.MIN:
        groups.append(("B", lam * e, 1))
    if e_role == Role.MIN:
        scale = profile.i2 + e
    else:
        scale = profile.i2
    gnames = [g[0] for g in groups]
    pinned = gnames.index("Q") if "Q" in gnames else gnames.index("B")
    product = gnames.index("P") if "P" in gnames else gnames.index("A")
    if ext:
        pts.append(SingularPoint(names[ext[0]], None, e, e_role))  # location filled after solving
    return _Layout(gnames, [g[1] for g in groups], [g[2] for g in groups], zeros, float(scale),
                   pinned, product, pts)


def _split(x: np.ndarray, lay: _Layout) -> Tuple[List[np.ndarray], complex]:
    polys, k = [], 0
    for deg in lay.degrees:
        polys.append(np.concatenate([x[k:k + deg], [1.0]]))
        k += deg
    return polys, x[k]


def _numerator(polys: Sequence[np.ndarray], weights: Sequence[float]) -> np.ndarray:
    total = np.zeros(1, complex)
    for g, (G, w) in enumerate(zip(polys, weights)):
        term = w * npoly.polyder(G)
        for h, H in enumerate(polys):
            if h != g:
                term = npoly.polymul(term, H)
        total = npoly.polyadd(total, term)
    return total


def _pad(p: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n, complex)
    m = min(n, len(p))
    out[:m] = p[:m]
    return out


def _system(x: np.ndarray, lay: _Layout, zpoly: np.ndarray, gauge: GaugeSpec, jacobian: bool = True):
    polys, c = _split(x, lay)
    ne = lay.total_degree - 1  # coefficients z^0 .. z^(D-2)
    N = _numerator(polys, lay.weights)
    F = np.concatenate([
        _pad(N, ne) - c * _pad(zpoly, ne),
        [npoly.polyval(complex(gauge.pin), polys[lay.pinned])],
        [(-1) ** lay.degrees[lay.product] * polys[lay.product][0] - complex(gauge.product)],
    ])
    if not jacobian:
        return F, None
    J = np.zeros((ne + 2, lay.n_unknowns), complex)
    col = 0
    for g, (G, deg) in enumerate(zip(polys, lay.degrees)):
        rest = np.ones(1, complex)
        for h, H in enumerate(polys):
            if h != g:
                rest = npoly.polymul(rest, H)
        others = np.zeros(1, complex)
        for h, H in enumerate(polys):
            if h == g:
                continue
            t = lay.weights[h] * npoly.polyder(H)
            for k, K in enumerate(polys):
                if k not in (g, h):
                    t = npoly.polymul(t, K)
            others = npoly.polyadd(others, t)
        for j in range(deg):
            dG = np.zeros(j + 1, complex)
            dG[j] = 1
            dN = npoly.polyadd(lay.weights[g] * npoly.polyder(dG) if j else np.zeros(1), 0)
            dN = npoly.polyadd(npoly.polymul(dN, rest), npoly.polymul(dG, others))
            J[:ne, col + j] = _pad(dN, ne)
            if g == lay.pinned:
                J[ne, col + j] = complex(gauge.pin) ** j
            if g == lay.product and j == 0:
                J[ne + 1, col] = (-1) ** deg
        col += deg
    J[:ne, -1] = -_pad(zpoly, ne)
    return F, J


def _residual_norm(F: np.ndarray, c: complex) -> float:
    return float(np.max(np.abs(F)) / max(abs(c), 1e-300))


def _newton(x0, lay, zpoly, gauge, max_iter=80):
    x = x0.copy()
    F, J = _system(x, lay, zpoly, gauge)
    fn = np.linalg.norm(F)
    for _ in range(max_iter):
        dx = np.linalg.lstsq(J, -F, rcond=None)[0]
        t = 1.0
        while t > 1e-8:
            xn = x + t * dx
            Fn, _ = _system(xn, lay, zpoly, gauge, jacobian=False)
            fnn = np.linalg.norm(Fn)
            if np.isfinite(fnn) and fnn < fn:
                break
            t *= 0.5
        else:
            break
        x, fn = xn, fnn
        F, J = _system(x, lay, zpoly, gauge)
        if _residual_norm(F, x[-1]) < 1e-14:
            break
    return x, F


def _roots_of(polys: Sequence[np.ndarray]) -> List[Tuple[complex, ...]]:
    out = []
    for G in polys:
        if len(G) == 2:
            out.append((complex(-G[0]),))
        else:
            out.append(tuple(complex(r) for r in np.roots(G[::-1])))
    return out


def _degenerate(roots: Sequence[Sequence[complex]], zeros) -> Optional[str]:
    flat = [r for g in roots for r in g]
    if not all(np.isfinite(flat)):
        return "non-finite root"
    for i, a in enumerate(flat):
        for z, _ in zeros:
            if abs(a - z) < ROOT_TOL:
                return f"pole {a} collides with zero {z}"
        for b in flat[i + 1:]:
            if abs(a - b) < ROOT_TOL:
                return f"poles {a} and {b} collide"
    return None


def _is_linear(lay: _Layout) -> bool:
    """Min side is one pinned root and the max side one group: the system is linear."""
    min_deg = sum(d for n, d in zip(lay.names, lay.degrees) if n in ("Q", "B"))
    max_groups = [n for n in lay.names if n in ("P", "A")]
    return min_deg == 1 and len(max_groups) == 1


def _initial(rng, lay: _Layout, zpoly, gauge: GaugeSpec) -> np.ndarray:
    parts = []
    for g, deg in enumerate(lay.degrees):
        roots = []
        while len(roots) < deg:
            r = math.exp(rng.uniform(math.log(0.5), math.log(2.0)))
            z = r * complex(math.cos(t := rng.uniform(0, 2 * math.pi)), math.sin(t))
            if abs(z - 1) > 0.1:
                roots.append(z)
        if g == lay.pinned:
            roots[0] = complex(gauge.pin)
        parts.append(npoly.polyfromroots(roots)[:-1].astype(complex))
    x = np.concatenate(parts + [[0j]])
    polys, _ = _split(x, lay)
    N = _numerator(polys, lay.weights)
    ne = lay.total_degree - 1
    zp = _pad(zpoly, ne)
    x[-1] = np.vdot(zp, _pad(N, ne)) / np.vdot(zp, zp)
    return x


def _linear_solve(lay: _Layout, zpoly, gauge: GaugeSpec) -> np.ndarray:
    """Exact solution when the min side is a single pinned root."""
    x = np.zeros(lay.n_unknowns, complex)
    k = sum(lay.degrees[:lay.pinned])
    x[k] = -complex(gauge.pin)  # G = z - pin
    F, J = _system(x, lay, zpoly, gauge)
    free = [i for i in range(lay.n_unknowns) if i != k]
    rows = [i for i in range(len(F)) if i != len(F) - 2]
    sol = np.linalg.solve(J[np.ix_(rows, free)], -F[rows])
    x[free] += sol
    return x


def solve_saddle_form(profile: ExtremalProfile, angles: Optional[AngleSpec] = None,
                      gauge: GaugeSpec = GaugeSpec(), seed: int = 0, *, sigma: Optional[float] = None,
                      mu: float = -1.0, max_restarts: int = 32, check_admissible: bool = True,
                      force_newton: bool = False) -> OneFormModel:
    """Construct the character form of a saddle profile.

    Restarts draw initial pole positions from the annulus 0.5 <= |z| <= 2
    (away from 1) with ``numpy.random.default_rng(seed)``; the first restart
    that converges to a non-degenerate configuration wins.
    """
    if profile.n_saddles == 0:
        raise InvalidProfileError("profile has no saddle; use football_form")
    if check_admissible:
        admissible = classify(AngleSpec(profile.alpha, profile.beta))
        if not any(p.i1 == profile.i1 and p.i2 == profile.i2 and p.roles() == profile.roles()
                   for p in admissible):
            raise InvalidProfileError(f"profile {profile.to_json()} is not admissible")
    if form_obstructed(profile):
        raise DegenerateSolutionError(profile.notes[-1])
    if profile.is_cusp:
        s = as_integer(profile.alpha if profile.role1 == Role.SADDLE else profile.beta)
        return cusp_saddle_form(s, mu, gauge, profile)

    lam = lambda_of(profile)
    if sigma is None:
        sigma = _default_sigma(lam)
    lay = _layout(profile)
    zpoly = np.ones(1, complex)
    for loc, order in lay.zeros:
        for _ in range(order):
            zpoly = npoly.polymul(zpoly, [-loc, 1])

    best = math.inf
    why = "no restart converged"
    candidates = []
    if _is_linear(lay) and not force_newton:
        candidates.append(("linear", _linear_solve(lay, zpoly, gauge)))
    rng = np.random.default_rng(seed)
    for attempt in range(max_restarts):
        if candidates:
            kind, x = candidates.pop()
            F, _ = _system(x, lay, zpoly, gauge)
        else:
            x, F = _newton(_initial(rng, lay, zpoly, gauge), lay, zpoly, gauge)
        res = _residual_norm(F, x[-1])
        if not np.isfinite(res):
            continue
        best = min(best, res)
        if res > RESIDUAL_TOL:
            continue
        polys, c = _split(x, lay)
        roots = _roots_of(polys)
        bad = _degenerate(roots, lay.zeros)
        if bad:
            why = bad
            continue
        return _assemble(profile, lay, roots, c, sigma, lam, gauge, seed, res)
    if why != "no restart converged" and best <= RESIDUAL_TOL:
        raise DegenerateSolutionError(f"all converged restarts were degenerate: {why}")
    raise NoConvergenceError(f"no convergence after {max_restarts} restarts (best residual {best:.3g})", best)


def _assemble(profile, lay, roots, c, sigma, lam, gauge, seed, res) -> OneFormModel:
    groups = tuple(PoleGroup(n, w, r) for n, w, r in zip(lay.names, lay.weights, roots))
    pts = []
    for p in lay.singular_points:
        if p.loc is None:
            name = "A" if p.role == Role.MAX else "B"
            loc = [g for g in groups if g.name == name][0].roots[0]
            p = SingularPoint(p.name, loc, p.angle, p.role)
        pts.append(p)
    return OneFormModel(
        profile=profile, regime="conical", sigma=sigma, lam=lam, groups=groups,
        zeros=tuple(lay.zeros), kappa=complex(sigma * c), c=complex(lay.weight_scale * c),
        weight_scale=lay.weight_scale, residue_at_infinity=0.0, singular_points=tuple(pts),
        gauge=gauge, seed=seed, residual=res,
    )


def build_form(profile: ExtremalProfile, gauge: GaugeSpec = GaugeSpec(), seed: int = 0,
               sigma: Optional[float] = None, mu: float = -1.0) -> OneFormModel:
    """Any admissible profile: footballs in closed form, saddles through the solver."""
    if profile.n_saddles:
        return solve_saddle_form(profile, gauge=gauge, seed=seed, sigma=sigma, mu=mu)
    if profile.is_cusp:
        if profile.beta is None:
            return cusp_single_form(mu, profile)
        a = profile.beta if profile.role1 == Role.CUSP else profile.alpha
        return cusp_football_form(a, mu, profile)
    lam = lambda_of(profile)
    if sigma is None:
        sigma = _default_sigma(lam)
    return football_form(profile.alpha, sigma, profile.beta, profile)


def cusp_single_form(mu: float, profile: Optional[ExtremalProfile] = None) -> OneFormModel:
    """One cusp (minimum, at infinity) and one smooth maximum at 0."""
    if profile is None:
        profile = classify(AngleSpec(0.0))[0]
    sigma = cusp_sigma(mu)
    return OneFormModel(
        profile=profile, regime="cusp", sigma=sigma, lam=-math.inf,
        groups=(PoleGroup("P", 1.0, (0j,)),), zeros=(), kappa=complex(sigma), c=complex(1.0),
        weight_scale=1.0, residue_at_infinity=-sigma,
        singular_points=(SingularPoint("alpha", None, 0.0, Role.CUSP),),
    )


# ---------------------------------------------------------------- verification


@dataclass
class FormReport:
    residues: List[Tuple[complex, float, float]]  # (location, evaluated, prescribed)
    residue_sum: float
    max_residue_error: float
    zero_orders_ok: bool
    zero_order_details: List[Tuple[complex, int, float]]
    ratio: Optional[float]
    passed: bool

    def to_json(self):
        return {
            "residues": [[[p.real, p.imag], ev, pr] for p, ev, pr in self.residues],
            "residue_sum": self.residue_sum,
            "max_residue_error": self.max_residue_error,
            "zero_orders_ok": self.zero_orders_ok,
            "zero_order_details": [[[z.real, z.imag], o, v] for z, o, v in self.zero_order_details],
            "ratio": self.ratio,
            "passed": self.passed,
        }


def verify_form(model: OneFormModel, tol: float = 1e-8) -> FormReport:
    """Residues from the factored form and zero orders from the numerator.

    Residue at a pole ``p``: ``kappa * Z(p) / prod_{q != p} (p - q)``.  Zero
    orders: the numerator rebuilt from the pole groups must vanish to the
    prescribed order at every zero.
    """
    locs = model.pole_locations
    prescribed = model.residues
    scale = max(abs(model.sigma), 1e-300)
    zp = model.zero_poly()
    ev = []
    for i, p in enumerate(locs):
        others = np.delete(locs, i)
        val = model.kappa * npoly.polyval(p, zp) / np.prod(p - others)
        ev.append(val)
    ev = np.array(ev)
    err = float(np.max(np.abs(ev - prescribed)) / scale) if len(ev) else 0.0
    rsum = float(abs(np.sum(ev) + model.residue_at_infinity))
    res_list = [(complex(p), float(e.real), float(r)) for p, e, r in zip(locs, ev, prescribed)]

    polys = [npoly.polyfromroots(g.roots) for g in model.groups]
    N = _numerator(polys, [g.weight for g in model.groups])
    nscale = float(np.max(np.abs(N))) if len(N) else 1.0
    details = []
    ok = True
    for loc, order in model.zeros:
        d = N.copy()
        worst = 0.0
        for k in range(order):
            worst = max(worst, abs(npoly.polyval(loc, d)) / (math.factorial(k) * nscale))
            d = npoly.polyder(d)
        details.append((complex(loc), order, worst))
        ok = ok and worst < tol

    ratio = None
    q = model.group("Q")
    p = model.group("P")
    if q and p and model.regime == "conical":
        rq = [e for (loc, e, _) in res_list if loc in q.roots]
        rp = [e for (loc, e, _) in res_list if loc in p.roots]
        ratio = float(np.mean(rq) / np.mean(rp))
    passed = err < tol and rsum < 1e-12 * max(1.0, float(np.max(np.abs(prescribed), initial=1.0))) and ok
    return FormReport(res_list, rsum, err, ok, details, ratio, passed)
