"""Curvature function and metric density built from a character 1-form.

Along the surface ``dK = f(K) (omega + conj(omega))`` with the cubic

    f(K) = -(1/3)(K - K1)(K - K2)(K + K1 + K2)     (conical regime)
    f(K) = -(1/3)(K - mu)^2 (K + 2 mu)             (cusp regime)

so ``F(K) = phi + const`` where ``F' = 1/f`` and ``phi = 2 sum r_j ln|z - p_j|``
is the real potential of the form.  The metric is ``rho |dz|^2`` with
``rho = 4 f(K) |omega/dz|^2``.

Everything near the ends of the curvature interval is carried in log-gaps
``ln(K1 - K)`` and ``ln(K - K2)`` so that densities stay accurate when K is
within machine precision of an extremal value.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import integrate

from .oneform import (InvalidProfileError, OneFormModel, bounds_from_lambda, cusp_sigma, lambda_from_bounds,
                      sigma_from_bounds)

LN3 = math.log(3.0)


class CurvatureDomainError(ValueError):
    pass


class PoleEvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class CurvatureParams:
    regime: str  # "conical" | "cusp"
    k1: float = 1.0
    k2: float = 0.0
    mu: float = -1.0
    sigma: float = float("nan")
    lam: float = float("nan")

    def __post_init__(self):
        if self.regime == "conical":
            k1, k2 = self.k1, self.k2
            if not (k1 > 0 and k1 > k2 > -(k1 + k2)):
                raise CurvatureDomainError(f"need K1 > 0 and K1 > K2 > -(K1+K2), got ({k1}, {k2})")
            sig, lam = sigma_from_bounds(k1, k2), lambda_from_bounds(k1, k2)
        elif self.regime == "cusp":
            if not self.mu < 0:
                raise CurvatureDomainError(f"need mu < 0, got {self.mu}")
            sig, lam = cusp_sigma(self.mu), -math.inf
        else:
            raise ValueError(f"unknown regime {self.regime!r}")
        if math.isnan(self.sigma):
            object.__setattr__(self, "sigma", sig)
        elif not math.isclose(self.sigma, sig, rel_tol=1e-12):
            raise CurvatureDomainError(f"stored sigma {self.sigma} disagrees with {sig}")
        if math.isnan(self.lam):
            object.__setattr__(self, "lam", lam)
        elif not (lam == self.lam or math.isclose(self.lam, lam, rel_tol=1e-12)):
            raise CurvatureDomainError(f"stored lambda {self.lam} disagrees with {lam}")

    @classmethod
    def conical(cls, k1: float, k2: float) -> "CurvatureParams":
        return cls("conical", k1=k1, k2=k2)

    @classmethod
    def cusp(cls, mu: float) -> "CurvatureParams":
        return cls("cusp", mu=mu)

    @classmethod
    def from_lambda(cls, lam: float, k1: float = 1.0) -> "CurvatureParams":
        return cls.conical(*bounds_from_lambda(lam, k1))

    @property
    def is_cusp(self) -> bool:
        return self.regime == "cusp"

    @property
    def bounds(self) -> Tuple[float, float]:
        """(lower, upper) ends of the open curvature interval."""
        if self.is_cusp:
            return self.mu, -2 * self.mu
        return self.k2, self.k1

    @property
    def width(self) -> float:
        lo, hi = self.bounds
        return hi - lo

    @property
    def k3(self) -> float:
        return -(self.k1 + self.k2)

    def scaled(self, t: float) -> "CurvatureParams":
        """Homothety ``K -> t K`` (metric ``g -> g/t``)."""
        if t <= 0:
            raise ValueError("homothety factor must be positive")
        if self.is_cusp:
            return CurvatureParams.cusp(t * self.mu)
        return CurvatureParams.conical(t * self.k1, t * self.k2)

    def to_json(self) -> dict:
        return {"regime": self.regime, "k1": self.k1, "k2": self.k2, "mu": self.mu, "sigma": self.sigma,
                "lambda": None if math.isinf(self.lam) else self.lam}

    @classmethod
    def from_json(cls, d: dict) -> "CurvatureParams":
        if d["regime"] == "cusp":
            return cls.cusp(d["mu"])
        return cls.conical(d["k1"], d["k2"])


# ---------------------------------------------------------------- F and its inverse


def _F_from_gaps(ln_eps, ln_delta, delta, p: CurvatureParams):
    """F in terms of ``eps = upper - K`` and ``delta = K - lower``."""
    if p.is_cusp:
        mu = p.mu
        return -3.0 * (-ln_delta / (9 * mu * mu) - 1.0 / (3 * mu * delta) + ln_eps / (9 * mu * mu))
    k1, k2 = p.k1, p.k2
    a = 1.0 / ((k1 - k2) * (2 * k1 + k2))
    b = 1.0 / ((k2 - k1) * (k1 + 2 * k2))
    c = 1.0 / ((2 * k1 + k2) * (k1 + 2 * k2))
    return -3.0 * (a * ln_eps + b * ln_delta + c * np.log((k2 - p.k3) + delta))


def F_eval(K, params: CurvatureParams):
    """Antiderivative of ``1/f`` with zero integration constant."""
    K = np.asarray(K, dtype=float)
    lo, hi = params.bounds
    if np.any(~((K > lo) & (K < hi))):
        raise CurvatureDomainError(f"K must lie in the open interval ({lo}, {hi})")
    delta, eps = K - lo, hi - K
    out = _F_from_gaps(np.log(eps), np.log(delta), delta, params)
    return float(out) if out.ndim == 0 else out


def log_f_from_gaps(ln_eps, ln_delta, delta, params: CurvatureParams):
    """``ln f(K)``."""
    if params.is_cusp:
        return 2 * ln_delta + ln_eps - LN3
    return ln_eps + ln_delta + np.log((params.k2 - params.k3) + delta) - LN3


def _softplus(x):
    return np.logaddexp(0.0, x)


def _state(x, p: CurvatureParams):
    """K and log-gaps for the logit variable ``x``."""
    lnw = math.log(p.width)
    ln_delta = lnw - _softplus(-x)
    ln_eps = lnw - _softplus(x)
    delta = np.exp(ln_delta)
    return ln_eps, ln_delta, delta


def _F_of_x(x, p):
    ln_eps, ln_delta, delta = _state(x, p)
    return _F_from_gaps(ln_eps, ln_delta, delta, p)


def _dF_dx(x, p):
    _, _, delta = _state(x, p)
    if p.is_cusp:
        return 3.0 / (p.width * delta)
    return 3.0 / (p.width * ((p.k2 - p.k3) + delta))


def F_invert_gaps(u, params: CurvatureParams):
    """Solve ``F(K) = u``; returns ``(K, ln_eps, ln_delta, delta)``.

    Works in the logit variable ``K = lower + width / (1 + exp(-x))``: F is
    strictly increasing in x, a doubling bracket is followed by bisection and a
    Newton polish.
    """
    u = np.asarray(u, dtype=float)
    shape = u.shape
    # non-finite input (evaluation at a pole) propagates as nan without bracketing
    u = np.where(np.isfinite(u), u, np.nan).ravel()
    lo = np.full(u.shape, -1.0)
    hi = np.full(u.shape, 1.0)
    for _ in range(2000):
        bad = _F_of_x(lo, params) > u
        if not bad.any():
            break
        lo[bad] *= 2
    for _ in range(2000):
        bad = _F_of_x(hi, params) < u
        if not bad.any():
            break
        hi[bad] *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        up = _F_of_x(mid, params) < u
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
        if np.all(hi - lo <= 1e-13 * np.maximum(1.0, np.abs(mid))):
            break
    x = 0.5 * (lo + hi)
    for _ in range(3):
        x = x - (_F_of_x(x, params) - u) / _dF_dx(x, params)
    ln_eps, ln_delta, delta = _state(x, params)
    lower, upper = params.bounds
    K = np.clip(np.where(ln_delta < ln_eps, lower + delta, upper - np.exp(ln_eps)), lower, upper)
    return tuple(a.reshape(shape) for a in (K, ln_eps, ln_delta, delta))


def F_invert(u, params: CurvatureParams):
    K = F_invert_gaps(u, params)[0]
    return float(K) if K.ndim == 0 else K


def _relative_steps(K, d, p: CurvatureParams):
    """``d / (K - r)`` for the roots ``r`` of f, signed so that log1p of each is a log-ratio."""
    lo, hi = p.bounds
    if p.is_cusp:
        return d / (K - lo), -d / (hi - K), None
    return d / (K - lo), -d / (hi - K), d / (K - p.k3)


def F_increment(K, d, params: CurvatureParams):
    """``F(K + d) - F(K)`` without cancellation for small ``d``."""
    a, b, c = _relative_steps(K, d, params)
    if params.is_cusp:
        mu = params.mu
        return -3.0 * ((-np.log1p(a) + np.log1p(b)) / (9 * mu * mu) + d / (3 * mu * (K - mu) * (K - mu + d)))
    k1, k2 = params.k1, params.k2
    ca = 1.0 / ((k1 - k2) * (2 * k1 + k2))
    cb = 1.0 / ((k2 - k1) * (k1 + 2 * k2))
    cc = 1.0 / ((2 * k1 + k2) * (k1 + 2 * k2))
    return -3.0 * (ca * np.log1p(b) + cb * np.log1p(a) + cc * np.log1p(c))


def log_f_increment(K, d, params: CurvatureParams):
    """``ln f(K + d) - ln f(K)`` without cancellation for small ``d``."""
    a, b, c = _relative_steps(K, d, params)
    if params.is_cusp:
        return 2 * np.log1p(a) + np.log1p(b)
    return np.log1p(a) + np.log1p(b) + np.log1p(c)


def K_increment(K, s, params: CurvatureParams, d0=None, iters: int = 4):
    """The ``d`` with ``F(K + d) - F(K) = s`` by Newton from ``d0`` (default ``f(K) s``)."""
    d = f_of(K, params) * s if d0 is None else np.array(d0, dtype=float)
    for _ in range(iters):
        d = d - (F_increment(K, d, params) - s) * f_of(K + d, params)
    return d


def f_of(K, params: CurvatureParams):
    """The cubic ``f(K)`` (positive inside the bounds)."""
    if params.is_cusp:
        mu = params.mu
        return (K - mu) ** 2 * (-2 * mu - K) / 3.0
    return -(K - params.k1) * (K - params.k2) * (K - params.k3) / 3.0


# ---------------------------------------------------------------- potential


def _check_poles(z, locs, chart):
    if len(locs) and np.any(np.abs(z[..., None] - locs) == 0):
        raise PoleEvaluationError(f"evaluation at a pole (chart {chart})")


def potential(z, form: OneFormModel, chart: int = 1):
    """``phi = 2 sum_j r_j ln|z - p_j|``; chart 2 uses ``u = 1/z``."""
    z = np.asarray(z, dtype=complex)
    locs, res = form.pole_locations, form.residues
    if chart == 1:
        _check_poles(z, locs, 1)
        out = np.zeros(z.shape)
        for p, r in zip(locs, res):
            out = out + 2 * r * np.log(np.abs(z - p))
    elif chart == 2:
        r_inf = float(form.residue_at_infinity)
        if r_inf != 0 and np.any(z == 0):
            raise PoleEvaluationError("evaluation at a pole (chart 2)")
        out = np.zeros(z.shape)
        if r_inf != 0:
            out = out + 2 * r_inf * np.log(np.abs(z))
        for p, r in zip(locs, res):
            if p == 0:
                continue
            val = np.abs(1 - p * z)
            if np.any(val == 0):
                raise PoleEvaluationError("evaluation at a pole (chart 2)")
            out = out + 2 * r * np.log(val)
    else:
        raise ValueError("chart must be 1 or 2")
    return float(out) if out.ndim == 0 else out


def form_values(z, form: OneFormModel, chart: int = 1):
    """``omega/dz`` (chart 1) or ``omega/du`` (chart 2)."""
    return form.w(z) if chart == 1 else form.w_inf(z)


# ---------------------------------------------------------------- metric model


@dataclass(frozen=True)
class MetricModel:
    params: CurvatureParams
    form: OneFormModel
    base_point: complex
    base_value: float

    def __post_init__(self):
        lo, hi = self.params.bounds
        if not lo < self.base_value < hi:
            raise CurvatureDomainError("base value must lie strictly inside the curvature interval")
        if not math.isclose(self.form.sigma, self.params.sigma, rel_tol=1e-9):
            raise InvalidProfileError(f"form sigma {self.form.sigma} does not match params sigma {self.params.sigma}")
        z0 = complex(self.base_point)
        if min_distance(z0, self.form) < 1e-8:
            raise CurvatureDomainError("base point is a pole or zero of the form")
        object.__setattr__(self, "_shift", F_eval(self.base_value, self.params) - potential(z0, self.form))

    def scaled(self, t: float) -> "MetricModel":
        """Homothety: K -> tK, residues -> residues/t^2, areas -> areas/t."""
        p = self.params.scaled(t)
        return MetricModel(p, self.form.rescaled(p.sigma), self.base_point, t * self.base_value)

    def to_json(self) -> dict:
        return {"params": self.params.to_json(), "form": self.form.to_json(),
                "base_point": [self.base_point.real, self.base_point.imag], "base_value": self.base_value}

    @classmethod
    def from_json(cls, d: dict) -> "MetricModel":
        return cls(CurvatureParams.from_json(d["params"]), OneFormModel.from_json(d["form"]),
                   complex(*d["base_point"]), float(d["base_value"]))


def min_distance(z: complex, form: OneFormModel) -> float:
    pts = list(form.pole_locations) + [loc for loc, _ in form.zeros]
    return min((abs(z - p) for p in pts), default=math.inf)


def default_base_point(form: OneFormModel) -> complex:
    """A point of moderate modulus as far as possible from every pole and zero."""
    cands = [r * complex(math.cos(t), math.sin(t))
             for r in (0.6, 0.8, 1.0, 1.25) for t in np.linspace(0.1, 2 * math.pi + 0.1, 24, endpoint=False)]
    return max(cands, key=lambda z: min_distance(z, form))


def params_for_form(form: OneFormModel, k1: float = 1.0) -> CurvatureParams:
    """Curvature bounds consistent with the residues of ``form``.

    Conical: K2 from the residue ratio at the given K1.  Cusp: mu from sigma.
    """
    if form.regime == "cusp":
        return CurvatureParams.cusp(-math.sqrt(-1.0 / (3 * form.sigma)))
    return CurvatureParams.from_lambda(form.lam, k1)


def build_metric(form: OneFormModel, params: Optional[CurvatureParams] = None,
                 base_point: Optional[complex] = None, base_value: Optional[float] = None) -> MetricModel:
    """Attach curvature bounds and an initial condition to a form.

    When ``params`` is given the form is rescaled to its sigma (the pole and
    zero configuration is unchanged).
    """
    if params is None:
        params = params_for_form(form)
    if not math.isclose(form.sigma, params.sigma, rel_tol=1e-12):
        if form.regime == "conical" and not math.isclose(form.lam, params.lam, rel_tol=1e-9):
            raise InvalidProfileError(f"form lambda {form.lam} incompatible with params lambda {params.lam}")
        form = form.rescaled(params.sigma)
    if base_point is None:
        base_point = default_base_point(form)
    if base_value is None:
        lo, hi = params.bounds
        base_value = 0.5 * (lo + hi)
    return MetricModel(params, form, complex(base_point), float(base_value))


# ---------------------------------------------------------------- evaluation


def _shift(model: MetricModel) -> float:
    return model._shift  # type: ignore[attr-defined]


def curvature_state(z, model: MetricModel, chart: int = 1):
    """``(K, ln_eps, ln_delta, delta)`` at ``z``."""
    u = potential(z, model.form, chart) + _shift(model)
    return F_invert_gaps(u, model.params)


def curvature_at(z, model: MetricModel, chart: int = 1):
    """``K(z) = F^{-1}(phi(z) - phi(z0) + F(K0))``."""
    K = curvature_state(z, model, chart)[0]
    return float(K) if K.ndim == 0 else K


def log_density_at(z, model: MetricModel, chart: int = 1):
    z = np.asarray(z, dtype=complex)
    w = form_values(z, model.form, chart)
    if np.any(~np.isfinite(w)) or np.any(w == 0):
        raise PoleEvaluationError("density is not defined at poles and zeros of the form")
    _, ln_eps, ln_delta, delta = curvature_state(z, model, chart)
    out = math.log(4.0) + log_f_from_gaps(ln_eps, ln_delta, delta, model.params) + 2 * np.log(np.abs(w))
    return float(out) if out.ndim == 0 else out


def density_at(z, model: MetricModel, chart: int = 1):
    """Metric density ``rho`` with ``g = rho |dz|^2`` in the given chart."""
    return np.exp(log_density_at(z, model, chart))


def sample_grid(model: MetricModel, n: int = 128, extent: float = 2.0, chart: int = 1):
    """K and rho on an ``n x n`` grid over ``[-extent, extent]^2``; NaN at singular points."""
    xs = np.linspace(-extent, extent, n)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    Z = X + 1j * Y
    K = np.full(Z.shape, np.nan)
    rho = np.full(Z.shape, np.nan)
    pts = list(model.form.pole_locations) + [loc for loc, _ in model.form.zeros]
    if chart == 2:
        pts = [1 / p for p in pts if p != 0] + ([0j] if model.form.infinity_is_pole else [])
    ok = np.ones(Z.shape, bool)
    for p in pts:
        ok &= np.abs(Z - p) > 1e-12
    K[ok] = curvature_at(Z[ok], model, chart)
    with np.errstate(divide="ignore"):
        rho[ok] = density_at(Z[ok], model, chart)
    return X, Y, K, rho


# ---------------------------------------------------------------- footballs


@dataclass(frozen=True)
class FootballSolution:
    params: CurvatureParams
    scale: float  # homothety factor t applied to the K1 = 1 solution
    area: float
    near_csc: bool


def football_k2(alpha: float) -> float:
    """K2 at K1 = 1 for a football whose maximum has angle ``alpha > 1``."""
    return (2 - alpha) / (2 * alpha - 1)


def football_area_numeric(params: CurvatureParams, a_max: float) -> float:
    """Total area of the rotationally symmetric football by radial quadrature.

    With the minimum at 0 the density is ``4 f(K(r)) r0^2 / r^2`` and the area
    element in ``s = ln r`` is ``2 pi rho r^2 ds``.
    """
    r0 = -params.sigma * a_max
    k_mid = 0.5 * sum(params.bounds)
    shift = F_eval(k_mid, params)

    def integrand(s):
        _, ln_eps, ln_delta, delta = F_invert_gaps(2 * r0 * s + shift, params)
        return 2 * math.pi * 4 * r0 * r0 * math.exp(float(log_f_from_gaps(ln_eps, ln_delta, delta, params)))

    total = 0.0
    for a, b in ((-np.inf, 0.0), (0.0, np.inf)):
        val, _ = integrate.quad(integrand, a, b, epsabs=0, epsrel=1e-11, limit=400)
        total += val
    return total


def solve_football_params(alpha: float, area: float) -> FootballSolution:
    """Curvature bounds of the football with maximum angle ``alpha`` and the given area.

    K1 = 1 fixes K2; the homothety ``K -> tK`` (areas scale by 1/t) then
    matches the target area.
    """
    if alpha <= 1:
        raise CurvatureDomainError("alpha must exceed 1 (use the minimum-angle formula below 1)")
    if area <= 0:
        raise CurvatureDomainError("area must be positive")
    near = alpha - 1 < 1e-6
    if near:
        warnings.warn("alpha close to 1: degenerate constant-curvature limit", RuntimeWarning)
    base = CurvatureParams.conical(1.0, football_k2(alpha))
    a1 = football_area_numeric(base, alpha)
    t = a1 / area
    return FootballSolution(base.scaled(t), t, a1 / t, near)


# ---------------------------------------------------------------- log-term representation


@dataclass(frozen=True)
class ChartTerms:
    """``phi`` and ``ln|omega/dx|`` in one chart as constants plus log-distance sums.

    ``phi = phi_const + sum_k phi_coef[k] ln|x - points[k]|`` and likewise for
    ``ln|w|``; ``angles[k]`` is the cone angle (units of 2 pi) at ``points[k]``.
    """

    chart: int
    points: np.ndarray
    phi_coef: np.ndarray
    w_coef: np.ndarray
    phi_const: float
    w_const: float
    angles: np.ndarray
    kinds: Tuple[str, ...]

    def index_of(self, x: complex, tol: float = 1e-12) -> Optional[int]:
        if not len(self.points):
            return None
        d = np.abs(self.points - x)
        k = int(np.argmin(d))
        return k if d[k] <= tol * max(1.0, abs(x)) else None


def chart_terms(form: OneFormModel, chart: int = 1) -> ChartTerms:
    pts, pc, wc, ang, kinds = [], [], [], [], []
    phi_const, w_const = 0.0, math.log(abs(form.kappa))
    poles = list(zip(form.pole_locations, form.residues))
    if chart == 1:
        for p, r in poles:
            pts.append(p), pc.append(2 * r), wc.append(-1.0)
            ang.append(form.expected_angle_at_pole(r)), kinds.append("pole")
        for z, o in form.zeros:
            pts.append(z), pc.append(0.0), wc.append(float(o)), ang.append(o + 1.0), kinds.append("zero")
    elif chart == 2:
        n = len(poles)
        m = sum(o for _, o in form.zeros)
        # structural value: the float sum of finite residues is only zero to roundoff
        r_inf = float(form.residue_at_infinity)
        for p, r in poles:
            if p == 0:
                continue
            pts.append(1 / p), pc.append(2 * r), wc.append(-1.0)
            ang.append(form.expected_angle_at_pole(r)), kinds.append("pole")
            phi_const += 2 * r * math.log(abs(p))
            w_const -= math.log(abs(p))
        for z, o in form.zeros:
            if z == 0:
                continue
            pts.append(1 / z), pc.append(0.0), wc.append(float(o)), ang.append(o + 1.0), kinds.append("zero")
            w_const += o * math.log(abs(z))
        e = n - m - 2
        if r_inf != 0 or e != 0:
            pts.append(0j), pc.append(2 * r_inf), wc.append(float(e))
            if r_inf != 0:
                ang.append(form.expected_angle_at_pole(r_inf)), kinds.append("pole")
            else:
                ang.append(e + 1.0), kinds.append("zero")
    else:
        raise ValueError("chart must be 1 or 2")
    return ChartTerms(chart, np.array(pts, complex), np.array(pc), np.array(wc), phi_const, w_const,
                      np.array(ang), tuple(kinds))


def _log_distances(terms: ChartTerms, x, center: Optional[int], ln_r):
    with np.errstate(divide="ignore"):
        L = np.log(np.abs(x[..., None] - terms.points))
    if center is not None:
        L[..., center] = ln_r
    return L


def log_density_terms(model: MetricModel, terms: ChartTerms, x, center: Optional[int] = None, ln_r=None):
    """``(K, ln rho)`` from log-distance sums.

    With ``center`` given, the distance to ``terms.points[center]`` is taken as
    ``exp(ln_r)`` exactly, so radii far below double resolution are usable.
    """
    x = np.asarray(x, dtype=complex)
    L = _log_distances(terms, x, center, ln_r)
    phi = terms.phi_const + L @ terms.phi_coef
    lnw = terms.w_const + L @ terms.w_coef
    K, ln_eps, ln_delta, delta = F_invert_gaps(phi + _shift(model), model.params)
    return K, math.log(4.0) + log_f_from_gaps(ln_eps, ln_delta, delta, model.params) + 2 * lnw


def harmonic_part(terms: ChartTerms, x):
    """``sum_k 2 (angle_k - 1) ln|x - point_k|``: the log singularities of ``ln rho``."""
    x = np.asarray(x, dtype=complex)
    return np.log(np.abs(x[..., None] - terms.points)) @ (2 * (terms.angles - 1))


def f_prime(K, params: CurvatureParams):
    """Derivative of the cubic ``f`` with respect to K."""
    if params.is_cusp:
        mu = params.mu
        return -(2 * (K - mu) * (K + 2 * mu) + (K - mu) ** 2) / 3.0
    k1, k2, k3 = params.k1, params.k2, params.k3
    return -((K - k2) * (K - k3) + (K - k1) * (K - k3) + (K - k1) * (K - k2)) / 3.0


def field_terms(model: MetricModel, terms: ChartTerms, x):
    """``(K, phi, ln f(K), ln|w|)`` on an array of chart points."""
    x = np.asarray(x, dtype=complex)
    L = _log_distances(terms, x, None, None)
    phi = terms.phi_const + L @ terms.phi_coef
    lnw = terms.w_const + L @ terms.w_coef
    K, ln_eps, ln_delta, delta = F_invert_gaps(phi + _shift(model), model.params)
    return K, phi, log_f_from_gaps(ln_eps, ln_delta, delta, model.params), lnw
