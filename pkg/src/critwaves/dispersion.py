"""Dispersion relation for laminar flows with linear vorticity.

A wavenumber ``k`` carries a kernel mode of the linearized problem at
``(mu, alpha, lambda)`` exactly when

    theta_k cot*(theta_k) = 1 / (mu^2 theta_0^2 sin^2 lambda) + theta_0 cot lambda,

with ``theta_k = |alpha + k^2|^(1/2)``, ``cot*`` the circular or hyperbolic
cotangent according to the sign of ``alpha + k^2``, and the left side read as 1
when ``theta_k = 0``.  Gravity and depth are normalized to unity throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

OSCILLATORY = "oscillatory"
DEGENERATE = "degenerate"
HYPERBOLIC = "hyperbolic"

SERIES_THRESHOLD = 1e-4
POLE_GUARD = 1e-8
SAMPLES_PER_PI = 512
ROOT_XTOL = 1e-12
DEFAULT_TOL = 1e-8


class DispersionError(ValueError):
    """Base class for failures of the dispersion toolkit."""


class PoleError(DispersionError):
    """``theta_k`` sits on (or within the guard of) a pole of ``cot``."""


class RangeError(DispersionError):
    """Requested right-hand-side value is not attainable for any ``mu``."""


class BracketError(DispersionError):
    """No admissible sign change was found while sampling a bracket."""


class PreconditionError(DispersionError):
    pass


@dataclass(frozen=True)
class FlowParams:
    """Parameters ``(mu, alpha, lambda)`` of a laminar flow and the base wavenumber."""

    mu: float
    alpha: float
    lam: float
    kappa: float = 1.0

    def __post_init__(self):
        for name in ("mu", "alpha", "lam", "kappa"):
            if not math.isfinite(getattr(self, name)):
                raise PreconditionError(f"{name} must be finite")
        if self.mu == 0.0:
            raise PreconditionError("mu must be nonzero")
        if not self.alpha < 0.0:
            raise PreconditionError("alpha must be strictly negative")
        if math.sin(self.lam) == 0.0:
            raise PreconditionError("sin(lambda) must be nonzero")
        if not self.kappa > 0.0:
            raise PreconditionError("kappa must be positive")

    @property
    def theta0(self) -> float:
        return math.sqrt(-self.alpha)

    def with_(self, **changes) -> "FlowParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {"mu": self.mu, "alpha": self.alpha, "lambda": self.lam, "kappa": self.kappa}

    @classmethod
    def from_dict(cls, d: dict) -> "FlowParams":
        lam = d["lambda"] if "lambda" in d else d["lam"]
        return cls(float(d["mu"]), float(d["alpha"]), float(lam), float(d.get("kappa", 1.0)))


@dataclass(frozen=True)
class ThetaValue:
    magnitude: float
    regime: str


@dataclass(frozen=True)
class KernelReport:
    wavenumbers: tuple
    residuals: tuple
    tol: float
    warnings: tuple = field(default=())

    @property
    def dimension(self) -> int:
        return len(self.wavenumbers)

    def as_dict(self) -> dict:
        return {
            "wavenumbers": list(self.wavenumbers),
            "dimension": self.dimension,
            "residuals": list(self.residuals),
            "tol": self.tol,
            "warnings": list(self.warnings),
        }


def theta(alpha: float, k: float) -> ThetaValue:
    u = alpha + k * k
    if u == 0.0:
        return ThetaValue(0.0, DEGENERATE)
    return ThetaValue(math.sqrt(abs(u)), HYPERBOLIC if u > 0.0 else OSCILLATORY)


def _xcot_series(u: float) -> float:
    # x cot*(x) as a function of u = +-x^2; same polynomial on both sides of u = 0
    return 1.0 + u / 3.0 - u * u / 45.0 + 2.0 * u ** 3 / 945.0


def lhs_dispersion(alpha: float, k: float, guard: float = POLE_GUARD) -> float:
    """``theta_k cot*(theta_k)``, continuous through the degenerate value 1.

    Raises
    ------
    PoleError
        If the oscillatory ``theta_k`` lies within ``guard`` of a positive
        multiple of pi.
    """
    u = alpha + k * k
    if abs(u) < SERIES_THRESHOLD:
        return _xcot_series(u)
    th = math.sqrt(abs(u))
    if u > 0.0:
        return th / math.tanh(th)
    n = round(th / math.pi)
    if n >= 1 and abs(th - n * math.pi) < guard:
        raise PoleError(f"theta_k={th!r} is within {guard:g} of {n}*pi (k={k!r}, alpha={alpha!r})")
    return th / math.tan(th)


def rhs_dispersion(params: FlowParams) -> float:
    th0 = params.theta0
    s = math.sin(params.lam)
    return 1.0 / (params.mu ** 2 * th0 ** 2 * s * s) + th0 * math.cos(params.lam) / s


def rhs_floor(alpha: float, lam: float) -> float:
    """Infimum of the right-hand side over ``mu != 0`` (never attained)."""
    return math.sqrt(-alpha) * math.cos(lam) / math.sin(lam)


def solve_mu(a: float, alpha: float, lam: float) -> float:
    """Positive ``mu`` with ``rhs_dispersion(mu, alpha, lam) == a``."""
    if not alpha < 0.0:
        raise PreconditionError("alpha must be strictly negative")
    if math.sin(lam) == 0.0:
        raise PreconditionError("sin(lambda) must be nonzero")
    floor = rhs_floor(alpha, lam)
    if not a > floor:
        raise RangeError(f"target a={a!r} is not above theta0*cot(lambda)={floor!r}")
    th0 = math.sqrt(-alpha)
    return 1.0 / (th0 * abs(math.sin(lam)) * math.sqrt(a - floor))


def h(t: float, k: float, guard: float = POLE_GUARD) -> float:
    """Left side of the dispersion relation in the variable ``t = |alpha|``."""
    if not (t > 0.0 and k > 0.0):
        raise PreconditionError("h(t; k) needs t > 0 and k > 0")
    return lhs_dispersion(-t, k, guard)


def wavenumbers(kappa: float, k_max: float) -> np.ndarray:
    m = int(math.floor(k_max / kappa + 1e-9))
    return kappa * np.arange(1, m + 1, dtype=float)


def exhaustive_k_max(alpha: float, a: float, kappa: float = 1.0) -> float:
    """Wavenumber bound beyond which ``theta_k cot*(theta_k) > a`` for every ``k``.

    On the hyperbolic side ``x coth x > max(x, 1)`` and the left side is increasing
    in ``k``, so no mode above ``sqrt(|alpha| + max(a, 0)^2)`` can match ``a``.
    """
    return math.sqrt(-alpha + max(a, 0.0) ** 2) + kappa


def kernel_report(params: FlowParams, k_max: float, tol: float = DEFAULT_TOL) -> KernelReport:
    if k_max < params.kappa:
        raise PreconditionError("k_max must be at least kappa")
    rhs = rhs_dispersion(params)
    hits, res, warns = [], [], []
    for k in wavenumbers(params.kappa, k_max):
        try:
            r = abs(lhs_dispersion(params.alpha, k) - rhs)
        except PoleError as exc:
            warns.append(f"k={k:g} skipped: {exc}")
            continue
        if r <= tol:
            hits.append(float(k))
            res.append(r)
    return KernelReport(tuple(hits), tuple(res), tol, tuple(warns))


def _pole_index(t: float, k: float) -> int:
    # number of cot poles of h(.; k) at or below t
    u = t - k * k
    return int(math.floor(math.sqrt(u) / math.pi)) if u > 0.0 else 0


def _safe_h(t: float, k: float) -> float:
    try:
        return h(t, k)
    except PoleError:
        return math.nan


def _first_root(g, ts: Sequence[float], ks: Sequence[float]):
    """Smallest bracketed root of ``g`` on the sample sequence ``ts``.

    Sign changes across a pole of any ``h(.; k)`` for ``k`` in ``ks`` are skipped.
    """
    vals = [g(t) for t in ts]
    for i in range(len(ts) - 1):
        t0, t1, v0, v1 = ts[i], ts[i + 1], vals[i], vals[i + 1]
        if not (math.isfinite(v0) and math.isfinite(v1)):
            continue
        if any(_pole_index(t0, k) != _pole_index(t1, k) for k in ks):
            continue
        if v0 == 0.0:
            return t0
        if v0 * v1 < 0.0:
            return brentq(g, t0, t1, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)
    return None


def two_mode_bracket(k1: float, k2: float, lam: float, strategy: str):
    """Bracket ``(t_lo, t_hi)`` for ``t = |alpha|`` and the reference wavenumber.

    The reference wavenumber ``k_ref`` is the one whose cot poles bound the
    bracket; sampling is uniform in ``sqrt(t - k_ref^2)``.
    """
    if not (0.0 < k1 < k2):
        raise PreconditionError("need 0 < k1 < k2")
    pi2 = math.pi ** 2
    if strategy == "inside":
        if k2 * k2 < k1 * k1 + 2.25 * pi2:
            raise PreconditionError(
                f"strategy 'inside' needs k2^2 >= k1^2 + (9/4)pi^2; got k1={k1:g}, k2={k2:g}")
        # allow roundoff so that lambda = pi/2 itself is accepted
        if math.sin(lam) == 0.0 or math.cos(lam) / math.sin(lam) > 1e-12:
            raise PreconditionError("strategy 'inside' needs cot(lambda) <= 0")
        return k1 * k1 + pi2, k1 * k1 + 2.25 * pi2, k1, 1.0, 1.5
    if strategy == "below":
        d = k2 * k2 - k1 * k1
        if not d > 3.0 * pi2:
            raise PreconditionError(
                f"strategy 'below' needs k2^2 > k1^2 + 3 pi^2; got k1={k1:g}, k2={k2:g}")
        m = d / pi2
        n_odd = round((m - 1.0) / 2.0)
        if abs(m - (2 * n_odd + 1)) < 1e-12:
            raise PreconditionError("strategy 'below' needs k2^2 - k1^2 not an odd multiple of pi^2")
        n = int(math.floor((m - 1.0) / 2.0))
        return k2 * k2 + n * n * pi2, k2 * k2 + (n + 1) ** 2 * pi2, k2, float(n), float(n + 1)
    raise PreconditionError(f"unknown strategy {strategy!r}; expected 'inside' or 'below'")


def find_alpha_two_modes(k1: float, k2: float, lam: float = math.pi / 2, strategy: str = "below",
                         samples_per_pi: int = SAMPLES_PER_PI):
    """Vorticity ``alpha`` at which ``k1`` and ``k2`` share a dispersion value.

    ``strategy='inside'`` searches ``pi^2 < |alpha| - k1^2 < (3 pi / 2)^2`` where
    ``k2`` is hyperbolic; ``strategy='below'`` searches ``|alpha| > k2^2`` between
    the consecutive cot poles of ``h(.; k2)`` selected by ``k2^2 - k1^2``.

    Returns
    -------
    (alpha, a) : tuple of float
        ``alpha = -t0`` and the common value ``a = h(t0; k1)``.
    """
    t_lo, t_hi, k_ref, x_lo, x_hi = two_mode_bracket(k1, k2, lam, strategy)
    n = max(2, int(math.ceil(samples_per_pi * (x_hi - x_lo))))
    xs = math.pi * (x_lo + (np.arange(n) + 0.5) * (x_hi - x_lo) / n)
    ts = [k_ref * k_ref + x * x for x in xs]

    def g(t):
        return _safe_h(t, k1) - _safe_h(t, k2)

    t0 = _first_root(g, ts, (k1, k2))
    if t0 is None:
        raise BracketError(
            f"no sign change of h(t;{k1:g}) - h(t;{k2:g}) on ({t_lo!r}, {t_hi!r}) with {n} samples")
    return -t0, h(t0, k1)


def alpha_scan_multiplicity(lam: float, k_max: float, t_range, n_samples: int,
                            kappa: float = 1.0, tol: float = DEFAULT_TOL):
    """Scan ``t = |alpha|`` for coincidences ``h(t; k_i) = h(t; k_j)``.

    Each sign change of a pairwise difference between consecutive samples (not
    straddling a pole) is refined to a root ``t0``; when the common value is
    reachable at ``lam`` the flow is built with :func:`solve_mu` and reported
    with its :class:`KernelReport`.  Tangential coincidences without a sign
    change are not detected.
    """
    t_lo, t_hi = map(float, t_range)
    if not (0.0 < t_lo < t_hi):
        raise PreconditionError("t_range must be an interval inside (0, inf)")
    ks = wavenumbers(kappa, k_max)
    ts = np.linspace(t_lo, t_hi, int(n_samples))
    roots = []
    for i in range(len(ks)):
        for j in range(i + 1, len(ks)):
            ki, kj = ks[i], ks[j]

            def g(t, ki=ki, kj=kj):
                return _safe_h(t, ki) - _safe_h(t, kj)

            vals = [g(t) for t in ts]
            for m in range(len(ts) - 1):
                v0, v1 = vals[m], vals[m + 1]
                if not (math.isfinite(v0) and math.isfinite(v1)) or v0 * v1 > 0.0:
                    continue
                if _pole_index(ts[m], ki) != _pole_index(ts[m + 1], ki):
                    continue
                if _pole_index(ts[m], kj) != _pole_index(ts[m + 1], kj):
                    continue
                if v0 == 0.0:
                    t0 = ts[m]
                elif v1 == 0.0:
                    continue
                else:
                    t0 = brentq(g, ts[m], ts[m + 1], xtol=ROOT_XTOL)
                roots.append((t0, ki))
    roots.sort()
    out, last_t = [], None
    for t0, ki in roots:
        if last_t is not None and abs(t0 - last_t) < 1e-9:
            continue
        a = h(t0, ki)
        if not a > rhs_floor(-t0, lam):
            continue
        params = FlowParams(solve_mu(a, -t0, lam), -t0, lam, kappa)
        out.append((-t0, kernel_report(params, k_max, tol)))
        last_t = t0
    return out
