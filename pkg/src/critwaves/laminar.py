"""Laminar background flows, kernel modes, the lift to the flattened unknowns and
the linearized operator.

The laminar flow is ``psi0(y) = mu cos(theta0 (y - 1) + lambda)`` with a flat
surface.  In flattened coordinates the same formula holds with ``y`` replaced
by ``s``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dispersion import (HYPERBOLIC, OSCILLATORY, SERIES_THRESHOLD, FlowParams, RangeError,
                         ThetaValue, theta)
from .grid import Grid

SLIP_FLOOR = 1e-14
BOUNDARY_TOL = 1e-10


class BoundaryDegenerateWarning(UserWarning):
    """A zero of the laminar velocity sits on the bed or the surface."""


@dataclass(frozen=True)
class TrivialFlow:
    params: FlowParams
    Q: float
    m0: float
    m1: float

    @classmethod
    def from_params(cls, params: FlowParams) -> "TrivialFlow":
        th0 = params.theta0
        mu, lam = params.mu, params.lam
        return cls(params, 0.5 * mu * mu * th0 * th0 * math.sin(lam) ** 2,
                   mu * math.cos(lam - th0), mu * math.cos(lam))

    @property
    def slip(self) -> float:
        """Surface value ``(psi0)_y(1) = -mu theta0 sin(lambda)``."""
        p = self.params
        return -p.mu * p.theta0 * math.sin(p.lam)


def bernoulli_constant(params: FlowParams) -> float:
    return 0.5 * params.mu ** 2 * params.theta0 ** 2 * math.sin(params.lam) ** 2


def psi0_eval(flow, y, order: int = 0):
    """Laminar stream function or one of its first two ``y``-derivatives."""
    p = flow.params if isinstance(flow, TrivialFlow) else flow
    th0 = p.theta0
    arg = th0 * (np.asarray(y, dtype=float) - 1.0) + p.lam
    if order == 0:
        return p.mu * np.cos(arg)
    if order == 1:
        return -p.mu * th0 * np.sin(arg)
    if order == 2:
        return p.alpha * p.mu * np.cos(arg)
    raise ValueError("order must be 0, 1 or 2")


def psi0_param_derivatives(params: FlowParams, s, name: str):
    """Derivatives of ``(psi0, psi0_s, psi0_ss)`` with respect to ``mu``, ``alpha`` or ``lam``."""
    th0, mu, alpha = params.theta0, params.mu, params.alpha
    s = np.asarray(s, dtype=float)
    arg = th0 * (s - 1.0) + params.lam
    c, sn = np.cos(arg), np.sin(arg)
    if name == "mu":
        d0, d1 = c, -th0 * sn
        return d0, d1, alpha * d0
    if name == "alpha":
        dth = -0.5 / th0
        d0 = -mu * sn * (s - 1.0) * dth
        d1 = (-mu * sn - mu * th0 * c * (s - 1.0)) * dth
        return d0, d1, mu * c + alpha * d0
    if name in ("lam", "lambda"):
        d0, d1 = -mu * sn, -mu * th0 * c
        return d0, d1, alpha * d0
    raise ValueError(f"unknown parameter {name!r}")


def bernoulli_param_derivative(params: FlowParams, name: str) -> float:
    th0, mu, lam = params.theta0, params.mu, params.lam
    if name == "mu":
        return mu * th0 * th0 * math.sin(lam) ** 2
    if name == "alpha":
        return -0.5 * mu * mu * math.sin(lam) ** 2
    if name in ("lam", "lambda"):
        return mu * mu * th0 * th0 * math.sin(lam) * math.cos(lam)
    raise ValueError(f"unknown parameter {name!r}")


def critical_layer_heights(flow) -> np.ndarray:
    """Heights ``y`` in ``(0, 1)`` where the laminar horizontal velocity vanishes.

    Zeros within ``1e-10`` of the bed or the surface are excluded and reported
    with a :class:`BoundaryDegenerateWarning`.
    """
    p = flow.params if isinstance(flow, TrivialFlow) else flow
    th0, lam = p.theta0, p.lam
    n_lo = math.floor((lam - th0) / math.pi) - 1
    n_hi = math.ceil(lam / math.pi) + 1
    ys = []
    for n in range(n_lo, n_hi + 1):
        y = 1.0 + (n * math.pi - lam) / th0
        if -BOUNDARY_TOL <= y <= BOUNDARY_TOL or abs(y - 1.0) <= BOUNDARY_TOL:
            warnings.warn(f"laminar velocity vanishes at the boundary y={y:.3g}",
                          BoundaryDegenerateWarning, stacklevel=3)
            continue
        if 0.0 < y < 1.0:
            ys.append(y)
    return np.array(sorted(ys))


def critical_layer_count(flow) -> int:
    return int(critical_layer_heights(flow).size)


def choose_lambda(alpha: float, a: float | None = None, require_cot_nonpositive: bool = False,
                  min_margin: float = 0.05, n: int = 4096) -> float:
    """Phase ``lambda`` in ``(0, pi)`` maximizing the number of critical layers.

    Only phases for which ``a`` is reachable by some ``mu`` (and, if requested,
    ``cot(lambda) <= 0``) are considered; every critical layer must stay at
    least ``min_margin`` away from bed and surface.  Among phases with the
    largest count the one with the widest margin wins.
    """
    th0 = math.sqrt(-alpha)
    best = None
    for i in range(n):
        lam = math.pi * (i + 0.5) / n
        cot = math.cos(lam) / math.sin(lam)
        if require_cot_nonpositive and cot > 0.0:
            continue
        if a is not None and not a > th0 * cot:
            continue
        ys = []
        for m in range(math.floor((lam - th0) / math.pi), math.ceil(lam / math.pi) + 1):
            y = 1.0 + (m * math.pi - lam) / th0
            if 0.0 < y < 1.0:
                ys.append(y)
        margin = min((min(y, 1.0 - y) for y in ys), default=0.5)
        if margin < min_margin:
            continue
        key = (len(ys), margin)
        if best is None or key > best[0]:
            best = (key, lam)
    if best is None:
        raise RangeError(f"no admissible lambda for alpha={alpha!r}, a={a!r}")
    return best[1]


@dataclass(frozen=True)
class KernelMode:
    """``phi_k(x, s) = cos(k x) sin*(theta_k s) / theta_k`` (``s`` when ``theta_k = 0``)."""

    k: float
    alpha: float
    theta: ThetaValue

    @property
    def u(self) -> float:
        return self.alpha + self.k * self.k

    def profile(self, s, order: int = 0):
        s = np.asarray(s, dtype=float)
        u = self.u
        if order == 2:
            return u * self.profile(s, 0)
        if abs(u) < SERIES_THRESHOLD:
            z = u * s * s
            if order == 0:
                return s * (1.0 + z / 6.0 + z * z / 120.0 + z ** 3 / 5040.0 + z ** 4 / 362880.0)
            if order == 1:
                return 1.0 + z / 2.0 + z * z / 24.0 + z ** 3 / 720.0 + z ** 4 / 40320.0
        th = self.theta.magnitude
        if self.theta.regime == HYPERBOLIC:
            return np.sinh(th * s) / th if order == 0 else np.cosh(th * s)
        if order == 0:
            return np.sin(th * s) / th
        if order == 1:
            return np.cos(th * s)
        raise ValueError("order must be 0, 1 or 2")

    def __call__(self, x, s):
        return np.cos(self.k * np.asarray(x, dtype=float)) * self.profile(s)

    def on_grid(self, grid: Grid):
        return np.outer(np.cos(self.k * grid.x), self.profile(grid.s))


def kernel_mode(k: float, alpha: float) -> KernelMode:
    return KernelMode(float(k), float(alpha), theta(alpha, k))


def surface_coefficient(flow: TrivialFlow, mode: KernelMode) -> float:
    """``C(Lambda, k)``: the lifted mode has surface ``C cos(k x)``."""
    return -float(mode.profile(1.0)) / flow.slip


def _check_slip(flow: TrivialFlow) -> float:
    slip = flow.slip
    if abs(slip) < SLIP_FLOOR:
        raise ZeroDivisionError("surface slip (psi0)_s(1) vanishes; the lift is undefined")
    return slip


def _as_grid_field(phi, grid: Grid):
    if isinstance(phi, KernelMode):
        return phi.on_grid(grid)
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (grid.nx, grid.ns):
        raise ValueError(f"field shape {phi.shape} does not match {(grid.nx, grid.ns)}")
    return phi


def t_lift(phi, flow: TrivialFlow, grid: Grid):
    """Lift ``phi`` (zero on the bed) to ``(eta, phi_hat)`` with both Dirichlet rows zero."""
    phi = _as_grid_field(phi, grid)
    slip = _check_slip(flow)
    scale = max(1.0, float(np.max(np.abs(phi))))
    if np.max(np.abs(phi[:, 0])) > 1e-12 * scale:
        raise ValueError("phi must vanish on the bed s=0")
    eta = -phi[:, -1] / slip
    phi_hat = phi + np.outer(eta, grid.s * psi0_eval(flow, grid.s, 1))
    phi_hat[:, 0] = 0.0
    phi_hat[:, -1] = 0.0
    return eta, phi_hat


def t_unlift(eta, phi_hat, flow: TrivialFlow, grid: Grid):
    """Inverse of :func:`t_lift`: ``phi = phi_hat - s (psi0)_s eta``."""
    return np.asarray(phi_hat) - np.outer(eta, grid.s * psi0_eval(flow, grid.s, 1))


def apply_L(phi, flow: TrivialFlow, grid: Grid):
    """Discrete ``L phi`` as ``(surface row, field on all s-rows)``."""
    phi = _as_grid_field(phi, grid)
    slip = _check_slip(flow)
    curv = float(psi0_eval(flow, 1.0, 2))
    phi_s1 = phi @ grid.ds[-1]
    boundary = slip * phi_s1 - (curv + 1.0 / slip) * phi[:, -1]
    interior = grid.dxx @ phi + phi @ grid.dss.T - flow.params.alpha * phi
    return boundary, interior


def apply_dL(phi, flow: TrivialFlow, grid: Grid, name: str):
    """Parameter derivative ``D_p L`` applied to a fixed ``phi``."""
    phi = _as_grid_field(phi, grid)
    slip = flow.slip
    _, d1, d2 = psi0_param_derivatives(flow.params, np.array([1.0]), name)
    d1, d2 = float(d1[0]), float(d2[0])
    boundary = d1 * (phi @ grid.ds[-1]) - (d2 - d1 / slip ** 2) * phi[:, -1]
    interior = -phi if name == "alpha" else np.zeros_like(phi)
    return boundary, interior


def y_inner(w1, w2, grid: Grid) -> float:
    """Quadrature of ``iint phi1 phi2 dx ds + int eta1 eta2 dx`` over one period."""
    (e1, p1), (e2, p2) = w1, w2
    return grid.integrate(np.asarray(p1) * np.asarray(p2)) + grid.integrate_x(np.asarray(e1) * np.asarray(e2))


def kernel_pair(mode: KernelMode, flow: TrivialFlow, grid: Grid):
    """``(eta_phi, phi)`` for a kernel mode: the surface projection paired with the mode."""
    phi = mode.on_grid(grid)
    return -phi[:, -1] / _check_slip(flow), phi


def linear_wave_field(flow: TrivialFlow, modes):
    """Physical sampler of ``psi0 + sum t_i T phi_i``; see :mod:`critwaves.fields`."""
    from .fields import ModalField
    return ModalField(flow, modes)


def stagnation_and_streamlines(field, nx: int = 128, ns: int = 96, levels=None, **kw):
    from .fields import stagnation_and_streamlines as _impl
    return _impl(field, nx, ns, levels, **kw)
