"""Discrete flattened free-boundary problem.

With ``s = y / (1 + eta(x))`` the unknown fluid domain becomes the strip
``0 < s < 1`` and the unknowns are the surface ``eta`` and the disturbance
``phi_hat`` of ``psi_hat = psi0 + phi_hat``.  Writing ``g = 1/(1+eta)`` and
``q = s eta_x g`` the Laplacian-minus-vorticity equation reads

    F2 = phi_xx - 2 q phi_xs + (q^2 + g^2) psi_ss + (q eta_x g - q_x) psi_s - alpha psi,

and the Bernoulli condition on ``s = 1`` is

    F1 = psi_s^2 g^2 (1 + eta_x^2) / 2 + eta - Q.

The nonlinear solver works on the even half grid with unknown vector
``z = [eta_half, phi_hat interior (row-major in (x, s))]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dispersion import FlowParams
from .grid import Grid
from .laminar import (TrivialFlow, bernoulli_constant, bernoulli_param_derivative, kernel_pair,
                      psi0_eval, psi0_param_derivatives, t_lift, y_inner)

DOMAIN_FLOOR = 0.05
PARAM_NAMES = ("mu", "alpha", "lam")


class DomainError(ValueError):
    """The surface comes too close to the bed (``1 + eta`` below the floor)."""


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WaveState:
    """Surface ``eta`` (``Nx``) and field ``phi_hat`` (``Nx x Ns``) on a :class:`Grid`.

    Arrays are copied and frozen.  The Dirichlet rows of ``phi_hat`` must be
    exactly zero and both arrays must be even in ``x``.
    """

    eta: np.ndarray
    phi_hat: np.ndarray
    params: FlowParams
    grid: Grid

    def __post_init__(self):
        g = self.grid
        eta, phi = _readonly(self.eta), _readonly(self.phi_hat)
        if eta.shape != (g.nx,) or phi.shape != (g.nx, g.ns):
            raise ValueError("state arrays do not match the grid")
        if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(phi))):
            raise ValueError("state contains non-finite values")
        if np.any(phi[:, 0] != 0.0) or np.any(phi[:, -1] != 0.0):
            raise ValueError("phi_hat must vanish exactly on s=0 and s=1")
        if not np.min(1.0 + eta) > 0.0:
            raise DomainError("min(1 + eta) must be positive")
        idx = (-np.arange(g.nx)) % g.nx
        scale = max(1.0, float(np.max(np.abs(eta))), float(np.max(np.abs(phi))))
        if (np.max(np.abs(eta - eta[idx])) > 1e-12 * scale
                or np.max(np.abs(phi - phi[idx])) > 1e-12 * scale):
            raise ValueError("state is not even in x")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "phi_hat", phi)

    @classmethod
    def trivial(cls, params: FlowParams, grid: Grid) -> "WaveState":
        return cls(np.zeros(grid.nx), np.zeros((grid.nx, grid.ns)), params, grid)

    @classmethod
    def from_lift(cls, phi, params: FlowParams, grid: Grid, scale: float = 1.0) -> "WaveState":
        """``scale * t_lift(phi)`` at the laminar flow of ``params``."""
        eta, phi_hat = t_lift(phi, TrivialFlow.from_params(params), grid)
        return cls(scale * eta, scale * phi_hat, params, grid)

    @classmethod
    def from_vector(cls, z, params: FlowParams, grid: Grid) -> "WaveState":
        nh, ni = grid.nh, grid.ni
        z = np.asarray(z, dtype=float)
        eta = grid.to_full(z[:nh])
        phi = np.zeros((grid.nx, grid.ns))
        phi[:, 1:-1] = grid.to_full(z[nh:nh + nh * ni].reshape(nh, ni))
        return cls(eta, phi, params, grid)

    def vector(self) -> np.ndarray:
        g = self.grid
        return np.concatenate([self.eta[:g.nh], self.phi_hat[:g.nh, 1:-1].ravel()])

    def with_params(self, params: FlowParams) -> "WaveState":
        return WaveState(self.eta, self.phi_hat, params, self.grid)

    @property
    def flow(self) -> TrivialFlow:
        return TrivialFlow.from_params(self.params)


def _check_domain(eta, floor):
    m = float(np.min(1.0 + eta))
    if not m > floor:
        raise DomainError(f"min(1 + eta) = {m:.6g} is below the floor {floor:g}")


def _fields(eta, phi, params: FlowParams, grid: Grid):
    s = grid.s
    ex, exx = grid.dx @ eta, grid.dxx @ eta
    g = 1.0 / (1.0 + eta)
    p0 = psi0_eval(params, s, 0)
    p1 = psi0_eval(params, s, 1)
    p2 = params.alpha * p0
    q = np.outer(ex * g, s)
    qx = np.outer(exx * g - ex * ex * g * g, s)
    phi_x = grid.dx @ phi
    return dict(ex=ex, exx=exx, g=g, q=q, qx=qx,
                phi_xx=grid.dxx @ phi, phi_xs=phi_x @ grid.ds.T,
                psi=p0[None, :] + phi, psi_s=p1[None, :] + phi @ grid.ds.T,
                psi_ss=p2[None, :] + phi @ grid.dss.T)


def residual(state: WaveState, params: FlowParams | None = None, floor: float = DOMAIN_FLOOR):
    """Bernoulli residual ``r1`` (``Nx``) and interior residual ``r2`` (``Nx x (Ns-2)``)."""
    params = state.params if params is None else params
    _check_domain(state.eta, floor)
    f = _fields(state.eta, state.phi_hat, params, state.grid)
    g, ex, q = f["g"], f["ex"], f["q"]
    r2 = (f["phi_xx"] - 2.0 * q * f["phi_xs"] + (q * q + (g * g)[:, None]) * f["psi_ss"]
          + (q * (ex * g)[:, None] - f["qx"]) * f["psi_s"] - params.alpha * f["psi"])
    ps1 = f["psi_s"][:, -1]
    r1 = 0.5 * ps1 * ps1 * g * g * (1.0 + ex * ex) + state.eta - bernoulli_constant(params)
    return r1, r2[:, 1:-1]


def residual_vector(state: WaveState, params: FlowParams | None = None,
                    floor: float = DOMAIN_FLOOR) -> np.ndarray:
    """Half-grid residual ``[r1_half, r2_half interior]`` matching :meth:`WaveState.vector`."""
    r1, r2 = residual(state, params, floor)
    nh = state.grid.nh
    return np.concatenate([r1[:nh], r2[:nh].ravel()])


def jacobian(state: WaveState, params: FlowParams | None = None, active=(),
             floor: float = DOMAIN_FLOOR) -> np.ndarray:
    """Analytic derivative of :func:`residual_vector`.

    Columns are ``[eta_half, phi_hat interior, *active]`` where ``active`` names
    parameters among ``mu``, ``alpha`` and ``lam``.
    """
    params = state.params if params is None else params
    grid = state.grid
    _check_domain(state.eta, floor)
    nh, ni = grid.nh, grid.ni
    n_eta, n_phi = nh, nh * ni
    f = _fields(state.eta, state.phi_hat, params, grid)
    h = slice(0, nh)
    inner = slice(1, -1)
    s = grid.s[inner][None, :]
    ex = f["ex"][h][:, None]
    exx = f["exx"][h][:, None]
    g = f["g"][h][:, None]
    q = f["q"][h, inner]
    qx = f["qx"][h, inner]
    pxs = f["phi_xs"][h, inner]
    ps = f["psi_s"][h, inner]
    pss = f["psi_ss"][h, inner]
    rr = q * ex * g - qx

    jac = np.zeros((n_eta + n_phi, n_eta + n_phi + len(active)))
    # interior rows, phi columns
    jpp = grid.op_xx - params.alpha * np.eye(n_phi)
    jpp += (-2.0 * q).reshape(-1, 1) * grid.op_xs
    jpp += (q * q + g * g).reshape(-1, 1) * grid.op_ss
    jpp += rr.reshape(-1, 1) * grid.op_s
    jac[n_eta:, n_eta:n_eta + n_phi] = jpp

    # interior rows, eta columns
    c0 = (2.0 * s * ex * g * g * pxs + (-2.0 * q * s * ex * g * g - 2.0 * g ** 3) * pss
          + (s * exx * g * g - 4.0 * s * ex * ex * g ** 3) * ps)
    c1 = -2.0 * s * g * pxs + 2.0 * q * s * g * pss + 4.0 * s * ex * g * g * ps
    c2 = -s * g * ps
    eye = np.eye(nh)
    jpe = (c0[:, :, None] * eye[:, None, :] + c1[:, :, None] * grid.dx_half[:, None, :]
           + c2[:, :, None] * grid.dxx_half[:, None, :])
    jac[n_eta:, :n_eta] = jpe.reshape(n_phi, nh)

    # Bernoulli rows
    ps1 = f["psi_s"][h, -1]
    ex1, g1 = f["ex"][h], f["g"][h]
    jac[:n_eta, :n_eta] = (np.diag(1.0 - ps1 * ps1 * g1 ** 3 * (1.0 + ex1 * ex1))
                           + (ps1 * ps1 * g1 * g1 * ex1)[:, None] * grid.dx_half)
    coef = ps1 * g1 * g1 * (1.0 + ex1 * ex1)
    jac[:n_eta, n_eta:n_eta + n_phi] = np.kron(np.diag(coef), grid.ds[-1, inner])

    # parameter columns
    for c, name in enumerate(active):
        d0, d1, d2 = psi0_param_derivatives(params, grid.s, name)
        col2 = ((q * q + g * g) * d2[None, inner] + rr * d1[None, inner]
                - params.alpha * d0[None, inner])
        if name == "alpha":
            col2 = col2 - f["psi"][h, inner]
        col1 = coef * d1[-1] - bernoulli_param_derivative(params, name)
        jac[:n_eta, n_eta + n_phi + c] = col1
        jac[n_eta:, n_eta + n_phi + c] = col2.ravel()
    return jac


def kernel_norm2(mode, flow: TrivialFlow, grid: Grid) -> float:
    w = kernel_pair(mode, flow, grid)
    return y_inner(w, w, grid)


def project_kernel(state: WaveState, modes, flow: TrivialFlow | None = None):
    """Coordinates ``<w, w~_k>_Y / ||w~_k||_Y^2`` of ``w = (eta, phi_hat)`` for each mode.

    ``w~_k = (eta_phi_k, phi_k)`` is built at ``flow`` (defaults to the state's flow).
    """
    flow = state.flow if flow is None else flow
    grid = state.grid
    out = []
    for mode in modes:
        wk = kernel_pair(mode, flow, grid)
        out.append(y_inner((state.eta, state.phi_hat), wk, grid) / y_inner(wk, wk, grid))
    return np.array(out)


def projection_row(mode, flow: TrivialFlow, grid: Grid) -> np.ndarray:
    """Row vector ``c`` with ``c @ state.vector() == project_kernel(state, [mode], flow)[0]``."""
    eta_k, phi_k = kernel_pair(mode, flow, grid)
    nh = grid.nh
    wx = grid.wx_half
    norm2 = y_inner((eta_k, phi_k), (eta_k, phi_k), grid)
    r_eta = wx * eta_k[:nh]
    r_phi = (wx[:, None] * phi_k[:nh, 1:-1] * grid.ws[None, 1:-1]).ravel()
    return np.concatenate([r_eta, r_phi]) / norm2


def lift_gain(mode, flow: TrivialFlow, grid: Grid) -> float:
    """Coordinate of the unit lifted mode, ``<T phi_k, w~_k>_Y / ||w~_k||_Y^2``."""
    eta, phi_hat = t_lift(mode, flow, grid)
    wk = kernel_pair(mode, flow, grid)
    return y_inner((eta, phi_hat), wk, grid) / y_inner(wk, wk, grid)


def lift_vector(mode, flow: TrivialFlow, grid: Grid) -> np.ndarray:
    """Half-grid unknown vector of the unit lifted mode ``T phi_k`` (no domain check)."""
    eta, phi_hat = t_lift(mode, flow, grid)
    return np.concatenate([eta[:grid.nh], phi_hat[:grid.nh, 1:-1].ravel()])
