"""Tracing of bifurcating branches and sheets by Newton's method with amplitude constraints.

The amplitude of a mode ``k`` in a state ``w`` is the kernel coordinate
``<w, w~_k>_Y / ||w~_k||_Y^2`` divided by the same coordinate of the unit lifted
mode ``T phi_k``, so that ``w = t T phi_k + O(t^2)`` along a branch and the
surface starts as ``t C(Lambda*, k) cos(k x)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.linalg as sla

from .dispersion import (FlowParams, PreconditionError, exhaustive_k_max, kernel_report,
                         rhs_dispersion)
from .fields import SpectralField, critical_layer_bands
from .flatten import (DomainError, WaveState, jacobian, lift_gain, lift_vector, project_kernel,
                      projection_row, residual_vector)
from .grid import Grid
from .laminar import TrivialFlow, apply_dL, kernel_mode, kernel_pair, y_inner

NEWTON_TOL = 1e-10
MAX_ITER = 25
DELTA = 0.1
SPECTRAL_FLOOR = 1e-6
COND_LIMIT = 1e8
FLAT_TOL = 1e-13


class NewtonError(RuntimeError):
    def __init__(self, message, last_residual=math.nan, iterations=0):
        super().__init__(f"{message} (last residual {last_residual:.3e} after {iterations} iterations)")
        self.last_residual = last_residual
        self.iterations = iterations


class KernelDimensionError(ValueError):
    pass


class DeterminantWarning(UserWarning):
    """The 2x2 parameter sensitivity matrix of a mixed sheet is nearly singular."""


class MultimodalityWarning(UserWarning):
    pass


@dataclass
class Diagnostics:
    residual_max: float
    spectrum: np.ndarray
    crests: int
    troughs: int
    crests_per_period: float
    troughs_per_period: float
    minimal_period: float
    flat: bool
    monotone: bool
    critical_layers: int
    bands: list
    newton_iterations: int = 0

    def as_dict(self) -> dict:
        return {
            "residual_max": self.residual_max,
            "spectrum": [float(v) for v in self.spectrum],
            "crests": self.crests,
            "troughs": self.troughs,
            "crests_per_period": self.crests_per_period,
            "troughs_per_period": self.troughs_per_period,
            "minimal_period": self.minimal_period,
            "flat": self.flat,
            "monotone": self.monotone,
            "critical_layers": self.critical_layers,
            "bands": [list(b) for b in self.bands],
            "newton_iterations": self.newton_iterations,
        }


@dataclass
class BranchPoint:
    state: WaveState
    params: FlowParams
    amplitudes: dict
    projections: dict
    diagnostics: Diagnostics
    tol: float
    params_star: FlowParams | None = None
    residual_history: list = field(default_factory=list)

    def as_dict(self, include_state: bool = False) -> dict:
        d = {
            "params": self.params.as_dict(),
            "params_star": None if self.params_star is None else self.params_star.as_dict(),
            "amplitudes": dict(self.amplitudes),
            "projections": {str(k): v for k, v in self.projections.items()},
            "diagnostics": self.diagnostics.as_dict(),
            "tol": self.tol,
            "residual_history": list(self.residual_history),
        }
        if include_state:
            g = self.state.grid
            d["state"] = {"nx": g.nx, "ns": g.ns, "kappa": g.kappa,
                          "eta": self.state.eta.tolist(), "phi_hat": self.state.phi_hat.tolist()}
        return d


def _float_or_int(v):
    return int(v) if float(v).is_integer() else float(v)


def diagnostics(state: WaveState, residual_max: float | None = None, newton_iterations: int = 0,
                floor: float = SPECTRAL_FLOOR) -> Diagnostics:
    """Surface spectrum, crest/trough counts, minimal period and critical-layer bands."""
    grid = state.grid
    eta = np.asarray(state.eta)
    if residual_max is None:
        residual_max = float(np.max(np.abs(residual_vector(state))))
    spec = grid.cosine_spectrum(eta)
    amp = np.abs(spec[1:])
    flat = bool(np.max(np.abs(eta - eta.mean())) <= FLAT_TOL)
    if flat or amp.max() == 0.0:
        n_per = 1
    else:
        active = np.flatnonzero(amp > floor * amp.max()) + 1
        n_per = reduce(math.gcd, active.tolist())
    period = grid.length / n_per

    crests = troughs = 0
    monotone = False
    if not flat:
        d = np.roll(eta, -1) - eta
        tiny = np.abs(d) <= 1e-14 * np.max(np.abs(d))
        sg = np.sign(d[~tiny])
        nxt = np.roll(sg, -1)
        crests = int(np.sum((sg > 0) & (nxt < 0)))
        troughs = int(np.sum((sg < 0) & (nxt > 0)))
        monotone = bool(crests == n_per and troughs == n_per and not tiny.any())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bands = critical_layer_bands(SpectralField(state), nx=grid.nx, refine=False)
    return Diagnostics(float(residual_max), spec, crests, troughs,
                       _float_or_int(crests / n_per), _float_or_int(troughs / n_per), float(period),
                       flat, monotone, len(bands), bands, int(newton_iterations))


class _System:
    """Flattened equations plus linear amplitude constraints in the unknowns ``[state, params]``."""

    def __init__(self, params_star: FlowParams, grid: Grid, active, rows, targets):
        self.params_star = params_star
        self.grid = grid
        self.active = tuple(active)
        self.rows = np.atleast_2d(np.asarray(rows, float))
        self.targets = np.asarray(targets, float)
        self.n = grid.nh + grid.nh * grid.ni

    def params(self, z) -> FlowParams:
        vals = dict(zip(self.active, z[self.n:]))
        return self.params_star.with_(**vals)

    def start(self, state_vec):
        p = [getattr(self.params_star, name) for name in self.active]
        return np.concatenate([state_vec, p])

    def state(self, z) -> WaveState:
        return WaveState.from_vector(z[:self.n], self.params(z), self.grid)

    def F(self, z):
        p = self.params(z)
        st = WaveState.from_vector(z[:self.n], p, self.grid)
        return np.concatenate([residual_vector(st, p), self.rows @ z[:self.n] - self.targets])

    def J(self, z):
        p = self.params(z)
        st = WaveState.from_vector(z[:self.n], p, self.grid)
        top = jacobian(st, p, self.active)
        bottom = np.hstack([self.rows, np.zeros((self.rows.shape[0], len(self.active)))])
        return np.vstack([top, bottom])


def _try_F(system, z):
    try:
        f = system.F(z)
    except (DomainError, PreconditionError, ValueError):
        return None, math.inf
    n = float(np.max(np.abs(f)))
    return f, (n if math.isfinite(n) else math.inf)


def newton(system: _System, z0, tol: float = NEWTON_TOL, max_iter: int = MAX_ITER, lu=None):
    """Damped Newton iteration with lazy refactorization.

    A factorization is reused (possibly from a previous solve) while each step
    reduces the residual by at least a factor 5; otherwise the Jacobian is
    rebuilt.  Fresh steps that do not reduce the residual are halved.

    Returns ``(z, residual_max, iterations, lu, history)`` where ``history``
    lists the residual max-norm before the first and after every accepted step.
    """
    z = np.array(z0, float)
    f, norm = _try_F(system, z)
    if f is None:
        raise NewtonError("initial guess outside the admissible domain", norm, 0)
    history = [norm]
    it = 0
    fresh = False
    while norm > tol:
        if it >= max_iter:
            raise NewtonError("Newton did not converge", norm, it)
        if lu is None:
            lu = sla.lu_factor(system.J(z))
            fresh = True
        dz = sla.lu_solve(lu, -f)
        step, accepted = 1.0, None
        while step >= 2.0 ** -12:
            f_try, n_try = _try_F(system, z + step * dz)
            if n_try < norm:
                accepted = (z + step * dz, f_try, n_try)
                break
            if not fresh:
                break
            step *= 0.5
        if accepted is None:
            if fresh:
                raise NewtonError("damped Newton step failed to reduce the residual", norm, it)
            lu = None
            continue
        it += 1
        ratio = accepted[2] / norm
        z, f, norm = accepted
        history.append(norm)
        fresh = False
        if ratio > 0.2:
            lu = None
    return z, norm, it, lu, history


def _check_kernel(params: FlowParams, required, exact: bool, k_max=None):
    a = rhs_dispersion(params)
    k_max = exhaustive_k_max(params.alpha, a, params.kappa) if k_max is None else k_max
    rep = kernel_report(params, k_max)
    ks = set(round(k, 9) for k in rep.wavenumbers)
    need = set(round(float(k), 9) for k in required)
    if (exact and ks != need) or (not exact and not need <= ks):
        raise KernelDimensionError(f"kernel wavenumbers {sorted(ks)} do not match {sorted(need)}")
    return rep


def _amplitude_row(mode, flow, grid):
    return projection_row(mode, flow, grid) / lift_gain(mode, flow, grid)


def _point(system, z, modes, flow, amplitudes, norm, its, tol, history=()):
    st = system.state(z)
    proj = project_kernel(st, modes, flow)
    return BranchPoint(st, st.params, amplitudes,
                       {m.k: float(p) for m, p in zip(modes, proj)},
                       diagnostics(st, norm, its), tol, flow.params, [float(v) for v in history])


def _extrapolate(history, t):
    """Lagrange extrapolation through the last (up to three) solved points."""
    pts = history[-3:]
    out = np.zeros_like(pts[0][1])
    for i, (ti, zi) in enumerate(pts):
        w = 1.0
        for j, (tj, _) in enumerate(pts):
            if j != i:
                w *= (t - tj) / (ti - tj)
        out = out + w * zi
    return out


def branch_1d(params_star: FlowParams, k: float, t_values, tol: float = NEWTON_TOL,
              grid: Grid | None = None, max_iter: int = MAX_ITER, k_max: float | None = None,
              check_kernel: bool = True):
    """Points of the one-dimensional branch through ``params_star`` with amplitudes ``t_values``.

    The unknowns are the state and ``mu``; ``alpha`` and ``lambda`` stay fixed.
    Points of each sign are seeded by extrapolation from the previously solved
    points of that sign (the trivial point ``t = 0`` included).
    """
    grid = Grid(kappa=params_star.kappa) if grid is None else grid
    if check_kernel:
        _check_kernel(params_star, [k], True, k_max)
    flow = TrivialFlow.from_params(params_star)
    mode = kernel_mode(k, params_star.alpha)
    system = _System(params_star, grid, ("mu",), [_amplitude_row(mode, flow, grid)], [0.0])
    lifted = lift_vector(mode, flow, grid)
    z0 = system.start(np.zeros(system.n))
    histories = {1: [(0.0, z0)], -1: [(0.0, z0)]}
    out = [None] * len(t_values)
    lu = None
    for idx, t in enumerate(t_values):
        t = float(t)
        if t == 0.0:
            out[idx] = _point(system, z0, [mode], flow, {"t": 0.0}, 0.0, 0, tol)
            continue
        hist = histories[1 if t > 0 else -1]
        if len(hist) == 1:
            guess = system.start(t * lifted)
        else:
            guess = _extrapolate(hist, t)
        system.targets = np.array([t])
        z, norm, its, lu, rh = newton(system, guess, tol, max_iter, lu)
        hist.append((t, z))
        out[idx] = _point(system, z, [mode], flow, {"t": t}, norm, its, tol, rh)
    return out


def sensitivity_matrix(params_star: FlowParams, k1: float, k2: float, grid: Grid) -> np.ndarray:
    """``M[i, j] = <D_{p_j} L phi_i, w~_i>_Y`` for ``p = (mu, alpha)``."""
    flow = TrivialFlow.from_params(params_star)
    m = np.zeros((2, 2))
    for i, k in enumerate((k1, k2)):
        mode = kernel_mode(k, params_star.alpha)
        wk = kernel_pair(mode, flow, grid)
        for j, name in enumerate(("mu", "alpha")):
            b, interior = apply_dL(mode, flow, grid, name)
            m[i, j] = y_inner((b, interior), wk, grid)
    return m


def branch_mixed(params_star: FlowParams, k1: float, k2: float, targets, tol: float = NEWTON_TOL,
                 polar: bool = False, grid: Grid | None = None, delta: float = DELTA,
                 max_iter: int = MAX_ITER, k_max: float | None = None):
    """Points of the two-parameter sheet through a two-dimensional kernel ``{k1, k2}``.

    ``targets`` are ``(t1, t2)`` pairs, or ``(r, upsilon)`` pairs when ``polar``.
    With both amplitudes nonzero the unknowns are the state, ``mu`` and
    ``alpha``.  When one amplitude is zero the point lies on the pure-mode
    sub-sheet: ``alpha`` is held at its starred value and only the nonzero
    constraint is imposed, which is the one-dimensional problem for that mode.
    """
    grid = Grid(kappa=params_star.kappa) if grid is None else grid
    _check_kernel(params_star, [k1, k2], False, k_max)
    ratio = k2 / k1
    integer_ratio = abs(ratio - round(ratio)) < 1e-12
    pairs = []
    for a, b in targets:
        t1, t2 = (a * math.cos(b), a * math.sin(b)) if polar else (float(a), float(b))
        if polar:
            t1 = 0.0 if abs(t1) < 1e-15 * abs(a) else t1
        if integer_ratio:
            ups = abs(math.atan2(t2, t1))
            if not delta < ups < math.pi - delta:
                raise PreconditionError(
                    f"k2/k1 is an integer: need {delta:g} < |upsilon| < pi - {delta:g}, got {ups:.4g}")
        pairs.append((t1, t2, (float(a), float(b)) if polar else None))

    m = sensitivity_matrix(params_star, k1, k2, grid)
    cond = np.linalg.cond(m)
    if not cond <= COND_LIMIT:
        warnings.warn(f"parameter sensitivity matrix is nearly singular (cond {cond:.3e})",
                      DeterminantWarning, stacklevel=2)

    flow = TrivialFlow.from_params(params_star)
    modes = [kernel_mode(k1, params_star.alpha), kernel_mode(k2, params_star.alpha)]
    rows = [_amplitude_row(md, flow, grid) for md in modes]
    lifts = [lift_vector(md, flow, grid) for md in modes]
    out = []
    for t1, t2, pol in pairs:
        ts = (t1, t2)
        amps = {"t1": t1, "t2": t2}
        if pol is not None:
            amps.update(r=pol[0], upsilon=pol[1])
        nz = [i for i in (0, 1) if ts[i] != 0.0]
        guess_state = t1 * lifts[0] + t2 * lifts[1]
        if not nz:
            system = _System(params_star, grid, ("mu",), rows[:1], [0.0])
            out.append(_point(system, system.start(guess_state), modes, flow, amps, 0.0, 0, tol))
            continue
        if len(nz) == 1:
            i = nz[0]
            system = _System(params_star, grid, ("mu",), [rows[i]], [ts[i]])
        else:
            system = _System(params_star, grid, ("mu", "alpha"), rows, [t1, t2])
        z, norm, its, _, rh = newton(system, system.start(guess_state), tol, max_iter)
        pt = _point(system, z, modes, flow, amps, norm, its, tol, rh)
        if len(nz) == 2 and not pt.diagnostics.minimal_period > grid.length / (k2 / grid.kappa):
            warnings.warn("mixed point is not multimodal: minimal period does not exceed 2 pi / k2",
                          MultimodalityWarning, stacklevel=2)
        out.append(pt)
    return out


def normalized_amplitudes(point: BranchPoint, flow: TrivialFlow | None = None):
    """Amplitudes recomputed from the stored state, in the units of ``point.amplitudes``."""
    st = point.state
    if flow is None:
        flow = TrivialFlow.from_params(point.params_star or point.params)
    grid = st.grid
    return {k: float(_amplitude_row(kernel_mode(k, flow.params.alpha), flow, grid) @ st.vector())
            for k in point.projections}
