"""Periodic-by-Chebyshev collocation grid on one period of the strip ``0 <= s <= 1``.

Fields are stored on the full periodic grid ``x_j = j L / Nx`` (``L = 2 pi / kappa``)
but are even in ``x``, so the nonlinear solver works with the half grid
``j = 0 .. Nx/2``.  The vertical direction uses Chebyshev-Gauss-Lobatto points
mapped to ``[0, 1]`` with ``s[0] = 0`` and ``s[-1] = 1``.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np
from numpy.polynomial import chebyshev as cheb


def cheb_diff(n: int):
    """Nodes ``cos(pi i / n)`` and first-derivative matrix on ``[-1, 1]``."""
    if n == 0:
        return np.array([1.0]), np.zeros((1, 1))
    i = np.arange(n + 1)
    x = np.cos(np.pi * i / n)
    c = np.where((i == 0) | (i == n), 2.0, 1.0) * (-1.0) ** i
    dx = x[:, None] - x[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    d -= np.diag(d.sum(axis=1))
    return x, d


def clenshaw_curtis(n: int):
    """Clenshaw-Curtis weights on the ``n + 1`` nodes ``cos(pi i / n)`` of ``[-1, 1]``."""
    theta = np.pi * np.arange(n + 1) / n
    w = np.zeros(n + 1)
    v = np.ones(n - 1)
    ii = np.arange(1, n)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n * n - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k * k - 1)
        v -= np.cos(n * theta[ii]) / (n * n - 1)
    else:
        w[0] = w[n] = 1.0 / (n * n)
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k * k - 1)
    w[ii] = 2.0 * v / n
    return w


def fourier_diff(n: int, length: float):
    """First and second periodic differentiation matrices on ``n`` equispaced points.

    The Nyquist mode is dropped for the first derivative and kept for the second.
    """
    k = np.fft.fftfreq(n, d=1.0 / n) * (2.0 * np.pi / length)
    k1 = k.copy()
    k1[n // 2] = 0.0
    eye = np.eye(n)
    f = np.fft.fft(eye, axis=0)
    d1 = np.real(np.fft.ifft(1j * k1[:, None] * f, axis=0))
    d2 = np.real(np.fft.ifft(-(k[:, None] ** 2) * f, axis=0))
    return d1, d2


class Grid:
    """Collocation grid and differentiation operators.

    Parameters
    ----------
    nx : int
        Even number of equispaced points on one period ``[0, 2 pi / kappa)``.
    ns : int
        Number of Chebyshev-Gauss-Lobatto points on ``[0, 1]``.
    kappa : float
        Base wavenumber.
    """

    def __init__(self, nx: int = 64, ns: int = 48, kappa: float = 1.0):
        if nx < 4 or nx % 2:
            raise ValueError("nx must be an even integer >= 4")
        if ns < 4:
            raise ValueError("ns must be >= 4")
        if not kappa > 0:
            raise ValueError("kappa must be positive")
        self.nx, self.ns, self.kappa = int(nx), int(ns), float(kappa)
        self.length = 2.0 * np.pi / self.kappa
        self.nh = self.nx // 2 + 1
        self.x = self.length * np.arange(self.nx) / self.nx
        self.x_half = self.x[: self.nh]

        xc, dc = cheb_diff(self.ns - 1)
        # s = (1 - xc) / 2 is increasing from 0 to 1
        self.cheb_nodes = xc
        self.s = 0.5 * (1.0 - xc)
        self.ds = -2.0 * dc
        self.dss = self.ds @ self.ds
        self.ws = 0.5 * clenshaw_curtis(self.ns - 1)
        self.wx = np.full(self.nx, self.length / self.nx)

        self.dx, self.dxx = fourier_diff(self.nx, self.length)
        # half-grid (even -> odd, even -> even) operators
        self.extend = self._even_extension()
        self.dx_half = (self.dx @ self.extend)[: self.nh]
        self.dxx_half = (self.dxx @ self.extend)[: self.nh]
        w = np.full(self.nh, 2.0)
        w[0] = w[-1] = 1.0
        self.wx_half = w * (self.length / self.nx)

    def _even_extension(self):
        e = np.zeros((self.nx, self.nh))
        for j in range(self.nx):
            e[j, min(j, self.nx - j)] = 1.0
        return e

    @property
    def ni(self) -> int:
        return self.ns - 2

    def to_full(self, half):
        """Extend half-grid values of an even function (first axis) to the full grid."""
        half = np.asarray(half)
        idx = np.minimum(np.arange(self.nx), self.nx - np.arange(self.nx))
        return half[idx]

    def to_half(self, full):
        return np.asarray(full)[: self.nh]

    def integrate(self, f):
        """Trapezoid in ``x`` times Clenshaw-Curtis in ``s`` of a full-grid field."""
        return float(self.wx @ np.asarray(f) @ self.ws)

    def integrate_x(self, f):
        return float(self.wx @ np.asarray(f))

    def cosine_spectrum(self, f):
        """Coefficients ``a_m`` with ``f(x) = sum_m a_m cos(m kappa x)``, ``m = 0 .. Nx/2``."""
        c = np.fft.rfft(np.asarray(f, dtype=float)) / self.nx
        a = 2.0 * c.real
        a[0] = c[0].real
        a[-1] = c[-1].real
        return a

    def cheb_coefficients(self, f):
        """Chebyshev coefficients along the last axis (variable ``1 - 2 s``)."""
        f = np.asarray(f, dtype=float)
        v = cheb.chebvander(self.cheb_nodes, self.ns - 1)
        c = np.linalg.solve(v, f.reshape(-1, self.ns).T).T
        return c.reshape(f.shape)

    # dense operators on interior unknowns of the half grid, row-major (x, s)
    @cached_property
    def op_xx(self):
        return np.kron(self.dxx_half, np.eye(self.ni))

    @cached_property
    def op_xs(self):
        return np.kron(self.dx_half, self.ds[1:-1, 1:-1])

    @cached_property
    def op_ss(self):
        return np.kron(np.eye(self.nh), self.dss[1:-1, 1:-1])

    @cached_property
    def op_s(self):
        return np.kron(np.eye(self.nh), self.ds[1:-1, 1:-1])

    def __repr__(self):
        return f"Grid(nx={self.nx}, ns={self.ns}, kappa={self.kappa:g})"
