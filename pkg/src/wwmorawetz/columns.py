"""Eulerian vertical columns pulled back to the strip.

For each abscissa ``x_j`` the segment ``{x_j} x [-H, eta(x_j)]`` is sampled
at Gauss-Legendre nodes in ``y``; each node is located in the strip by
Newton's method on ``Z(alpha + i beta) = x + i y`` and the harmonic fields
are evaluated there from their top traces. Only Fourier modes above a
relative threshold are summed, which keeps smooth small-amplitude data cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from .conformal import locate, surface_alpha
from .solver import HoloState, aux_fields, eulerian_traces, top_data
from .spectral import Grid, trig_eval
from .strip import default_h_eff, dp_dirichlet, dp_neumann, p_dirichlet, p_neumann

__all__ = ["PointEvaluator", "Columns", "sample_columns", "column_densities", "bottom_alpha"]


class PointEvaluator:
    """Evaluate strip extensions of many traces at one fixed set of points."""

    def __init__(self, grid: Grid, h: float, alpha: np.ndarray, beta: np.ndarray,
                 traces: list[np.ndarray], tol: float = 1e-15):
        self.grid, self.h = grid, h
        self.shape = np.shape(alpha)
        n = grid.n
        spectra = [np.abs(np.fft.fft(tr)) / n for tr in traces]
        scale = max(max(c.max() for c in spectra), 1e-300)
        active = np.zeros(n, bool)
        for c in spectra:
            active |= c > tol * scale
        active[grid.nyquist_index] = False
        self.active = active
        k = grid.k[active]
        a = np.ravel(alpha)[:, None]
        b = np.ravel(beta)[:, None]
        self.k = k
        self.E = np.exp(1j * k[None, :] * (a - grid.x0))
        self._b = b
        self._sym: dict[str, np.ndarray] = {}

    _SYM = {"neumann": p_neumann, "dirichlet": p_dirichlet,
            "dneumann": dp_neumann, "ddirichlet": dp_dirichlet}

    def symbol(self, key: str) -> np.ndarray:
        if key not in self._sym:
            self._sym[key] = self._SYM[key](self.k[None, :], self._b, self.h)
        return self._sym[key]

    def _coeffs(self, values):
        return (np.fft.fft(values) / self.grid.n)[self.active]

    def real_ext(self, values: np.ndarray, kind: str, dalpha: bool = False, dbeta: bool = False):
        """Extension of a real trace (or its alpha / beta derivative)."""
        c = self._coeffs(values)
        key = ("d" if dbeta else "") + kind
        m = self.E * self.symbol(key)
        if dalpha:
            m = m * (1j * self.k[None, :])
        return np.real(m @ c).reshape(self.shape)

    def holo(self, values: np.ndarray, level: float = 0.0, derivative: bool = False):
        """Holomorphic trace ``u + i v`` with ``Im = level`` on the bottom; ``d/dz`` if asked."""
        re, im = np.real(values), np.imag(values) - level
        if derivative:
            return self.real_ext(re, "neumann", dalpha=True) + 1j * self.real_ext(im, "dirichlet", dalpha=True)
        return self.real_ext(re, "neumann") + 1j * (self.real_ext(im, "dirichlet") + level)


def bottom_alpha(s: HoloState, x: np.ndarray, tol: float = 1e-14, max_iter: int = 50) -> np.ndarray:
    """Solve ``Re Z(alpha - i h) = x`` along the bottom of the strip."""
    m = s.map
    h = s.h
    a = np.array(x, dtype=float)
    for _ in range(max_iter):
        w, wz = m.W_at(a, np.full(a.shape, -h), derivs=True)
        f = a + w.real - x
        if np.max(np.abs(f)) < tol * max(1.0, np.max(np.abs(x))):
            return a
        a = a - f / (1 + wz.real)
    raise RuntimeError("bottom inversion did not converge")


@dataclass(frozen=True)
class Columns:
    x: np.ndarray
    eta: np.ndarray
    y: np.ndarray          # (nx, ny)
    w: np.ndarray          # (nx, ny) quadrature weights in y
    R: np.ndarray          # phi_x - i phi_y
    Y_theta: np.ndarray    # theta_y + i theta_x
    phi_t: np.ndarray
    theta_t: np.ndarray
    psi_x: np.ndarray
    psi_t: np.ndarray
    eta_x: np.ndarray
    G: np.ndarray
    phi_x_bottom: np.ndarray | None
    g: float
    H: float

    def integrate(self, f: np.ndarray) -> np.ndarray:
        return np.sum(self.w * f, axis=1)


def _column_nodes(eta: np.ndarray, H: float, ny: int, y_floor: float | None):
    t, wt = roots_legendre(ny)
    if np.isfinite(H):
        lo = -H * np.ones_like(eta)
        half = 0.5 * (eta - lo)
        y = half[:, None] * t[None, :] + (0.5 * (eta + lo))[:, None]
        return y, half[:, None] * wt[None, :]
    # infinite depth: graded panels from -y_floor to eta
    panels = max(1, int(np.ceil(np.log2(max(y_floor, 1.0)))) + 1)
    edges = np.concatenate([[1.0], 2.0 ** -np.arange(1, panels), [0.0]])
    ys, ws = [], []
    for a_, b_ in zip(edges[:-1], edges[1:]):
        lo = eta - a_ * (y_floor + eta)
        hi = eta - b_ * (y_floor + eta)
        half = 0.5 * (hi - lo)
        ys.append(half[:, None] * t[None, :] + (0.5 * (hi + lo))[:, None])
        ws.append(half[:, None] * wt[None, :])
    return np.concatenate(ys, axis=1), np.concatenate(ws, axis=1)


def sample_columns(s: HoloState, ny: int = 24, x: np.ndarray | None = None,
                   bottom: bool = True, tol: float = 1e-15) -> Columns:
    """Sample every vertical ``x = x_j`` of the fluid domain (default: the grid abscissae)."""
    grid = s.grid
    m = s.map
    x = grid.x if x is None else np.asarray(x, dtype=float)
    a_s = surface_alpha(m, x)
    eta = trig_eval(np.fft.fft(np.imag(s.W.values)) / grid.n, grid, a_s, real=True)
    y_floor = None if np.isfinite(s.H) else default_h_eff(grid, 1e-17)
    y, w = _column_nodes(eta, s.H, ny, y_floor)
    X = np.broadcast_to(x[:, None], y.shape)
    # initial guess: linear interpolation of beta between bottom and surface
    if np.isfinite(s.H):
        beta0 = (y - eta[:, None]) / (eta[:, None] + s.H) * s.h
    else:
        beta0 = y - eta[:, None]
    alpha0 = np.broadcast_to(a_s[:, None], y.shape)
    al, be = locate(X.ravel(), y.ravel(), m, guess=(alpha0.ravel().copy(), beta0.ravel().copy()))
    al, be = al.reshape(y.shape), be.reshape(y.shape)

    aux = aux_fields(s)
    td = top_data(s, aux)
    h = s.h
    traces = [s.W.values, s.Q.values, td["phi_t"], td["theta_t_correction"]]
    ev = PointEvaluator(grid, h, al, be, traces, tol)
    wz = ev.holo(s.W.values, s.level, derivative=True)
    qz = ev.holo(s.Q.values, 0.0, derivative=True)
    R = qz / (1 + wz)
    lvl_h = 0.0 if np.isinf(h) else s.level / h
    y_theta = (wz + lvl_h) / (1 + wz)
    phi_t = ev.real_ext(td["phi_t"], "neumann")
    theta_t = -R.imag - ev.real_ext(td["theta_t_correction"], "dirichlet")

    tr = eulerian_traces(s, aux)
    n = grid.n

    def at_surface(v):
        return trig_eval(np.fft.fft(v) / n, grid, a_s, real=True)

    phi_x_b = None
    if bottom and np.isfinite(s.H):
        ab = bottom_alpha(s, x)
        evb = PointEvaluator(grid, h, ab, np.full(ab.shape, -h), traces[:2], tol)
        wzb = evb.holo(s.W.values, s.level, derivative=True)
        qzb = evb.holo(s.Q.values, 0.0, derivative=True)
        phi_x_b = np.real(qzb / (1 + wzb))
    return Columns(x, eta, y, w, R, y_theta, phi_t, theta_t, at_surface(tr.psi_x),
                   at_surface(tr.psi_t), at_surface(tr.eta_x), at_surface(tr.G), phi_x_b, s.g, s.H)


def column_densities(c: Columns) -> dict[str, np.ndarray]:
    """Momentum densities and fluxes on the columns.

    ``S1`` is the flux written with the hydrostatic constant dropped (it has
    no x-derivative); ``S1_app`` keeps ``-int g y dy``, i.e. adds ``g H^2 / 2``.
    """
    g = c.g
    R = c.R
    phi_x, phi_y = R.real, -R.imag
    theta_y = c.Y_theta.real
    kin_diff = 0.5 * c.integrate(phi_x ** 2 - phi_y ** 2)
    out = {
        "I1": c.integrate(phi_x),
        "I2": c.eta * c.psi_x,
        "I3": c.integrate(np.real(c.Y_theta * np.conj(R))),
        "S2": -c.eta * c.psi_t - 0.5 * g * c.eta ** 2 + kin_diff,
        "S3": -0.5 * g * c.eta ** 2 - c.integrate(theta_y * c.phi_t)
        + c.integrate(0.5 * (phi_x ** 2 - phi_y ** 2) + c.theta_t * phi_y),
    }
    if np.isfinite(c.H):
        out["S1"] = -c.integrate(c.phi_t) - 0.5 * g * c.eta ** 2 + kin_diff
        out["S1_app"] = out["S1"] + 0.5 * g * c.H ** 2
    return out
