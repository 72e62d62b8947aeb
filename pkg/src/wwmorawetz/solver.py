"""Water waves in holomorphic coordinates: nonlinear and linearized evolution.

Periodic finite depth needs one extra degree of freedom compared with the
line: the mean ``c`` of ``Im Q_alpha / J`` is generally nonzero, and the
holomorphic velocity ``F`` then carries the imaginary constant ``i c``. That
constant moves the bottom of the strip, so the conformal depth
``h = H + l`` evolves with ``l_t = -c`` while the physical depth ``H`` stays
fixed. The stepper advances ``(Re W, Re Q, l)`` and rebuilds the imaginary
parts from holomorphy in the current strip at every stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .conformal import ConformalMap, conformal_depth, map_from_real_part, surface_alpha, to_holomorphic
from .spectral import (
    Grid,
    SpectralField,
    dealias_mask,
    deriv_array,
    project_arrays,
    tilbert_array,
    tilbert_inv_array,
    trig_eval,
)
from .strip import DepthGrid, StripField, _extension_values, extend_holomorphic

__all__ = [
    "HoloState",
    "AuxFields",
    "LinearState",
    "SolverConfig",
    "Trajectory",
    "LinearTrajectory",
    "DegenerateMapError",
    "InstabilityError",
    "aux_fields",
    "gauge_fix",
    "rhs",
    "step_rk4",
    "run",
    "linear_rhs",
    "step_linear",
    "run_linear",
    "energy",
    "momentum",
    "mass",
    "bulk_fields",
    "BulkFields",
    "dtn_nonlinear",
    "linear_mode",
    "wave_packet",
    "dispersion_omega",
    "measure_frequency",
    "eulerian_traces",
]


class DegenerateMapError(RuntimeError):
    """``J = |1 + W_alpha|^2`` dropped below the admissible floor."""


class InstabilityError(RuntimeError):
    """A time step produced non-finite or invariant-violating data."""


def dispersion_omega(k, g: float = 1.0, h: float = 1.0):
    k = np.abs(np.asarray(k, dtype=float))
    return np.sqrt(g * k) if np.isinf(h) else np.sqrt(g * k * np.tanh(h * k))


@dataclass(frozen=True, eq=False)
class HoloState:
    """Holomorphic traces ``(W, Q)`` on the top of a strip of depth ``H + mean(Im W)``."""

    W: SpectralField
    Q: SpectralField
    t: float = 0.0
    g: float = 1.0
    H: float = 1.0

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError("gravity must be positive")
        if not self.H > 0:
            raise ValueError("depth must be positive")

    @property
    def grid(self) -> Grid:
        return self.W.grid

    @property
    def level(self) -> float:
        return float(np.mean(np.imag(self.W.values)))

    @property
    def h(self) -> float:
        return conformal_depth(self.H, self.level)

    @property
    def map(self) -> ConformalMap:
        return ConformalMap(self.W, self.H)

    @classmethod
    def rest(cls, grid: Grid, g: float = 1.0, H: float = 1.0) -> "HoloState":
        z = SpectralField(grid, np.zeros(grid.n, dtype=complex))
        return cls(z, z, 0.0, g, H)

    @classmethod
    def from_real_parts(cls, re_w, re_q, level, grid, t, g, H) -> "HoloState":
        h = conformal_depth(H, level)
        im_w = level - tilbert_array(re_w, grid, h)
        im_q = -tilbert_array(re_q, grid, h)
        return cls(SpectralField(grid, re_w + 1j * im_w), SpectralField(grid, re_q + 1j * im_q), t, g, H)

    def holomorphy_residual(self) -> float:
        g, h = self.grid, self.h
        rw = np.imag(self.W.values) - self.level + tilbert_array(np.real(self.W.values), g, h)
        rq = np.imag(self.Q.values) + tilbert_array(np.real(self.Q.values), g, h)
        return float(max(np.max(np.abs(rw)), np.max(np.abs(rq))))


@dataclass(frozen=True, eq=False)
class AuxFields:
    J: np.ndarray
    R: np.ndarray
    Y: np.ndarray
    F: np.ndarray
    W_alpha: np.ndarray
    Q_alpha: np.ndarray
    c: float

    @property
    def b_adv(self) -> np.ndarray:
        return np.real(self.F)


def aux_fields(s: HoloState, j_floor: float = 1e-6, alpha0: int | None = None,
               dealias: bool = False) -> AuxFields:
    """``J, R, Y, F`` on the top.

    ``F = i c + P_h[2 i (Im Q_alpha / J - c)]`` with ``c`` the mean of
    ``Im Q_alpha / J``; its real part has zero mean unless a gauge point
    ``alpha0`` (grid index) is given.
    """
    grid, h = s.grid, s.h
    wa = deriv_array(s.W.values, grid)
    qa = deriv_array(s.Q.values, grid)
    J = np.abs(1 + wa) ** 2
    if np.min(J) < j_floor:
        raise DegenerateMapError(f"min J = {np.min(J):.3e} below {j_floor}")
    v = np.imag(qa) / J
    if dealias:
        v = _dealias(v, grid)
    c = float(v.mean())
    re_f = -tilbert_inv_array(v - c, grid, h)
    F = re_f + 1j * v
    R = qa / (1 + wa)
    Y = wa / (1 + wa)
    aux = AuxFields(J, R, Y, F, wa, qa, c)
    if alpha0 is not None:
        aux = replace(aux, F=gauge_fix(F, s, alpha0, wa))
    return aux


def gauge_fix(F_raw: np.ndarray, s: HoloState, alpha0: int | None = None,
              W_alpha: np.ndarray | None = None) -> np.ndarray:
    """Shift ``F`` by a real constant.

    With a grid index ``alpha0`` the constant makes ``Re W_t(alpha0) = 0``
    (the Eulerian and holomorphic labels of that surface point stay
    together); without it ``Re F`` is given zero mean.
    """
    F = np.asarray(F_raw, dtype=complex)
    if alpha0 is None:
        return F - np.mean(F.real)
    wa = deriv_array(s.W.values, s.grid) if W_alpha is None else W_alpha
    kappa = -np.real(F[alpha0] * (1 + wa[alpha0])) / (1 + wa[alpha0].real)
    return F + kappa


def _dealias(v: np.ndarray, grid: Grid) -> np.ndarray:
    return np.fft.ifft(np.fft.fft(v) * dealias_mask(grid)).real


def _real_rhs(re_w, re_q, level, grid, g, H, dealias: bool):
    """Time derivatives of ``(Re W, Re Q, level)``."""
    h = conformal_depth(H, level)
    im_w = level - tilbert_array(re_w, grid, h)
    im_q = -tilbert_array(re_q, grid, h)
    wa = deriv_array(re_w + 1j * im_w, grid)
    qa = deriv_array(re_q + 1j * im_q, grid)
    J = np.abs(1 + wa) ** 2
    v = np.imag(qa) / J
    if dealias:
        v = _dealias(v, grid)
    c = v.mean()
    F = -tilbert_inv_array(v - c, grid, h) + 1j * v
    rw = -np.real(F * (1 + wa))
    rq = -np.real(F * qa) - g * im_w - 0.5 * np.abs(qa) ** 2 / J
    if dealias:
        rw = _dealias(rw, grid)
        rq = _dealias(rq, grid)
    return rw, rq, -c


def rhs(s: HoloState, dealias: bool = False) -> tuple[SpectralField, SpectralField]:
    """``(W_t, Q_t)`` in complex form.

    ``W_t = -F (1 + W_alpha)``,
    ``Q_t = -F Q_alpha + g T_h[W] - P_h[|Q_alpha|^2 / J] + C`` where the real
    constant ``C`` fixes the Bernoulli gauge (zero surface pressure). In the
    moving strip the imaginary parts obey
    ``Im W_t = -T_h Re W_t - (dT_h/dh Re W) h_t + l_t`` rather than plain
    holomorphy.
    """
    grid, h, g = s.grid, s.h, s.g
    aux = aux_fields(s, dealias=dealias)
    wa, qa, F = aux.W_alpha, aux.Q_alpha, aux.F
    Wt = -F * (1 + wa)
    u = np.abs(qa) ** 2 / aux.J
    if dealias:
        u = _dealias(u, grid)
    level = s.level
    w_tilde = s.W.values - 1j * level
    tw = tilbert_array(np.real(w_tilde), grid, h) + 1j * tilbert_array(np.imag(w_tilde), grid, h)
    pu = project_arrays(u, np.zeros_like(u), grid, h)
    C = -g * level + 0.5 * u.mean()
    Qt = -F * qa + g * tw - pu + C
    return SpectralField(grid, Wt), SpectralField(grid, Qt)


@dataclass(frozen=True)
class SolverConfig:
    """Numerical parameters of a run (the time stepper is ours, not the model's)."""

    T: float = 10.0
    dt: float | None = 0.01
    cfl: float = 0.5
    dealias: bool = True
    filter_order: int = 36
    filter_strength: float = 0.0
    snapshot_every: int = 1
    holomorphy_tol: float = 1e-8

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl factor must lie in (0, 1]")
        if self.snapshot_every < 1:
            raise ValueError("snapshot cadence must be at least 1")

    def time_step(self, grid: Grid, g: float, h: float, b_max: float = 0.0) -> float:
        if self.dt is not None:
            return self.dt
        # RK4 is stable for |lambda dt| < 2.8 on the imaginary axis
        omega = float(dispersion_omega(grid.k_max, g, h)) + grid.k_max * b_max
        return self.cfl * 2.8 / omega


@dataclass
class Trajectory:
    states: list[HoloState]
    config: SolverConfig
    dt: float

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def grid(self) -> Grid:
        return self.states[0].grid

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]


def _filter(grid: Grid, order: int, strength: float) -> np.ndarray | None:
    if strength <= 0:
        return None
    return np.exp(-strength * (np.abs(grid.k) / grid.k_max) ** order)


def step_rk4(s: HoloState, dt: float, dealias: bool = True, filt: np.ndarray | None = None) -> HoloState:
    grid, g, H = s.grid, s.g, s.H
    y0 = (np.real(s.W.values), np.real(s.Q.values), s.level)

    def f(y):
        return _real_rhs(y[0], y[1], y[2], grid, g, H, dealias)

    def axpy(y, k, a):
        return (y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2])

    k1 = f(y0)
    k2 = f(axpy(y0, k1, dt / 2))
    k3 = f(axpy(y0, k2, dt / 2))
    k4 = f(axpy(y0, k3, dt))
    y = tuple(y0[i] + dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]) for i in range(3))
    re_w, re_q, level = y
    if filt is not None:
        re_w = np.fft.ifft(np.fft.fft(re_w) * filt).real
        re_q = np.fft.ifft(np.fft.fft(re_q) * filt).real
    if not (np.all(np.isfinite(re_w)) and np.all(np.isfinite(re_q)) and np.isfinite(level)):
        raise InstabilityError(f"non-finite state at t = {s.t + dt:.6g}")
    return HoloState.from_real_parts(re_w, re_q, float(level), grid, s.t + dt, g, H)


def run(s0: HoloState, config: SolverConfig) -> Trajectory:
    """Advance to ``config.T`` with fixed steps, recording every ``snapshot_every`` steps."""
    aux = aux_fields(s0)
    dt = config.time_step(s0.grid, s0.g, s0.h, float(np.max(np.abs(aux.b_adv))))
    nsteps = max(1, int(round(config.T / dt)))
    dt = config.T / nsteps
    filt = _filter(s0.grid, config.filter_order, config.filter_strength)
    states = [s0]
    s = s0
    for i in range(1, nsteps + 1):
        s = step_rk4(s, dt, config.dealias, filt)
        wa = deriv_array(np.real(s.W.values), s.grid)
        if np.min(1 + wa) <= 0:
            raise InstabilityError(f"1 + Re W_alpha lost positivity at t = {s.t:.6g}")
        if i % config.snapshot_every == 0 or i == nsteps:
            states.append(s)
    return Trajectory(states, config, dt)


def energy(s: HoloState) -> float:
    """``(g/2) int (Im W)^2 (1 + Re W_alpha) - (1/2) int Re Q Im Q_alpha``."""
    grid = s.grid
    wa = deriv_array(np.real(s.W.values), grid)
    qa = deriv_array(np.imag(s.Q.values), grid)
    im_w = np.imag(s.W.values)
    pot = 0.5 * s.g * np.sum(im_w ** 2 * (1 + wa)) * grid.spacing
    kin = -0.5 * np.sum(np.real(s.Q.values) * qa) * grid.spacing
    return float(pot + kin)


def momentum(s: HoloState) -> float:
    """``int Im W Re Q_alpha``."""
    qa = deriv_array(np.real(s.Q.values), s.grid)
    return float(np.sum(np.imag(s.W.values) * qa) * s.grid.spacing)


def mass(s: HoloState) -> float:
    """``int eta dx = int Im W (1 + Re W_alpha) d alpha``."""
    wa = deriv_array(np.real(s.W.values), s.grid)
    return float(np.sum(np.imag(s.W.values) * (1 + wa)) * s.grid.spacing)


# Derived surface and bulk quantities -------------------------------------------

@dataclass(frozen=True)
class SurfaceTraces:
    """Eulerian quantities sampled at the surface points ``x(alpha_j)``."""

    x: np.ndarray
    eta: np.ndarray
    psi: np.ndarray
    eta_x: np.ndarray
    psi_x: np.ndarray
    G: np.ndarray
    psi_t: np.ndarray
    phi_x: np.ndarray
    phi_y: np.ndarray


def eulerian_traces(s: HoloState, aux: AuxFields | None = None) -> SurfaceTraces:
    """Surface values at ``x = alpha + Re W`` for each grid ``alpha`` (no resampling)."""
    aux = aux or aux_fields(s)
    wa, qa = aux.W_alpha, aux.Q_alpha
    xa = 1 + wa.real
    eta = np.imag(s.W.values)
    psi = np.real(s.Q.values)
    eta_x = wa.imag / xa
    psi_x = qa.real / xa
    G = -qa.imag / xa
    nterm = 0.5 * psi_x ** 2 - 0.5 * (G + eta_x * psi_x) ** 2 / (1 + eta_x ** 2)
    psi_t = -s.g * eta - nterm
    return SurfaceTraces(s.grid.x + np.real(s.W.values), eta, psi, eta_x, psi_x, G, psi_t,
                         aux.R.real, -aux.R.imag)


def dtn_nonlinear(eta: SpectralField, psi: SpectralField, H: float) -> SpectralField:
    """``G(eta) psi = sqrt(1 + eta_x^2) d_n phi`` on the Eulerian grid."""
    s = to_holomorphic(eta, psi, H)
    grid = eta.grid
    qa = deriv_array(s.Q.values, grid)
    wa = deriv_array(np.real(s.W.values), grid)
    vals = -np.imag(qa) / (1 + wa)
    a = surface_alpha(s.map, grid.x)
    c = np.fft.fft(vals) / grid.n
    return SpectralField(grid, trig_eval(c, grid, a, real=True))


@dataclass(frozen=True, eq=False)
class BulkFields:
    """Fields in strip coordinates (values at ``Z(alpha_i + i beta_j)``)."""

    depth: DepthGrid
    Z: np.ndarray
    J: np.ndarray
    phi: StripField
    q: StripField
    theta: StripField
    R: np.ndarray
    Y_theta: np.ndarray
    phi_t: StripField
    theta_t: StripField
    P: StripField


def top_data(s: HoloState, aux: AuxFields | None = None) -> dict:
    """Top traces that generate the time-derivative fields."""
    aux = aux or aux_fields(s)
    h = s.h
    lvl = s.level
    wa = aux.W_alpha
    y_theta = (wa + (0.0 if np.isinf(h) else lvl / h)) / (1 + wa)
    phi_t = -s.g * np.imag(s.W.values) - 0.5 * np.abs(aux.R) ** 2
    grad_theta_phi = np.imag(y_theta * np.conj(aux.R))
    return {"phi_t": phi_t, "theta_t_correction": grad_theta_phi, "Y_theta": y_theta}


def bulk_fields(s: HoloState, depth: DepthGrid | None = None) -> BulkFields:
    """``phi, q, theta, phi_t, theta_t`` and the pressure on the strip tensor grid.

    ``phi_t`` is the Neumann extension of ``-g eta - |R|^2/2``;
    ``theta_t = phi_y - H_D(grad theta . grad phi)``; the pressure follows from
    Bernoulli, ``P = -(phi_t + |grad phi|^2/2 + g y)``.
    """
    grid = s.grid
    h = s.h
    if depth is None:
        depth = DepthGrid.for_grid(grid, h)
    elif depth.h != h:
        depth = DepthGrid.gauss(h, depth.order, 1, False, depth.h_eff if np.isinf(h) else None)
    aux = aux_fields(s)
    n = grid.n
    wext = extend_holomorphic(s.W, depth, s.level)
    qext = extend_holomorphic(s.Q, depth, 0.0)
    wa_top = aux.W_alpha
    qa_top = aux.Q_alpha
    wz = extend_holomorphic(SpectralField(grid, wa_top), depth, 0.0).values
    qz = extend_holomorphic(SpectralField(grid, qa_top), depth, 0.0).values
    Z = grid.x[:, None] + 1j * depth.nodes[None, :] + wext.values
    R = qz / (1 + wz)
    lvl_h = 0.0 if np.isinf(h) else s.level / h
    y_theta = (wz + lvl_h) / (1 + wz)
    td = top_data(s, aux)

    def neumann(top):
        c = np.fft.fft(top) / n
        return StripField(grid, depth, _extension_values(c, grid, depth.nodes, h, "neumann").real,
                          "neumann-bottom", c, "neumann")

    def dirichlet(top):
        c = np.fft.fft(top) / n
        return StripField(grid, depth, _extension_values(c, grid, depth.nodes, h, "dirichlet").real,
                          "dirichlet-bottom", c, "dirichlet")

    phi = StripField(grid, depth, qext.values.real, "neumann-bottom",
                     np.fft.fft(np.real(s.Q.values)) / n, "neumann")
    q = dirichlet(np.imag(s.Q.values))
    theta = dirichlet(np.imag(s.W.values))
    phi_t = neumann(td["phi_t"])
    corr = dirichlet(td["theta_t_correction"])
    theta_t = StripField(grid, depth, -R.imag - corr.values, "dirichlet-bottom")
    P = -(phi_t.values + 0.5 * np.abs(R) ** 2 + s.g * Z.imag)
    J = np.abs(1 + wz) ** 2
    return BulkFields(depth, Z, J, phi, q, theta, R, y_theta, phi_t, theta_t,
                      StripField(grid, depth, P, "none"))


# Linear system ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LinearState:
    eta: SpectralField
    psi: SpectralField
    t: float = 0.0
    g: float = 1.0
    h: float = 1.0

    def __post_init__(self):
        if not (self.eta.realness and self.psi.realness):
            raise ValueError("linear state must be real")

    @property
    def grid(self) -> Grid:
        return self.eta.grid

    def energy(self) -> float:
        ep = 0.5 * self.g * np.sum(self.eta.values ** 2) * self.grid.spacing
        tp = tilbert_array(deriv_array(self.psi.values, self.grid), self.grid, self.h)
        return float(ep + 0.5 * np.sum(tp * self.psi.values) * self.grid.spacing)


def linear_rhs(s: LinearState) -> tuple[SpectralField, SpectralField]:
    """``eta_t = T_h d_x psi``, ``psi_t = -g eta``."""
    grid = s.grid
    eta_t = tilbert_array(deriv_array(s.psi.values, grid), grid, s.h)
    return SpectralField(grid, eta_t), SpectralField(grid, -s.g * s.eta.values)


def step_linear(s: LinearState, dt: float) -> LinearState:
    grid = s.grid

    def f(e, p):
        return tilbert_array(deriv_array(p, grid), grid, s.h), -s.g * e

    e0, p0 = s.eta.values, s.psi.values
    a1, b1 = f(e0, p0)
    a2, b2 = f(e0 + dt / 2 * a1, p0 + dt / 2 * b1)
    a3, b3 = f(e0 + dt / 2 * a2, p0 + dt / 2 * b2)
    a4, b4 = f(e0 + dt * a3, p0 + dt * b3)
    e = e0 + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
    p = p0 + dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
    return LinearState(SpectralField(grid, e), SpectralField(grid, p), s.t + dt, s.g, s.h)


@dataclass
class LinearTrajectory:
    states: list[LinearState]
    dt: float

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def grid(self) -> Grid:
        return self.states[0].grid

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]


def run_linear(s0: LinearState, T: float, dt: float, snapshot_every: int = 1) -> LinearTrajectory:
    nsteps = max(1, int(round(T / dt)))
    dt = T / nsteps
    states = [s0]
    s = s0
    for i in range(1, nsteps + 1):
        s = step_linear(s, dt)
        if i % snapshot_every == 0 or i == nsteps:
            states.append(s)
    return LinearTrajectory(states, dt)


def measure_frequency(series: np.ndarray, dt: float) -> float:
    """Frequency of a sampled pure oscillation from the three-term recurrence.

    ``x_{n+1} + x_{n-1} = 2 cos(omega dt) x_n`` holds exactly for
    ``cos(omega n dt + phase)``; the cosine is fitted by least squares.
    """
    x = np.asarray(series, dtype=float)
    num = np.sum(x[1:-1] * (x[2:] + x[:-2]))
    den = 2 * np.sum(x[1:-1] ** 2)
    return float(np.arccos(np.clip(num / den, -1, 1)) / dt)


# Initial data -----------------------------------------------------------------

def linear_mode(grid: Grid, k: int, a: float, g: float = 1.0, h: float = 1.0,
                kind: Literal["traveling", "standing"] = "traveling"):
    """Linear eigen-solution at ``t = 0``: ``eta = a cos(kx)`` with matching ``psi``."""
    kk = grid.dk * k
    om = float(dispersion_omega(kk, g, h))
    x = grid.x - grid.x0
    eta = a * np.cos(kk * x)
    psi = (g * a / om) * np.sin(kk * x) if kind == "traveling" else np.zeros(grid.n)
    return SpectralField(grid, eta), SpectralField(grid, psi)


def wave_packet(grid: Grid, k0: float, a: float, width: float, center: float = 0.0,
                g: float = 1.0, h: float = 1.0):
    """Right-moving linear wave packet ``eta = a exp(-(x-c)^2/(2 w^2)) cos(k0 (x-c))``.

    ``psi`` is built mode by mode so that each Fourier component travels in
    the direction of its wavenumber sign.
    """
    x = grid.x
    env = a * np.exp(-((x - center) ** 2) / (2 * width ** 2))
    z = env * np.exp(1j * k0 * (x - center))
    zc = np.fft.fft(z)
    k = grid.k
    zc[k <= 0] = 0
    eta_c = zc
    om = dispersion_omega(k, g, h)
    eta_hat = np.fft.fft(np.real(np.fft.ifft(eta_c)))
    # traveling to the right: psi_hat = -i g / omega * sgn(k) eta_hat
    with np.errstate(divide="ignore", invalid="ignore"):
        psi_hat = np.where(om > 0, -1j * g * np.sign(k) / om * eta_hat, 0.0)
    psi_hat[grid.nyquist_index] = 0
    eta_hat[grid.nyquist_index] = 0
    eta = np.fft.ifft(eta_hat).real
    psi = np.fft.ifft(psi_hat).real
    return SpectralField(grid, eta), SpectralField(grid, psi)
