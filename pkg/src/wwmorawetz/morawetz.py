"""Morawetz diagnostics: weights, momentum densities and fluxes, local energy.

Everything is computed on the periodic window ``[a, a + L)`` with ``a = x0``
of the grid. A Morawetz weight ``m`` is not periodic (it increases by
``dm = m(a+L) - m(a)`` across the window) while ``m_x`` is. Weighted
integrals therefore use the split

    m(x) = m_per(x) + dm (x - a) / L,

with ``m_per`` periodic, and the linear moment ``int_a^{a+L} (x - a) F dx``
is taken exactly from the Fourier coefficients of ``F``. Integrating
``d_t I + d_x S = 0`` against ``m`` over the window then gives the closed
torus identity

    d/dt int m I dx = int m_x S dx - dm S(a).

Two frames are offered. The Eulerian frame samples vertical columns with
:func:`sample_columns`. The holomorphic frame writes the same Eulerian
integrals through the change of variables ``(x, y) = Z(alpha + i beta)``
(``dx dy = J dalpha dbeta``) on the strip tensor grid, which is exact and
much cheaper; only ``S(a)`` needs one Eulerian column.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.special import hyp2f1

from .columns import column_densities, sample_columns
from .conformal import LocateError, surface_alpha, to_holomorphic
from .kernel import symbol_bh
from .solver import (
    HoloState,
    LinearState,
    LinearTrajectory,
    Trajectory,
    aux_fields,
    bulk_fields,
    eulerian_traces,
    linear_rhs,
)
from .spectral import (
    Grid,
    SpectralField,
    bilinear_multiplier,
    block_norms,
    deriv_array,
    envelope_from_norms,
    lp_block,
    sobolev_norm_h,
    trig_eval,
)
from .strip import DepthGrid, _extension_values, extend_holomorphic

__all__ = [
    "NonIntegrableWeightError",
    "Weight",
    "make_weight",
    "DensityFluxSeries",
    "density_flux",
    "ResidualSeries",
    "conservation_residual",
    "MorawetzFunctional",
    "morawetz_functional",
    "qm_direct",
    "qm_symbol",
    "e14_norm",
    "LocalEnergyReport",
    "local_energy",
    "XNormReport",
    "x_norm",
    "x_norm_trajectory",
    "IdentityResidual",
    "verify_L33",
    "verify_C6",
    "VirialReport",
    "virial_check",
    "LinearIdentityReport",
    "linear_identities",
    "NormalFormReport",
    "normal_form_density",
    "strip_densities",
]


class NonIntegrableWeightError(ValueError):
    """``m_x = (1 + eps^2 x^2)^{-r}`` is not integrable for ``r <= 1/2``."""


# Weights ------------------------------------------------------------------------

def _wrap(x, a: float, L: float) -> np.ndarray:
    return a + np.mod(np.asarray(x, dtype=float) - a, L)


def mass_spectrum(xs, vals, a: float, L: float, n: int, tol: float = 1e-15) -> np.ndarray:
    """Fourier coefficients ``F_k = (1/L) sum vals e^{-ik(x-a)}`` of a density given as masses.

    Returned in FFT order for the ``n`` grid wavenumbers (Nyquist set to 0).
    Modes are accumulated in blocks of 8 and the sum stops once a whole
    block falls below ``tol`` times the largest coefficient so far (smooth
    densities have spectrally decaying coefficients; what is dropped is at
    the roundoff floor).
    """
    xs = np.ravel(xs) - a
    vals = np.ravel(vals)
    dk = 2 * np.pi / L
    c = np.zeros(n, dtype=complex)
    c[0] = np.sum(vals)
    e1 = np.exp(-1j * dk * xs)
    e = np.ones_like(e1)
    block = 8
    for j in range(1, n // 2):
        e = e * e1
        c[j] = np.dot(vals, e)
        c[-j] = np.conj(c[j])
        if j % block == 0 and np.max(np.abs(c[j - block + 1: j + 1])) < tol * np.max(np.abs(c[:j + 1])):
            break
    return c / L


def _is_grid(xs, a: float, L: float, n: int) -> bool:
    xs = np.ravel(xs)
    return xs.size == n and np.allclose(xs, a + L * np.arange(n) / n, rtol=0, atol=1e-12 * L)


@dataclass(frozen=True, eq=False)
class Weight:
    """A nondecreasing weight ``m`` on the window ``[a, a + L)`` of an ``n``-point grid.

    ``m_x`` and ``m_xx`` are evaluated periodically; ``m`` itself is the true
    (non-periodic) function. ``mx_hat`` holds the exact Fourier coefficients
    of the periodized ``m_x`` and ``mper_hat`` those of ``m_per``, so
    weighted integrals of band-limited densities are exact even though the
    weights are only finitely smooth on the torus.
    """

    kind: str
    params: dict
    a: float
    period: float
    n: int
    _m: Callable = field(repr=False)
    _mx: Callable = field(repr=False)
    _mxx: Callable = field(repr=False)
    mx_hat: np.ndarray = field(repr=False)
    mper_hat: np.ndarray = field(repr=False)

    def m(self, x) -> np.ndarray:
        return self._m(np.asarray(x, dtype=float))

    def m_x(self, x) -> np.ndarray:
        return self._mx(_wrap(x, self.a, self.period))

    def m_xx(self, x) -> np.ndarray:
        return self._mxx(_wrap(x, self.a, self.period))

    @property
    def delta_m(self) -> float:
        return float(self._m(np.array(self.a + self.period)) - self._m(np.array(self.a)))

    def m_per(self, x) -> np.ndarray:
        xw = _wrap(x, self.a, self.period)
        return self._m(xw) - self.delta_m * (xw - self.a) / self.period

    def slope_ratio(self, grid: Grid) -> float:
        """``max |m_xx| / m_x`` over the grid (``eps r`` bounds it for the rational kind)."""
        mx = self.m_x(grid.x)
        mxx = self.m_xx(grid.x)
        ok = mx > 0
        return float(np.max(np.abs(mxx[ok]) / mx[ok])) if np.any(ok) else 0.0

    def hypothesis_iii(self, depth: float, eta_sup: float) -> float:
        """``eps r (h + ||eta||_inf)``; the virial theorem asks for ``<= 1/42``."""
        if self.kind != "rational":
            raise ValueError("hypothesis (iii) concerns the rational weight")
        return float(self.params["eps"] * self.params["r"] * (depth + eta_sup))

    # weighted integrals ------------------------------------------------------

    def spectrum(self, xs, vals) -> np.ndarray:
        if _is_grid(xs, self.a, self.period, self.n):
            c = np.fft.fft(np.ravel(vals)) / self.period
            c[self.n // 2] = 0.0
            return c
        return mass_spectrum(xs, vals, self.a, self.period, self.n)

    def integrate_spectrum(self, F: np.ndarray) -> float:
        """``int_window m F dx`` from the coefficients of ``F`` about ``a``."""
        L = self.period
        out = L * np.real(np.sum(np.conj(self.mper_hat) * F))
        dm = self.delta_m
        if dm != 0.0:
            half = self.n // 2
            j = np.arange(1, half)
            k = 2 * np.pi * j / L
            moment = 0.5 * L ** 2 * F[0].real + 2 * L * np.sum(F[1:half].imag / k)
            out += dm / L * moment
        return float(out)

    def integrate_x_spectrum(self, F: np.ndarray) -> float:
        return float(self.period * np.real(np.sum(np.conj(self.mx_hat) * F)))

    def integrate(self, xs, vals) -> float:
        """``int m f dx`` over the window; ``f`` given as point masses ``vals`` at ``xs``.

        The masses must be a spectrally accurate quadrature of a smooth
        periodic density over one period.
        """
        return self.integrate_spectrum(self.spectrum(xs, vals))

    def integrate_x(self, xs, vals) -> float:
        """``int m_x f dx`` over the window."""
        return self.integrate_x_spectrum(self.spectrum(xs, vals))


def _rational_m(eps: float, r: float, c: float):
    def m(x):
        s = np.asarray(x, dtype=float) - c
        if r == 1.0:
            return np.arctan(eps * s) / eps
        return s * hyp2f1(0.5, r, 1.5, -(eps * s) ** 2)

    def mx(x):
        s = np.asarray(x, dtype=float) - c
        return (1 + (eps * s) ** 2) ** (-r)

    def mxx(x):
        s = np.asarray(x, dtype=float) - c
        return -2 * r * eps ** 2 * s * (1 + (eps * s) ** 2) ** (-r - 1)

    return m, mx, mxx


def _bump_m(width: float, c: float):
    w = width

    def inside(x):
        return np.abs(np.asarray(x, dtype=float) - c) < w / 2

    def m(x):
        x = np.asarray(x, dtype=float)
        s = np.clip(x - c, -w / 2, w / 2)
        return (s + w / 2) / w + np.sin(2 * np.pi * s / w) / (2 * np.pi)

    def mx(x):
        x = np.asarray(x, dtype=float)
        return np.where(inside(x), (1 + np.cos(2 * np.pi * (x - c) / w)) / w, 0.0)

    def mxx(x):
        x = np.asarray(x, dtype=float)
        return np.where(inside(x), -(2 * np.pi / w ** 2) * np.sin(2 * np.pi * (x - c) / w), 0.0)

    return m, mx, mxx


def _bump_hat(grid: Grid, width: float, c: float) -> np.ndarray:
    """Exact coefficients of the periodized raised-cosine ``m_x``."""
    k = grid.k
    u = k * width / (2 * np.pi)
    G = np.sinc(u) + 0.5 * (np.sinc(1 - u) + np.sinc(1 + u))
    out = G * np.exp(-1j * k * (c - grid.x0)) / grid.period
    out[grid.nyquist_index] = 0.0
    return out


def _quadrature_hat(f: Callable, grid: Grid, order: int = 32) -> np.ndarray:
    """``(1/L) int_a^{a+L} f(x) e^{-ik(x-a)} dx`` by composite Gauss-Legendre."""
    panels = max(64, grid.n // 2)
    t, wt = np.polynomial.legendre.leggauss(order)
    edges = grid.x0 + grid.period * np.arange(panels + 1) / panels
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    w = (half[:, None] * wt[None, :]).ravel()
    fx = f(x) * w
    E = np.exp(-1j * np.outer(grid.k, x - grid.x0))
    out = E @ fx / grid.period
    out[grid.nyquist_index] = 0.0
    return out


def make_weight(kind: Literal["rational", "bump"], grid: Grid, *, eps: float | None = None,
                r: float = 1.0, width: float = 2.0, center: float = 0.0) -> Weight:
    """Rational weight ``m = int_c^x (1 + eps^2 s^2)^{-r} ds`` or a raised-cosine bump.

    The bump has ``m_x = (1 + cos(2 pi (x - c)/w)) / w`` on ``|x - c| < w/2``,
    so ``int m_x = 1`` and ``m`` climbs from 0 to 1.
    """
    a, L = grid.x0, grid.period
    if kind == "rational":
        if eps is None or not eps > 0:
            raise ValueError(f"rational weight needs eps > 0, got {eps}")
        if not r > 0.5:
            raise NonIntegrableWeightError(f"rational weight needs r > 1/2, got r = {r}")
        fns = _rational_m(float(eps), float(r), float(center))
        params = {"eps": float(eps), "r": float(r), "center": float(center)}
        mx_hat = _quadrature_hat(fns[1], grid)
    elif kind == "bump":
        if not width >= 2 * grid.spacing:
            raise ValueError(f"bump width {width} is below two grid cells ({2 * grid.spacing:.3g})")
        if width > L:
            raise ValueError("bump wider than the periodic window")
        fns = _bump_m(float(width), float(center))
        params = {"width": float(width), "center": float(center)}
        mx_hat = _bump_hat(grid, float(width), float(center))
    else:
        raise ValueError(f"unknown weight kind {kind!r}")
    dm = float(fns[0](np.array(a + L)) - fns[0](np.array(a)))
    # m_per' = m_x - dm / L, so its coefficients follow from those of m_x
    k = grid.k
    mper_hat = np.zeros(grid.n, dtype=complex)
    nz = k != 0
    mper_hat[nz] = mx_hat[nz] / (1j * k[nz])
    mper_hat[grid.nyquist_index] = 0.0
    mper_hat[0] = _quadrature_hat(lambda x: fns[0](x) - dm * (x - a) / L, grid)[0]
    return Weight(kind, params, a, L, grid.n, *fns, mx_hat, mper_hat)


# Strip-frame densities ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class _Masses:
    """A density given as point masses on the surface and on the strip tensor grid."""

    top_x: np.ndarray
    top: np.ndarray
    bulk_x: np.ndarray | None = None
    bulk: np.ndarray | None = None

    def points(self):
        if self.bulk is None:
            return self.top_x, self.top
        return (np.concatenate([self.top_x, self.bulk_x.ravel()]),
                np.concatenate([self.top, self.bulk.ravel()]))

    def total(self) -> float:
        return float(np.sum(self.top) + (0.0 if self.bulk is None else np.sum(self.bulk)))

    def columns(self) -> np.ndarray:
        """Mass per alpha-column."""
        return self.top + (0.0 if self.bulk is None else self.bulk.sum(axis=1))

    def weighted(self, w: Weight, derivative: bool) -> float:
        xs, vs = self.points()
        return w.integrate_x(xs, vs) if derivative else w.integrate(xs, vs)


def _depth_for(s: HoloState, order: int) -> DepthGrid:
    return DepthGrid.for_grid(s.grid, s.h, order=order)


def _light_bulk(s: HoloState, aux, depth: DepthGrid):
    """``Re Z``, ``R`` and ``J`` on the tensor grid (enough for the pair I2, S2)."""
    grid = s.grid
    wz = extend_holomorphic(SpectralField(grid, aux.W_alpha), depth, 0.0).values
    qz = extend_holomorphic(SpectralField(grid, aux.Q_alpha), depth, 0.0).values
    coeffs = np.fft.fft(np.real(s.W.values)) / grid.n
    re_w = _extension_values(coeffs, grid, depth.nodes, s.h, "neumann").real
    return grid.x[:, None] + re_w, qz / (1 + wz), np.abs(1 + wz) ** 2, depth


def strip_densities(s: HoloState, which: Iterable[str] = ("1", "2", "3"),
                    order: int = 16, bulk=None) -> dict[str, tuple[_Masses, _Masses]]:
    """``(I, S)`` mass representations for each requested density.

    Keys ``"1"``, ``"1app"`` (flux with the hydrostatic constant), ``"2"``, ``"3"``.
    """
    which = tuple(which)
    grid = s.grid
    aux = aux_fields(s)
    tr = eulerian_traces(s, aux)
    da = grid.spacing
    xa = 1 + aux.W_alpha.real
    eta = np.imag(s.W.values)
    top_x = tr.x
    g = s.g
    pot = -0.5 * g * eta ** 2 * xa * da
    out: dict[str, tuple[_Masses, _Masses]] = {}
    if bulk is None and which == ("2",):
        X, R, J, depth = _light_bulk(s, aux, _depth_for(s, order))
    else:
        if bulk is None:
            bulk = bulk_fields(s, _depth_for(s, order))
        X, R, J, depth = bulk.Z.real, bulk.R, bulk.J, bulk.depth
    dA = J * depth.weights[None, :] * da
    half_kin = 0.5 * np.real(R ** 2) * dA
    for w in which:
        if w == "2":
            I = _Masses(top_x, eta * aux.Q_alpha.real * da)
            S = _Masses(top_x, -eta * tr.psi_t * xa * da + pot, X, half_kin)
        elif w in ("1", "1app"):
            if np.isinf(s.H):
                raise ValueError("I1/S1 need finite depth")
            I = _Masses(top_x, np.zeros(grid.n), X, R.real * dA)
            top = pot + (0.5 * g * s.H ** 2 * xa * da if w == "1app" else 0.0)
            S = _Masses(top_x, top, X, -bulk.phi_t.values * dA + half_kin)
        elif w == "3":
            Y = bulk.Y_theta
            I = _Masses(top_x, np.zeros(grid.n), X, np.real(Y * np.conj(R)) * dA)
            phi_y = -R.imag
            S = _Masses(top_x, pot, X,
                        (-Y.real * bulk.phi_t.values + bulk.theta_t.values * phi_y) * dA + half_kin)
        else:
            raise ValueError(f"unknown density {w!r}")
        out[w] = (I, S)
    return out


# Density / flux series ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DensityFluxSeries:
    """``I(t, x)`` and ``S(t, x)`` over snapshots.

    Eulerian frame: values on the grid abscissae ``coords``. Holomorphic
    frame: per-alpha column densities located at ``coords = x(alpha)``; in
    both frames ``sum(I[n]) * spacing`` is ``int I dx``. ``S_a`` is the flux
    at the window edge ``x = a``; ``mI`` and ``flux`` (``int m I``,
    ``int m_x S``) are filled when a weight was supplied.
    """

    which: str
    frame: str
    times: np.ndarray
    coords: np.ndarray
    I: np.ndarray
    S: np.ndarray
    S_a: np.ndarray
    spacing: float
    weight: Weight | None = None
    mI: np.ndarray | None = None
    flux: np.ndarray | None = None
    masked: int = 0

    def momentum(self) -> np.ndarray:
        return np.sum(self.I, axis=1) * self.spacing


def _edge_flux(s: HoloState, which: str, ny: int) -> float:
    a = np.array([s.grid.x0])
    d = column_densities(sample_columns(s, ny=ny, x=a, bottom=False))
    key = {"1": "S1", "1app": "S1_app", "2": "S2", "3": "S3"}[which]
    return float(d[key][0])


def _eulerian_snapshot(s: HoloState, ny: int):
    try:
        return column_densities(sample_columns(s, ny=ny, bottom=False)), 0
    except LocateError:
        pass
    # column by column; failures are masked
    n = s.grid.n
    keys = ("I1", "I2", "I3", "S1", "S1_app", "S2", "S3")
    res = {k: np.full(n, np.nan) for k in keys}
    bad = 0
    for j, xj in enumerate(s.grid.x):
        try:
            d = column_densities(sample_columns(s, ny=ny, x=np.array([xj]), bottom=False))
        except LocateError:
            bad += 1
            continue
        for k, v in d.items():
            res[k][j] = v[0]
    return res, bad


def _states(traj) -> list:
    return list(traj.states) if hasattr(traj, "states") else list(traj)


def density_flux(trajectory, which: int | str, frame: Literal["eulerian", "holomorphic"] = "eulerian",
                 weight: Weight | None = None, ny: int = 16, order: int = 16,
                 every: int = 1) -> DensityFluxSeries:
    """Momentum density / flux pair ``which`` (1, 2, 3 or "1app") along a trajectory."""
    which = str(which)
    states = _states(trajectory)[::every]
    times = np.array([s.t for s in states])
    grid = states[0].grid
    if frame == "eulerian":
        key_i = {"1": "I1", "1app": "I1", "2": "I2", "3": "I3"}[which]
        key_s = {"1": "S1", "1app": "S1_app", "2": "S2", "3": "S3"}[which]
        Is, Ss, masked = [], [], 0
        for s in states:
            d, bad = _eulerian_snapshot(s, ny)
            masked += bad
            Is.append(d[key_i])
            Ss.append(d[key_s])
        I, S = np.array(Is), np.array(Ss)
        coords = np.broadcast_to(grid.x, I.shape).copy()
        mI = flux = None
        if weight is not None:
            dx = grid.spacing
            mI = np.array([weight.integrate(grid.x, row * dx) for row in I])
            flux = np.array([weight.integrate_x(grid.x, row * dx) for row in S])
        return DensityFluxSeries(which, frame, times, coords, I, S, S[:, 0].copy(), grid.spacing,
                                 weight, mI, flux, masked)
    if frame != "holomorphic":
        raise ValueError(f"unknown frame {frame!r}")
    if weight is None:
        raise ValueError("the holomorphic frame computes weighted integrals and needs a weight")
    Is, Ss, X, Sa, mI, flux = [], [], [], [], [], []
    for s in states:
        I_m, S_m = strip_densities(s, (which,), order)[which]
        Is.append(I_m.columns() / grid.spacing)
        Ss.append(S_m.columns() / grid.spacing)
        X.append(I_m.top_x)
        mI.append(I_m.weighted(weight, False))
        flux.append(S_m.weighted(weight, True))
        Sa.append(_edge_flux(s, which, ny) if weight.delta_m != 0 else 0.0)
    return DensityFluxSeries(which, frame, times, np.array(X), np.array(Is), np.array(Ss),
                             np.array(Sa), grid.spacing, weight, np.array(mI), np.array(flux))


@dataclass(frozen=True)
class ResidualSeries:
    """``r(t) = int m I dx |_0^t - int_0^t (int m_x S dx - dm S(a)) dt``."""

    times: np.ndarray
    density_change: np.ndarray
    flux_integral: np.ndarray
    residual: np.ndarray
    relative: np.ndarray

    @property
    def final(self) -> float:
        return float(self.relative[-1])

    @property
    def max_relative(self) -> float:
        return float(np.max(self.relative))


def conservation_residual(series: DensityFluxSeries, weight: Weight | None = None,
                          floor: float = 1e-300) -> ResidualSeries:
    """Integrated local conservation law with trapezoid time quadrature.

    The relative residual divides ``|r(t)|`` by the running maximum over
    ``[0, t]`` of the larger of the two terms, which avoids dividing by a
    term that happens to cross zero.
    """
    if len(series.times) < 3:
        raise ValueError("need at least three snapshots")
    if weight is None:
        weight = series.weight
    if weight is None:
        raise ValueError("no weight given")
    if series.mI is not None and series.weight is weight:
        mI, flux = series.mI, series.flux
    else:
        if series.frame != "eulerian":
            raise ValueError("holomorphic series carry their own weight")
        dx = series.spacing
        x = series.coords[0]
        mI = np.array([weight.integrate(x, row * dx) for row in series.I])
        flux = np.array([weight.integrate_x(x, row * dx) for row in series.S])
    closed = flux - weight.delta_m * series.S_a
    dI = mI - mI[0]
    F = cumulative_trapezoid(closed, series.times, initial=0.0)
    r = dI - F
    scale = np.maximum.accumulate(np.maximum(np.abs(dI), np.abs(F)))
    rel = np.abs(r) / np.maximum(scale, floor)
    rel[0] = 0.0
    return ResidualSeries(series.times, dI, F, r, rel)


# Morawetz functional ---------------------------------------------------------------

def e14_norm(eta: SpectralField, psi: SpectralField, g: float, h: float) -> float:
    """``(g^{1/2} ||eta||^2_{H^{1/4}_h} + g^{-1/2} ||psi||^2_{Hdot^{3/4}_h})^{1/2}``."""
    a = sobolev_norm_h(eta, "H1/4_h-cap", h)
    b = sobolev_norm_h(psi, "H3/4_h-sum", h)
    return float(np.sqrt(np.sqrt(g) * a ** 2 + b ** 2 / np.sqrt(g)))


def _eulerian_surface(s: HoloState) -> tuple[SpectralField, SpectralField]:
    """``eta`` and ``psi`` resampled on the Eulerian grid."""
    grid = s.grid
    a = surface_alpha(s.map, grid.x)
    n = grid.n
    eta = trig_eval(np.fft.fft(np.imag(s.W.values)) / n, grid, a, real=True)
    psi = trig_eval(np.fft.fft(np.real(s.Q.values)) / n, grid, a, real=True)
    return SpectralField(grid, eta), SpectralField(grid, psi)


def _endpoint_e14(state) -> float:
    if isinstance(state, LinearState):
        return e14_norm(state.eta, state.psi, state.g, state.h)
    eta, psi = _eulerian_surface(state)
    return e14_norm(eta, psi, state.g, state.H)


def time_derivative(f: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Fourth-order finite differences on uniform snapshots (second order otherwise)."""
    f = np.asarray(f, dtype=float)
    dt = np.diff(t)
    if len(f) < 5 or not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        return np.gradient(f, t, edge_order=2)
    h = dt[0]
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    c = np.array([-25, 48, -36, 16, -3]) / (12 * h)
    e = np.array([-3, -10, 18, -6, 1]) / (12 * h)
    d[0] = c @ f[:5]
    d[1] = e @ f[:5]
    d[-1] = -(c @ f[::-1][:5])
    d[-2] = -(e @ f[::-1][:5])
    return d


@dataclass(frozen=True)
class MorawetzFunctional:
    """``I_m^sigma(t)``, its flux-form derivative and their finite-difference mismatch."""

    sigma: float
    times: np.ndarray
    value: np.ndarray
    derivative: np.ndarray
    fd_mismatch: float
    bound_ratio: np.ndarray

    @property
    def max_bound_ratio(self) -> float:
        return float(np.max(self.bound_ratio))


def morawetz_functional(trajectory, sigma: float, weight: Weight, order: int = 16,
                        ny: int = 16) -> MorawetzFunctional:
    """``sigma int m I2 + (1 - sigma) int m I3`` and ``sigma F2 + (1 - sigma) F3``.

    ``F_j = int m_x S_j - dm S_j(a)`` is the closed flux. The mismatch is
    ``max |d/dt I - F| / max |F|`` with fourth-order differences in time.
    """
    if not 0.0 <= sigma <= 1.0:
        raise ValueError("sigma must lie in [0, 1]")
    states = _states(trajectory)
    which = ("2",) if sigma == 1.0 else ("2", "3")
    times = np.array([s.t for s in states])
    val, der, ratio = [], [], []
    coef = {"2": sigma, "3": 1.0 - sigma}
    for s in states:
        d = strip_densities(s, which, order)
        v = f = 0.0
        for w in which:
            I_m, S_m = d[w]
            v += coef[w] * I_m.weighted(weight, False)
            fw = S_m.weighted(weight, True)
            if weight.delta_m != 0:
                fw -= weight.delta_m * _edge_flux(s, w, ny)
            f += coef[w] * fw
        val.append(v)
        der.append(f)
        e = _endpoint_e14(s)
        ratio.append(abs(v) / e ** 2 if e > 0 else 0.0)
    val, der = np.array(val), np.array(der)
    if len(times) >= 3:
        fd = time_derivative(val, times)
        scale = max(np.max(np.abs(der)), 1e-300)
        mismatch = float(np.max(np.abs(fd - der)) / scale) if np.any(der) or np.any(fd) else 0.0
    else:
        mismatch = float("nan")
    return MorawetzFunctional(sigma, times, val, der, mismatch, np.array(ratio))


# Q_m two ways ---------------------------------------------------------------------

def _flat_depth(grid: Grid, h: float, depth: DepthGrid | None, order: int = 48) -> DepthGrid:
    return depth if depth is not None else DepthGrid.for_grid(grid, h, order=order)


def qm_direct(eta: SpectralField, weight: Weight, h: float, depth: DepthGrid | None = None) -> float:
    """``iint m (N_y D_x - N_x D_y) dy dx`` over the flat strip window.

    ``N = H_N(eta)``, ``D = H_D(eta)``. The y-rule is Gauss-Legendre; the
    x-integral uses the weight split so the result is exact for band
    limited data.
    """
    grid = eta.grid
    if np.isinf(h):
        return 0.0
    depth = _flat_depth(grid, h, depth)
    c = eta.coeffs
    b = depth.nodes
    Nx = _extension_values(c, grid, b, h, "neumann", dalpha=1).real
    Ny = _extension_values(c, grid, b, h, "neumann", dbeta=1).real
    Dx = _extension_values(c, grid, b, h, "dirichlet", dalpha=1).real
    Dy = _extension_values(c, grid, b, h, "dirichlet", dbeta=1).real
    col = (Ny * Dx - Nx * Dy) @ depth.weights
    return weight.integrate(grid.x, col * grid.spacing)


def qm_symbol(eta: SpectralField, weight: Weight, h: float) -> float:
    """``int m_x B^h(eta, eta) dx - dm B^h(eta, eta)(a)`` via the bilinear symbol."""
    grid = eta.grid
    if np.isinf(h):
        return 0.0
    B = bilinear_multiplier(lambda x, z: symbol_bh(x, z, h), eta)
    vals = np.real(B.values)
    return weight.integrate_x(grid.x, vals * grid.spacing) - weight.delta_m * float(vals[0])


# Local energy ------------------------------------------------------------------------

def default_window(grid: Grid, width: float = 2.0) -> Weight:
    """Raised-cosine ``chi`` of width 2 with ``int chi = 1``, centered at 0."""
    return make_weight("bump", grid, width=width, center=0.0)


def _energy_masses(s, depth_order: int = 16):
    """Point masses of ``g eta^2`` (surface) and ``|grad phi|^2`` (bulk)."""
    grid = s.grid
    if isinstance(s, LinearState):
        depth = DepthGrid.for_grid(grid, s.h, order=depth_order)
        c = s.psi.coeffs
        px = _extension_values(c, grid, depth.nodes, s.h, "neumann", dalpha=1).real
        py = _extension_values(c, grid, depth.nodes, s.h, "neumann", dbeta=1).real
        X = np.broadcast_to(grid.x[:, None], px.shape)
        bulk = (px ** 2 + py ** 2) * depth.weights[None, :] * grid.spacing
        top = s.g * s.eta.values ** 2 * grid.spacing
        return grid.x, top, X, bulk
    aux = aux_fields(s)
    bf = bulk_fields(s, _depth_for(s, depth_order))
    da = grid.spacing
    xa = 1 + aux.W_alpha.real
    top = s.g * np.imag(s.W.values) ** 2 * xa * da
    bulk = np.abs(bf.R) ** 2 * bf.J * bf.depth.weights[None, :] * da
    return grid.x + np.real(s.W.values), top, bf.Z.real, bulk


@dataclass(frozen=True)
class LocalEnergyReport:
    """Windowed space-time energy for every grid ``x0``.

    ``values`` is the energy normalization ``g eta^2 + |grad phi|^2`` with
    one supremum; ``split_sup`` is ``sup ||eta||^2_{LE^0} + sup ||grad phi||^2``
    (separate suprema, no ``g``), the linear-theory normalization.
    """

    x0: np.ndarray
    values: np.ndarray
    eta_part: np.ndarray
    grad_part: np.ndarray
    window: dict
    e14_start: float
    e14_end: float
    T: float

    @property
    def sup(self) -> float:
        return float(np.max(self.values))

    @property
    def argsup(self) -> float:
        return float(self.x0[int(np.argmax(self.values))])

    @property
    def split_sup(self) -> float:
        return float(np.max(self.eta_part) + np.max(self.grad_part))

    @property
    def ratio(self) -> float:
        d = self.e14_start ** 2 + self.e14_end ** 2
        return self.sup / d if d > 0 else 0.0

    @property
    def ratio_split(self) -> float:
        d = self.e14_start ** 2 + self.e14_end ** 2
        return self.split_sup / d if d > 0 else 0.0


def local_energy(trajectory, chi: Weight | None = None, depth_order: int = 16) -> LocalEnergyReport:
    """``g int_0^T int chi(x - x0) eta^2 + int_0^T iint chi(x - x0) |grad phi|^2`` for all grid x0.

    The windowed integrals are periodic convolutions evaluated through the
    exact Fourier coefficients of the Eulerian densities.
    """
    states = _states(trajectory)
    grid = states[0].grid
    chi = chi or default_window(grid)
    times = np.array([s.t for s in states])
    chi_hat = chi.mx_hat
    shift = np.exp(1j * grid.k * grid.x0)
    eta_rows, grad_rows = [], []
    for s in states:
        xt, top, xb, bulk = _energy_masses(s, depth_order)
        gval = getattr(s, "g", 1.0)
        e_eta = chi.spectrum(xt, top / gval)
        e_grad = chi.spectrum(xb, bulk)
        eta_rows.append(e_eta)
        grad_rows.append(e_grad)
    g = getattr(states[0], "g", 1.0)

    def conv(rows):
        acc = trapezoid(np.array(rows), times, axis=0)
        # int chi(x - x0) F(x) dx = L sum_k conj(chi_k) F_k e^{ik x0}, coefficients about a
        coef = grid.period * np.conj(chi_hat) * shift * acc
        return np.real(np.fft.ifft(coef) * grid.n)

    eta_part = conv(eta_rows)
    grad_part = conv(grad_rows)
    return LocalEnergyReport(grid.x.copy(), g * eta_part + grad_part, eta_part, grad_part,
                             {"kind": chi.kind, **{k: v for k, v in chi.params.items()
                                                   if not k.startswith("_")}},
                             _endpoint_e14(states[0]), _endpoint_e14(states[-1]),
                             float(times[-1] - times[0]))


# X norm ---------------------------------------------------------------------------

@dataclass(frozen=True)
class XNormReport:
    value: float
    low: float
    levels: np.ndarray
    blocks: np.ndarray
    envelope: np.ndarray
    eta_sup_ratio: float
    eta_x_sup_ratio: float


def _x0_blocks(eta: SpectralField, gx: SpectralField, gy: SpectralField, g: float, h: float):
    lv, ne = block_norms(eta, h, "H3/2_h")
    _, nx = block_norms(gx, h, "H1_h")
    _, ny = block_norms(gy, h, "H1_h")
    return lv, ne + np.sqrt(nx ** 2 + ny ** 2) / np.sqrt(g)


def x_norm(eta: Sequence[SpectralField], grad_top: Sequence[tuple[SpectralField, SpectralField]],
           g: float, h: float, delta: float = 0.1) -> XNormReport:
    """``||P_{<=1/h}(eta, grad phi|_top)||_{X0} + sum_lam ||P_lam(...)||_{X0}``.

    ``X0 = L^inf_t H^{3/2}_h x g^{-1/2} L^inf_t H^1_h`` with the time
    supremum taken over the given snapshots, block by block.
    """
    per = []
    levels = None
    for e, (gx, gy) in zip(eta, grad_top):
        levels, b = _x0_blocks(e, gx, gy, g, h)
        per.append(b)
    blocks = np.max(np.array(per), axis=0)
    value = float(np.sum(blocks))
    env = envelope_from_norms(levels, blocks, delta)
    eta_sup = max(float(np.max(np.abs(e.values))) for e in eta)
    eta_x_sup = max(float(np.max(np.abs(e.derivative().values))) for e in eta)
    hh = 1.0 if np.isinf(h) else h
    return XNormReport(value, float(blocks[0]), levels, blocks, env,
                       eta_sup / (hh * value) if value > 0 else 0.0,
                       eta_x_sup / value if value > 0 else 0.0)


def x_norm_trajectory(trajectory, delta: float = 0.1) -> XNormReport:
    """X norm of a nonlinear trajectory with Eulerian surface fields."""
    states = _states(trajectory)
    etas, grads = [], []
    for s in states:
        grid = s.grid
        aux = aux_fields(s)
        a = surface_alpha(s.map, grid.x)
        n = grid.n

        def at(v):
            return SpectralField(grid, trig_eval(np.fft.fft(v) / n, grid, a, real=True))

        etas.append(at(np.imag(s.W.values)))
        grads.append((at(aux.R.real), at(-aux.R.imag)))
    return x_norm(etas, grads, states[0].g, states[0].H, delta)


# Identity verifiers ---------------------------------------------------------------

@dataclass(frozen=True)
class IdentityResidual:
    lhs: float
    terms: dict
    residual: float
    relative: float


def _relative(lhs: float, terms: dict) -> IdentityResidual:
    rhs = sum(terms.values())
    scale = max(abs(lhs), *(abs(v) for v in terms.values()), 1e-300)
    return IdentityResidual(lhs, terms, lhs - rhs, abs(lhs - rhs) / scale)


def _eta_slope_at(s: HoloState, x: np.ndarray):
    """Eulerian ``eta`` and ``eta_x`` at arbitrary abscissae."""
    grid = s.grid
    n = grid.n
    a = surface_alpha(s.map, np.ravel(x))
    wa = deriv_array(s.W.values, grid)
    eta = trig_eval(np.fft.fft(np.imag(s.W.values)) / n, grid, a, real=True)
    ex = trig_eval(np.fft.fft(wa.imag / (1 + wa.real)) / n, grid, a, real=True)
    return eta.reshape(np.shape(x)), ex.reshape(np.shape(x))


def _bottom_masses(s: HoloState, bf):
    """Bottom abscissae, ``phi_x`` and ``dx`` masses along ``beta = -h``."""
    from .columns import PointEvaluator
    grid = s.grid
    al = grid.x
    be = np.full(grid.n, -s.h)
    ev = PointEvaluator(grid, s.h, al, be, [s.W.values, s.Q.values])
    wz = ev.holo(s.W.values, s.level, derivative=True)
    qz = ev.holo(s.Q.values, 0.0, derivative=True)
    w = ev.holo(s.W.values, s.level)
    xb = al + w.real
    return xb, np.real(qz / (1 + wz)), (1 + wz.real) * grid.spacing


def verify_L33(eta: SpectralField, psi: SpectralField, H: float,
               w: Callable, w_x: Callable, order: int = 32) -> IdentityResidual:
    """``iint w (phi_x^2 - phi_y^2) = int w (H + eta) phi_x^2|_{y=-H}
    - 2 iint w eta_x phi_x phi_y + 2 iint w_x (y - eta) phi_x phi_y``.

    ``phi`` is the harmonic extension of ``psi`` into the true fluid domain
    with Neumann bottom; ``w`` must be periodic.
    """
    s = to_holomorphic(eta, psi, H)
    bf = bulk_fields(s, _depth_for(s, order))
    dA = bf.J * bf.depth.weights[None, :] * s.grid.spacing
    X, Y = bf.Z.real, bf.Z.imag
    R = bf.R
    px, py = R.real, -R.imag
    lhs = float(np.sum(w(X) * (px ** 2 - py ** 2) * dA))
    xb, pxb, dxb = _bottom_masses(s, bf)
    eta_b, _ = _eta_slope_at(s, xb)
    t1 = float(np.sum(w(xb) * (H + eta_b) * pxb ** 2 * dxb))
    eX, exX = _eta_slope_at(s, X)
    t2 = float(-2 * np.sum(w(X) * exX * px * py * dA))
    t3 = float(2 * np.sum(w_x(X) * (Y - eX) * px * py * dA))
    return _relative(lhs, {"bottom": t1, "slope": t2, "weight": t3})


def verify_C6(mu: Callable, mu_x: Callable, eta: SpectralField, psi: SpectralField, H: float,
              order: int = 32) -> IdentityResidual:
    """``int mu N(eta) psi = -iint mu_x phi_x phi_y + 1/2 int mu phi_x^2|_{y=-H}``."""
    s = to_holomorphic(eta, psi, H)
    aux = aux_fields(s)
    tr = eulerian_traces(s, aux)
    xa = 1 + aux.W_alpha.real
    nterm = 0.5 * tr.psi_x ** 2 - 0.5 * (tr.G + tr.eta_x * tr.psi_x) ** 2 / (1 + tr.eta_x ** 2)
    lhs = float(np.sum(mu(tr.x) * nterm * xa) * s.grid.spacing)
    bf = bulk_fields(s, _depth_for(s, order))
    dA = bf.J * bf.depth.weights[None, :] * s.grid.spacing
    R = bf.R
    t1 = float(-np.sum(mu_x(bf.Z.real) * R.real * (-R.imag) * dA))
    xb, pxb, dxb = _bottom_masses(s, bf)
    t2 = float(0.5 * np.sum(mu(xb) * pxb ** 2 * dxb))
    return _relative(lhs, {"bulk": t1, "bottom": t2})


# Appendix virial inequality -------------------------------------------------------

@dataclass(frozen=True)
class VirialReport:
    """Hypotheses, both sides of the virial inequality and its variants.

    ``rhs`` is the density form ``14 int m I1 |_0^T + 2 int m I2 |_0^T``
    (the verdict uses it). ``rhs_flux_closed`` is the torus-closed flux form
    ``int_0^T [int m_x (14 S1 + 2 S2) - dm (14 S1 + 2 S2)(a)] dt``, equal to
    ``rhs`` up to time quadrature. ``rhs_flux_app`` is the unclosed flux
    form with the hydrostatic term ``g H^2 / 2`` kept in ``S1``; it exceeds
    the density form by ``7 g H^2 int m_x T``. ``verdict`` is ``None`` when a
    hypothesis fails.
    """

    hypotheses: dict
    pressure_min: float
    lhs: float
    kinetic: float
    rhs: float
    kinetic_rhs: float
    rhs_flux_closed: float
    rhs_flux_app: float
    verdict: bool | None
    kinetic_verdict: bool | None
    times: np.ndarray = field(repr=False)


def virial_check(trajectory, weight: Weight, order: int = 16, rtol: float = 1e-6,
                 pressure_tol: float = 1e-8) -> VirialReport:
    """Check ``int_0^T [g int m_x eta^2 + iint m_x |grad phi|^2] <= 14 int m I1|_0^T + 2 int m I2|_0^T``.

    Hypotheses: (i) ``eta >= -H/2``, (ii) ``|eta_x| <= 1/3``,
    (iii) ``eps r (H + ||eta||_inf) <= 1/42``, and nonnegative pressure.
    """
    states = _states(trajectory)
    times = np.array([s.t for s in states])
    H = states[0].H
    if np.isinf(H):
        raise ValueError("the virial inequality is stated in finite depth")
    eta_min, slope_max, eta_sup, p_min = np.inf, 0.0, 0.0, np.inf
    lhs_t, kin_t, f1_t, f1l_t, f2_t = [], [], [], [], []
    mI = {}
    for idx, s in enumerate(states):
        aux = aux_fields(s)
        tr = eulerian_traces(s, aux)
        eta_min = min(eta_min, float(np.min(tr.eta)))
        eta_sup = max(eta_sup, float(np.max(np.abs(tr.eta))))
        slope_max = max(slope_max, float(np.max(np.abs(tr.eta_x))))
        bf = bulk_fields(s, _depth_for(s, order))
        p_min = min(p_min, float(np.min(bf.P.values)))
        d = strip_densities(s, ("1", "1app", "2"), order, bulk=bf)
        dA = bf.J * bf.depth.weights[None, :] * s.grid.spacing
        xa = 1 + aux.W_alpha.real
        kin = weight.integrate_x(bf.Z.real, np.abs(bf.R) ** 2 * dA)
        pot = weight.integrate_x(tr.x, s.g * tr.eta ** 2 * xa * s.grid.spacing)
        kin_t.append(kin)
        lhs_t.append(pot + kin)
        f1 = d["1"][1].weighted(weight, True)
        f2 = d["2"][1].weighted(weight, True)
        f1_t.append(d["1app"][1].weighted(weight, True))
        f2_t.append(f2)
        dm = weight.delta_m
        f1l_t.append(14 * (f1 - dm * _edge_flux(s, "1", 16)) + 2 * (f2 - dm * _edge_flux(s, "2", 16)))
        if idx in (0, len(states) - 1):
            mI[idx] = (d["1"][0].weighted(weight, False), d["2"][0].weighted(weight, False))
    last = len(states) - 1
    dI1 = mI[last][0] - mI[0][0]
    dI2 = mI[last][1] - mI[0][1]
    hyp_iii = weight.hypothesis_iii(H, eta_sup) if weight.kind == "rational" else float("nan")
    hyps = {
        "eta_min_over_H": (eta_min / H, eta_min >= -H / 2),
        "max_slope": (slope_max, slope_max <= 1 / 3),
        "eps_r_depth": (hyp_iii, bool(hyp_iii <= 1 / 42)),
        "pressure_min": (p_min, p_min >= -pressure_tol),
    }
    ok = all(v[1] for v in hyps.values())
    lhs = float(trapezoid(lhs_t, times))
    kinetic = float(trapezoid(kin_t, times))
    rhs = 14 * dI1 + 2 * dI2
    kin_rhs = 7 * dI1
    rhs_flux_app = float(trapezoid(14 * np.array(f1_t) + 2 * np.array(f2_t), times))
    rhs_flux_closed = float(trapezoid(f1l_t, times))
    verdict = kverdict = None
    if ok:
        verdict = bool(lhs <= rhs * (1 + rtol) + 1e-300)
        kverdict = bool(kinetic <= kin_rhs * (1 + rtol) + 1e-300)
    return VirialReport({k: {"value": v[0], "pass": bool(v[1])} for k, v in hyps.items()},
                        p_min, lhs, kinetic, rhs, kin_rhs, rhs_flux_closed, rhs_flux_app, verdict,
                        kverdict, times)


# Linear identities ------------------------------------------------------------------

@dataclass(frozen=True)
class LinearIdentityReport:
    """Residuals of the linear Morawetz identities.

    ``est1`` / ``est3``: max over snapshots of the instantaneous relative
    residual (time derivatives from the equations). ``*_integrated``: the
    time-integrated forms with trapezoid quadrature. ``split_residual``:
    ``I(T) - I(0) - (LE_phi + LE_eta)``, relative.
    """

    sigma: float
    est1: float
    est3: float
    est1_integrated: float
    est3_integrated: float
    split_residual: float
    LE_phi: float
    LE_eta: float
    functional_change: float
    le_x0: float
    le_sup: float
    c_needed: float
    phi_coefficients: tuple[float, float]
    qm_agreement: float


def _flat_fields(s: LinearState, depth: DepthGrid):
    grid, h = s.grid, s.h
    b = depth.nodes
    eta_t, psi_t = linear_rhs(s)

    def ext(c, kind, da=0, db=0):
        return _extension_values(c, grid, b, h, kind, dbeta=db, dalpha=da).real

    f = {}
    for name, c in (("psi", s.psi.coeffs), ("psi_t", psi_t.coeffs)):
        f[name + "_x"] = ext(c, "neumann", da=1)
        f[name + "_y"] = ext(c, "neumann", db=1)
    for name, c in (("eta", s.eta.coeffs), ("eta_t", eta_t.coeffs)):
        f[name + "_x"] = ext(c, "dirichlet", da=1)
        f[name + "_y"] = ext(c, "dirichlet", db=1)
    return f, eta_t, psi_t


def linear_identities(trajectory: LinearTrajectory, weight: Weight, sigma: float = 0.49,
                      depth_order: int = 32) -> LinearIdentityReport:
    """Check the weighted momentum identities of the linearized flow on the torus.

    With ``S2 = g eta^2/2 + 1/2 int (phi_x^2 - phi_y^2)`` and
    ``S3 = 1/2 int |grad phi|^2 + g B^h(eta, eta)``:

        d/dt int m I2 = g/2 int m_x eta^2 + 1/2 iint m_x (phi_x^2 - phi_y^2) - dm S2(a)
        d/dt int m I3 = 1/2 iint m_x |grad phi|^2 - dm/2 int |grad phi|^2(a) + g Q_m(eta)
    """
    states = trajectory.states
    grid = states[0].grid
    h = states[0].h
    g = states[0].g
    depth = DepthGrid.for_grid(grid, h, order=depth_order)
    wq = depth.weights
    x = grid.x
    dx = grid.spacing
    dm = weight.delta_m
    times = trajectory.times
    r1, r3, mI2, mI3, rhs1, rhs3, LEphi, LEeta, qm_err = [], [], [], [], [], [], [], [], []
    for s in states:
        f, eta_t, psi_t = _flat_fields(s, depth)
        eta = s.eta.values
        psi_x = deriv_array(s.psi.values, grid)
        px, py = f["psi_x"], f["psi_y"]
        tx, ty = f["eta_x"], f["eta_y"]
        # time derivatives of I2 and I3 from the equations
        dI2 = eta_t.values * psi_x + eta * deriv_array(psi_t.values, grid)
        dI3 = ((f["eta_t_y"] * px + ty * f["psi_t_x"] - f["eta_t_x"] * py - tx * f["psi_t_y"]) @ wq)
        lhs1 = weight.integrate(x, dI2 * dx)
        lhs3 = weight.integrate(x, dI3 * dx)
        diff = (px ** 2 - py ** 2) @ wq
        grad2 = (px ** 2 + py ** 2) @ wq
        q = qm_direct(s.eta, weight, h, depth)
        qs = qm_symbol(s.eta, weight, h)
        qm_err.append(abs(q - qs) / max(abs(q), abs(qs), 1e-300) if (q or qs) else 0.0)
        a1 = 0.5 * g * weight.integrate_x(x, eta ** 2 * dx)
        a2 = 0.5 * weight.integrate_x(x, diff * dx)
        e1 = a1 + a2 - dm * (0.5 * g * eta[0] ** 2 + 0.5 * diff[0])
        b1 = 0.5 * weight.integrate_x(x, grad2 * dx)
        e3 = b1 - dm * 0.5 * grad2[0] + g * q
        r1.append(abs(lhs1 - e1) / max(abs(lhs1), abs(e1), abs(a1), abs(a2), 1e-300))
        r3.append(abs(lhs3 - e3) / max(abs(lhs3), abs(e3), abs(b1), abs(g * q), 1e-300))
        mI2.append(weight.integrate(x, eta * psi_x * dx))
        I3 = (ty * px - tx * py) @ wq
        mI3.append(weight.integrate(x, I3 * dx))
        rhs1.append(e1)
        rhs3.append(e3)
        # splitting pieces (closed torus forms)
        LEphi.append((1 - sigma) * (b1 - dm * 0.5 * grad2[0])
                     + sigma * (a2 - dm * 0.5 * diff[0]))
        LEeta.append(sigma * (a1 - dm * 0.5 * g * eta[0] ** 2) + (1 - sigma) * g * q)
    mI2, mI3 = np.array(mI2), np.array(mI3)

    def integrated(mI, rhs):
        d = mI[-1] - mI[0]
        F = trapezoid(rhs, times)
        return abs(d - F) / max(abs(d), abs(F), 1e-300)

    func = sigma * mI2 + (1 - sigma) * mI3
    change = float(func[-1] - func[0])
    le_phi = float(trapezoid(LEphi, times))
    le_eta = float(trapezoid(LEeta, times))
    split = abs(change - le_phi - le_eta) / max(abs(change), abs(le_phi), abs(le_eta), 1e-300)
    # local energy with chi = m_x: x0 = 0 is the weight itself, the sup runs over translates
    le = local_energy(trajectory, chi=weight, depth_order=depth_order)
    i0 = int(np.argmin(np.abs(le.x0 - _wrap(0.0, grid.x0, grid.period))))
    le_x0, le_sup = float(le.values[i0]), le.sup
    c_needed = (le_x0 - change) / le_sup if le_sup > 0 else 0.0
    return LinearIdentityReport(sigma, float(np.max(r1)), float(np.max(r3)),
                                integrated(mI2, rhs1), integrated(mI3, rhs3), float(split),
                                le_phi, le_eta, change, le_x0, le_sup, float(c_needed),
                                (0.5, 0.5 * (1 - 2 * sigma)), float(np.max(qm_err)))


# Normal form correction ---------------------------------------------------------------

@dataclass(frozen=True)
class NormalFormReport:
    value: float
    e14: float
    ratio: float


def normal_form_density(s: HoloState, weight: Weight, alpha0: float = 0.0,
                        order: int = 16) -> NormalFormReport:
    """``iint m_alpha(alpha - alpha0) Im R  H_D(Im W Re W_alpha) dalpha dbeta``."""
    grid = s.grid
    depth = _depth_for(s, order)
    bf = bulk_fields(s, depth)
    aux = aux_fields(s)
    src = np.imag(s.W.values) * aux.W_alpha.real
    hd = _extension_values(np.fft.fft(src) / grid.n, grid, depth.nodes, s.h, "dirichlet").real
    mx = weight.m_x(grid.x - alpha0)
    val = float(np.sum(mx[:, None] * bf.R.imag * hd * depth.weights[None, :]) * grid.spacing)
    e = _endpoint_e14(s)
    return NormalFormReport(val, e, abs(val) / e ** 2 if e > 0 else 0.0)
