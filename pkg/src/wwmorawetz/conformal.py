"""Conformal map between the flat strip and the fluid domain.

The fluid occupies ``{-H < y < eta(x)}`` with ``H`` the physical depth
(``inf`` allowed). On a periodic domain the mean of ``Im W`` (the "level"
``l``) is not forced to vanish, and the strip that maps onto the fluid has
conformal depth ``h = H + l``. ``Im W`` equals ``l`` on the bottom of the
strip and ``Im W - l = -T_h Re W`` on the top.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    Grid,
    SpectralField,
    deriv_array,
    tilbert_array,
    tilbert_inv_array,
    trig_eval,
)
from .strip import evaluate_extension

__all__ = [
    "ConformalMap",
    "MapDivergenceError",
    "SteepnessError",
    "LocateError",
    "build_from_surface",
    "map_from_real_part",
    "surface_from_map",
    "surface_alpha",
    "to_holomorphic",
    "locate",
    "strip_drift",
    "StripDrift",
    "switch_symbol",
]


class MapDivergenceError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"conformal map iteration did not converge: residual {residual:.3e} "
                         f"after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


class SteepnessError(ValueError):
    """Surface too steep for the map construction (``max |eta_x| >= 1/3``)."""


class LocateError(RuntimeError):
    """A point could not be pulled back to the strip."""


def conformal_depth(H: float, level: float) -> float:
    return np.inf if np.isinf(H) else H + level


def holomorphic_imag(re: np.ndarray, grid: Grid, H: float, level: float) -> np.ndarray:
    """Top trace of ``Im W`` from ``Re W`` and the level."""
    return level - tilbert_array(re, grid, conformal_depth(H, level))


@dataclass(frozen=True, eq=False)
class ConformalMap:
    """``Z(alpha + i beta) = alpha + i beta + W``, strip depth ``h = H + level``."""

    W: SpectralField
    H: float
    iterations: int = 0
    residual: float = 0.0

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
    def W_alpha(self) -> np.ndarray:
        return deriv_array(self.W.values, self.grid)

    def holomorphy_residual(self) -> float:
        re = np.real(self.W.values)
        im = np.imag(self.W.values)
        r = im - holomorphic_imag(re, self.grid, self.H, self.level)
        return float(np.max(np.abs(r)))

    def bilipschitz(self) -> float:
        """``max |Re W_alpha|``: the map is bilipschitz when this is below 1."""
        return float(np.max(np.abs(np.real(self.W_alpha))))

    @property
    def _coeffs(self):
        n = self.grid.n
        cr = np.fft.fft(np.real(self.W.values)) / n
        ci = np.fft.fft(np.imag(self.W.values) - self.level) / n
        return cr, ci

    def W_at(self, alpha, beta, derivs: bool = False, tol: float = 1e-15):
        """``W`` (and ``dW/dz``) at strip points."""
        cr, ci = self._coeffs
        g, h = self.grid, self.h
        if not derivs:
            u = evaluate_extension(cr, g, alpha, beta, h, "neumann", tol=tol).real
            v = evaluate_extension(ci, g, alpha, beta, h, "dirichlet", tol=tol).real
            return u + 1j * (v + self.level)
        u, ua, _ = evaluate_extension(cr, g, alpha, beta, h, "neumann", derivs=True, tol=tol)
        v, va, _ = evaluate_extension(ci, g, alpha, beta, h, "dirichlet", derivs=True, tol=tol)
        return u.real + 1j * (v.real + self.level), ua.real + 1j * va.real

    def Z_at(self, alpha, beta):
        alpha = np.asarray(alpha, dtype=float)
        return alpha + 1j * np.asarray(beta, dtype=float) + self.W_at(alpha, beta)

    def jacobian_at(self, alpha, beta) -> np.ndarray:
        _, wz = self.W_at(alpha, beta, derivs=True)
        return np.abs(1 + wz) ** 2


def map_from_real_part(re_w: np.ndarray, grid: Grid, H: float, level: float) -> ConformalMap:
    im = holomorphic_imag(re_w, grid, H, level)
    return ConformalMap(SpectralField(grid, re_w + 1j * im), H)


def _slope(eta: SpectralField) -> float:
    return float(np.max(np.abs(deriv_array(eta.values, eta.grid))))


def build_from_surface(eta: SpectralField, H: float, tol: float = 1e-13, max_iter: int = 200,
                       max_slope: float = 1.0 / 3.0) -> ConformalMap:
    """Fixed-point construction of the map whose image has top boundary ``y = eta(x)``.

    Each sweep resamples ``eta`` at ``x = alpha + Re W`` by trigonometric
    interpolation, sets the level to the mean of the samples, and recovers
    ``Re W`` from holomorphy in the strip of depth ``H + level``.
    """
    if not eta.realness:
        raise ValueError("surface elevation must be real")
    if _slope(eta) >= max_slope:
        raise SteepnessError(f"max |eta_x| = {_slope(eta):.3f} exceeds {max_slope:.3f}")
    if np.isfinite(H) and np.min(eta.values) <= -H:
        raise SteepnessError("surface touches the bottom")
    grid = eta.grid
    alpha = grid.x
    coeffs = eta.coeffs
    re = np.zeros(grid.n)
    res = np.inf
    for it in range(1, max_iter + 1):
        s = trig_eval(coeffs, grid, alpha + re, real=True)
        level = float(s.mean())
        h = conformal_depth(H, level)
        new_re = -tilbert_inv_array(s - level, grid, h)
        res = float(np.max(np.abs(new_re - re)))
        re = new_re
        if res < tol:
            break
    else:
        raise MapDivergenceError(res, max_iter)
    m = map_from_real_part(re, grid, H, level)
    final = float(np.max(np.abs(np.imag(m.W.values) - trig_eval(coeffs, grid, alpha + re, real=True))))
    return ConformalMap(m.W, H, it, final)


def surface_alpha(m: ConformalMap, x: np.ndarray, tol: float = 1e-14, max_iter: int = 50) -> np.ndarray:
    """Solve ``alpha + Re W(alpha) = x`` by Newton's method."""
    grid = m.grid
    cr = np.fft.fft(np.real(m.W.values)) / grid.n
    cd = cr * 1j * grid.k
    cd[grid.nyquist_index] = 0
    x = np.asarray(x, dtype=float)
    a = x.copy()
    for _ in range(max_iter):
        f = a + trig_eval(cr, grid, a, real=True) - x
        if np.max(np.abs(f)) < tol * max(1.0, np.max(np.abs(x))):
            return a
        a = a - f / (1 + trig_eval(cd, grid, a, real=True))
    raise LocateError("surface inversion did not converge")


def surface_from_map(m: ConformalMap, grid: Grid | None = None) -> SpectralField:
    """Eulerian elevation ``eta(x_j) = Im W(alpha_j)`` on a grid (default: the map's own)."""
    grid = grid or m.grid
    a = surface_alpha(m, grid.x)
    im = np.fft.fft(np.imag(m.W.values)) / m.grid.n
    return SpectralField(grid, trig_eval(im, m.grid, a, real=True))


def to_holomorphic(eta: SpectralField, psi: SpectralField, H: float, g: float = 1.0,
                   t: float = 0.0, tol: float = 1e-13):
    """Eulerian data ``(eta, psi)`` to a holomorphic state ``(W, Q)``."""
    from .solver import HoloState

    if psi.grid != eta.grid:
        raise ValueError("eta and psi live on different grids")
    m = build_from_surface(eta, H, tol=tol)
    grid = eta.grid
    re_q = trig_eval(psi.coeffs, grid, grid.x + np.real(m.W.values), real=True)
    im_q = -tilbert_array(re_q, grid, m.h)
    return HoloState(m.W, SpectralField(grid, re_q + 1j * im_q), t, g, H)


def locate(x, y, m: ConformalMap, tol: float = 1e-12, max_iter: int = 60,
           guess: tuple[np.ndarray, np.ndarray] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Pull Eulerian points back to the strip: solve ``Z(alpha + i beta) = x + i y``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.broadcast_to(np.asarray(y, dtype=float), x.shape).copy()
    target = x + 1j * y
    H = m.H
    if np.isfinite(H) and np.any(y < -H - 1e-12):
        raise LocateError("point below the bottom")
    if guess is None:
        a_s = surface_alpha(m, x.ravel()).reshape(x.shape)
        eta = np.imag(m.W_at(a_s, np.zeros_like(a_s)))
        if np.any(y > eta + 1e-12):
            raise LocateError("point above the free surface")
        if np.isfinite(H):
            beta0 = (y - eta) / (eta + H) * m.h
        else:
            beta0 = y - eta
        z = a_s + 1j * beta0
    else:
        z = guess[0] + 1j * guess[1]
    scale = max(1.0, float(np.max(np.abs(target))))
    for _ in range(max_iter):
        w, wz = m.W_at(z.real, z.imag, derivs=True)
        f = z + w - target
        if np.max(np.abs(f)) < tol * scale:
            break
        z = z - f / (1 + wz)
        if np.isfinite(m.h):
            z = z.real + 1j * np.clip(z.imag, -m.h, 0.0)
        else:
            z = z.real + 1j * np.minimum(z.imag, 0.0)
    else:
        raise LocateError(f"Newton stalled, residual {np.max(np.abs(f)):.3e}")
    return z.real, z.imag


@dataclass(frozen=True)
class StripDrift:
    combination: float
    shift: float
    x0: float


def strip_drift(m: ConformalMap, alpha0: float, beta: float) -> StripDrift:
    """Horizontal drift of the vertical strip line through a surface point.

    ``combination = Re Z(alpha0, beta) - x0 + beta Im W_alpha(alpha0, beta)``,
    ``shift = Re Z(alpha0, beta) - x0`` with ``x0 = Re Z(alpha0, 0)``.
    """
    a = np.array([alpha0], dtype=float)
    z0 = m.Z_at(a, np.zeros(1))[0]
    w, wz = m.W_at(a, np.array([beta]), derivs=True)
    zb = a[0] + w[0].real
    comb = zb - z0.real + beta * wz[0].imag
    return StripDrift(float(comb), float(zb - z0.real), float(z0.real))


def switch_symbol(xi, beta, h: float) -> np.ndarray:
    """Multiplier comparing the strip line ``alpha = alpha0`` with the vertical through ``x0``.

    ``-i (cosh((beta+h) xi) - cosh(h xi) - beta xi sinh((beta+h) xi)) / sinh(h xi)``,
    evaluated in rescaled form; the zero-frequency value is 0. Infinite depth
    gives ``-i sgn(xi) (e^{beta|xi|} - 1 - beta|xi| e^{beta|xi|})``.
    """
    xi = np.asarray(xi, dtype=float)
    beta = np.asarray(beta, dtype=float)
    xi, beta = np.broadcast_arrays(xi, beta)
    a = np.abs(xi)
    s = np.sign(xi)
    out = np.zeros(xi.shape, dtype=complex)
    nz = a > 0
    a, b, s = a[nz], beta[nz], s[nz]
    if np.isinf(h):
        val = np.expm1(b * a) - b * a * np.exp(b * a)
    else:
        # divide numerator and denominator by e^{h a}/2
        den = -np.expm1(-2 * h * a)
        c1 = np.exp(b * a) + np.exp(-(b + 2 * h) * a)
        c0 = 1 + np.exp(-2 * h * a)
        s1 = np.exp(b * a) - np.exp(-(b + 2 * h) * a)
        val = (c1 - c0 - b * a * s1) / den
    out[nz] = -1j * s * val
    return out


@dataclass(frozen=True)
class MapReport:
    iterations: int
    residual: float
    holomorphy: float
    bilipschitz: float
    level: float
    extra: dict = field(default_factory=dict)


def report(m: ConformalMap) -> MapReport:
    return MapReport(m.iterations, m.residual, m.holomorphy_residual(), m.bilipschitz(), m.level)
