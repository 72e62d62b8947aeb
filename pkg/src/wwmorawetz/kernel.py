"""The depth correction symbol ``b^h`` and its kernel ``K``.

``b(xi, zeta) = xi zeta / (sinh 2xi sinh 2zeta) * (cosh 2xi - cosh 2zeta) / ((xi+zeta)(xi-zeta))``
is evaluated in the stable product form

    b = 1/2 * S(xi+zeta) S(xi-zeta) / (S(2xi) S(2zeta)),   S(x) = sinh(x) / x,

which follows from ``cosh 2a - cosh 2b = 2 sinh(a+b) sinh(a-b)``; every
removable singularity becomes ``S(0) = 1`` and the exponentials are combined
in log space.

The kernel ``K`` (inverse Fourier transform of ``b``) is computed two
independent ways: a one-dimensional line integral obtained by a residue
computation in one frequency variable (accurate to relative precision,
including the exponentially small far field), and a two-dimensional FFT
inversion after subtracting the slowly decaying axis parts analytically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import k0

__all__ = [
    "symbol_b", "symbol_bh", "log_sinhc", "axis_symbol", "kernel_line", "kernel_h",
    "KernelTable", "KernelCutoffError", "kernel_table", "kernel_mass",
    "diagonal_pv_integral", "diagonal_closed_form", "diagonal_slope",
    "PositivityReport", "positivity_scan", "near_axis_profile",
    "DirectionalReport", "directional_signs", "SplitReport", "split_mass",
    "QmBoundReport", "qm_lower_bound_check", "AxisProfile", "cross_check",
]


def log_sinhc(x) -> np.ndarray:
    """``log(sinh(x)/x)`` for real ``x``, accurate at 0 and without overflow."""
    a = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(a)
    small = a < 1e-3
    s = a[small] ** 2
    out[small] = s / 6 - s ** 2 / 180
    big = ~small
    ab = a[big]
    out[big] = ab + np.log1p(-np.exp(-2 * ab)) - np.log(2.0) - np.log(ab)
    return out


def symbol_b(xi, zeta) -> np.ndarray:
    """Unit-depth symbol; real, even in each variable and symmetric."""
    xi = np.asarray(xi, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    lg = log_sinhc(xi + zeta) + log_sinhc(xi - zeta) - log_sinhc(2 * xi) - log_sinhc(2 * zeta)
    return 0.5 * np.exp(lg)


def symbol_bh(xi, zeta, h: float) -> np.ndarray:
    """Depth-``h`` symbol ``b(h xi, h zeta)``; identically zero in infinite depth."""
    if np.isinf(h):
        return np.zeros(np.broadcast(np.asarray(xi), np.asarray(zeta)).shape)
    return symbol_b(h * np.asarray(xi, dtype=float), h * np.asarray(zeta, dtype=float))


def axis_symbol(xi, zeta) -> np.ndarray:
    """``a(xi) s(zeta)`` with ``a = 1/(2 S(2 xi))``, ``s = (1+zeta^2)^(-1/2)``.

    Matches ``b`` to ``O(|zeta|^-3)`` for large ``|zeta|`` at fixed ``xi``.
    Its inverse transform is ``sech^2(pi x1/4) K_0(|x2|) / 16``.
    """
    xi = np.asarray(xi, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    return 0.5 * np.exp(-log_sinhc(2 * xi)) / np.sqrt(1 + zeta ** 2)


def _axis_kernel(x1, x2) -> np.ndarray:
    x1 = np.abs(np.asarray(x1, dtype=float))
    x2 = np.abs(np.asarray(x2, dtype=float))
    with np.errstate(divide="ignore"):
        return (k0(x2) / np.cosh(np.pi * x1 / 4) ** 2
                + k0(x1) / np.cosh(np.pi * x2 / 4) ** 2) / 16


# Line integral ------------------------------------------------------------------------

_P = np.pi / 2
_GX, _GW = np.polynomial.legendre.leggauss(40)


def _panels(edges: np.ndarray, order: int | None = None):
    if order is None:
        gx, gw = _GX, _GW
    else:
        gx, gw = np.polynomial.legendre.leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    x = ((hi - lo) * (gx[None] + 1) / 2 + lo).ravel()
    w = ((hi - lo) / 2 * gw[None]).ravel()
    return x, w


def _numerator(s, x0, y0):
    A, B, C = _P * s, _P * (y0 + s), _P * x0
    num = (np.sinh((A + B + C) / 2) * np.sinh((A + B - C) / 2)
           + np.sinh((B - A + C) / 2) * np.sinh((B - A - C) / 2))
    return np.sinh(A) * 8 * num / np.sinh(B) ** 2


def _phi(s, x0, y0):
    return _numerator(s, x0, y0) / np.sinh(_P * (x0 + s))


def _D(s, x0, y0):
    return _phi(s, x0, y0) / np.sinh(_P * (x0 - s))


def _row(x0: float, ys: np.ndarray, tail: float = 50.0) -> np.ndarray:
    """``K(x0, y)`` for every ``y >= x0 > 0``."""
    ys = np.asarray(ys, dtype=float)[None, :]
    # principal value at s = x0 by pairing s = x0 -+ t
    t, w1 = _panels(np.linspace(0.0, x0, max(2, 2 * int(np.ceil(x0))) + 1))
    t = t[:, None]
    p1 = (w1[:, None] * (_phi(x0 - t, x0, ys) - _phi(x0 + t, x0, ys)) / np.sinh(_P * t)).sum(0)
    # graded near s = 2 x0 (scale x0 for small arguments), unit panels beyond
    first = min(x0, 1.0)
    edges = np.concatenate([[0.0], np.geomspace(first / 2, 1.0, max(2, int(np.log2(2 / first)) + 1)),
                            np.arange(2.0, tail + 1.0)])
    s, w2 = _panels(2 * x0 + np.unique(edges))
    s = s[:, None]
    p2 = (w2[:, None] * _D(s, x0, ys)).sum(0)
    return -np.pi / 128 * (p1 + p2)


def kernel_line(x1, x2) -> np.ndarray:
    """Unit-depth kernel ``K(x1, x2)`` off the axes, by the line integral.

    Even in each variable and symmetric; raises on axis points where ``K``
    has a logarithmic singularity.
    """
    a = np.abs(np.asarray(x1, dtype=float))
    b = np.abs(np.asarray(x2, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    if np.any(a == 0) or np.any(b == 0):
        raise ValueError("K is logarithmically singular on the axes")
    lo, hi = np.minimum(a, b).ravel(), np.maximum(a, b).ravel()
    out = np.empty(lo.size)
    for x0 in np.unique(lo):
        sel = lo == x0
        out[sel] = _row(float(x0), hi[sel])
    return out.reshape(a.shape)


def kernel_h(x1, x2, h: float) -> np.ndarray:
    """Depth-``h`` kernel ``h^-2 K(x1/h, x2/h)``."""
    return kernel_line(np.asarray(x1) / h, np.asarray(x2) / h) / h ** 2


# Tables -------------------------------------------------------------------------------

class KernelCutoffError(RuntimeError):
    """The frequency cutoff leaves a tail bound above the requested tolerance."""


@dataclass(frozen=True)
class KernelTable:
    """Samples of ``K^h`` on ``xs x xs`` (first quadrant, axes excluded).

    The full kernel follows by ``K(x1,x2) = K(x2,x1) = K(-x1,x2)``.
    """

    xs: np.ndarray
    values: np.ndarray
    axis_margin: float
    method: str
    h: float = 1.0
    tail_bound: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def spacing(self) -> float:
        return float(self.xs[1] - self.xs[0])

    def __call__(self, x1, x2) -> np.ndarray:
        """Nearest-node lookup with the even/symmetric reflections."""
        i = np.rint((np.abs(x1) - self.xs[0]) / self.spacing).astype(int)
        j = np.rint((np.abs(x2) - self.xs[0]) / self.spacing).astype(int)
        return self.values[i, j]


def _fourier_values(h: float, n: int, period: float, tol: float, strict: bool):
    xi = 2 * np.pi * np.fft.fftfreq(n, d=period / n)
    X, Z = np.meshgrid(h * xi, h * xi, indexing="ij")
    r = symbol_b(X, Z) - axis_symbol(X, Z) - axis_symbol(Z, X)
    dxi = xi[1] - xi[0]
    Kr = np.fft.ifft2(r).real * n * n * dxi ** 2 / (4 * np.pi ** 2)
    # tail beyond the cutoff: |r| ~ c(zeta) |xi|^-3, so the missing part is
    # about (cutoff/2) times the edge column mass, on both axes and both signs
    edge = n // 2 - 1
    cutoff = abs(xi[edge])
    tail = 4 * (cutoff / 2) * np.sum(np.abs(r[edge])) * dxi / (4 * np.pi ** 2)
    if strict and tail > tol:
        raise KernelCutoffError(f"tail bound {tail:.3e} exceeds {tol:.1e}; increase n")
    xg = np.arange(n) * period / n
    return xg, Kr, tail


def kernel_table(method: str = "fourier", *, h: float = 1.0, axis_margin: float = 0.05,
                 x_max: float = 10.0, spacing: float | None = None, n: int = 2048,
                 period: float = 40.96, tol: float = 1e-4, strict: bool = True) -> KernelTable:
    """Tabulate ``K^h`` on ``[axis_margin, x_max]^2``.

    ``fourier``: FFT inversion of ``b^h`` minus the two axis symbols on a
    ``n x n`` frequency grid for a box of side ``period`` (physical length);
    the axis parts are added back in closed form. The table nodes are the
    box nodes, spacing ``period / n``.

    ``line``: the line integral at nodes of the given ``spacing`` (default
    0.05), exact to quadrature precision including the far field.
    """
    if np.isinf(h):
        raise ValueError("the infinite-depth symbol vanishes; no kernel to tabulate")
    if method == "fourier":
        step = period / n
        if x_max >= period / 2:
            raise ValueError("x_max must lie inside half the inversion box")
        xg, Kr, tail = _fourier_values(h, n, period, tol, strict)
        i0 = int(np.ceil(axis_margin / step - 1e-9))
        i1 = int(np.floor(x_max / step + 1e-9))
        xs = xg[i0:i1 + 1]
        X1, X2 = np.meshgrid(xs, xs, indexing="ij")
        vals = Kr[i0:i1 + 1, i0:i1 + 1] + _axis_kernel(X1 / h, X2 / h) / h ** 2
        meta = {"n": n, "period": period}
    elif method == "line":
        step = spacing or 0.05
        xs = np.arange(axis_margin, x_max + step / 2, step)
        vals = np.empty((xs.size, xs.size))
        for i, x in enumerate(xs):
            row = _row(x / h, xs[i:] / h) / h ** 2
            vals[i, i:] = row
            vals[i:, i] = row
        tail = 0.0
        meta = {}
    else:
        raise ValueError(f"unknown method {method!r}")
    return KernelTable(xs, vals, axis_margin, method, h, float(tail), meta)


def kernel_mass(method: str = "fourier", *, h: float = 1.0, n: int = 2048,
                period: float = 40.96, panels: int = 14, grading: int = 24) -> float:
    """``iint K^h dx1 dx2``.

    ``fourier``: discrete sum of the inverted remainder plus the axis parts,
    whose masses are integrated numerically. ``line``: tensor Gauss rule on
    ``[0, panels]^2`` (times ``h``) graded geometrically toward the
    logarithmic axes, times four.
    """
    if method == "fourier":
        _, Kr, _ = _fourier_values(h, n, period, np.inf, False)
        step = period / n
        sech_mass = 2 * quad(lambda x: 1 / np.cosh(np.pi * x / 4) ** 2, 0, 60)[0]
        k0_mass = 2 * quad(k0, 0, np.inf)[0]
        return float(Kr.sum() * step ** 2 + 2 * sech_mass * k0_mass / 16)
    if method == "line":
        edges = np.concatenate([[0.0], np.geomspace(2.0 ** -grading, 1.0, grading + 1),
                                np.arange(2.0, panels + 1.0)])
        x, w = _panels(edges, order=10)
        total = 0.0
        for i in range(x.size):
            row = _row(float(x[i]), x[i:])
            total += w[i] * (w[i] * row[0] + 2 * np.dot(w[i + 1:], row[1:]))
        return float(4 * total)
    raise ValueError(f"unknown method {method!r}")


# Diagonal principal value integral -----------------------------------------------------

def _diag_integrand(x, x0):
    """``F'(y) G'(x) - G'(y) F'(x)`` with ``F = coth``, ``G = tanh``, ``y = 2 x0 - x``."""
    y = 2 * x0 - x
    return 1 / (np.cosh(y) * np.sinh(x)) ** 2 - 1 / (np.sinh(y) * np.cosh(x)) ** 2


def _excised(x0: float, eps: float, tail: float, order: int) -> float:
    """``int_{x < x0, |x| > eps}`` of the integrand, minus the ``2 sech^2(2x0)/eps`` blowup."""
    levels = max(2, int(np.ceil(np.log2(1.0 / eps))) + 2)
    grade = np.geomspace(eps, 1.0, levels)
    left = -np.concatenate([grade, np.arange(2.0, tail + 1.0)])[::-1]
    right = np.unique(np.concatenate([grade[grade < x0], [x0]]))
    if x0 > 1.0:
        right = np.unique(np.concatenate([right, np.arange(1.0, x0, 1.0), [x0]]))
    # refine toward x0, where csch^2(2 x0 - x) varies on the scale x0
    right = np.unique(np.concatenate([right, x0 - np.geomspace(min(x0, 1.0) / 64, (x0 - eps) / 2, 8)]))
    xl, wl = _panels(left, order)
    xr, wr = _panels(right, order)
    total = np.dot(wl, _diag_integrand(xl, x0)) + np.dot(wr, _diag_integrand(xr, x0))
    return float(total - 2 / np.cosh(2 * x0) ** 2 / eps)


def diagonal_pv_integral(x0, *, levels: int = 5, tail: float = 40.0, order: int = 20) -> np.ndarray:
    """``I(x0) = int_{-inf}^{x0} F'(y)G'(x) - G'(y)F'(x) dx`` in the finite-part sense.

    The ``x^-2`` singularity at ``x = 0`` is handled by symmetric excision
    ``|x| > eps``; after removing the ``2 sech^2(2x0)/eps`` divergence the
    remainder is odd in ``eps`` (``eps, eps^3, ...``), which Richardson
    extrapolation over ``levels`` halvings eliminates.
    """
    x0s = np.atleast_1d(np.asarray(x0, dtype=float))
    if np.any(x0s <= 0):
        raise ValueError("x0 must be positive")
    out = np.empty(x0s.size)
    for n, x in enumerate(x0s):
        eps0 = min(x / 4, 0.25)
        T = [[_excised(x, eps0 / 2 ** j, tail, order)] for j in range(levels)]
        for c in range(1, levels):
            fac = 2.0 ** (2 * c - 1)
            for j in range(c, levels):
                T[j].append((fac * T[j][c - 1] - T[j - 1][c - 1]) / (fac - 1))
        out[n] = T[-1][-1]
    return out.reshape(np.shape(x0))


def diagonal_closed_form(x0) -> np.ndarray:
    """``I(x0) = -4 sech^2(2x0) [csch(2x0) - tanh(2x0) ln tanh(x0)]``."""
    x0 = np.asarray(x0, dtype=float)
    return -4 / np.cosh(2 * x0) ** 2 * (1 / np.sinh(2 * x0) - np.tanh(2 * x0) * np.log(np.tanh(x0)))


def diagonal_slope(x) -> np.ndarray:
    """``(d/dx) K(x, x) = (pi/64) I(pi x / 4)``, the diagonal derivative ``(dx + dy) K``."""
    return np.pi / 64 * diagonal_closed_form(np.pi * np.asarray(x, dtype=float) / 4)


# Scans ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class PositivityReport:
    minimum: float
    location: tuple[float, float]
    diagonal_min: float
    negatives: int
    passed: bool


def positivity_scan(table: KernelTable) -> PositivityReport:
    """Minimum of ``K`` over the table (axes excluded by construction)."""
    v = table.values
    i, j = np.unravel_index(np.argmin(v), v.shape)
    return PositivityReport(float(v[i, j]), (float(table.xs[i]), float(table.xs[j])),
                            float(np.min(np.diag(v))), int(np.sum(v <= 0)), bool(v[i, j] > 0))


@dataclass(frozen=True)
class AxisProfile:
    x2: float
    deltas: np.ndarray
    values: np.ndarray
    slope: float
    predicted: float


def near_axis_profile(x2: float, deltas=None) -> AxisProfile:
    """``K(delta, x2)`` as ``delta -> 0``; slope against ``-ln delta``.

    The axis part ``sech^2(pi x2/4) K_0(delta)/16`` predicts the slope
    ``sech^2(pi x2/4)/16``.
    """
    deltas = np.geomspace(1e-2, 1e-6, 9) if deltas is None else np.asarray(deltas, dtype=float)
    vals = kernel_line(deltas, np.full_like(deltas, x2))
    slope = np.polyfit(-np.log(deltas), vals, 1)[0]
    return AxisProfile(float(x2), deltas, vals, float(slope), float(1 / np.cosh(np.pi * x2 / 4) ** 2 / 16))


@dataclass(frozen=True)
class DirectionalReport:
    anti_min: float
    anti_violations: list
    diag_max: float
    diag_violations: list
    diagonal_antisymmetric: float

    @property
    def passed(self) -> bool:
        return not self.anti_violations and not self.diag_violations


def directional_signs(table: KernelTable, noise: float = 1e-9) -> DirectionalReport:
    """Centered-difference signs of ``(dy - dx) K`` above the diagonal and ``(dy + dx) K`` on it.

    A sample counts as a violation only when its wrong sign exceeds the
    difference noise ``noise * |K| / spacing``.
    """
    K = table.values
    d = table.spacing
    xs = table.xs
    inner = K[1:-1, 1:-1]
    dy = (K[1:-1, 2:] - K[1:-1, :-2]) / (2 * d)
    dx = (K[2:, 1:-1] - K[:-2, 1:-1]) / (2 * d)
    floor = noise * np.abs(inner) / d
    anti = dy - dx
    m = anti.shape[0]
    upper = np.triu(np.ones((m, m), dtype=bool), 1)
    bad = upper & (anti < -floor)
    anti_viol = [(float(xs[i + 1]), float(xs[j + 1]), float(anti[i, j])) for i, j in zip(*np.nonzero(bad))]
    diag = np.diag(dy + dx)
    dfloor = np.diag(floor)
    diag_viol = [(float(xs[i + 1]), float(diag[i])) for i in np.nonzero(diag > dfloor)[0]]
    scale = np.abs(np.diag(dy)) + 1e-300
    return DirectionalReport(float(np.min(np.where(upper, anti / (np.abs(inner) + 1e-300), np.inf))),
                             anti_viol, float(np.max(diag / (np.abs(np.diag(inner)) + 1e-300))),
                             diag_viol, float(np.max(np.abs(np.diag(anti)) / scale)))


@dataclass(frozen=True)
class SplitReport:
    """``K = K1 + L (x) L`` with Gaussian ``L(x) = A exp(-x^2 / (2 s^2))``."""

    amplitude: float
    width: float
    c: float
    mass_L: float
    mass_K: float
    residual_min: float
    success: bool

    def L(self, x) -> np.ndarray:
        return self.amplitude * np.exp(-np.asarray(x, dtype=float) ** 2 / (2 * self.width ** 2))


def split_mass(table: KernelTable, mass_K: float = 0.5, margin: float = 0.9,
               widths=None) -> SplitReport:
    """Largest admissible Gaussian ``L`` under ``K`` (checked on the table).

    For each width ``s`` the amplitude is ``sqrt(margin * min K / G_s)`` with
    ``G_s(x1,x2) = exp(-(x1^2+x2^2)/(2 s^2))``; the width maximizing
    ``iint L(x)L(y) = 2 pi s^2 A^2`` wins and ``c = mass_K - iint L L``.
    """
    widths = np.geomspace(0.1, 3.0, 60) if widths is None else np.asarray(widths, dtype=float)
    X1, X2 = np.meshgrid(table.xs, table.xs, indexing="ij")
    r2 = X1 ** 2 + X2 ** 2
    K = table.values
    best = (0.0, 1.0, 0.0)
    for s in widths:
        # min K / G in log space; G underflows far out
        lr = np.log(np.maximum(K, 1e-300)) + r2 / (2 * s ** 2)
        amp2 = margin * np.exp(np.min(lr)) if np.all(K > 0) else 0.0
        mass = 2 * np.pi * s ** 2 * amp2
        if mass > best[2]:
            best = (np.sqrt(amp2), s, mass)
    A, s, mass = best
    resid = K - A ** 2 * np.exp(-r2 / (2 * s ** 2))
    ok = mass > 0 and float(resid.min()) >= 0
    c = mass_K - mass if ok else 0.5
    return SplitReport(float(A), float(s), float(c), float(mass), float(mass_K),
                       float(resid.min()), bool(ok))


@dataclass(frozen=True)
class QmBoundReport:
    lhs: np.ndarray
    rhs: np.ndarray
    c: float
    verdicts: np.ndarray

    @property
    def slack(self) -> np.ndarray:
        return self.lhs - self.rhs

    @property
    def passed(self) -> bool:
        return bool(np.all(self.verdicts))


def qm_lower_bound_check(etas, weight, h: float, c: float, rtol: float = 1e-12) -> QmBoundReport:
    """Per sample: ``int m_x B^h(eta, eta) >= -c sup_x0 int m_x(x - x0) eta^2``."""
    from .spectral import bilinear_multiplier

    lhs, rhs = [], []
    for eta in etas:
        grid = eta.grid
        if np.isinf(h):
            lhs.append(0.0)
        else:
            B = bilinear_multiplier(lambda x, z: symbol_bh(x, z, h), eta)
            lhs.append(weight.integrate_x(grid.x, np.real(B.values) * grid.spacing))
        F = weight.spectrum(grid.x, eta.values ** 2 * grid.spacing)
        conv = np.real(np.fft.ifft(grid.period * np.conj(weight.mx_hat) * F) * grid.n)
        rhs.append(-c * float(np.max(conv)))
    lhs, rhs = np.array(lhs), np.array(rhs)
    tol = rtol * (np.abs(rhs) + np.abs(lhs))
    return QmBoundReport(lhs, rhs, float(c), lhs >= rhs - tol)


def cross_check(table: KernelTable, stride: int = 25) -> float:
    """Max abs difference between ``table`` and the line integral on every ``stride``-th node."""
    sel = np.arange(0, table.xs.size, stride)
    X1, X2 = np.meshgrid(table.xs[sel], table.xs[sel], indexing="ij")
    ref = kernel_h(X1, X2, table.h)
    return float(np.max(np.abs(table.values[np.ix_(sel, sel)] - ref)))
