"""Harmonic extensions into the flat strip ``{-h < beta < 0}``.

Extensions are always generated from a top trace through the exact Fourier
symbols, so every stored value is "discretely harmonic" by construction.
Symbols are evaluated in exponentially rescaled form; nothing overflows for
large ``h |xi|``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .spectral import (
    Grid,
    SpectralField,
    apply_multiplier,
    multiplier_array,
    sobolev_norm_h,
    tilbert_array,
    tilbert_symbol,
)

__all__ = [
    "DepthGrid",
    "StripField",
    "p_neumann",
    "p_dirichlet",
    "dp_neumann",
    "dp_dirichlet",
    "extend_neumann",
    "extend_dirichlet",
    "extend_holomorphic",
    "dtn_neumann",
    "dtn_dirichlet",
    "harmonic_conjugate",
    "depth_integral",
    "moment_integral",
    "parabolic_ratio",
    "evaluate_extension",
    "default_h_eff",
]

BC = Literal["neumann-bottom", "dirichlet-bottom", "none"]


def default_h_eff(grid: Grid, tail: float = 1e-16) -> float:
    """Depth beyond which ``exp(beta |xi|)`` is below ``tail`` for every nonzero grid mode."""
    return float(-np.log(tail) / grid.dk)


# Symbols ----------------------------------------------------------------------

def _prep(k, beta):
    a = np.abs(np.asarray(k, dtype=float))
    b = np.asarray(beta, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    return a, b


def p_neumann(k, beta, h: float) -> np.ndarray:
    """``cosh((beta+h) xi) / cosh(h xi)`` (``exp(beta |xi|)`` for infinite depth)."""
    a, b = _prep(k, beta)
    if np.isinf(h):
        return np.exp(b * a)
    return np.exp(b * a) * (1 + np.exp(-2 * (b + h) * a)) / (1 + np.exp(-2 * h * a))


def p_dirichlet(k, beta, h: float) -> np.ndarray:
    """``sinh((beta+h) xi) / sinh(h xi)``, with the ``(beta+h)/h`` limit at ``xi = 0``."""
    a, b = _prep(k, beta)
    if np.isinf(h):
        return np.exp(b * a)
    out = np.empty(a.shape)
    z = a == 0
    out[z] = (b[z] + h) / h
    az, bz = a[~z], b[~z]
    out[~z] = np.exp(bz * az) * (-np.expm1(-2 * (bz + h) * az)) / (-np.expm1(-2 * h * az))
    return out


def dp_neumann(k, beta, h: float) -> np.ndarray:
    """``d/dbeta`` of the Neumann symbol."""
    a, b = _prep(k, beta)
    if np.isinf(h):
        return a * np.exp(b * a)
    return a * np.exp(b * a) * (-np.expm1(-2 * (b + h) * a)) / (1 + np.exp(-2 * h * a))


def dp_dirichlet(k, beta, h: float) -> np.ndarray:
    """``d/dbeta`` of the Dirichlet symbol (``1/h`` at ``xi = 0``)."""
    a, b = _prep(k, beta)
    if np.isinf(h):
        return a * np.exp(b * a)
    out = np.empty(a.shape)
    z = a == 0
    out[z] = 1.0 / h
    az, bz = a[~z], b[~z]
    out[~z] = az * np.exp(bz * az) * (1 + np.exp(-2 * (bz + h) * az)) / (-np.expm1(-2 * h * az))
    return out


_SYMBOLS = {
    ("neumann", 0): p_neumann,
    ("neumann", 1): dp_neumann,
    ("dirichlet", 0): p_dirichlet,
    ("dirichlet", 1): dp_dirichlet,
}


def _symbol(kind: str, dbeta: int):
    try:
        return _SYMBOLS[(kind, dbeta)]
    except KeyError:
        raise ValueError(f"unsupported extension ({kind!r}, d_beta order {dbeta})") from None


# Depth quadrature -------------------------------------------------------------

@dataclass(frozen=True)
class DepthGrid:
    """Gauss quadrature in ``beta`` on ``[-h_eff, 0]``.

    ``panels`` Gauss-Legendre panels, optionally graded dyadically toward
    ``beta = 0`` where high frequencies concentrate. For infinite depth the
    interval is truncated at ``h_eff``.
    """

    h: float
    nodes: np.ndarray
    weights: np.ndarray
    h_eff: float
    order: int = 64
    graded: bool = False

    @classmethod
    def gauss(cls, h: float, order: int = 64, panels: int = 1, graded: bool = False,
              h_eff: float | None = None) -> "DepthGrid":
        if not h > 0:
            raise ValueError(f"depth must be positive, got {h}")
        if np.isinf(h):
            if h_eff is None:
                raise ValueError("infinite depth needs a truncation depth h_eff")
        else:
            h_eff = h
        if graded:
            edges = -h_eff * np.concatenate([[1.0], 2.0 ** -np.arange(1, panels), [0.0]])
        else:
            edges = np.linspace(-h_eff, 0.0, panels + 1)
        x, w = roots_legendre(order)
        nodes, weights = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
            weights.append(0.5 * (b - a) * w)
        return cls(h, np.concatenate(nodes), np.concatenate(weights), float(h_eff), order, graded)

    @classmethod
    def for_grid(cls, grid: Grid, h: float, order: int = 64, panels: int | None = None,
                 graded: bool = True) -> "DepthGrid":
        """Graded rule resolving ``exp(beta k_max)`` near the top."""
        h_eff = default_h_eff(grid) if np.isinf(h) else h
        if panels is None:
            panels = max(1, int(np.ceil(np.log2(max(h_eff * grid.k_max / 8, 1.0)))) + 1)
        return cls.gauss(h, order, panels, graded, h_eff if np.isinf(h) else None)

    @property
    def size(self) -> int:
        return self.nodes.size

    def total(self) -> float:
        return float(self.weights.sum())


def _extension_values(coeffs: np.ndarray, grid: Grid, beta: np.ndarray, h: float, kind: str,
                      dbeta: int = 0, dalpha: int = 0) -> np.ndarray:
    """Values on ``grid.x`` for each ``beta``: array of shape ``(n, len(beta))``."""
    sym = _symbol(kind, dbeta)
    k = grid.k
    mult = sym(k[None, :], np.asarray(beta, dtype=float)[:, None], h)
    c = coeffs[None, :] * mult
    if dalpha:
        d = multiplier_array(lambda kk: (1j * kk) ** dalpha, grid)
        c = c * d[None, :]
    return (np.fft.ifft(c, axis=1) * grid.n).T


@dataclass(frozen=True, eq=False)
class StripField:
    """A harmonic function on ``grid x depth`` generated from a top trace.

    ``values[i, j]`` is the field at ``(grid.x[i], depth.nodes[j])``.
    """

    grid: Grid
    depth: DepthGrid
    values: np.ndarray
    bc: BC = "none"
    top_coeffs: np.ndarray | None = field(default=None, repr=False)
    kind: str = "neumann"
    level: float = 0.0

    def at(self, beta, dbeta: int = 0, dalpha: int = 0) -> np.ndarray:
        """Exact reconstruction at arbitrary depths (shape ``(n, len(beta))``)."""
        if self.top_coeffs is None:
            raise ValueError("field was not generated from a trace")
        beta = np.atleast_1d(np.asarray(beta, dtype=float))
        out = _extension_values(self.top_coeffs, self.grid, beta, self.depth.h, self.kind, dbeta, dalpha)
        if dbeta == 0 and dalpha == 0 and self.level:
            out = out + self.level
        return out if np.iscomplexobj(self.values) else out.real

    def d_alpha(self) -> "StripField":
        vals = self.at(self.depth.nodes, dalpha=1)
        return StripField(self.grid, self.depth, vals, self.bc, None, self.kind)

    def d_beta(self) -> "StripField":
        vals = self.at(self.depth.nodes, dbeta=1)
        return StripField(self.grid, self.depth, vals, self.bc, None, self.kind)

    def top(self) -> np.ndarray:
        return self.at([0.0])[:, 0]

    def bottom(self) -> np.ndarray:
        if np.isinf(self.depth.h):
            raise ValueError("infinite depth has no bottom")
        return self.at([-self.depth.h])[:, 0]

    def __mul__(self, other):
        o = other.values if isinstance(other, StripField) else other
        return StripField(self.grid, self.depth, self.values * o, "none")

    __rmul__ = __mul__

    def __add__(self, other):
        o = other.values if isinstance(other, StripField) else other
        return StripField(self.grid, self.depth, self.values + o, "none")

    def __sub__(self, other):
        o = other.values if isinstance(other, StripField) else other
        return StripField(self.grid, self.depth, self.values - o, "none")

    def __pow__(self, p):
        return StripField(self.grid, self.depth, self.values ** p, "none")


def _extend(f: SpectralField, depth: DepthGrid, kind: str) -> StripField:
    if f.realness is False and np.max(np.abs(np.imag(f.values))) > 0:
        raise ValueError("extension expects a real trace; split complex traces first")
    coeffs = np.fft.fft(np.real(f.values)) / f.grid.n
    vals = _extension_values(coeffs, f.grid, depth.nodes, depth.h, kind).real
    bc = "neumann-bottom" if kind == "neumann" else "dirichlet-bottom"
    return StripField(f.grid, depth, vals, bc, coeffs, kind)


def extend_neumann(f: SpectralField, depth: DepthGrid) -> StripField:
    """Harmonic extension with top trace ``f`` and vanishing normal derivative at the bottom."""
    return _extend(f, depth, "neumann")


def extend_dirichlet(g: SpectralField, depth: DepthGrid) -> StripField:
    """Harmonic extension with top trace ``g`` and zero bottom trace."""
    return _extend(g, depth, "dirichlet")


def extend_holomorphic(w: SpectralField, depth: DepthGrid, level: float | None = None) -> StripField:
    """Extension of a holomorphic trace: real part Neumann, imaginary part Dirichlet above ``level``.

    ``level`` is the constant value of the imaginary part on the bottom (the
    mean of ``Im w``); it defaults to that mean.
    """
    re = np.real(w.values)
    im = np.imag(w.values)
    if level is None:
        level = float(im.mean())
    n = w.grid.n
    cr = np.fft.fft(re) / n
    ci = np.fft.fft(im - level) / n
    u = _extension_values(cr, w.grid, depth.nodes, depth.h, "neumann").real
    v = _extension_values(ci, w.grid, depth.nodes, depth.h, "dirichlet").real + level
    return StripField(w.grid, depth, u + 1j * v, "none")


def dtn_neumann(f: SpectralField, h: float) -> SpectralField:
    """``T_h d_alpha``, symbol ``xi tanh(h xi)``."""
    if np.isinf(h):
        return apply_multiplier(f, np.abs)
    return apply_multiplier(f, lambda k: k * np.tanh(h * k))


def dtn_dirichlet(g: SpectralField, h: float) -> SpectralField:
    """Normal derivative at the top of the Dirichlet-bottom extension, symbol ``xi coth(h xi)``.

    On nonconstant modes this is ``-T_h^{-1} d_alpha``; the zero mode carries
    the exact slope ``1/h`` of the linear profile ``(beta+h)/h``.
    """
    def sym(k):
        k = np.asarray(k, dtype=float)
        out = np.empty(k.shape)
        z = k == 0
        out[z] = 0.0 if np.isinf(h) else 1.0 / h
        kk = k[~z]
        out[~z] = np.abs(kk) if np.isinf(h) else kk / np.tanh(h * kk)
        return out

    return apply_multiplier(g, sym)


def harmonic_conjugate(f: SpectralField, h: float) -> SpectralField:
    """Top trace ``-T_h f`` of the conjugate (Dirichlet-bottom) harmonic function."""
    return apply_multiplier(f, lambda k: -tilbert_symbol(h)(k))


# Integrals ----------------------------------------------------------------------

def depth_integral(F: StripField | np.ndarray, m_x=None, depth: DepthGrid | None = None,
                   grid: Grid | None = None) -> float:
    """``sum_i sum_j m_x(alpha_i) F_ij w_j dalpha``: trapezoid in alpha, Gauss in beta.

    The alpha rule is spectrally accurate for smooth periodic integrands; the
    beta rule is exact for polynomials of degree ``2 * order - 1`` per panel.
    """
    if isinstance(F, StripField):
        vals, depth, grid = F.values, F.depth, F.grid
    else:
        vals = np.asarray(F)
    if m_x is None:
        mw = np.ones(grid.n)
    elif isinstance(m_x, SpectralField):
        mw = m_x.values
    else:
        mw = np.broadcast_to(np.asarray(m_x, dtype=float), (grid.n,))
    col = vals @ depth.weights
    return float(np.real(np.sum(mw * col)) * grid.spacing)


def moment_integral(F: StripField, m_x=None, power: int = 1, shift: float = 0.0) -> float:
    """``depth_integral`` of ``(beta - shift)^power F``."""
    fac = (F.depth.nodes - shift) ** power
    return depth_integral(F.values * fac[None, :], m_x, F.depth, F.grid)


def parabolic_ratio(g: SpectralField, s: float, h: float, order: int = 64,
                    h_eff: float | None = None, oversample: int = 4) -> float:
    """``||beta^{-s} v||_{L^2_beta L^inf_alpha} / ||g||_{H^s_h}`` for the Dirichlet extension ``v``.

    The singular weight ``|beta|^{-2s}`` is absorbed into a Gauss-Jacobi rule;
    the alpha supremum is taken on an ``oversample``-times refined grid.
    """
    if not s < 0.5:
        raise ValueError("parabolic estimate requires s < 1/2")
    denom = sobolev_norm_h(g, "Hs_h", h, s=s)
    if denom == 0:
        return 0.0
    if np.isinf(h):
        h_eff = h_eff if h_eff is not None else default_h_eff(g.grid)
    else:
        h_eff = h
    # nodes t in (-1,1) with weight (1-t)^a (1+t)^0 ; beta = -h_eff (1 - t)/2 => |beta|^{-2s}
    t, w = roots_jacobi(order, -2 * s, 0.0)
    beta = -0.5 * h_eff * (1 - t)
    w = w * (0.5 * h_eff) ** (1 - 2 * s)
    fine = g.grid.refine(oversample)
    c = np.zeros(fine.n, dtype=complex)
    n = g.grid.n
    cg = np.fft.fft(np.real(g.values)) / n
    c[: n // 2] = cg[: n // 2]
    c[-(n // 2) + 1:] = cg[-(n // 2) + 1:]
    c[fine.n - n // 2] = 0.5 * cg[n // 2]
    c[n // 2] = 0.5 * cg[n // 2]
    vals = _extension_values(c, fine, beta, h, "dirichlet").real
    sup = np.max(np.abs(vals), axis=0)
    return float(np.sqrt(np.sum(w * sup ** 2)) / denom)


# Pointwise evaluation -------------------------------------------------------------

def evaluate_extension(coeffs: np.ndarray, grid: Grid, alpha, beta, h: float, kind: str,
                       derivs: bool = False, tol: float = 1e-15):
    """Evaluate the extension of ``sum c_k e^{ik(alpha-x0)}`` at scattered ``(alpha, beta)``.

    Returns the (complex-coefficient) values, or ``(value, d_alpha, d_beta)``
    when ``derivs``. Modes below ``tol * max|c|`` are skipped.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    beta = np.broadcast_to(np.asarray(beta, dtype=float), alpha.shape)
    c = np.asarray(coeffs, dtype=complex)
    k = grid.k.copy()
    nyq = grid.nyquist_index
    cmax = max(np.max(np.abs(c)), 1e-300)
    keep = np.abs(c) > tol * cmax
    if keep[nyq]:
        # fold the Nyquist coefficient into a symmetric pair (cosine)
        c = np.append(c, 0.5 * c[nyq])
        k = np.append(k, -k[nyq])
        c[nyq] *= 0.5
        keep = np.append(keep, True)
    ck, kk = c[keep], k[keep]
    a = alpha.ravel()[:, None]
    b = beta.ravel()[:, None]
    sym = _symbol(kind, 0)
    e = np.exp(1j * kk[None, :] * (a - grid.x0))
    p = sym(kk[None, :], b, h)
    val = (e * p) @ ck
    if not derivs:
        return val.reshape(alpha.shape)
    dp = _symbol(kind, 1)(kk[None, :], b, h)
    da = (e * p * (1j * kk[None, :])) @ ck
    db = (e * dp) @ ck
    return val.reshape(alpha.shape), da.reshape(alpha.shape), db.reshape(alpha.shape)


def tilbert_real(values: np.ndarray, grid: Grid, h: float) -> np.ndarray:
    return tilbert_array(np.real(values), grid, h)
