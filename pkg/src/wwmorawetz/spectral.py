"""Periodic spectral toolbox.

Everything lives on a uniform periodic grid, which stands in for the real
line. Fourier coefficients are normalized so that
``f(x) = sum_k c_k exp(i k (x - x0))`` where ``x0`` is the left end of the
grid; phases relative to ``x0`` cancel in every multiplier and bilinear
operation, so the offset never has to be carried around explicitly.

Conventions worth knowing:

* Odd symbols (derivatives, Tilbert transforms) annihilate the Nyquist mode.
  The Nyquist coefficient is multiplied by the symmetrized symbol
  ``(s(k_N) + s(-k_N)) / 2``, which keeps real fields real.
* ``h = numpy.inf`` selects infinite depth everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable

import numpy as np

__all__ = [
    "Grid",
    "SpectralField",
    "FrequencyEnvelope",
    "SingularSymbolError",
    "MeanModeError",
    "apply_multiplier",
    "tilbert_symbol",
    "tilbert",
    "tilbert_inv",
    "holomorphic_project",
    "holomorphy_residual",
    "lp_bump",
    "lp_levels",
    "lp_block",
    "bilinear_multiplier",
    "sobolev_weight",
    "sobolev_norm_h",
    "block_norms",
    "min_envelope",
    "dealias",
    "SPACE_TAGS",
    "random_field",
    "inner",
    "trig_eval",
    "multiplier_array",
    "tilbert_array",
    "tilbert_inv_array",
    "deriv_array",
    "project_arrays",
    "base_frequency",
    "lp_symbol",
    "envelope_from_norms",
    "dealias_mask",
    "canonical_space",
]


class SingularSymbolError(ValueError):
    """A multiplier symbol was not finite at a grid wavenumber."""


class MeanModeError(ValueError):
    """An operator that is only defined modulo constants received a mean."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid of ``n`` points on ``[x0, x0 + period)``."""

    n: int
    period: float = 2 * np.pi
    x0: float | None = None

    def __post_init__(self):
        if self.n <= 0 or self.n % 2:
            raise ValueError(f"grid size must be a positive even integer, got {self.n}")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")
        if self.x0 is None:
            object.__setattr__(self, "x0", -self.period / 2)

    @property
    def spacing(self) -> float:
        return self.period / self.n

    @cached_property
    def x(self) -> np.ndarray:
        return self.x0 + self.spacing * np.arange(self.n)

    @cached_property
    def k(self) -> np.ndarray:
        """Wavenumbers in FFT order, ``2 pi j / L`` for ``j`` in ``[-n/2, n/2)``."""
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    @property
    def dk(self) -> float:
        return 2 * np.pi / self.period

    @property
    def k_max(self) -> float:
        return self.dk * (self.n // 2)

    @property
    def nyquist_index(self) -> int:
        return self.n // 2

    def field(self, values) -> "SpectralField":
        return SpectralField(self, np.asarray(values))

    def from_function(self, fun: Callable[[np.ndarray], np.ndarray]) -> "SpectralField":
        return SpectralField(self, np.asarray(fun(self.x)))

    def zeros(self, dtype=float) -> "SpectralField":
        return SpectralField(self, np.zeros(self.n, dtype=dtype))

    def refine(self, factor: int = 2) -> "Grid":
        return Grid(self.n * factor, self.period, self.x0)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Samples of a periodic function together with lazily computed coefficients."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite samples")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_coeffs(cls, grid: Grid, coeffs: np.ndarray, real: bool | None = None) -> "SpectralField":
        vals = np.fft.ifft(np.asarray(coeffs) * grid.n)
        if real is None:
            real = _is_conjugate_symmetric(coeffs)
        return cls(grid, vals.real if real else vals)

    @cached_property
    def coeffs(self) -> np.ndarray:
        return np.fft.fft(self.values) / self.grid.n

    @property
    def realness(self) -> bool:
        return not np.iscomplexobj(self.values)

    @property
    def real(self) -> "SpectralField":
        return SpectralField(self.grid, self.values.real.copy())

    @property
    def imag(self) -> "SpectralField":
        return SpectralField(self.grid, np.imag(self.values).copy())

    def conj(self) -> "SpectralField":
        return SpectralField(self.grid, np.conj(self.values))

    def mean(self):
        return self.values.mean()

    def integral(self):
        return self.values.sum() * self.grid.spacing

    def l2(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.spacing))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def derivative(self, order: int = 1) -> "SpectralField":
        return apply_multiplier(self, lambda k: (1j * k) ** order)

    def evaluate(self, points) -> np.ndarray:
        """Trigonometric interpolation at arbitrary points (direct sum)."""
        return trig_eval(self.coeffs, self.grid, np.asarray(points, dtype=float),
                         real=self.realness)

    def _coerce(self, other):
        if isinstance(other, SpectralField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return SpectralField(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return SpectralField(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return SpectralField(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return SpectralField(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return SpectralField(self.grid, self.values / self._coerce(other))

    def __neg__(self):
        return SpectralField(self.grid, -self.values)


def _is_conjugate_symmetric(coeffs: np.ndarray, rtol: float = 1e-12) -> bool:
    c = np.asarray(coeffs)
    if not np.iscomplexobj(c):
        return True
    n = c.size
    mirrored = np.conj(c[(-np.arange(n)) % n])
    scale = max(np.max(np.abs(c)), 1e-300)
    return bool(np.max(np.abs(c - mirrored)) <= rtol * scale)


def trig_eval(coeffs: np.ndarray, grid: Grid, points: np.ndarray, real: bool = False,
              tol: float = 0.0) -> np.ndarray:
    """Evaluate ``sum_k c_k exp(i k (x - x0))`` at scattered points.

    Modes with ``|c_k| <= tol * max|c|`` are skipped; the Nyquist mode is
    evaluated as a cosine so that real fields interpolate to real values.
    """
    c = np.asarray(coeffs, dtype=complex).copy()
    k = grid.k.copy()
    nyq = grid.nyquist_index
    keep = np.abs(c) > tol * max(np.max(np.abs(c)), 1e-300) if tol > 0 else np.ones(c.size, bool)
    keep[nyq] = False
    pts = points.ravel() - grid.x0
    out = np.exp(1j * np.outer(pts, k[keep])) @ c[keep]
    if c[nyq] != 0:
        out = out + c[nyq] * np.cos(k[nyq] * pts)
    out = out.reshape(points.shape)
    return out.real if real else out


def _eval_symbol(symbol, k: np.ndarray) -> np.ndarray:
    if callable(symbol):
        with np.errstate(all="ignore"):
            s = np.asarray(symbol(k))
        s = np.broadcast_to(s, k.shape)
    else:
        s = np.broadcast_to(np.asarray(symbol), k.shape)
    bad = ~np.isfinite(s)
    if np.any(bad):
        raise SingularSymbolError(f"symbol is not finite at wavenumber {k[bad][0]!r}")
    return s


def multiplier_array(symbol, grid: Grid) -> np.ndarray:
    """Symbol sampled in FFT order with the Nyquist entry symmetrized."""
    k = grid.k
    s = np.array(_eval_symbol(symbol, k), dtype=complex)
    nyq = grid.nyquist_index
    s_minus = _eval_symbol(symbol, np.array([-k[nyq]]))[0]
    s[nyq] = 0.5 * (s[nyq] + s_minus)
    return s


def _apply(values: np.ndarray, mult: np.ndarray, real_out: bool) -> np.ndarray:
    out = np.fft.ifft(np.fft.fft(values) * mult)
    return out.real if real_out else out


def apply_multiplier(f: SpectralField, symbol) -> SpectralField:
    """Apply the Fourier multiplier ``symbol(xi)`` to ``f``.

    Realness is kept when ``symbol(-xi) == conj(symbol(xi))``.
    """
    mult = multiplier_array(symbol, f.grid)
    real_out = f.realness and _is_conjugate_symmetric(mult, rtol=1e-14) and _hermitian_symbol(mult)
    return SpectralField(f.grid, _apply(f.values, mult, real_out))


def _hermitian_symbol(mult: np.ndarray) -> bool:
    n = mult.size
    mirrored = np.conj(mult[(-np.arange(n)) % n])
    return bool(np.allclose(mult, mirrored, rtol=1e-13, atol=1e-300))


def tilbert_symbol(h: float) -> Callable[[np.ndarray], np.ndarray]:
    if np.isinf(h):
        return lambda k: -1j * np.sign(k)
    return lambda k: -1j * np.tanh(h * k)


def tilbert_inv_symbol(h: float) -> Callable[[np.ndarray], np.ndarray]:
    """``i coth(h xi)`` away from zero, 0 at the zero mode."""

    def sym(k):
        k = np.asarray(k, dtype=float)
        out = np.zeros(k.shape, dtype=complex)
        nz = k != 0
        if np.isinf(h):
            out[nz] = 1j * np.sign(k[nz])
        else:
            out[nz] = 1j / np.tanh(h * k[nz])
        return out

    return sym


# Array-level kernels used by the solver and diagnostics (no SpectralField overhead).

def tilbert_array(values: np.ndarray, grid: Grid, h: float) -> np.ndarray:
    mult = multiplier_array(tilbert_symbol(h), grid)
    return _apply(values, mult, not np.iscomplexobj(values))


def tilbert_inv_array(values: np.ndarray, grid: Grid, h: float) -> np.ndarray:
    mult = multiplier_array(tilbert_inv_symbol(h), grid)
    return _apply(values, mult, not np.iscomplexobj(values))


def deriv_array(values: np.ndarray, grid: Grid, order: int = 1) -> np.ndarray:
    mult = multiplier_array(lambda k: (1j * k) ** order, grid)
    return _apply(values, mult, not np.iscomplexobj(values))


def _rms(v: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.abs(v) ** 2)))


def tilbert(f: SpectralField, h: float) -> SpectralField:
    """Tilbert transform, symbol ``-i tanh(h xi)`` (``-i sgn xi`` for infinite depth)."""
    _check_depth(h)
    return apply_multiplier(f, tilbert_symbol(h))


def tilbert_inv(f: SpectralField, h: float, mean_tol: float = 1e-10) -> SpectralField:
    """Inverse Tilbert transform on mean-zero fields; output has zero mean."""
    _check_depth(h)
    m = f.mean()
    if abs(m) > mean_tol * max(_rms(f.values), 1e-300):
        raise MeanModeError(
            f"inverse Tilbert transform is undefined on constants (mean = {m!r})")
    return apply_multiplier(f, tilbert_inv_symbol(h))


def _check_depth(h: float):
    if not h > 0:
        raise ValueError(f"depth must be positive, got {h}")


def holomorphic_project(u: SpectralField, h: float, mean_tol: float = 1e-10) -> SpectralField:
    """Projection onto holomorphic traces (real on the bottom).

    ``P u = (1/2)[(1 - i T) Re u + i (1 + i T^{-1}) Im u]`` plus half the
    mean of ``Re u``, so that real constants (which are holomorphic) are
    fixed and ``P`` is idempotent.
    """
    _check_depth(h)
    a = np.real(u.values)
    b = np.imag(u.values)
    mb = b.mean()
    if abs(mb) > mean_tol * max(_rms(u.values), 1e-300):
        raise MeanModeError(f"imaginary part has nonzero mean {mb!r}")
    b = b - mb
    w = project_arrays(a, b, u.grid, h)
    return SpectralField(u.grid, w)


def project_arrays(a: np.ndarray, b: np.ndarray, grid: Grid, h: float) -> np.ndarray:
    """Holomorphic projection of ``a + i b`` with ``b`` assumed mean-zero."""
    ta = tilbert_array(a, grid, h)
    tib = tilbert_inv_array(b, grid, h)
    re = 0.5 * (a - tib) + 0.5 * a.mean()
    im = 0.5 * (b - ta)
    return re + 1j * im


def holomorphy_residual(w: SpectralField | np.ndarray, h: float, grid: Grid | None = None) -> float:
    """``max |Im w + T Re w - mean(Im w)|``, relative to ``max |w|``."""
    if isinstance(w, SpectralField):
        grid, vals = w.grid, w.values
    else:
        vals = np.asarray(w)
    re = np.real(vals)
    im = np.imag(vals)
    r = im - im.mean() + tilbert_array(re, grid, h)
    return float(np.max(np.abs(r)) / max(np.max(np.abs(vals)), 1e-300))


# Littlewood-Paley decomposition ------------------------------------------------

def lp_bump(s: np.ndarray, transition: float = 0.5) -> np.ndarray:
    """Smooth cutoff ``phi(s)``: 1 below ``s0``, 0 above ``s1``, raised cosine in log2 between.

    ``s0 = sqrt(2) 2^{-t/2}``, ``s1 = sqrt(2) 2^{t/2}`` with ``t`` the
    transition width in octaves, so the blocks ``phi(xi/l) - phi(2 xi/l)``
    are centered (in log scale) on ``l`` and flat near it.
    """
    if not 0 < transition <= 1:
        raise ValueError("transition width must lie in (0, 1] octaves")
    s = np.abs(np.asarray(s, dtype=float))
    lo = np.sqrt(2) * 2 ** (-transition / 2)
    out = np.zeros_like(s)
    out[s <= lo] = 1.0
    mid = (s > lo) & (s < lo * 2 ** transition)
    u = np.log2(s[mid] / lo) / transition
    out[mid] = np.cos(0.5 * np.pi * u) ** 2
    return out


def base_frequency(grid: Grid, h: float, transition: float = 0.5) -> float:
    """``1/h``, or for infinite depth a dyadic level whose low block holds only the mean."""
    if np.isfinite(h):
        return 1.0 / h
    hi = np.sqrt(2) * 2 ** (transition / 2)
    return 2.0 ** np.floor(np.log2(grid.dk / hi))


def lp_levels(grid: Grid, h: float, transition: float = 0.5) -> np.ndarray:
    """Dyadic levels ``lam = 2^j lam0`` (``j >= 1``) needed to cover the grid band."""
    lam0 = base_frequency(grid, h, transition)
    lo = np.sqrt(2) * 2 ** (-transition / 2)
    levels = []
    lam = 2 * lam0
    while True:
        levels.append(lam)
        if lam / 2 * lo > grid.k_max:
            break
        lam *= 2
    return np.array(levels)


def lp_symbol(lam, grid: Grid, h: float, transition: float = 0.5) -> np.ndarray:
    lam0 = base_frequency(grid, h, transition)
    k = np.abs(grid.k)
    if isinstance(lam, str):
        if lam not in ("<=1/h", "≤1/h", "low"):
            raise ValueError(f"unknown block tag {lam!r}")
        return lp_bump(k / lam0, transition)
    lam = float(lam)
    if np.isclose(lam, lam0):
        return lp_bump(k / lam0, transition)
    ratio = np.log2(lam / lam0)
    if lam < lam0 or not np.isclose(ratio, np.round(ratio)):
        raise ValueError(f"{lam} is not a dyadic level >= {lam0}")
    return lp_bump(k / lam, transition) - lp_bump(2 * k / lam, transition)


def lp_block(f: SpectralField, lam, h: float, transition: float = 0.5) -> SpectralField:
    """Littlewood-Paley piece of ``f`` at dyadic level ``lam`` (or the low block ``"<=1/h"``)."""
    mult = lp_symbol(lam, f.grid, h, transition)
    return SpectralField(f.grid, _apply(f.values, mult.astype(complex), f.realness))


# Bilinear multipliers ---------------------------------------------------------

def bilinear_multiplier(b: Callable[[np.ndarray, np.ndarray], np.ndarray],
                        f: SpectralField, g: SpectralField | None = None,
                        symmetrize: bool | None = None) -> SpectralField:
    """``B(f, g)(x) = sum_{xi, zeta} e^{i x (xi + zeta)} b(xi, zeta) f^(xi) g^(zeta)``.

    Plain O(N^2) double sum. Output frequencies outside the open band
    ``|k| < k_Nyquist`` are dropped. With ``g`` omitted (or identical to
    ``f``) the symbol is symmetrized.
    """
    same = g is None or g is f
    if g is None:
        g = f
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    grid = f.grid
    n = grid.n
    idx = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    k = grid.k
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    with np.errstate(all="ignore"):
        sym = np.asarray(b(K1, K2))
        if symmetrize or (symmetrize is None and same):
            sym = 0.5 * (sym + np.asarray(b(K2, K1)))
    sym = np.broadcast_to(sym, K1.shape)
    bad = ~np.isfinite(sym)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise SingularSymbolError(f"bilinear symbol not finite at (xi, zeta) = ({k[i]!r}, {k[j]!r})")
    prod = sym * np.outer(f.coeffs, g.coeffs)
    out_idx = idx[:, None] + idx[None, :]
    inside = np.abs(out_idx) < n // 2
    pos = out_idx[inside] % n
    vals = prod[inside]
    out = np.zeros(n, dtype=complex)
    np.add.at(out, pos, vals)
    real = f.realness and g.realness and _is_conjugate_symmetric(out, rtol=1e-10)
    return SpectralField.from_coeffs(grid, out, real=real)


# h-adapted Sobolev norms ------------------------------------------------------

SPACE_TAGS = ("H1/2_h-sum", "H1_h", "H1/4_h-cap", "H3/4_h-sum", "H3/2_h", "Hs_h", "Hdot_s", "L2")

_TAG_ALIASES = {
    "H½_h-sum": "H1/2_h-sum", "H¼_h-cap": "H1/4_h-cap", "H¾_h-sum": "H3/4_h-sum",
    "Ḣs": "Hdot_s", "Hdot^s": "Hdot_s", "H^s_h": "Hs_h",
}


def canonical_space(space: str) -> str:
    return _TAG_ALIASES.get(space, space)


def sobolev_weight(k: np.ndarray, space: str, h: float, s: float | None = None) -> np.ndarray:
    """Fourier weight of an h-adapted Sobolev norm.

    The notation ``lam X`` carries the norm ``lam^{-1} ||.||_X`` (as in the
    energy space, where ``g^{-1/2} L^2`` pairs with ``g ||eta||^2``), so every
    sum/intersection space switches regime at ``|xi| = 1/h``.
    """
    space = canonical_space(space)
    a = np.abs(np.asarray(k, dtype=float))
    hinv = 0.0 if np.isinf(h) else 1.0 / h
    with np.errstate(divide="ignore"):
        if space == "L2":
            return np.ones_like(a)
        if space == "Hdot_s":
            if s is None:
                raise ValueError("Hdot_s needs an exponent s")
            w = np.where(a > 0, a ** s, 0.0) if s != 0 else np.ones_like(a)
            return w
        if space == "H1/2_h-sum":
            if np.isinf(h):
                return np.sqrt(a)
            return np.minimum(np.sqrt(a), np.sqrt(h) * a)
        if space == "H3/4_h-sum":
            if np.isinf(h):
                return a ** 0.75
            return np.minimum(a ** 0.75, h ** 0.25 * a)
        if space == "H1/4_h-cap":
            return np.maximum(a, hinv) ** 0.25
        if space == "H1_h":
            return np.maximum(a, hinv)
        if space == "H3/2_h":
            return np.maximum(a, hinv) ** 1.5
        if space == "Hs_h":
            if s is None:
                raise ValueError("Hs_h needs an exponent s")
            base = np.maximum(a, hinv)
            return np.where(base > 0, base ** s, 0.0 if s < 0 else (1.0 if s == 0 else 0.0))
    raise ValueError(f"unknown space tag {space!r}; expected one of {SPACE_TAGS}")


def sobolev_norm_h(f: SpectralField, space: str, h: float, g: float | None = None,
                   s: float | None = None) -> float:
    """Fourier-weighted norm ``(L sum_k w(k)^2 |c_k|^2)^{1/2}``.

    ``g`` is accepted for symmetry with the energy-type norms and ignored for
    single-field spaces.
    """
    w = sobolev_weight(f.grid.k, space, h, s)
    return float(np.sqrt(f.grid.period * np.sum(w ** 2 * np.abs(f.coeffs) ** 2)))


def block_norms(f: SpectralField, h: float, space: str = "L2", s: float | None = None,
                transition: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Levels ``(lam0, 2 lam0, ...)`` and the norms of the corresponding LP pieces."""
    lam0 = base_frequency(f.grid, h, transition)
    levels = np.concatenate([[lam0], lp_levels(f.grid, h, transition)])
    norms = np.array([
        sobolev_norm_h(lp_block(f, lam, h, transition), space, h, s=s) for lam in levels
    ])
    return levels, norms


@dataclass(frozen=True)
class FrequencyEnvelope:
    """Dyadic envelope ``c_lam`` for ``lam = base_freq * 2^j``."""

    base_freq: float
    levels: np.ndarray
    values: np.ndarray
    delta: float
    block_norms: np.ndarray = field(repr=False, default=None)

    def is_admissible(self, rtol: float = 1e-12) -> bool:
        c = self.values
        if self.block_norms is not None and np.any(self.block_norms > c * (1 + rtol) + 1e-300):
            return False
        r = self.levels[:, None] / self.levels[None, :]
        bound = np.maximum(r, 1 / r) ** self.delta
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(c[None, :] > 0, c[:, None] / c[None, :], 0.0)
        return bool(np.all(q <= bound * (1 + rtol)))

    def is_minimal(self, factor: float = 1 - 1e-6) -> bool:
        """No single ``c_lam`` can be lowered by ``factor`` without breaking admissibility."""
        if self.block_norms is None:
            raise ValueError("minimality needs the measured block norms")
        for j in range(self.values.size):
            if self.values[j] == 0:
                continue
            trial = self.values.copy()
            trial[j] *= factor
            env = FrequencyEnvelope(self.base_freq, self.levels, trial, self.delta, self.block_norms)
            if env.is_admissible(rtol=0.0):
                return False
        return True

    def l1(self) -> float:
        return float(np.sum(self.values))


def envelope_from_norms(levels: np.ndarray, norms: np.ndarray, delta: float) -> np.ndarray:
    r = levels[:, None] / levels[None, :]
    factor = np.minimum(r, 1 / r) ** delta
    return np.max(norms[None, :] * factor, axis=1)


def min_envelope(f: SpectralField, delta: float = 0.1, h: float = 1.0, space: str = "L2",
                 s: float | None = None, transition: float = 0.5) -> FrequencyEnvelope:
    """Minimal frequency envelope ``c_lam = max_mu ||P_mu f|| min((lam/mu)^d, (mu/lam)^d)``."""
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    levels, norms = block_norms(f, h, space, s, transition)
    c = envelope_from_norms(levels, norms, delta)
    return FrequencyEnvelope(levels[0], levels, c, delta, norms)


def dealias_mask(grid: Grid, fraction: float = 2.0 / 3.0) -> np.ndarray:
    mask = np.abs(grid.k) <= fraction * grid.k_max
    mask[grid.nyquist_index] = False
    return mask


def dealias(f: SpectralField, fraction: float = 2.0 / 3.0) -> SpectralField:
    """Zero all coefficients with ``|xi| > fraction * xi_max`` (and the Nyquist mode)."""
    mask = dealias_mask(f.grid, fraction)
    out = np.fft.ifft(np.fft.fft(f.values) * mask)
    return SpectralField(f.grid, out.real if f.realness else out)


def random_field(grid: Grid, rng: np.random.Generator, kmax: float | None = None,
                 decay: float = 0.0, mean: float = 0.0, amplitude: float = 1.0) -> SpectralField:
    """Random smooth real field with modes ``0 < |k| <= kmax`` and ``exp(-decay |k|)`` spectrum."""
    k = grid.k
    if kmax is None:
        kmax = grid.k_max / 2
    c = (rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)) * np.exp(-decay * np.abs(k))
    c[(np.abs(k) > kmax) | (k == 0)] = 0
    c[grid.nyquist_index] = 0
    c = 0.5 * (c + np.conj(c[(-np.arange(grid.n)) % grid.n]))
    vals = np.fft.ifft(c * grid.n).real
    vals *= amplitude / max(np.max(np.abs(vals)), 1e-300)
    return SpectralField(grid, vals + mean)


def inner(f: SpectralField, g: SpectralField) -> float:
    return float(np.real(np.sum(f.values * np.conj(g.values))) * f.grid.spacing)


def iter_levels(env: FrequencyEnvelope) -> Iterable[tuple[float, float]]:
    return zip(env.levels, env.values)
