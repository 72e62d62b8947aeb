import numpy as np
import pytest

from wwmorawetz import spectral as sp


@pytest.fixture
def grid():
    return sp.Grid(64, 2 * np.pi)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


class TestGrid:
    def test_odd_rejected(self):
        with pytest.raises(ValueError):
            sp.Grid(63, 1.0)

    def test_spacing_and_wavenumbers(self, grid):
        assert grid.spacing * grid.n == pytest.approx(grid.period)
        k = np.sort(grid.k)
        assert k[0] == pytest.approx(-grid.k_max)
        # symmetric except the Nyquist mode
        assert np.allclose(np.sort(-k[1:]), k[1:])

    def test_roundtrip_and_parseval(self, grid, rng):
        f = sp.random_field(grid, rng)
        assert np.allclose(np.fft.ifft(f.coeffs * grid.n).real, f.values, atol=1e-12)
        l2_samples = np.sum(f.values ** 2) * grid.spacing
        l2_coeffs = grid.period * np.sum(np.abs(f.coeffs) ** 2)
        assert abs(l2_samples - l2_coeffs) / l2_samples < 1e-12

    def test_realness_flag(self, grid, rng):
        f = sp.random_field(grid, rng)
        assert f.realness
        c = f.coeffs
        assert np.allclose(c[1:grid.n // 2], np.conj(c[-1:-grid.n // 2:-1]), rtol=1e-12)


class TestMultiplier:
    def test_identity(self, grid, rng):
        f = sp.random_field(grid, rng)
        assert np.allclose(sp.apply_multiplier(f, lambda k: np.ones_like(k)).values, f.values)

    def test_derivative(self, grid):
        x = grid.x
        out = sp.apply_multiplier(grid.field(np.sin(3 * x)), lambda k: 1j * k)
        assert np.allclose(out.values, 3 * np.cos(3 * x), atol=1e-12)

    def test_abs_symbol_against_direct_sum(self, grid):
        x = grid.x
        f = grid.field(np.cos(2 * x))
        out = sp.apply_multiplier(f, np.abs)
        # brute-force O(N^2) DFT
        n = grid.n
        j = np.arange(n)
        E = np.exp(-2j * np.pi * np.outer(j, j) / n)
        c = E @ f.values / n
        m = np.abs(np.fft.fftfreq(n, 1 / n)) * 2 * np.pi / grid.period
        ref = np.real(np.conj(E) @ (m * c))
        assert np.allclose(out.values, ref, atol=1e-12)
        assert np.allclose(out.values, 2 * np.cos(2 * x), atol=1e-12)

    def test_singular_symbol(self, grid, rng):
        f = sp.random_field(grid, rng)
        with pytest.raises(sp.SingularSymbolError, match="0"):
            sp.apply_multiplier(f, lambda k: 1 / k)


class TestTilbert:
    @pytest.mark.parametrize("h", [0.5, 1.0, 3.0])
    def test_single_mode(self, grid, h):
        x = grid.x - grid.x0
        out = sp.tilbert(grid.field(np.cos(3 * x)), h)
        assert np.allclose(out.values, np.tanh(3 * h) * np.sin(3 * x), atol=1e-13)

    def test_constant_and_hilbert(self, grid):
        x = grid.x - grid.x0
        assert np.allclose(sp.tilbert(grid.field(np.full(grid.n, 2.0)), 1.0).values, 0)
        assert np.allclose(sp.tilbert(grid.field(np.cos(2 * x)), np.inf).values, np.sin(2 * x), atol=1e-13)

    def test_skew_symmetry(self, grid, rng):
        f, g = sp.random_field(grid, rng), sp.random_field(grid, rng)
        lhs = sp.inner(sp.tilbert(f, 1.0), g)
        rhs = -sp.inner(f, sp.tilbert(g, 1.0))
        assert abs(lhs - rhs) < 1e-12 * f.l2() * g.l2()

    def test_inverse(self, grid, rng):
        x = grid.x - grid.x0
        # symbol i coth(h xi): sin -> +cos / tanh
        out = sp.tilbert_inv(grid.field(np.sin(2 * x)), 1.0)
        assert np.allclose(out.values, np.cos(2 * x) / np.tanh(2.0), atol=1e-13)
        f = sp.random_field(grid, rng)
        assert np.max(np.abs(sp.tilbert_inv(sp.tilbert(f, 1.0), 1.0).values - f.values)) < 1e-10
        assert np.max(np.abs(sp.tilbert(sp.tilbert_inv(f, 1.0), 1.0).values - f.values)) < 1e-10

    def test_inverse_mean_error(self, grid):
        with pytest.raises(sp.MeanModeError):
            sp.tilbert_inv(grid.field(np.ones(grid.n)), 1.0)

    def test_large_depth_no_overflow(self, grid, rng):
        f = sp.random_field(grid, rng)
        out = sp.tilbert(f, 1e4)
        assert np.all(np.isfinite(out.values))


class TestProjection:
    def test_fixes_holomorphic(self, grid, rng):
        re = sp.random_field(grid, rng)
        u = sp.SpectralField(grid, re.values - 1j * sp.tilbert(re, 1.0).values)
        assert np.allclose(sp.holomorphic_project(u, 1.0).values, u.values, atol=1e-12)

    def test_kills_antiholomorphic(self, grid):
        x = grid.x - grid.x0
        re = np.cos(3 * x)
        u = sp.SpectralField(grid, re + 1j * np.tanh(3.0) * np.sin(3 * x))
        assert np.max(np.abs(sp.holomorphic_project(u, 1.0).values)) < 1e-12

    def test_idempotent_and_range(self, grid, rng):
        u = sp.SpectralField(grid, sp.random_field(grid, rng).values + 1j * sp.random_field(grid, rng).values)
        p = sp.holomorphic_project(u, 1.0)
        assert np.max(np.abs(sp.holomorphic_project(p, 1.0).values - p.values)) < 1e-10
        assert sp.holomorphy_residual(p, 1.0) < 1e-10

    def test_mean_error(self, grid):
        u = sp.SpectralField(grid, np.full(grid.n, 1j))
        with pytest.raises(sp.MeanModeError):
            sp.holomorphic_project(u, 1.0)


class TestLittlewoodPaley:
    def test_partition(self, rng):
        grid = sp.Grid(256, 2 * np.pi * 8)
        f = sp.random_field(grid, rng)
        total = sp.lp_block(f, "low", 1.0)
        for lam in sp.lp_levels(grid, 1.0):
            total = total + sp.lp_block(f, lam, 1.0)
        assert np.max(np.abs(total.values - f.values)) < 1e-12

    def test_support(self):
        grid = sp.Grid(256, 2 * np.pi * 8)
        levels = sp.lp_levels(grid, 1.0)
        lam = levels[2]
        k = lam  # center of its own block, in log scale
        j = int(round(k / grid.dk))
        x = grid.x - grid.x0
        f = grid.field(np.cos(j * grid.dk * x))
        assert np.allclose(sp.lp_block(f, lam, 1.0).values, f.values, atol=1e-12)
        for far in (levels[0], levels[4]):
            assert np.max(np.abs(sp.lp_block(f, far, 1.0).values)) < 1e-12

    def test_zero(self, grid):
        assert np.all(sp.lp_block(grid.zeros(), sp.lp_levels(grid, 1.0)[0], 1.0).values == 0)


class TestBilinear:
    def test_product(self, grid, rng):
        f = sp.random_field(grid, rng, kmax=grid.k_max / 2 - 1)
        g = sp.random_field(grid, rng, kmax=grid.k_max / 2 - 1)
        out = sp.bilinear_multiplier(lambda a, b: np.ones_like(a), f, g)
        assert np.max(np.abs(out.values - f.values * g.values)) < 1e-10

    def test_derivative_in_first(self, grid, rng):
        f = sp.random_field(grid, rng, kmax=grid.k_max / 2 - 1)
        g = sp.random_field(grid, rng, kmax=grid.k_max / 2 - 1)
        out = sp.bilinear_multiplier(lambda a, b: 1j * a, f, g)
        assert np.max(np.abs(out.values - f.derivative().values * g.values)) < 1e-10

    def test_symmetrized_when_equal(self, grid, rng):
        f = sp.random_field(grid, rng, kmax=grid.k_max / 2 - 1)
        a = sp.bilinear_multiplier(lambda x, z: 1j * x, f)
        b = sp.bilinear_multiplier(lambda x, z: 0.5j * (x + z), f)
        assert np.allclose(a.values, b.values, atol=1e-12)

    def test_singular(self, grid, rng):
        f = sp.random_field(grid, rng)
        with pytest.raises(sp.SingularSymbolError):
            sp.bilinear_multiplier(lambda x, z: 1 / (x - z), f)


class TestSobolev:
    def test_zero(self, grid):
        for tag in ("H1/2_h-sum", "H1_h", "H1/4_h-cap", "H3/4_h-sum", "H3/2_h"):
            assert sp.sobolev_norm_h(grid.zeros(), tag, 1.0) == 0

    def test_single_mode(self, grid):
        x = grid.x
        f = grid.field(np.cos(3 * x))
        val = sp.sobolev_norm_h(f, "Hdot_s", 1.0, s=0.5)
        assert val == pytest.approx(np.sqrt(grid.period / 2) * 3 ** 0.5, rel=1e-12)

    def test_cap_on_constant(self, grid):
        # the weight switches at |xi| = 1/h, so a constant carries h^{-1/4}
        h, c = 4.0, 0.7
        val = sp.sobolev_norm_h(grid.field(np.full(grid.n, c)), "H1/4_h-cap", h)
        assert val == pytest.approx(h ** -0.25 * c * np.sqrt(grid.period), rel=1e-12)

    def test_unknown_tag(self, grid):
        with pytest.raises(ValueError):
            sp.sobolev_norm_h(grid.zeros(), "H7", 1.0)


class TestEnvelope:
    def test_single_block(self):
        grid = sp.Grid(256, 2 * np.pi * 8)
        levels = sp.lp_levels(grid, 1.0)
        mu = levels[2]
        j = int(round(mu / grid.dk))
        f = grid.field(np.cos(j * grid.dk * (grid.x - grid.x0)))
        env = sp.min_envelope(f, 0.1, 1.0)
        i = int(np.argmin(np.abs(env.levels - mu)))
        norm = env.block_norms[i]
        ref = norm * np.minimum(env.levels / mu, mu / env.levels) ** 0.1
        assert np.allclose(env.values, ref, rtol=1e-12)
        assert env.is_admissible() and env.is_minimal()

    def test_zero(self, grid):
        env = sp.min_envelope(grid.zeros(), 0.1, 1.0)
        assert np.all(env.values == 0)

    def test_two_blocks_pointwise_max(self, rng):
        grid = sp.Grid(256, 2 * np.pi * 8)
        f = sp.random_field(grid, rng)
        env = sp.min_envelope(f, 0.2, 1.0)
        brute = np.array([max(n * min((l / m) ** 0.2, (m / l) ** 0.2)
                              for n, m in zip(env.block_norms, env.levels)) for l in env.levels])
        assert np.allclose(env.values, brute, rtol=1e-14)
        assert env.is_admissible() and env.is_minimal()

    def test_delta_range(self, grid):
        with pytest.raises(ValueError):
            sp.min_envelope(grid.zeros(), 0.6, 1.0)


class TestDealias:
    def test_idempotent_and_nyquist(self, grid, rng):
        f = sp.random_field(grid, rng)
        d = sp.dealias(f)
        assert np.allclose(sp.dealias(d).values, d.values)
        nyq = grid.field(np.cos(np.pi * np.arange(grid.n)))
        assert np.max(np.abs(sp.dealias(nyq).values)) < 1e-14

    def test_band_limited_identity(self, grid, rng):
        f = sp.random_field(grid, rng, kmax=grid.k_max / 2 - 1)
        assert np.allclose(sp.dealias(f).values, f.values, atol=1e-13)

    def test_product_against_fine_grid(self, grid, rng):
        f = sp.dealias(sp.random_field(grid, rng))
        g = sp.dealias(sp.random_field(grid, rng))
        prod = sp.dealias(f * g)
        fine = grid.refine(2)
        fv = sp.trig_eval(f.coeffs, grid, fine.x, real=True)
        gv = sp.trig_eval(g.coeffs, grid, fine.x, real=True)
        exact = fine.field(fv * gv)
        exact_on_coarse = sp.dealias(grid.field(sp.trig_eval(exact.coeffs, fine, grid.x, real=True)))
        assert np.max(np.abs(prod.values - exact_on_coarse.values)) < 1e-12
