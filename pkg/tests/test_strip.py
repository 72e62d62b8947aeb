import numpy as np
import pytest

from wwmorawetz import spectral as sp
from wwmorawetz import strip as st


@pytest.fixture
def grid():
    return sp.Grid(64, 2 * np.pi)


@pytest.fixture
def rng():
    return np.random.default_rng(11)


def depth(h, order=48):
    return st.DepthGrid.gauss(h, order=order)


class TestDepthGrid:
    @pytest.mark.parametrize("h", [0.3, 1.0, 7.0])
    def test_weights_sum(self, h):
        d = depth(h)
        assert abs(d.total() - h) < 1e-12
        assert np.all((d.nodes > -h) & (d.nodes < 0))

    def test_infinite_needs_truncation(self, grid):
        with pytest.raises(ValueError):
            st.DepthGrid.gauss(np.inf)
        d = st.DepthGrid.for_grid(grid, np.inf)
        assert np.isfinite(d.h_eff) and abs(d.total() - d.h_eff) < 1e-10

    def test_bad_depth(self):
        with pytest.raises(ValueError):
            st.DepthGrid.gauss(-1.0)


class TestNeumann:
    def test_constant(self, grid):
        u = st.extend_neumann(grid.field(np.full(grid.n, 2.5)), depth(1.0))
        assert np.allclose(u.values, 2.5, atol=1e-14)

    @pytest.mark.parametrize("k", [1, 3, 9])
    def test_single_mode(self, grid, k):
        h = 1.3
        d = depth(h)
        u = st.extend_neumann(grid.field(np.cos(k * grid.x)), d)
        ref = np.cos(k * grid.x)[:, None] * (np.cosh((d.nodes + h) * k) / np.cosh(h * k))[None, :]
        assert np.max(np.abs(u.values - ref)) < 1e-13

    def test_bottom_derivative(self, grid, rng):
        h = 1.0
        u = st.extend_neumann(sp.random_field(grid, rng), depth(h))
        exact = np.max(np.abs(u.at([-h], dbeta=1)))
        assert exact < 1e-12
        eps = 1e-4
        fd = (u.at([-h + eps]) - u.at([-h]))[:, 0] / eps
        # one-sided FD picks up O(eps) curvature; the first derivative itself vanishes
        assert np.max(np.abs(fd)) < 10 * eps * np.max(np.abs(u.at([-h], dalpha=2)))

    def test_top_trace(self, grid, rng):
        f = sp.random_field(grid, rng)
        assert np.max(np.abs(st.extend_neumann(f, depth(1.0)).top() - f.values)) < 1e-13

    def test_large_depth_stable(self, grid, rng):
        f = sp.random_field(grid, rng)
        u = st.extend_neumann(f, depth(500.0))
        assert np.all(np.isfinite(u.values))


class TestDirichlet:
    def test_constant_linear_profile(self, grid):
        h = 2.0
        d = depth(h)
        v = st.extend_dirichlet(grid.field(np.full(grid.n, 3.0)), d)
        assert np.allclose(v.values, 3.0 * (d.nodes + h)[None, :] / h, atol=1e-13)

    def test_bottom_zero(self, grid, rng):
        v = st.extend_dirichlet(sp.random_field(grid, rng, mean=0.4), depth(1.0))
        assert np.max(np.abs(v.bottom())) < 1e-10

    def test_half_depth(self, grid):
        h, k = 1.0, 2
        v = st.extend_dirichlet(grid.field(np.cos(k * grid.x)), depth(h))
        ref = np.cos(k * grid.x) * np.sinh(h * k / 2) / np.sinh(h * k)
        assert np.max(np.abs(v.at([-h / 2])[:, 0] - ref)) < 1e-13


class TestDtN:
    @pytest.mark.parametrize("k", [1, 2, 5])
    def test_neumann_symbol(self, grid, k):
        h = 0.7
        out = st.dtn_neumann(grid.field(np.cos(k * grid.x)), h)
        assert np.allclose(out.values, k * np.tanh(h * k) * np.cos(k * grid.x), atol=1e-12)

    def test_neumann_constant(self, grid):
        assert np.max(np.abs(st.dtn_neumann(grid.field(np.ones(grid.n)), 1.0).values)) < 1e-14

    @pytest.mark.parametrize("kind", ["neumann", "dirichlet"])
    def test_against_fd(self, grid, rng, kind):
        h = 1.0
        f = sp.random_field(grid, rng, mean=0.3)
        ext = (st.extend_neumann if kind == "neumann" else st.extend_dirichlet)(f, depth(h))
        dtn = (st.dtn_neumann if kind == "neumann" else st.dtn_dirichlet)(f, h).values
        errs = []
        for eps in (1e-2, 5e-3):
            fd = (ext.at([0.0]) - ext.at([-eps]))[:, 0] / eps
            fd2 = (3 * ext.at([0.0]) - 4 * ext.at([-eps]) + ext.at([-2 * eps]))[:, 0] / (2 * eps)
            errs.append(np.max(np.abs(fd2 - dtn)))
            assert np.max(np.abs(fd - dtn)) < 20 * eps * np.max(np.abs(dtn)) * grid.k_max
        # second-order one-sided difference converges at order two
        assert errs[0] / errs[1] > 3.5

    def test_exact_slope(self, grid, rng):
        h = 1.5
        f = sp.random_field(grid, rng, mean=0.2)
        for kind, ext_fn, dtn_fn in (("n", st.extend_neumann, st.dtn_neumann),
                                     ("d", st.extend_dirichlet, st.dtn_dirichlet)):
            ext = ext_fn(f, depth(h))
            assert np.max(np.abs(ext.at([0.0], dbeta=1)[:, 0] - dtn_fn(f, h).values)) < 1e-11


class TestConjugate:
    def test_constant(self, grid):
        assert np.max(np.abs(st.harmonic_conjugate(grid.field(np.ones(grid.n)), 1.0).values)) < 1e-15

    def test_single_mode(self, grid):
        h, k = 1.0, 3
        x = grid.x - grid.x0
        g = st.harmonic_conjugate(grid.field(np.cos(k * x)), h)
        assert np.allclose(g.values, -np.tanh(h * k) * np.sin(k * x), atol=1e-13)

    @pytest.mark.parametrize("h", [0.5, 2.0])
    def test_cauchy_riemann(self, grid, rng, h):
        f = sp.random_field(grid, rng)
        g = st.harmonic_conjugate(f, h)
        d = depth(h)
        u = st.extend_neumann(f, d)
        v = st.extend_dirichlet(g, d)
        b = d.nodes
        # holomorphy of u + i v in alpha + i beta
        r1 = u.at(b, dalpha=1) - v.at(b, dbeta=1)
        r2 = u.at(b, dbeta=1) + v.at(b, dalpha=1)
        scale = np.max(np.abs(u.at(b, dalpha=1)))
        assert max(np.max(np.abs(r1)), np.max(np.abs(r2))) < 1e-9 * scale

    def test_conjugacy_dtn(self, grid, rng):
        h = 1.0
        f = sp.random_field(grid, rng)
        v = st.extend_dirichlet(st.harmonic_conjugate(f, h), depth(h))
        lhs = st.dtn_neumann(f, h).values
        assert np.max(np.abs(lhs + v.at([0.0], dalpha=1)[:, 0])) < 1e-9


class TestDepthIntegral:
    def test_unit(self, grid):
        h = 1.7
        F = st.extend_neumann(grid.field(np.ones(grid.n)), depth(h))
        assert abs(st.depth_integral(F, np.full(grid.n, 1 / grid.period)) - h) < 1e-12

    def test_sinh_squared(self, grid):
        h = 1.0
        v = st.extend_dirichlet(grid.field(np.cos(grid.x)), depth(h))
        val = st.depth_integral(v ** 2, np.full(grid.n, 1 / grid.period))
        ref = 0.5 * (np.sinh(2 * h) / 4 - h / 2) / np.sinh(h) ** 2
        assert abs(val - ref) < 1e-10

    def test_zero(self, grid):
        F = st.extend_neumann(grid.zeros(), depth(1.0))
        assert st.depth_integral(F) == 0

    def test_moment(self, grid):
        h = 2.0
        F = st.extend_neumann(grid.field(np.ones(grid.n)), depth(h))
        assert abs(st.moment_integral(F, np.full(grid.n, 1 / grid.period)) + h ** 2 / 2) < 1e-12


class TestParabolic:
    def test_zero(self, grid):
        assert st.parabolic_ratio(grid.zeros(), 0.25, 1.0) == 0

    def test_single_mode_closed_form(self, grid):
        h, k = 1.0, 2
        r = st.parabolic_ratio(grid.field(np.cos(k * grid.x)), 0.0, h)
        num = (np.sinh(2 * h * k) / (4 * k) - h / 2) / np.sinh(h * k) ** 2
        assert r == pytest.approx(np.sqrt(num) / np.sqrt(grid.period / 2), rel=1e-10)

    def test_refinement_stability(self, rng):
        g0 = sp.Grid(64, 2 * np.pi)
        f = sp.random_field(g0, rng, kmax=8)
        r1 = st.parabolic_ratio(f, 0.3, 1.0, order=32)
        fine = g0.refine(2)
        f2 = fine.field(sp.trig_eval(f.coeffs, g0, fine.x, real=True))
        r2 = st.parabolic_ratio(f2, 0.3, 1.0, order=64)
        assert abs(r1 / r2 - 1) < 0.1

    def test_s_range(self, grid):
        with pytest.raises(ValueError):
            st.parabolic_ratio(grid.zeros(), 0.5, 1.0)


class TestProperties:
    def test_max_principle_proxy(self, grid, rng):
        f = sp.random_field(grid, rng)
        bound = np.sum(np.abs(np.fft.fft(f.values) / grid.n))
        for ext in (st.extend_neumann(f, depth(1.0)), st.extend_dirichlet(f, depth(1.0))):
            assert np.max(np.abs(ext.values)) <= bound + 1e-12

    def test_deep_limit(self, grid):
        h = 1e3
        b = np.linspace(-5, 0, 11)
        k = np.arange(1, 10, dtype=float)
        ref = np.exp(b[:, None] * k[None, :])
        assert np.max(np.abs(st.p_neumann(k[None, :], b[:, None], h) - ref)) < 1e-10
        assert np.max(np.abs(st.p_dirichlet(k[None, :], b[:, None], h) - ref)) < 1e-10

    def test_infinite_depth_symbol(self, grid):
        d = st.DepthGrid.for_grid(grid, np.inf)
        u = st.extend_neumann(grid.field(np.cos(3 * grid.x)), d)
        ref = np.cos(3 * grid.x)[:, None] * np.exp(3 * d.nodes)[None, :]
        assert np.max(np.abs(u.values - ref)) < 1e-13
