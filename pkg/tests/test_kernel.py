import numpy as np
import pytest

from wwmorawetz import kernel as kn
from wwmorawetz import morawetz as mw
from wwmorawetz import spectral as sp

# high-precision values of K (mpmath quadrature of the line representation)
K_REF = {
    (1.0, 1.0): 0.00564898748102231,
    (1.0, 2.0): 0.000750866900747866,
    (0.5, 3.0): 0.000689612229457038,
    (3.0, 3.0): 4.83243571685877e-7,
    (0.05, 0.05): 0.341175434955213,
    (0.05, 10.0): 8.46868952708161e-8,
}


@pytest.fixture(scope="module")
def line_table():
    return kn.kernel_table("line", spacing=0.1)


@pytest.fixture(scope="module")
def fourier_table():
    return kn.kernel_table("fourier")


class TestSymbol:
    def test_origin(self):
        assert kn.symbol_b(0.0, 0.0) == pytest.approx(0.5, abs=1e-15)

    def test_diagonal(self):
        assert kn.symbol_b(1.0, 1.0) == pytest.approx(1 / np.sinh(2.0), rel=1e-14)
        assert kn.symbol_b(1.0, 1.0) == pytest.approx(0.27572056477178325, rel=1e-14)

    def test_axis(self):
        assert kn.symbol_b(0.0, 1.0) == pytest.approx(0.5 * np.tanh(1.0), rel=1e-14)

    def test_against_displayed_form(self):
        rng = np.random.default_rng(5)
        xi, ze = rng.uniform(0.1, 4, 50), rng.uniform(0.1, 4, 50)
        ok = np.abs(xi - ze) > 1e-2
        xi, ze = xi[ok], ze[ok]
        ref = xi * ze / (np.sinh(2 * xi) * np.sinh(2 * ze)) * (np.cosh(2 * xi) - np.cosh(2 * ze)) / ((xi + ze) * (xi - ze))
        assert np.allclose(kn.symbol_b(xi, ze), ref, rtol=1e-10)

    def test_symmetries(self):
        rng = np.random.default_rng(6)
        xi, ze = rng.normal(0, 3, 100), rng.normal(0, 3, 100)
        b = kn.symbol_b(xi, ze)
        assert np.allclose(b, kn.symbol_b(ze, xi), rtol=1e-14)
        assert np.allclose(b, kn.symbol_b(-xi, ze), rtol=1e-14)

    def test_scaling(self):
        rng = np.random.default_rng(7)
        xi, ze = rng.normal(0, 3, 100), rng.normal(0, 3, 100)
        for h in (0.3, 2.5):
            assert np.allclose(kn.symbol_bh(xi, ze, h), kn.symbol_b(h * xi, h * ze), rtol=1e-12)
        assert np.all(kn.symbol_bh(xi, ze, np.inf) == 0)

    def test_decay(self):
        xi, ze = np.meshgrid(np.linspace(-30, 30, 121), np.linspace(-30, 30, 121))
        # the bound holds with c = 1 and an order-one constant
        bound = np.exp(-np.minimum(np.abs(xi), np.abs(ze))) / (1 + np.abs(xi) + np.abs(ze))
        assert np.max(kn.symbol_b(xi, ze) / bound) < 3.0

    def test_near_axis_expansion(self):
        # coefficient 1/(2|zeta|): the remainder is O(|zeta|^-3)
        xi = 0.3
        rem = []
        for ze in (20.0, 40.0):
            lead = 1 / (2 * ze) * (2 * xi / np.sinh(2 * xi))
            rem.append(abs(kn.symbol_b(xi, ze) - lead))
        assert 6 < rem[0] / rem[1] < 10

    def test_axis_symbol_tail(self):
        xi = 0.7
        d = [abs(kn.symbol_b(xi, z) - kn.axis_symbol(xi, z)) for z in (20.0, 40.0)]
        assert d[0] / d[1] > 6

    def test_proof_identity(self):
        x = np.linspace(0.05, 5, 100)
        Fp = -1 / np.sinh(x) ** 2
        Gp = 1 / np.cosh(x) ** 2
        assert np.allclose(Fp / Gp, -1 / np.tanh(x) ** 2, rtol=1e-12)

    def test_log_sinhc(self):
        x = np.array([0.0, 1e-5, 0.5, 3.0, 800.0])
        ref = np.array([0.0, 1e-10 / 6, np.log(np.sinh(0.5) / 0.5), np.log(np.sinh(3.0) / 3.0),
                        800 - np.log(2) - np.log(800)])
        assert np.allclose(kn.log_sinhc(x), ref, rtol=1e-10, atol=1e-300)


class TestKernelValues:
    @pytest.mark.parametrize("pt", list(K_REF))
    def test_line_reference(self, pt):
        assert kn.kernel_line(*pt) == pytest.approx(K_REF[pt], rel=1e-9)

    def test_symmetry(self):
        assert kn.kernel_line(1.0, 2.0) == pytest.approx(kn.kernel_line(2.0, 1.0), rel=1e-12)
        assert kn.kernel_line(-1.0, 2.0) == pytest.approx(kn.kernel_line(1.0, 2.0), rel=1e-12)

    def test_axis_rejected(self):
        with pytest.raises(ValueError):
            kn.kernel_line(0.0, 1.0)

    def test_depth_scaling(self):
        h = 2.0
        assert kn.kernel_h(2.0, 4.0, h) == pytest.approx(kn.kernel_line(1.0, 2.0) / h ** 2, rel=1e-14)

    def test_far_field(self):
        assert abs(kn.kernel_line(5.0, 5.0)) < 1e-4


class TestTables:
    def test_methods_agree(self, fourier_table):
        assert kn.cross_check(fourier_table) < 1e-4

    def test_reference_on_fourier(self, fourier_table):
        for (a, b), v in K_REF.items():
            if a >= 0.05 and b <= 10:
                i = int(np.argmin(np.abs(fourier_table.xs - a)))
                j = int(np.argmin(np.abs(fourier_table.xs - b)))
                if abs(fourier_table.xs[i] - a) < 1e-12 and abs(fourier_table.xs[j] - b) < 1e-12:
                    assert abs(fourier_table.values[i, j] - v) < 1e-4

    def test_table_symmetric(self, line_table):
        assert np.max(np.abs(line_table.values - line_table.values.T)) < 1e-14
        assert np.all(np.isfinite(line_table.values))

    def test_cutoff_error(self):
        with pytest.raises(kn.KernelCutoffError):
            kn.kernel_table("fourier", n=256, period=10.24, x_max=4.0, tol=1e-12)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            kn.kernel_table("spline")


class TestMass:
    def test_line(self):
        assert kn.kernel_mass("line") == pytest.approx(0.5, abs=1e-3)

    def test_fourier(self):
        assert kn.kernel_mass("fourier") == pytest.approx(0.5, abs=1e-6)


class TestDiagonal:
    def test_closed_form(self):
        x = np.array([0.05, 0.3, 1.0, 2.5])
        assert np.allclose(kn.diagonal_pv_integral(x), kn.diagonal_closed_form(x), rtol=1e-9)

    def test_large(self):
        x = np.linspace(6, 8, 5)
        ratio = kn.diagonal_pv_integral(x) / (-64 * np.exp(-6 * x))
        assert np.all(np.abs(ratio - 1) < 0.05)

    def test_small(self):
        x = np.linspace(0.01, 0.1, 10)
        assert np.all(np.abs(kn.diagonal_pv_integral(x) + 2 / np.tanh(x)) < 1.0)

    def test_negative(self):
        x = np.geomspace(0.1, 5, 30)
        assert np.all(kn.diagonal_pv_integral(x) < 0)

    def test_slope(self):
        # d/dx K(x, x) against a centered difference of the line kernel
        x, e = 1.2, 1e-4
        fd = (kn.kernel_line(x + e, x + e) - kn.kernel_line(x - e, x - e)) / (2 * e)
        assert kn.diagonal_slope(x) == pytest.approx(fd, rel=1e-6)


class TestPositivity:
    def test_line_table_positive(self, line_table):
        rep = kn.positivity_scan(line_table)
        assert rep.passed and rep.minimum > 0 and rep.negatives == 0
        assert rep.diagonal_min > 0

    def test_near_axis_log(self):
        prof = kn.near_axis_profile(1.0)
        assert prof.slope == pytest.approx(prof.predicted, rel=1e-4)
        assert prof.predicted == pytest.approx(1 / (16 * np.cosh(np.pi / 4) ** 2), rel=1e-14)
        assert np.all(np.diff(prof.values) > 0)

    def test_diagonal_decay(self):
        d = [kn.kernel_line(x, x) for x in (2.0, 3.0, 4.0)]
        assert d[0] > d[1] > d[2] > 0
        assert d[1] / d[0] < 0.1


class TestDirectional:
    def test_signs(self, line_table):
        rep = kn.directional_signs(line_table)
        assert rep.passed
        assert not rep.anti_violations and not rep.diag_violations
        assert rep.diagonal_antisymmetric == 0

    def test_points(self):
        e = 1e-4
        K = kn.kernel_line
        anti = (K(1.0, 2.0 + e) - K(1.0, 2.0 - e) - K(1.0 + e, 2.0) + K(1.0 - e, 2.0)) / (2 * e)
        diag = (K(1.0, 1.0 + e) - K(1.0, 1.0 - e) + K(1.0 + e, 1.0) - K(1.0 - e, 1.0)) / (2 * e)
        assert anti > 0 and diag < 0


class TestSplit:
    def test_split(self, line_table):
        rep = kn.split_mass(line_table)
        assert rep.success
        assert rep.c < 0.5
        assert rep.mass_L == pytest.approx(0.5 - rep.c, rel=1e-12)
        assert rep.residual_min >= 0
        X1, X2 = np.meshgrid(line_table.xs, line_table.xs, indexing="ij")
        assert np.min(line_table.values - rep.L(X1) * rep.L(X2)) >= 0

    def test_no_split_gives_half(self, line_table):
        rep = kn.split_mass(line_table, margin=0.0)
        assert rep.c == pytest.approx(0.5)


class TestQmBound:
    @pytest.fixture
    def setup(self):
        grid = sp.Grid(256, 64.0)
        w = mw.make_weight("bump", grid, width=2.0)
        return grid, w

    def test_zero(self, setup):
        grid, w = setup
        rep = kn.qm_lower_bound_check([grid.zeros()], w, 1.0, 0.31)
        assert rep.lhs[0] == 0 and rep.rhs[0] == 0 and rep.passed

    def test_low_mode_and_adversarial(self, setup):
        grid, w = setup
        x = grid.x
        etas = [grid.field(np.cos(grid.dk * x)),
                grid.field(np.exp(-x ** 2 / 8) * np.cos(x)),
                grid.field(np.exp(-x ** 2 / 2) * np.cos(0.5 * x))]
        rep = kn.qm_lower_bound_check(etas, w, 1.0, 0.31)
        assert rep.passed
        assert np.all(rep.slack >= 0)
