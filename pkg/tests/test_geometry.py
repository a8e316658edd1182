import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import sph_harm_y

from prescribed_curvature.errors import ConvexityError, DomainError
from prescribed_curvature.geometry import (
    ConformalMetric,
    eval_phi,
    gauss_curvature,
    laplace_phi,
    metric_speed,
    min_curvature,
    rotate90,
)
from prescribed_curvature.harmonics import HarmonicSum, equal_area_grid, real_sph_harm

from conftest import random_unit

NORTH = np.array([0.0, 0.0, 1.0])
EX, EY, EZ = np.eye(3)

# Regression value of the convexity gate for phi = 0.1 Y_2^0 on the 64 x 128 grid;
# frozen from the grid run, cross-checked against the closed form below.
MIN_K_Y20_01 = 0.934442538244344


def scipy_real_harmonic(l, m, p):
    """Independent oracle: real combination of scipy's complex Y_l^m, no Condon-Shortley phase."""
    theta = np.arccos(np.clip(p[..., 2], -1, 1))
    phi = np.arctan2(p[..., 1], p[..., 0])
    y = sph_harm_y(l, abs(m), theta, phi) * (-1) ** abs(m)
    if m == 0:
        return y.real
    if m > 0:
        return np.sqrt(2) * y.real
    return np.sqrt(2) * y.imag


def unmetric(terms, t=1.0):
    return ConformalMetric(terms, t=t, validate=False)


def chart(p):
    """Rotated spherical chart with p on its equator: x(theta, lam)."""
    p = np.asarray(p, float)
    helper = EX if abs(p[0]) < 0.9 else EY
    pole = np.cross(p, helper)
    pole /= np.linalg.norm(pole)
    e2 = np.cross(pole, p)

    def x(theta, lam):
        return np.cos(theta) * pole + np.sin(theta) * (np.cos(lam) * p + np.sin(lam) * e2)

    return x


def fd_laplacian(f, p, h=np.pi / 512):
    x = chart(p)
    th, la = np.pi / 2, 0.0
    s = np.sin
    f0 = f(x(th, la))
    d_th = (s(th + h / 2) * (f(x(th + h, la)) - f0) - s(th - h / 2) * (f0 - f(x(th - h, la)))) / (s(th) * h * h)
    d_la = (f(x(th, la + h)) - 2 * f0 + f(x(th, la - h))) / (s(th) ** 2 * h * h)
    return d_th + d_la


def fd_gauss_curvature(metric, p, h=np.pi / 512):
    """Brioschi formula for the orthogonal metric E dth^2 + G dla^2 in the rotated chart."""
    x = chart(p)

    def E(th, la):
        return np.exp(metric.t * metric.phi.value(x(th, la)))

    def G(th, la):
        return E(th, la) * np.sin(th) ** 2

    th, la = np.pi / 2, 0.0

    def root(th, la):
        return np.sqrt(E(th, la) * G(th, la))

    def a(th, la):  # G_th / sqrt(EG)
        return (G(th + h, la) - G(th - h, la)) / (2 * h) / root(th, la)

    def b(th, la):  # E_la / sqrt(EG)
        return (E(th, la + h) - E(th, la - h)) / (2 * h) / root(th, la)

    da = (a(th + h, la) - a(th - h, la)) / (2 * h)
    db = (b(th, la + h) - b(th, la - h)) / (2 * h)
    return -(da + db) / (2 * root(th, la))


class TestHarmonics:
    @pytest.mark.parametrize("l", range(0, 6))
    def test_matches_scipy(self, l, rng):
        p = random_unit(rng, 50)
        for m in range(-l, l + 1):
            assert np.allclose(real_sph_harm(l, m, p), scipy_real_harmonic(l, m, p), atol=1e-13)

    def test_orthonormal_on_grid(self):
        pts, area = equal_area_grid(64)
        ys = np.array([real_sph_harm(l, m, pts) for l in range(4) for m in range(-l, l + 1)])
        gram = ys @ ys.T * area
        assert np.allclose(gram, np.eye(len(ys)), atol=5e-3)

    def test_equal_area_grid_total(self):
        pts, area = equal_area_grid(32)
        assert pts.shape == (32 * 64, 3)
        assert np.isclose(area * len(pts), 4 * np.pi)
        assert np.allclose(np.linalg.norm(pts, axis=1), 1.0)

    def test_gradient_matches_finite_difference(self, rng):
        phi = HarmonicSum(((2, 1, 0.3), (3, -2, 0.2), (1, 0, -0.5)))
        p = random_unit(rng, 20)
        g = phi.gradient(p)
        assert np.allclose(np.sum(g * p, axis=1), 0.0, atol=1e-14)
        v = np.cross(p, random_unit(rng, 20))
        h = 1e-6
        def move(s):
            q = p + s * v
            return q / np.linalg.norm(q, axis=1, keepdims=True)
        fd = (phi.value(move(h)) - phi.value(move(-h))) / (2 * h)
        assert np.allclose(np.sum(g * v, axis=1), fd, atol=1e-8)

    def test_unit_check(self):
        metric = ConformalMetric.round()
        with pytest.raises(DomainError):
            eval_phi(metric, np.array([0.0, 0.0, 2.0]))


class TestEvalPhi:
    def test_examples(self):
        assert eval_phi(ConformalMetric.round(), NORTH) == 0.0
        assert np.isclose(eval_phi(unmetric(((0, 0, np.sqrt(4 * np.pi)),)), EX), 1.0, atol=1e-15)
        assert np.isclose(eval_phi(unmetric(((1, 0, 1.0),)), NORTH), np.sqrt(3 / (4 * np.pi)), atol=1e-15)


class TestLaplacian:
    def test_examples(self, rng):
        assert laplace_phi(ConformalMetric.round(), NORTH) == 0.0
        m1 = unmetric(((1, 0, 1.0),))
        assert np.isclose(laplace_phi(m1, NORTH), -2 * np.sqrt(3 / (4 * np.pi)), atol=1e-14)
        m2 = unmetric(((2, 0, 1.0),))
        p = random_unit(rng, 10)
        assert np.allclose(laplace_phi(m2, p), -6 * real_sph_harm(2, 0, p), atol=1e-12)

    @given(l=st.integers(0, 6), data=st.data())
    def test_eigenvalue_identity(self, l, data):
        m = data.draw(st.integers(-l, l))
        rng = np.random.default_rng(data.draw(st.integers(0, 2 ** 32 - 1)))
        metric = unmetric(((l, m, 1.0),))
        p = random_unit(rng, 100)
        assert np.allclose(laplace_phi(metric, p), -l * (l + 1) * eval_phi(metric, p), atol=1e-12, rtol=0)

    @pytest.mark.parametrize("terms", [((1, 0, 1.0),), ((2, 0, 1.0),), ((3, 1, 0.4), (2, -2, 0.7))])
    def test_against_finite_difference_oracle(self, terms, rng):
        metric = unmetric(terms)
        for p in random_unit(rng, 5):
            fd = fd_laplacian(metric.phi.value, p)
            assert abs(laplace_phi(metric, p) - fd) < 1e-4


class TestGaussCurvature:
    def test_round_and_t0(self, rng):
        p = random_unit(rng, 30)
        assert np.array_equal(gauss_curvature(ConformalMetric.round(0.7), p), np.ones(30))
        metric = unmetric(((2, 0, 0.3), (3, 2, 0.1)), t=0.0)
        assert np.array_equal(gauss_curvature(metric, p), np.ones(30))

    def test_closed_form_at_pole(self):
        y = np.sqrt(5 / (4 * np.pi))
        expected = np.exp(-0.1 * y) * (1 + 3 * 0.1 * y)
        metric = ConformalMetric(((2, 0, 0.1),))
        assert np.isclose(gauss_curvature(metric, NORTH), expected, rtol=1e-14)
        assert abs(fd_gauss_curvature(metric, NORTH) - expected) < 1e-4

    def test_against_brioschi_oracle(self, rng):
        for _ in range(10):
            l = int(rng.integers(1, 5))
            m = int(rng.integers(-l, l + 1))
            terms = ((l, m, float(rng.uniform(-0.2, 0.2))), (2, 0, float(rng.uniform(-0.1, 0.1))))
            metric = unmetric(terms, t=float(rng.uniform(0, 1)))
            p = random_unit(rng, 1)[0]
            assert abs(gauss_curvature(metric, p) - fd_gauss_curvature(metric, p)) < 1e-4

    def test_total_curvature_is_4pi(self):
        # Gauss-Bonnet on the closed sphere: int K dA_t = int (1 - t/2 lap phi) dA_can = 4 pi
        metric = ConformalMetric(((2, 0, 0.1), (3, 1, 0.05)))
        pts, area = equal_area_grid(128)
        total = np.sum(gauss_curvature(metric, pts) * np.exp(metric.phi.value(pts))) * area
        assert np.isclose(total, 4 * np.pi, rtol=1e-3)


class TestMinCurvature:
    def test_round(self):
        assert min_curvature(ConformalMetric.round(), 32) == 1.0

    def test_regression_value(self):
        value = min_curvature(ConformalMetric(((2, 0, 0.1),)), 64)
        assert 0 < value < 1
        assert value == pytest.approx(MIN_K_Y20_01, abs=1e-14)
        # the minimum sits at t = 1 on the equator, where Y_2^0 is most negative
        y = -0.5 * np.sqrt(5 / (4 * np.pi))
        assert value >= np.exp(-0.1 * y) * (1 + 3 * 0.1 * y) - 1e-12

    @pytest.mark.parametrize("eps", [1e-3, 1e-5])
    def test_continuity_at_zero(self, eps):
        value = min_curvature(ConformalMetric(((2, 0, eps),)), 32)
        assert abs(value - 1) < 5 * eps

    def test_rejects_small_grid(self):
        with pytest.raises(DomainError):
            min_curvature(ConformalMetric.round(), 8)

    def test_convexity_gate(self):
        with pytest.raises(ConvexityError, match="convexity gate"):
            ConformalMetric(((2, 0, 3.0),))


class TestRotationAndSpeed:
    def test_examples(self):
        assert np.allclose(rotate90(EZ, EX), EY)
        assert np.allclose(rotate90(EZ, EY), -EX)

    def test_rejects_nontangent(self):
        with pytest.raises(DomainError):
            rotate90(EZ, EZ)

    @given(seed=st.integers(0, 2 ** 32 - 1))
    def test_quarter_turn(self, seed):
        rng = np.random.default_rng(seed)
        p = random_unit(rng, 10)
        v = np.cross(p, rng.normal(size=(10, 3)))
        jv = rotate90(p, v)
        assert np.allclose(np.linalg.norm(jv, axis=1), np.linalg.norm(v, axis=1), atol=1e-14)
        assert np.allclose(rotate90(p, jv), -v, atol=1e-14)

    def test_metric_speed(self):
        assert metric_speed(ConformalMetric.round(), EZ, EX) == 1.0
        assert metric_speed(unmetric(((2, 0, 0.5),), t=0.0), EZ, 3 * EX) == 3.0
        const2 = unmetric(((0, 0, 2 * np.sqrt(4 * np.pi)),))
        assert np.isclose(metric_speed(const2, EZ, EX), np.e, rtol=1e-14)
