import math
import unittest

import numpy as np

from src.ricci_ovals.asymptotics import parabolic_ansatz
from src.ricci_ovals.exceptions import QuadratureError
from src.ricci_ovals.spectral import (
    Cutoff,
    HermiteBasis,
    alpha_asymptotic,
    alpha_rhs,
    alpha_star,
    apply_L,
    cutoff_hat,
    delta_history,
    error_functionals,
    hermite_identities,
    hermite_norm_squared,
    perturbation,
    project,
    spectral_state,
    truncate,
    weighted_inner,
)

SQRT_PI = math.sqrt(math.pi)


class TestHermiteBasis(unittest.TestCase):
    def setUp(self):
        self.basis = HermiteBasis(6)

    def test_explicit_polynomials(self):
        np.testing.assert_array_equal(self.basis[0].coef, [1.0])
        np.testing.assert_array_equal(self.basis[1].coef, [-2.0, 0.0, 1.0])
        np.testing.assert_array_equal(self.basis[2].coef, [12.0, 0.0, -12.0, 0.0, 1.0])

    def test_weighted_inner_products(self):
        h0, h2 = self.basis[0], self.basis[1]
        self.assertAlmostEqual(weighted_inner(h0, h0), 2.0 * SQRT_PI, places=10)
        self.assertAlmostEqual(weighted_inner(h2, h0), 0.0, places=10)
        self.assertAlmostEqual(weighted_inner(h2, h2), 16.0 * SQRT_PI, places=9)
        self.assertAlmostEqual(hermite_norm_squared(2), 16.0 * SQRT_PI)

    def test_eigenvalues(self):
        for k in range(4):
            defect = apply_L(self.basis[k]) - (1.0 - k) * self.basis[k]
            self.assertTrue(np.allclose(defect.coef, 0.0, atol=1e-9))

    def test_identities_report(self):
        checks = hermite_identities()
        self.assertEqual(len(checks), 6)
        for check in checks:
            self.assertTrue(check.passed, check.name)

    def test_sampled_inner_product_agrees_with_quadrature(self):
        sigma = np.linspace(-14.0, 14.0, 4001)
        h2 = sigma**2 - 2.0
        self.assertAlmostEqual(weighted_inner(h2, h2, sigma), 16.0 * SQRT_PI, places=6)

    def test_narrow_grid_rejected(self):
        sigma = np.linspace(-3.0, 3.0, 601)
        with self.assertRaises(QuadratureError):
            weighted_inner(np.ones_like(sigma), np.ones_like(sigma), sigma)

    def test_sampled_operator_on_h2(self):
        sigma = np.linspace(-10.0, 10.0, 2001)
        Lh2 = apply_L(sigma**2 - 2.0, sigma)
        self.assertLess(np.max(np.abs(Lh2[5:-5])), 1e-7)


class TestTruncation(unittest.TestCase):
    def test_cutoff_shape(self):
        self.assertEqual(float(cutoff_hat(0.0)), 1.0)
        self.assertEqual(float(cutoff_hat(0.5)), 1.0)
        self.assertEqual(float(cutoff_hat(1.0)), 0.0)
        self.assertEqual(float(cutoff_hat(-1.5)), 0.0)
        self.assertTrue(0.0 < float(cutoff_hat(0.75)) < 1.0)

    def test_support_of_constant(self):
        sigma = np.linspace(-2.0, 2.0, 4001)
        vbar = truncate(sigma, np.ones_like(sigma), 1e-2)
        support = 1e-2 ** -0.01
        self.assertAlmostEqual(support, 1.0471, places=4)
        self.assertEqual(vbar[2000], 1.0)
        self.assertTrue(np.all(vbar[np.abs(sigma) >= support] == 0.0))

    def test_unit_delta_support(self):
        cutoff = Cutoff(1.0)
        self.assertEqual(cutoff.support, 1.0)
        self.assertEqual(float(cutoff(1.0)), 0.0)
        self.assertEqual(float(cutoff(0.5)), 1.0)

    def test_tiny_delta_keeps_h2(self):
        sigma = np.linspace(-20.0, 20.0, 8001)
        h2 = sigma**2 - 2.0
        vbar = truncate(sigma, h2, 1e-20, theta=0.1)
        ratio = weighted_inner(vbar, h2, sigma) / hermite_norm_squared(2)
        self.assertAlmostEqual(ratio, 1.0, delta=1e-3)

    def test_invalid_delta(self):
        with self.assertRaises(ValueError):
            Cutoff(0.0)


class TestProjection(unittest.TestCase):
    def setUp(self):
        self.sigma = np.linspace(-14.0, 14.0, 4001)
        self.h2 = self.sigma**2 - 2.0

    def test_neutral_mode(self):
        p = project(self.sigma, -self.h2 / 800.0)
        self.assertAlmostEqual(p.alpha, -0.00125, places=10)
        self.assertAlmostEqual(p.plus_coeff, 0.0, places=10)
        self.assertLess(p.minus_norm, 1e-8)
        self.assertAlmostEqual(p.alpha_raw, -0.00125 * hermite_norm_squared(2), places=8)

    def test_constant(self):
        p = project(self.sigma, np.ones_like(self.sigma))
        self.assertAlmostEqual(p.alpha, 0.0, places=10)
        self.assertAlmostEqual(p.plus_coeff, 1.0, places=10)

    def test_stable_mode(self):
        h4 = self.sigma**4 - 12.0 * self.sigma**2 + 12.0
        p = project(self.sigma, h4)
        self.assertAlmostEqual(p.alpha, 0.0, places=8)
        self.assertAlmostEqual(p.plus_coeff, 0.0, places=8)
        self.assertAlmostEqual(p.minus_norm, math.sqrt(hermite_norm_squared(4)), places=5)

    def test_parabolic_ansatz_mode(self):
        for tau in (-100.0, -1e4):
            v = perturbation(parabolic_ansatz(self.sigma, tau))
            alpha = project(self.sigma, v).alpha
            self.assertLess(abs(alpha / alpha_asymptotic(tau) - 1.0), 1e-4)

    def test_alpha_ode_along_asymptotic(self):
        tau = -100.0
        self.assertAlmostEqual(alpha_rhs(alpha_asymptotic(tau)), -1.0 / (8.0 * tau**2), places=15)

    def test_spectral_state(self):
        v = perturbation(parabolic_ansatz(self.sigma, -100.0))
        state = spectral_state(self.sigma, v, -100.0, 1e-2, theta=0.01)
        self.assertGreaterEqual(state.minus_norm, 0.0)
        self.assertEqual(set(state.to_dict()), {"tau", "alpha", "alpha_raw", "plus", "minus_norm", "delta"})

    def test_histories_are_monotone(self):
        np.testing.assert_allclose(delta_history([0.1, -0.3, 0.2]), math.sqrt(2.0) * np.array([0.1, 0.3, 0.3]))
        np.testing.assert_allclose(alpha_star([-0.1, 0.05, -0.2]), [0.1, 0.1, 0.2])


class TestErrorFunctionals(unittest.TestCase):
    def setUp(self):
        self.sigma = np.linspace(-14.0, 14.0, 4001)

    def test_zero_perturbation(self):
        zero = np.zeros_like(self.sigma)
        result = error_functionals(self.sigma, zero, zero, np.ones_like(zero))
        for field in (result.E, result.E_chi, result.E_nl):
            np.testing.assert_allclose(field, 0.0, atol=1e-14)

    def test_quadratic_form_of_neutral_mode(self):
        tau = -100.0
        alpha = alpha_asymptotic(tau)
        v = alpha * (self.sigma**2 - 2.0)
        result = error_functionals(self.sigma, v, v, np.ones_like(v))
        leading = 8.0 * alpha**2 * hermite_norm_squared(2)
        self.assertLess(abs(result.quadratic_form - leading) / alpha**2, 0.2 * hermite_norm_squared(2))

    def test_requires_v_above_minus_one(self):
        v = np.full_like(self.sigma, -1.5)
        with self.assertRaises(ValueError):
            error_functionals(self.sigma, v, v, np.ones_like(v))


if __name__ == "__main__":
    unittest.main()
