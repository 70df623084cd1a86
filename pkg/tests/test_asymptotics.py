import math
import unittest

import numpy as np

from src.ricci_ovals.asymptotics import (
    MatchedAnsatz,
    M_delta,
    characteristic,
    characteristic_bound,
    characteristic_numeric,
    glue,
    intermediate_profile,
    kappa_model,
    lemma_Y,
    matched_profile,
    parabolic_ansatz,
    pde_residual,
    predictions,
    region_agreement,
    residual_ladder,
    smoothstep,
    tip_consistency,
    transport_residual,
)
from src.ricci_ovals.bryant import solve_bryant
from src.ricci_ovals.exceptions import GridError


class TestRegionProfiles(unittest.TestCase):
    def test_parabolic_values(self):
        self.assertAlmostEqual(float(parabolic_ansatz(0.0, -100.0)), 1.417749, places=6)
        self.assertAlmostEqual(float(parabolic_ansatz(2.0, -100.0)), 1.410678, places=6)
        self.assertAlmostEqual(float(parabolic_ansatz(math.sqrt(2.0), -100.0)), math.sqrt(2.0), places=12)

    def test_intermediate_profile(self):
        self.assertAlmostEqual(intermediate_profile(1.0), math.sqrt(1.5), places=12)
        self.assertAlmostEqual(intermediate_profile(2.0), 0.0, places=12)
        with self.assertRaises(ValueError):
            intermediate_profile(np.array([0.5, 2.5]))

    def test_intermediate_profile_solves_transport_equation(self):
        z = np.linspace(-1.9, 1.9, 39)
        np.testing.assert_allclose(transport_residual(z), 0.0, atol=1e-12)

    def test_regions_agree_to_first_order(self):
        # |tau| * gap tends to sqrt(2)/4 from the constant term of the parabolic piece
        self.assertAlmostEqual(region_agreement(-1e5), math.sqrt(2.0) / 4.0, delta=1e-2)
        self.assertLess(region_agreement(-1e4), 1.0)

    def test_kappa_model(self):
        self.assertEqual(kappa_model(-100.0), 100.0)
        self.assertAlmostEqual(kappa_model(-100.0, 1.0), 100.0 + math.log(100.0))

    def test_smoothstep(self):
        np.testing.assert_allclose(smoothstep([-1.0, 0.0, 0.5, 1.0, 2.0]), [0.0, 0.0, 0.5, 1.0, 1.0])


class TestMatchedAnsatz(unittest.TestCase):
    def test_defaults(self):
        a = MatchedAnsatz(tau=-100.0)
        self.assertEqual(a.overlap, 2.5)
        self.assertEqual(a.kappa, 100.0)
        self.assertAlmostEqual(a.sigma_theta, math.sqrt(3.5) * 10.0)

    def test_tau_too_close_to_zero(self):
        with self.assertRaises(ValueError):
            MatchedAnsatz(tau=-5.0)

    def test_theta_out_of_range(self):
        with self.assertRaises(ValueError):
            MatchedAnsatz(tau=-100.0, theta=2.0)

    def test_windows_must_not_overlap(self):
        with self.assertRaises(GridError):
            MatchedAnsatz(tau=-10.0)


class TestGluedProfile(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.bryant = solve_bryant(50.0, 1e-10)
        cls.glued = glue(MatchedAnsatz(tau=-100.0), cls.bryant, n=16001)

    def test_profile_is_closed_and_bounded(self):
        r = self.glued.profile
        self.assertEqual(r.u[0], 0.0)
        self.assertEqual(r.u[-1], 0.0)
        self.assertAlmostEqual(float(np.max(r.u)), float(parabolic_ansatz(0.0, -100.0)), places=6)
        self.assertLess(r.symmetry_defect(), 1e-12)

    def test_seam_jumps(self):
        names = [seam.name for seam in self.glued.seams]
        self.assertEqual(names, ["parabolic/intermediate", "intermediate/tip"])
        for seam in self.glued.seams:
            self.assertLess(seam.jump, 0.05, seam.name)

    def test_diameter_scale(self):
        ratio = self.glued.sigma_tip / (2.0 * math.sqrt(100.0))
        self.assertTrue(0.9 <= ratio <= 1.1, ratio)

    def test_region_masks(self):
        for region in ("parabolic", "intermediate", "tip"):
            self.assertTrue(np.any(self.glued.region_mask(region)), region)
        with self.assertRaises(ValueError):
            self.glued.region_mask("neck")

    def test_even_n_rejected(self):
        with self.assertRaises(ValueError):
            glue(MatchedAnsatz(tau=-100.0), self.bryant, n=1000)

    def test_parabolic_residual_decays_quadratically(self):
        ladder = residual_ladder([100.0, 200.0, 400.0], "parabolic", self.bryant)
        self.assertEqual(len(ladder["reports"]), 3)
        self.assertGreaterEqual(ladder["exponent"], 1.7)

    def test_intermediate_residual_decreases(self):
        sups = residual_ladder([100.0, 200.0, 400.0], "intermediate", self.bryant)["sup"]
        self.assertTrue(all(b < a for a, b in zip(sups, sups[1:])), sups)

    def test_tip_residual_is_finite(self):
        ladder = residual_ladder([100.0, 200.0], "tip", self.bryant)
        self.assertTrue(all(math.isfinite(s) for s in ladder["sup"]))
        self.assertEqual(ladder["reports"][0]["scale"], 10.0)

    def test_matched_profile_is_glued_profile(self):
        r = matched_profile(MatchedAnsatz(tau=-100.0), self.bryant, n=16001)
        np.testing.assert_array_equal(r.u, self.glued.profile.u)

    def test_pde_residual_report(self):
        report = pde_residual(MatchedAnsatz(tau=-100.0), "parabolic", self.bryant)
        self.assertEqual(report.region, "parabolic")
        self.assertEqual(report.scale, 1.0)
        self.assertGreater(report.points, 0)
        self.assertTrue(math.isfinite(report.sup))
        self.assertEqual(len(report.seams), 2)
        with self.assertRaises(ValueError):
            pde_residual(MatchedAnsatz(tau=-100.0), "neck", self.bryant)

    def test_unknown_region(self):
        with self.assertRaises(ValueError):
            residual_ladder([100.0], "neck", self.bryant)

    def test_tip_consistency_report(self):
        report = tip_consistency(MatchedAnsatz(tau=-400.0), self.bryant)
        self.assertEqual(len(report.checks), 3)
        self.assertTrue(math.isfinite(report.j_ratio))
        self.assertTrue(0.9 <= report.diameter_ratio <= 1.1)
        self.assertEqual(report.to_dict()["passed"], report.passed)


class TestPredictions(unittest.TestCase):
    def test_values_at_minus_one_million(self):
        p = predictions(-1e6)
        self.assertAlmostEqual(p.k, 1.38155e-5, delta=1e-10)
        self.assertAlmostEqual(p.d, 14867.69, delta=0.05)
        self.assertAlmostEqual(p.tau, -math.log(1e6))
        self.assertAlmostEqual(p.kappa_gap, 0.0, places=12)

    def test_diameter_grows_backwards_in_time(self):
        self.assertGreater(predictions(-1e8).d, predictions(-1e6).d)

    def test_too_late(self):
        with self.assertRaises(ValueError):
            predictions(-5.0)


class TestSlopeBounds(unittest.TestCase):
    def test_M_delta(self):
        self.assertAlmostEqual(M_delta(0.5), math.sqrt(10.0))
        with self.assertRaises(ValueError):
            M_delta(0.0)

    def test_lemma_Y(self):
        self.assertAlmostEqual(float(lemma_Y(1.0, -100.0)), 0.005025)
        self.assertAlmostEqual(float(lemma_Y(math.sqrt(2.0), -100.0)), 2.5e-5)


class TestCharacteristics(unittest.TestCase):
    def test_closed_form_matches_integration(self):
        for kappa in (0.0, 1.0):
            exact = characteristic(0.5, -200.0, -100.0, kappa)
            numeric = characteristic_numeric(0.5, -200.0, -100.0, kappa)
            self.assertAlmostEqual(numeric / exact, 1.0, places=8)

    def test_positive_tau_rejected(self):
        with self.assertRaises(ValueError):
            characteristic(0.5, -1.0, 1.0)

    def test_bound_through_point(self):
        M = math.sqrt(10.0)
        b = characteristic_bound(1.5, -100.0, M)
        self.assertLess(b.tau1, -100.0)
        self.assertAlmostEqual(characteristic(b.z1, b.tau1, -100.0), 1.5, places=8)
        self.assertLess(b.w, 0.0)
        self.assertLess(b.u_bound, math.sqrt(2.0))

    def test_bound_inside_parabolic_window(self):
        with self.assertRaises(ValueError):
            characteristic_bound(0.1, -100.0, math.sqrt(10.0))


if __name__ == "__main__":
    unittest.main()
