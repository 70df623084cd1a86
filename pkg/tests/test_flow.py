import json
import math
import os
import tempfile
import unittest
from dataclasses import replace

import numpy as np

from src.ricci_ovals.exceptions import GridError, MonotonicityError, StabilityError, TipSlopeError
from src.ricci_ovals.flow import (
    FlowConfig,
    RescaledProfile,
    TipChart,
    compute_J,
    compute_monitors,
    convergence_study,
    cylinder_segment,
    extinction_time,
    rescale,
    rescaled_sphere,
    run_flow,
    step_rescaled,
    step_tip_chart,
    step_unrescaled,
    tip_ode_rhs,
    to_tip_chart,
    unrescale,
    write_trajectory,
)
from src.ricci_ovals.flow.driver import waist
from src.ricci_ovals.flow.monitors import FlowMonitors, r_max_location
from src.ricci_ovals.flow.rescaled import RescaledStepper
from src.ricci_ovals.flow.unrescaled import psi_max_rate_ok, richardson
from src.ricci_ovals.geometry import ProfileGrid, fixtures
from src.ricci_ovals.io import read_table


class TestUnrescaledStep(unittest.TestCase):
    def setUp(self):
        self.sphere = fixtures("sphere", 101, r=2.0)

    def test_step_follows_sphere_law(self):
        p = self.sphere
        dt = 0.2 * p.h**2
        for _ in range(50):
            p = step_unrescaled(p, dt, symmetric=True)
        self.assertAlmostEqual(p.t, 50 * dt)
        expected = 4.0 - 4.0 * p.t
        self.assertLess(abs(p.psi_max**2 - expected) / expected, 1e-3)

    def test_radius_decreases_at_least_like_maximum_principle(self):
        nxt = step_unrescaled(self.sphere, 0.2 * self.sphere.h**2)
        self.assertTrue(psi_max_rate_ok(self.sphere, nxt))

    def test_step_above_stability_bound_rejected(self):
        with self.assertRaises(StabilityError):
            step_unrescaled(self.sphere, 1.0)

    def test_non_positive_step_rejected(self):
        with self.assertRaises(StabilityError):
            step_unrescaled(self.sphere, 0.0)

    def test_unclosed_profile_rejected(self):
        with self.assertRaises(GridError):
            step_unrescaled(fixtures("flat_cap", 101), 1e-6)

    def test_extinction_time_fit(self):
        times = [0.0, 0.1, 0.2, 0.3]
        maxima = [math.sqrt(4.0 - 4.0 * t) for t in times]
        self.assertAlmostEqual(extinction_time(times, maxima), 1.0, places=10)
        with self.assertRaises(ValueError):
            extinction_time([0.0, 1.0], [1.0, 2.0])

    def test_richardson(self):
        self.assertAlmostEqual(richardson(1.1, 1.025), 1.0)


class TestRescaled(unittest.TestCase):
    def test_rescaling_round_trip(self):
        p = fixtures("sphere", 101, r=2.0)
        r = rescale(p, 1.0)
        np.testing.assert_allclose(r.u, 2.0 * np.cos(0.5 * r.sigma), atol=1e-12)
        back = unrescale(r, 1.0)
        np.testing.assert_allclose(back.psi, p.psi, atol=1e-12)
        np.testing.assert_allclose(back.s, p.s, atol=1e-12)
        self.assertAlmostEqual(back.t, 0.0)

    def test_sphere_is_stationary(self):
        r = rescaled_sphere(201)
        for _ in range(50):
            r = step_rescaled(r, 4e-4)
        self.assertAlmostEqual(r.tau, 0.02)
        np.testing.assert_allclose(r.u, 2.0 * np.cos(0.5 * r.sigma), atol=1e-3)
        self.assertAlmostEqual(r.sigma[-1], math.pi, delta=1e-3)
        self.assertLess(r.symmetry_defect(), 1e-12)

    def test_cylinder_is_stationary(self):
        r = cylinder_segment(241, 12.0)
        self.assertIsNone(r.sigma_tips)
        for _ in range(20):
            r = step_rescaled(r, 1e-3)
        np.testing.assert_allclose(r.u, math.sqrt(2.0), atol=1e-12)

    def test_tip_speed_vanishes_on_sphere(self):
        r = rescaled_sphere(401)
        self.assertAlmostEqual(tip_ode_rhs(r, "plus"), 0.0, delta=1e-2)
        self.assertAlmostEqual(tip_ode_rhs(r, "minus"), 0.0, delta=1e-2)
        self.assertAlmostEqual(compute_J(r, 1.0), -0.5, delta=1e-4)

    def test_wrong_tip_slope_rejected(self):
        sigma = np.linspace(-math.pi, math.pi, 201)
        u = 1.5 * np.cos(0.5 * sigma)
        u[0] = u[-1] = 0.0
        r = RescaledProfile(sigma=sigma, u=u, tau=0.0)
        with self.assertRaises(TipSlopeError):
            tip_ode_rhs(r)

    def test_open_profile_has_no_tips(self):
        with self.assertRaises(GridError):
            tip_ode_rhs(cylinder_segment())

    def test_J_outside_profile_rejected(self):
        with self.assertRaises(GridError):
            compute_J(rescaled_sphere(101), 4.0)


class TestTipChart(unittest.TestCase):
    def setUp(self):
        self.sphere = rescaled_sphere(401)

    def test_sphere_chart(self):
        chart = to_tip_chart(self.sphere, "plus")
        self.assertAlmostEqual(chart.u_cut, 2.0)
        np.testing.assert_allclose(chart.Y, 1.0 - chart.u_grid**2 / 4.0, atol=1e-6)

    def test_sphere_chart_is_stationary(self):
        chart = to_tip_chart(self.sphere, "minus").resampled(101)
        advanced = step_tip_chart(chart, 0.01)
        self.assertAlmostEqual(advanced.tau, 0.01)
        self.assertEqual(advanced.Y[0], 1.0)
        np.testing.assert_allclose(advanced.Y, 1.0 - advanced.u_grid**2 / 4.0, atol=1e-5)

    def test_decreasing_radius_rejected(self):
        with self.assertRaises(MonotonicityError):
            TipChart(u_grid=np.array([0.0, 0.2, 0.1, 0.3, 0.4]), Y=np.ones(5), tau=0.0)

    def test_cut_above_maximum_rejected(self):
        with self.assertRaises(MonotonicityError):
            to_tip_chart(self.sphere, "plus", u_cut=3.0)

    def test_collar_stitching_keeps_sphere(self):
        stepper = RescaledStepper(symmetric=True, tip_collar=0.9)
        r = stepper.step(rescaled_sphere(201), 4e-4)
        np.testing.assert_allclose(r.u, 2.0 * np.cos(0.5 * r.sigma), atol=5e-3)
        self.assertAlmostEqual(r.sigma[-1], math.pi, delta=5e-3)


class TestMonitors(unittest.TestCase):
    def test_sphere_monitors(self):
        m = compute_monitors(fixtures("sphere", 201, r=2.0), T=1.0)
        self.assertAlmostEqual(m.kappa, 1.5, delta=1e-3)
        self.assertAlmostEqual(m.J_at_tip, -math.pi / 2.0, delta=1e-2)
        self.assertAlmostEqual(m.diameter, 2.0 * math.pi)
        self.assertAlmostEqual(m.Q_max, 1.0, delta=1e-3)
        self.assertLessEqual(m.concavity, 1e-8)
        self.assertTrue(m.k1_monotone)
        self.assertEqual(m.R_max_location, "tip")

    def test_dumbbell_curvature_peaks_at_tips(self):
        m = compute_monitors(fixtures("dumbbell", 801, neck=1.5, bulb=2.0))
        self.assertEqual(m.R_max_location, "tip")

    def test_k1_monotonicity_only_reported_when_q_bounded(self):
        dumbbell = compute_monitors(fixtures("dumbbell", 801, neck=1.5, bulb=2.0))
        self.assertLessEqual(dumbbell.Q_max, 1.0 + 1e-3)
        self.assertIsInstance(dumbbell.k1_monotone, bool)

        # ψ = sin s (1 + 0.12 sin² s) closes smoothly with Q = 1.52 at the equator
        s = np.linspace(0.0, math.pi, 801)
        psi = np.sin(s) * (1.0 + 0.12 * np.sin(s) ** 2)
        psi[0] = psi[-1] = 0.0
        bulged = compute_monitors(ProfileGrid(s=s, psi=psi))
        self.assertAlmostEqual(bulged.Q_max, 1.5232, delta=1e-2)
        self.assertIsNone(bulged.k1_monotone)
        self.assertIsNone(bulged.to_dict()["k1_monotone"])

    def test_extinction_time_must_be_later(self):
        with self.assertRaises(ValueError):
            compute_monitors(fixtures("sphere", 101), T=0.0)

    def test_r_max_location(self):
        self.assertEqual(r_max_location(np.array([2.0, 1.0, 1.0, 1.0, 2.0])), "tip")
        self.assertEqual(r_max_location(np.array([1.0, 0.5, 2.0, 0.5, 1.0])), "interior")

    def test_non_finite_monitor_rejected(self):
        with self.assertRaises(GridError):
            FlowMonitors(
                t=0.0,
                Q_max=float("nan"),
                R_max_location="tip",
                psi_max=1.0,
                J_at_tip=0.0,
                kappa=1.0,
                diameter=1.0,
                q_rhs_at_max=0.0,
                k1_monotone=True,
                concavity=0.0,
            )


class TestDriver(unittest.TestCase):
    def test_waist(self):
        self.assertAlmostEqual(waist(fixtures("dumbbell", 2001, neck=0.5, bulb=2.0)), 0.5, places=8)
        sphere = fixtures("sphere", 101, r=2.0)
        self.assertEqual(waist(sphere), sphere.psi_max)

    def test_unrescaled_sphere_run(self):
        traj = run_flow(FlowConfig(fixture="sphere", n=101, r=2.0, t_end=0.25, output_every=50))
        self.assertEqual(traj.termination, "t_end")
        self.assertAlmostEqual(traj.profiles[-1].t, 0.25)
        self.assertAlmostEqual(traj.T, 1.0, delta=1e-2)
        self.assertTrue(all(traj.checks().values()))
        for p in traj.profiles:
            expected = 4.0 - 4.0 * p.t
            self.assertLess(abs(p.psi_max**2 - expected) / expected, 1e-3)
        self.assertEqual(len(traj.monitors), len(traj.profiles))
        self.assertEqual(len(traj.snapshots), len(traj.profiles))
        for m in traj.monitors:
            self.assertAlmostEqual(m.kappa, 1.5, delta=2e-2)

    def test_rescaled_sphere_run(self):
        cfg = FlowConfig(fixture="sphere", n=101, r=2.0, mode="rescaled", dtau=1e-3, tau_end=0.05, tip_collar=0.0)
        traj = run_flow(cfg)
        self.assertEqual(traj.termination, "tau_end")
        self.assertAlmostEqual(traj.snapshots[-1].tau, 0.05)
        self.assertEqual(set(traj.checks()), {"q_max_bounded"})
        self.assertTrue(traj.checks()["q_max_bounded"])
        last = traj.monitors[-1]
        self.assertAlmostEqual(last.J_at_tip, -math.pi / 2.0, delta=2e-2)

    def test_rescaled_dumbbell_collar_tracks_plain_stepper(self):
        cfg = FlowConfig(fixture="dumbbell", n=101, neck=1.5, bulb=2.0, mode="rescaled", dtau=1e-3, tau_end=-0.11)
        self.assertEqual(cfg.tip_collar, 0.9)
        stitched = run_flow(cfg)
        plain = run_flow(replace(cfg, tip_collar=0.0))
        self.assertEqual(stitched.termination, "tau_end")
        self.assertEqual(stitched.steps, plain.steps)
        self.assertGreater(stitched.steps, 3)
        a, b = stitched.snapshots[-1], plain.snapshots[-1]
        self.assertAlmostEqual(a.sigma[-1], b.sigma[-1], delta=5e-2)
        gap = np.abs(np.interp(b.sigma, a.sigma, a.u) - b.u)
        self.assertLess(float(np.max(gap)), 5e-2)
        self.assertGreater(float(np.max(gap)), 0.0)

    def test_max_steps(self):
        traj = run_flow(FlowConfig(fixture="sphere", n=51, max_steps=3))
        self.assertEqual(traj.termination, "max_steps")
        self.assertEqual(traj.steps, 3)

    def test_dumbbell_checks_include_tip_flag(self):
        traj = run_flow(FlowConfig(fixture="dumbbell", n=101, neck=1.5, bulb=2.0, t_end=0.01, output_every=5))
        self.assertIn("r_max_at_tips", traj.checks())
        self.assertEqual(traj.monitors[0].R_max_location, "tip")

    def test_write_trajectory(self):
        traj = run_flow(FlowConfig(fixture="sphere", n=51, t_end=0.05, output_every=20))
        with tempfile.TemporaryDirectory() as tmp:
            paths = write_trajectory(traj, tmp)
            self.assertEqual(len(paths), len(traj.snapshots) + len(traj.profiles) + 1)
            self.assertTrue(os.path.exists(os.path.join(tmp, "snapshot_00000.csv")))
            frame = read_table(os.path.join(tmp, "curvatures_00000.csv"), ("s", "K0", "K1", "R", "Q"))
            with open(os.path.join(tmp, "monitors.json"), encoding="utf-8") as f:
                document = json.load(f)
        self.assertEqual(document["schema"], 1)
        self.assertEqual(document["fixture"], "sphere")
        self.assertEqual(document["config"]["n"], 51)
        self.assertEqual(len(frame), 51)
        np.testing.assert_allclose(frame["R"].to_numpy(), 1.5, atol=1e-2)

    def test_invalid_mode(self):
        with self.assertRaises(ValueError):
            FlowConfig(mode="sideways")

    def test_from_params_ignores_extra_keys(self):
        cfg = FlowConfig.from_params({"fixture": "capsule", "n": 81, "resolutions": (41, 81)})
        self.assertEqual(cfg.fixture, "capsule")
        self.assertEqual(cfg.n, 81)

    def test_convergence_study_needs_three_resolutions(self):
        with self.assertRaises(ValueError):
            convergence_study(FlowConfig(), [41, 81])

    def test_convergence_study_report(self):
        cfg = FlowConfig(fixture="sphere", r=2.0, t_end=1.0)
        report = convergence_study(cfg, [41, 81, 161], exact=1.0)
        self.assertEqual(report["resolutions"], [41, 81, 161])
        self.assertEqual(len(report["extinction_times"]), 3)
        for error in report["errors"]:
            self.assertLess(error, 1e-2)
        self.assertTrue(math.isfinite(report["richardson"]))


if __name__ == "__main__":
    unittest.main()
