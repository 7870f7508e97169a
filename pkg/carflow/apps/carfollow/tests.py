import math

from django.test import SimpleTestCase
from hypothesis import given
from hypothesis import strategies as st

from carflow.apps.core.exceptions import InvalidStateError, UnavoidableCollisionError
from carflow.apps.core.params import DriverParams, VehicleClass, VehicleState, preset_params

from .laws import (
    LeaderView,
    cacc_accel,
    cah_accel,
    gipps_accel,
    helly_accel,
    iidm_accel,
    iidm_desired_gap,
    model_accel,
)

DT = 0.05
ORDINARY = preset_params(VehicleClass.ORDINARY)
CACC = preset_params(VehicleClass.CACC)


def follower(v, params=ORDINARY, vehicle_class=VehicleClass.ORDINARY):
    return VehicleState(2, 0.0, v, 0.0, vehicle_class, params)


def leader_at(gap, v_l, a_l=0.0, vehicle_class=VehicleClass.ORDINARY):
    return LeaderView(x_l=gap + 5.0, v_l=v_l, a_l=a_l, vehicle_class=vehicle_class, vehicle_id=1)


speeds = st.floats(min_value=0.0, max_value=20.0)
gaps = st.floats(min_value=4.0, max_value=500.0)


class LeaderViewTests(SimpleTestCase):
    def test_blocking_obstacle_per_class(self):
        self.assertEqual(LeaderView.blocking(300.0, ORDINARY).x_l, 309.0)
        self.assertEqual(LeaderView.blocking(300.0, preset_params(VehicleClass.ACC)).x_l, 308.0)

    def test_virtual_leaders(self):
        self.assertTrue(LeaderView.blocking(0.0, ORDINARY).is_virtual)
        self.assertTrue(LeaderView.free_road(follower(0.0)).is_virtual)
        self.assertFalse(leader_at(10.0, 0.0).is_virtual)

    def test_gap(self):
        self.assertEqual(leader_at(12.5, 0.0).gap(follower(0.0)), 12.5)


class GippsTests(SimpleTestCase):
    def test_standstill_at_minimal_gap(self):
        self.assertAlmostEqual(gipps_accel(follower(0.0), leader_at(4.0, 0.0), DT), 0.0, places=9)

    def test_equilibrium_at_v_max(self):
        gap = ORDINARY.g_min + 20.0 * ORDINARY.tau
        self.assertAlmostEqual(gipps_accel(follower(20.0), leader_at(gap, 20.0), DT), 0.0, places=12)

    def test_free_road_start(self):
        self.assertEqual(gipps_accel(follower(0.0), None, DT), 1.5)

    def test_free_road_at_v_max(self):
        self.assertEqual(gipps_accel(follower(20.0), None, DT), 0.0)

    def test_brakes_for_stopped_leader(self):
        expected = (-10.0 - 4.1 + math.sqrt(4.1**2 + 2.0 * 2.0 * 26.0)) / DT
        self.assertAlmostEqual(gipps_accel(follower(10.0), leader_at(30.0, 0.0), DT), expected, places=9)
        self.assertLess(expected, -2.0)

    def test_negative_radicand(self):
        with self.assertRaises(UnavoidableCollisionError):
            gipps_accel(follower(20.0), leader_at(1.0, 0.0), DT, DriverParams(g_min=10.0))


class IIDMTests(SimpleTestCase):
    def test_desired_gap(self):
        self.assertEqual(iidm_desired_gap(follower(0.0), leader_at(50.0, 0.0)), 4.0)
        self.assertAlmostEqual(iidm_desired_gap(follower(20.0), leader_at(50.0, 20.0)), 45.0, places=12)
        self.assertAlmostEqual(
            iidm_desired_gap(follower(20.0), leader_at(50.0, 0.0)),
            4.0 + 41.0 + 400.0 / (2.0 * math.sqrt(3.0)),
            places=9,
        )

    def test_standstill_at_minimal_gap(self):
        self.assertEqual(iidm_accel(follower(0.0), leader_at(4.0, 0.0)), 0.0)

    def test_free_road(self):
        self.assertAlmostEqual(iidm_accel(follower(10.0), None), 1.40625, places=9)
        self.assertEqual(iidm_accel(follower(20.0), None), 0.0)
        self.assertAlmostEqual(iidm_accel(follower(0.0), None), 1.5, places=9)

    def test_equilibrium_at_v_max(self):
        gap = ORDINARY.g_min + 20.0 * ORDINARY.tau
        self.assertAlmostEqual(iidm_accel(follower(20.0), leader_at(gap, 20.0)), 0.0, places=12)

    def test_non_positive_gap(self):
        with self.assertRaises(InvalidStateError):
            iidm_accel(follower(5.0), leader_at(0.0, 0.0))


class HellyTests(SimpleTestCase):
    def test_clamped_by_a_max(self):
        self.assertEqual(helly_accel(follower(10.0), leader_at(30.0, 20.0), DT), 1.5)

    def test_equilibrium_at_v_max(self):
        gap = ORDINARY.g_min + 20.0 * ORDINARY.tau
        self.assertAlmostEqual(helly_accel(follower(20.0), leader_at(gap, 20.0), DT), 0.0, places=12)

    def test_speed_cap(self):
        self.assertLessEqual(helly_accel(follower(20.0), leader_at(100.0, 25.0), DT), 0.0)


class CAHTests(SimpleTestCase):
    def test_stopped_leader_limit(self):
        self.assertAlmostEqual(cah_accel(follower(10.0), leader_at(25.0, 0.0)), -2.0, places=12)

    def test_equal_speeds(self):
        self.assertEqual(cah_accel(follower(10.0), leader_at(20.0, 10.0, a_l=0.5)), 0.5)

    def test_opening_gap(self):
        self.assertEqual(cah_accel(follower(9.0), leader_at(20.0, 10.0, a_l=0.5)), 0.5)

    def test_closing_on_slower_leader(self):
        self.assertAlmostEqual(cah_accel(follower(15.0), leader_at(25.0, 10.0)), -0.5, places=12)

    def test_leader_accel_capped(self):
        self.assertEqual(cah_accel(follower(10.0), leader_at(20.0, 10.0, a_l=4.0)), 1.5)

    def test_non_positive_gap(self):
        with self.assertRaises(InvalidStateError):
            cah_accel(follower(5.0), leader_at(-1.0, 0.0))


class CACCTests(SimpleTestCase):
    def test_passes_iidm_through(self):
        state = follower(0.0, CACC, VehicleClass.CACC)
        leader = leader_at(3.0, 0.0, vehicle_class=VehicleClass.CACC)
        self.assertEqual(cacc_accel(state, leader), iidm_accel(state, leader))

    def test_blends_towards_cah(self):
        state = follower(15.0, CACC, VehicleClass.CACC)
        leader = leader_at(15.0, 15.0, a_l=1.0, vehicle_class=VehicleClass.CACC)
        a_iidm = iidm_accel(state, leader)
        a_cah = cah_accel(state, leader)
        self.assertGreater(a_cah, a_iidm)
        self.assertAlmostEqual(
            cacc_accel(state, leader), a_cah + CACC.b * math.tanh((a_iidm - a_cah) / CACC.b), places=12
        )
        self.assertGreater(cacc_accel(state, leader), a_cah - CACC.b)

    @given(speeds, speeds, st.floats(min_value=0.5, max_value=200.0), st.floats(min_value=-3.0, max_value=3.0))
    def test_never_below_iidm(self, v, v_l, gap, a_l):
        state = follower(v, CACC, VehicleClass.CACC)
        leader = leader_at(gap, v_l, a_l, VehicleClass.CACC)
        self.assertGreaterEqual(cacc_accel(state, leader), iidm_accel(state, leader) - 1e-12)


class ModelDispatchTests(SimpleTestCase):
    def test_dispatch_by_value(self):
        state, leader = follower(10.0), leader_at(30.0, 20.0)
        self.assertEqual(model_accel("gipps", state, leader, DT), gipps_accel(state, leader, DT))
        self.assertEqual(model_accel("iidm", state, leader, DT), iidm_accel(state, leader))
        self.assertEqual(model_accel("helly", state, leader, DT), helly_accel(state, leader, DT))

    def test_params_override(self):
        state = follower(20.0)
        leader = leader_at(30.0, 20.0)
        acc = preset_params(VehicleClass.ACC)
        self.assertGreater(
            model_accel("helly", state, leader, DT, acc), model_accel("helly", state, leader, DT)
        )


class MonotonicityTests(SimpleTestCase):
    models = ("gipps", "iidm", "helly")

    @given(speeds, speeds, gaps, gaps)
    def test_non_decreasing_in_gap(self, v, v_l, gap1, gap2):
        near, far = sorted((gap1, gap2))
        for model in self.models:
            self.assertLessEqual(
                model_accel(model, follower(v), leader_at(near, v_l), DT),
                model_accel(model, follower(v), leader_at(far, v_l), DT) + 1e-9,
                msg=model,
            )

    @given(speeds, speeds, speeds, gaps)
    def test_non_decreasing_in_leader_speed(self, v, v_l1, v_l2, gap):
        slow, fast = sorted((v_l1, v_l2))
        for model in self.models:
            self.assertLessEqual(
                model_accel(model, follower(v), leader_at(gap, slow), DT),
                model_accel(model, follower(v), leader_at(gap, fast), DT) + 1e-9,
                msg=model,
            )

    @given(speeds, speeds, speeds, gaps)
    def test_non_increasing_in_own_speed(self, v1, v2, v_l, gap):
        slow, fast = sorted((v1, v2))
        for model in ("gipps", "iidm", "helly"):
            self.assertGreaterEqual(
                model_accel(model, follower(slow), leader_at(gap, v_l), DT) + 1e-9,
                model_accel(model, follower(fast), leader_at(gap, v_l), DT),
                msg=model,
            )
