import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from carflow.apps.carfollow.laws import LeaderView, iidm_accel
from carflow.apps.core.exceptions import StabilityError
from carflow.apps.core.params import CarFollowingModel, VehicleClass, VehicleState, preset_params
from carflow.apps.core.scenario import MacroSpec, SignalColor, SignalSpec
from carflow.apps.experiments.presets import Experiment, experiment_scenario
from carflow.apps.microsim.engine import run, stopped_queue_tail

from .closures import iidm, link_accel, link_leaders
from .solver import (
    check_cfl,
    equilibrium_state,
    init_red_light_scenario,
    link_fluxes,
    macro_step,
    queue_tail,
    run_macro,
)
from .state import OutflowMask, uniform_state

ORDINARY = preset_params(VehicleClass.ORDINARY)
RHO_JAM = 1.0 / 9.0


class ClosureTests(SimpleTestCase):
    def test_uniform_traffic_gap(self):
        rho = np.full(40, 0.02)
        V = np.linspace(10.0, 20.0, 40)
        gaps, V_leader = link_leaders(rho, V, 5.0, ORDINARY)
        np.testing.assert_allclose(gaps[:30], 45.0, rtol=0.0, atol=1e-9)
        np.testing.assert_array_equal(V_leader[:30], V[10:40])

    def test_last_vehicle_sees_the_free_road(self):
        gaps, V_leader = link_leaders(np.array([0.02, 0.0, 0.0]), np.zeros(3), 5.0, ORDINARY)
        self.assertEqual(gaps.tolist(), [1e7] * 3)
        self.assertEqual(V_leader.tolist(), [20.0] * 3)

    def test_leader_behind_a_sparse_stretch(self):
        rho = np.array([0.02, 0.0, 0.0, 0.0, RHO_JAM, RHO_JAM])
        gaps, V_leader = link_leaders(rho, np.array([15.0, 0.0, 0.0, 0.0, 0.0, 0.0]), 5.0, ORDINARY)
        # 0.05 vehicles ahead in its own link, the other 0.95 sit 8.55 m into the jam
        self.assertAlmostEqual(gaps[0], 20.0 - 2.5 + 8.55 - 5.0, places=9)
        self.assertEqual(V_leader[0], 0.0)

    def test_masked_link_continues_as_jam(self):
        rho = np.array([RHO_JAM, 0.0])
        gaps, V_leader = link_leaders(rho, np.zeros(2), 5.0, ORDINARY, blocked=np.array([True, False]))
        self.assertAlmostEqual(gaps[0], 4.0, places=9)
        self.assertEqual(V_leader[0], 0.0)
        self.assertEqual(gaps[1], 1e7)

    def test_jam_head_accelerates(self):
        rho = np.array([RHO_JAM] * 4 + [0.0, 0.0])
        for model in CarFollowingModel:
            a = link_accel(model, rho, np.zeros(6), 0.05, ORDINARY)
            np.testing.assert_allclose(a[:2], 0.0, atol=1e-9, err_msg=model)
            np.testing.assert_allclose(a[2:4], ORDINARY.a_max, atol=1e-9, err_msg=model)

    def test_masked_link_sees_standing_jam(self):
        rho = np.array([RHO_JAM, 0.0])
        a = link_accel("iidm", rho, np.zeros(2), 0.05, ORDINARY, blocked=np.array([True, False]))
        self.assertAlmostEqual(a[0], 0.0, places=9)

    @given(
        st.floats(min_value=0.0, max_value=20.0),
        st.floats(min_value=0.0, max_value=20.0),
        st.floats(min_value=0.5, max_value=200.0),
    )
    def test_iidm_closure_is_the_vehicle_law(self, v, v_l, gap):
        follower = VehicleState(2, 0.0, v, 0.0, VehicleClass.ORDINARY, ORDINARY)
        leader = LeaderView(x_l=gap + ORDINARY.l, v_l=v_l)
        expected = iidm_accel(follower, leader)
        closure = iidm(np.array([v]), np.array([v_l]), np.array([gap]), 0.05, ORDINARY)[0]
        self.assertAlmostEqual(closure, expected, delta=1e-9 * max(1.0, abs(expected)))


class SolverTests(SimpleTestCase):
    def test_cfl_violation(self):
        with self.assertRaisesMessage(StabilityError, "dt * v_max = 1 m > min dx = 0.5 m"):
            check_cfl(uniform_state(10, link_length=0.5), 0.05, ORDINARY)

    def test_stride_must_be_positive(self):
        with self.assertRaises(ValidationError):
            run_macro(uniform_state(10), horizon=1.0, stride=0)

    def test_masked_link_has_no_outflow(self):
        red = SignalSpec(50.0, ((0.0, SignalColor.RED),))
        state = uniform_state(5, rho=0.05, V=10.0, masks=(OutflowMask(3, red),))
        fluxes = link_fluxes(state, 0.05)
        self.assertEqual(fluxes[3], 0.0)
        self.assertAlmostEqual(fluxes[2], 0.5, places=12)

    def test_flux_never_overfills(self):
        state = uniform_state(2, rho=RHO_JAM, V=20.0)
        fluxes = link_fluxes(state, 0.05)
        self.assertEqual(fluxes[1], 0.0)

    def test_empty_road_stays_empty(self):
        state = uniform_state(20)
        for model in CarFollowingModel:
            grid = run_macro(state, model, ORDINARY, horizon=2.0)
            self.assertEqual(float(np.max(grid.density)), 0.0)
        self.assertEqual(state.vehicles, 0.0)

    def test_zero_horizon_single_sample(self):
        grid = run_macro(init_red_light_scenario(), horizon=0.0)
        self.assertEqual(grid.shape, (1, 240))

    def test_equilibrium_is_fixed_point(self):
        for vehicle_class in (VehicleClass.ORDINARY, VehicleClass.ACC):
            params = preset_params(vehicle_class)
            for model in CarFollowingModel:
                state = equilibrium_state(30, params)
                rho0, V0 = state.rho.copy(), state.V.copy()
                for _ in range(100):
                    macro_step(state, model, params, 0.05)
                self.assertLess(float(np.max(np.abs(state.rho - rho0))), 1e-12, msg=model)
                self.assertLess(float(np.max(np.abs(state.V - V0))), 1e-9, msg=model)

    @settings(max_examples=25, deadline=None)
    @given(
        st.sampled_from(list(CarFollowingModel)),
        st.lists(st.floats(min_value=0.0, max_value=RHO_JAM), min_size=12, max_size=12),
        st.lists(st.floats(min_value=0.0, max_value=20.0), min_size=12, max_size=12),
    )
    def test_bounds_and_conservation(self, model, rho, V):
        state = uniform_state(12)
        state.rho = np.array(rho)
        state.V = np.array(V)
        state.initial_vehicles = state.vehicles
        for _ in range(200):
            macro_step(state, model, ORDINARY, 0.05)
            self.assertTrue(np.all(state.rho >= -1e-12))
            self.assertTrue(np.all(state.rho <= RHO_JAM + 1e-9))
            self.assertTrue(np.all((state.V >= 0.0) & (state.V <= 20.0)))
        self.assertLess(abs(state.conservation_error()), 1e-9)


class RedLightScenarioTests(SimpleTestCase):
    def test_initial_state(self):
        state = init_red_light_scenario()
        self.assertAlmostEqual(state.vehicles, 49 * 5 / 9, places=9)
        self.assertEqual(state.rho[48], state.rho_jam)
        self.assertEqual(state.rho[49], 0.0)
        self.assertTrue(np.all(state.V == 0.0))
        self.assertEqual(state.positions()[49], 0.0)
        self.assertEqual(state.positions()[109], 300.0)
        self.assertEqual(state.blocked().tolist().count(True), 1)
        self.assertTrue(state.blocked()[109])

    def test_custom_grid(self):
        state = init_red_light_scenario(spec=MacroSpec(links=20, signal_link=5, red_link=15))
        self.assertEqual(len(state), 20)
        self.assertAlmostEqual(state.vehicles, 4 * 5 / 9, places=9)

    def test_sixty_seconds_iidm(self):
        state = init_red_light_scenario(a_max=1.5)
        grid = run_macro(state, CarFollowingModel.IIDM, preset_params(VehicleClass.ORDINARY, a_max=1.5))
        self.assertEqual(grid.shape, (1200, 240))
        self.assertEqual(grid.density.shape, grid.speed.shape)
        self.assertLessEqual(state.relative_conservation_error(), 1e-9)
        self.assertLessEqual(float(np.max(grid.density)), state.rho_jam + 1e-6)
        self.assertTrue(np.all(grid.flow[:, 109:] == 0.0))
        self.assertGreater(grid.density[-1, 109], 0.5 * state.rho_jam)
        tail = queue_tail(state)
        self.assertIsNotNone(tail)
        self.assertLessEqual(tail, 300.0)

    def test_sampling_stride(self):
        grid = run_macro(init_red_light_scenario(), CarFollowingModel.GIPPS, ORDINARY, stride=20)
        self.assertEqual(grid.shape, (60, 240))
        self.assertAlmostEqual(grid.times[1], 1.0, places=9)
        rows = list(grid.rows("speed"))
        self.assertEqual(len(rows), 61)
        self.assertEqual(rows[0][0], "t")
        self.assertEqual(len(rows[0]), 241)

    def test_conservation_for_every_model(self):
        for model in CarFollowingModel:
            state = init_red_light_scenario()
            run_macro(state, model, ORDINARY, horizon=30.0)
            self.assertLessEqual(state.relative_conservation_error(), 1e-9, msg=model)
            self.assertGreater(state.outflow_total, -1e-12)

    def test_queue_tail_matches_the_vehicle_queue(self):
        for a_max in (0.8, 1.5, 2.5):
            params = preset_params(VehicleClass.ORDINARY, a_max=a_max)
            for model in CarFollowingModel:
                state = init_red_light_scenario(a_max=a_max)
                run_macro(state, model, params, stride=1200)
                micro = run(experiment_scenario(Experiment.RED_LIGHT, model=model, a_max=a_max, stride=1200))
                vehicle_tail = stopped_queue_tail(micro.corridor, 300.0)
                self.assertLessEqual(abs(queue_tail(state) - vehicle_tail), 10.0, msg=(model, a_max))
