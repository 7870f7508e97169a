from dataclasses import replace

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from carflow.apps.carfollow.laws import LeaderView
from carflow.apps.core import defaults
from carflow.apps.core.exceptions import CollisionError
from carflow.apps.core.params import CarFollowingModel, VehicleClass, VehicleState, preset_params
from carflow.apps.core.scenario import LeaveEvent, SignalColor, SignalSpec
from carflow.apps.experiments.presets import Experiment, experiment_scenario

from .corridor import Corridor, acc_equivalent, init_queue
from .detectors import Detector, throughput
from .engine import queue_composition, run, stopped_queue_tail
from .signals import Signal, virtual_leader_for

ORDINARY = preset_params(VehicleClass.ORDINARY)
RED = SignalSpec(0.0, ((0.0, SignalColor.RED),))


def vehicle(vehicle_id, x, v=0.0, vehicle_class=VehicleClass.ORDINARY):
    return VehicleState(vehicle_id, x, v, 0.0, vehicle_class, preset_params(vehicle_class))


class InitQueueTests(SimpleTestCase):
    def test_ordinary_queue_positions(self):
        corridor = init_queue([VehicleClass.ORDINARY] * 3)
        self.assertEqual([v.x for v in corridor.vehicles], [0.0, -9.0, -18.0])
        self.assertEqual([v.id for v in corridor.vehicles], [1, 2, 3])
        self.assertTrue(all(v.v == 0.0 for v in corridor.vehicles))

    def test_gap_is_followers_minimal_gap(self):
        corridor = init_queue([VehicleClass.ORDINARY, VehicleClass.ACC])
        self.assertEqual([v.x for v in corridor.vehicles], [0.0, -8.0])
        self.assertEqual(corridor.gaps(), [3.0])

    def test_stop_bar_offset(self):
        corridor = init_queue(["acc", "acc"], stop_bar=-100.0)
        self.assertEqual([v.x for v in corridor.vehicles], [-100.0, -108.0])

    def test_empty_composition(self):
        with self.assertRaises(ValidationError):
            init_queue([])

    def test_vehicles_must_be_ordered(self):
        with self.assertRaises(ValidationError):
            Corridor([vehicle(1, 0.0), vehicle(2, 5.0)])


class SignalTests(SimpleTestCase):
    def test_blocking_vehicle_position(self):
        spec = SignalSpec(300.0, ((0.0, SignalColor.RED),))
        self.assertEqual(virtual_leader_for(spec, 0.0, ORDINARY).x_l, 309.0)
        self.assertIsNone(virtual_leader_for(SignalSpec(300.0), 0.0, ORDINARY))

    def test_first_update_reports_green_onset(self):
        signal = Signal(SignalSpec(0.0))
        self.assertEqual(signal.update(0.0, []), "green")
        self.assertIsNone(signal.update(0.05, []))

    def test_vehicles_past_the_line_ignore_it(self):
        signal = Signal(RED)
        signal.update(0.0, [])
        self.assertIsNone(signal.leader_for(0.0, vehicle(1, 1.0), ORDINARY))
        self.assertIsNotNone(signal.leader_for(0.0, vehicle(1, 0.0), ORDINARY))

    def test_committed_vehicle_passes(self):
        spec = SignalSpec(0.0, ((0.0, SignalColor.GREEN), (0.1, SignalColor.RED)))
        corridor = Corridor([vehicle(1, -10.0, 20.0)], signals=[spec])
        corridor.run_until(1.0)
        self.assertGreater(corridor.vehicles[0].x, 0.0)

    def test_distant_vehicle_stops_at_the_line(self):
        spec = SignalSpec(0.0, ((0.0, SignalColor.GREEN), (0.1, SignalColor.RED)))
        corridor = Corridor([vehicle(1, -200.0, 20.0)], signals=[spec])
        corridor.run_until(60.0)
        self.assertLessEqual(corridor.vehicles[0].x, 1e-6)
        self.assertLess(corridor.vehicles[0].v, 0.01)


class DetectorTests(SimpleTestCase):
    def test_crossing_interpolation(self):
        detector = Detector(0.0)
        self.assertAlmostEqual(detector.crossing_time(-1.0, 1.0, 0.0, 0.05), 0.025, places=12)
        self.assertEqual(detector.crossing_time(0.0, 1.0, 2.0, 0.05), 2.0)
        self.assertIsNone(detector.crossing_time(-2.0, -1.0, 0.0, 0.05))
        self.assertIsNone(detector.crossing_time(0.5, 1.0, 0.0, 0.05))

    def test_flow_from_headway(self):
        detector = Detector(0.0)
        detector.observe([(1.0, 1, 10.0, 0.0, None)])
        detector.observe([(3.5, 2, 10.0, 0.0, 4.0)])
        self.assertIsNone(detector.records[0].flow)
        self.assertAlmostEqual(detector.records[1].flow, 1440.0, places=9)

    def test_throughput_window(self):
        detector = Detector(0.0)
        detector.observe([(0.0, 1, 0.0, 0.0, None), (30.0, 2, 0.0, 0.0, None), (60.5, 3, 0.0, 0.0, None)])
        self.assertEqual(throughput(detector.records, 60.0), 2)
        self.assertEqual(throughput([], 60.0), 0)
        with self.assertRaises(ValidationError):
            throughput(detector.records, 0.0)


class CorridorStepTests(SimpleTestCase):
    def test_free_vehicle_at_v_max_keeps_speed(self):
        for model in CarFollowingModel:
            corridor = Corridor([vehicle(1, 0.0, 20.0)], model=model)
            corridor.step()
            self.assertAlmostEqual(corridor.vehicles[0].x, 1.0, places=12, msg=model)
            self.assertEqual(corridor.vehicles[0].v, 20.0, msg=model)

    def test_first_vehicle_reaches_v_max(self):
        corridor = Corridor([vehicle(1, 0.0)], model=CarFollowingModel.GIPPS)
        corridor.step()
        self.assertAlmostEqual(corridor.vehicles[0].a, 1.5, places=9)
        corridor.run_until(20.0)
        self.assertAlmostEqual(corridor.vehicles[0].v, 20.0, places=9)
        self.assertAlmostEqual(corridor.vehicles[0].a, 0.0, places=6)

    def test_standstill_behind_red(self):
        for model in CarFollowingModel:
            corridor = Corridor([vehicle(1, 0.0), vehicle(2, -9.0)], signals=[RED], model=model)
            corridor.run_until(5.0)
            self.assertAlmostEqual(corridor.vehicles[0].x, 0.0, places=9, msg=model)
            self.assertAlmostEqual(corridor.vehicles[1].x, -9.0, places=9, msg=model)
            self.assertTrue(all(v.v >= 0.0 for v in corridor.vehicles))

    def test_collision_raises(self):
        corridor = Corridor([vehicle(1, 10.0), vehicle(2, 4.5, 20.0)], model=CarFollowingModel.HELLY)
        with self.assertRaises(CollisionError) as cm:
            corridor.step()
        self.assertEqual((cm.exception.follower_id, cm.exception.leader_id), (2, 1))
        self.assertEqual(len(cm.exception.dump), 2)

    def test_equilibrium_platoon_flow(self):
        vehicles = [vehicle(index + 1, -50.0 * index, 20.0) for index in range(10)]
        corridor = Corridor(vehicles, detectors=[100.0], model=CarFollowingModel.GIPPS)
        corridor.run_until(30.0)
        records = corridor.records
        self.assertEqual([record.vehicle_id for record in records], list(range(1, 11)))
        for record in records[1:]:
            self.assertAlmostEqual(record.flow, 1440.0, delta=1.44)

    def test_cacc_behind_ordinary_drives_as_acc(self):
        corridor = init_queue([VehicleClass.ORDINARY, VehicleClass.CACC, VehicleClass.CACC])
        lead, first, second = corridor.vehicles
        self.assertEqual(corridor.behaviour(first, LeaderView.of(lead)), (acc_equivalent(first.params), False))
        params, cooperative = corridor.effective_leader(2)[1:]
        self.assertTrue(cooperative)
        self.assertIs(params, second.params)


class EngineTests(SimpleTestCase):
    def test_zero_horizon(self):
        result = run(experiment_scenario(Experiment.FREE_ROAD, horizon=0.0))
        self.assertEqual(result.records, [])
        self.assertEqual(result.throughput(), 0)
        self.assertEqual(len(result.trajectory), defaults.QUEUE_SIZE)

    def test_stride_and_vehicle_limit(self):
        scenario = experiment_scenario(Experiment.FREE_ROAD, horizon=1.0, stride=20, vehicles=3)
        result = run(scenario)
        self.assertEqual(len(result.trajectory), 6)
        self.assertEqual({sample.vehicle_id for sample in result.trajectory}, {1, 2, 3})
        self.assertAlmostEqual(result.trajectory[-1].t, 1.0, places=9)

    def test_composition_from_seed(self):
        scenario = experiment_scenario(Experiment.FREE_ROAD, penetration=0.5, tech="cacc", seed=3)
        self.assertEqual(queue_composition(scenario), queue_composition(scenario))
        self.assertEqual(queue_composition(scenario).count(VehicleClass.CACC), defaults.QUEUE_SIZE // 2)

    def test_crossings_in_queue_order(self):
        result = run(experiment_scenario(Experiment.FREE_ROAD, model="iidm", horizon=20.0))
        ids = [record.vehicle_id for record in result.records]
        self.assertEqual(ids, list(range(1, len(ids) + 1)))
        self.assertEqual(result.records[0].time, 0.0)

    def test_extra_detector_does_not_change_throughput(self):
        scenario = experiment_scenario(Experiment.FREE_ROAD, model="iidm", horizon=30.0, queue_size=30)
        single = run(scenario)
        double = run(replace(scenario, detectors=(0.0, 100.0)))
        self.assertEqual(double.throughput(), single.throughput())
        self.assertEqual({record.position for record in double.records}, {0.0, 100.0})
        self.assertLess(double.throughput(position=100.0), double.throughput())

    def test_red_light_queue_forms_before_the_signal(self):
        result = run(experiment_scenario(Experiment.RED_LIGHT, model="gipps"))
        front = result.corridor.vehicles[0]
        self.assertLessEqual(front.x, 300.0 + 1e-6)
        self.assertLess(front.v, 0.5)
        tail = stopped_queue_tail(result.corridor, 300.0)
        self.assertIsNotNone(tail)
        self.assertLess(tail, 300.0)

    def test_leave_outside_platoon_is_ignored(self):
        scenario = experiment_scenario(Experiment.FREE_ROAD, horizon=1.0, leave_events=(LeaveEvent(0.5, 2),))
        with self.assertLogs("carflow.apps.microsim.engine", level="WARNING"):
            run(scenario)


class SafetyTests(SimpleTestCase):
    def assert_safe(self, result):
        self.assertTrue(all(sample.v >= 0.0 for sample in result.trajectory))
        self.assertTrue(all(gap >= -1e-9 for gap in result.corridor.gaps()))

    @settings(max_examples=10, deadline=None)
    @given(
        st.sampled_from([CarFollowingModel.GIPPS, CarFollowingModel.IIDM]),
        st.sampled_from([VehicleClass.ACC, VehicleClass.CACC]),
        st.sampled_from(defaults.PENETRATION_LEVELS),
        st.sampled_from(defaults.A_MAX_LEVELS),
        st.integers(min_value=0, max_value=10_000),
    )
    def test_mixed_discharge_never_collides(self, model, tech, penetration, a_max, seed):
        scenario = experiment_scenario(
            Experiment.RED_LIGHT, model=model, tech=tech, penetration=penetration, a_max=a_max, seed=seed, stride=20
        )
        self.assert_safe(run(scenario))

    def test_ordinary_helly_discharge_never_collides(self):
        for experiment in Experiment:
            for a_max in defaults.A_MAX_LEVELS:
                scenario = experiment_scenario(experiment, model=CarFollowingModel.HELLY, a_max=a_max, stride=20)
                self.assert_safe(run(scenario))

    def test_helly_with_acc_headway_amplifies_into_a_collision(self):
        scenario = experiment_scenario(
            Experiment.RED_LIGHT, model=CarFollowingModel.HELLY, tech=VehicleClass.ACC, penetration=1.0
        )
        with self.assertRaises(CollisionError) as cm:
            run(scenario)
        self.assertGreater(cm.exception.time, 30.0)
        self.assertGreater(cm.exception.follower_id, 2)


class TimeStepTests(SimpleTestCase):
    def test_halving_dt_keeps_throughput(self):
        for experiment in Experiment:
            for model in CarFollowingModel:
                coarse = run(experiment_scenario(experiment, model=model, queue_size=40)).throughput()
                fine = run(experiment_scenario(experiment, model=model, queue_size=40, dt=0.025)).throughput()
                self.assertLessEqual(abs(coarse - fine), 1, msg=(experiment, model))
