from dataclasses import replace

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from hypothesis import given
from hypothesis import strategies as st

from .exceptions import ScenarioError
from .params import DriverParams, VehicleClass, VehicleState, preset_params
from .rng import make_rng
from .scenario import (
    ScenarioConfig,
    SignalColor,
    SignalSpec,
    dump_scenario,
    parse_scenario,
)


class PresetParamsTests(SimpleTestCase):
    def test_class_headways(self):
        self.assertEqual(
            (preset_params(VehicleClass.ORDINARY).tau, preset_params(VehicleClass.ORDINARY).g_min),
            (2.05, 4.0),
        )
        self.assertEqual((preset_params(VehicleClass.ACC).tau, preset_params(VehicleClass.ACC).g_min), (1.1, 3.0))
        self.assertEqual((preset_params(VehicleClass.CACC).tau, preset_params(VehicleClass.CACC).g_min), (0.8, 3.0))

    def test_class_headway_wins_over_overrides(self):
        params = preset_params("acc", a_max=2.5, tau=9.0, b=3.0)
        self.assertEqual(params.a_max, 2.5)
        self.assertEqual(params.b, 3.0)
        self.assertEqual(params.tau, 1.1)

    def test_jam_density(self):
        self.assertAlmostEqual(DriverParams().jam_density, 1.0 / 9.0, places=15)

    def test_validate_rejects_non_positive(self):
        with self.assertRaises(ValidationError):
            DriverParams(b=0.0).validate()
        with self.assertRaises(ValidationError):
            DriverParams(a_max=-1.0).validate()

    def test_validate_rejects_tau_below_dt(self):
        with self.assertRaises(ValidationError):
            DriverParams(tau=0.04).validate(dt=0.05)
        self.assertIsNotNone(DriverParams(tau=0.05).validate(dt=0.05))

    @given(st.floats(min_value=0.1, max_value=5.0), st.sampled_from(list(VehicleClass)))
    def test_presets_are_valid(self, a_max, vehicle_class):
        params = preset_params(vehicle_class, a_max=a_max)
        params.validate()
        self.assertEqual(params.a_max, a_max)

    def test_gap_to_uses_leader_length(self):
        leader = VehicleState(1, 10.0, 0.0, 0.0, VehicleClass.ORDINARY, DriverParams())
        follower = VehicleState(2, 1.0, 0.0, 0.0, VehicleClass.ORDINARY, DriverParams())
        self.assertEqual(follower.gap_to(leader), 4.0)
        self.assertEqual(leader.rear, 5.0)


class RngTests(SimpleTestCase):
    def test_same_keys_same_stream(self):
        self.assertEqual(make_rng(7, 1, 2).integers(0, 1000, 5).tolist(), make_rng(7, 1, 2).integers(0, 1000, 5).tolist())

    def test_keys_separate_streams(self):
        self.assertNotEqual(make_rng(7, 1, 2).random(), make_rng(7, 2, 1).random())


class SignalSpecTests(SimpleTestCase):
    def test_red_before_first_switch(self):
        signal = SignalSpec(0.0, ((10.0, SignalColor.GREEN), (40.0, SignalColor.RED)))
        self.assertTrue(signal.is_red(0.0))
        self.assertFalse(signal.is_red(10.0))
        self.assertFalse(signal.is_red(39.95))
        self.assertTrue(signal.is_red(40.0))

    def test_default_schedule_is_green(self):
        self.assertFalse(SignalSpec(300.0).is_red(0.0))


class ParseScenarioTests(SimpleTestCase):
    def test_empty_document_uses_defaults(self):
        self.assertEqual(parse_scenario(""), ScenarioConfig())

    def test_full_document(self):
        config = parse_scenario(
            """
model: iidm
a_max: 2.5
seed: 11
signals:
  - {position: 0, schedule: [[0, green]]}
  - {position: 300, schedule: [[0, red]]}
queue: {size: 10, penetration: 0.5, tech: cacc}
platooning: {enabled: true, segments: [[-500, 500]], max_size: 4}
events: {leave: [{time: 20, vehicle: 3}]}
output: {stride: 5, window: 30, vehicles: 10}
"""
        )
        self.assertEqual(config.model, "iidm")
        self.assertEqual(config.a_max, 2.5)
        self.assertEqual(len(config.signals), 2)
        self.assertTrue(config.signals[1].is_red(59.0))
        self.assertEqual(config.queue.tech, VehicleClass.CACC)
        self.assertEqual(config.platooning.segments, ((-500.0, 500.0),))
        self.assertEqual(config.platooning.max_size, 4)
        self.assertEqual(config.leave_events[0].vehicle, 3)
        self.assertEqual((config.stride, config.window, config.vehicles), (5, 30.0, 10))
        self.assertEqual(config.params_for(VehicleClass.CACC).a_max, 2.5)

    def test_unknown_key_names_dotted_path(self):
        with self.assertRaises(ScenarioError) as cm:
            parse_scenario("queue: {sise: 40}")
        self.assertEqual(cm.exception.key, "queue.sise")

    def test_unknown_top_level_key(self):
        with self.assertRaises(ScenarioError) as cm:
            parse_scenario("modle: gipps")
        self.assertEqual(cm.exception.key, "modle")

    def test_bad_choice(self):
        with self.assertRaises(ScenarioError):
            parse_scenario("model: krauss")

    def test_ordinary_tech_rejected(self):
        with self.assertRaises(ScenarioError):
            parse_scenario("queue: {tech: ordinary}")

    def test_penetration_out_of_range(self):
        with self.assertRaises(ValidationError):
            parse_scenario("queue: {penetration: 1.5}")

    def test_schedule_must_increase(self):
        with self.assertRaises(ValidationError):
            parse_scenario("signals: [{position: 0, schedule: [[5, green], [5, red]]}]")

    def test_tau_below_dt_rejected(self):
        with self.assertRaises(ValidationError):
            parse_scenario("dt: 1.0")

    def test_dump_parses_back_to_equal_config(self):
        config = parse_scenario(
            """
model: helly
seed: 4
params: {b: 2.5}
signals: [{position: 0, schedule: [[0, green], [30, red]]}]
queue: {composition: [ordinary, cacc, acc]}
platooning: {enabled: true, range: 20}
"""
        )
        self.assertEqual(parse_scenario(dump_scenario(config)), config)

    def test_dump_of_modified_config(self):
        config = replace(ScenarioConfig(), horizon=12.5, stride=3)
        self.assertEqual(parse_scenario(dump_scenario(config)), config)
