from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from carflow.apps.core import defaults
from carflow.apps.core.params import CarFollowingModel, VehicleClass, preset_params
from carflow.apps.core.rng import make_rng

from .composition import compose_queue, interleaved, tech_count
from .equilibrium import (
    Link,
    equilibrium_curves,
    equilibrium_flow,
    equilibrium_headway,
    mixed_equilibrium_flow,
    mixed_headway,
)
from .presets import (
    PUBLISHED_THROUGHPUT,
    Experiment,
    experiment_scenario,
    published_throughput,
)
from .sweep import (
    TECH_CLASSES,
    CaseStatus,
    SweepCase,
    acceleration_sweep,
    penetration_cases,
    run_count,
    run_sweep,
    simulate_run,
)

ORDINARY = preset_params(VehicleClass.ORDINARY)
ACC = preset_params(VehicleClass.ACC)
CACC = preset_params(VehicleClass.CACC)


class EquilibriumTests(SimpleTestCase):
    def test_class_headways(self):
        self.assertAlmostEqual(equilibrium_headway(ORDINARY), 2.5, places=12)
        self.assertAlmostEqual(equilibrium_headway(ACC), 1.5, places=12)
        self.assertAlmostEqual(equilibrium_headway(CACC), 1.2, places=12)

    def test_class_flows(self):
        self.assertAlmostEqual(equilibrium_flow(ORDINARY), 1440.0, places=9)
        self.assertAlmostEqual(equilibrium_flow(ACC), 2400.0, places=9)
        self.assertAlmostEqual(equilibrium_flow(CACC), 3000.0, places=9)

    def test_mixed_endpoints(self):
        self.assertAlmostEqual(mixed_equilibrium_flow(0.0, ACC, ORDINARY), 24.0, places=9)
        self.assertAlmostEqual(mixed_equilibrium_flow(1.0, ACC, ORDINARY), 40.0, places=9)
        self.assertAlmostEqual(mixed_equilibrium_flow(1.0, CACC, ORDINARY), 50.0, places=9)

    def test_link_storage_cap(self):
        self.assertAlmostEqual(mixed_equilibrium_flow(1.0, CACC, ORDINARY, Link()), 37.5, places=9)
        self.assertAlmostEqual(mixed_equilibrium_flow(0.0, CACC, ORDINARY, Link()), 24.0, places=9)
        self.assertAlmostEqual(mixed_equilibrium_flow(1.0, CACC, ORDINARY, Link(lanes=2)), 50.0, places=9)

    def test_penetration_range(self):
        with self.assertRaises(ValidationError):
            mixed_headway(1.3, ACC, ORDINARY)

    @given(st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=0.0, max_value=1.0))
    def test_flow_grows_with_penetration(self, first, second):
        low, high = sorted((first, second))
        for tech in (ACC, CACC):
            self.assertLessEqual(
                mixed_equilibrium_flow(low, tech, ORDINARY), mixed_equilibrium_flow(high, tech, ORDINARY) + 1e-9
            )

    def test_curves(self):
        points = equilibrium_curves((0.0, 0.5, 1.0))
        self.assertEqual(len(points), 6)
        cacc_full = [p for p in points if p.tech == VehicleClass.CACC and p.penetration == 1.0][0]
        self.assertAlmostEqual(cacc_full.headway, 1.2, places=12)
        self.assertAlmostEqual(cacc_full.link_capped, 37.5, places=9)


class CompositionTests(SimpleTestCase):
    def test_tech_count_rounding(self):
        self.assertEqual(tech_count(40, 0.1), 4)
        self.assertEqual(tech_count(40, 0.25), 10)
        self.assertEqual(tech_count(40, 0.9), 36)
        self.assertEqual(tech_count(10, 0.25), 3)

    def test_pure_fleets(self):
        rng = make_rng(0)
        self.assertEqual(compose_queue(5, 0.0, "acc", rng), [VehicleClass.ORDINARY] * 5)
        self.assertEqual(compose_queue(5, 1.0, "cacc", rng), [VehicleClass.CACC] * 5)

    def test_same_seed_same_queue(self):
        self.assertEqual(
            compose_queue(40, 0.5, "cacc", make_rng(3, 1, 2)), compose_queue(40, 0.5, "cacc", make_rng(3, 1, 2))
        )

    def test_invalid_arguments(self):
        with self.assertRaises(ValidationError):
            compose_queue(0, 0.5, "acc", make_rng(0))
        with self.assertRaises(ValidationError):
            compose_queue(10, -0.1, "acc", make_rng(0))

    def test_interleaved(self):
        self.assertEqual(
            interleaved(4, "cacc"),
            [VehicleClass.ORDINARY, VehicleClass.CACC, VehicleClass.ORDINARY, VehicleClass.CACC],
        )

    @given(
        st.integers(min_value=1, max_value=60),
        st.floats(min_value=0.0, max_value=1.0),
        st.integers(min_value=0, max_value=2**32 - 1),
    )
    def test_tech_share(self, size, penetration, seed):
        composition = compose_queue(size, penetration, VehicleClass.ACC, make_rng(seed))
        self.assertEqual(len(composition), size)
        self.assertEqual(composition.count(VehicleClass.ACC), tech_count(size, penetration))
        self.assertNotIn(VehicleClass.CACC, composition)


class PresetTests(SimpleTestCase):
    def test_published_table(self):
        self.assertEqual(len(PUBLISHED_THROUGHPUT), 6)
        self.assertEqual(published_throughput("free_road", "gipps", 1.5), 26)
        self.assertEqual(published_throughput(Experiment.RED_LIGHT, CarFollowingModel.IIDM, 0.8), 19)
        self.assertIsNone(published_throughput("free_road", "gipps", 2.0))

    def test_red_light_experiment(self):
        scenario = experiment_scenario(Experiment.RED_LIGHT, a_max=2.5)
        self.assertEqual([signal.position for signal in scenario.signals], [0.0, 300.0])
        self.assertTrue(scenario.signals[1].is_red(59.0))
        self.assertFalse(scenario.signals[0].is_red(0.0))
        self.assertEqual(scenario.params_for(VehicleClass.ORDINARY).a_max, 2.5)
        self.assertEqual(scenario.window, 60.0)

    def test_free_road_experiment(self):
        scenario = experiment_scenario(Experiment.FREE_ROAD, horizon=30.0)
        self.assertEqual(len(scenario.signals), 1)
        self.assertEqual(scenario.window, 30.0)


class AccelerationTableTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.cells = {(cell.a_max, cell.experiment, cell.model): cell for cell in acceleration_sweep()}

    def test_baselines_match_published_throughput(self):
        self.assertEqual(len(self.cells), 18)
        for key, cell in self.cells.items():
            self.assertLessEqual(abs(cell.deviation), 1, msg=key)

    def test_red_light_never_beats_free_road(self):
        for a_max in defaults.A_MAX_LEVELS:
            for model in CarFollowingModel:
                self.assertLessEqual(
                    self.cells[(a_max, Experiment.RED_LIGHT, model)].simulated,
                    self.cells[(a_max, Experiment.FREE_ROAD, model)].simulated,
                    msg=(a_max, model),
                )

    def test_red_light_tie_at_high_acceleration(self):
        for model in CarFollowingModel:
            self.assertEqual(self.cells[(2.5, Experiment.RED_LIGHT, model)].simulated, 22, msg=model)

    def test_gipps_discharges_above_its_equilibrium_flow(self):
        for a_max in (1.5, 2.5):
            self.assertGreater(self.cells[(a_max, Experiment.FREE_ROAD, CarFollowingModel.GIPPS)].simulated, 24)


class SweepTests(SimpleTestCase):
    def test_run_count(self):
        self.assertEqual(run_count(0.0, 100), 1)
        self.assertEqual(run_count(1.0, 100), 1)
        self.assertEqual(run_count(0.5, 100), 100)

    def test_penetration_cases(self):
        cases = penetration_cases()
        self.assertEqual(len(cases), 2 * 3 * (1 + 2 * 6))
        baselines = [case for case in cases if case.penetration == 0.0]
        self.assertEqual(len(baselines), 6)
        self.assertTrue(all(case.tech == VehicleClass.ACC for case in baselines))

    def test_sweep_is_reproducible(self):
        cases = [
            SweepCase(Experiment.FREE_ROAD, CarFollowingModel.GIPPS, VehicleClass.CACC, 0.5),
            SweepCase(Experiment.FREE_ROAD, CarFollowingModel.GIPPS, VehicleClass.CACC, 1.0),
        ]
        first = run_sweep(cases, runs=3, seed=7, queue_size=30, window=30.0)
        second = run_sweep(cases, runs=3, seed=7, queue_size=30, window=30.0)
        self.assertEqual([len(result.outcomes) for result in first], [3, 1])
        self.assertEqual([r.throughputs for r in first], [r.throughputs for r in second])
        self.assertEqual([r.median for r in first], [r.median for r in second])
        self.assertEqual(first[0].errors, [])
        self.assertEqual(first[0].status, CaseStatus.OK)

    def test_queue_outlasts_the_window(self):
        cacc_per_minute = mixed_equilibrium_flow(1.0, CACC, ORDINARY)
        self.assertGreater(defaults.QUEUE_SIZE, cacc_per_minute * defaults.WINDOW / 60.0 + 10)

    def test_collided_runs_mark_the_case_failed(self):
        case = SweepCase(Experiment.RED_LIGHT, CarFollowingModel.HELLY, VehicleClass.ACC, 1.0)
        with self.assertLogs("carflow.apps.experiments.sweep", level="WARNING"):
            (result,) = run_sweep([case], runs=1)
        self.assertEqual(result.status, CaseStatus.FAILED)
        self.assertIsNone(result.median)
        self.assertIn("collision", result.errors[0].error.lower())


class PenetrationSweepTests(SimpleTestCase):
    """Mixed fleets at a_max = 1.5 with a short ensemble per mixed case"""

    penetrations = (0.0, 0.5, 1.0)

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.results = {}
        for result in run_sweep(penetration_cases(penetrations=cls.penetrations), runs=3, seed=11):
            case = result.case
            cls.results[(case.experiment, case.model, case.tech, case.penetration)] = result

    def curve(self, experiment, model, tech):
        baseline = self.results[(experiment, model, VehicleClass.ACC, 0.0)]
        return [baseline] + [self.results[(experiment, model, tech, penetration)] for penetration in (0.5, 1.0)]

    def finished(self, *keys):
        return all(self.results[key].status == CaseStatus.OK for key in keys)

    def test_medians_grow_with_penetration(self):
        for experiment in Experiment:
            for model in CarFollowingModel:
                for tech in TECH_CLASSES:
                    curve = self.curve(experiment, model, tech)
                    if any(result.status != CaseStatus.OK for result in curve):
                        continue
                    medians = [result.median for result in curve]
                    self.assertEqual(medians, sorted(medians), msg=(experiment, model, tech))

    def test_red_light_never_beats_free_road(self):
        for (experiment, model, tech, penetration), result in self.results.items():
            if experiment != Experiment.RED_LIGHT or penetration not in (0.0, 1.0):
                continue
            free = (Experiment.FREE_ROAD, model, tech, penetration)
            if not self.finished(free, (experiment, model, tech, penetration)):
                continue
            self.assertLessEqual(result.median, self.results[free].median, msg=free)

    @given(
        model=st.sampled_from(CarFollowingModel),
        tech=st.sampled_from(TECH_CLASSES),
        penetration=st.sampled_from((0.25, 0.5, 0.75)),
        run_index=st.integers(0, 1000),
    )
    @settings(max_examples=8, deadline=None)
    def test_red_light_never_beats_free_road_for_the_same_fleet(self, model, tech, penetration, run_index):
        outcomes = {}
        for experiment in Experiment:
            case = SweepCase(experiment, model, tech, penetration)
            task = (case, 0, run_index, 11, defaults.QUEUE_SIZE, False, defaults.WINDOW)
            outcomes[experiment] = simulate_run(task)
        red, free = outcomes[Experiment.RED_LIGHT], outcomes[Experiment.FREE_ROAD]
        if red.failed or free.failed:
            return
        self.assertLessEqual(red.throughput, free.throughput)

    def test_medians_stay_near_the_equilibrium_curve(self):
        for (experiment, model, tech, penetration), result in self.results.items():
            if result.status != CaseStatus.OK:
                continue
            ceiling = mixed_equilibrium_flow(penetration, preset_params(tech), ORDINARY) + 3
            self.assertLessEqual(result.median, ceiling, msg=(experiment, model, tech, penetration))

    def test_full_cacc_beats_full_acc_on_free_road(self):
        for model in CarFollowingModel:
            acc = self.results[(Experiment.FREE_ROAD, model, VehicleClass.ACC, 1.0)]
            cacc = self.results[(Experiment.FREE_ROAD, model, VehicleClass.CACC, 1.0)]
            self.assertGreater(cacc.median, acc.median, msg=model)
