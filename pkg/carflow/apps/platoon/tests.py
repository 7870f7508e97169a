from dataclasses import replace

from django.test import SimpleTestCase

from carflow.apps.carfollow.laws import LeaderView
from carflow.apps.core.params import CarFollowingModel, VehicleClass, VehicleState, preset_params
from carflow.apps.core.scenario import LeaveEvent
from carflow.apps.experiments.composition import interleaved
from carflow.apps.experiments.presets import Experiment, experiment_scenario, release_signal
from carflow.apps.microsim.corridor import Corridor, init_queue
from carflow.apps.microsim.engine import build_corridor, run

from .registry import (
    Broadcast,
    MemberRole,
    PlatoonEventKind,
    PlatoonRegistry,
    UnknownMemberError,
    default_join_range,
)

CACC = preset_params(VehicleClass.CACC)


def cacc_queue(size, **registry_options):
    corridor = init_queue([VehicleClass.CACC] * size, signals=[release_signal()], detectors=[0.0])
    registry = PlatoonRegistry(**registry_options).attach(corridor)
    return corridor, registry


def moving_cacc(vehicle_id, x):
    return VehicleState(vehicle_id, x, 20.0, 0.0, VehicleClass.CACC, CACC)


class FormationTests(SimpleTestCase):
    def test_default_join_range(self):
        self.assertAlmostEqual(default_join_range(CACC), 28.5, places=12)

    def test_standing_queue_forms_one_platoon(self):
        corridor, registry = cacc_queue(5)
        self.assertEqual(registry.snapshot(), ((1, (2, 3, 4, 5)),))
        self.assertEqual(registry.role_of(1), MemberRole.LEADER)
        self.assertEqual(registry.role_of(3), MemberRole.FOLLOWER)
        self.assertEqual(corridor.vehicle(1).params.tau, 1.1)
        self.assertEqual(corridor.vehicle(3).params.tau, 0.8)
        self.assertEqual(corridor.vehicle(3).params.g_min, 3.0)
        self.assertEqual(
            [event.kind for event in registry.events], [PlatoonEventKind.JOIN] * 4
        )

    def test_max_size(self):
        corridor, registry = cacc_queue(5, max_size=3)
        self.assertEqual([platoon.size for platoon in registry.platoons], [3, 2])
        self.assertEqual(registry.check_invariants(), [])

    def test_disabled_segment(self):
        corridor, registry = cacc_queue(4, segments=((1000.0, 2000.0),))
        self.assertEqual([platoon.size for platoon in registry.platoons], [1, 1, 1, 1])
        self.assertFalse(registry.enabled_at(0.0))
        self.assertTrue(registry.enabled_at(1500.0))

    def test_cacc_behind_ordinary_stays_standalone(self):
        corridor = init_queue([VehicleClass.ORDINARY, VehicleClass.CACC])
        registry = PlatoonRegistry().attach(corridor)
        self.assertEqual(registry.role_of(2), MemberRole.STANDALONE_LEADER)
        self.assertIsNone(registry.role_of(1))
        params, cooperative = corridor.behaviour(corridor.vehicle(2), LeaderView.of(corridor.vehicle(1)))
        self.assertFalse(cooperative)
        self.assertEqual((params.tau, params.g_min), (1.1, 3.0))

    def test_join_when_closing_into_range(self):
        corridor = Corridor([moving_cacc(1, 100.0), moving_cacc(2, 55.0)])
        registry = PlatoonRegistry().attach(corridor)
        self.assertEqual(len(registry.platoons), 2)
        corridor.vehicles[1] = replace(corridor.vehicles[1], x=75.0)
        registry.scan_and_join()
        self.assertEqual(registry.snapshot(), ((1, (2,)),))
        self.assertEqual(corridor.vehicle(2).params.tau, 0.8)
        self.assertEqual(registry.events[-1].kind, PlatoonEventKind.JOIN)


class SplitLeaveTests(SimpleTestCase):
    def test_split_pair(self):
        corridor, registry = cacc_queue(2)
        registry.split(2)
        self.assertEqual(registry.snapshot(), ((1, ()), (2, ())))
        self.assertIs(corridor.vehicle(2).params, registry.saved[2])

    def test_split_in_the_middle(self):
        corridor, registry = cacc_queue(5)
        registry.split(3, detail="test")
        self.assertEqual(registry.snapshot(), ((1, (2,)), (3, (4, 5))))
        self.assertEqual(registry.role_of(3), MemberRole.LEADER)
        self.assertEqual(corridor.vehicle(3).params.tau, 1.1)
        self.assertEqual(registry.events[-1].kind, PlatoonEventKind.SPLIT)
        self.assertEqual(registry.check_invariants(), [])

    def test_split_at_leader_is_noop(self):
        corridor, registry = cacc_queue(3)
        registry.split(1)
        self.assertEqual(registry.snapshot(), ((1, (2, 3)),))

    def test_unknown_member(self):
        corridor, registry = cacc_queue(2)
        with self.assertRaises(UnknownMemberError):
            registry.split(99)
        with self.assertRaises(UnknownMemberError):
            registry.leave(99)
        with self.assertRaises(UnknownMemberError):
            registry.broadcast(Broadcast.GREEN_GO, 2)

    def test_leave_restores_parameters(self):
        corridor, registry = cacc_queue(5)
        original = registry.saved[3]
        registry.leave(3)
        self.assertIs(corridor.vehicle(3).params, original)
        self.assertIsNone(registry.platoon_of(3))
        self.assertIn(3, registry.detached)
        self.assertEqual(registry.snapshot(), ((1, (2,)), (4, (5,))))
        self.assertEqual(registry.events[-1].kind, PlatoonEventKind.LEAVE)

    def test_detached_vehicle_never_rejoins(self):
        corridor, registry = cacc_queue(3)
        registry.leave(3)
        registry.maintain()
        self.assertIsNone(registry.platoon_of(3))
        self.assertEqual(registry.snapshot(), ((1, (2,)),))

    def test_scripted_leave_in_a_run(self):
        scenario = experiment_scenario(
            Experiment.RED_LIGHT, penetration=1.0, tech="cacc", platooning=True,
            queue_size=10, horizon=10.0, leave_events=(LeaveEvent(5.0, 3),),
        )
        result = run(scenario)
        registry = result.corridor.platoons
        self.assertIsNone(registry.platoon_of(3))
        self.assertIn(PlatoonEventKind.LEAVE, [event.kind for event in result.platoon_events])
        self.assertEqual(registry.check_invariants(), [])


class BroadcastTests(SimpleTestCase):
    def test_green_go_starts_the_whole_platoon(self):
        corridor, registry = cacc_queue(4)
        corridor.step()
        self.assertTrue(all(vehicle.v > 0.0 for vehicle in corridor.vehicles))
        kinds = [(event.kind, event.detail) for event in registry.events]
        self.assertIn((PlatoonEventKind.BROADCAST, Broadcast.GREEN_GO.value), kinds)

    def test_without_broadcast_followers_wait(self):
        corridor, registry = cacc_queue(4, broadcast=False)
        corridor.step()
        self.assertGreater(corridor.vehicles[0].v, 0.0)
        self.assertEqual(corridor.vehicles[3].v, 0.0)

    def test_obstacle_brake_reaches_followers(self):
        corridor, registry = cacc_queue(3)
        snapshot = list(corridor.vehicles)
        leaders = [LeaderView.blocking(10.0, corridor.vehicle(1).params)] + [
            LeaderView.of(vehicle) for vehicle in snapshot[:-1]
        ]
        accels = registry.coordinate(corridor, snapshot, [-1.0, 0.5, 0.2], leaders, {})
        self.assertEqual(accels, [-1.0, -1.0, -1.0])
        registry.coordinate(corridor, snapshot, [-1.0, 0.5, 0.2], leaders, {})
        braking = [event for event in registry.events if event.detail == Broadcast.OBSTACLE_BRAKE.value]
        self.assertEqual(len(braking), 1)

    def test_real_leader_braking_is_not_broadcast(self):
        corridor, registry = cacc_queue(3)
        snapshot = list(corridor.vehicles)
        leaders = [LeaderView.of(snapshot[0])] + [LeaderView.of(vehicle) for vehicle in snapshot[:-1]]
        accels = registry.coordinate(corridor, snapshot, [-1.0, 0.5, 0.2], leaders, {})
        self.assertEqual(accels, [-1.0, 0.5, 0.2])


class PlatoonRunTests(SimpleTestCase):
    def test_invariants_hold_during_red_light_discharge(self):
        for penetration in (1.0, 0.5):
            scenario = experiment_scenario(
                Experiment.RED_LIGHT, tech="cacc", penetration=penetration, platooning=True, seed=5
            )
            corridor = build_corridor(scenario)
            registry = corridor.platoons
            for step in range(1200):
                corridor.step()
                if step % 20 == 0:
                    self.assertEqual(registry.check_invariants(), [], msg=f"t={corridor.t:.2f}")

    def test_interleaved_queue_matches_acc_queue(self):
        composition = interleaved(40, VehicleClass.CACC)
        acc = [VehicleClass.ACC if c == VehicleClass.CACC else c for c in composition]
        platooned = run(experiment_scenario(Experiment.RED_LIGHT, platooning=True), composition)
        plain = run(experiment_scenario(Experiment.RED_LIGHT), acc)
        self.assertTrue(all(platoon.size == 1 for platoon in platooned.corridor.platoons.platoons))
        self.assertEqual(platooned.throughput(), plain.throughput())
        self.assertEqual(
            [v.x for v in platooned.corridor.vehicles], [v.x for v in plain.corridor.vehicles]
        )

    def test_platooning_does_not_lower_red_light_throughput(self):
        model = CarFollowingModel.IIDM
        platooned = run(
            experiment_scenario(Experiment.RED_LIGHT, model=model, tech="cacc", penetration=1.0, platooning=True)
        )
        acc = run(experiment_scenario(Experiment.RED_LIGHT, model=model, tech="acc", penetration=1.0))
        self.assertGreaterEqual(platooned.throughput(), acc.throughput())
