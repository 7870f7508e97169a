"""
Scenario driven micro runs
"""

import logging
from dataclasses import dataclass, field

from carflow.apps.core.params import VehicleClass
from carflow.apps.core.rng import make_rng
from carflow.apps.experiments.composition import compose_queue
from carflow.apps.platoon.registry import PlatoonRegistry

from .corridor import init_queue
from .detectors import throughput

logger = logging.getLogger(__name__)

__all__ = [
    "SimulationResult",
    "TrajectorySample",
    "build_corridor",
    "queue_composition",
    "run",
    "stopped_queue_tail",
    "throughput",
]


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    vehicle_id: int
    x: float
    v: float
    a: float


@dataclass
class SimulationResult:
    scenario: object
    composition: list
    corridor: object
    records: list = field(default_factory=list)
    trajectory: list = field(default_factory=list)
    platoon_events: list = field(default_factory=list)

    def throughput(self, window=None, position=None):
        """Crossings of one detector, the first one unless `position` names another"""
        if position is None:
            if not self.scenario.detectors:
                return 0
            position = self.scenario.detectors[0]
        records = [record for record in self.records if record.position == position]
        return throughput(records, window or self.scenario.window)


def queue_composition(scenario):
    """Explicit composition, or a random one drawn from the scenario seed"""
    queue = scenario.queue
    if queue.composition is not None:
        return list(queue.composition)
    return compose_queue(queue.size, queue.penetration, queue.tech, make_rng(scenario.seed))


def build_corridor(scenario, composition=None):
    composition = list(composition) if composition is not None else queue_composition(scenario)
    corridor = init_queue(
        composition,
        stop_bar=scenario.queue.stop_bar,
        params_for=scenario.params_for,
        signals=scenario.signals,
        detectors=scenario.detectors,
        model=scenario.model,
        dt=scenario.dt,
    )
    if scenario.platooning.enabled:
        spec = scenario.platooning
        PlatoonRegistry(
            segments=spec.segments,
            join_range=spec.range,
            max_size=spec.max_size,
            separation_factor=spec.separation_factor,
            broadcast=spec.broadcast,
        ).attach(corridor)
    return corridor


def _sample(corridor, limit):
    vehicles = corridor.vehicles if limit is None else corridor.vehicles[:limit]
    return [TrajectorySample(corridor.t, vehicle.id, vehicle.x, vehicle.v, vehicle.a) for vehicle in vehicles]


def _leave(corridor, vehicle_id):
    registry = corridor.platoons
    if registry is None or registry.platoon_of(vehicle_id) is None:
        logger.warning(f"t={corridor.t:.2f}s: vehicle {vehicle_id} is not in a platoon, leave ignored")
        return
    registry.leave(vehicle_id)


def run(scenario, composition=None):
    """Simulate the scenario up to its horizon.

    Collisions propagate as CollisionError.
    """
    corridor = build_corridor(scenario, composition)
    composition = [vehicle.vehicle_class for vehicle in corridor.vehicles]
    n_steps = int(round(scenario.horizon / scenario.dt))
    pending = list(scenario.leave_events)
    trajectory = _sample(corridor, scenario.vehicles)
    logger.debug(
        f"Micro run: model={scenario.model.value}, vehicles={len(corridor)}, "
        f"tech={sum(1 for c in composition if c != VehicleClass.ORDINARY)}, steps={n_steps}"
    )
    for step in range(1, n_steps + 1):
        while pending and pending[0].time <= corridor.t + 1e-9:
            _leave(corridor, pending.pop(0).vehicle)
        corridor.step()
        if step % scenario.stride == 0:
            trajectory.extend(_sample(corridor, scenario.vehicles))
    result = SimulationResult(
        scenario=scenario,
        composition=composition,
        corridor=corridor,
        records=corridor.records,
        trajectory=trajectory,
        platoon_events=list(corridor.platoons.events) if corridor.platoons is not None else [],
    )
    logger.debug(f"Micro run finished at t={corridor.t:.2f}s, throughput {result.throughput()}")
    return result


def stopped_queue_tail(corridor, position, stopped_speed=0.5):
    """Rear bumper of the last vehicle in the stopped queue at `position`, or None"""
    queue = [vehicle for vehicle in corridor.vehicles if vehicle.x <= position + 1e-6]
    if not queue or queue[0].v >= stopped_speed:
        return None
    tail = queue[0]
    for vehicle in queue[1:]:
        if vehicle.v >= stopped_speed or vehicle.gap_to(tail) > 2.0 * vehicle.params.g_min:
            break
        tail = vehicle
    return tail.rear
