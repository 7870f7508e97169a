"""
Single-lane corridor stepping engine.

All accelerations of a step are computed from the previous step's snapshot,
then every vehicle is advanced:

    v(t+dt) = max(0, v(t) + a(t) dt)
    x(t+dt) = x(t) + (v(t) + v(t+dt)) dt / 2
"""

import logging
from dataclasses import replace
from functools import lru_cache

from django.core.exceptions import ValidationError

from carflow.apps.carfollow.laws import LeaderView, cacc_accel, model_accel
from carflow.apps.core import defaults
from carflow.apps.core.exceptions import CollisionError
from carflow.apps.core.params import CarFollowingModel, VehicleClass, VehicleState, preset_params

from .detectors import Detector
from .signals import Signal

logger = logging.getLogger(__name__)

# Tolerated negative gap from floating point round-off
GAP_TOLERANCE = 1e-9


@lru_cache(maxsize=None)
def acc_equivalent(params):
    """A CACC vehicle without a CACC leader drives with ACC tau and g_min"""
    return params.with_headway(VehicleClass.ACC)


class Corridor:
    """Vehicles on one lane, ordered front to back, plus signals and detectors.

    ``platoons`` is an optional platoon registry; when set it decides which
    CACC vehicles drive cooperatively and may adjust accelerations.
    """

    def __init__(
        self,
        vehicles,
        signals=(),
        detectors=(),
        model=CarFollowingModel.GIPPS,
        dt=defaults.DT,
        t=0.0,
        platoons=None,
    ):
        if dt <= 0:
            raise ValidationError(f"dt must be positive, got {dt}", code="dt")
        self.vehicles = list(vehicles)
        self.signals = [signal if isinstance(signal, Signal) else Signal(signal) for signal in signals]
        self.detectors = [
            detector if isinstance(detector, Detector) else Detector(detector) for detector in detectors
        ]
        self.model = CarFollowingModel(model)
        self.dt = dt
        self.t = t
        self.steps = 0
        self.platoons = platoons
        self._t0 = t
        for front, rear in zip(self.vehicles, self.vehicles[1:]):
            if rear.x >= front.x:
                raise ValidationError(
                    f"vehicle {rear.id} is not behind vehicle {front.id}", code="vehicle_order"
                )

    def __repr__(self):
        return f"Corridor(t={self.t:.2f}, vehicles={len(self.vehicles)}, model={self.model.value})"

    def __len__(self):
        return len(self.vehicles)

    def index_of(self, vehicle_id):
        for index, vehicle in enumerate(self.vehicles):
            if vehicle.id == vehicle_id:
                return index
        raise KeyError(vehicle_id)

    def vehicle(self, vehicle_id):
        return self.vehicles[self.index_of(vehicle_id)]

    def set_params(self, vehicle_id, params):
        index = self.index_of(vehicle_id)
        self.vehicles[index] = replace(self.vehicles[index], params=params)

    def gaps(self):
        return [rear.gap_to(front) for front, rear in zip(self.vehicles, self.vehicles[1:])]

    @property
    def records(self):
        return [record for detector in self.detectors for record in detector.records]

    def behaviour(self, vehicle, real_leader):
        """(params, cooperative) the vehicle drives with behind real_leader"""
        if vehicle.vehicle_class != VehicleClass.CACC:
            return vehicle.params, False
        if self.platoons is not None:
            return vehicle.params, self.platoons.is_follower(vehicle.id)
        if real_leader is not None and real_leader.vehicle_class == VehicleClass.CACC:
            return vehicle.params, True
        return acc_equivalent(vehicle.params), False

    def signal_leader(self, vehicle, params):
        """Nearest blocking vehicle of a red signal ahead, or None"""
        nearest = None
        for signal in self.signals:
            leader = signal.leader_for(self.t, vehicle, params)
            if leader is not None and (nearest is None or leader.x_l < nearest.x_l):
                nearest = leader
        return nearest

    def effective_leader(self, index, snapshot=None):
        """(leader view, params, cooperative) for the vehicle at index"""
        snapshot = snapshot or self.vehicles
        vehicle = snapshot[index]
        real = LeaderView.of(snapshot[index - 1]) if index > 0 else None
        params, cooperative = self.behaviour(vehicle, real)
        virtual = self.signal_leader(vehicle, params)
        if virtual is not None and (real is None or virtual.gap(vehicle) < real.gap(vehicle)):
            return virtual, params, False
        return real, params, cooperative

    def acceleration(self, index, snapshot=None):
        snapshot = snapshot or self.vehicles
        leader, params, cooperative = self.effective_leader(index, snapshot)
        vehicle = snapshot[index]
        if cooperative:
            return cacc_accel(vehicle, leader, params), leader
        return model_accel(self.model, vehicle, leader, self.dt, params), leader

    def step(self):
        """Advance the corridor by one time step"""
        dt = self.dt
        switched = {}
        for signal in self.signals:
            change = signal.update(self.t, self.vehicles)
            if change:
                switched[signal] = change

        snapshot = list(self.vehicles)
        accels = []
        leaders = []
        for index in range(len(snapshot)):
            a, leader = self.acceleration(index, snapshot)
            accels.append(a)
            leaders.append(leader)
        if self.platoons is not None:
            accels = self.platoons.coordinate(self, snapshot, accels, leaders, switched)

        advanced = []
        for vehicle, a in zip(snapshot, accels):
            v_new = max(0.0, vehicle.v + a * dt)
            x_new = vehicle.x + 0.5 * (vehicle.v + v_new) * dt
            advanced.append(replace(vehicle, x=x_new, v=v_new, a=(v_new - vehicle.v) / dt))
        self._check_collisions(advanced)

        t_old = self.t
        self.vehicles = advanced
        self.steps += 1
        self.t = self._t0 + self.steps * dt

        if self.platoons is not None:
            self.platoons.maintain(self)
        self._detect(snapshot, advanced, t_old)
        return self

    def run_until(self, horizon):
        n_steps = int(round((horizon - self.t) / self.dt))
        for _ in range(max(0, n_steps)):
            self.step()
        return self

    def _check_collisions(self, advanced):
        for front, rear in zip(advanced, advanced[1:]):
            gap = rear.gap_to(front)
            if gap < -GAP_TOLERANCE:
                dump = [(v.id, v.x, v.v, v.a) for v in advanced]
                logger.error(
                    f"Collision at t={self.t + self.dt:.2f}s between vehicle {rear.id} "
                    f"and leader {front.id}, gap {gap:.4f} m"
                )
                raise CollisionError(rear.id, front.id, self.t + self.dt, gap, dump)

    def _detect(self, before, after, t_old):
        for detector in self.detectors:
            crossings = []
            for index, (old, new) in enumerate(zip(before, after)):
                time = detector.crossing_time(old.x, new.x, t_old, self.dt)
                if time is None:
                    continue
                fraction = (time - t_old) / self.dt
                gap = new.gap_to(after[index - 1]) if index > 0 else None
                crossings.append((time, new.id, old.v + fraction * (new.v - old.v), new.a, gap))
            if crossings:
                detector.observe(crossings)


def init_queue(composition, stop_bar=0.0, params_for=preset_params, **corridor_options):
    """Standing queue at minimal gaps with the first front bumper on the stop bar.

    The gap ahead of each vehicle is its own class's minimal gap.
    """
    if not composition:
        raise ValidationError("queue composition must not be empty", code="empty_queue")
    vehicles = []
    x = stop_bar
    for index, vehicle_class in enumerate(composition):
        vehicle_class = VehicleClass(vehicle_class)
        params = params_for(vehicle_class)
        if vehicles:
            x -= vehicles[-1].params.l + params.g_min
        vehicles.append(
            VehicleState(
                id=index + 1,
                x=x,
                v=0.0,
                a=0.0,
                vehicle_class=vehicle_class,
                params=params,
            )
        )
    return Corridor(vehicles, **corridor_options)
