"""
Platoon lifecycle: identification, parameter adjustment and maintenance.

State machine, per CACC vehicle:

    standalone leader --(leader comes into range of a CACC vehicle ahead)--> follower
    leader            --(same, whole platoon merges into the one ahead)-->   follower
    follower          --(split: signal separation, gap too large)-->          leader of the rear part
    any member        --(scripted leave)-->                                   detached (never rejoins)

Leaders drive with ACC tau and g_min under their base car following model.
Followers drive with CACC tau and g_min under the CACC law and receive the
leader's broadcasts (green-go, obstacle-brake) in the same step.
"""

import logging
from dataclasses import dataclass, field

from django.db import models

from carflow.apps.core import defaults
from carflow.apps.core.exceptions import CarflowError
from carflow.apps.core.params import VehicleClass

logger = logging.getLogger(__name__)


class MemberRole(models.TextChoices):
    STANDALONE_LEADER = "standalone_leader", "Standalone leader"
    LEADER = "leader", "Leader"
    FOLLOWER = "follower", "Follower"


class PlatoonEventKind(models.TextChoices):
    JOIN = "join", "Join"
    SPLIT = "split", "Split"
    LEAVE = "leave", "Leave"
    BROADCAST = "broadcast", "Broadcast"


class Broadcast(models.TextChoices):
    GREEN_GO = "green_go", "Green-go"
    OBSTACLE_BRAKE = "obstacle_brake", "Obstacle-brake"


class UnknownMemberError(CarflowError):
    """The vehicle id is not a member of any platoon"""


@dataclass
class Platoon:
    leader_id: int
    followers: list = field(default_factory=list)

    @property
    def members(self):
        return [self.leader_id, *self.followers]

    @property
    def size(self):
        return 1 + len(self.followers)

    def __contains__(self, vehicle_id):
        return vehicle_id == self.leader_id or vehicle_id in self.followers


@dataclass(frozen=True)
class PlatoonEvent:
    time: float
    kind: PlatoonEventKind
    leader_id: int
    member_id: int
    size: int
    detail: str = ""


def default_join_range(cacc_params):
    return defaults.JOIN_RANGE_FACTOR * (cacc_params.g_min + cacc_params.v_max * cacc_params.tau)


class PlatoonRegistry:
    """Mapping of CACC vehicles to platoons on one corridor.

    segments lists (start, end) positions where platoons may form; empty
    means everywhere. max_size of None means unlimited.
    """

    def __init__(
        self,
        segments=(),
        join_range=None,
        max_size=None,
        separation_factor=defaults.SEPARATION_FACTOR,
        broadcast=True,
    ):
        self.segments = tuple(segments)
        self.join_range = join_range
        self.max_size = max_size
        self.separation_factor = separation_factor
        self.broadcast_enabled = broadcast
        self.platoons = []
        self.saved = {}
        self.detached = set()
        self.intents = {}
        self.events = []
        self.corridor = None
        self._braking = set()

    def __repr__(self):
        sizes = [platoon.size for platoon in self.platoons]
        return f"PlatoonRegistry(platoons={len(sizes)}, sizes={sizes})"

    # Membership queries

    def platoon_of(self, vehicle_id):
        for platoon in self.platoons:
            if vehicle_id in platoon:
                return platoon
        return None

    def role_of(self, vehicle_id):
        platoon = self.platoon_of(vehicle_id)
        if platoon is None:
            return None
        if vehicle_id != platoon.leader_id:
            return MemberRole.FOLLOWER
        return MemberRole.LEADER if platoon.followers else MemberRole.STANDALONE_LEADER

    def is_follower(self, vehicle_id):
        return self.role_of(vehicle_id) == MemberRole.FOLLOWER

    def enabled_at(self, x):
        if not self.segments:
            return True
        return any(start <= x <= end for start, end in self.segments)

    def snapshot(self):
        """Read-only view: tuple of (leader id, follower ids) in lane order"""
        return tuple((platoon.leader_id, tuple(platoon.followers)) for platoon in self.platoons)

    # Parameter adjustment

    def leader_params(self, vehicle_id):
        return self.saved[vehicle_id]

    def follower_params(self, vehicle_id):
        return self.saved[vehicle_id].with_headway(VehicleClass.CACC)

    def _apply(self, vehicle_id, params):
        if self.corridor is not None:
            self.corridor.set_params(vehicle_id, params)

    def _make_leader(self, vehicle_id):
        self._apply(vehicle_id, self.saved[vehicle_id])

    def _make_follower(self, vehicle_id):
        self._apply(vehicle_id, self.follower_params(vehicle_id))

    def _log(self, kind, leader_id, member_id, size, detail=""):
        t = self.corridor.t if self.corridor is not None else 0.0
        self.events.append(PlatoonEvent(t, kind, leader_id, member_id, size, detail))
        logger.debug(f"t={t:.2f}s {kind.value}: leader {leader_id}, member {member_id}, size {size} {detail}")

    # Lifecycle

    def attach(self, corridor):
        """Bind to a corridor and adopt its CACC vehicles as standalone leaders"""
        self.corridor = corridor
        corridor.platoons = self
        if self.join_range is None:
            cacc = next(
                (v.params for v in corridor.vehicles if v.vehicle_class == VehicleClass.CACC), None
            )
            if cacc is not None:
                self.join_range = default_join_range(cacc.with_headway(VehicleClass.CACC))
        self.adopt(corridor)
        self.scan_and_join(corridor)
        return self

    def adopt(self, corridor):
        for vehicle in corridor.vehicles:
            if vehicle.vehicle_class != VehicleClass.CACC or vehicle.id in self.detached:
                continue
            if vehicle.id in self.saved:
                continue
            self.saved[vehicle.id] = vehicle.params.with_headway(VehicleClass.ACC)
            self._apply(vehicle.id, self.saved[vehicle.id])
            self.platoons.append(Platoon(vehicle.id))
        self._sort(corridor)

    def _sort(self, corridor):
        order = {vehicle.id: index for index, vehicle in enumerate(corridor.vehicles)}
        self.platoons.sort(key=lambda platoon: order[platoon.leader_id])

    def scan_and_join(self, corridor=None, join_range=None):
        """Merge every platoon whose leader is within range of a CACC vehicle ahead"""
        corridor = corridor or self.corridor
        join_range = join_range if join_range is not None else self.join_range
        if join_range is None:
            return self
        order = {vehicle.id: index for index, vehicle in enumerate(corridor.vehicles)}
        for platoon in list(self.platoons):
            index = order[platoon.leader_id]
            if index == 0:
                continue
            leader = corridor.vehicles[index]
            ahead = corridor.vehicles[index - 1]
            front = self.platoon_of(ahead.id)
            if front is None or front is platoon:
                continue
            if not self.enabled_at(leader.x):
                continue
            gap = leader.gap_to(ahead)
            if gap > join_range or gap > self.separation_gap(leader, self.follower_params(leader.id)):
                continue
            if self.max_size is not None and front.size + platoon.size > self.max_size:
                continue
            self._merge(front, platoon)
        return self

    def _merge(self, front, rear):
        self._make_follower(rear.leader_id)
        front.followers.extend([rear.leader_id, *rear.followers])
        self.platoons.remove(rear)
        self.intents.pop(rear.leader_id, None)
        self._log(PlatoonEventKind.JOIN, front.leader_id, rear.leader_id, front.size)

    def split(self, member_id, detail=""):
        """Split the platoon ahead of member_id; the member leads the rear part"""
        platoon = self.platoon_of(member_id)
        if platoon is None:
            raise UnknownMemberError(f"vehicle {member_id} is not in a platoon")
        if member_id == platoon.leader_id:
            return self
        index = platoon.followers.index(member_id)
        rear = Platoon(member_id, platoon.followers[index + 1:])
        platoon.followers = platoon.followers[:index]
        self.platoons.insert(self.platoons.index(platoon) + 1, rear)
        self.intents.pop(member_id, None)
        self._make_leader(member_id)
        self._log(PlatoonEventKind.SPLIT, platoon.leader_id, member_id, platoon.size, detail)
        return self

    def leave(self, member_id):
        """Scripted route change: the member leaves and never rejoins"""
        platoon = self.platoon_of(member_id)
        if platoon is None:
            raise UnknownMemberError(f"vehicle {member_id} is not in a platoon")
        self.split(member_id, detail="route change")
        platoon = self.platoon_of(member_id)
        if platoon.followers:
            self.split(platoon.followers[0], detail="route change")
        self.platoons.remove(self.platoon_of(member_id))
        self.detached.add(member_id)
        self._make_leader(member_id)
        self._log(PlatoonEventKind.LEAVE, member_id, member_id, 1)
        return self

    def separation_gap(self, vehicle, params):
        """Gap above which a follower is considered separated"""
        return self.separation_factor * (params.g_min + vehicle.v * params.tau)

    def maintain(self, corridor=None):
        """Per-step maintenance: adopt, split separated members, join"""
        corridor = corridor or self.corridor
        t = corridor.t
        self.adopt(corridor)
        by_id = {vehicle.id: vehicle for vehicle in corridor.vehicles}
        for platoon in list(self.platoons):
            members = platoon.members
            for front_id, rear_id in zip(members, members[1:]):
                front, rear = by_id[front_id], by_id[rear_id]
                if any(signal.separates(t, front, rear) for signal in corridor.signals):
                    self.split(rear_id, detail="signal separation")
                    break
                if rear.gap_to(front) > self.separation_gap(rear, rear.params):
                    self.split(rear_id, detail="gap separation")
                    break
        self._sort(corridor)
        self.scan_and_join(corridor)
        return self

    # Broadcast

    def broadcast(self, event, leader_id):
        """Deliver a leader event to every follower of its platoon in this step"""
        event = Broadcast(event)
        platoon = self.platoon_of(leader_id)
        if platoon is None or platoon.leader_id != leader_id:
            raise UnknownMemberError(f"vehicle {leader_id} is not a platoon leader")
        for follower_id in platoon.followers:
            self.intents[follower_id] = event
        if platoon.followers:
            self._log(PlatoonEventKind.BROADCAST, leader_id, leader_id, platoon.size, event.value)
        return [(follower_id, event) for follower_id in platoon.followers]

    def coordinate(self, corridor, snapshot, accels, leaders, switched):
        """Apply broadcast intents to the accelerations of one step"""
        if not self.broadcast_enabled:
            return accels
        accels = list(accels)
        index = {vehicle.id: position for position, vehicle in enumerate(snapshot)}
        green = [signal for signal, change in switched.items() if change == "green"]
        for platoon in self.platoons:
            if not platoon.followers:
                continue
            lead_index = index[platoon.leader_id]
            leader = snapshot[lead_index]
            a_lead = accels[lead_index]
            if any(0.0 <= signal.position - leader.x <= self.join_range for signal in green):
                self.broadcast(Broadcast.GREEN_GO, platoon.leader_id)

            view = leaders[lead_index]
            braking = view is not None and view.is_virtual and a_lead < 0.0
            if braking and platoon.leader_id not in self._braking:
                self.broadcast(Broadcast.OBSTACLE_BRAKE, platoon.leader_id)
                self._braking.add(platoon.leader_id)
            elif not braking:
                self._braking.discard(platoon.leader_id)

            for follower_id in platoon.followers:
                position = index[follower_id]
                if braking:
                    accels[position] = min(accels[position], a_lead)
                if self.intents.get(follower_id) != Broadcast.GREEN_GO:
                    continue
                follower, ahead = snapshot[position], snapshot[position - 1]
                params = follower.params
                ready = (
                    a_lead > 0.0
                    and follower.v <= ahead.v
                    and follower.gap_to(ahead) >= params.g_min + follower.v * params.tau - 1e-9
                )
                if ready:
                    accels[position] = max(accels[position], min(a_lead, params.a_max))
                else:
                    del self.intents[follower_id]
        return accels

    # Invariants

    def check_invariants(self, corridor=None):
        """List of violated invariants (empty when consistent)"""
        corridor = corridor or self.corridor
        problems = []
        order = {vehicle.id: index for index, vehicle in enumerate(corridor.vehicles)}
        seen = set()
        for platoon in self.platoons:
            members = platoon.members
            if seen.intersection(members):
                problems.append(f"vehicle in two platoons: {sorted(seen.intersection(members))}")
            seen.update(members)
            positions = [order[member] for member in members]
            if positions != list(range(positions[0], positions[0] + len(positions))):
                problems.append(f"platoon led by {platoon.leader_id} is not contiguous: {members}")
            for member in platoon.followers:
                vehicle = corridor.vehicles[order[member]]
                ahead = corridor.vehicles[order[member] - 1]
                if ahead.id not in platoon or ahead.vehicle_class != VehicleClass.CACC:
                    problems.append(f"follower {member} has no CACC platoon member ahead")
                if vehicle.vehicle_class != VehicleClass.CACC:
                    problems.append(f"follower {member} is not CACC")
        return problems
