"""
Car following acceleration laws.

Every law is a pure function of the follower's state, a view of its leader
and (for Gipps and Helly) the time step. A missing leader is replaced by a
free-road leader: far ahead, at v_max, not accelerating.

The optional ``params`` argument evaluates the law with a parameter set other
than the follower's own, e.g. a CACC vehicle that behaves as ACC.
"""

import math
from dataclasses import dataclass

from carflow.apps.core import defaults
from carflow.apps.core.exceptions import InvalidStateError, UnavoidableCollisionError
from carflow.apps.core.params import CarFollowingModel, VehicleClass

# a* below this is treated as zero (v at v_max)
FREE_ACCEL_EPS = 1e-12

# |v_l^2 - 2*gap*a_l| below this takes the CAH limit value
CAH_SINGULAR_EPS = 1e-9


@dataclass(frozen=True)
class LeaderView:
    """What a follower sees of the vehicle (or blocking obstacle) ahead.

    a_l is the leader's acceleration over the previous completed step.
    vehicle_class is None for virtual leaders.
    """

    x_l: float
    v_l: float
    a_l: float = 0.0
    l_l: float = defaults.VEHICLE_LENGTH
    vehicle_class: VehicleClass = None
    vehicle_id: int = None

    @classmethod
    def of(cls, vehicle):
        return cls(
            x_l=vehicle.x,
            v_l=vehicle.v,
            a_l=vehicle.a,
            l_l=vehicle.params.l,
            vehicle_class=vehicle.vehicle_class,
            vehicle_id=vehicle.id,
        )

    @classmethod
    def free_road(cls, follower, params=None):
        params = params or follower.params
        return cls(
            x_l=follower.x + defaults.FREE_ROAD_DISTANCE + params.l,
            v_l=params.v_max,
            a_l=0.0,
            l_l=params.l,
        )

    @classmethod
    def blocking(cls, stop_line, params):
        """Zero-speed obstacle whose tail sits g_min past the stop line"""
        return cls(x_l=stop_line + params.g_min + params.l, v_l=0.0, a_l=0.0, l_l=params.l)

    @property
    def is_virtual(self):
        return self.vehicle_class is None

    def gap(self, follower):
        return self.x_l - self.l_l - follower.x


def _resolve(state, leader, params):
    params = params or state.params
    if leader is None:
        leader = LeaderView.free_road(state, params)
    return params, leader


def gipps_accel(state, leader, dt, params=None):
    params, leader = _resolve(state, leader, params)
    gap = leader.gap(state)
    radicand = (
        (params.b * params.tau) ** 2
        + leader.v_l**2
        + 2.0 * params.b * (gap - params.g_min)
    )
    if radicand < 0.0:
        raise UnavoidableCollisionError(
            f"vehicle {state.id}: Gipps radicand {radicand:.4f} < 0 "
            f"(v={state.v:.3f}, v_l={leader.v_l:.3f}, gap={gap:.3f})"
        )
    safe = (-state.v - params.b * params.tau + math.sqrt(radicand)) / dt
    return min(params.a_max, (params.v_max - state.v) / dt, safe)


def iidm_desired_gap(state, leader, params=None):
    params, leader = _resolve(state, leader, params)
    dynamic = state.v * params.tau + state.v * (state.v - leader.v_l) / (
        2.0 * math.sqrt(params.a_max * params.b)
    )
    return params.g_min + max(0.0, dynamic)


def iidm_free_accel(v, params):
    return params.a_max * (1.0 - (v / params.v_max) ** params.delta2)


def iidm_accel(state, leader, params=None):
    params, leader = _resolve(state, leader, params)
    gap = leader.gap(state)
    if gap <= 0.0:
        raise InvalidStateError(f"vehicle {state.id}: IIDM needs a positive gap, got {gap:.4f}")
    ratio = iidm_desired_gap(state, leader, params) / gap
    if ratio > 1.0:
        return params.a_max * (1.0 - ratio**params.delta1)
    a_free = iidm_free_accel(state.v, params)
    if a_free < FREE_ACCEL_EPS:
        return a_free
    return a_free * (1.0 - ratio ** (params.delta1 * params.a_max / a_free))


def helly_accel(state, leader, dt, params=None):
    params, leader = _resolve(state, leader, params)
    gap = leader.gap(state)
    linear = params.alpha1 * (leader.v_l - state.v) + params.alpha2 * (
        gap - params.g_min - state.v * params.tau
    )
    return min(params.a_max, (params.v_max - state.v) / dt, linear)


def cah_accel(state, leader, params=None):
    params, leader = _resolve(state, leader, params)
    gap = leader.gap(state)
    if gap <= 0.0:
        raise InvalidStateError(f"vehicle {state.id}: CAH needs a positive gap, got {gap:.4f}")
    a_lead = min(leader.a_l, params.a_max)
    v, v_l = state.v, leader.v_l
    if v_l * (v - v_l) <= -2.0 * gap * a_lead:
        denominator = v_l**2 - 2.0 * gap * a_lead
        if abs(denominator) >= CAH_SINGULAR_EPS:
            return v * v * a_lead / denominator
    closing = 1.0 if v >= v_l else 0.0
    return a_lead - (v - v_l) ** 2 * closing / (2.0 * gap)


def cacc_accel(state, leader, params=None):
    params, leader = _resolve(state, leader, params)
    a_iidm = iidm_accel(state, leader, params)
    a_cah = cah_accel(state, leader, params)
    if a_cah <= a_iidm:
        return a_iidm
    return a_cah + params.b * math.tanh((a_iidm - a_cah) / params.b)


def model_accel(model, state, leader, dt, params=None):
    """Acceleration of the given base model (Gipps, IIDM or Helly)"""
    model = CarFollowingModel(model)
    if model == CarFollowingModel.GIPPS:
        return gipps_accel(state, leader, dt, params)
    if model == CarFollowingModel.IIDM:
        return iidm_accel(state, leader, params)
    return helly_accel(state, leader, dt, params)
