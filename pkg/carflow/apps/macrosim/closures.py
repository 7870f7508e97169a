"""
Link accelerations induced by each car following law.

Every closure takes the speed V_i of each link, the speed its vehicles see
ahead and the gap to their leader.

The vehicle standing for link i sits at the link centre. Its leader is one
vehicle further downstream along the cumulative density, so in uniform
traffic the gap is 1/rho - l and the leader speed that of the link holding
the leader. The head of a jam finds no vehicle ahead and sees the free road.
Past a link whose outflow is masked the road continues as a standing jam.
"""

import numpy as np

from carflow.apps.carfollow.laws import FREE_ACCEL_EPS
from carflow.apps.core import defaults
from carflow.apps.core.params import CarFollowingModel


def link_leaders(rho, V, dx, params, blocked=None, rho_jam=None):
    """(gaps, leader speeds) seen from the centre of every link"""
    n = len(rho)
    dx = np.broadcast_to(np.asarray(dx, dtype=float), (n,))
    rho_jam = rho_jam if rho_jam is not None else 1.0 / (params.g_min + params.l)
    blocked = np.zeros(n, dtype=bool) if blocked is None else np.asarray(blocked, dtype=bool)

    density = np.maximum(rho, 0.0)
    mass = density * dx
    cumulative = np.concatenate(([0.0], np.cumsum(mass)))
    edges = np.concatenate(([0.0], np.cumsum(dx)))
    centre = edges[:-1] + 0.5 * dx
    target = cumulative[:-1] + 0.5 * mass + 1.0

    # link holding the leader, n when the road ahead holds less than one vehicle
    holder = np.minimum(np.searchsorted(cumulative[1:], target, side="left"), n)
    found = holder < n
    j = np.where(found, holder, 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_leader = np.where(found, edges[j] + (target - cumulative[j]) / np.where(found, density[j], 1.0), np.inf)
    V_leader = np.where(found, V[j], params.v_max)

    # nearest masked link at or downstream of each link
    walls = np.flatnonzero(blocked)
    if walls.size:
        slot = np.searchsorted(walls, np.arange(n), side="left")
        has_wall = slot < walls.size
        wall = walls[np.where(has_wall, slot, 0)]
        behind_wall = has_wall & (holder > wall)
        jam_leader = edges[wall + 1] + (target - cumulative[wall + 1]) / rho_jam
        x_leader = np.where(behind_wall, jam_leader, x_leader)
        V_leader = np.where(behind_wall, 0.0, V_leader)

    gaps = np.minimum(x_leader - centre - params.l, defaults.FREE_ROAD_DISTANCE)
    return gaps, V_leader


def gipps(V, V_next, gaps, dt, params):
    radicand = (params.b * params.tau) ** 2 + V_next**2 + 2.0 * params.b * (gaps - params.g_min)
    safe = (-V - params.b * params.tau + np.sqrt(np.maximum(radicand, 0.0))) / dt
    return np.minimum(np.minimum(params.a_max, (params.v_max - V) / dt), safe)


def iidm(V, V_next, gaps, dt, params):
    dynamic = V * params.tau + V * (V - V_next) / (2.0 * np.sqrt(params.a_max * params.b))
    ratio = (params.g_min + np.maximum(0.0, dynamic)) / gaps
    a_free = params.a_max * (1.0 - (V / params.v_max) ** params.delta2)
    congested = params.a_max * (1.0 - ratio**params.delta1)
    moving = a_free >= FREE_ACCEL_EPS
    exponent = np.where(moving, params.delta1 * params.a_max / np.where(moving, a_free, 1.0), 1.0)
    with np.errstate(over="ignore", invalid="ignore"):
        free = np.where(moving, a_free * (1.0 - ratio**exponent), a_free)
    return np.where(ratio >= 1.0, congested, free)


def helly(V, V_next, gaps, dt, params):
    linear = params.alpha1 * (V_next - V) + params.alpha2 * (gaps - params.g_min - V * params.tau)
    return np.minimum(np.minimum(params.a_max, (params.v_max - V) / dt), linear)


CLOSURES = {
    CarFollowingModel.GIPPS.value: gipps,
    CarFollowingModel.IIDM.value: iidm,
    CarFollowingModel.HELLY.value: helly,
}


def link_accel(model, rho, V, dt, params, blocked=None, rho_jam=None, dx=defaults.MACRO_LINK_LENGTH):
    closure = CLOSURES[CarFollowingModel(model).value]
    gaps, V_leader = link_leaders(rho, V, dx, params, blocked, rho_jam)
    return closure(V, V_leader, gaps, dt, params)
