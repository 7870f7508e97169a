"""
Explicit upwind solver for the macroscopic density/speed model.

Density follows the conservation law

    rho_i(t+dt) = rho_i(t) + dt/dx_i (f_{i-1}(t) - f_i(t)),  f_i = rho_i V_i

and speed the discretized advection equation

    V_i(t+dt) = V_i(t) + (a_i(t) - V_i(t) (V_i(t) - V_{i-1}(t)) / dx_i) dt

with V_0 = V_1, V_{N+1} = v_max and a_i from the car following closure.
"""

import logging

import numpy as np
from django.core.exceptions import ValidationError

from carflow.apps.core import defaults
from carflow.apps.core.exceptions import StabilityError
from carflow.apps.core.params import CarFollowingModel, VehicleClass, preset_params
from carflow.apps.core.scenario import MacroSpec, SignalColor, SignalSpec

from .closures import link_accel
from .state import ContourGrid, MacroState, OutflowMask

logger = logging.getLogger(__name__)

# Speed below which a jammed link counts as stopped
STOPPED_SPEED = 0.5  # m/s


def check_cfl(state, dt, params):
    """Raise StabilityError unless dt * v_max <= min dx"""
    dx_min = float(np.min(state.dx))
    if dt * params.v_max > dx_min:
        raise StabilityError(f"dt * v_max = {dt * params.v_max:g} m > min dx = {dx_min:g} m")


def link_fluxes(state, dt):
    """Fluxes f_0..f_N across the link boundaries.

    f_0 is the inflow, f_i the outflow of link i. Masked links do not discharge
    and no flux may overfill the receiving link beyond jam density.
    """
    flow = np.where(state.blocked(), 0.0, state.rho * state.V)
    fluxes = np.concatenate(([state.inflow], flow))
    storage = np.maximum(state.rho_jam - state.rho, 0.0) * state.dx / dt
    fluxes[:-1] = np.minimum(fluxes[:-1], storage)
    return fluxes


def macro_step(state, model, params, dt=defaults.DT):
    """Advance a MacroState by one time step in place"""
    fluxes = link_fluxes(state, dt)
    a = link_accel(model, state.rho, state.V, dt, params, state.blocked(), state.rho_jam, state.dx)
    upstream = np.concatenate(([state.V[0]], state.V[:-1]))
    V = state.V + (a - state.V * (state.V - upstream) / state.dx) * dt

    state.rho = state.rho + dt / state.dx * (fluxes[:-1] - fluxes[1:])
    state.V = np.clip(V, 0.0, params.v_max)
    state.inflow_total += fluxes[0] * dt
    state.outflow_total += fluxes[-1] * dt
    state.t += dt
    return state


def init_red_light_scenario(a_max=None, spec=None, release=None, red=None, params=None):
    """Standing jam upstream of the first signal and a red light downstream.

    Links 1..signal_link-1 hold jam density, everything else is empty and
    every speed is zero. The first signal masks the outflow of link
    signal_link-1 while red; the second masks link red_link.
    """
    spec = spec or MacroSpec()
    params = params or preset_params(VehicleClass.ORDINARY, a_max=a_max)
    release = release or SignalSpec(0.0, ((0.0, SignalColor.GREEN),))
    red = red or SignalSpec(
        (spec.red_link - spec.signal_link) * spec.link_length, ((0.0, SignalColor.RED),)
    )
    rho_jam = 1.0 / (params.g_min + params.l)
    rho = np.zeros(spec.links)
    rho[: spec.signal_link - 1] = rho_jam
    masks = []
    if spec.signal_link > 1:
        masks.append(OutflowMask(spec.signal_link - 1, release))
    masks.append(OutflowMask(spec.red_link, red))
    return MacroState(
        dx=np.full(spec.links, float(spec.link_length)),
        rho=rho,
        V=np.zeros(spec.links),
        rho_jam=rho_jam,
        inflow=spec.inflow,
        masks=tuple(masks),
        origin_link=spec.signal_link,
    )


def run_macro(state, model=CarFollowingModel.IIDM, params=None, horizon=defaults.HORIZON, dt=defaults.DT, stride=1):
    """Step the state to the horizon and sample contours every `stride` steps.

    Returns the ContourGrid; the state is advanced in place.
    """
    params = params or preset_params(VehicleClass.ORDINARY)
    check_cfl(state, dt, params)
    if stride < 1:
        raise ValidationError(f"sample stride must be at least 1, got {stride}", code="macro_stride")
    n_steps = int(round(horizon / dt))
    times, flows, speeds, densities = [], [], [], []

    def sample():
        times.append(state.t)
        flows.append(np.where(state.blocked(), 0.0, state.flow))
        speeds.append(state.V.copy())
        densities.append(state.rho.copy())

    logger.debug(
        f"Macro run: model={CarFollowingModel(model).value}, links={len(state)}, "
        f"steps={n_steps}, vehicles={state.vehicles:.4f}"
    )
    if n_steps == 0:
        sample()
    for step in range(n_steps):
        if step % stride == 0:
            sample()
        macro_step(state, model, params, dt)
    logger.debug(
        f"Macro run finished at t={state.t:.2f}s, conservation error {state.relative_conservation_error():.3e}"
    )
    return ContourGrid(
        times=np.array(times),
        positions=state.positions(),
        flow=np.array(flows),
        speed=np.array(speeds),
        density=np.array(densities),
    )


def queue_tail(state, threshold=0.5):
    """Upstream edge of the stopped jam ending at the furthest masked link, or None.

    A link belongs to the jam when its density is at least threshold * rho_jam
    and its speed is below STOPPED_SPEED.
    """
    blocked = np.flatnonzero(state.blocked())
    if blocked.size == 0:
        return None
    positions = state.positions()
    jammed = (state.rho >= threshold * state.rho_jam) & (state.V < STOPPED_SPEED)
    index = int(blocked[-1])
    if not jammed[index]:
        return None
    while index > 0 and jammed[index - 1]:
        index -= 1
    return float(positions[index])


def equilibrium_state(links, params, link_length=defaults.MACRO_LINK_LENGTH):
    """Uniform flow at v_max with equilibrium gaps and matching inflow"""
    rho = 1.0 / (params.g_min + params.v_max * params.tau + params.l)
    return MacroState(
        dx=np.full(links, float(link_length)),
        rho=np.full(links, rho),
        V=np.full(links, params.v_max),
        rho_jam=1.0 / (params.g_min + params.l),
        inflow=rho * params.v_max,
    )
