"""
Equilibrium headway and flow of pure and mixed fleets
"""

from dataclasses import dataclass

from django.core.exceptions import ValidationError

from carflow.apps.core import defaults
from carflow.apps.core.params import VehicleClass, preset_params


@dataclass(frozen=True)
class Link:
    """Road segment between two intersections"""

    length: float = defaults.RED_LIGHT_DISTANCE  # m
    lanes: int = 1


def equilibrium_headway(params):
    """tau + (g_min + l) / v_max, in seconds"""
    if params.v_max <= 0:
        raise ValidationError(f"v_max must be positive, got {params.v_max}", code="non_positive")
    return params.tau + (params.g_min + params.l) / params.v_max


def equilibrium_flow(params):
    """Equilibrium flow in veh/h"""
    return 3600.0 / equilibrium_headway(params)


def mixed_headway(penetration, tech_params, ordinary_params):
    """Average equilibrium headway with a fraction `penetration` of tech vehicles"""
    if not 0.0 <= penetration <= 1.0:
        raise ValidationError(
            f"penetration must lie in [0, 1], got {penetration}", code="penetration_range"
        )
    tau = penetration * tech_params.tau + (1.0 - penetration) * ordinary_params.tau
    spacing = mixed_spacing(penetration, tech_params, ordinary_params)
    return tau + spacing / ordinary_params.v_max


def mixed_spacing(penetration, tech_params, ordinary_params):
    """Average jam spacing g_min + l of the mixed fleet"""
    return penetration * tech_params.g_min + (1.0 - penetration) * ordinary_params.g_min + ordinary_params.l


def mixed_equilibrium_flow(penetration, tech_params, ordinary_params, link=None):
    """Equilibrium flow in veh/min, capped by the storage of `link` when given"""
    flow = 60.0 / mixed_headway(penetration, tech_params, ordinary_params)
    if link is None:
        return flow
    capacity = link.lanes * link.length / mixed_spacing(penetration, tech_params, ordinary_params)
    return min(flow, capacity)


@dataclass(frozen=True)
class EquilibriumPoint:
    tech: VehicleClass
    penetration: float
    headway: float
    free_road: float
    link_capped: float


def equilibrium_curves(penetrations=defaults.PENETRATION_LEVELS, link=None, a_max=None, **overrides):
    """Free road and link capped equilibrium flows over the penetration grid"""
    link = link or Link()
    ordinary = preset_params(VehicleClass.ORDINARY, a_max=a_max, **overrides)
    points = []
    for tech in (VehicleClass.ACC, VehicleClass.CACC):
        tech_params = preset_params(tech, a_max=a_max, **overrides)
        for penetration in penetrations:
            points.append(
                EquilibriumPoint(
                    tech=tech,
                    penetration=penetration,
                    headway=mixed_headway(penetration, tech_params, ordinary),
                    free_road=mixed_equilibrium_flow(penetration, tech_params, ordinary),
                    link_capped=mixed_equilibrium_flow(penetration, tech_params, ordinary, link),
                )
            )
    return points
