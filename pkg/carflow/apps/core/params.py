"""
Vehicle classes, driver parameter sets and vehicle state
"""

from dataclasses import dataclass, fields, replace

from django.core.exceptions import ValidationError
from django.db import models

from . import defaults


class VehicleClass(models.TextChoices):
    ORDINARY = "ordinary", "Ordinary"
    ACC = "acc", "ACC-enabled"
    CACC = "cacc", "CACC-enabled"


class CarFollowingModel(models.TextChoices):
    GIPPS = "gipps", "Gipps"
    IIDM = "iidm", "IIDM"
    HELLY = "helly", "Helly"


@dataclass(frozen=True)
class DriverParams:
    """Parameter bundle of one vehicle class.

    b is the desired deceleration as a positive number. alpha1 and alpha2 are
    the Helly gains, delta1 and delta2 the IIDM exponents.
    """

    a_max: float = defaults.A_MAX
    b: float = defaults.B
    tau: float = defaults.TAU
    g_min: float = defaults.G_MIN
    v_max: float = defaults.V_MAX
    l: float = defaults.VEHICLE_LENGTH  # noqa: E741
    delta1: float = defaults.DELTA1
    delta2: float = defaults.DELTA2
    alpha1: float = defaults.ALPHA1
    alpha2: float = defaults.ALPHA2

    def validate(self, dt=defaults.DT):
        for field in fields(self):
            value = getattr(self, field.name)
            if not value > 0:
                raise ValidationError(
                    f"{field.name} must be strictly positive, got {value}",
                    code="non_positive",
                )
        if self.tau < dt:
            raise ValidationError(
                f"tau ({self.tau}) must not be smaller than dt ({dt})",
                code="tau_below_dt",
            )
        return self

    def with_headway(self, vehicle_class):
        """Copy with (tau, g_min) of the given class"""
        tau, g_min = defaults.CLASS_HEADWAY[VehicleClass(vehicle_class).value]
        return replace(self, tau=tau, g_min=g_min)

    @property
    def jam_density(self):
        return 1.0 / (self.g_min + self.l)

    def as_dict(self):
        return {field.name: getattr(self, field.name) for field in fields(self)}


PARAM_NAMES = tuple(field.name for field in fields(DriverParams))


def preset_params(vehicle_class, a_max=None, **overrides):
    """Shared defaults with (tau, g_min) of the vehicle class.

    a_max and any other DriverParams field may be overridden; the class
    headway pair always wins over overrides of tau and g_min.
    """
    if a_max is not None:
        overrides["a_max"] = a_max
    return DriverParams(**overrides).with_headway(vehicle_class)


@dataclass(frozen=True)
class VehicleState:
    """Kinematic state of one simulated vehicle.

    x is the front bumper position, a the acceleration applied during the
    last completed step.
    """

    id: int
    x: float
    v: float
    a: float
    vehicle_class: VehicleClass
    params: DriverParams

    @property
    def rear(self):
        return self.x - self.params.l

    def gap_to(self, leader):
        return leader.x - leader.params.l - self.x
