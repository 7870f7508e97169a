"""
Mixed fleet queue composition
"""

import math

from django.core.exceptions import ValidationError

from carflow.apps.core.params import VehicleClass


def tech_count(size, penetration):
    """round(penetration * size), halves rounded up"""
    return int(math.floor(penetration * size + 0.5))


def compose_queue(size, penetration, tech, rng):
    """Queue of `size` vehicles with round(penetration * size) tech vehicles
    placed uniformly at random, the rest Ordinary."""
    if size <= 0:
        raise ValidationError(f"queue size must be positive, got {size}", code="queue_size")
    if not 0.0 <= penetration <= 1.0:
        raise ValidationError(
            f"penetration must lie in [0, 1], got {penetration}", code="penetration_range"
        )
    tech = VehicleClass(tech)
    count = tech_count(size, penetration)
    composition = [VehicleClass.ORDINARY] * size
    if 0 < count < size:
        positions = rng.choice(size, size=count, replace=False)
    else:
        positions = range(count)
    for position in positions:
        composition[int(position)] = tech
    return composition


def interleaved(size, tech):
    """Ordinary, tech, Ordinary, tech, ..."""
    tech = VehicleClass(tech)
    return [VehicleClass.ORDINARY if index % 2 == 0 else tech for index in range(size)]
