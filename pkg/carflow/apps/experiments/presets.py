"""
Queue discharge experiments: free road ahead and red light downstream.

Both start from a standing queue whose first vehicle stands at the stop bar
of a signal that turns green at t=0. In the red light experiment a second
signal 300 m downstream stays red for the whole horizon.
"""

from django.db import models

from carflow.apps.core import defaults
from carflow.apps.core.params import CarFollowingModel, VehicleClass
from carflow.apps.core.scenario import (
    PlatooningSpec,
    QueueSpec,
    ScenarioConfig,
    SignalColor,
    SignalSpec,
    validate_scenario,
)


class Experiment(models.TextChoices):
    FREE_ROAD = "free_road", "Free road ahead"
    RED_LIGHT = "red_light", "Red light ahead"


# Published 60 s throughput (veh/min) per (experiment, a_max, model)
PUBLISHED_THROUGHPUT = {
    ("free_road", 0.8): {"gipps": 23, "iidm": 20, "helly": 20},
    ("red_light", 0.8): {"gipps": 20, "iidm": 19, "helly": 20},
    ("free_road", 1.5): {"gipps": 26, "iidm": 23, "helly": 22},
    ("red_light", 1.5): {"gipps": 22, "iidm": 21, "helly": 21},
    ("free_road", 2.5): {"gipps": 27, "iidm": 24, "helly": 23},
    ("red_light", 2.5): {"gipps": 22, "iidm": 22, "helly": 22},
}


def published_throughput(experiment, model, a_max):
    """Reference throughput, None for cells outside the published table"""
    row = PUBLISHED_THROUGHPUT.get((Experiment(experiment).value, a_max))
    if row is None:
        return None
    return row[CarFollowingModel(model).value]


def release_signal():
    return SignalSpec(0.0, ((0.0, SignalColor.GREEN),))


def experiment_scenario(
    experiment,
    model=CarFollowingModel.GIPPS,
    a_max=defaults.A_MAX,
    penetration=0.0,
    tech=VehicleClass.ACC,
    seed=0,
    platooning=False,
    queue_size=defaults.QUEUE_SIZE,
    horizon=defaults.HORIZON,
    dt=defaults.DT,
    **options,
):
    signals = [release_signal()]
    if Experiment(experiment) == Experiment.RED_LIGHT:
        signals.append(SignalSpec(defaults.RED_LIGHT_DISTANCE, ((0.0, SignalColor.RED),)))
    scenario = ScenarioConfig(
        model=CarFollowingModel(model),
        dt=dt,
        horizon=horizon,
        seed=seed,
        a_max=a_max,
        signals=tuple(signals),
        detectors=(0.0,),
        queue=QueueSpec(size=queue_size, penetration=penetration, tech=VehicleClass(tech)),
        platooning=PlatooningSpec(enabled=platooning),
        window=horizon if horizon > 0 else defaults.WINDOW,
        **options,
    )
    return validate_scenario(scenario)


def free_road_scenario(**kwargs):
    return experiment_scenario(Experiment.FREE_ROAD, **kwargs)


def red_light_scenario(**kwargs):
    return experiment_scenario(Experiment.RED_LIGHT, **kwargs)
