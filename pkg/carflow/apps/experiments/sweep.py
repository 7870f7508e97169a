"""
Penetration and acceleration sweeps with ensemble medians
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import groupby

import numpy as np
from django.db import models

from carflow.apps.core import defaults
from carflow.apps.core.exceptions import CarflowError
from carflow.apps.core.params import CarFollowingModel, VehicleClass
from carflow.apps.core.rng import make_rng
from carflow.apps.microsim.engine import run

from .composition import compose_queue
from .presets import Experiment, experiment_scenario, published_throughput

logger = logging.getLogger(__name__)

TECH_CLASSES = (VehicleClass.ACC, VehicleClass.CACC)


class CaseStatus(models.TextChoices):
    OK = "ok", "Every run finished"
    PARTIAL = "partial", "Median over the runs that finished"
    FAILED = "failed", "No run finished"


@dataclass(frozen=True)
class SweepCase:
    experiment: Experiment
    model: CarFollowingModel
    tech: VehicleClass
    penetration: float
    a_max: float = defaults.A_MAX

    def __str__(self):
        return (
            f"{self.experiment.value}/{self.model.value}/{self.tech.value}/"
            f"lambda={self.penetration:g}/a_max={self.a_max:g}"
        )


@dataclass(frozen=True)
class RunOutcome:
    case_index: int
    run_index: int
    throughput: int = None
    error: str = ""

    @property
    def failed(self):
        return self.throughput is None


@dataclass
class EnsembleResult:
    case: SweepCase
    seed: int
    outcomes: list = field(default_factory=list)

    @property
    def throughputs(self):
        return [outcome.throughput for outcome in self.outcomes if not outcome.failed]

    @property
    def errors(self):
        return [outcome for outcome in self.outcomes if outcome.failed]

    @property
    def median(self):
        if not self.throughputs:
            return None
        return float(np.median(self.throughputs))

    @property
    def status(self):
        if not self.errors:
            return CaseStatus.OK
        return CaseStatus.PARTIAL if self.throughputs else CaseStatus.FAILED


def run_count(penetration, runs):
    """Pure fleets are deterministic and need a single run"""
    return 1 if penetration in (0.0, 1.0) else runs


def simulate_run(task):
    """One ensemble member; collisions and invalid states are reported, not raised"""
    case, case_index, run_index, seed, queue_size, platooning, window = task
    rng = make_rng(seed, case_index, run_index)
    try:
        composition = compose_queue(queue_size, case.penetration, case.tech, rng)
        scenario = experiment_scenario(
            case.experiment,
            model=case.model,
            a_max=case.a_max,
            penetration=case.penetration,
            tech=case.tech,
            seed=seed,
            platooning=platooning,
            queue_size=queue_size,
            horizon=window,
        )
        result = run(scenario, composition)
    except CarflowError as e:
        logger.warning(f"Run {run_index} of {case} failed: {e}")
        return RunOutcome(case_index, run_index, error=str(e))
    return RunOutcome(case_index, run_index, throughput=result.throughput(window))


def run_sweep(
    cases,
    runs=defaults.ENSEMBLE_RUNS,
    seed=0,
    workers=1,
    queue_size=defaults.QUEUE_SIZE,
    platooning=False,
    window=defaults.WINDOW,
):
    """EnsembleResults in case order, independent of worker scheduling"""
    cases = list(cases)
    tasks = [
        (case, case_index, run_index, seed, queue_size, platooning, window)
        for case_index, case in enumerate(cases)
        for run_index in range(run_count(case.penetration, runs))
    ]
    logger.info(f"Sweep: {len(cases)} cases, {len(tasks)} runs, {workers} worker(s), seed {seed}")
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            outcomes = list(executor.map(simulate_run, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        outcomes = [simulate_run(task) for task in tasks]

    results = [EnsembleResult(case, seed) for case in cases]
    for case_index, group in groupby(outcomes, key=lambda outcome: outcome.case_index):
        results[case_index].outcomes = list(group)
    for result in results:
        if result.status == CaseStatus.OK:
            logger.info(f"{result.case}: median {result.median} over {len(result.throughputs)} run(s)")
        else:
            logger.warning(
                f"{result.case}: {result.status.label.lower()}, {len(result.errors)} of "
                f"{len(result.outcomes)} run(s) failed"
            )
    return results


def penetration_cases(
    experiments=tuple(Experiment),
    models=tuple(CarFollowingModel),
    techs=TECH_CLASSES,
    penetrations=defaults.PENETRATION_LEVELS,
    a_max=defaults.A_MAX,
):
    """Every (experiment, model, tech, lambda > 0) case plus one lambda = 0 baseline per model"""
    cases = []
    for experiment in experiments:
        for model in models:
            if 0.0 in penetrations:
                cases.append(SweepCase(Experiment(experiment), CarFollowingModel(model), VehicleClass.ACC, 0.0, a_max))
            for tech in techs:
                for penetration in penetrations:
                    if penetration > 0.0:
                        cases.append(
                            SweepCase(
                                Experiment(experiment),
                                CarFollowingModel(model),
                                VehicleClass(tech),
                                penetration,
                                a_max,
                            )
                        )
    return cases


@dataclass(frozen=True)
class ThroughputCell:
    experiment: Experiment
    model: CarFollowingModel
    a_max: float
    simulated: int
    published: int = None

    @property
    def deviation(self):
        return None if self.published is None else self.simulated - self.published


def acceleration_sweep(models=tuple(CarFollowingModel), a_max_levels=defaults.A_MAX_LEVELS, window=defaults.WINDOW):
    """Baseline throughput for each (a_max, experiment, model) with the published reference"""
    cells = []
    for a_max in a_max_levels:
        for experiment in Experiment:
            for model in models:
                scenario = experiment_scenario(experiment, model=model, a_max=a_max, horizon=window)
                simulated = run(scenario).throughput(window)
                cells.append(
                    ThroughputCell(
                        experiment=experiment,
                        model=CarFollowingModel(model),
                        a_max=a_max,
                        simulated=simulated,
                        published=published_throughput(experiment, model, a_max),
                    )
                )
                logger.debug(f"{experiment.value}/{model}/a_max={a_max}: {simulated}")
    return cells
