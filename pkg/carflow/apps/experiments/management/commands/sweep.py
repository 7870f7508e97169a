from django.conf import settings

from carflow.apps.core import defaults
from carflow.apps.core.params import CarFollowingModel, VehicleClass
from carflow.apps.experiments.equilibrium import Link, equilibrium_curves, mixed_equilibrium_flow
from carflow.apps.experiments.presets import Experiment, experiment_scenario
from carflow.apps.experiments.sweep import TECH_CLASSES, acceleration_sweep, penetration_cases, run_sweep
from carflow.apps.runs.commands import SimulationCommand
from carflow.apps.runs.utils import write_csv

from .equilibria import CURVE_HEADER, curve_rows

RUN_HEADER = ["experiment", "model", "tech", "penetration", "a_max", "run", "throughput", "error"]
MEDIAN_HEADER = [
    "experiment", "model", "tech", "penetration", "a_max",
    "runs", "failed", "status", "median", "equilibrium_free_road", "equilibrium_link",
]
TABLE_HEADER = ["a_max", "experiment", "model", "simulated", "published", "deviation"]


class Command(SimulationCommand):
    help = "Run the ACC/CACC penetration sweep (or the acceleration table with --table)"

    name = "sweep"
    scenario_flags = ("model", "amax", "penetration", "tech", "platooning", "window")

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            "--runs",
            type=int,
            default=defaults.ENSEMBLE_RUNS,
            help=f"Runs per mixed case (default: {defaults.ENSEMBLE_RUNS})",
        )
        parser.add_argument(
            "--table",
            action="store_true",
            help="Compare baseline throughput for every a_max level with the published table",
        )

    def default_scenario(self, options):
        return experiment_scenario(Experiment.FREE_ROAD, queue_size=settings.CARFLOW_QUEUE_SIZE)

    def simulate(self, scenario, manifest, options):
        if options["table"]:
            return self.write_table(options, manifest, scenario.window)

        models = [CarFollowingModel(options["model"])] if options.get("model") else list(CarFollowingModel)
        techs = [VehicleClass(options["tech"])] if options.get("tech") else list(TECH_CLASSES)
        if options.get("penetration") is not None:
            penetrations = sorted({0.0, options["penetration"]})
        else:
            penetrations = defaults.PENETRATION_LEVELS
        a_max = scenario.a_max if scenario.a_max is not None else defaults.A_MAX
        cases = penetration_cases(models=models, techs=techs, penetrations=penetrations, a_max=a_max)

        results = run_sweep(
            cases,
            runs=options["runs"],
            seed=scenario.seed,
            workers=max(1, int(getattr(settings, "CARFLOW_THREADS", 1))),
            queue_size=scenario.queue.size,
            platooning=scenario.platooning.enabled,
            window=scenario.window,
        )

        directory = manifest.directory
        write_csv(directory / "sweep_runs.csv", RUN_HEADER, self.run_rows(results), manifest)
        write_csv(
            directory / "sweep_medians.csv", MEDIAN_HEADER, self.median_rows(results, scenario), manifest
        )
        write_csv(
            directory / "equilibrium_curves.csv",
            CURVE_HEADER,
            curve_rows(equilibrium_curves(penetrations, a_max=a_max, **dict(scenario.params))),
            manifest,
        )

        failed = sum(len(result.errors) for result in results)
        if failed:
            self.stdout.write(self.style.WARNING(f"{failed} run(s) failed, see sweep_runs.csv"))
        self.stdout.write(f"{len(cases)} cases, {sum(len(r.outcomes) for r in results)} runs")
        return {"cases": len(cases), "failed_runs": failed, "runs": options["runs"]}

    def run_rows(self, results):
        for result in results:
            case = result.case
            for outcome in result.outcomes:
                yield [
                    case.experiment, case.model, case.tech, case.penetration, case.a_max,
                    outcome.run_index, outcome.throughput, outcome.error,
                ]

    def median_rows(self, results, scenario):
        link = Link()
        ordinary = scenario.params_for(VehicleClass.ORDINARY)
        for result in results:
            case = result.case
            tech_params = scenario.params_for(case.tech)
            yield [
                case.experiment, case.model, case.tech, case.penetration, case.a_max,
                len(result.outcomes), len(result.errors), result.status, result.median,
                mixed_equilibrium_flow(case.penetration, tech_params, ordinary),
                mixed_equilibrium_flow(case.penetration, tech_params, ordinary, link),
            ]

    def write_table(self, options, manifest, window):
        models = [CarFollowingModel(options["model"])] if options.get("model") else list(CarFollowingModel)
        levels = (options["amax"],) if options.get("amax") is not None else defaults.A_MAX_LEVELS
        cells = acceleration_sweep(models=models, a_max_levels=levels, window=window)
        rows = [
            [cell.a_max, cell.experiment, cell.model, cell.simulated, cell.published, cell.deviation]
            for cell in cells
        ]
        write_csv(manifest.directory / "throughput_table.csv", TABLE_HEADER, rows, manifest)
        off = [cell for cell in cells if cell.deviation is not None and abs(cell.deviation) > 1]
        for cell in cells:
            self.stdout.write(
                f"a_max={cell.a_max:g} {cell.experiment.label:<16} {cell.model.label:<6} "
                f"{cell.simulated:>3} (published {cell.published})"
            )
        if off:
            self.stdout.write(self.style.WARNING(f"{len(off)} cell(s) deviate by more than 1 veh/min"))
        return {"cells": len(cells), "deviating": len(off)}
