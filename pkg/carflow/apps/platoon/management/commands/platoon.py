from dataclasses import replace

from carflow.apps.core.params import VehicleClass
from carflow.apps.core.scenario import PlatooningSpec
from carflow.apps.experiments.presets import Experiment, experiment_scenario
from carflow.apps.microsim.engine import run
from carflow.apps.microsim.management.commands.micro import write_micro_outputs
from carflow.apps.runs.commands import SimulationCommand
from carflow.apps.runs.utils import write_csv


class Command(SimulationCommand):
    help = "Run a corridor with CACC platoon management and write the platoon event log"

    name = "platoon"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            "--experiment",
            choices=Experiment.values,
            default=Experiment.RED_LIGHT.value,
            help="Built-in experiment when no --scenario is given (default: red_light)",
        )
        parser.add_argument(
            "--compare",
            action="store_true",
            help="Also run the same queue with ACC vehicles and no platooning",
        )

    def default_scenario(self, options):
        return experiment_scenario(
            options["experiment"], penetration=1.0, tech=VehicleClass.CACC, platooning=True
        )

    def apply_overrides(self, scenario, options):
        scenario = super().apply_overrides(scenario, options)
        if options.get("platooning") is None and not scenario.platooning.enabled:
            scenario = replace(scenario, platooning=replace(scenario.platooning, enabled=True))
        return scenario

    def simulate(self, scenario, manifest, options):
        result = run(scenario)
        count = write_micro_outputs(result, manifest, scenario.window)
        registry = result.corridor.platoons
        sizes = []
        if registry is not None:
            sizes = [platoon.size for platoon in registry.platoons]
            write_csv(
                manifest.directory / "platoons.csv",
                ["leader_id", "followers", "size"],
                [
                    [leader_id, " ".join(str(member) for member in followers), len(followers) + 1]
                    for leader_id, followers in registry.snapshot()
                ],
                manifest,
            )
        self.stdout.write(
            f"Platooned throughput: {count} in {scenario.window:g} s, "
            f"{len(result.platoon_events)} platoon event(s), final sizes {sizes}"
        )
        details = {"throughput": count, "events": len(result.platoon_events), "platoon_sizes": sizes}

        if options.get("compare"):
            baseline = replace(
                scenario,
                queue=replace(scenario.queue, tech=VehicleClass.ACC, composition=None),
                platooning=PlatooningSpec(enabled=False),
                vehicles=0,
            )
            composition = [
                VehicleClass.ACC if vehicle_class == VehicleClass.CACC else vehicle_class
                for vehicle_class in result.composition
            ]
            acc_count = run(baseline, composition).throughput(scenario.window)
            self.stdout.write(f"ACC throughput without platooning: {acc_count}")
            details["acc_throughput"] = acc_count
        return details
