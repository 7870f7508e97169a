from dataclasses import replace

from carflow.apps.core.params import CarFollowingModel, VehicleClass
from carflow.apps.core.scenario import SignalColor, SignalSpec
from carflow.apps.experiments.presets import Experiment, experiment_scenario
from carflow.apps.macrosim.solver import init_red_light_scenario, queue_tail, run_macro
from carflow.apps.microsim.engine import run, stopped_queue_tail
from carflow.apps.runs.commands import SimulationCommand
from carflow.apps.runs.utils import write_csv


def macro_state_for(scenario):
    """Red light link grid; the first signal releases the jam, the second blocks"""
    spec = scenario.macro
    release = scenario.signals[0] if scenario.signals else None
    if len(scenario.signals) > 1:
        red = scenario.signals[1]
    else:
        red = SignalSpec((spec.red_link - spec.signal_link) * spec.link_length, ((0.0, SignalColor.GREEN),))
    return init_red_light_scenario(
        spec=spec, release=release, red=red, params=scenario.params_for(VehicleClass.ORDINARY)
    )


class Command(SimulationCommand):
    help = "Run the macroscopic link model and write flow and speed contours"

    name = "macro"
    scenario_flags = ("model", "amax", "stride")

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            "--compare-micro",
            action="store_true",
            help="Also run the equivalent micro scenario and compare queue tails",
        )

    def default_scenario(self, options):
        return experiment_scenario(Experiment.RED_LIGHT, model=CarFollowingModel.IIDM)

    def simulate(self, scenario, manifest, options):
        params = scenario.params_for(VehicleClass.ORDINARY)
        stride = options.get("stride") or scenario.macro.sample_stride
        state = macro_state_for(scenario)
        grid = run_macro(state, scenario.model, params, scenario.horizon, scenario.dt, stride)

        directory = manifest.directory
        for quantity, name in (("flow", "flow_contour.csv"), ("speed", "speed_contour.csv")):
            rows = grid.rows(quantity)
            write_csv(directory / name, next(rows), rows, manifest)

        error = state.relative_conservation_error()
        tail = queue_tail(state)
        self.stdout.write(f"Contours: {grid.shape[0]} x {grid.shape[1]} (time x links)")
        self.stdout.write(
            f"Conservation: {state.vehicles:.6f} vehicles, relative error {error:.3e}"
        )
        self.stdout.write(f"Macro queue tail: {'none' if tail is None else f'{tail:.1f} m'}")
        details = {"rows": grid.shape[0], "links": grid.shape[1], "conservation_error": error, "queue_tail": tail}

        if options.get("compare_micro"):
            micro_scenario = replace(scenario, vehicles=0)
            result = run(micro_scenario)
            red = scenario.signals[1].position if len(scenario.signals) > 1 else None
            micro_tail = stopped_queue_tail(result.corridor, red) if red is not None else None
            self.stdout.write(f"Micro queue tail: {'none' if micro_tail is None else f'{micro_tail:.1f} m'}")
            details["micro_queue_tail"] = micro_tail
            if tail is not None and micro_tail is not None:
                self.stdout.write(f"Queue tail difference: {abs(tail - micro_tail):.1f} m")
        return details
