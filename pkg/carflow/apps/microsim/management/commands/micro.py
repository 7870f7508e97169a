from carflow.apps.experiments.presets import Experiment, experiment_scenario
from carflow.apps.microsim.engine import run
from carflow.apps.runs.commands import SimulationCommand
from carflow.apps.runs.utils import write_csv, write_text

TRAJECTORY_HEADER = ["t", "vehicle_id", "x", "v", "a"]
DETECTOR_HEADER = ["vehicle_id", "time", "position", "v", "a", "gap", "flow"]
PLATOON_EVENT_HEADER = ["time", "kind", "leader_id", "member_id", "size", "detail"]


def trajectory_rows(trajectory):
    for sample in trajectory:
        yield [sample.t, sample.vehicle_id, sample.x, sample.v, sample.a]


def detector_rows(records):
    for record in records:
        yield [record.vehicle_id, record.time, record.position, record.v, record.a, record.gap, record.flow]


def platoon_event_rows(events):
    for event in events:
        yield [event.time, event.kind, event.leader_id, event.member_id, event.size, event.detail]


def write_micro_outputs(result, manifest, window):
    directory = manifest.directory
    write_csv(directory / "trajectories.csv", TRAJECTORY_HEADER, trajectory_rows(result.trajectory), manifest)
    write_csv(directory / "detector.csv", DETECTOR_HEADER, detector_rows(result.records), manifest)
    count = result.throughput(window)
    write_text(directory / "throughput.txt", f"{count}\n", manifest)
    if result.scenario.platooning.enabled:
        write_csv(
            directory / "platoon_events.csv",
            PLATOON_EVENT_HEADER,
            platoon_event_rows(result.platoon_events),
            manifest,
        )
    return count


class Command(SimulationCommand):
    help = "Run a microscopic corridor simulation and write trajectories, detector records and throughput"

    name = "micro"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            "--experiment",
            choices=Experiment.values,
            default=Experiment.FREE_ROAD.value,
            help="Built-in experiment when no --scenario is given (default: free_road)",
        )

    def default_scenario(self, options):
        return experiment_scenario(options["experiment"])

    def simulate(self, scenario, manifest, options):
        result = run(scenario)
        count = write_micro_outputs(result, manifest, scenario.window)
        self.stdout.write(
            f"{scenario.model.label}: {count} vehicles crossed the detector in {scenario.window:g} s"
        )
        return {"throughput": count, "window": scenario.window, "vehicles": len(result.composition)}
