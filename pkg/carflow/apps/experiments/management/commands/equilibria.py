from carflow.apps.core import defaults
from carflow.apps.core.params import VehicleClass
from carflow.apps.experiments.equilibrium import (
    Link,
    equilibrium_curves,
    equilibrium_flow,
    equilibrium_headway,
)
from carflow.apps.experiments.presets import Experiment, experiment_scenario
from carflow.apps.runs.commands import SimulationCommand
from carflow.apps.runs.utils import write_csv

CURVE_HEADER = ["tech", "penetration", "headway", "free_road", "link_capped"]
CLASS_HEADER = ["vehicle_class", "tau", "g_min", "headway", "flow_per_hour", "flow_per_minute"]


def curve_rows(points):
    for point in points:
        yield [point.tech, point.penetration, point.headway, point.free_road, point.link_capped]


class Command(SimulationCommand):
    help = "Print equilibrium headway and flow per class and write the mixed fleet equilibrium curves"

    name = "equilibria"
    scenario_flags = ("amax",)

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            "--link-length",
            type=float,
            default=defaults.RED_LIGHT_DISTANCE,
            help="Length of the link between the intersections in m (default: 300)",
        )
        parser.add_argument("--lanes", type=int, default=1, help="Lanes on that link (default: 1)")

    def default_scenario(self, options):
        return experiment_scenario(Experiment.FREE_ROAD)

    def simulate(self, scenario, manifest, options):
        class_rows = []
        for vehicle_class in VehicleClass:
            params = scenario.params_for(vehicle_class)
            headway = equilibrium_headway(params)
            flow = equilibrium_flow(params)
            class_rows.append([vehicle_class, params.tau, params.g_min, headway, flow, flow / 60.0])
            self.stdout.write(
                f"{vehicle_class.label:<13} theta_e = {headway:.4g} s, f_e = {flow:.6g} veh/h"
            )

        link = Link(length=options["link_length"], lanes=options["lanes"])
        points = equilibrium_curves(link=link, a_max=scenario.a_max, **dict(scenario.params))
        directory = manifest.directory
        write_csv(directory / "equilibrium_classes.csv", CLASS_HEADER, class_rows, manifest)
        write_csv(directory / "equilibrium_curves.csv", CURVE_HEADER, curve_rows(points), manifest)
        return {"link_length": link.length, "lanes": link.lanes, "points": len(points)}
