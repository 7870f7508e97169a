"""
Shared plumbing of the simulation management commands.

Exit codes: 0 ok, 2 input error, 3 numerical or stability error, 4 collision.
"""

import logging
from dataclasses import replace
from pathlib import Path

from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from carflow.apps.core.exceptions import (
    CollisionError,
    InvalidStateError,
    ScenarioError,
    StabilityError,
)
from carflow.apps.core.params import CarFollowingModel, VehicleClass
from carflow.apps.core.scenario import PlatooningSpec, load_scenario, validate_scenario

from .manifest import RunManifest
from .utils import record_failure, record_run

logger = logging.getLogger(__name__)

INPUT_ERROR = 2
STABILITY_ERROR = 3
COLLISION_ERROR = 4


def error_message(error):
    if isinstance(error, ValidationError):
        return "; ".join(error.messages)
    return str(error)


class SimulationCommand(BaseCommand):
    """Base for commands that load a scenario, simulate and emit files"""

    name = None
    scenario_flags = ("model", "amax", "penetration", "tech", "platooning", "stride", "window", "vehicles")

    def add_arguments(self, parser):
        parser.add_argument("--scenario", help="YAML scenario file (default: built-in experiment)")
        parser.add_argument("--out", help="Output directory (default: CARFLOW_OUTPUT_DIR/<command>)")
        parser.add_argument("--seed", type=int, help="Random seed")
        if "model" in self.scenario_flags:
            parser.add_argument("--model", choices=CarFollowingModel.values, help="Car following model")
        if "amax" in self.scenario_flags:
            parser.add_argument("--amax", type=float, help="Maximal acceleration in m/s^2")
        if "penetration" in self.scenario_flags:
            parser.add_argument("--penetration", type=float, help="Portion of ACC/CACC vehicles in [0, 1]")
        if "tech" in self.scenario_flags:
            parser.add_argument("--tech", choices=[VehicleClass.ACC.value, VehicleClass.CACC.value])
        if "platooning" in self.scenario_flags:
            parser.add_argument("--platooning", choices=["on", "off"], help="Enable CACC platoon management")
        if "stride" in self.scenario_flags:
            parser.add_argument("--stride", type=int, help="Sample every N-th step")
        if "window" in self.scenario_flags:
            parser.add_argument("--window", type=float, help="Throughput counting window in seconds")
        if "vehicles" in self.scenario_flags:
            parser.add_argument("--vehicles", type=int, help="Log trajectories of the first N vehicles only")

    def default_scenario(self, options):
        raise NotImplementedError

    def simulate(self, scenario, manifest, options):
        """Run and emit files into manifest.directory; return a details dict"""
        raise NotImplementedError

    def output_dir(self, options):
        directory = Path(options.get("out") or Path(settings.CARFLOW_OUTPUT_DIR) / self.name)
        directory.mkdir(parents=True, exist_ok=True)
        return directory

    def load(self, options):
        path = options.get("scenario")
        if path:
            try:
                scenario = load_scenario(path)
            except OSError as e:
                raise CommandError(f"Cannot read scenario {path}: {e.strerror or e}", returncode=INPUT_ERROR)
        else:
            scenario = self.default_scenario(options)
        return validate_scenario(self.apply_overrides(scenario, options))

    def apply_overrides(self, scenario, options):
        changes = {}
        if options.get("seed") is not None:
            changes["seed"] = options["seed"]
        if options.get("model"):
            changes["model"] = CarFollowingModel(options["model"])
        if options.get("amax") is not None:
            changes["a_max"] = options["amax"]
        if options.get("stride") is not None:
            changes["stride"] = options["stride"]
        if options.get("window") is not None:
            changes["window"] = options["window"]
        if options.get("vehicles") is not None:
            changes["vehicles"] = options["vehicles"]
        queue = {}
        if options.get("penetration") is not None:
            queue["penetration"] = options["penetration"]
        if options.get("tech"):
            queue["tech"] = VehicleClass(options["tech"])
        if queue:
            changes["queue"] = replace(scenario.queue, composition=None, **queue)
        if options.get("platooning"):
            changes["platooning"] = replace(
                scenario.platooning or PlatooningSpec(), enabled=options["platooning"] == "on"
            )
        return replace(scenario, **changes)

    def handle(self, *args, **options):
        directory = self.output_dir(options)
        manifest = RunManifest(
            command=self.name,
            output_dir=str(directory),
            scenario_path=options.get("scenario") or "",
            seed=options.get("seed") or 0,
        )
        try:
            scenario = self.load(options)
            manifest.seed = scenario.seed
            manifest.details = self.simulate(scenario, manifest, options) or {}
        except (ScenarioError, ValidationError) as e:
            record_failure(manifest, error_message(e))
            raise CommandError(f"Invalid scenario: {error_message(e)}", returncode=INPUT_ERROR)
        except CollisionError as e:
            record_failure(manifest, e)
            raise CommandError(f"Collision: {e}", returncode=COLLISION_ERROR)
        except (StabilityError, InvalidStateError) as e:
            record_failure(manifest, e)
            raise CommandError(f"Numerical error: {e}", returncode=STABILITY_ERROR)

        manifest.write()
        record_run(manifest)
        self.stdout.write(self.style.SUCCESS(f"Wrote {len(manifest.files)} file(s) and manifest to {directory}"))
        return None
