"""
Scenario documents: parsing, validation and serialization.

A scenario is a YAML mapping with nested sections:

    model: iidm
    a_max: 2.5
    signals:
      - {position: 0, schedule: [[0, green]]}
      - {position: 300, schedule: [[0, red]]}
    queue: {size: 40, penetration: 0.5, tech: cacc}
    platooning: {enabled: true, segments: [[-500, 500]]}
    events: {leave: [{time: 20, vehicle: 3}]}
    output: {stride: 1, window: 60}
    macro: {links: 240, link_length: 5, signal_link: 50, red_link: 110}

Parsing fills every omitted key from core.defaults, so a parsed
ScenarioConfig is fully resolved and immutable.
"""

import logging
from dataclasses import dataclass, field

import yaml
from django.core.exceptions import ValidationError
from django.db import models

from . import defaults
from .exceptions import ScenarioError
from .params import PARAM_NAMES, CarFollowingModel, VehicleClass, preset_params

logger = logging.getLogger(__name__)


class SignalColor(models.TextChoices):
    RED = "red", "Red"
    GREEN = "green", "Green"


@dataclass(frozen=True)
class SignalSpec:
    """Signal position and its (time, color) switches.

    Before the first switch the signal is red.
    """

    position: float
    schedule: tuple = ((0.0, SignalColor.GREEN),)

    def color_at(self, t):
        color = SignalColor.RED
        for switch_time, switch_color in self.schedule:
            if switch_time <= t + 1e-9:
                color = switch_color
            else:
                break
        return color

    def is_red(self, t):
        return self.color_at(t) == SignalColor.RED


@dataclass(frozen=True)
class QueueSpec:
    size: int = defaults.QUEUE_SIZE
    penetration: float = 0.0
    tech: VehicleClass = VehicleClass.ACC
    stop_bar: float = 0.0
    composition: tuple = None


@dataclass(frozen=True)
class PlatooningSpec:
    enabled: bool = False
    segments: tuple = ()
    range: float = None
    max_size: int = None
    separation_factor: float = defaults.SEPARATION_FACTOR
    broadcast: bool = True


@dataclass(frozen=True)
class LeaveEvent:
    time: float
    vehicle: int


@dataclass(frozen=True)
class MacroSpec:
    links: int = defaults.MACRO_LINKS
    link_length: float = defaults.MACRO_LINK_LENGTH
    signal_link: int = defaults.MACRO_SIGNAL_LINK
    red_link: int = defaults.MACRO_RED_LINK
    inflow: float = 0.0
    sample_stride: int = 1


@dataclass(frozen=True)
class ScenarioConfig:
    model: CarFollowingModel = CarFollowingModel.GIPPS
    dt: float = defaults.DT
    horizon: float = defaults.HORIZON
    seed: int = 0
    a_max: float = None
    params: tuple = ()
    signals: tuple = (SignalSpec(0.0),)
    detectors: tuple = (0.0,)
    queue: QueueSpec = field(default_factory=QueueSpec)
    platooning: PlatooningSpec = field(default_factory=PlatooningSpec)
    leave_events: tuple = ()
    stride: int = 1
    window: float = defaults.WINDOW
    vehicles: int = None
    macro: MacroSpec = field(default_factory=MacroSpec)

    def params_for(self, vehicle_class):
        """DriverParams of a class with this scenario's overrides applied"""
        return preset_params(vehicle_class, a_max=self.a_max, **dict(self.params))

    @property
    def base_params(self):
        return self.params_for(VehicleClass.ORDINARY)


TOP_LEVEL_KEYS = {
    "model", "dt", "horizon", "seed", "a_max", "params", "signals", "detectors",
    "queue", "platooning", "events", "output", "macro",
}
QUEUE_KEYS = {"size", "penetration", "tech", "stop_bar", "composition"}
PLATOONING_KEYS = {"enabled", "segments", "range", "max_size", "separation_factor", "broadcast"}
SIGNAL_KEYS = {"position", "schedule"}
EVENT_KEYS = {"leave"}
LEAVE_KEYS = {"time", "vehicle"}
OUTPUT_KEYS = {"stride", "window", "vehicles"}
MACRO_KEYS = {"links", "link_length", "signal_link", "red_link", "inflow", "sample_stride"}


def _check_keys(section, allowed, prefix):
    if section is None:
        return {}
    if not isinstance(section, dict):
        raise ScenarioError(prefix or "<root>", "expected a mapping")
    for key in section:
        if key not in allowed:
            raise ScenarioError(f"{prefix}.{key}" if prefix else str(key), "unknown key")
    return section


def _number(value, key, cast=float):
    if isinstance(value, bool):
        raise ScenarioError(key, f"expected a number, got {value!r}")
    try:
        return cast(value)
    except (TypeError, ValueError):
        raise ScenarioError(key, f"expected a number, got {value!r}")


def _optional(value, key, cast=float):
    return None if value is None else _number(value, key, cast)


def _choice(enum, value, key):
    try:
        return enum(str(value).lower())
    except ValueError:
        raise ScenarioError(key, f"expected one of {', '.join(enum.values)}, got {value!r}")


def _parse_signals(raw):
    if raw is None:
        return (SignalSpec(0.0),)
    if not isinstance(raw, list):
        raise ScenarioError("signals", "expected a list")
    signals = []
    for index, item in enumerate(raw):
        prefix = f"signals[{index}]"
        item = _check_keys(item, SIGNAL_KEYS, prefix)
        if "position" not in item:
            raise ScenarioError(f"{prefix}.position", "missing")
        schedule = []
        for switch in item.get("schedule", [[0.0, "green"]]):
            if not isinstance(switch, (list, tuple)) or len(switch) != 2:
                raise ScenarioError(f"{prefix}.schedule", "expected [time, color] pairs")
            schedule.append(
                (
                    _number(switch[0], f"{prefix}.schedule"),
                    _choice(SignalColor, switch[1], f"{prefix}.schedule"),
                )
            )
        times = [switch_time for switch_time, _ in schedule]
        if any(later <= earlier for earlier, later in zip(times, times[1:])):
            raise ValidationError(
                f"{prefix}.schedule: switch times must be strictly increasing",
                code="schedule_order",
            )
        signals.append(SignalSpec(_number(item["position"], f"{prefix}.position"), tuple(schedule)))
    return tuple(signals)


def _parse_queue(raw):
    raw = _check_keys(raw, QUEUE_KEYS, "queue")
    composition = raw.get("composition")
    if composition is not None:
        if not isinstance(composition, list) or not composition:
            raise ScenarioError("queue.composition", "expected a non-empty list of vehicle classes")
        composition = tuple(_choice(VehicleClass, item, "queue.composition") for item in composition)
    queue = QueueSpec(
        size=_number(raw.get("size", defaults.QUEUE_SIZE), "queue.size", int),
        penetration=_number(raw.get("penetration", 0.0), "queue.penetration"),
        tech=_choice(VehicleClass, raw.get("tech", VehicleClass.ACC.value), "queue.tech"),
        stop_bar=_number(raw.get("stop_bar", 0.0), "queue.stop_bar"),
        composition=composition,
    )
    if not 0.0 <= queue.penetration <= 1.0:
        raise ValidationError(
            f"queue.penetration must lie in [0, 1], got {queue.penetration}",
            code="penetration_range",
        )
    if queue.tech == VehicleClass.ORDINARY:
        raise ScenarioError("queue.tech", "expected acc or cacc")
    if queue.size <= 0:
        raise ValidationError(f"queue.size must be positive, got {queue.size}", code="queue_size")
    return queue


def _parse_platooning(raw):
    raw = _check_keys(raw, PLATOONING_KEYS, "platooning")
    segments = []
    for index, segment in enumerate(raw.get("segments") or []):
        if not isinstance(segment, (list, tuple)) or len(segment) != 2:
            raise ScenarioError(f"platooning.segments[{index}]", "expected [start, end]")
        start, end = (_number(bound, f"platooning.segments[{index}]") for bound in segment)
        if end <= start:
            raise ValidationError(
                f"platooning.segments[{index}]: end must exceed start", code="segment_order"
            )
        segments.append((start, end))
    return PlatooningSpec(
        enabled=bool(raw.get("enabled", False)),
        segments=tuple(segments),
        range=_optional(raw.get("range"), "platooning.range"),
        max_size=_optional(raw.get("max_size"), "platooning.max_size", int),
        separation_factor=_number(
            raw.get("separation_factor", defaults.SEPARATION_FACTOR), "platooning.separation_factor"
        ),
        broadcast=bool(raw.get("broadcast", True)),
    )


def _parse_events(raw):
    raw = _check_keys(raw, EVENT_KEYS, "events")
    events = []
    for index, item in enumerate(raw.get("leave") or []):
        item = _check_keys(item, LEAVE_KEYS, f"events.leave[{index}]")
        events.append(
            LeaveEvent(
                time=_number(item.get("time"), f"events.leave[{index}].time"),
                vehicle=_number(item.get("vehicle"), f"events.leave[{index}].vehicle", int),
            )
        )
    return tuple(sorted(events, key=lambda event: (event.time, event.vehicle)))


def _parse_macro(raw):
    raw = _check_keys(raw, MACRO_KEYS, "macro")
    spec = MacroSpec(
        links=_number(raw.get("links", defaults.MACRO_LINKS), "macro.links", int),
        link_length=_number(raw.get("link_length", defaults.MACRO_LINK_LENGTH), "macro.link_length"),
        signal_link=_number(raw.get("signal_link", defaults.MACRO_SIGNAL_LINK), "macro.signal_link", int),
        red_link=_number(raw.get("red_link", defaults.MACRO_RED_LINK), "macro.red_link", int),
        inflow=_number(raw.get("inflow", 0.0), "macro.inflow"),
        sample_stride=_number(raw.get("sample_stride", 1), "macro.sample_stride", int),
    )
    if not 1 <= spec.signal_link <= spec.links or not 1 <= spec.red_link <= spec.links:
        raise ValidationError("macro signal links must lie within 1..links", code="macro_links")
    if spec.sample_stride < 1:
        raise ValidationError("macro.sample_stride must be at least 1", code="macro_stride")
    return spec


def parse_scenario(text):
    """Parse a YAML scenario document into a fully resolved ScenarioConfig"""
    try:
        document = yaml.safe_load(text) if text else None
    except yaml.YAMLError as e:
        raise ScenarioError("<document>", f"not valid YAML: {e}")
    document = _check_keys(document, TOP_LEVEL_KEYS, "")

    params = _check_keys(document.get("params"), set(PARAM_NAMES), "params")
    params = tuple(sorted((name, _number(value, f"params.{name}")) for name, value in params.items()))
    output = _check_keys(document.get("output"), OUTPUT_KEYS, "output")
    detectors = document.get("detectors", [0.0])
    if not isinstance(detectors, list):
        raise ScenarioError("detectors", "expected a list of positions")

    config = ScenarioConfig(
        model=_choice(CarFollowingModel, document.get("model", CarFollowingModel.GIPPS.value), "model"),
        dt=_number(document.get("dt", defaults.DT), "dt"),
        horizon=_number(document.get("horizon", defaults.HORIZON), "horizon"),
        seed=_number(document.get("seed", 0), "seed", int),
        a_max=_optional(document.get("a_max"), "a_max"),
        params=params,
        signals=_parse_signals(document.get("signals")),
        detectors=tuple(_number(position, "detectors") for position in detectors),
        queue=_parse_queue(document.get("queue")),
        platooning=_parse_platooning(document.get("platooning")),
        leave_events=_parse_events(document.get("events")),
        stride=_number(output.get("stride", 1), "output.stride", int),
        window=_number(output.get("window", defaults.WINDOW), "output.window"),
        vehicles=_optional(output.get("vehicles"), "output.vehicles", int),
        macro=_parse_macro(document.get("macro")),
    )
    validate_scenario(config)
    return config


def validate_scenario(config):
    if config.dt <= 0:
        raise ValidationError(f"dt must be positive, got {config.dt}", code="dt")
    if config.horizon < 0:
        raise ValidationError(f"horizon must not be negative, got {config.horizon}", code="horizon")
    if config.window <= 0:
        raise ValidationError(f"output.window must be positive, got {config.window}", code="window")
    if config.stride < 1:
        raise ValidationError("output.stride must be at least 1", code="stride")
    if not 0.0 <= config.queue.penetration <= 1.0:
        raise ValidationError(
            f"queue.penetration must lie in [0, 1], got {config.queue.penetration}",
            code="penetration_range",
        )
    for vehicle_class in VehicleClass:
        config.params_for(vehicle_class).validate(config.dt)
    return config


def scenario_to_dict(config):
    document = {
        "model": config.model.value,
        "dt": config.dt,
        "horizon": config.horizon,
        "seed": config.seed,
        "a_max": config.a_max,
        "params": dict(config.params),
        "signals": [
            {
                "position": signal.position,
                "schedule": [[switch_time, color.value] for switch_time, color in signal.schedule],
            }
            for signal in config.signals
        ],
        "detectors": list(config.detectors),
        "queue": {
            "size": config.queue.size,
            "penetration": config.queue.penetration,
            "tech": config.queue.tech.value,
            "stop_bar": config.queue.stop_bar,
            "composition": (
                [item.value for item in config.queue.composition]
                if config.queue.composition is not None
                else None
            ),
        },
        "platooning": {
            "enabled": config.platooning.enabled,
            "segments": [list(segment) for segment in config.platooning.segments],
            "range": config.platooning.range,
            "max_size": config.platooning.max_size,
            "separation_factor": config.platooning.separation_factor,
            "broadcast": config.platooning.broadcast,
        },
        "events": {
            "leave": [{"time": event.time, "vehicle": event.vehicle} for event in config.leave_events]
        },
        "output": {"stride": config.stride, "window": config.window, "vehicles": config.vehicles},
        "macro": {
            "links": config.macro.links,
            "link_length": config.macro.link_length,
            "signal_link": config.macro.signal_link,
            "red_link": config.macro.red_link,
            "inflow": config.macro.inflow,
            "sample_stride": config.macro.sample_stride,
        },
    }
    return document


def dump_scenario(config):
    """Serialize a ScenarioConfig in the grammar parse_scenario reads"""
    return yaml.safe_dump(scenario_to_dict(config), sort_keys=False)


def load_scenario(path):
    with open(path, encoding="utf-8") as f:
        config = parse_scenario(f.read())
    logger.debug(f"Loaded scenario {path}: model={config.model.value}, seed={config.seed}")
    return config