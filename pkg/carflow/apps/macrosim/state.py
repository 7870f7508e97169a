"""
Link grid state of the macroscopic model and its sampled contours.

Links are numbered 1..N in the model; arrays are indexed 0..N-1.
"""

from dataclasses import dataclass, field

import numpy as np

from carflow.apps.core import defaults


@dataclass(frozen=True)
class OutflowMask:
    """Zero outflow of one link while its signal is red"""

    link: int
    signal: object

    def active(self, t):
        return self.signal.is_red(t)


@dataclass
class MacroState:
    dx: np.ndarray
    rho: np.ndarray
    V: np.ndarray
    rho_jam: float
    inflow: float = 0.0
    masks: tuple = ()
    t: float = 0.0
    origin_link: int = 1
    inflow_total: float = 0.0
    outflow_total: float = 0.0
    initial_vehicles: float = field(default=None)

    def __post_init__(self):
        self.dx = np.asarray(self.dx, dtype=float)
        self.rho = np.asarray(self.rho, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        if not self.dx.shape == self.rho.shape == self.V.shape:
            raise ValueError("dx, rho and V must have the same length")
        if self.initial_vehicles is None:
            self.initial_vehicles = self.vehicles

    def __len__(self):
        return len(self.rho)

    @property
    def vehicles(self):
        return float(np.sum(self.rho * self.dx))

    @property
    def flow(self):
        return self.rho * self.V

    def blocked(self, t=None):
        """Boolean array of links whose outflow is forced to zero"""
        t = self.t if t is None else t
        blocked = np.zeros(len(self), dtype=bool)
        for mask in self.masks:
            if mask.active(t):
                blocked[mask.link - 1] = True
        return blocked

    def positions(self):
        """Upstream edge of every link relative to the origin link"""
        edges = np.concatenate(([0.0], np.cumsum(self.dx)[:-1]))
        return edges - edges[self.origin_link - 1]

    def conservation_error(self):
        """Vehicles now minus (initial + admitted inflow - outflow)"""
        return self.vehicles - (self.initial_vehicles + self.inflow_total - self.outflow_total)

    def relative_conservation_error(self):
        scale = max(self.initial_vehicles, self.inflow_total, 1.0)
        return abs(self.conservation_error()) / scale

    def copy(self):
        return MacroState(
            dx=self.dx.copy(),
            rho=self.rho.copy(),
            V=self.V.copy(),
            rho_jam=self.rho_jam,
            inflow=self.inflow,
            masks=self.masks,
            t=self.t,
            origin_link=self.origin_link,
            inflow_total=self.inflow_total,
            outflow_total=self.outflow_total,
            initial_vehicles=self.initial_vehicles,
        )


def uniform_state(links, link_length=defaults.MACRO_LINK_LENGTH, rho=0.0, V=0.0, rho_jam=None, **kwargs):
    rho_jam = rho_jam if rho_jam is not None else 1.0 / (defaults.G_MIN + defaults.VEHICLE_LENGTH)
    return MacroState(
        dx=np.full(links, float(link_length)),
        rho=np.full(links, float(rho)),
        V=np.full(links, float(V)),
        rho_jam=rho_jam,
        **kwargs,
    )


@dataclass
class ContourGrid:
    """Time by space matrices of flow (veh/s), speed (m/s) and density (veh/m)"""

    times: np.ndarray
    positions: np.ndarray
    flow: np.ndarray
    speed: np.ndarray
    density: np.ndarray

    @property
    def shape(self):
        return self.flow.shape

    def rows(self, quantity):
        """Header row then one row per sample time, for CSV emission"""
        matrix = getattr(self, quantity)
        yield ["t", *self.positions.tolist()]
        for t, row in zip(self.times.tolist(), matrix.tolist()):
            yield [t, *row]
