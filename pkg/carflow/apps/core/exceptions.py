"""
Exceptions raised by the simulation engines and the scenario parser
"""


class CarflowError(Exception):
    """Base class for carflow errors"""


class ScenarioError(CarflowError):
    """A scenario document does not follow the schema"""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class InvalidStateError(CarflowError):
    """An acceleration law was evaluated outside its domain"""


class UnavoidableCollisionError(InvalidStateError):
    """Gipps safe-speed radicand is negative: no braking can avoid the leader"""


class CollisionError(CarflowError):
    """A corridor step produced a negative gap between two vehicles"""

    def __init__(self, follower_id, leader_id, time, gap, dump=None):
        self.follower_id = follower_id
        self.leader_id = leader_id
        self.time = time
        self.gap = gap
        self.dump = dump or []
        super().__init__(
            f"collision at t={time:.2f}s: vehicle {follower_id} behind "
            f"vehicle {leader_id}, gap {gap:.4f} m"
        )


class StabilityError(CarflowError):
    """Macro discretization violates the dt * v_max <= dx condition"""

    def __init__(self, inequality):
        self.inequality = inequality
        super().__init__(f"CFL condition violated: {inequality}")
