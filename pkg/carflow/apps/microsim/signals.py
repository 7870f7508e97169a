"""
Traffic signals realized as virtual blocking vehicles
"""

import logging

from carflow.apps.carfollow.laws import LeaderView

logger = logging.getLogger(__name__)


def virtual_leader_for(signal, t, params):
    """Blocking vehicle for a red signal, None while green.

    The blocking vehicle's front is at x_s + g_min + l so the follower's
    standstill equilibrium puts its own front exactly on the stop line.
    """
    spec = getattr(signal, "spec", signal)
    if not spec.is_red(t):
        return None
    return LeaderView.blocking(spec.position, params)


class Signal:
    """A signal on the corridor.

    When the signal turns red, vehicles that can no longer stop before the
    stop line with deceleration b are committed and may pass; everyone else
    upstream of the line stops behind the blocking vehicle.
    """

    def __init__(self, spec):
        self.spec = spec
        self.position = spec.position
        self.committed = set()
        # Before the first switch the signal is red
        self._red = True

    def __repr__(self):
        return f"Signal(x={self.position}, schedule={self.spec.schedule})"

    def update(self, t, vehicles):
        """Advance the signal to time t; returns "green" or "red" on a switch"""
        red = self.spec.is_red(t)
        switched = None
        if red and not self._red:
            self.committed = {
                vehicle.id
                for vehicle in vehicles
                if vehicle.x <= self.position
                and vehicle.v**2 / (2.0 * vehicle.params.b) > self.position - vehicle.x
            }
            switched = "red"
            if self.committed:
                logger.debug(
                    f"Signal at {self.position} m turned red at t={t:.2f}s, "
                    f"committed vehicles: {sorted(self.committed)}"
                )
        elif not red and self._red:
            self.committed = set()
            switched = "green"
        self._red = red
        return switched

    def leader_for(self, t, vehicle, params):
        """Blocking vehicle seen by this vehicle, or None"""
        if vehicle.x > self.position + 1e-9 or vehicle.id in self.committed:
            return None
        return virtual_leader_for(self, t, params)

    def separates(self, t, front, rear):
        """True if the red signal stands between two consecutive vehicles"""
        if not self.spec.is_red(t) or rear.id in self.committed:
            return False
        return front.x > self.position + 1e-9 >= rear.x
