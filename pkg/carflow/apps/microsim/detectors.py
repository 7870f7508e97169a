"""
Stop-bar detectors and throughput counting
"""

from dataclasses import dataclass

from django.core.exceptions import ValidationError


@dataclass(frozen=True)
class DetectorRecord:
    """One front-bumper crossing of a detector.

    flow is 3600 / headway in veh/h, None for the first crossing.
    gap is None when the vehicle has no real leader.
    """

    vehicle_id: int
    time: float
    v: float
    a: float
    gap: float
    flow: float
    position: float = 0.0


class Detector:
    def __init__(self, position):
        self.position = position
        self.records = []

    def __repr__(self):
        return f"Detector(x={self.position}, crossings={len(self.records)})"

    def __iter__(self):
        return iter(self.records)

    def crossing_time(self, x_old, x_new, t, dt):
        """Interpolated time the front bumper passes the detector, or None"""
        if not x_old <= self.position < x_new:
            return None
        return t + dt * (self.position - x_old) / (x_new - x_old)

    def observe(self, crossings):
        """Append crossings (time, vehicle_id, v, a, gap) observed within one step"""
        for time, vehicle_id, v, a, gap in sorted(crossings, key=lambda item: item[0]):
            flow = None
            if self.records and time > self.records[-1].time:
                flow = 3600.0 / (time - self.records[-1].time)
            self.records.append(
                DetectorRecord(
                    vehicle_id=vehicle_id,
                    time=time,
                    v=v,
                    a=a,
                    gap=gap,
                    flow=flow,
                    position=self.position,
                )
            )


def throughput(records, window):
    """Number of crossings with time in [0, window]"""
    if window <= 0:
        raise ValidationError(f"window must be positive, got {window}", code="window")
    return sum(1 for record in records if 0.0 <= record.time <= window + 1e-9)
