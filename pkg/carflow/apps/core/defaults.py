"""
Default model constants for car following and macro experiments.

Every default used anywhere in carflow comes from this module: the shared
micro notation defaults, the IIDM/Helly parameters and the per-class reaction
time and minimal gap.
"""

# Shared car following defaults
DT = 0.05  # s
V_MAX = 20.0  # m/s
VEHICLE_LENGTH = 5.0  # m
A_MAX = 1.5  # m/s^2
B = 2.0  # m/s^2, desired deceleration (positive)
G_MIN = 4.0  # m
TAU = 2.05  # s

# IIDM and Helly model parameters
DELTA1 = 8.0
DELTA2 = 4.0
ALPHA1 = 0.5  # 1/s
ALPHA2 = 0.25  # 1/s^2

# (tau, g_min) per vehicle class
CLASS_HEADWAY = {
    "ordinary": (2.05, 4.0),
    "acc": (1.1, 3.0),
    "cacc": (0.8, 3.0),
}

# Experiment setup
HORIZON = 60.0  # s
QUEUE_SIZE = 80  # "infinite" standing queue; a pure CACC fleet discharges at most ~50 veh/min
WINDOW = 60.0  # s, throughput counting window
RED_LIGHT_DISTANCE = 300.0  # m, second intersection downstream of the first
A_MAX_LEVELS = (0.8, 1.5, 2.5)
PENETRATION_LEVELS = (0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0)
ENSEMBLE_RUNS = 100

# Free-road leader sits this far ahead; every gap-dependent term saturates
FREE_ROAD_DISTANCE = 1e7  # m

# Macro red-light scenario
MACRO_LINKS = 240
MACRO_LINK_LENGTH = 5.0  # m
MACRO_SIGNAL_LINK = 50
MACRO_RED_LINK = 110

# Platoon management
JOIN_RANGE_FACTOR = 1.5
SEPARATION_FACTOR = 3.0
