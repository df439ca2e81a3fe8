"""Registry of named systems and leader fields.

Scenario files refer to vector fields by name only; the fields themselves
are code registered here (built-ins below, user fields via register_*).
Keeping fields out of config files keeps every Jacobian analytic.
"""

import math

import numpy as np

from .errors import InvalidInputError
from .model import PartitionedSystem

_SYSTEMS = {}
_LEADER_FIELDS = {}


def register_system(system, replace=False):
    """Add a PartitionedSystem to the registry under system.name."""
    if system.name in _SYSTEMS and not replace:
        raise InvalidInputError(f"system '{system.name}' is already registered")
    _SYSTEMS[system.name] = system
    return system


def register_leader_field(name, dynamics, replace=False):
    """Add a leader field (t, x_L) -> dx_L/dt under the given name."""
    if name in _LEADER_FIELDS and not replace:
        raise InvalidInputError(f"leader field '{name}' is already registered")
    _LEADER_FIELDS[name] = dynamics
    return dynamics


def system(name):
    if name not in _SYSTEMS:
        raise InvalidInputError(
            f"unknown system '{name}'; registered: {sorted(_SYSTEMS)}")
    return _SYSTEMS[name]


def leader_field(name):
    if name not in _LEADER_FIELDS:
        raise InvalidInputError(
            f"unknown leader field '{name}'; registered: {sorted(_LEADER_FIELDS)}")
    return _LEADER_FIELDS[name]


def available_systems():
    return tuple(sorted(_SYSTEMS))


def available_leader_fields():
    return tuple(sorted(_LEADER_FIELDS))


# ---------------------------------------------------------------------------
# rolling disc: x = (contact point, steering angle, rolling angle),
# y = (x1, x2), z = (x3, x4); driftless, two controls.

def _zero_drift4(t, x):
    return np.zeros(4)


def _disc_f1(x):
    return np.array([math.cos(x[2]), math.sin(x[2]), 0.0, 1.0])


def _disc_f1_jac(x):
    J = np.zeros((4, 4))
    J[0, 2] = -math.sin(x[2])
    J[1, 2] = math.cos(x[2])
    return J


def _disc_f2(x):
    return np.array([0.0, 0.0, 1.0, 0.0])


def _zero_jac4(x):
    return np.zeros((4, 4))


ROLLING_DISC = register_system(PartitionedSystem(
    name="rolling-disc", n=4, n1=2, n2=2, m=2,
    drift=_zero_drift4,
    control_fields=(_disc_f1, _disc_f2),
    control_jacobians=(_disc_f1_jac, _zero_jac4),
))


# ---------------------------------------------------------------------------
# unicycle: x = (position, heading), fully stabilized block (n2 = 0).

def _zero_drift3(t, x):
    return np.zeros(3)


def _uni_f1(x):
    return np.array([math.cos(x[2]), math.sin(x[2]), 0.0])


def _uni_f1_jac(x):
    J = np.zeros((3, 3))
    J[0, 2] = -math.sin(x[2])
    J[1, 2] = math.cos(x[2])
    return J


def _uni_f2(x):
    return np.array([0.0, 0.0, 1.0])


def _zero_jac3(x):
    return np.zeros((3, 3))


UNICYCLE = register_system(PartitionedSystem(
    name="unicycle", n=3, n1=3, n2=0, m=2,
    drift=_zero_drift3,
    control_fields=(_uni_f1, _uni_f2),
    control_jacobians=(_uni_f1_jac, _zero_jac3),
))


# ---------------------------------------------------------------------------
# leader fields

def _figure_eight(t, xL):
    c = math.cos(0.1 * t)
    s = math.sin(0.1 * t)
    c2 = c * c
    # Denominator 4 c^4 - 3 c^2 + 1 >= 7/16 for all t; no singularities.
    den = 4.0 * c2 * c2 - 3.0 * c2 + 1.0
    return np.array([0.2 * c, -0.2, -0.2 * s * (c2 + 0.5) / den])


def _stationary(t, xL):
    return np.zeros(len(xL))


register_leader_field("figure-eight", _figure_eight)
register_leader_field("stationary", _stationary)
