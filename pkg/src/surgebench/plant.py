"""Identified thruster model and the surge-velocity plant built from it."""

from __future__ import annotations

from dataclasses import dataclass, field

from .ratpoly import TransferFunction, tf_series

# Identified force-command-to-thrust dynamics of the benchmark thruster:
# two zeros, four poles, all stable, minimum phase.
DEFAULT_THRUSTER_NUM = (330.8, 16550.0, 5854.0)
DEFAULT_THRUSTER_DEN = (1.0, 135.1, 18130.0, 550400.0, 134700.0)
DEFAULT_MASS = 2.0  # kg


@dataclass(frozen=True)
class PlantParams:
    thruster_num: tuple = DEFAULT_THRUSTER_NUM
    thruster_den: tuple = DEFAULT_THRUSTER_DEN
    mass: float = DEFAULT_MASS

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("plant.mass must be > 0")
        object.__setattr__(self, "thruster_num", tuple(float(c) for c in self.thruster_num))
        object.__setattr__(self, "thruster_den", tuple(float(c) for c in self.thruster_den))


def thruster_tf(params: PlantParams = PlantParams()) -> TransferFunction:
    """Thruster dynamics from command to thrust force."""
    return TransferFunction(params.thruster_num, params.thruster_den)


def surge_plant(params: PlantParams = PlantParams()) -> TransferFunction:
    """Force-to-velocity plant: thruster cascaded with the rigid-body
    integrator 1/(m s).  Type-1 by construction (one pole at the origin)."""
    return tf_series(thruster_tf(params), TransferFunction([1.0], [params.mass, 0.0]))
