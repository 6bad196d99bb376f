"""Shared fixtures: desk-scale models and excitation builders."""

import numpy as np
import pytest

from dynsub import CoupledSystem, LinearSubstructure, SolverConfig
from dynsub.generators import chain_substructure, frame_analog, suspension_substructure


@pytest.fixture(scope="session")
def desk():
    """Default 200-DOF frame analog coupled to 4 suspensions."""
    subs, topology = frame_analog()
    return CoupledSystem(substructures=subs, topology=topology, physical=("suspension",))


@pytest.fixture(scope="session")
def desk_frame(desk):
    return desk.substructures["frame"]


@pytest.fixture(scope="session")
def desk_suspension(desk):
    return desk.substructures["suspension"]


def multisine_table(times, n_channels, freqs=(5.0, 12.0, 23.0, 41.0, 77.0),
                    amps=(2.0, 2.0, 2.0, 1.0, 1.0), seed0=0):
    """Deterministic multisine per channel (distinct phases per channel)."""
    out = np.zeros((len(times), n_channels))
    for ch in range(n_channels):
        rng = np.random.default_rng(seed0 + ch)
        phases = rng.uniform(0, 2 * np.pi, len(freqs))
        for f, a, p in zip(freqs, amps, phases):
            out[:, ch] += a * np.sin(2 * np.pi * f * times + p)
    return out


def wheel_forces(system, sub_id, times):
    """Force table driving the wheel (internal) DOFs of a suspension bank."""
    susp = system.substructures[sub_id]
    internal = list(susp.internal_dofs)
    table = np.zeros((len(times), susp.n_dofs))
    table[:, internal] = multisine_table(times, len(internal))
    return table


def linear_suspension_analog(n_elements=4, wheel_mass=0.16, attach_mass=0.016,
                             k1=35.0, c_visc=0.65 + 10.0 / 0.55):
    """All-linear stand-in for the suspension bank (viscous damper only)."""
    n = 2 * n_elements
    mass = np.diag([wheel_mass] * n_elements + [attach_mass] * n_elements)
    stiffness = np.zeros((n, n))
    damping = np.zeros((n, n))
    for e in range(n_elements):
        w, a = e, n_elements + e
        for mat, val in ((stiffness, k1), (damping, c_visc)):
            mat[w, w] += val
            mat[a, a] += val
            mat[w, a] -= val
            mat[a, w] -= val
    return LinearSubstructure(
        mass=mass, damping=damping, stiffness=stiffness,
        internal_dofs=tuple(range(n_elements)),
        boundary_dofs=tuple(range(n_elements, n)),
    )
