"""Desk-scale model builders: mass-spring chains and the frame analog.

The frame analog stands in for a vehicle-frame FE model at desk scale: a
grounded chain of light masses with periodic heavy masses (the heavy/light
pattern opens a spectral gap, so a handful of fixed-interface modes covers
the low-frequency band well) plus four designated attachment DOFs carrying
nonlinear suspension elements.
"""

from __future__ import annotations

import numpy as np

from .coupling import CouplingTopology
from .models import LinearSubstructure, ModelError, NonlinearSubstructure, SuspensionElement, rayleigh_damping

# identified suspension coefficients used throughout the desk experiments
SUSPENSION_DEFAULTS = dict(mass=0.160, k1=35.0, c1=0.65, c2=10.0, c3=0.55)


def chain_matrices(
    n: int, m: float, k: float, c: float = 0.0, grounded: bool = True
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mass, damping, stiffness of a uniform chain of ``n`` masses.

    Springs of stiffness ``k`` (and dampers ``c``) connect neighbours; with
    ``grounded`` the first mass is additionally tied to ground, giving the
    tridiagonal [2, -1] stiffness pattern with a free far end.
    """
    if n < 1:
        raise ModelError(f"chain needs at least one mass, got n={n}")
    mass = np.eye(n) * m
    stiffness = np.zeros((n, n))
    damping = np.zeros((n, n))
    for i in range(n - 1):
        for mat, val in ((stiffness, k), (damping, c)):
            mat[i, i] += val
            mat[i + 1, i + 1] += val
            mat[i, i + 1] -= val
            mat[i + 1, i] -= val
    if grounded:
        stiffness[0, 0] += k
        damping[0, 0] += c
    return mass, damping, stiffness


def chain_substructure(
    n: int,
    m: float = 1.0,
    k: float = 1.0,
    c: float = 0.0,
    grounded: bool = True,
    boundary_dofs: tuple = (),
) -> LinearSubstructure:
    """Uniform chain as a linear substructure with chosen boundary DOFs."""
    mass, damping, stiffness = chain_matrices(n, m, k, c, grounded)
    boundary = tuple(int(b) for b in boundary_dofs)
    internal = tuple(i for i in range(n) if i not in boundary)
    return LinearSubstructure(
        mass=mass,
        damping=damping,
        stiffness=stiffness,
        internal_dofs=internal,
        boundary_dofs=boundary,
    )


def frame_substructure(
    n: int = 200,
    k: float = 1e4,
    m_light: float = 0.05,
    m_heavy: float = 2.0,
    heavy_every: int = 8,
    rayleigh_alpha: float = 0.5,
    rayleigh_beta: float = 1e-5,
    boundary_dofs: tuple | None = None,
) -> LinearSubstructure:
    """Grounded heavy/light chain with four attachment DOFs by default."""
    if n < 8:
        raise ModelError(f"frame analog needs at least 8 DOFs, got {n}")
    mass, _, stiffness = chain_matrices(n, m_light, k, 0.0, grounded=True)
    masses = np.full(n, m_light)
    if heavy_every > 0:
        masses[::heavy_every] = m_heavy
    mass = np.diag(masses)
    damping = rayleigh_damping(mass, stiffness, rayleigh_alpha, rayleigh_beta)
    if boundary_dofs is None:
        quarter = n // 4
        boundary_dofs = (quarter - 1, 2 * quarter - 1, 3 * quarter - 1, n - 1)
    boundary = tuple(int(b) for b in boundary_dofs)
    internal = tuple(i for i in range(n) if i not in boundary)
    return LinearSubstructure(
        mass=mass,
        damping=damping,
        stiffness=stiffness,
        internal_dofs=internal,
        boundary_dofs=boundary,
    )


def suspension_substructure(
    n_elements: int = 4,
    boundary_mass: float = 0.016,
    relative_motion: bool = True,
    coefficients: dict | None = None,
) -> NonlinearSubstructure:
    """Suspension bank with one base-excitation channel per element."""
    coeff = dict(SUSPENSION_DEFAULTS)
    if coefficients:
        coeff.update(coefficients)
    elements = tuple(
        SuspensionElement(base_excitation_channel=i, **coeff) for i in range(n_elements)
    )
    return NonlinearSubstructure(
        elements=elements,
        boundary_mass=boundary_mass,
        relative_motion=relative_motion,
    )


def frame_analog(
    n: int = 200,
    k: float = 1e4,
    m_light: float = 0.05,
    m_heavy: float = 2.0,
    heavy_every: int = 8,
    rayleigh_alpha: float = 0.5,
    rayleigh_beta: float = 1e-5,
    boundary_dofs: tuple | None = None,
    n_suspensions: int = 4,
    boundary_mass: float = 0.016,
    suspension_coefficients: dict | None = None,
) -> tuple[dict, CouplingTopology]:
    """Frame plus suspensions plus the topology pairing their interfaces.

    Returns ({"frame": ..., "suspension": ...}, topology) with one interface
    constraint per attachment: frame boundary DOF (+) against the matching
    suspension attachment DOF (-).
    """
    frame = frame_substructure(
        n=n, k=k, m_light=m_light, m_heavy=m_heavy, heavy_every=heavy_every,
        rayleigh_alpha=rayleigh_alpha, rayleigh_beta=rayleigh_beta,
        boundary_dofs=boundary_dofs,
    )
    if n_suspensions != len(frame.boundary_dofs):
        raise ModelError(
            f"{n_suspensions} suspensions need {n_suspensions} frame boundary DOFs, "
            f"got {len(frame.boundary_dofs)}"
        )
    susp = suspension_substructure(
        n_elements=n_suspensions,
        boundary_mass=boundary_mass,
        coefficients=suspension_coefficients,
    )
    constraints = tuple(
        (("frame", frame.boundary_dofs[e], +1), ("suspension", susp.boundary_dofs[e], -1))
        for e in range(n_suspensions)
    )
    topology = CouplingTopology(constraints=constraints)
    return {"frame": frame, "suspension": susp}, topology
