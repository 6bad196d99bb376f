"""Substructure models and their first-order state-space form.

Two model kinds are supported: matrix-based linear substructures and
parametric nonlinear suspension substructures (lumped wheel mass connected
to an attachment point through a linear spring and a dry-friction damper).

Every substructure of ``n`` physical DOFs is handled by the solvers in
first-order form with state ``Y = [u; v]`` (displacements stacked over
velocities):

    A @ Ydot + R(Y) = F,      A = blockdiag(I, M)

where ``R(Y) = [-v; C v + K u + f_nl(u, v)]`` collects the elastic and
damping forces and external forces are injected into the momentum (velocity)
rows only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np


class ModelError(ValueError):
    """Raised when a substructure definition or state is inconsistent."""


def _as_locked_matrix(a, name: str) -> np.ndarray:
    m = np.array(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ModelError(f"{name} must be a square matrix, got shape {m.shape}")
    m.setflags(write=False)
    return m


def _check_symmetric(m: np.ndarray, name: str, rtol: float = 1e-10) -> None:
    scale = np.abs(m).max()
    if scale > 0 and np.abs(m - m.T).max() > rtol * scale:
        raise ModelError(f"{name} is not symmetric within relative tolerance {rtol}")


@dataclass(frozen=True)
class StateVector:
    """Displacements and velocities of one substructure, Y = [u; v]."""

    displacements: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.displacements, dtype=float)
        v = np.asarray(self.velocities, dtype=float)
        if u.shape != v.shape or u.ndim != 1:
            raise ModelError("displacements and velocities must be 1-D and of equal length")
        object.__setattr__(self, "displacements", u)
        object.__setattr__(self, "velocities", v)

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.displacements, self.velocities])

    @classmethod
    def from_stacked(cls, y: np.ndarray) -> "StateVector":
        y = np.asarray(y, dtype=float)
        if y.ndim != 1 or y.size % 2:
            raise ModelError(f"stacked state must have even length, got {y.shape}")
        n = y.size // 2
        return cls(y[:n], y[n:])


def _stacked(y: Union[StateVector, np.ndarray]) -> np.ndarray:
    if isinstance(y, StateVector):
        return y.stacked
    return np.asarray(y, dtype=float)


@dataclass(frozen=True)
class LinearSubstructure:
    """Linear substructure defined by mass, damping and stiffness matrices.

    ``internal_dofs`` and ``boundary_dofs`` must together cover every DOF
    exactly once; boundary DOFs are the ones exposed for coupling.
    """

    mass: np.ndarray
    damping: np.ndarray
    stiffness: np.ndarray
    internal_dofs: tuple
    boundary_dofs: tuple

    def __post_init__(self):
        m = _as_locked_matrix(self.mass, "mass matrix")
        c = _as_locked_matrix(self.damping, "damping matrix")
        k = _as_locked_matrix(self.stiffness, "stiffness matrix")
        if not (m.shape == c.shape == k.shape):
            raise ModelError(
                f"matrix sizes disagree: mass {m.shape}, damping {c.shape}, stiffness {k.shape}"
            )
        _check_symmetric(m, "mass matrix")
        _check_symmetric(k, "stiffness matrix")
        if np.any(np.diag(m) <= 0):
            raise ModelError("mass matrix must have a strictly positive diagonal")
        n = m.shape[0]
        internal = tuple(int(i) for i in self.internal_dofs)
        boundary = tuple(int(i) for i in self.boundary_dofs)
        cover = sorted(internal + boundary)
        if cover != list(range(n)):
            raise ModelError(
                "internal and boundary DOFs must disjointly cover all "
                f"{n} DOFs, got internal={internal} boundary={boundary}"
            )
        object.__setattr__(self, "mass", m)
        object.__setattr__(self, "damping", c)
        object.__setattr__(self, "stiffness", k)
        object.__setattr__(self, "internal_dofs", internal)
        object.__setattr__(self, "boundary_dofs", boundary)

    @property
    def n_dofs(self) -> int:
        return self.mass.shape[0]


@dataclass(frozen=True)
class SuspensionElement:
    """One wheel-on-suspension unit.

    The restoring force between the wheel and its attachment point is

        f = k1 * x + c1 * xdot + c2 * xdot / (c3 + |xdot|)

    with ``x`` the spring deflection.  The last term is a smoothed
    dry-friction damper; its magnitude is bounded by ``c2`` and its tangent
    slope at rest is ``c2 / c3``.
    """

    mass: float
    k1: float
    c1: float
    c2: float
    c3: float
    base_excitation_channel: int = 0

    def __post_init__(self):
        if self.mass <= 0:
            raise ModelError(f"element mass must be positive, got {self.mass}")
        if self.c3 <= 0:
            raise ModelError(f"velocity-smoothing constant c3 must be positive, got {self.c3}")

    def damper_force(self, xdot: float) -> float:
        return self.c1 * xdot + self.c2 * xdot / (self.c3 + abs(xdot))

    @property
    def tangent_damping(self) -> float:
        """Damper slope d(f_d)/d(xdot) at rest."""
        return self.c1 + self.c2 / self.c3


@dataclass(frozen=True)
class NonlinearSubstructure:
    """Collection of suspension elements sharing one attachment interface each.

    DOF layout: wheel masses first (internal DOFs ``0 .. n_el-1``), then one
    attachment DOF per element (boundary DOFs ``n_el .. 2*n_el-1``).  The
    attachment points carry a small lumped mass ``boundary_mass`` so that the
    first-order mass operator stays invertible.

    With ``relative_motion`` (default) the spring and damper act on the
    wheel-minus-attachment deflection; otherwise on the absolute wheel motion.
    """

    elements: tuple
    boundary_mass: float = 0.016
    relative_motion: bool = True

    def __post_init__(self):
        elements = tuple(self.elements)
        if not elements:
            raise ModelError("a nonlinear substructure needs at least one element")
        for e in elements:
            if not isinstance(e, SuspensionElement):
                raise ModelError(f"expected SuspensionElement, got {type(e).__name__}")
        if self.boundary_mass <= 0:
            raise ModelError(f"boundary (attachment) mass must be positive, got {self.boundary_mass}")
        object.__setattr__(self, "elements", elements)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_dofs(self) -> int:
        return 2 * len(self.elements)

    @property
    def internal_dofs(self) -> tuple:
        return tuple(range(self.n_elements))

    @property
    def boundary_dofs(self) -> tuple:
        return tuple(range(self.n_elements, 2 * self.n_elements))

    @property
    def mass(self) -> np.ndarray:
        return np.diag([e.mass for e in self.elements] + [self.boundary_mass] * self.n_elements)

    def tangent_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """Stiffness and damping matrices of the zero-state linearisation."""
        n = self.n_dofs
        kt = np.zeros((n, n))
        ct = np.zeros((n, n))
        for i, e in enumerate(self.elements):
            w, a = i, self.n_elements + i
            if self.relative_motion:
                for mat, val in ((kt, e.k1), (ct, e.tangent_damping)):
                    mat[w, w] += val
                    mat[a, a] += val
                    mat[w, a] -= val
                    mat[a, w] -= val
            else:
                kt[w, w] += e.k1
                ct[w, w] += e.tangent_damping
        return kt, ct


Substructure = Union[LinearSubstructure, NonlinearSubstructure]


@dataclass(frozen=True)
class FirstOrderForm:
    """First-order view A @ Ydot + R(Y) = F of an n-DOF substructure."""

    n_dofs: int
    mass: np.ndarray
    restoring: Callable[[np.ndarray], np.ndarray]
    tangent: np.ndarray = field(repr=False)

    @property
    def state_size(self) -> int:
        return 2 * self.n_dofs

    @property
    def A(self) -> np.ndarray:
        n = self.n_dofs
        a = np.zeros((2 * n, 2 * n))
        a[:n, :n] = np.eye(n)
        a[n:, n:] = self.mass
        return a

    def inject_force(self, f: np.ndarray) -> np.ndarray:
        """Map a physical force vector into the momentum rows of the state."""
        f = np.asarray(f, dtype=float)
        if f.shape != (self.n_dofs,):
            raise ModelError(f"force vector must have length {self.n_dofs}, got {f.shape}")
        out = np.zeros(2 * self.n_dofs)
        out[self.n_dofs:] = f
        return out


def _linear_restoring(sub: LinearSubstructure) -> Callable[[np.ndarray], np.ndarray]:
    k, c, n = sub.stiffness, sub.damping, sub.n_dofs

    def restoring(y: np.ndarray) -> np.ndarray:
        u, v = y[:n], y[n:]
        out = np.empty(2 * n)
        out[:n] = -v
        out[n:] = k @ u + c @ v
        return out

    return restoring


def _suspension_restoring(sub: NonlinearSubstructure) -> Callable[[np.ndarray], np.ndarray]:
    ne = sub.n_elements
    k1 = np.array([e.k1 for e in sub.elements])
    c1 = np.array([e.c1 for e in sub.elements])
    c2 = np.array([e.c2 for e in sub.elements])
    c3 = np.array([e.c3 for e in sub.elements])
    relative = sub.relative_motion

    def restoring(y: np.ndarray) -> np.ndarray:
        u, v = y[: 2 * ne], y[2 * ne:]
        if relative:
            x = u[:ne] - u[ne:]
            xd = v[:ne] - v[ne:]
        else:
            x = u[:ne]
            xd = v[:ne]
        f = k1 * x + c1 * xd + c2 * xd / (c3 + np.abs(xd))
        out = np.empty(4 * ne)
        out[: 2 * ne] = -v
        out[2 * ne: 3 * ne] = f
        if relative:
            out[3 * ne:] = -f
        else:
            out[3 * ne:] = 0.0
        return out

    return restoring


def restoring_force(sub: Substructure, y: Union[StateVector, np.ndarray]) -> np.ndarray:
    """Evaluate R(Y) = [-v; C v + K u + f_nl(u, v)] for a substructure."""
    yv = _stacked(y)
    n = sub.n_dofs
    if yv.shape != (2 * n,):
        raise ModelError(f"state must have length {2 * n}, got {yv.shape}")
    if isinstance(sub, LinearSubstructure):
        return _linear_restoring(sub)(yv)
    return _suspension_restoring(sub)(yv)


def tangent_at_zero(sub: Substructure) -> np.ndarray:
    """Jacobian of the restoring force at the zero state.

    For a linear substructure this is exactly ``[[0, -I], [K, C]]``; for the
    suspension model the damper slope at rest is ``c1 + c2/c3`` per element.
    """
    n = sub.n_dofs
    r0 = np.zeros((2 * n, 2 * n))
    r0[:n, n:] = -np.eye(n)
    if isinstance(sub, LinearSubstructure):
        r0[n:, :n] = sub.stiffness
        r0[n:, n:] = sub.damping
    else:
        kt, ct = sub.tangent_matrices()
        r0[n:, :n] = kt
        r0[n:, n:] = ct
    return r0


def finite_difference_tangent(
    restoring: Callable[[np.ndarray], np.ndarray],
    state_size: int,
    at: np.ndarray | None = None,
    step: float | None = None,
) -> np.ndarray:
    """Central-difference Jacobian of a restoring-force callable.

    Fallback for user-supplied force laws and cross-check for the analytic
    tangents.  Step defaults to 1e-6 * max(1, ||Y||).
    """
    y0 = np.zeros(state_size) if at is None else np.asarray(at, dtype=float)
    h = step if step is not None else 1e-6 * max(1.0, float(np.linalg.norm(y0)))
    jac = np.empty((state_size, state_size))
    for i in range(state_size):
        e = np.zeros(state_size)
        e[i] = h
        jac[:, i] = (restoring(y0 + e) - restoring(y0 - e)) / (2 * h)
    return jac


def assemble_first_order(sub: Substructure) -> FirstOrderForm:
    """Build the first-order form of a substructure.

    Layout: Y = [u; v], A = blockdiag(I, M), R(Y) = [-v; C v + K u + f_nl];
    external forces enter the velocity-block rows only (see
    :meth:`FirstOrderForm.inject_force`).
    """
    if isinstance(sub, LinearSubstructure):
        restoring = _linear_restoring(sub)
        mass = sub.mass
    elif isinstance(sub, NonlinearSubstructure):
        restoring = _suspension_restoring(sub)
        mass = sub.mass
    else:
        raise ModelError(f"unsupported substructure type {type(sub).__name__}")
    return FirstOrderForm(
        n_dofs=sub.n_dofs,
        mass=mass,
        restoring=restoring,
        tangent=tangent_at_zero(sub),
    )


def rayleigh_damping(mass: np.ndarray, stiffness: np.ndarray, alpha: float = 0.0, beta: float = 0.0) -> np.ndarray:
    """Proportional damping C = alpha*M + beta*K."""
    return alpha * np.asarray(mass, dtype=float) + beta * np.asarray(stiffness, dtype=float)
