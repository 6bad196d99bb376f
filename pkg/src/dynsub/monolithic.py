"""Reference solvers: primal-assembled monolithic integration and closed forms.

The monolithic solver merges all coupled interface DOFs into shared global
DOFs (hard compatibility) and runs the same trapezoidal predictor-corrector
as the partitioned solver, isolating the coupling error from integrator
differences.  A Newmark average-acceleration variant and the closed-form
damped SDOF solution serve as independent cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.linalg

from .coupling import CouplingError, CouplingTopology
from .models import LinearSubstructure, ModelError, NonlinearSubstructure
from .solver import DivergenceError, SolverConfig, Trajectory


@dataclass(frozen=True)
class FrictionHook:
    """Nonlinear damper remainder acting between two global DOFs.

    The tangent-linear part (slope c2/c3 at rest) lives in the assembled
    damping matrix; this hook adds the remaining zero-slope term
    c2*zd/(c3+|zd|) - (c2/c3)*zd so that the assembled tangent matrices stay
    exact at the origin.
    """

    dof: int
    other: int | None
    c2: float
    c3: float

    def force(self, v: np.ndarray) -> float:
        zd = v[self.dof] if self.other is None else v[self.dof] - v[self.other]
        return self.c2 * zd / (self.c3 + abs(zd)) - (self.c2 / self.c3) * zd


@dataclass(frozen=True)
class AssembledSystem:
    """Primal assembly of a coupled system onto shared global DOFs."""

    mass: np.ndarray
    damping: np.ndarray
    stiffness: np.ndarray
    hooks: tuple
    dof_map: dict

    @property
    def n_dofs(self) -> int:
        return self.mass.shape[0]

    def restoring(self, y: np.ndarray) -> np.ndarray:
        n = self.n_dofs
        u, v = y[:n], y[n:]
        out = np.empty(2 * n)
        out[:n] = -v
        out[n:] = self.stiffness @ u + self.damping @ v
        for hook in self.hooks:
            f = hook.force(v)
            out[n + hook.dof] += f
            if hook.other is not None:
                out[n + hook.other] -= f
        return out

    def tangent_at_zero(self) -> np.ndarray:
        n = self.n_dofs
        r0 = np.zeros((2 * n, 2 * n))
        r0[:n, n:] = -np.eye(n)
        r0[n:, :n] = self.stiffness
        r0[n:, n:] = self.damping
        return r0


def assemble_global(substructures: Mapping, topology: CouplingTopology) -> AssembledSystem:
    """Merge coupled interface DOFs and sum the substructure matrices.

    The global DOF count is the sum of substructure DOF counts minus the
    number of interface constraints.
    """
    offsets = {}
    total = 0
    for sid, sub in substructures.items():
        offsets[sid] = total
        total += sub.n_dofs

    parent = list(range(total))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for c, entry in enumerate(topology.constraints):
        (sa, da, _), (sb, db, _) = entry
        for sid, dof in ((sa, da), (sb, db)):
            if sid not in offsets:
                raise CouplingError(f"constraint {c} references unknown substructure {sid!r}")
            if not 0 <= dof < substructures[sid].n_dofs:
                raise CouplingError(f"constraint {c} references DOF {dof} of {sid!r}")
        ra, rb = find(offsets[sa] + da), find(offsets[sb] + db)
        if ra == rb:
            raise CouplingError(f"constraint {c} is redundant: its DOFs are already merged")
        parent[rb] = ra

    roots = sorted({find(x) for x in range(total)})
    if len(roots) != total - topology.n_constraints:
        raise CouplingError("inconsistent constraint graph")
    gid = {root: i for i, root in enumerate(roots)}
    n_global = len(roots)

    dof_map = {
        sid: np.array([gid[find(offsets[sid] + d)] for d in range(sub.n_dofs)], dtype=int)
        for sid, sub in substructures.items()
    }

    mass = np.zeros((n_global, n_global))
    damping = np.zeros((n_global, n_global))
    stiffness = np.zeros((n_global, n_global))
    hooks = []
    for sid, sub in substructures.items():
        ids = dof_map[sid]
        if isinstance(sub, LinearSubstructure):
            m_s, c_s, k_s = sub.mass, sub.damping, sub.stiffness
        elif isinstance(sub, NonlinearSubstructure):
            m_s = sub.mass
            k_s, c_s = sub.tangent_matrices()
            for i, e in enumerate(sub.elements):
                w = int(ids[i])
                a = int(ids[sub.n_elements + i]) if sub.relative_motion else None
                hooks.append(FrictionHook(dof=w, other=a, c2=e.c2, c3=e.c3))
        else:
            raise ModelError(f"unsupported substructure type {type(sub).__name__}")
        mass[np.ix_(ids, ids)] += m_s
        damping[np.ix_(ids, ids)] += c_s
        stiffness[np.ix_(ids, ids)] += k_s

    return AssembledSystem(
        mass=mass,
        damping=damping,
        stiffness=stiffness,
        hooks=tuple(hooks),
        dof_map=dof_map,
    )


def _gather_states(asys: AssembledSystem, traj_global: np.ndarray) -> dict:
    """Per-substructure views of the global trajectory (shared DOFs repeat)."""
    n = asys.n_dofs
    states = {}
    for sid, ids in asys.dof_map.items():
        states[sid] = np.concatenate(
            [traj_global[:, ids], traj_global[:, n + ids]], axis=1
        )
    return states


def _empty_multipliers(n_steps: int) -> np.ndarray:
    return np.zeros((n_steps + 1, 0))


def _global_forces(asys: AssembledSystem, inputs: Mapping | None, n_steps: int) -> np.ndarray:
    f = np.zeros((n_steps + 1, asys.n_dofs))
    if inputs:
        for sid, table in inputs.items():
            if table is None:
                continue
            table = np.asarray(table, dtype=float)
            ids = asys.dof_map[sid]
            if table.ndim != 2 or table.shape[1] != len(ids):
                raise ModelError(f"input table for {sid!r} must have {len(ids)} columns")
            if table.shape[0] != n_steps + 1:
                raise ModelError(f"input table for {sid!r} must have {n_steps + 1} rows")
            np.add.at(f, (slice(None), ids), table)
    return f


def solve_monolithic(
    asys: AssembledSystem,
    config: SolverConfig,
    inputs: Mapping | None = None,
    initial: np.ndarray | None = None,
) -> Trajectory:
    """Trapezoidal predictor-corrector on the assembled global system.

    Identical stage structure to the partitioned free step, evaluated on the
    merged DOF set; serves as the fidelity oracle for the coupled solvers.
    """
    n = asys.n_dofs
    n_steps = config.n_steps
    forces = _global_forces(asys, inputs, n_steps)
    a = np.zeros((2 * n, 2 * n))
    a[:n, :n] = np.eye(n)
    a[n:, n:] = asys.mass
    d = a + config.gamma * config.dt * asys.tangent_at_zero()
    lu = scipy.linalg.lu_factor(d)

    y = np.zeros(2 * n) if initial is None else np.asarray(initial, dtype=float).copy()
    rhs = -asys.restoring(y)
    rhs[n:] += forces[0]
    ydot = np.concatenate([rhs[:n], np.linalg.solve(asys.mass, rhs[n:])])

    traj = np.empty((n_steps + 1, 2 * n))
    traj[0] = y
    for step in range(1, n_steps + 1):
        force = np.zeros(2 * n)
        force[n:] = forces[step]
        y_pred = y + (1.0 - config.gamma) * config.dt * ydot
        ydot = scipy.linalg.lu_solve(lu, force - asys.restoring(y_pred))
        y = y_pred + config.gamma * config.dt * ydot
        traj[step] = y
        norm = np.abs(y).max()
        if not np.isfinite(norm) or norm > config.divergence_limit:
            raise DivergenceError(step, "global", float(norm), config.divergence_limit)

    return Trajectory(
        times=np.arange(n_steps + 1) * config.dt,
        states=_gather_states(asys, traj),
        multipliers=_empty_multipliers(n_steps),
        dof_counts={sid: len(ids) for sid, ids in asys.dof_map.items()},
    )


def solve_newmark(
    asys: AssembledSystem,
    config: SolverConfig,
    inputs: Mapping | None = None,
    beta: float = 0.25,
    gamma: float = 0.5,
) -> Trajectory:
    """Newmark average-acceleration oracle on a linear assembled system."""
    if asys.hooks:
        raise ModelError("the Newmark oracle supports linear assembled systems only")
    n = asys.n_dofs
    n_steps = config.n_steps
    dt = config.dt
    forces = _global_forces(asys, inputs, n_steps)
    m, c, k = asys.mass, asys.damping, asys.stiffness

    a0 = 1.0 / (beta * dt**2)
    a1 = gamma / (beta * dt)
    a2 = 1.0 / (beta * dt)
    a3 = 1.0 / (2 * beta) - 1.0
    a4 = gamma / beta - 1.0
    a5 = dt / 2 * (gamma / beta - 2.0)
    a6 = dt * (1.0 - gamma)
    a7 = gamma * dt

    k_eff = k + a0 * m + a1 * c
    lu = scipy.linalg.lu_factor(k_eff)

    u = np.zeros(n)
    v = np.zeros(n)
    acc = np.linalg.solve(m, forces[0] - c @ v - k @ u)
    traj = np.empty((n_steps + 1, 2 * n))
    traj[0] = np.concatenate([u, v])
    for step in range(1, n_steps + 1):
        f_eff = forces[step] + m @ (a0 * u + a2 * v + a3 * acc) + c @ (a1 * u + a4 * v + a5 * acc)
        u_new = scipy.linalg.lu_solve(lu, f_eff)
        acc_new = a0 * (u_new - u) - a2 * v - a3 * acc
        v = v + a6 * acc + a7 * acc_new
        u, acc = u_new, acc_new
        traj[step] = np.concatenate([u, v])
        norm = np.abs(traj[step]).max()
        if not np.isfinite(norm) or norm > config.divergence_limit:
            raise DivergenceError(step, "global", float(norm), config.divergence_limit)

    return Trajectory(
        times=np.arange(n_steps + 1) * dt,
        states=_gather_states(asys, traj),
        multipliers=_empty_multipliers(n_steps),
        dof_counts={sid: len(ids) for sid, ids in asys.dof_map.items()},
    )


def analytic_sdof(
    m: float, c: float, k: float, u0: float, v0: float, t
) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form free vibration of the damped single-DOF oscillator.

    Handles the undamped/underdamped, critically damped, and overdamped
    branches; returns displacement and velocity at the requested times.
    """
    if m <= 0 or k <= 0:
        raise ModelError("analytic SDOF needs positive mass and stiffness")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    wn = np.sqrt(k / m)
    zeta = c / (2.0 * np.sqrt(k * m))
    if zeta < 1.0:
        wd = wn * np.sqrt(1.0 - zeta**2)
        a = zeta * wn
        amp_b = (v0 + a * u0) / wd
        decay = np.exp(-a * t)
        u = decay * (u0 * np.cos(wd * t) + amp_b * np.sin(wd * t))
        v = decay * ((-a * u0 + amp_b * wd) * np.cos(wd * t) + (-a * amp_b - u0 * wd) * np.sin(wd * t))
    elif zeta == 1.0:
        b = v0 + wn * u0
        decay = np.exp(-wn * t)
        u = decay * (u0 + b * t)
        v = decay * (v0 - wn * b * t)
    else:
        root = wn * np.sqrt(zeta**2 - 1.0)
        r1, r2 = -zeta * wn + root, -zeta * wn - root
        c1 = (v0 - r2 * u0) / (r1 - r2)
        c2 = u0 - c1
        u = c1 * np.exp(r1 * t) + c2 * np.exp(r2 * t)
        v = c1 * r1 * np.exp(r1 * t) + c2 * r2 * np.exp(r2 * t)
    return u, v
