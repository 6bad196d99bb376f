"""Interface topology and the dual-coupling operator.

Substructures are coupled pairwise at interface DOFs.  Each constraint links
one DOF of one substructure to one DOF of another with opposite signs; the
signed boolean matrices built here select boundary velocity rows (G) and
inject interface-force intensities into the matching momentum rows (L).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.linalg


class CouplingError(ValueError):
    """Raised for inconsistent interface topologies or singular operators."""


@dataclass(frozen=True)
class CouplingTopology:
    """Signed collocation of interface DOFs across substructures.

    ``constraints`` is a sequence of interface constraints, each given as two
    ``(substructure_id, dof_index, sign)`` triples with opposite signs.
    """

    constraints: tuple

    def __post_init__(self):
        normalized = []
        seen = set()
        for c, entry in enumerate(self.constraints):
            if len(entry) != 2:
                raise CouplingError(
                    f"constraint {c} must touch exactly two substructures, got {len(entry)}"
                )
            (sa, da, ga), (sb, db, gb) = entry
            if ga not in (-1, 1) or gb not in (-1, 1):
                raise CouplingError(f"constraint {c} signs must be +1 or -1, got {ga}, {gb}")
            if ga == gb:
                raise CouplingError(f"constraint {c} signs must be opposite, got {ga}, {gb}")
            if sa == sb:
                raise CouplingError(f"constraint {c} links substructure {sa!r} to itself")
            key = frozenset(((sa, int(da)), (sb, int(db))))
            if key in seen:
                raise CouplingError(f"constraint {c} duplicates an existing interface pair")
            seen.add(key)
            normalized.append(((sa, int(da), int(ga)), (sb, int(db), int(gb))))
        object.__setattr__(self, "constraints", tuple(normalized))

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def substructure_ids(self) -> tuple:
        ids = []
        for entry in self.constraints:
            for sid, _, _ in entry:
                if sid not in ids:
                    ids.append(sid)
        return tuple(ids)

    def entries_for(self, sub_id) -> list:
        """(constraint index, dof, sign) triples touching one substructure."""
        out = []
        for c, entry in enumerate(self.constraints):
            for sid, dof, sign in entry:
                if sid == sub_id:
                    out.append((c, dof, sign))
        return out


def locator_matrix(topology: CouplingTopology, sub_id, n_dofs: int) -> np.ndarray:
    """L: maps interface-force intensities into the momentum rows of a state.

    Shape (2*n_dofs, n_constraints); entries in {-1, 0, +1}.
    """
    l = np.zeros((2 * n_dofs, topology.n_constraints))
    for c, dof, sign in topology.entries_for(sub_id):
        if not 0 <= dof < n_dofs:
            raise CouplingError(f"constraint {c} references DOF {dof} of {sub_id!r} (has {n_dofs})")
        l[n_dofs + dof, c] = sign
    return l


def compatibility_matrix(topology: CouplingTopology, sub_id, n_dofs: int) -> np.ndarray:
    """G: selects signed boundary velocity rows of a state.

    Shape (n_constraints, 2*n_dofs); the G-weighted sum of coupled states over
    all substructures vanishes when interface velocities match.
    """
    return locator_matrix(topology, sub_id, n_dofs).T


@dataclass(frozen=True)
class InterfaceOperator:
    """Condensed interface operator H = sum_s G_s @ D_s^{-1} @ L_s, factorized."""

    matrix: np.ndarray
    _lu: tuple

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return scipy.linalg.lu_solve(self._lu, rhs)


def steklov_poincare(
    topology: CouplingTopology,
    solve_by_sub: Mapping,
    n_dofs_by_sub: Mapping,
) -> InterfaceOperator:
    """Assemble and factorize the interface operator.

    ``solve_by_sub`` maps substructure id to a callable applying the inverse
    of that substructure's effective matrix to a block of columns.  The
    operator is square (one row and column per interface constraint) and is
    assembled once per simulation.
    """
    n_lam = topology.n_constraints
    if n_lam == 0:
        raise CouplingError("topology has no interface constraints to condense")
    h = np.zeros((n_lam, n_lam))
    for sub_id in topology.substructure_ids():
        if sub_id not in solve_by_sub:
            raise CouplingError(f"no effective-matrix factorization supplied for {sub_id!r}")
        n = n_dofs_by_sub[sub_id]
        l = locator_matrix(topology, sub_id, n)
        h += l.T @ solve_by_sub[sub_id](l)
    try:
        lu = scipy.linalg.lu_factor(h)
    except scipy.linalg.LinAlgError as exc:
        raise CouplingError(f"interface operator is singular: {exc}") from exc
    if not np.all(np.isfinite(lu[0])) or np.abs(np.diag(lu[0])).min() < 1e-14 * np.abs(h).max():
        raise CouplingError(
            "interface operator is singular; check for redundant or dangling constraints"
        )
    return InterfaceOperator(matrix=h, _lu=lu)
