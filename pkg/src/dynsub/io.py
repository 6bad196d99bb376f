"""File formats: JSON system files, npz reduction artifacts, CSV tables.

A system file describes substructures (dense matrices or a generator spec
such as ``"chain{n=3, m=1, k=1, c=0}"``), the interface constraints, the
mapping of input channels to driven DOFs, and which substructures count as
physical for sub-cycling.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .coupling import CouplingTopology
from .generators import chain_substructure, frame_substructure
from .models import LinearSubstructure, ModelError, NonlinearSubstructure, SuspensionElement
from .reduction import CraigBamptonReduction
from .solver import CoupledSystem, Trajectory

_GENERATOR_RE = re.compile(r"^\s*(\w+)\s*\{(.*)\}\s*$")


def parse_generator(spec: str) -> tuple[str, dict]:
    """Parse a generator string like ``chain{n=200, m=1, k=1e4, c=0}``."""
    m = _GENERATOR_RE.match(spec)
    if not m:
        raise ModelError(f"malformed generator spec {spec!r}")
    kind, body = m.group(1), m.group(2)
    params = {}
    for part in body.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ModelError(f"malformed generator parameter {part!r} in {spec!r}")
        key, val = (x.strip() for x in part.split("=", 1))
        params[key] = float(val)
    return kind, params


def _build_from_generator(spec: str, boundary_dofs: tuple) -> LinearSubstructure:
    kind, params = parse_generator(spec)
    if kind == "chain":
        return chain_substructure(
            n=int(params.pop("n")),
            m=params.pop("m", 1.0),
            k=params.pop("k", 1.0),
            c=params.pop("c", 0.0),
            grounded=bool(params.pop("grounded", 1.0)),
            boundary_dofs=boundary_dofs,
        )
    if kind == "frame":
        return frame_substructure(
            n=int(params.pop("n", 200)),
            k=params.pop("k", 1e4),
            m_light=params.pop("m_light", 0.05),
            m_heavy=params.pop("m_heavy", 2.0),
            heavy_every=int(params.pop("heavy_every", 8)),
            rayleigh_alpha=params.pop("alpha", 0.5),
            rayleigh_beta=params.pop("beta", 1e-5),
            boundary_dofs=boundary_dofs or None,
        )
    raise ModelError(f"unknown generator kind {kind!r}")


def substructure_to_dict(sub) -> dict:
    if isinstance(sub, LinearSubstructure):
        return {
            "kind": "linear",
            "mass": sub.mass.tolist(),
            "damping": sub.damping.tolist(),
            "stiffness": sub.stiffness.tolist(),
            "internal_dofs": list(sub.internal_dofs),
            "boundary_dofs": list(sub.boundary_dofs),
        }
    if isinstance(sub, NonlinearSubstructure):
        return {
            "kind": "suspension",
            "elements": [
                {
                    "mass": e.mass,
                    "k1": e.k1,
                    "c1": e.c1,
                    "c2": e.c2,
                    "c3": e.c3,
                    "base_excitation_channel": e.base_excitation_channel,
                }
                for e in sub.elements
            ],
            "boundary_mass": sub.boundary_mass,
            "relative_motion": sub.relative_motion,
        }
    raise ModelError(f"cannot serialize {type(sub).__name__}")


def substructure_from_dict(data: dict):
    kind = data.get("kind")
    if kind == "linear":
        boundary = tuple(data.get("boundary_dofs", ()))
        if "generator" in data:
            return _build_from_generator(data["generator"], boundary)
        mass = np.array(data["mass"], dtype=float)
        n = mass.shape[0]
        internal = tuple(data.get("internal_dofs", (i for i in range(n) if i not in boundary)))
        return LinearSubstructure(
            mass=mass,
            damping=np.array(data.get("damping", np.zeros_like(mass)), dtype=float),
            stiffness=np.array(data["stiffness"], dtype=float),
            internal_dofs=internal,
            boundary_dofs=boundary,
        )
    if kind == "suspension":
        elements = tuple(
            SuspensionElement(
                mass=e["mass"],
                k1=e["k1"],
                c1=e["c1"],
                c2=e["c2"],
                c3=e["c3"],
                base_excitation_channel=int(e.get("base_excitation_channel", i)),
            )
            for i, e in enumerate(data["elements"])
        )
        return NonlinearSubstructure(
            elements=elements,
            boundary_mass=float(data.get("boundary_mass", 0.016)),
            relative_motion=bool(data.get("relative_motion", True)),
        )
    raise ModelError(f"unknown substructure kind {kind!r}")


def save_system(
    path,
    substructures: dict,
    topology: CouplingTopology,
    input_map: dict | None = None,
    physical: tuple = (),
    generators: dict | None = None,
) -> None:
    """Write a system file.  ``generators`` may supply compact generator
    strings per substructure id to use instead of dense matrices."""
    subs = {}
    for sid, sub in substructures.items():
        if generators and sid in generators:
            entry = {"kind": "linear", "generator": generators[sid],
                     "boundary_dofs": list(sub.boundary_dofs)}
        else:
            entry = substructure_to_dict(sub)
        subs[sid] = entry
    doc = {
        "substructures": subs,
        "coupling": [
            [[sa, da, ga], [sb, db, gb]] for (sa, da, ga), (sb, db, gb) in topology.constraints
        ],
        "inputs": {
            sid: {str(dof): int(ch) for dof, ch in chans.items()}
            for sid, chans in (input_map or {}).items()
        },
        "physical": list(physical),
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def load_system(path) -> tuple[CoupledSystem, dict]:
    """Read a system file; returns (system, input channel map)."""
    doc = json.loads(Path(path).read_text())
    subs = {sid: substructure_from_dict(d) for sid, d in doc["substructures"].items()}
    constraints = tuple(
        ((a[0], int(a[1]), int(a[2])), (b[0], int(b[1]), int(b[2])))
        for a, b in doc.get("coupling", [])
    )
    topology = CouplingTopology(constraints=constraints)
    system = CoupledSystem(
        substructures=subs,
        topology=topology,
        physical=tuple(doc.get("physical", ())),
    )
    input_map = {
        sid: {int(dof): int(ch) for dof, ch in chans.items()}
        for sid, chans in doc.get("inputs", {}).items()
    }
    return system, input_map


def save_reduction(path, red: CraigBamptonReduction) -> None:
    np.savez(
        path,
        retained_modes=red.retained_modes,
        constraint_modes=red.constraint_modes,
        transform=red.transform,
        reduced_mass=red.reduced_mass,
        reduced_stiffness=red.reduced_stiffness,
        reduced_damping=red.reduced_damping,
        retained_frequencies=red.retained_frequencies,
        internal_dofs=np.asarray(red.internal_dofs, dtype=int),
        boundary_dofs=np.asarray(red.boundary_dofs, dtype=int),
        truncation_frequency=np.array(
            np.nan if red.truncation_frequency is None else red.truncation_frequency
        ),
    )


def load_reduction(path) -> CraigBamptonReduction:
    with np.load(path) as data:
        trunc = float(data["truncation_frequency"])
        return CraigBamptonReduction(
            retained_modes=data["retained_modes"],
            constraint_modes=data["constraint_modes"],
            transform=data["transform"],
            reduced_mass=data["reduced_mass"],
            reduced_stiffness=data["reduced_stiffness"],
            reduced_damping=data["reduced_damping"],
            retained_frequencies=data["retained_frequencies"],
            internal_dofs=tuple(int(x) for x in data["internal_dofs"]),
            boundary_dofs=tuple(int(x) for x in data["boundary_dofs"]),
            truncation_frequency=None if np.isnan(trunc) else trunc,
        )


def trajectory_columns(traj: Trajectory, system: CoupledSystem | None = None, all_dofs: bool = False):
    """Column specification (label, sub_id, kind, dof) for CSV export.

    Defaults to boundary DOFs of every substructure plus all DOFs of
    nonlinear substructures; ``all_dofs`` exports everything.
    """
    cols = []
    for sid in traj.states:
        n = traj.dof_counts[sid]
        if all_dofs or system is None:
            dofs = range(n)
        else:
            sub = system.substructures[sid]
            dofs = list(sub.boundary_dofs)
            if isinstance(sub, NonlinearSubstructure):
                dofs = list(sub.internal_dofs) + dofs
        for dof in dofs:
            cols.append((f"{sid}.u{dof}", sid, "u", dof))
            cols.append((f"{sid}.v{dof}", sid, "v", dof))
    return cols


def save_trajectory_csv(path, traj: Trajectory, system: CoupledSystem | None = None, all_dofs: bool = False) -> None:
    """Trajectory CSV: time, selected displacements/velocities, multipliers."""
    cols = trajectory_columns(traj, system, all_dofs)
    header = ["time"] + [c[0] for c in cols] + [f"lambda{i}" for i in range(traj.multipliers.shape[1])]
    table = [traj.times]
    for _, sid, kind, dof in cols:
        table.append(traj.displacement(sid, dof) if kind == "u" else traj.velocity(sid, dof))
    for i in range(traj.multipliers.shape[1]):
        table.append(traj.multipliers[:, i])
    data = np.column_stack(table)
    np.savetxt(path, data, delimiter=",", header=",".join(header), comments="", fmt="%.17g")


def load_csv_columns(path) -> tuple[list, np.ndarray]:
    """Read a CSV written by this package; returns (header names, data)."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def save_signals_csv(path, times: np.ndarray, channels: np.ndarray) -> None:
    channels = np.atleast_2d(np.asarray(channels, dtype=float))
    if channels.shape[0] != len(times):
        channels = channels.T
    header = ["time"] + [f"ch{i}" for i in range(channels.shape[1])]
    np.savetxt(
        path,
        np.column_stack([times, channels]),
        delimiter=",",
        header=",".join(header),
        comments="",
        fmt="%.17g",
    )


def load_signals_csv(path) -> tuple[np.ndarray, np.ndarray]:
    header, data = load_csv_columns(path)
    if not header or header[0] != "time":
        raise ModelError(f"{path} is not a signals CSV (first column must be time)")
    return data[:, 0], data[:, 1:]


def input_tables(system: CoupledSystem, input_map: dict, channels: np.ndarray) -> dict:
    """Expand channel signals into per-substructure force tables.

    ``input_map`` maps substructure id to {dof: channel}; suspension elements
    additionally pull their ``base_excitation_channel`` onto the wheel DOF.
    """
    n_samples = channels.shape[0]
    tables = {}
    for sid, sub in system.substructures.items():
        table = np.zeros((n_samples, sub.n_dofs))
        used = False
        if isinstance(sub, NonlinearSubstructure):
            for i, e in enumerate(sub.elements):
                if e.base_excitation_channel >= 0:
                    if e.base_excitation_channel >= channels.shape[1]:
                        raise ModelError(
                            f"element {i} of {sid!r} references channel "
                            f"{e.base_excitation_channel}, have {channels.shape[1]}"
                        )
                    table[:, i] = channels[:, e.base_excitation_channel]
                    used = True
        for dof, ch in (input_map.get(sid) or {}).items():
            if ch >= channels.shape[1]:
                raise ModelError(f"{sid!r} DOF {dof} references channel {ch}, have {channels.shape[1]}")
            table[:, dof] += channels[:, ch]
            used = True
        if used:
            tables[sid] = table
    return tables
