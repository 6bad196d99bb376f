"""Fidelity metrics: modal assurance criterion, frequency errors, MSE, smoothness."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class MacMatrix:
    """Modal assurance criterion values with mode labels; entries in [0, 1]."""

    values: np.ndarray
    row_labels: tuple
    col_labels: tuple

    @property
    def diagonal(self) -> np.ndarray:
        n = min(self.values.shape)
        return np.array([self.values[i, i] for i in range(n)])

    def max_off_diagonal(self) -> float:
        v = self.values.copy()
        n = min(v.shape)
        v[np.arange(n), np.arange(n)] = 0.0
        return float(v.max()) if v.size else 0.0


def mac(modes_a: np.ndarray, modes_b: np.ndarray) -> MacMatrix:
    """Cross modal assurance criterion between two mode-shape sets.

    Entry (i, j) is |phi_a_i . phi_b_j|^2 normalized by the squared norms, so
    it is invariant to the scaling of either shape and equals 1 for collinear
    shapes.  Modes are the columns; both sets must share the physical
    dimension.
    """
    a = np.atleast_2d(np.asarray(modes_a, dtype=float))
    b = np.atleast_2d(np.asarray(modes_b, dtype=float))
    if a.ndim != 2 or b.ndim != 2 or a.shape[0] != b.shape[0]:
        raise MetricsError(f"mode sets must share the physical dimension: {a.shape} vs {b.shape}")
    norm_a = np.sum(a * a, axis=0)
    norm_b = np.sum(b * b, axis=0)
    if np.any(norm_a == 0) or np.any(norm_b == 0):
        raise MetricsError("zero-norm mode shape")
    cross = a.T @ b
    values = cross**2 / np.outer(norm_a, norm_b)
    return MacMatrix(
        values=values,
        row_labels=tuple(range(1, a.shape[1] + 1)),
        col_labels=tuple(range(1, b.shape[1] + 1)),
    )


@dataclass(frozen=True)
class FrequencyErrorTable:
    """Per-mode relative frequency errors plus their normalized MSE.

    NMSE is defined as mean((f_red - f_full)^2) / mean(f_full^2) over the
    compared modes.
    """

    full: np.ndarray
    reduced: np.ndarray
    relative_errors: np.ndarray
    nmse: float


def frequency_error_table(full_freqs, reduced_freqs, n: int) -> FrequencyErrorTable:
    """Compare the first ``n`` natural frequencies of two models."""
    full = np.asarray(full_freqs, dtype=float)
    red = np.asarray(reduced_freqs, dtype=float)
    if n > len(full) or n > len(red):
        raise MetricsError(f"cannot compare {n} modes: have {len(full)} and {len(red)}")
    full, red = full[:n], red[:n]
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(full != 0, np.abs(red - full) / np.abs(full), np.abs(red - full))
    denom = float(np.mean(full**2))
    nmse = float(np.mean((red - full) ** 2) / denom) if denom > 0 else float(np.mean((red - full) ** 2))
    return FrequencyErrorTable(full=full, reduced=red, relative_errors=rel, nmse=nmse)


def trajectory_mse(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Mean squared error between two equally sampled channels.

    Returns (mse, relative mse) with the relative value normalized by the
    mean square of the reference channel ``b``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise MetricsError(f"channel lengths differ: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    ref = float(np.mean(b**2))
    rel = mse / ref if ref > 0 else (0.0 if mse == 0 else float("inf"))
    return mse, rel


@dataclass(frozen=True)
class Smoothness:
    """Largest and RMS sample-to-sample increment of a channel."""

    max_increment: float
    rms_increment: float
    dt: float


def smoothness(channel: np.ndarray, dt: float) -> Smoothness:
    """First-difference roughness of a sampled channel at spacing ``dt``."""
    x = np.asarray(channel, dtype=float)
    if x.size < 2:
        raise MetricsError("smoothness needs at least two samples")
    d = np.diff(x)
    return Smoothness(
        max_increment=float(np.abs(d).max()),
        rms_increment=float(np.sqrt(np.mean(d**2))),
        dt=float(dt),
    )
