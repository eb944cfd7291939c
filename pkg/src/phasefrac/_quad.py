"""Composite-Simpson quadrature helpers shared by the potential and profile code."""
from __future__ import annotations

from typing import Callable

import numpy as np


def simpson(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, panels: int) -> float:
    """Integrate f over [a, b] with `panels` Simpson panels (2*panels+1 evaluations)."""
    if panels < 1:
        raise ValueError("panels must be >= 1")
    if a == b:
        return 0.0
    x = np.linspace(a, b, 2 * panels + 1)
    y = np.asarray(f(x), dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite integrand value in quadrature")
    w = (b - a) / panels / 6.0
    return float(w * (y[0:-1:2].sum() + 4.0 * y[1::2].sum() + y[2::2].sum()))


def cumulative_simpson(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                       panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative integral of f from a, tabulated at the panel edges.

    Returns (nodes, values) with nodes[0] = a, nodes[-1] = b and
    values[k] = integral over [a, nodes[k]]; per-panel Simpson rule.
    """
    if panels < 1:
        raise ValueError("panels must be >= 1")
    x = np.linspace(a, b, 2 * panels + 1)
    y = np.asarray(f(x), dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite integrand value in quadrature")
    w = (b - a) / panels / 6.0
    panel = w * (y[0:-1:2] + 4.0 * y[1::2] + y[2::2])
    values = np.concatenate(([0.0], np.cumsum(panel)))
    return x[0::2], values
