"""Free-energy potentials for the bulk and the boundary phase."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Potential:
    """Scalar free-energy density with its first three derivatives.

    All callables are vectorised over numpy arrays.  The solver only needs
    ``dw``; the higher derivatives serve diagnostics.
    """

    w: Callable
    dw: Callable
    d2w: Callable
    d3w: Callable
    label: str


@dataclass(frozen=True)
class PotentialPair:
    """Bulk and surface potentials entering the coupled weak form."""

    bulk: Potential
    surface: Potential


def double_well(scale: float) -> Potential:
    """The quartic double well scale * (u**2 - 1)**2 with analytic derivatives."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    s = float(scale)
    return Potential(
        w=lambda u: s * (np.square(u) - 1.0) ** 2,
        dw=lambda u: 4.0 * s * (np.square(u) - 1.0) * u,
        d2w=lambda u: 4.0 * s * (3.0 * np.square(u) - 1.0),
        d3w=lambda u: 24.0 * s * np.asarray(u, dtype=float),
        label=f"double_well({s:g})",
    )


def zero_potential() -> Potential:
    """Identically zero potential: the linear regime of the equations."""
    zero = lambda u: np.zeros_like(np.asarray(u, dtype=float))
    return Potential(w=zero, dw=zero, d2w=zero, d3w=zero, label="zero")


_FACTORIES = {"double_well": double_well, "zero": lambda scale=None: zero_potential()}


def potential_from_name(name: str, scale: float | None = None) -> Potential:
    """Look up a potential by configuration name ('double_well' needs a scale)."""
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise ValueError(f"unknown potential {name!r}; known: {sorted(_FACTORIES)}") from None
    if name == "double_well":
        if scale is None:
            raise ValueError("potential 'double_well' requires a scale")
        return factory(scale)
    return factory()
