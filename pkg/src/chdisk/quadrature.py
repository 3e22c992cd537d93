"""Fixed quadrature rules on reference triangles and edges.

Loads and Ritz right-hand sides use the degree-2 triangle rule with the
2-point Gauss edge rule; error integrals use the sharper degree-4 / 3-point
pair so the measured rates are not limited by the measuring stick.
"""

from __future__ import annotations

import numpy as np

# degree-2 exact, 3 points: barycentric coordinates and weights (sum 1)
TRI_DEG2 = (
    np.array(
        [
            [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
            [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
            [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
        ]
    ),
    np.array([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]),
)

# degree-4 exact, 6 points (Dunavant)
_A1, _B1 = 0.445948490915965, 0.108103018168070
_A2, _B2 = 0.091576213509771, 0.816847572980459
TRI_DEG4 = (
    np.array(
        [
            [_B1, _A1, _A1],
            [_A1, _B1, _A1],
            [_A1, _A1, _B1],
            [_B2, _A2, _A2],
            [_A2, _B2, _A2],
            [_A2, _A2, _B2],
        ]
    ),
    np.array([0.223381589678011] * 3 + [0.109951743655322] * 3),
)

# Gauss rules on [0, 1]: (points, weights), weights sum 1
_G2 = 0.5 / np.sqrt(3.0)
EDGE_GAUSS2 = (np.array([0.5 - _G2, 0.5 + _G2]), np.array([0.5, 0.5]))

_G3 = 0.5 * np.sqrt(0.6)
EDGE_GAUSS3 = (
    np.array([0.5 - _G3, 0.5, 0.5 + _G3]),
    np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0]),
)
