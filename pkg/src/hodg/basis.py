"""Modal Taylor basis about the cell centroid.

Basis functions are monomials in the centered, h-scaled coordinates
X = (x - xc)/h, Y = (y - yc)/h:

    order 0: {1}
    order 1: {1, X, Y}
    order 2: {1, X, Y, X^2, X*Y, Y^2}

The scaling keeps mass matrices well conditioned on mixed triangle/quad
meshes; the first function is the constant 1 and its gradient vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# (x exponent, y exponent) per basis function, in modal order
_EXPONENTS = np.array([(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)], dtype=np.int64)

N_BASIS = {0: 1, 1: 3, 2: 6}


@dataclass(frozen=True)
class BasisSet:
    """Taylor basis of a given polynomial order (0, 1 or 2)."""

    order: int

    def __post_init__(self):
        if self.order not in N_BASIS:
            raise ValueError(f"unsupported order {self.order}; expected 0, 1 or 2")

    @property
    def n_basis(self) -> int:
        return N_BASIS[self.order]

    def values(self, x, y, xc: float, yc: float, h: float) -> np.ndarray:
        """Basis values at points; returns shape x.shape + (n_basis,)."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        X = (x - xc) / h
        Y = (y - yc) / h
        nb = self.n_basis
        out = np.empty(X.shape + (nb,))
        for j in range(nb):
            px, py = _EXPONENTS[j]
            out[..., j] = X**px * Y**py
        return out

    def gradients(self, x, y, xc: float, yc: float, h: float):
        """Physical-space first derivatives (d/dx, d/dy) of each basis
        function; two arrays of shape x.shape + (n_basis,)."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        X = (x - xc) / h
        Y = (y - yc) / h
        nb = self.n_basis
        gx = np.zeros(X.shape + (nb,))
        gy = np.zeros(Y.shape + (nb,))
        for j in range(nb):
            px, py = _EXPONENTS[j]
            if px > 0:
                gx[..., j] = px * X ** (px - 1) * Y**py / h
            if py > 0:
                gy[..., j] = py * X**px * Y ** (py - 1) / h
        return gx, gy
