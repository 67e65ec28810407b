"""Minimal dense real linear algebra: products, LU solves, matrix exponential.

Everything operates on plain ``numpy`` double-precision arrays.  Matrices are
row-major 2-D arrays, vectors 1-D arrays; construction helpers reject
non-finite entries so that downstream stepping code can assume clean data.
"""

import numpy as np

__all__ = [
    "DenseMatError",
    "SingularMatrixError",
    "as_matrix",
    "as_vector",
    "mat_mul",
    "solve",
    "expm",
]


class DenseMatError(ValueError):
    """Bad shape or non-finite data handed to a dense kernel."""


class SingularMatrixError(DenseMatError):
    """Pivot collapse in an LU solve."""


def as_matrix(a, square=False):
    """Validate and return ``a`` as a float64 2-D array with finite entries."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise DenseMatError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if square and m.shape[0] != m.shape[1]:
        raise DenseMatError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DenseMatError("matrix has non-finite entries")
    return m


def as_vector(v):
    """Validate and return ``v`` as a float64 1-D array with finite entries."""
    x = np.asarray(v, dtype=float)
    if x.ndim != 1:
        raise DenseMatError(f"expected a 1-D vector, got ndim={x.ndim}")
    if not np.all(np.isfinite(x)):
        raise DenseMatError("vector has non-finite entries")
    return x


def mat_mul(a, b):
    """Dense product ``a @ b`` with an explicit dimension check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DenseMatError(
            f"inner dimensions do not match: {a.shape} x {b.shape}"
        )
    return a @ b


def solve(a, b):
    """Solve ``a @ x = b`` by LU with partial pivoting.

    Raises :class:`SingularMatrixError` when a pivot falls below
    ``1e-14 * max|a|``, i.e. the system is numerically singular.
    """
    a = as_matrix(a, square=True)
    b2 = np.asarray(b, dtype=float)
    rhs = b2 if b2.ndim == 2 else b2.reshape(-1, 1)
    if rhs.shape[0] != a.shape[0]:
        raise DenseMatError(
            f"rhs rows {rhs.shape[0]} do not match matrix order {a.shape[0]}"
        )
    import warnings

    import scipy.linalg as sla

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    scale = np.abs(a).max()
    if scale == 0.0 or pivots.min() < 1e-14 * scale:
        raise SingularMatrixError(
            f"numerically singular matrix (min pivot {pivots.min():.3e}, "
            f"max entry {scale:.3e})"
        )
    x = sla.lu_solve((lu, piv), rhs, check_finite=False)
    return x if b2.ndim == 2 else x.ravel()


# Pade-13 numerator coefficients for expm (Higham 2005).
_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
# 1-norm threshold below which the degree-13 approximant is accurate to eps.
_THETA13 = 5.371920351148152


def expm(m):
    """Matrix exponential by scaling and squaring with a degree-13 Pade
    approximant.

    The argument is scaled by ``2**-s`` until its 1-norm is below the
    standard Pade-13 threshold (about 5.37), the rational approximant is
    evaluated, and the result is squared ``s`` times (Higham, SIAM J. Matrix
    Anal. Appl. 26(4), 2005).
    """
    a = as_matrix(m, square=True)
    n = a.shape[0]
    ident = np.eye(n)

    norm = np.abs(a).sum(axis=0).max() if n else 0.0
    if norm == 0.0:
        return ident.copy()

    n_squarings = 0
    if norm > _THETA13:
        n_squarings = int(np.ceil(np.log2(norm / _THETA13)))
        a = a / (2.0 ** n_squarings)

    b = _PADE13
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (
        a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
        + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident
    )
    v = (
        a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
        + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    )
    r = solve(v - u, v + u)
    for _ in range(n_squarings):
        r = r @ r
    return r
