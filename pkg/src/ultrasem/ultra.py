"""One-dimensional spectral building blocks.

Functions are represented by Chebyshev coefficients; differentiation maps
them into ultraspherical (Gegenbauer) coefficient spaces of increasing
parameter, where the derivative and basis-conversion operators are sparse
and banded.  Grids are Chebyshev extrema grids, stored ascending in
``[-1, 1]``.
"""

import math

import numpy as np
import scipy.sparse as sp
from scipy.fft import dct
from scipy.linalg import solve_banded


def diff_operator(lam, n):
    """Banded differentiation matrix of order ``lam``.

    Maps Chebyshev coefficients of ``p`` to the ultraspherical
    coefficients (parameter ``lam``) of the ``lam``-th derivative of
    ``p``.  The matrix is n-by-n and has a single nonzero diagonal at
    offset ``+lam`` with entries ``2^(lam-1) (lam-1)! (lam, lam+1, ...)``.

    Parameters
    ----------
    lam : int
        Derivative order, at least 1.
    n : int
        Matrix size, at least ``lam + 1``.

    Returns
    -------
    scipy.sparse.csr_matrix
    """
    if lam < 1:
        raise ValueError("derivative order must be a positive integer")
    if n < lam + 1:
        raise ValueError(f"need n >= {lam + 1} for derivative order {lam}")
    scale = 2.0 ** (lam - 1) * math.factorial(lam - 1)
    entries = scale * np.arange(lam, n, dtype=float)
    return sp.diags([entries], [lam], shape=(n, n), format="csr")


def conversion_operator(lam, n):
    """Banded basis-conversion matrix ``S_lam``.

    ``S_0`` converts Chebyshev coefficients to ultraspherical parameter-1
    coefficients; for ``lam > 0``, ``S_lam`` converts parameter ``lam`` to
    parameter ``lam + 1``.  Upper triangular with nonzero diagonals at
    offsets 0 and +2 only.
    """
    if lam < 0:
        raise ValueError("conversion parameter must be nonnegative")
    if n < 3:
        raise ValueError("need n >= 3")
    if lam == 0:
        main = np.full(n, 0.5)
        main[0] = 1.0
        upper2 = np.full(n - 2, -0.5)
    else:
        k = np.arange(n, dtype=float)
        main = lam / (lam + k)
        upper2 = -lam / (lam + k[:-2] + 2.0)
    return sp.diags([main, upper2], [0, 2], shape=(n, n), format="csr")


def cheb_to_ultra(lam, n):
    """Product ``S_{lam-1} ... S_1 S_0`` converting Chebyshev coefficients
    to ultraspherical parameter-``lam`` coefficients (identity for lam=0)."""
    M = sp.identity(n, format="csr")
    for k in range(lam):
        M = conversion_operator(k, n) @ M
    return M


def _mult_x(lam, n):
    """Multiplication-by-x matrix acting on parameter-``lam`` coefficients
    (Chebyshev for lam=0), dense n-by-n."""
    X = np.zeros((n, n))
    if lam == 0:
        X[1, 0] = 1.0
        for k in range(1, n):
            X[k - 1, k] = 0.5
            if k + 1 < n:
                X[k + 1, k] = 0.5
    else:
        X[1, 0] = 1.0 / (2.0 * lam)
        for k in range(1, n):
            X[k - 1, k] = (k + 2.0 * lam - 1.0) / (2.0 * (k + lam))
            if k + 1 < n:
                X[k + 1, k] = (k + 1.0) / (2.0 * (k + lam))
    return X


def mult_operator(f_coeffs, lam, n):
    """Banded matrix multiplying parameter-``lam`` coefficient vectors by
    the polynomial with Chebyshev coefficients ``f_coeffs``.

    The bandwidth equals the degree of ``f``.  Entries are exact for any
    operand polynomial of degree at most ``n - 1 - deg(f)``: the operator
    is built at an enlarged size and cropped so truncation never corrupts
    the returned block.
    """
    if lam not in (0, 1, 2):
        raise ValueError("multiplication supported for parameters 0, 1, 2")
    f = np.atleast_1d(np.asarray(f_coeffs, dtype=float)).ravel()
    nz = np.nonzero(f)[0]
    if nz.size == 0:
        return sp.csr_matrix((n, n))
    d = int(nz[-1])
    if d >= n:
        raise ValueError(f"multiplier degree {d} too large for size {n}")
    if d == 0:
        return sp.identity(n, format="csr") * f[0]
    N = n + d + 1
    X = _mult_x(lam, N)
    M = f[0] * np.eye(N) + f[1] * X
    Tprev, Tcur = np.eye(N), X
    for j in range(2, d + 1):
        Tnext = 2.0 * (X @ Tcur) - Tprev
        if f[j] != 0.0:
            M += f[j] * Tnext
        Tprev, Tcur = Tcur, Tnext
    out = M[:n, :n].copy()
    out[np.abs(out) < 1e-300] = 0.0
    return sp.csr_matrix(out)


def cheb_points(n):
    """Ascending Chebyshev extrema grid with ``n`` points on [-1, 1].

    Computed in sine form so the grid is exactly symmetric about zero and
    hits the endpoints exactly.
    """
    if n < 2:
        raise ValueError("need at least 2 points")
    j = np.arange(n)
    return np.sin(np.pi * (2 * j - (n - 1)) / (2 * (n - 1)))


def _vals_to_coeffs_along(values, axis):
    v = np.asarray(values, dtype=float)
    n = v.shape[axis]
    if n == 1:
        return v.copy()
    v = np.flip(v, axis=axis)  # transform wants descending-point order
    c = dct(v, type=1, axis=axis) / (n - 1)
    sl = [slice(None)] * v.ndim
    sl[axis] = 0
    c[tuple(sl)] *= 0.5
    sl[axis] = n - 1
    c[tuple(sl)] *= 0.5
    return c


def _coeffs_to_vals_along(coeffs, axis):
    c = np.asarray(coeffs, dtype=float).copy()
    n = c.shape[axis]
    if n == 1:
        return c
    sl = [slice(None)] * c.ndim
    sl[axis] = slice(1, n - 1)
    c[tuple(sl)] *= 0.5
    v = dct(c, type=1, axis=axis)
    return np.flip(v, axis=axis)


def vals_to_coeffs(values, n=None):
    """Chebyshev coefficients of the interpolant through ``values`` sampled
    on the ascending :func:`cheb_points` grid of matching length."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1:
        raise ValueError("expected a 1-D value array")
    if n is not None and v.size != n:
        raise ValueError(f"expected {n} values, got {v.size}")
    return _vals_to_coeffs_along(v, 0)


def coeffs_to_vals(coeffs, n=None):
    """Values of the Chebyshev series on the ascending grid of matching
    length.  Inverse of :func:`vals_to_coeffs` up to roundoff."""
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1:
        raise ValueError("expected a 1-D coefficient array")
    if n is not None and c.size != n:
        raise ValueError(f"expected {n} coefficients, got {c.size}")
    return _coeffs_to_vals_along(c, 0)


def vals_to_coeffs_2d(values):
    """Tensor Chebyshev coefficients ``A[i, j]`` (of ``T_i(s) T_j(r)``) from
    grid values ``V[i, j] = u(r_j, s_i)`` on the ascending tensor grid."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise ValueError("expected a 2-D value array")
    return _vals_to_coeffs_along(_vals_to_coeffs_along(v, 0), 1)


def coeffs_to_vals_2d(coeffs):
    """Grid values from tensor Chebyshev coefficients; inverse of
    :func:`vals_to_coeffs_2d`."""
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 2:
        raise ValueError("expected a 2-D coefficient array")
    return _coeffs_to_vals_along(_coeffs_to_vals_along(c, 0), 1)


def eval_row(x, n):
    """Row vector ``[T_0(x), ..., T_{n-1}(x)]`` so that ``row @ coeffs``
    evaluates a Chebyshev series at ``x in [-1, 1]``."""
    if abs(x) > 1.0:
        raise ValueError("evaluation point must lie in [-1, 1]")
    return np.cos(np.arange(n) * math.acos(x))


def deriv_eval_row(x, n):
    """Row vector evaluating the derivative of a Chebyshev series at ``x``.

    Computed as ``eval_row(x) @ inv(S_0) @ D_1`` with a banded triangular
    solve against ``S_0``; no inverse is ever formed.
    """
    e = eval_row(x, n)
    # solve y S0 = e, i.e. S0^T y = e; S0^T is lower banded with (l, u) = (2, 0)
    ab = np.zeros((3, n))
    ab[0, :] = 0.5
    ab[0, 0] = 1.0
    ab[2, : n - 2] = -0.5
    y = solve_banded((2, 0), ab, e)
    row = np.zeros(n)
    row[1:] = y[:-1] * np.arange(1, n)
    return row


def cheb_diff(coeffs, axis=0):
    """Chebyshev coefficients of the derivative along ``axis``, zero padded
    back to the input length."""
    c = np.asarray(coeffs, dtype=float)
    d = np.polynomial.chebyshev.chebder(c, 1, axis=axis)
    pad = [(0, 0)] * c.ndim
    pad[axis] = (0, 1)
    return np.pad(d, pad)
