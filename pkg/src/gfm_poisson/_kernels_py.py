"""Pure-NumPy versions of the compiled kernels in ``_kernels.pyx``.

Same signatures and return conventions; used when the extension is not built
or ``GFM_PURE_PYTHON=1`` is set.
"""

import numpy as np

CONVERGED, MAX_ITER, BREAKDOWN = 0, 1, 2


def matvec5(diag, west, east, south, north, x, out=None):
    if out is None:
        out = np.empty_like(x)
    np.multiply(diag, x, out=out)
    out[1:, :] += west[1:, :] * x[:-1, :]
    out[:-1, :] += east[:-1, :] * x[1:, :]
    out[:, 1:] += south[:, 1:] * x[:, :-1]
    out[:, :-1] += north[:, :-1] * x[:, 1:]
    return out


def _dot(a, b):
    return float(np.dot(a.ravel(), b.ravel()))


def cg5(diag, west, east, south, north, b, x, tol, max_iter, jacobi=False, callback=None):
    """Conjugate gradients on the 5-point operator, updating ``x`` in place.

    Returns ``(iterations, relative_residual, status)``.  Convergence is
    confirmed on the true residual ``b - A x``; if the recursive residual
    drifted, the iteration restarts from the current iterate.
    """
    bnorm = np.sqrt(_dot(b, b))
    if bnorm == 0.0:
        x[...] = 0.0
        return 0, 0.0, CONVERGED
    inv_diag = 1.0 / diag if jacobi else None
    ap = np.empty_like(b)

    r = b - matvec5(diag, west, east, south, north, x, ap)
    it = 0
    relres = np.sqrt(_dot(r, r)) / bnorm
    while True:
        if relres <= tol:
            return it, relres, CONVERGED
        z = r * inv_diag if jacobi else r
        p = z.copy()
        rz = _dot(r, z)
        while it < max_iter:
            matvec5(diag, west, east, south, north, p, ap)
            pap = _dot(p, ap)
            if not np.isfinite(pap) or pap <= 0.0:
                return it, relres, BREAKDOWN
            alpha = rz / pap
            x += alpha * p
            r -= alpha * ap
            it += 1
            if callback is not None:
                callback(x)
            relres = np.sqrt(_dot(r, r)) / bnorm
            if not np.isfinite(relres):
                return it, relres, BREAKDOWN
            if relres <= tol:
                break
            z = r * inv_diag if jacobi else r
            rz_new = _dot(r, z)
            p *= rz_new / rz
            p += z
            rz = rz_new
        r = b - matvec5(diag, west, east, south, north, x, ap)
        relres = np.sqrt(_dot(r, r)) / bnorm
        if relres <= tol:
            return it, relres, CONVERGED
        if it >= max_iter:
            return it, relres, MAX_ITER
