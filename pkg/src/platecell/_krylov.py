"""Block preconditioned conjugate gradients with kernel projection.

One Krylov loop serves every symmetric positive semidefinite system in the
package (vector cell problems, scalar potential problems).  Columns of the
right-hand side iterate together but carry independent step sizes, and a
projection callback removes the operator kernel (rigid translations /
constants) from every iterate, which is the gauge fixing of the methods
that call this.
"""

import numpy as np

from .errors import ConvergenceError


def block_pcg(matvec, diag, project, rhs, tol, max_iter, callback=None):
    """Solve A x = rhs column-wise with Jacobi preconditioning.

    Args:
        matvec: function (n, m) -> (n, m) applying the operator.
        diag: (n,) positive operator diagonal (Jacobi preconditioner).
        project: function projecting (n, m) onto the orthogonal complement of
            the kernel, in place; identity for trivial kernels.
        rhs: (n, m) right-hand sides.
        tol: per-column relative residual target.
        max_iter: iteration cap.
        callback: optional f(iteration, x) hook, called after each update.

    Returns:
        (x, history): solution (n, m), list of per-iteration residual arrays.

    Raises:
        ConvergenceError: some column is still above tol at the cap.
    """
    d = np.where(diag > 0, diag, 1.0)[:, None]
    b = project(rhs.copy())
    bnorm = np.linalg.norm(b, axis=0)
    bnorm = np.where(bnorm > 0, bnorm, 1.0)
    x = np.zeros_like(b)
    r = b.copy()
    z = project(r / d)
    p = z.copy()
    rz = np.einsum("ij,ij->j", r, z)
    rel = np.linalg.norm(r, axis=0) / bnorm
    history = [rel.copy()]
    active = rel > tol
    it = 0
    while active.any():
        if it >= max_iter:
            raise ConvergenceError(
                "PCG: %d of %d columns above tol=%g after %d iterations "
                "(worst relative residual %.3e)"
                % (int(active.sum()), rhs.shape[1], tol, it, float(rel.max())),
                residual_history=[h.tolist() for h in history])
        q = matvec(p)
        pq = np.einsum("ij,ij->j", p, q)
        ok = active & (pq > 0)
        alpha = np.where(ok, rz / np.where(pq > 0, pq, 1.0), 0.0)
        x += alpha * p
        r -= alpha * q
        rel = np.linalg.norm(r, axis=0) / bnorm
        history.append(rel.copy())
        active = rel > tol
        z = project(r / d)
        rz_new = np.einsum("ij,ij->j", r, z)
        beta = np.where(active & (rz > 0), rz_new / np.where(rz > 0, rz, 1.0), 0.0)
        p = z + beta * p
        rz = rz_new
        it += 1
        if callback is not None:
            callback(it, x)
    return project(x), history
