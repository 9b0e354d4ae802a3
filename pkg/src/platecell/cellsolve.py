"""Discrete cell problems on the periodic RVE (torus^2 x interval).

The minimization is over nodal 3-vector fields phi on a structured trilinear
hexahedral grid: n1 x n2 in-plane element columns (periodically identified,
no duplicated nodes) times n3 layers through the thickness [-1/2, 1/2] with
free ends.  The strain of a candidate field is

    sym( d1 phi, d2 phi, (1/gamma) d3 phi )

and the load contributes iota(B + x3 G) with iota the 2x2 -> 3x3 upper-left
embedding, so the energy is the volume average of the per-phase quadratic
form over 2x2x2 Gauss points (exact for the x3-quadratic load term).

The stationarity system is solved matrix-free: one 24x24 element kernel per
phase, gather -> batched GEMM -> scatter via bincount, Jacobi-preconditioned
conjugate gradients with the 3-dimensional translation kernel projected out
each iteration.  All six unit Voigt loads iterate together (block right-hand
side) so the effective membrane/bending/coupling tensor comes from six solves
and a bilinear energy closure.
"""

import numpy as np

from ._krylov import block_pcg
from .errors import ConfigError, NumericalError
from .material import SQRT2

_GA = ((1.0 - 1.0 / np.sqrt(3.0)) / 2.0, (1.0 + 1.0 / np.sqrt(3.0)) / 2.0)


# ---------------------------------------------------------------------------
# Grid, loads, fields
# ---------------------------------------------------------------------------

class RVEGrid:
    """Structured RVE discretization parameters."""

    def __init__(self, n1, n2, n3, gamma, box_side):
        self.n1, self.n2, self.n3 = int(n1), int(n2), int(n3)
        self.gamma = float(gamma)
        self.box_side = float(box_side)
        if self.n1 < 2 or self.n2 < 2 or self.n1 % 2 or self.n2 % 2:
            raise ConfigError("grid: n1, n2 must be even and >= 2")
        if self.n3 < 2:
            raise ConfigError("grid: n3 must be >= 2")
        if not self.gamma > 0:
            raise ConfigError("grid: gamma must be > 0")
        if not self.box_side > 0:
            raise ConfigError("grid: box_side must be > 0")

    @property
    def n_nodes(self):
        return self.n1 * self.n2 * (self.n3 + 1)

    @property
    def n_elements(self):
        return self.n1 * self.n2 * self.n3

    def to_dict(self):
        return {"n1": self.n1, "n2": self.n2, "n3": self.n3,
                "gamma": self.gamma, "box_side": self.box_side}

    def __repr__(self):
        return "RVEGrid(%dx%dx%d, gamma=%g, L=%g)" % (
            self.n1, self.n2, self.n3, self.gamma, self.box_side)


class CellLoad:
    """Membrane (B) and bending (G) symmetric 2x2 load matrices."""

    def __init__(self, B=None, G=None):
        self.B = self._check(B, "B")
        self.G = self._check(G, "G")

    @staticmethod
    def _check(M, name):
        if M is None:
            return np.zeros((2, 2))
        M = np.asarray(M, dtype=float)
        if M.shape != (2, 2):
            raise ConfigError("load.%s must be 2x2" % name)
        if np.max(np.abs(M - M.T)) > 1e-14 * max(1.0, np.max(np.abs(M))):
            raise ConfigError("load.%s must be symmetric within 1e-14" % name)
        return 0.5 * (M + M.T)


class CorrectorField:
    """Nodal corrector phi: (n1, n2, n3+1) grid of 3-vectors, mean zero."""

    def __init__(self, values, grid, residuals=None):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n1, grid.n2, grid.n3 + 1, 3):
            raise ConfigError("CorrectorField values must be (n1, n2, n3+1, 3)")
        self.values = values
        self.grid = grid
        self.residuals = [] if residuals is None else residuals

    def flat(self):
        return self.values.reshape(-1)


# The six unit loads, orthonormal Voigt order (B11, B22, s2*B12 | G11, G22, s2*G12).
_UNIT2 = (np.array([[1.0, 0.0], [0.0, 0.0]]),
          np.array([[0.0, 0.0], [0.0, 1.0]]),
          np.array([[0.0, 1.0 / SQRT2], [1.0 / SQRT2, 0.0]]))


def unit_loads():
    loads = [CellLoad(B=U) for U in _UNIT2]
    loads += [CellLoad(G=U) for U in _UNIT2]
    return loads


def sym2_to_voigt3(M):
    """Orthonormal Voigt vector (M11, M22, sqrt2*M12) of a symmetric 2x2 M."""
    M = np.asarray(M, dtype=float)
    return np.array([M[0, 0], M[1, 1], SQRT2 * 0.5 * (M[0, 1] + M[1, 0])])


# ---------------------------------------------------------------------------
# Element machinery
# ---------------------------------------------------------------------------

def _shape_gradients():
    """Reference-cell shape-function gradients at the 8 Gauss points.

    Returns (dN, gz): dN has shape (8 gauss, 3 dirs, 8 nodes) on the unit
    reference cell, gz the zeta-coordinates of the Gauss points.  Local node
    and Gauss indices both use l = ix + 2*iy + 4*iz ordering.
    """
    dN = np.empty((8, 3, 8))
    gz = np.empty(8)
    lin = ((lambda s: 1.0 - s, lambda s: s), (-1.0, 1.0))
    for q in range(8):
        qx, qy, qz = q & 1, (q >> 1) & 1, (q >> 2) & 1
        xi, eta, zeta = _GA[qx], _GA[qy], _GA[qz]
        gz[q] = zeta
        for l in range(8):
            dx, dy, dz = l & 1, (l >> 1) & 1, (l >> 2) & 1
            fx, fy, fz = lin[0][dx](xi), lin[0][dy](eta), lin[0][dz](zeta)
            dN[q, 0, l] = lin[1][dx] * fy * fz
            dN[q, 1, l] = fx * lin[1][dy] * fz
            dN[q, 2, l] = fx * fy * lin[1][dz]
    return dN, gz


def _strain_matrices(grid):
    """B-matrices (8 gauss, 6 voigt, 24 dof) incl. the (1/gamma) d3 scaling."""
    dN, gz = _shape_gradients()
    hx = grid.box_side / grid.n1
    hy = grid.box_side / grid.n2
    hz = 1.0 / grid.n3
    sc = np.array([1.0 / hx, 1.0 / hy, 1.0 / (grid.gamma * hz)])
    B = np.zeros((8, 6, 24))
    for q in range(8):
        gx, gy, gzs = dN[q, 0] * sc[0], dN[q, 1] * sc[1], dN[q, 2] * sc[2]
        for l in range(8):
            ux, uy, uz = 3 * l, 3 * l + 1, 3 * l + 2
            B[q, 0, ux] = gx[l]
            B[q, 1, uy] = gy[l]
            B[q, 2, uz] = gzs[l]
            B[q, 3, uy] = gzs[l] / SQRT2
            B[q, 3, uz] = gy[l] / SQRT2
            B[q, 4, ux] = gzs[l] / SQRT2
            B[q, 4, uz] = gx[l] / SQRT2
            B[q, 5, ux] = gy[l] / SQRT2
            B[q, 5, uy] = gx[l] / SQRT2
    return B, gz


class CellOperator:
    """Matrix-free stiffness operator of one cell problem.

    Holds the gather/scatter maps, the per-phase 24x24 kernels, the Jacobi
    diagonal, and the Gauss-point load strains; everything downstream
    (corrector solves, energies, effective tensors) goes through here.
    """

    def __init__(self, grid, phases, materials):
        if (phases.n1, phases.n2) != (grid.n1, grid.n2):
            raise ConfigError("phase grid is %dx%d but the RVE grid wants %dx%d"
                              % (phases.n1, phases.n2, grid.n1, grid.n2))
        present = np.unique(phases.cell_phase)
        missing = [int(p) for p in present if int(p) not in materials]
        if missing:
            raise ConfigError("material table lacks phase ids %s" % missing)
        self.grid = grid
        self.phases = phases
        self.materials = materials
        n1, n2, n3 = grid.n1, grid.n2, grid.n3
        self.ndof = 3 * grid.n_nodes

        # --- connectivity -------------------------------------------------
        i, j, k = np.meshgrid(np.arange(n1), np.arange(n2), np.arange(n3),
                              indexing="ij")
        edof = np.empty((grid.n_elements, 24), dtype=np.int64)
        for l in range(8):
            dx, dy, dz = l & 1, (l >> 1) & 1, (l >> 2) & 1
            node = (((i + dx) % n1) * n2 + (j + dy) % n2) * (n3 + 1) + (k + dz)
            edof[:, 3 * l] = 3 * node.ravel()
            edof[:, 3 * l + 1] = 3 * node.ravel() + 1
            edof[:, 3 * l + 2] = 3 * node.ravel() + 2
        self.edof = edof
        self.layer = k.ravel()                      # thickness layer per element

        # phase per element (constant along the column)
        self.phase_ids = [int(p) for p in present]
        remap = {pid: n for n, pid in enumerate(self.phase_ids)}
        col = np.vectorize(remap.get)(phases.cell_phase)
        self.phase_el = np.repeat(col.reshape(-1), n3)
        self.phase_groups = [np.flatnonzero(self.phase_el == p)
                             for p in range(len(self.phase_ids))]

        # --- element kernels ----------------------------------------------
        B, gz = _strain_matrices(grid)
        self.Bq = B                                  # (8, 6, 24)
        self.wq = 1.0 / (8.0 * grid.n_elements)      # volume-average weight
        hz = 1.0 / n3
        self.zq = -0.5 + (np.arange(n3)[:, None] + gz[None, :]) * hz   # (n3, 8)
        self.forms = np.stack([materials[pid].q0.voigt for pid in self.phase_ids])
        self.ke = np.einsum("qci,pcd,qdj->pij", B, self.forms, B) * self.wq

        diag = np.zeros(self.ndof)
        ke_diag = np.einsum("pii->pi", self.ke)
        np.add.at(diag, edof.ravel(), ke_diag[self.phase_el].ravel())
        self.jacobi = diag

    # --- kernel projection -------------------------------------------------
    def project(self, U):
        """Remove the nodal mean of each displacement component (in place)."""
        V = U.reshape(-1, 3, U.shape[-1]) if U.ndim == 2 else U.reshape(-1, 3)
        V -= V.mean(axis=0, keepdims=True)
        return U

    # --- operator application ----------------------------------------------
    def matvec(self, U):
        """Apply the stiffness operator to U of shape (ndof, m)."""
        Ue = U[self.edof]                            # (n_el, 24, m)
        Ve = np.empty_like(Ue)
        for p, sel in enumerate(self.phase_groups):
            Ve[sel] = np.matmul(self.ke[p], Ue[sel])
        out = np.empty_like(U)
        flat = self.edof.ravel()
        for c in range(U.shape[1]):
            out[:, c] = np.bincount(flat, weights=Ve[..., c].ravel(),
                                    minlength=self.ndof)
        return out

    # --- loads ---------------------------------------------------------------
    def load_strains(self, load):
        """Voigt load strain iota(B + x3 G) per (layer, gauss): (n3, 8, 6)."""
        eps = np.zeros((self.grid.n3, 8, 6))
        B, G = load.B, load.G
        z = self.zq
        eps[..., 0] = B[0, 0] + z * G[0, 0]
        eps[..., 1] = B[1, 1] + z * G[1, 1]
        eps[..., 5] = SQRT2 * (B[0, 1] + z * G[0, 1])
        return eps

    def rhs(self, loads):
        """Right-hand sides -f for a list of loads: (ndof, m)."""
        m = len(loads)
        out = np.zeros((self.ndof, m))
        flat = self.edof.ravel()
        for c, load in enumerate(loads):
            eps = self.load_strains(load)                       # (n3, 8, 6)
            # per (phase, layer) element load vector
            fe = np.einsum("qci,pcd,kqd->pki", self.Bq, self.forms, eps) * self.wq
            gathered = fe[self.phase_el, self.layer]            # (n_el, 24)
            out[:, c] = -np.bincount(flat, weights=gathered.ravel(),
                                     minlength=self.ndof)
        return out

    # --- strains and energies ------------------------------------------------
    def corrector_strains(self, u):
        """Gauss-point strains of a nodal field u (ndof,): (n_el, 8, 6)."""
        return np.einsum("qck,ek->eqc", self.Bq, u[self.edof])

    def total_strains(self, load, u=None):
        eps = self.load_strains(load)[self.layer]               # (n_el, 8, 6)
        if u is not None:
            eps = eps + self.corrector_strains(u)
        return eps

    def energy_product(self, tau_a, tau_b):
        """Quadrature inner product tau_a : Q0 : tau_b over the cell."""
        total = 0.0
        for p, sel in enumerate(self.phase_groups):
            total += np.einsum("eqc,cd,eqd->", tau_a[sel], self.forms[p],
                               tau_b[sel])
        return float(total * self.wq)

    def energy(self, load, u=None):
        tau = self.total_strains(load, u)
        return self.energy_product(tau, tau)

    # --- solver ---------------------------------------------------------------
    def solve(self, rhs, tol=1e-8, max_iter=None, callback=None):
        """Block Jacobi-PCG with per-iteration kernel projection.

        Args:
            rhs: (ndof, m) right-hand sides (solved simultaneously).
            tol: relative residual target per column.
            max_iter: iteration cap; default 20*sqrt(ndof).
            callback: optional f(iteration, x) hook (e.g. energy tracing).

        Returns:
            (x, history): solution (ndof, m) and per-iteration list of
            per-column relative residuals.

        Raises:
            ConvergenceError: a column missed tol within the cap.
        """
        if max_iter is None:
            max_iter = int(20.0 * np.sqrt(self.ndof)) + 10
        return block_pcg(self.matvec, self.jacobi, self.project, rhs,
                         tol, max_iter, callback=callback)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def cell_energy(grid, phases, materials, load, phi=None):
    """Volume-averaged cell energy of a load plus (optional) corrector."""
    op = CellOperator(grid, phases, materials)
    u = None if phi is None else phi.flat()
    return op.energy(load, u)


def solve_corrector(grid, phases, materials, load, tol=1e-8, callback=None):
    """Minimize the cell energy over correctors for one fixed load."""
    if not tol > 0:
        raise ConfigError("solve_corrector: tol must be > 0")
    op = CellOperator(grid, phases, materials)
    rhs = op.rhs([load])
    x, history = op.solve(rhs, tol=tol, callback=callback)
    values = x[:, 0].reshape(grid.n1, grid.n2, grid.n3 + 1, 3)
    return CorrectorField(values, grid, residuals=[h[0] for h in history])


class CoupledEffectiveTensor:
    """6x6 coupled membrane/bending tensor with provenance."""

    def __init__(self, matrix, grid, residuals, asymmetry):
        self.matrix = matrix
        self.grid = grid
        self.residuals = residuals
        self.asymmetry = asymmetry


class EffectiveBendingForm:
    """3x3 Voigt representation of the effective bending form."""

    def __init__(self, voigt3, parent=None):
        voigt3 = np.asarray(voigt3, dtype=float)
        if voigt3.shape != (3, 3):
            raise ConfigError("EffectiveBendingForm.voigt3 must be 3x3")
        self.voigt3 = 0.5 * (voigt3 + voigt3.T)
        self.parent = parent


def coupled_tensor(grid, phases, materials, tol=1e-8):
    """Solve the six unit loads and close the energy bilinearly.

    Entry (a,b) equals (E(load_a + load_b) - E(load_a) - E(load_b)) / 2 by
    the polarization identity; since the minimizer is linear in the load the
    closure uses the six stored minimizers directly.
    """
    op = CellOperator(grid, phases, materials)
    loads = unit_loads()
    rhs = op.rhs(loads)
    X, history = op.solve(rhs, tol=tol)
    taus = [op.total_strains(loads[a], X[:, a]) for a in range(6)]
    M = np.empty((6, 6))
    for a in range(6):
        for b in range(a, 6):
            M[a, b] = M[b, a] = op.energy_product(taus[a], taus[b])
    asym = float(np.max(np.abs(M - M.T)))
    M = 0.5 * (M + M.T)
    w = np.linalg.eigvalsh(M)
    if w[0] <= 0:
        raise NumericalError("coupled tensor is not positive definite "
                             "(min eigenvalue %g); the solve is under-resolved "
                             "or the material table is invalid" % w[0])
    final = [float(h) for h in history[-1]]
    return CoupledEffectiveTensor(M, grid, final, asym)


def effective_bending(ct):
    """Schur complement of the bending block: Q_GG - Q_GB Q_BB^-1 Q_BG.

    This realizes the exact minimization over the membrane offset B.
    """
    M = ct.matrix
    Qbb, Qbg, Qgg = M[:3, :3], M[:3, 3:], M[3:, 3:]
    try:
        c = np.linalg.cholesky(Qbb)
    except np.linalg.LinAlgError:
        raise NumericalError("membrane block of the coupled tensor is not SPD; "
                             "cannot reduce over the membrane offset")
    y = np.linalg.solve(c, Qbg)
    return EffectiveBendingForm(Qgg - y.T @ y, parent=ct)


def effective_form(grid, phases, materials, tol=1e-8):
    """Convenience pipeline: coupled tensor -> effective bending form."""
    return effective_bending(coupled_tensor(grid, phases, materials, tol=tol))


def qgamma_eval(q, G):
    """Evaluate the effective bending form on a symmetric 2x2 matrix.

    Args:
        q: EffectiveBendingForm or plain (3, 3) Voigt matrix.
        G: symmetric 2x2 matrix.
    """
    voigt3 = q.voigt3 if isinstance(q, EffectiveBendingForm) else np.asarray(q)
    v = sym2_to_voigt3(G)
    return float(v @ voigt3 @ v)


def _resample_axis(arr, target, axis):
    """Exact block refinement/coarsening of one axis of a phase array."""
    n = arr.shape[axis]
    if target == n:
        return arr
    if target > n:
        if target % n:
            raise ConfigError("rescaled count %d is not a multiple of %d along "
                              "axis %d" % (target, n, axis))
        return np.repeat(arr, target // n, axis=axis)
    if n % target:
        raise ConfigError("count %d is not divisible by rescaled count %d along "
                          "axis %d" % (n, target, axis))
    f = n // target
    moved = np.moveaxis(arr, axis, 0)
    blocks = moved.reshape((target, f) + moved.shape[1:])
    if not (blocks == blocks[:, :1]).all():
        raise ConfigError("phase grid is not constant on %d-element blocks along "
                          "axis %d; cannot coarsen it exactly" % (f, axis))
    return np.moveaxis(blocks[:, 0], 0, axis)


def _block_resample(cell_phase, n1b, n2b):
    """Exact block refinement/coarsening of a phase grid to (n1b, n2b)."""
    return _resample_axis(_resample_axis(cell_phase, n1b, 0), n2b, 1)


def gamma_rescale_check(grid, phases, materials, tol=1e-8):
    """Frobenius distance between the two equivalent cell formulations.

    Formulation A solves with the (1/gamma)-scaled transverse derivative on
    the unit-thickness cell.  Formulation B compresses the in-plane period by
    gamma (box L/gamma, medium block-resampled onto gamma*n1 x gamma*n2
    columns) and uses unscaled derivatives.  The two continuum problems agree
    exactly; the discrete values differ through resolution only, so the
    distance must shrink under mesh refinement and vanish identically at
    gamma = 1.
    """
    from .microstructure import PhaseGrid

    g = grid.gamma
    n1b = g * grid.n1
    n2b = g * grid.n2
    if abs(n1b - round(n1b)) > 1e-9 or abs(n2b - round(n2b)) > 1e-9:
        raise ConfigError("gamma_rescale_check: gamma*n1 and gamma*n2 must be "
                          "integral (gamma=%g, n1=%d, n2=%d)" % (g, grid.n1, grid.n2))
    n1b, n2b = int(round(n1b)), int(round(n2b))
    qa = effective_form(grid, phases, materials, tol=tol).voigt3

    grid_b = RVEGrid(n1b, n2b, grid.n3, 1.0, grid.box_side / g)
    phases_b = PhaseGrid(n1b, n2b, grid_b.box_side,
                         _block_resample(phases.cell_phase, n1b, n2b))
    qb = effective_form(grid_b, phases_b, materials, tol=tol).voigt3
    return float(np.linalg.norm(qa - qb))
