"""Orthogonal splittings of vector and matrix fields on the plate geometry.

Two decompositions live here.

1. `decompose_mixed`: an L2 splitting of a 3-vector field on the RVE slab
   (periodic in-plane, free ends through the thickness) into a constant mean,
   a gradient part nabla(psi) with psi a nodal scalar, and a remainder that is
   L2-orthogonal to every discrete gradient.  The potential psi solves the
   Neumann/periodic Poisson problem <grad psi, grad chi> = <f - mean, grad chi>
   with the same trilinear elements and 2x2x2 Gauss rule as the cell solver.
   The gradient here is the plain geometric one -- no thickness rescaling --
   so the splitting depends only on the mesh, not on gamma.

   Both output parts are stored as Gauss-point fields ("gauss" layout):
   projecting nabla(psi) back to nodes would re-introduce O(h^2) components
   along gradients and destroy orthogonality, whereas at the quadrature points
   the Galerkin equation makes the remainder orthogonal to machine/solver
   precision.  Constants are also discrete gradients vertically (chi = x3 is
   in the scalar space) and average out horizontally by periodicity, so all
   three parts are mutually orthogonal without extra corrections.

2. `decompose_second_order`: the analogous splitting of a periodic symmetric
   2x2 matrix field on the flat 2-torus into mean + Hessian part + remainder,
   done mode-by-mode in Fourier space where the Hessians of scalars span
   exactly the directions (k tensor k).  The projection is exact per mode, so
   remainders of Hessian inputs and pairings of Hessians against cofactor
   fields vanish to rounding.  `div_cof_residual` checks the companion
   null-Lagrangian identity div(cof grad b) = 0 on sampled vector fields.
"""

import numpy as np

from ._krylov import block_pcg
from .errors import ConfigError

_GA = ((1.0 - 1.0 / np.sqrt(3.0)) / 2.0, (1.0 + 1.0 / np.sqrt(3.0)) / 2.0)

_LAYOUTS = ("nodes", "gauss")


class MixedField:
    """3-vector field on the RVE slab, stored nodally or at Gauss points.

    Args:
        values: (n1, n2, n3+1, 3) for layout "nodes", or
            (n_elements, 8, 3) for layout "gauss".
        grid: RVEGrid the field lives on.
        layout: "nodes" or "gauss".
    """

    def __init__(self, values, grid, layout="nodes"):
        if layout not in _LAYOUTS:
            raise ConfigError("MixedField: layout must be one of %s, got %r"
                              % (_LAYOUTS, layout))
        values = np.asarray(values, dtype=float)
        if layout == "nodes":
            want = (grid.n1, grid.n2, grid.n3 + 1, 3)
        else:
            want = (grid.n_elements, 8, 3)
        if values.shape != want:
            raise ConfigError("MixedField: values shape %s does not match "
                              "layout %r on this grid (want %s)"
                              % (values.shape, layout, want))
        self.values = values
        self.grid = grid
        self.layout = layout


class MixedDecomposition:
    """Result of decompose_mixed: f = mean + potential + solenoidal."""

    def __init__(self, mean, potential, solenoidal, psi, residuals):
        self.mean = mean                # (3,) constant part
        self.potential = potential      # MixedField, layout "gauss"
        self.solenoidal = solenoidal    # MixedField, layout "gauss"
        self.psi = psi                  # (n1, n2, n3+1) nodal scalar
        self.residuals = residuals      # CG relative residual history


# ---------------------------------------------------------------------------
# Scalar trilinear machinery (shared grid, unscaled vertical derivative)
# ---------------------------------------------------------------------------

def _scalar_tables(grid):
    """Shape values N (8,8), gradients B (8,3,8) and weights at Gauss points.

    Node and Gauss orderings are l = ix + 2*iy + 4*iz on the reference cube;
    gradients are physical (element sizes hx, hy, hz = L/n1, L/n2, 1/n3).
    """
    corners = [(ix, iy, iz) for iz in (0, 1) for iy in (0, 1) for ix in (0, 1)]
    hx = grid.box_side / grid.n1
    hy = grid.box_side / grid.n2
    hz = 1.0 / grid.n3
    sc = np.array([1.0 / hx, 1.0 / hy, 1.0 / hz])
    N = np.empty((8, 8))
    B = np.empty((8, 3, 8))
    for q in range(8):
        g = (_GA[q % 2], _GA[(q // 2) % 2], _GA[q // 4])
        for l, (ix, iy, iz) in enumerate(corners):
            f = ((g[0] if ix else 1.0 - g[0]),
                 (g[1] if iy else 1.0 - g[1]),
                 (g[2] if iz else 1.0 - g[2]))
            N[q, l] = f[0] * f[1] * f[2]
            B[q, 0, l] = (1.0 if ix else -1.0) * f[1] * f[2] * sc[0]
            B[q, 1, l] = (1.0 if iy else -1.0) * f[0] * f[2] * sc[1]
            B[q, 2, l] = (1.0 if iz else -1.0) * f[0] * f[1] * sc[2]
    wq = hx * hy * hz / 8.0
    return N, B, wq


def _scalar_edof(grid):
    """(n_elements, 8) node indices, periodic in-plane, layered vertically."""
    n1, n2, n3 = grid.n1, grid.n2, grid.n3
    i, j, k = np.meshgrid(np.arange(n1), np.arange(n2), np.arange(n3),
                          indexing="ij")
    i, j, k = i.ravel(), j.ravel(), k.ravel()
    edof = np.empty((grid.n_elements, 8), dtype=np.int64)
    for dz in (0, 1):
        for dy in (0, 1):
            for dx in (0, 1):
                node = (((i + dx) % n1) * n2 + (j + dy) % n2) * (n3 + 1) \
                    + (k + dz)
                edof[:, dx + 2 * dy + 4 * dz] = node
    return edof


def _to_gauss(field):
    """Interpolate a MixedField to Gauss layout (identity if already there)."""
    if field.layout == "gauss":
        return field.values
    N, _, _ = _scalar_tables(field.grid)
    nodal = field.values.reshape(-1, 3)
    edof = _scalar_edof(field.grid)
    return np.einsum("ql,elc->eqc", N, nodal[edof])


def mixed_inner(a, b):
    """Physical L2 inner product of two fields via the 2x2x2 Gauss rule."""
    if a.grid is not b.grid and a.grid.to_dict() != b.grid.to_dict():
        raise ConfigError("mixed_inner: fields live on different grids")
    _, _, wq = _scalar_tables(a.grid)
    return float(wq * np.sum(_to_gauss(a) * _to_gauss(b)))


def mixed_norm(a):
    return np.sqrt(max(mixed_inner(a, a), 0.0))


def gradient_field(grid, scalar):
    """Discrete gradient of a nodal scalar, as a Gauss-layout MixedField.

    Useful for building fields that are exact gradients of the finite element
    space (e.g. to test that their solenoidal part vanishes).
    """
    scalar = np.asarray(scalar, dtype=float)
    if scalar.shape != (grid.n1, grid.n2, grid.n3 + 1):
        raise ConfigError("gradient_field: scalar must be nodal, shape %s"
                          % ((grid.n1, grid.n2, grid.n3 + 1),))
    _, B, _ = _scalar_tables(grid)
    vals = np.einsum("qcl,el->eqc", B, scalar.reshape(-1)[_scalar_edof(grid)])
    return MixedField(vals, grid, layout="gauss")


def random_mixed_field(grid, seed, scale=1.0):
    """Reproducible nodal white-noise field (for property checks and demos)."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    vals = scale * rng.standard_normal((grid.n1, grid.n2, grid.n3 + 1, 3))
    return MixedField(vals, grid, layout="nodes")


def decompose_mixed(field, tol=1e-10):
    """Split f into mean + gradient + gradient-orthogonal remainder.

    Args:
        field: MixedField (either layout).
        tol: relative residual target for the scalar Poisson solve.

    Returns:
        MixedDecomposition with Gauss-layout parts.
    """
    if not tol > 0:
        raise ConfigError("decompose_mixed: tol must be > 0")
    grid = field.grid
    N, B, wq = _scalar_tables(grid)
    edof = _scalar_edof(grid)
    fg = _to_gauss(field)
    volume = wq * 8.0 * grid.n_elements
    mean = (wq / volume) * fg.sum(axis=(0, 1))

    ke = wq * np.einsum("qci,qcj->ij", B, B)
    n_nodes = grid.n1 * grid.n2 * (grid.n3 + 1)
    jacobi = np.bincount(edof.ravel(),
                         weights=np.broadcast_to(np.diag(ke), edof.shape).ravel(),
                         minlength=n_nodes)

    def matvec(u):
        ue = u[edof]                                  # (E, 8, m)
        ve = np.einsum("ij,ejm->eim", ke, ue)
        out = np.zeros_like(u)
        for c in range(u.shape[1]):
            out[:, c] = np.bincount(edof.ravel(), weights=ve[:, :, c].ravel(),
                                    minlength=n_nodes)
        return out

    def project(u):
        u -= u.mean(axis=0, keepdims=True)
        return u

    fe = wq * np.einsum("qcl,eqc->el", B, fg - mean)
    rhs = np.bincount(edof.ravel(), weights=fe.ravel(),
                      minlength=n_nodes)[:, None]
    max_iter = int(20.0 * np.sqrt(n_nodes)) + 10
    psi, history = block_pcg(matvec, jacobi, project, rhs, tol, max_iter)
    psi = psi[:, 0]

    pot = np.einsum("qcl,el->eqc", B, psi[edof])
    sol = fg - mean - pot
    return MixedDecomposition(
        mean=mean,
        potential=MixedField(pot, grid, layout="gauss"),
        solenoidal=MixedField(sol, grid, layout="gauss"),
        psi=psi.reshape(grid.n1, grid.n2, grid.n3 + 1),
        residuals=[float(h[0]) for h in history])


def orthogonality_report(field, decomposition=None, tol=1e-10):
    """Normalized residuals of the mixed splitting of `field`.

    Returns a dict with keys:
        pot_sol, pot_mean, sol_mean: |<a,b>| / max(|a| |b|, tiny)
        pythagoras: | |f|^2 - |mean|^2 V - |p|^2 - |s|^2 | / |f|^2
        reconstruction: |f - mean - p - s| / |f|
    """
    dec = decomposition if decomposition is not None \
        else decompose_mixed(field, tol=tol)
    grid = field.grid
    _, _, wq = _scalar_tables(grid)
    volume = wq * 8.0 * grid.n_elements
    fg = _to_gauss(field)
    p, s = dec.potential.values, dec.solenoidal.values
    mean = dec.mean

    def nrm(v):
        return np.sqrt(max(wq * np.sum(v * v), 0.0))

    def pair(a, b):
        na, nb = nrm(a), nrm(b)
        return abs(wq * np.sum(a * b)) / max(na * nb, 1e-30)

    mfield = np.broadcast_to(mean, fg.shape)
    nf = max(nrm(fg), 1e-30)
    pyth = abs(nrm(fg) ** 2
               - float(mean @ mean) * volume - nrm(p) ** 2 - nrm(s) ** 2) / nf ** 2
    recon = nrm(fg - mean - p - s) / nf
    return {
        "pot_sol": pair(p, s),
        "pot_mean": pair(p, mfield),
        "sol_mean": pair(s, mfield),
        "pythagoras": pyth,
        "reconstruction": recon,
    }


# ---------------------------------------------------------------------------
# Periodic second-order splitting in the plane (spectral)
# ---------------------------------------------------------------------------

class SecondOrderSplit:
    """A = mean + hess(psi) + remainder on the 2-torus, remainder _|_ Hessians."""

    def __init__(self, mean, hessian, remainder, psi):
        self.mean = mean            # (2, 2)
        self.hessian = hessian      # (n, n, 2, 2)
        self.remainder = remainder  # (n, n, 2, 2)
        self.psi = psi              # (n, n) real scalar potential


def _wavenumbers(n, box_side):
    """Meshed wavenumbers with the Nyquist slot zeroed.

    For even n the single Nyquist frequency is its own conjugate partner but
    carries a one-sided sign, so odd powers of it break the conjugate symmetry
    of real fields; treating it as non-differentiable (k = 0, so those modes
    stay in remainders) keeps every projection exactly real and orthogonal.
    """
    k1 = 2.0 * np.pi * np.fft.fftfreq(n, d=float(box_side) / n)
    if n % 2 == 0:
        k1[n // 2] = 0.0
    return np.meshgrid(k1, k1, indexing="ij")


def _check_sym_field(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 4 or A.shape[2:] != (2, 2) or A.shape[0] != A.shape[1]:
        raise ConfigError("expected a square (n, n, 2, 2) field")
    if np.max(np.abs(A - np.swapaxes(A, 2, 3))) > 1e-12 * max(
            1.0, float(np.max(np.abs(A)))):
        raise ConfigError("matrix field is not symmetric")
    return A


def decompose_second_order(A, box_side=1.0):
    """Project a periodic symmetric 2x2 field onto Hessians of scalars.

    Per nonzero Fourier mode k, Hessians of periodic scalars span exactly the
    line (k tensor k), so the L2-orthogonal projection is
    ((k.A(k).k)/|k|^4) * (k tensor k) and is computed mode-by-mode; the
    remainder is orthogonal to every Hessian by construction, exactly.
    Nyquist modes (even n) are not differentiable on the grid and stay wholly
    in the remainder.

    Args:
        A: (n, n, 2, 2) symmetric, sampled at x_i = i * box_side / n.
        box_side: torus period (only rescales psi, not the split).

    Returns:
        SecondOrderSplit.
    """
    A = _check_sym_field(A)
    n = A.shape[0]
    L = float(box_side)
    if not L > 0:
        raise ConfigError("box_side must be > 0")
    Ah = np.fft.fft2(A, axes=(0, 1))
    kx, ky = _wavenumbers(n, L)
    k2 = kx * kx + ky * ky
    k2s = np.where(k2 > 0, k2, 1.0)
    # k . A(k) . k
    s = (kx * kx * Ah[..., 0, 0] + 2.0 * kx * ky * Ah[..., 0, 1]
         + ky * ky * Ah[..., 1, 1])
    coef = np.where(k2 > 0, s / (k2s * k2s), 0.0)
    Hh = np.empty_like(Ah)
    Hh[..., 0, 0] = coef * kx * kx
    Hh[..., 0, 1] = coef * kx * ky
    Hh[..., 1, 0] = Hh[..., 0, 1]
    Hh[..., 1, 1] = coef * ky * ky
    psih = np.where(k2 > 0, -s / (k2s * k2s), 0.0)
    mean = Ah[0, 0].real / (n * n)
    H = np.fft.ifft2(Hh, axes=(0, 1)).real
    psi = np.fft.ifft2(psih, axes=(0, 1)).real
    R = A - mean - H
    return SecondOrderSplit(mean=mean, hessian=H, remainder=R, psi=psi)


def hessian_pairing(split, other):
    """Normalized L2 pairing of split.hessian with another sym field.

    For `other` built as cof(sym grad b) of a periodic vector field b the
    pairing vanishes mode-by-mode (2x2 cofactors are linear), so this is a
    rounding-level check of the structural orthogonality.
    """
    other = _check_sym_field(other)
    H = split.hessian
    num = abs(float(np.sum(H * other))) / H.shape[0] ** 2
    den = max(np.sqrt(float(np.sum(H * H)) * float(np.sum(other * other)))
              / H.shape[0] ** 2, 1e-30)
    return num / den


def cof_sym_grad(b, box_side=1.0):
    """cof(sym grad b) of a periodic 2D vector field, spectral derivatives.

    Args:
        b: (n, n, 2) samples at x_i = i * box_side / n.

    Returns:
        (n, n, 2, 2) symmetric field.
    """
    G = _spectral_grad(np.asarray(b, dtype=float), box_side)
    S = 0.5 * (G + np.swapaxes(G, 2, 3))
    return _cof2(S)


def _cof2(M):
    """Cofactor matrix of a (..., 2, 2) field: cof[i,a] = (-1)^(i+a) minor."""
    C = np.empty_like(M)
    C[..., 0, 0] = M[..., 1, 1]
    C[..., 0, 1] = -M[..., 1, 0]
    C[..., 1, 0] = -M[..., 0, 1]
    C[..., 1, 1] = M[..., 0, 0]
    return C


def _spectral_grad(b, box_side):
    """grad b via FFT: out[..., i, a] = d_a b_i for (n, n, 2) input."""
    n = b.shape[0]
    if b.shape != (n, n, 2):
        raise ConfigError("expected a square (n, n, 2) field")
    kx, ky = _wavenumbers(n, box_side)
    bh = np.fft.fft2(b, axes=(0, 1))
    G = np.empty(b.shape[:2] + (2, 2), dtype=complex)
    G[..., 0] = 1j * kx[..., None] * bh
    G[..., 1] = 1j * ky[..., None] * bh
    return np.fft.ifft2(G, axes=(0, 1)).real


def _fd_grad(b, box_side):
    """Second-order centered periodic differences of a (n, n, 2) field."""
    n = b.shape[0]
    h = float(box_side) / n
    G = np.empty(b.shape[:2] + (2, 2))
    G[..., 0] = (np.roll(b, -1, axis=0) - np.roll(b, 1, axis=0)) / (2 * h)
    G[..., 1] = (np.roll(b, -1, axis=1) - np.roll(b, 1, axis=1)) / (2 * h)
    return G


def div_cof_residual(b, box_side=1.0, method="spectral", grad=None):
    """Normalized residual of the identity div(cof grad b) = 0.

    The cofactor matrix of a gradient is row-wise divergence free (a null
    Lagrangian fact).  The gradient inside the cofactor is always taken
    spectrally (exact for band-limited fields); `method` selects the outer
    divergence.  With "spectral" both layers commute and the residual is
    rounding noise; with "fd2" (centered differences) the mismatch between
    the exact and the difference wavenumber leaves a genuine second-order
    residual, so halving the sample spacing shrinks it about fourfold.

    Args:
        b: (n, n, 2) periodic samples.
        box_side: torus period.
        method: "spectral" or "fd2" outer divergence.
        grad: optional constant (2, 2) matrix added to grad b, for affine
            parts that are not themselves periodic.

    Returns:
        float: RMS(div cof) * (box_side / 2 pi) / RMS(cof).
    """
    b = np.asarray(b, dtype=float)
    if method == "spectral":
        d1 = _spectral_grad
    elif method == "fd2":
        d1 = _fd_grad
    else:
        raise ConfigError("div_cof_residual: method must be 'spectral' or "
                          "'fd2', got %r" % (method,))
    G = _spectral_grad(b, box_side)
    if grad is not None:
        grad = np.asarray(grad, dtype=float)
        if grad.shape != (2, 2):
            raise ConfigError("div_cof_residual: grad must be 2x2")
        G = G + grad
    C = _cof2(G)
    # row-wise divergence: r_i = d_a C[i, a]
    Cx = d1(C[..., :, 0], box_side)   # derivatives of column a=0
    Cy = d1(C[..., :, 1], box_side)
    r = Cx[..., 0] + Cy[..., 1]
    rms_r = np.sqrt(float(np.mean(r * r)))
    rms_c = np.sqrt(float(np.mean(C * C)))
    return rms_r * (float(box_side) / (2.0 * np.pi)) / max(rms_c, 1e-30)
