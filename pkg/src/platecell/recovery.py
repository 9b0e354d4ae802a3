"""Finite-thickness bending deformations that attain the effective energy.

Given a smooth isometric immersion of the midplane and a microstructured
material, this module builds the classical two-scale deformation family: the
plate is bent along the isometry, fibers follow the rotated normal, and a
small-amplitude cell corrector -- rotated into the local frame and cut off
near patch boundaries by smooth ramps -- lets the material relax exactly as
in the periodic cell problem.  `evaluate_scaled_energy` integrates the
thickness-scaled elastic energy of one member of the family;
`limit_energy` integrates the homogenized bending form over the midplane.
Their gap shrinks as the thickness does, up to the fixed cost of the cutoff
collars where the corrector is suppressed.

The corrector lives on the same discrete cell problem used for the effective
form (same grid, same material table), so the microscale phase layout seen by
the energy is by construction the one the corrector was optimized for.
"""

import numpy as np

from .cellsolve import CellLoad, effective_form, qgamma_eval, solve_corrector
from .errors import ConfigError
from .material import svk_energy

_G2 = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))


# ---------------------------------------------------------------------------
# Midplane isometries
# ---------------------------------------------------------------------------

class IsometrySpec:
    """Smooth isometric immersion of a planar domain, with frame derivatives.

    Supported kinds: "flat" (identity embedding) and "cylinder" (rolling onto
    a cylinder of given radius about the x2 axis).

    Args:
        kind: "flat" or "cylinder".
        domain: (x0, y0, x1, y1) midplane rectangle.
        radius: cylinder radius (ignored for "flat").
    """

    def __init__(self, kind, domain, radius=None):
        if kind not in ("flat", "cylinder"):
            raise ConfigError("IsometrySpec: unknown kind %r" % (kind,))
        x0, y0, x1, y1 = (float(v) for v in domain)
        if not (x1 > x0 and y1 > y0):
            raise ConfigError("IsometrySpec: empty domain %r" % (domain,))
        if kind == "cylinder":
            if radius is None or not radius > 0:
                raise ConfigError("IsometrySpec: cylinder needs radius > 0")
            radius = float(radius)
        self.kind = kind
        self.domain = (x0, y0, x1, y1)
        self.radius = radius

    def frame_fields(self, xp):
        """Immersion, tangent frame, normal and their derivatives at points.

        Args:
            xp: (M, 2) midplane points.

        Returns:
            dict with keys y, d1y, d2y, n, d1n, d2n -- each (M, 3) -- and
            ddy: (M, 2, 2, 3) second derivatives of the immersion.
        """
        xp = np.asarray(xp, dtype=float)
        m = xp.shape[0]
        out = {k: np.zeros((m, 3)) for k in
               ("y", "d1y", "d2y", "n", "d1n", "d2n")}
        out["ddy"] = np.zeros((m, 2, 2, 3))
        if self.kind == "flat":
            out["y"][:, 0] = xp[:, 0]
            out["y"][:, 1] = xp[:, 1]
            out["d1y"][:, 0] = 1.0
            out["d2y"][:, 1] = 1.0
            out["n"][:, 2] = 1.0
            return out
        r = self.radius
        u = xp[:, 0] / r
        cu, su = np.cos(u), np.sin(u)
        out["y"][:, 0] = r * su
        out["y"][:, 1] = xp[:, 1]
        out["y"][:, 2] = r * cu
        out["d1y"][:, 0] = cu
        out["d1y"][:, 2] = -su
        out["d2y"][:, 1] = 1.0
        out["n"][:, 0] = su
        out["n"][:, 2] = cu
        out["d1n"][:, 0] = cu / r
        out["d1n"][:, 2] = -su / r
        out["ddy"][:, 0, 0, 0] = -su / r
        out["ddy"][:, 0, 0, 2] = -cu / r
        return out

    def second_form(self, xp):
        """Second fundamental form (M, 2, 2) at midplane points."""
        f = self.frame_fields(xp)
        return np.einsum("mabc,mc->mab", f["ddy"], f["n"])


def cylinder_isometry(radius, domain=(0.0, 0.0, 1.0, 1.0)):
    return IsometrySpec("cylinder", domain, radius=radius)


def flat_isometry(domain=(0.0, 0.0, 1.0, 1.0)):
    return IsometrySpec("flat", domain)


# ---------------------------------------------------------------------------
# Configuration and corrector source
# ---------------------------------------------------------------------------

class RecoveryConfig:
    """Parameters of the recovery family.

    Args:
        gamma: thickness-to-microscale ratio; the microscale of the h-member
            is eps = h / gamma.
        patch_size: side of the square patches on which the corrector load is
            frozen to the local average of the second fundamental form.
        ramp_width: collar width of the smooth cutoff (zero within one width
            of a patch boundary, one beyond twice that); default patch_size/8.
        cells_per_scale: in-plane quadrature cells per microscale length
            (>= 2 so the oscillation is resolved).
        h_schedule: optional strictly decreasing thicknesses, for drivers
            that sweep the family.
        corrector_tol: CG tolerance of the cell solves behind the correctors.
    """

    def __init__(self, gamma=1.0, patch_size=0.25, ramp_width=None,
                 cells_per_scale=4, h_schedule=None, corrector_tol=1e-10):
        if not gamma > 0:
            raise ConfigError("RecoveryConfig: gamma must be > 0")
        if not patch_size > 0:
            raise ConfigError("RecoveryConfig: patch_size must be > 0")
        if ramp_width is None:
            ramp_width = patch_size / 8.0
        if not 0 < ramp_width < patch_size / 2.0:
            raise ConfigError("RecoveryConfig: ramp_width must lie in "
                              "(0, patch_size / 2)")
        if cells_per_scale < 2:
            raise ConfigError("RecoveryConfig: cells_per_scale must be >= 2")
        if h_schedule is not None:
            hs = [float(h) for h in h_schedule]
            if not hs or any(h <= 0 for h in hs) or \
                    any(b >= a for a, b in zip(hs, hs[1:])):
                raise ConfigError("RecoveryConfig: h_schedule must be "
                                  "positive and strictly decreasing")
            h_schedule = hs
        self.gamma = float(gamma)
        self.patch_size = float(patch_size)
        self.ramp_width = float(ramp_width)
        self.cells_per_scale = int(cells_per_scale)
        self.h_schedule = h_schedule
        self.corrector_tol = float(corrector_tol)


class CellCorrectorSource:
    """Caches cell correctors (and the effective form) for one RVE setup."""

    def __init__(self, grid, phases, materials, tol=1e-10):
        self.grid = grid
        self.phases = phases
        self.materials = materials
        self.tol = float(tol)
        self._correctors = {}
        self._form = None

    def corrector(self, G):
        """Corrector field for the pure bending load G (cached)."""
        G = np.asarray(G, dtype=float)
        key = np.round(G, 12).tobytes()
        if key not in self._correctors:
            if np.max(np.abs(G)) < 1e-14:
                values = np.zeros((self.grid.n1, self.grid.n2,
                                   self.grid.n3 + 1, 3))
                field = None
            else:
                field = solve_corrector(self.grid, self.phases, self.materials,
                                        CellLoad(G=G), tol=self.tol)
                values = field.values
            self._correctors[key] = values
        return self._correctors[key]

    def effective(self):
        """Effective bending form of this setup (cached)."""
        if self._form is None:
            self._form = effective_form(self.grid, self.phases, self.materials,
                                        tol=self.tol)
        return self._form

    def phase_of_points(self, ypts):
        """Phase ids of wrapped cell coordinates (matching the solve)."""
        n1, n2 = self.grid.n1, self.grid.n2
        L = self.grid.box_side
        i = np.floor(ypts[:, 0] * n1 / L).astype(np.int64) % n1
        j = np.floor(ypts[:, 1] * n2 / L).astype(np.int64) % n2
        return self.phases.cell_phase[i, j]


# ---------------------------------------------------------------------------
# The recovery family
# ---------------------------------------------------------------------------

def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _smoothstep_d(t):
    inside = (t > 0.0) & (t < 1.0)
    return np.where(inside, 6.0 * t * (1.0 - t), 0.0)


def _ramp_1d(x, a, b, delta):
    """C^1 cutoff on [a, b]: 0 within delta of the ends, 1 beyond 2*delta."""
    d = np.minimum(x - a, b - x)
    t = (d - delta) / delta
    chi = _smoothstep(t)
    sign = np.where(x - a < b - x, 1.0, -1.0)
    dchi = _smoothstep_d(t) * sign / delta
    return chi, dchi


class _Patch:
    def __init__(self, rect, load, values):
        self.rect = rect      # (x0, y0, x1, y1)
        self.load = load      # (2, 2) frozen bending load
        self.values = values  # corrector nodal values (n1, n2, n3+1, 3)


class RecoveryFamily:
    """Patchwork of frozen-load correctors over the midplane domain."""

    def __init__(self, iso, cfg, source, V=None):
        if V is not None:
            raise ConfigError("build_recovery: only the zero midplane "
                              "displacement is supported")
        self.iso = iso
        self.cfg = cfg
        self.source = source
        x0, y0, x1, y1 = iso.domain
        eta = cfg.patch_size
        nx = max(int(np.ceil((x1 - x0) / eta - 1e-12)), 1)
        ny = max(int(np.ceil((y1 - y0) / eta - 1e-12)), 1)
        self.patches = []
        for i in range(nx):
            for j in range(ny):
                rect = (x0 + i * eta, y0 + j * eta,
                        min(x0 + (i + 1) * eta, x1),
                        min(y0 + (j + 1) * eta, y1))
                load = self._patch_load(rect)
                self.patches.append(
                    _Patch(rect, load, source.corrector(load)))

    def _patch_load(self, rect):
        """Frozen corrector load: minus the patch-averaged curvature form.

        The fiber term y + h x3 n carries the first-order strain
        -x3 * (second fundamental form) by the Weingarten relation
        (d_a n = -II_ab d_b y), so that is the bending load the corrector
        has to relax.  The sign is immaterial for the limit energy (the
        form is even) but not for the cross term here.
        """
        a0, b0, a1, b1 = rect
        gx = [a0 + g * (a1 - a0) for g in _G2]
        gy = [b0 + g * (b1 - b0) for g in _G2]
        pts = np.array([(x, y) for x in gx for y in gy])
        II = self.iso.second_form(pts)
        A = -II.mean(axis=0)
        return 0.5 * (A + A.T)

    def sampler(self, h):
        return DeformationSampler(self, h)


def build_recovery(iso, cfg, source, V=None):
    """Assemble the recovery family for an isometry and corrector source."""
    return RecoveryFamily(iso, cfg, source, V=V)


class _Plan:
    """Per-point geometry reused across thickness quadrature layers."""

    def __init__(self, frames, patches):
        self.frames = frames
        self.patches = patches  # list of per-patch dicts


class DeformationSampler:
    """One member of the recovery family, evaluable point-wise.

    The deformation of the plate point (x', x3) (midplane coordinates and
    unit-thickness coordinate) is

        v(x', x3) = y(x') + h x3 n(x')
                    + h eps sum_i chi_i(x') R(x') g_i(x'/eps, x3)

    with R the rotation (d1y, d2y, n), g_i the patch correctors sampled
    trilinearly on the cell grid, and eps = h / gamma.  `scaled_gradient`
    returns (d1 v, d2 v, (1/h) d3 v).
    """

    def __init__(self, family, h):
        if not h > 0:
            raise ConfigError("DeformationSampler: h must be > 0")
        self.family = family
        self.h = float(h)
        self.eps = float(h) / family.cfg.gamma
        g = family.source.grid
        self._hx = g.box_side / g.n1
        self._hy = g.box_side / g.n2
        self._n3 = g.n3

    # -- planning ----------------------------------------------------------

    def plan(self, xp):
        """Precompute frames, ramps and in-plane interpolation data."""
        xp = np.asarray(xp, dtype=float)
        frames = self.family.iso.frame_fields(xp)
        grid = self.family.source.grid
        delta = self.family.cfg.ramp_width
        patches = []
        for patch in self.family.patches:
            a0, b0, a1, b1 = patch.rect
            idx = np.flatnonzero((xp[:, 0] >= a0) & (xp[:, 0] < a1)
                                 & (xp[:, 1] >= b0) & (xp[:, 1] < b1))
            if idx.size == 0:
                continue
            px = xp[idx]
            cx, dcx = _ramp_1d(px[:, 0], a0, a1, delta)
            cy, dcy = _ramp_1d(px[:, 1], b0, b1, delta)
            chi = cx * cy
            dchi = np.column_stack([dcx * cy, cx * dcy])
            yw = np.mod(px / self.eps, grid.box_side)
            sx = yw[:, 0] / self._hx
            sy = yw[:, 1] / self._hy
            i0 = np.floor(sx).astype(np.int64) % grid.n1
            j0 = np.floor(sy).astype(np.int64) % grid.n2
            patches.append({
                "idx": idx,
                "chi": chi,
                "dchi": dchi,
                "values": patch.values,
                "i0": i0, "i1": (i0 + 1) % grid.n1, "tx": sx - np.floor(sx),
                "j0": j0, "j1": (j0 + 1) % grid.n2, "ty": sy - np.floor(sy),
                "R": np.stack([frames["d1y"][idx], frames["d2y"][idx],
                               frames["n"][idx]], axis=2),
                "dR": np.stack(
                    [np.stack([frames["ddy"][idx, a, 0],
                               frames["ddy"][idx, a, 1],
                               frames["d%dn" % (a + 1)][idx]], axis=2)
                     for a in (0, 1)], axis=1),
            })
        return _Plan(frames, patches)

    def _interp(self, p, x3):
        """Corrector value and (d_y1, d_y2, d_x3) gradients at one layer."""
        n3 = self._n3
        s = np.clip((x3 + 0.5) * n3, 0.0, float(n3))
        k0 = min(int(s), n3 - 1)
        tz = s - k0
        V = p["values"]
        wx = (1.0 - p["tx"], p["tx"])
        wy = (1.0 - p["ty"], p["ty"])
        wz = (1.0 - tz, tz)
        m = p["idx"].size
        val = np.zeros((m, 3))
        grad = np.zeros((m, 3, 3))
        for a in (0, 1):
            ii = p["i0"] if a == 0 else p["i1"]
            dxs = -1.0 if a == 0 else 1.0
            for b in (0, 1):
                jj = p["j0"] if b == 0 else p["j1"]
                dys = -1.0 if b == 0 else 1.0
                for c in (0, 1):
                    corner = V[ii, jj, k0 + c]
                    dzs = -1.0 if c == 0 else 1.0
                    val += (wx[a] * wy[b] * wz[c])[:, None] * corner
                    grad[:, :, 0] += (dxs / self._hx * wy[b]
                                      * wz[c])[:, None] * corner
                    grad[:, :, 1] += (wx[a] * dys / self._hy
                                      * wz[c])[:, None] * corner
                    grad[:, :, 2] += (wx[a] * wy[b] * dzs
                                      * n3)[:, None] * corner
        return val, grad

    # -- evaluation --------------------------------------------------------

    def deformation(self, xp, x3):
        """Deformed positions (M, 3) of midplane points at one fiber height."""
        plan = self.plan(xp)
        f = plan.frames
        out = f["y"] + self.h * x3 * f["n"]
        for p in plan.patches:
            g, _ = self._interp(p, x3)
            Rg = np.einsum("mij,mj->mi", p["R"], g)
            out[p["idx"]] += self.h * self.eps * p["chi"][:, None] * Rg
        return out

    def scaled_gradient(self, xp, x3, plan=None):
        """Scaled deformation gradients (M, 3, 3) at one fiber height."""
        if plan is None:
            plan = self.plan(xp)
        f = plan.frames
        h, eps = self.h, self.eps
        m = f["y"].shape[0]
        F = np.empty((m, 3, 3))
        F[:, :, 0] = f["d1y"] + h * x3 * f["d1n"]
        F[:, :, 1] = f["d2y"] + h * x3 * f["d2n"]
        F[:, :, 2] = f["n"]
        for p in plan.patches:
            g, dg = self._interp(p, x3)
            idx = p["idx"]
            chi = p["chi"][:, None]
            Rg = np.einsum("mij,mj->mi", p["R"], g)
            Rdg = np.einsum("mij,mjc->mic", p["R"], dg)
            sub = F[idx]
            for a in (0, 1):
                dRg = np.einsum("mij,mj->mi", p["dR"][:, a], g)
                sub[:, :, a] += (h * chi * Rdg[:, :, a]
                                 + h * eps * (p["dchi"][:, a:a + 1] * Rg
                                              + chi * dRg))
            sub[:, :, 2] += eps * chi * Rdg[:, :, 2]
            F[idx] = sub
        return F


# ---------------------------------------------------------------------------
# Energies
# ---------------------------------------------------------------------------

def evaluate_scaled_energy(sampler, cells_per_scale=None):
    """Thickness-scaled elastic energy of one recovery member.

    Composite 2x2 Gauss quadrature in-plane with cells no coarser than half
    the microscale, and per-corrector-layer 2-point Gauss through the
    thickness (matching the cell solve's rule, so the discrete corrector is
    credited exactly the relaxation it earned there).

    Returns:
        float: (1/h^2) integral of W(phase, scaled gradient).
    """
    family = sampler.family
    if cells_per_scale is None:
        cells_per_scale = family.cfg.cells_per_scale
    x0, y0, x1, y1 = family.iso.domain
    eps = sampler.eps
    ncx = max(int(np.ceil((x1 - x0) * cells_per_scale / eps)), 1)
    ncy = max(int(np.ceil((y1 - y0) * cells_per_scale / eps)), 1)
    if (x1 - x0) / ncx > eps / 2.0 or (y1 - y0) / ncy > eps / 2.0:
        raise ConfigError("evaluate_scaled_energy: in-plane quadrature does "
                          "not resolve the microscale")
    gx = (np.arange(ncx)[:, None] + np.asarray(_G2)).ravel() * (x1 - x0) / ncx
    gy = (np.arange(ncy)[:, None] + np.asarray(_G2)).ravel() * (y1 - y0) / ncy
    X, Y = np.meshgrid(x0 + gx, y0 + gy, indexing="ij")
    xp = np.column_stack([X.ravel(), Y.ravel()])
    w_area = (x1 - x0) * (y1 - y0) / (4.0 * ncx * ncy)

    plan = sampler.plan(xp)
    source = family.source
    ypts = np.mod(xp / eps, source.grid.box_side)
    phases = source.phase_of_points(ypts)
    groups = {int(pid): np.flatnonzero(phases == pid)
              for pid in np.unique(phases)}
    mats = {pid: source.materials[pid] for pid in groups}

    n3 = source.grid.n3
    total = 0.0
    for k in range(n3):
        for gq in _G2:
            x3 = -0.5 + (k + gq) / n3
            F = sampler.scaled_gradient(xp, x3, plan=plan)
            dens = 0.0
            for pid, sel in groups.items():
                dens += float(np.sum(svk_energy(mats[pid], F[sel])))
            total += dens / (2.0 * n3)
    return total * w_area / sampler.h ** 2


def limit_energy(form, iso, resolution=32):
    """Homogenized bending energy of the isometry: integral of q(II).

    Midpoint rule on a resolution^2 grid (exact for the constant-curvature
    isometries shipped here).
    """
    x0, y0, x1, y1 = iso.domain
    xs = x0 + (np.arange(resolution) + 0.5) * (x1 - x0) / resolution
    ys = y0 + (np.arange(resolution) + 0.5) * (y1 - y0) / resolution
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    II = iso.second_form(pts)
    vals = np.array([qgamma_eval(form, II[m]) for m in range(len(pts))])
    return float(vals.mean() * (x1 - x0) * (y1 - y0))


def recovery_gaps(family, h_schedule=None):
    """Scaled energies, the limit energy, and relative gaps per thickness.

    Returns:
        dict with h_schedule, scaled (list), limit (float), gaps (list of
        (scaled - limit) / limit).
    """
    hs = h_schedule if h_schedule is not None else family.cfg.h_schedule
    if not hs:
        raise ConfigError("recovery_gaps: no h_schedule given")
    limit = limit_energy(family.source.effective(), family.iso)
    scaled = [evaluate_scaled_energy(family.sampler(h)) for h in hs]
    gaps = [(s - limit) / limit for s in scaled]
    return {"h_schedule": list(hs), "scaled": scaled, "limit": limit,
            "gaps": gaps}
