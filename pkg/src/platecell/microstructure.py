"""Planar random/periodic microstructures on a periodized box [0, L)^2.

Three media are supported:

  periodic_texture   two-phase stripe laminate along x1 (period = period_hint,
                     phase 0 on the first half-period)
  checkerboard       alternating square tiles of side period_hint
  poisson_voronoi    marked Poisson point process; the phase at x is the mark
                     of the nearest point in the flat-torus metric

A realization is immutable and carries a translation offset implementing the
shift action: shifting composes exactly (offsets add), and every query wraps
into the periodic box.  Randomness comes from a counter-based Philox generator
keyed by (seed, stream), with point positions and marks on separate streams so
they stay independent.
"""

import numpy as np

from .errors import ConfigError, DegenerateRealizationError

_PERIODIC_KINDS = ("periodic_texture", "checkerboard")
_KINDS = _PERIODIC_KINDS + ("poisson_voronoi",)


def _rng(seed, stream):
    """Philox generator on an independent stream of the given seed."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


class MicrostructureModel:
    """Description of the medium (no randomness drawn yet).

    Args:
        kind: one of periodic_texture | checkerboard | poisson_voronoi.
        phase_count: number of phases (periodic kinds: 1 or 2).
        period_hint: texture period / tile side for periodic kinds.
        intensity: mean points per unit area (poisson_voronoi).
        mark_distribution: per-phase mark probabilities for poisson_voronoi
            (length phase_count); defaults to uniform.
        resample_on_empty: retry (with fresh streams) when a Poisson draw
            returns zero points instead of raising.
    """

    def __init__(self, kind, phase_count=2, period_hint=1.0, intensity=None,
                 mark_distribution=None, resample_on_empty=False):
        if kind not in _KINDS:
            raise ConfigError("model.kind must be one of %s, got %r" % (_KINDS, kind))
        self.kind = kind
        self.phase_count = int(phase_count)
        if self.phase_count < 1:
            raise ConfigError("model.phase_count must be >= 1")
        self.period_hint = float(period_hint)
        self.intensity = None if intensity is None else float(intensity)
        self.resample_on_empty = bool(resample_on_empty)

        if kind in _PERIODIC_KINDS:
            if not self.period_hint > 0:
                raise ConfigError("model.period_hint must be > 0 for periodic kinds")
            if self.phase_count > 2:
                raise ConfigError("model.phase_count: periodic textures ship with "
                                  "at most 2 phases")
            self.mark_distribution = None
        else:
            if self.intensity is None or not self.intensity > 0:
                raise ConfigError("model.intensity must be > 0 for poisson_voronoi")
            if mark_distribution is None:
                mark_distribution = [1.0 / self.phase_count] * self.phase_count
            probs = np.asarray(mark_distribution, dtype=float)
            if probs.shape != (self.phase_count,):
                raise ConfigError("model.mark_distribution must list one "
                                  "probability per phase")
            if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
                raise ConfigError("model.mark_distribution: probabilities must be "
                                  "nonnegative and sum to 1")
            self.mark_distribution = [float(p) for p in probs]

    def phase_ids(self):
        return list(range(self.phase_count))

    def to_dict(self):
        d = {"kind": self.kind, "phase_count": self.phase_count}
        if self.kind in _PERIODIC_KINDS:
            d["period_hint"] = self.period_hint
        else:
            d["intensity"] = self.intensity
            d["mark_distribution"] = list(self.mark_distribution)
            d["resample_on_empty"] = self.resample_on_empty
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"],
                   phase_count=d.get("phase_count", 2),
                   period_hint=d.get("period_hint", 1.0),
                   intensity=d.get("intensity"),
                   mark_distribution=d.get("mark_distribution"),
                   resample_on_empty=d.get("resample_on_empty", False))


class PhaseGrid:
    """Phase ids sampled at the n1 x n2 element centers of the box (x3-constant)."""

    def __init__(self, n1, n2, box_side, cell_phase):
        self.n1 = int(n1)
        self.n2 = int(n2)
        self.box_side = float(box_side)
        cell_phase = np.asarray(cell_phase, dtype=np.int64)
        if cell_phase.shape != (self.n1, self.n2):
            raise ConfigError("PhaseGrid.cell_phase must have shape (n1, n2)")
        self.cell_phase = cell_phase

    def phase_ids(self):
        return np.unique(self.cell_phase).tolist()


# ---------------------------------------------------------------------------
# Nearest-point index: uniform bucket grid with wrap-around
# ---------------------------------------------------------------------------

class _BucketIndex:
    """Torus nearest-neighbour queries over [0, L)^2.

    Points are binned into an nb x nb bucket lattice.  A query expands
    Chebyshev rings of buckets outward (with wrap) and stops once the ring
    lower bound (ring_index * bucket_size) strictly exceeds the best distance
    found, so equal-distance candidates can never hide in an unvisited ring.
    Ties are broken lexicographically on (x, y) with our own arithmetic.
    """

    def __init__(self, points, box_side):
        self.points = np.asarray(points, dtype=float)
        self.L = float(box_side)
        n = len(self.points)
        self.nb = max(1, int(np.sqrt(n)))
        self.bs = self.L / self.nb
        cells = np.floor(self.points / self.bs).astype(np.int64) % self.nb
        flat = cells[:, 0] * self.nb + cells[:, 1]
        order = np.argsort(flat, kind="stable")
        self._sorted = order
        self._starts = np.searchsorted(flat[order], np.arange(self.nb * self.nb + 1))

    def _bucket_points(self, ci, cj):
        f = (ci % self.nb) * self.nb + (cj % self.nb)
        return self._sorted[self._starts[f]:self._starts[f + 1]]

    def _ring_cells(self, ci, cj, k, visited):
        """Unvisited bucket cells at Chebyshev radius k around (ci, cj)."""
        out = []
        if k == 0:
            rng = [(0, 0)]
        else:
            rng = [(di, dj) for di in range(-k, k + 1) for dj in range(-k, k + 1)
                   if max(abs(di), abs(dj)) == k]
        for di, dj in rng:
            a, b = (ci + di) % self.nb, (cj + dj) % self.nb
            if not visited[a, b]:
                visited[a, b] = True
                out.append((a, b))
        return out

    def query(self, q):
        """Nearest-point indices for query points q (M, 2), already wrapped."""
        q = np.atleast_2d(np.asarray(q, dtype=float))
        M = len(q)
        result = np.empty(M, dtype=np.int64)
        cells = np.floor(q / self.bs).astype(np.int64) % self.nb
        flat = cells[:, 0] * self.nb + cells[:, 1]
        # group queries sharing a bucket so ring scans are amortized
        order = np.argsort(flat, kind="stable")
        starts = np.flatnonzero(np.r_[True, np.diff(flat[order]) != 0])
        bounds = np.r_[starts, M]
        px, py = self.points[:, 0], self.points[:, 1]
        for s, e in zip(bounds[:-1], bounds[1:]):
            idx = order[s:e]
            qg = q[idx]
            ci, cj = int(cells[idx[0], 0]), int(cells[idx[0], 1])
            visited = np.zeros((self.nb, self.nb), dtype=bool)
            cand = []
            best = np.full(len(idx), np.inf)
            k = 0
            while True:
                ring = self._ring_cells(ci, cj, k, visited)
                fresh = [self._bucket_points(a, b) for a, b in ring]
                fresh = [f for f in fresh if len(f)]
                if fresh:
                    newc = np.concatenate(fresh)
                    cand.append(newc)
                    d2 = self._torus_d2(qg, newc)
                    best = np.minimum(best, d2.min(axis=1))
                done = visited.all()
                if done or (np.isfinite(best).all()
                            and k * self.bs > np.sqrt(best.max())):
                    break
                k += 1
            cand = np.concatenate(cand)
            d2 = self._torus_d2(qg, cand)
            m = d2.min(axis=1, keepdims=True)
            tie = d2 == m
            X = np.where(tie, px[cand][None, :], np.inf)
            tie &= X == X.min(axis=1, keepdims=True)
            Y = np.where(tie, py[cand][None, :], np.inf)
            tie &= Y == Y.min(axis=1, keepdims=True)
            result[idx] = cand[np.argmax(tie, axis=1)]
        return result

    def _torus_d2(self, qg, cand):
        d = np.abs(qg[:, None, :] - self.points[cand][None, :, :])
        d = np.minimum(d, self.L - d)
        return d[..., 0] ** 2 + d[..., 1] ** 2


# ---------------------------------------------------------------------------
# Realizations
# ---------------------------------------------------------------------------

class MicrostructureRealization:
    """A frozen sample of the medium; supports queries, shifts, rasterization."""

    def __init__(self, model, seed, box_side, points=None, marks=None,
                 offset=(0.0, 0.0), stream_base=0):
        self.model = model
        self.seed = int(seed)
        self.box_side = float(box_side)
        self.points = None if points is None else np.asarray(points, dtype=float)
        self.marks = None if marks is None else np.asarray(marks, dtype=np.int64)
        self.offset = np.asarray(offset, dtype=float).reshape(2).copy()
        self.stream_base = int(stream_base)
        self._index = None

    def _bucket_index(self):
        if self._index is None:
            self._index = _BucketIndex(self.points, self.box_side)
        return self._index

    # Convenience method forms of the module-level operations.
    def phase_at(self, x):
        return phase_at(self, x)

    def shift(self, x):
        return shift(self, x)

    def rasterize(self, n1, n2):
        return rasterize(self, n1, n2)


def sample_realization(model, seed, box_side):
    """Draw a realization of the model on the periodic box [0, box_side)^2.

    Periodic kinds are deterministic (the seed is recorded but unused).  The
    Voronoi kind draws the point count, positions, and marks from independent
    Philox streams; a zero-point draw raises unless the model requests
    resampling, in which case fresh streams are used.
    """
    box_side = float(box_side)
    if not box_side > 0:
        raise ConfigError("box_side must be > 0")
    if model.kind in _PERIODIC_KINDS:
        ratio = box_side / model.period_hint
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ConfigError(
                "box_side=%g is not an integer multiple of period_hint=%g; the "
                "periodized texture would be discontinuous at the box seam"
                % (box_side, model.period_hint))
        if model.kind == "checkerboard" and model.phase_count == 2 \
                and int(round(ratio)) % 2 != 0:
            raise ConfigError(
                "checkerboard needs box_side an EVEN multiple of period_hint "
                "(the pattern period is two tiles); got box_side/period_hint=%g"
                % ratio)
        return MicrostructureRealization(model, seed, box_side)

    # poisson_voronoi
    attempt = 0
    while True:
        rng_pos = _rng(seed, 2 * attempt)
        n = int(rng_pos.poisson(model.intensity * box_side * box_side))
        if n > 0:
            break
        if not model.resample_on_empty:
            raise DegenerateRealizationError(
                "Poisson draw returned zero points (seed=%d, intensity=%g, L=%g); "
                "set resample_on_empty to retry on fresh streams"
                % (seed, model.intensity, box_side))
        attempt += 1
        if attempt > 64:
            raise DegenerateRealizationError(
                "Poisson draw empty after 64 resampling attempts")
    points = rng_pos.random((n, 2)) * box_side
    rng_mark = _rng(seed, 2 * attempt + 1)
    cum = np.cumsum(model.mark_distribution)
    u = rng_mark.random(n)
    marks = np.minimum(np.searchsorted(cum, u, side="right"),
                       model.phase_count - 1).astype(np.int64)
    return MicrostructureRealization(model, seed, box_side, points=points,
                                     marks=marks, stream_base=2 * attempt)


def phase_at(r, x):
    """Phase id at a point (2,) or points (M, 2); wraps into the periodic box."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    q = np.atleast_2d(x) + r.offset
    L = r.box_side
    model = r.model
    if model.kind in _PERIODIC_KINDS:
        if model.phase_count == 1:
            out = np.zeros(len(q), dtype=np.int64)
        elif model.kind == "periodic_texture":
            p = model.period_hint
            halves = int(round(L / p)) * 2
            i = np.floor(q[:, 0] * (2.0 / p)).astype(np.int64) % halves
            out = i % 2
        else:  # checkerboard
            t = model.period_hint
            tiles = int(round(L / t))
            i = np.floor(q[:, 0] / t).astype(np.int64) % tiles
            j = np.floor(q[:, 1] / t).astype(np.int64) % tiles
            out = (i + j) % 2
    else:
        qw = np.mod(q, L)
        idx = r._bucket_index().query(qw)
        out = r.marks[idx]
    return int(out[0]) if scalar else out


def shift(r, x):
    """Translation action: the result's phase map is phase_at(r, . + x)."""
    x = np.asarray(x, dtype=float).reshape(2)
    s = MicrostructureRealization(r.model, r.seed, r.box_side, points=r.points,
                                  marks=r.marks, offset=r.offset + x,
                                  stream_base=r.stream_base)
    s._index = r._index  # immutable, safe to share
    return s


def rasterize(r, n1, n2):
    """Phase ids at element centers ((i+1/2) L/n1, (j+1/2) L/n2)."""
    n1, n2 = int(n1), int(n2)
    if n1 < 1 or n2 < 1:
        raise ConfigError("rasterize: n1, n2 must be >= 1")
    L = r.box_side
    cx = (np.arange(n1) + 0.5) * (L / n1)
    cy = (np.arange(n2) + 0.5) * (L / n2)
    X, Y = np.meshgrid(cx, cy, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    phases = phase_at(r, pts).reshape(n1, n2)
    return PhaseGrid(n1, n2, L, phases)
