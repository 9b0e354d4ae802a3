"""Spatial-average statistics and ensemble studies of random media.

Window averages of phase functionals at shrinking scale factors quantify how
fast a single realization approaches its ensemble mean (the error of a good
mixing microstructure decays linearly in the scale factor).  The ensemble
driver repeats the full cell solve over independent seeds, and the isotropy
defect measures how far a bending form is from rotation invariance --
ensembles of isotropic media should lose their per-sample anisotropy as the
periodization box grows.
"""

import concurrent.futures

import numpy as np

from .cellsolve import EffectiveBendingForm, effective_form, qgamma_eval
from .errors import ConfigError, NumericalError
from .material import SQRT2
from .microstructure import rasterize, sample_realization

_PROBES = (
    np.array([[1.0, 0.0], [0.0, 0.0]]),
    np.array([[0.0, 0.0], [0.0, 1.0]]),
    np.array([[0.0, 1.0], [1.0, 0.0]]) / SQRT2,
    np.eye(2),
)


class BirkhoffSeries:
    """Window averages of a phase functional along a shrinking-scale schedule."""

    def __init__(self, epsilons, averages, reference):
        self.epsilons = np.asarray(epsilons, dtype=float)
        self.averages = np.asarray(averages, dtype=float)
        self.reference = float(reference)
        self.errors = np.abs(self.averages - self.reference)


def _phase_values(f_table, phase_ids):
    """Normalize {phase: value} / sequence into a dense lookup array."""
    if isinstance(f_table, dict):
        missing = [p for p in phase_ids if p not in f_table]
        if missing:
            raise ConfigError("f_table lacks values for phases %s" % missing)
        out = np.zeros(max(phase_ids) + 1)
        for p, v in f_table.items():
            out[int(p)] = float(v)
        return out
    out = np.asarray(f_table, dtype=float)
    if out.ndim != 1 or len(out) <= max(phase_ids):
        raise ConfigError("f_table must cover phases up to %d"
                          % max(phase_ids))
    return out


def _phase_probabilities(model):
    """Ensemble phase fractions implied by the microstructure model."""
    if model.kind == "poisson_voronoi":
        return np.asarray(model.mark_distribution, dtype=float)
    if model.phase_count == 1:
        return np.array([1.0])
    # both periodic textures tile the plane with equal-area phases
    return np.array([0.5, 0.5])


def birkhoff_average(realization, f_table, window, epsilons, step=None):
    """Midpoint-rule window averages of x -> f(phase(x / eps)).

    Args:
        realization: MicrostructureRealization.
        f_table: per-phase values, dict or array.
        window: (x0, y0, x1, y1) averaging rectangle.
        epsilons: positive, strictly decreasing scale factors.
        step: quadrature spacing target; default eps/8 per scale, and a
            spacing coarser than the scale factor itself is rejected since
            the integrand oscillates at scale eps.

    Returns:
        BirkhoffSeries with the model's ensemble mean as reference.
    """
    x0, y0, x1, y1 = (float(v) for v in window)
    if not (x1 > x0 and y1 > y0):
        raise ConfigError("birkhoff_average: empty window %r" % (window,))
    eps = np.asarray(epsilons, dtype=float)
    if eps.ndim != 1 or len(eps) == 0 or np.any(eps <= 0):
        raise ConfigError("birkhoff_average: epsilons must be positive")
    if np.any(np.diff(eps) >= 0):
        raise ConfigError("birkhoff_average: epsilons must be strictly "
                          "decreasing")
    phase_ids = realization.model.phase_ids()
    values = _phase_values(f_table, phase_ids)
    probs = _phase_probabilities(realization.model)
    reference = float(np.sum(probs * values[:len(probs)]))

    averages = []
    for e in eps:
        h = e / 8.0 if step is None else float(step)
        if h > e:
            raise ConfigError(
                "birkhoff_average: step %g does not resolve scale %g" % (h, e))
        mx = max(int(np.ceil((x1 - x0) / h)), 1)
        my = max(int(np.ceil((y1 - y0) / h)), 1)
        xs = x0 + (np.arange(mx) + 0.5) * (x1 - x0) / mx
        ys = y0 + (np.arange(my) + 0.5) * (y1 - y0) / my
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()]) / e
        phases = realization.phase_at(pts)
        averages.append(float(values[phases].mean()))
    return BirkhoffSeries(eps, averages, reference)


def birkhoff_rate(series, fit_count=2):
    """Fit err <= C * eps on the coarsest scales and test the rest.

    Returns:
        (C, ok): the constant from the `fit_count` coarsest scales and
        whether every remaining error satisfies err <= C * eps (with a tiny
        absolute slack so exactly-resolved averages do not trip it).
    """
    if len(series.epsilons) <= fit_count:
        raise ConfigError("birkhoff_rate: need more scales than fit_count")
    rates = series.errors / series.epsilons
    C = float(rates[:fit_count].max())
    ok = bool(np.all(series.errors[fit_count:]
                     <= C * series.epsilons[fit_count:] + 1e-12))
    return C, ok


def isotropy_defect(form, rotation_count=8):
    """Max relative change of q(G) under in-plane rotations of the probes.

    Probes the two axis stretches, pure shear, and the round stretch against
    `rotation_count` equi-spaced rotations in [0, pi).

    Args:
        form: EffectiveBendingForm or (3, 3) Voigt matrix.

    Returns:
        float: max over probes/angles of |q(R^T G R) - q(G)| / max(q(G), tiny).
    """
    if rotation_count < 8:
        raise ConfigError("isotropy_defect: rotation_count must be >= 8 "
                          "(coarser sweeps miss off-axis anisotropy)")
    if isinstance(form, EffectiveBendingForm):
        form = form.voigt3
    form = np.asarray(form, dtype=float)
    if form.shape != (3, 3):
        raise ConfigError("isotropy_defect: expected a 3x3 Voigt matrix")
    worst = 0.0
    for G in _PROBES:
        base = qgamma_eval(form, G)
        for m in range(rotation_count):
            t = np.pi * m / rotation_count
            c, s = np.cos(t), np.sin(t)
            R = np.array([[c, -s], [s, c]])
            rotated = qgamma_eval(form, R.T @ G @ R)
            worst = max(worst, abs(rotated - base) / max(abs(base), 1e-12))
    return worst


class EnsembleResult:
    """Per-seed effective bending forms and their ensemble aggregates."""

    def __init__(self, seeds, forms):
        self.seeds = list(seeds)
        self.forms = list(forms)
        stack = np.stack([f.voigt3 for f in self.forms])
        self.mean_form = EffectiveBendingForm(stack.mean(axis=0))
        self.voigt3_var = stack.var(axis=0)
        self.voigt3_std = stack.std(axis=0)


def ensemble_effective(model, materials, grid, seeds, tol=1e-8, threads=1):
    """Effective bending form for every seed, plus the ensemble mean.

    Seeds are solved independently (optionally on a thread pool); results are
    folded in the given seed order so the output is invariant to scheduling.

    Raises:
        NumericalError: a per-seed failure, annotated with the seed.
    """
    seeds = [int(s) for s in seeds]
    if len(seeds) < 2:
        raise ConfigError("ensemble_effective: need at least two seeds "
                          "(ensemble statistics are meaningless for one)")

    def one(seed):
        r = sample_realization(model, seed, grid.box_side)
        phases = rasterize(r, grid.n1, grid.n2)
        return effective_form(grid, phases, materials, tol=tol)

    if threads <= 1:
        forms = []
        for s in seeds:
            try:
                forms.append(one(s))
            except NumericalError as exc:
                raise type(exc)("seed %d: %s" % (s, exc)) from exc
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as ex:
            futures = [ex.submit(one, s) for s in seeds]
            forms = []
            for s, fut in zip(seeds, futures):
                try:
                    forms.append(fut.result())
                except NumericalError as exc:
                    raise type(exc)("seed %d: %s" % (s, exc)) from exc
    return EnsembleResult(seeds, forms)


class IsotropyReport:
    """Isotropy defect of an ensemble-mean form plus per-seed defects."""

    def __init__(self, form, defect, rotations_sampled, ensemble):
        self.form = form
        self.defect = defect
        self.rotations_sampled = rotations_sampled
        self.ensemble = ensemble          # per-seed defect list


def isotropy_report(ensemble, rotation_count=8):
    """IsotropyReport for an EnsembleResult (mean form + per-seed spread)."""
    return IsotropyReport(
        form=ensemble.mean_form,
        defect=isotropy_defect(ensemble.mean_form, rotation_count),
        rotations_sampled=int(rotation_count),
        ensemble=[isotropy_defect(f, rotation_count)
                  for f in ensemble.forms])
