"""Ensemble-averaged Voronoi plates become isotropic as the window grows.

Each realization is anisotropic (its tensor depends on where the seeds
landed), but the ensemble mean over seeds loses its preferred directions as
the cell covers more grains. The isotropy defect measures the worst
relative change of the mean tensor under in-plane rotation.
"""

import json
import time
from pathlib import Path

from platecell import (MicrostructureModel, RVEGrid, ensemble_effective,
                       isotropy_report, material_table)

CONFIG = Path(__file__).parent / "configs" / "voronoi_contrast4.json"


def main():
    cfg = json.loads(CONFIG.read_text())
    mats = material_table(cfg["materials"])
    model = MicrostructureModel.from_dict(cfg["model"])
    seeds = cfg["seeds"][:10]          # ten seeds keep this demo quick

    print("Poisson-Voronoi, contrast 4, %d seeds" % len(seeds))
    print("  window   mesh       defect(mean)  per-seed defect range")
    for L, n in ((4.0, 16), (8.0, 32)):
        t0 = time.perf_counter()
        ens = ensemble_effective(model, mats, RVEGrid(n, n, 2, 1.0, L),
                                 seeds, tol=1e-7, threads=4)
        rep = isotropy_report(ens)
        print("  L=%.0f      %2dx%2dx2    %.4f        [%.3f, %.3f]   (%.1fs)"
              % (L, n, n, rep.defect, min(rep.ensemble), max(rep.ensemble),
                 time.perf_counter() - t0))
    print("\nthe mean-form defect drops much faster than any single seed's")


if __name__ == "__main__":
    main()
