"""Random walks and geodesic flow on Z^d-covers of hyperbolic surfaces."""

from ._covwalk import (
    Cover,
    CovwalkError,
    Experiment,
    Lattice,
    Measure,
    build_id,
    cartan,
    cauchy_fit,
    checkpoints,
    gaussian_fit,
    iwasawa,
    lyapunov,
    psl_distance,
    rotation,
    run_geodesic,
    run_walk,
    translation,
    unipotent,
)


def terminal(result):
    """Indices of each trajectory's last record."""
    import numpy as np

    traj = result["trajectory"]
    if len(traj) == 0:
        return np.zeros(0, dtype=int)
    last = np.flatnonzero(np.diff(traj) != 0)
    return np.append(last, len(traj) - 1)


__all__ = [
    "Cover",
    "CovwalkError",
    "Experiment",
    "Lattice",
    "Measure",
    "build_id",
    "cartan",
    "cauchy_fit",
    "checkpoints",
    "gaussian_fit",
    "iwasawa",
    "lyapunov",
    "psl_distance",
    "rotation",
    "run_geodesic",
    "run_walk",
    "terminal",
    "translation",
    "unipotent",
]
