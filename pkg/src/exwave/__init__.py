"""Radial resolvent laboratory for wave decay estimates on exterior domains."""

import os as _os

# The spectral quadratures interleave thousands of small dense operations;
# multi-threaded BLAS pools spin between them and slow the hot path by an
# order of magnitude on small machines.  Runs are also reproducible only
# with a fixed reduction order.
for _var in ("OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "OMP_NUM_THREADS"):
    _os.environ.setdefault(_var, "1")
try:
    from threadpoolctl import threadpool_limits as _threadpool_limits

    _threadpool_limits(limits=1, user_api="blas")
except Exception:  # pragma: no cover - best effort when numpy came first
    pass

__version__ = "0.1.0"

from .core import (  # noqa: F401
    AdmissibilityError,
    CauchyData,
    DomainSpec,
    ModeField,
    NormWeight,
    PotentialSpec,
    RadialGrid,
    build_grid,
    bump_field,
    grid_from_edges,
    l1_norm,
    l2_norm,
    lp_norm,
    smooth_bump,
    sup_norm,
    weighted_l2_norm,
)
