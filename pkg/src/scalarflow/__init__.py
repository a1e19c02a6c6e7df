"""Bayesian recovery of divergence-free flows from tracer observations."""

import os as _os

# The dense kernels here are far below the size where BLAS threading pays
# off; on small machines thread oversubscription slows factorizations ~5x.
# Honored only if numpy has not been imported yet.
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    _os.environ.setdefault(_var, "1")

__version__ = "0.1.0"
