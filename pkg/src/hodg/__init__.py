"""High-order discontinuous Galerkin solver for 2D compressible flow on
unstructured grids, with grid renumbering, mixed-precision time integration,
and performance/productivity measurement tools."""

import os

# The data-parallel kernels honor a per-run worker count that may exceed the
# machine's core count; raise numba's thread cap before numba is imported
# anywhere in this package.
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(16, os.cpu_count() or 1)))

__version__ = "0.1.0"
