"""gelpress: synthetic GelSight-style tactile press videos plus a
convolutional-recurrent hardness regressor trained on them."""

import os

# The compiled kernels (OpenMP) and BLAS share two cores; spinning idle
# workers starve each other, so prefer sleeping waits. Must be set before
# libgomp initializes (i.e. before gelpress.net imports the extension).
os.environ.setdefault("OMP_WAIT_POLICY", "PASSIVE")

__version__ = "0.1.0"
