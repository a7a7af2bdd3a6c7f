"""Pseudo-label tooling for semi-supervised instance segmentation.

Library modules:

- ``maskcore``: mask types, RLE codec, distance transform, IoU metrics.
- ``calib``: distribution-matched box/pixel threshold calibration and
  pseudo-label generation.
- ``bpmloss``: boundary-weight maps, re-weighted mask losses, dual-resolution
  targets.
- ``noiselab``: synthetic masks with boundary-localized noise and the
  analysis curves built from them.
- ``cli``: the ``pseudoforge`` command-line pipeline.
"""

__version__ = "0.1.0"

from . import errors
from ._kernels import BACKEND as KERNEL_BACKEND

__all__ = ["errors", "KERNEL_BACKEND", "__version__"]
