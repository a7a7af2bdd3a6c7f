"""Hot numeric kernels with a compiled core and a pure-Python fallback.

The compiled extension (``_core``, built from Cython) is preferred; when it
is missing the numpy fallback (``_fallback``) is selected at import time.
Both produce bit-identical results, so the choice never affects output,
only speed. ``BACKEND`` names the active one.
"""

from . import _fallback

try:
    from . import _core as _active
except ImportError:  # extension not built
    _active = _fallback

BACKEND = _active.BACKEND_NAME

distance_field = _active.distance_field
laplacian5 = _active.laplacian5
rle_encode = _active.rle_encode
rle_decode = _active.rle_decode


def available_backends():
    """Importable backend modules keyed by name (for tests and benchmarks)."""
    out = {_fallback.BACKEND_NAME: _fallback}
    if _active is not _fallback:
        out[_active.BACKEND_NAME] = _active
    return out
