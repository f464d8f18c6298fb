"""Backend selection for the bit-level kernels.

The compiled extension is used when it imports; otherwise the pure-Python
module is. Set ``VOIPSTEGO_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("VOIPSTEGO_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

ones_complement_checksum = _impl.ones_complement_checksum
lsb_embed = _impl.lsb_embed
lsb_extract = _impl.lsb_extract
gather_bits = _impl.gather_bits

__all__ = [
    "BACKEND",
    "ones_complement_checksum",
    "lsb_embed",
    "lsb_extract",
    "gather_bits",
]
