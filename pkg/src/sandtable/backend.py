"""Selects the kernel backend at import time.

The compiled extension is used when it imported cleanly; otherwise the
pure-Python reference takes over. Set SANDTABLE_PURE=1 to force the pure
backend (the parity tests run both and compare bytes).
"""

import os

if os.environ.get("SANDTABLE_PURE"):
    from . import _pure as _impl
else:
    try:
        from . import _speed as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _pure as _impl

substep_kernel = _impl.substep_kernel
raster_kernel = _impl.raster_kernel

#: "speed" when the compiled extension is active, "pure" otherwise.
BACKEND = "speed" if _impl.__name__.endswith("_speed") else "pure"
