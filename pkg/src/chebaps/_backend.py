"""Pick the compiled kernels when importable, else the numpy fallback."""

import os

if os.environ.get("CHEBAPS_PURE", "") == "1":
    from . import _fallback as kernels
    COMPILED = False
else:
    try:
        from . import _kernels as kernels
        COMPILED = True
    except ImportError:  # extension not built
        from . import _fallback as kernels
        COMPILED = False

KERNELS = "cython" if COMPILED else "numpy"
