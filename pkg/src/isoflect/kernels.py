"""Backend selection for the hot kernels.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
numpy implementation in ``_kernels_py`` is used.  Setting the environment
variable ``ISOFLECT_PURE_PYTHON=1`` forces the fallback.
"""

import os

if os.environ.get("ISOFLECT_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND
sc_vertex_radius = _impl.sc_vertex_radius
sc_map_many = _impl.sc_map_many
polygon_height_many = _impl.polygon_height_many

__all__ = ["BACKEND", "sc_vertex_radius", "sc_map_many", "polygon_height_many"]
