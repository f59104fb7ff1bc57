"""Backend selection for the trajectory loop.

The compiled extension is used when importable; set ``CLOCKWORK_PURE_PYTHON=1``
to force the pure-Python loop. Both backends consume identical uniform
streams and agree step for step.
"""

import os

from . import _pykernel

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _pykernel}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled

if os.environ.get("CLOCKWORK_PURE_PYTHON", "").strip() not in ("", "0") or _compiled is None:
    default = _pykernel
else:
    default = _compiled

BACKEND = default.NAME


def available():
    return sorted(_BACKENDS)


def get(name=None):
    """Return the backend module called ``name`` (default backend if ``None``)."""
    if name is None:
        return default
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {available()}") from None
