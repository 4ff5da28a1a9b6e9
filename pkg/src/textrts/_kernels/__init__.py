"""Hot-path kernels with a compiled core and a pure-Python fallback.

Selection happens once at import: the Cython extension is used when present
unless TEXTRTS_PURE_KERNELS=1 forces the fallback. Both implementations are
integer-exact and agree bit-for-bit (enforced by tests).
"""

from __future__ import annotations

import os

if os.environ.get("TEXTRTS_PURE_KERNELS") == "1":
    from textrts._kernels import _pure as _impl

    KERNEL_BACKEND = "pure"
else:
    try:
        from textrts._kernels import _core as _impl  # type: ignore[no-redef]

        KERNEL_BACKEND = "compiled"
    except ImportError:
        from textrts._kernels import _pure as _impl  # type: ignore[no-redef]

        KERNEL_BACKEND = "pure"

levenshtein = _impl.levenshtein
combat_exchange = _impl.combat_exchange

__all__ = ["levenshtein", "combat_exchange", "KERNEL_BACKEND"]
