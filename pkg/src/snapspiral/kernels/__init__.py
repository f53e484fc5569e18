"""Element kernel selection: compiled Cython core if available, numpy fallback.

Both backends implement the identical contract and are compared directly in
``benchmarks/bench_kernels.py`` and the kernel-parity test.
"""

try:
    from . import _corotational_cy as _impl

    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on build environment
    from . import _corotational_py as _impl

    BACKEND = "python"

from . import _corotational_py as python_impl

batch_force_tangent = _impl.batch_force_tangent
batch_energy = _impl.batch_energy
