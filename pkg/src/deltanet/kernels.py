"""Backend selection for the hot loops.

The compiled Cython extension is used when it was built; otherwise the numpy
fallback in :mod:`deltanet._pykernels` takes over. Both give bit-identical
results, so the choice only affects speed.
"""

from contextlib import contextmanager

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

_impl = _ckernels if _ckernels is not None else _pykernels


def available_backends():
    return sorted(_BACKENDS)


def backend():
    """Name of the active backend, ``"cython"`` or ``"python"``."""
    return "cython" if _impl is _ckernels and _ckernels is not None else "python"


def set_backend(name):
    global _impl
    try:
        _impl = _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown or unavailable backend {name!r}; have {available_backends()}"
        ) from None


@contextmanager
def use_backend(name):
    previous = backend()
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def dense_matvec(W, x, out):
    return _impl.dense_matvec(W, x, out)


def dense_delta_accumulate(W, delta, acc):
    return _impl.dense_delta_accumulate(W, delta, acc)


def csc_delta_accumulate(indptr, indices, data, delta, acc):
    return _impl.csc_delta_accumulate(indptr, indices, data, delta, acc)


def threshold_delta(current, ref, theta, delta_out, ref_out):
    return _impl.threshold_delta(current, ref, theta, delta_out, ref_out)
