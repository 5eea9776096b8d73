"""Small argument checks used across modules."""

import hashlib
import math
import numbers

import numpy as np

from .exceptions import InvalidParameterError


def check_int(value, name, *, min_value=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise InvalidParameterError(f"{name} must be an integer, got {value!r}")
    if min_value is not None and value < min_value:
        raise InvalidParameterError(f"{name} must be >= {min_value}, got {value}")
    return int(value)


def check_real(value, name, *, low=None, high=None, low_inclusive=True, high_inclusive=True):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise InvalidParameterError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite, got {value}")
    if low is not None and (value < low or (value == low and not low_inclusive)):
        op = ">=" if low_inclusive else ">"
        raise InvalidParameterError(f"{name} must be {op} {low}, got {value}")
    if high is not None and (value > high or (value == high and not high_inclusive)):
        op = "<=" if high_inclusive else "<"
        raise InvalidParameterError(f"{name} must be {op} {high}, got {value}")
    return value


def check_probability_vector(p, n, name="probs", atol=1e-9):
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (n,):
        raise InvalidParameterError(f"{name} must have shape ({n},), got {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise InvalidParameterError(f"{name} must be finite and non-negative")
    if abs(p.sum() - 1.0) > atol:
        raise InvalidParameterError(f"{name} must sum to 1, got {p.sum()!r}")
    return p


def derive_seed(root_seed, *labels):
    """Derive an independent 64-bit seed from a root seed and a label path.

    >>> derive_seed(42, "data") == derive_seed(42, "data")
    True
    >>> derive_seed(42, "data") != derive_seed(42, "selection")
    True
    """
    payload = "/".join([str(int(root_seed))] + [str(label) for label in labels])
    digest = hashlib.blake2b(payload.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")
