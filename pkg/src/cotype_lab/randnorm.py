"""L_2 norms of random sign and gaussian sums ``sum_k xi_k x_k`` in l_inf^m.

All estimates are ``(E max_t |sum_k xi_k x_k(t)|^2) ** 0.5``.  Monte Carlo
draws give coefficient ``k`` its own substream, so the draws used for
coordinate ``k`` do not depend on how many rows the system has.  That makes
systems of different sizes share common random numbers, and appending zero
rows leaves an estimate bit-for-bit unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, InvalidInput
from .rng import substream

EXACT_ENUM_CAP = 20
_CHUNK = 1 << 16


@dataclass(frozen=True)
class NormEstimate:
    value: float
    std_error: float
    method: str
    samples: int
    seed: int | None = None


def as_system(x) -> np.ndarray:
    """Validate a vector system: an ``n x m`` array whose rows are ``x_k``."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidInput(f"vector system must be a non-empty n x m array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("vector system has a non-finite entry")
    return a


def sign_patterns(n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows of ``{+-1}^n`` with the first sign fixed to +1 (``2**(n-1)`` rows)."""
    total = 1 << max(n - 1, 0)
    stop = total if stop is None else min(stop, total)
    codes = np.arange(start, stop, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(max(n - 1, 0), dtype=np.int64)) & 1
    return np.hstack([np.ones((len(codes), 1)), 1.0 - 2.0 * bits])


def sup_squares(x: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """``max_t |sum_k xi[s, k] x[k, t]|^2`` for every sample row of ``xi``."""
    return np.max(np.abs(xi @ x), axis=1) ** 2


def rademacher_l2_exact(x, cap: int = EXACT_ENUM_CAP) -> NormEstimate:
    """Exact Rademacher average by enumerating all sign patterns.

    Patterns and their negatives give the same sup, so only ``2**(n-1)`` are
    evaluated.
    """
    x = as_system(x)
    n = x.shape[0]
    if n > cap:
        raise CapacityError(
            f"exact Rademacher enumeration needs n <= {cap} (got n={n}); "
            "use rademacher_l2_mc instead"
        )
    total_patterns = 1 << (n - 1)
    acc = 0.0
    for start in range(0, total_patterns, _CHUNK):
        acc += float(np.sum(sup_squares(x, sign_patterns(n, start, start + _CHUNK))))
    return NormEstimate(float(np.sqrt(acc / total_patterns)), 0.0, "exact-enum", total_patterns)


def gaussian_matrix(seed: int, samples: int, n: int) -> np.ndarray:
    return np.column_stack(
        [substream(seed, "gaussian", k).standard_normal(samples) for k in range(n)]
    )


def sign_matrix(seed: int, samples: int, n: int) -> np.ndarray:
    return np.column_stack(
        [1.0 - 2.0 * substream(seed, "rademacher", k).integers(0, 2, samples) for k in range(n)]
    )


def estimate_from_samples(x: np.ndarray, xi: np.ndarray, seed: int | None = None) -> NormEstimate:
    """Square root of the sample mean of ``max_t |.|^2``, delta-method standard error."""
    samples = xi.shape[0]
    parts = []
    for start in range(0, samples, _CHUNK):
        parts.append(sup_squares(x, xi[start:start + _CHUNK]))
    acc = np.concatenate(parts)
    mean = float(acc.mean())
    value = float(np.sqrt(mean))
    if value == 0.0:
        return NormEstimate(0.0, 0.0, "mc", samples, seed)
    se_mean = float(acc.std(ddof=1)) / np.sqrt(samples) if samples > 1 else 0.0
    return NormEstimate(value, float(se_mean / (2.0 * value)), "mc", samples, seed)


def _check_samples(samples: int) -> None:
    if samples < 100:
        raise InvalidInput("Monte Carlo estimates need samples >= 100")


def gaussian_l2_mc(x, samples: int, seed: int) -> NormEstimate:
    x = as_system(x)
    _check_samples(samples)
    return estimate_from_samples(x, gaussian_matrix(seed, samples, x.shape[0]), seed)


def rademacher_l2_mc(x, samples: int, seed: int) -> NormEstimate:
    x = as_system(x)
    _check_samples(samples)
    return estimate_from_samples(x, sign_matrix(seed, samples, x.shape[0]), seed)


def rademacher_l2(x, samples: int = 100_000, seed: int = 0,
                  cap: int = EXACT_ENUM_CAP) -> NormEstimate:
    """Exact when ``n <= cap``, Monte Carlo otherwise."""
    x = as_system(x)
    if x.shape[0] <= cap:
        return rademacher_l2_exact(x, cap)
    return rademacher_l2_mc(x, samples, seed)


def log_weights(n: int) -> np.ndarray:
    """``1 / sqrt(log(k + 1))`` for ``k = 1..n``."""
    return 1.0 / np.sqrt(np.log1p(np.arange(1, n + 1, dtype=float)))


def gaussian_log_weight_check(u, samples: int, seed: int) -> tuple[float, float]:
    """Gaussian average of ``x_k = u(e_k) / sqrt(log(k+1))`` against ``||u: l_2^n -> l_inf^m||``.

    ``u`` is ``m x n``: column ``k`` is the image of ``e_k`` and row ``t`` is the
    functional at the point ``t``.  Returns ``(lhs, rhs)``.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 2 or not np.all(np.isfinite(u)):
        raise InvalidInput("u must be a finite m x n matrix")
    rhs = float(np.max(np.linalg.norm(u, axis=1)))
    system = (u * log_weights(u.shape[1])).T
    lhs = gaussian_l2_mc(system, samples, seed).value
    return lhs, rhs
