"""Approximation and Weyl numbers, the weak cotype ratio and Koenig's inequality.

``x_n(T) = sup { a_n(T u) : ||u: l_2 -> E|| <= 1 }``.  For ``E = l_inf^m`` the
constraint says every row of the ``m x r`` matrix ``u`` lies in the unit ball
of ``l_2^r``; with the Hilbert domain flag it is the spectral-norm ball.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, UnsupportedConfiguration
from .summing import OperatorCK, OptimizerConfig
from .rng import substream


@dataclass
class SNumberSequence:
    values: np.ndarray
    kind: str
    method: str
    converged: np.ndarray | None = None
    witnesses: list = field(default_factory=list, repr=False)


def _require_l2_target(T: OperatorCK) -> None:
    if T.target_p != 2:
        raise UnsupportedConfiguration("s-numbers are implemented for l_2 targets only")


def approximation_numbers(T: OperatorCK) -> SNumberSequence:
    """Singular values, descending; only the Hilbert-Hilbert case is supported."""
    _require_l2_target(T)
    if T.domain != "l2":
        raise UnsupportedConfiguration(
            "approximation numbers are only computed for l_2 -> l_2 operators (domain='l2')"
        )
    s = np.linalg.svd(T.matrix, compute_uv=False)
    return SNumberSequence(s, "approximation", "svd")


def _project(u: np.ndarray, domain: str) -> np.ndarray:
    if domain == "linf":
        nrm = np.linalg.norm(u, axis=-1, keepdims=True)
        return u / np.maximum(nrm, 1.0)
    U, s, Vh = np.linalg.svd(u, full_matrices=False)
    return (U * np.minimum(s, 1.0)[..., None, :]) @ Vh


def _sv(A: np.ndarray, n: int) -> np.ndarray:
    s = np.linalg.svd(A, compute_uv=False)
    return s[..., n - 1] if s.shape[-1] >= n else np.zeros(A.shape[:-2])


def _ascend_sv(T: OperatorCK, n: int, u0: np.ndarray, cfg: OptimizerConfig):
    """Projected ascent on ``sigma_n(T u)`` with a per-restart adaptive step."""
    M = T.matrix
    u = _project(u0, T.domain)
    vals = _sv(M @ u, n)
    eta = np.full(len(u), cfg.step)
    history = [vals.max()]
    converged, it = False, 0
    rng = substream(cfg.seed, "weyl-jitter", n)
    for it in range(1, cfg.iterations + 1):
        U, s, Vh = np.linalg.svd(M @ u, full_matrices=False)
        G = M.T @ (U[..., :, n - 1, None] * Vh[..., None, n - 1, :])
        # near-degenerate n-th singular value: random jitter breaks the tie
        if s.shape[-1] > n:
            gap = np.minimum(np.abs(s[:, n - 2] - s[:, n - 1]) if n > 1 else np.inf,
                             np.abs(s[:, n - 1] - s[:, n]))
            tie = gap < 1e-8
            if tie.any():
                G[tie] += 1e-3 * rng.standard_normal(G[tie].shape)
        gn = np.linalg.norm(G.reshape(len(G), -1), axis=1)
        live = (gn > 0) & (eta > 1e-12)
        if not live.any():
            converged = True
            break
        step = np.where(live, eta / np.where(gn > 0, gn, 1.0), 0.0)
        cand = _project(u + step[:, None, None] * G, T.domain)
        cv = _sv(M @ cand, n)
        up = live & (cv > vals)
        u[up], vals[up] = cand[up], cv[up]
        eta = np.where(up, np.minimum(eta * 1.5, 8.0), eta * 0.5)
        history.append(vals.max())
        if it >= 30 and history[-1] - history[-30] <= cfg.tol * max(history[-1], 1e-300):
            converged = True
            break
    return u, vals, converged


def weyl_numbers(T: OperatorCK, k_max: int, cfg: OptimizerConfig) -> SNumberSequence:
    """Lower-bound certificates for ``x_1(T), ..., x_{k_max}(T)``.

    Every witness ``u`` found for some ``n`` is scored at all ``n``; then the
    sequence is made non-increasing by reverse cumulative maxima, which stays
    a valid lower bound because ``x_n >= x_{n+1}``.
    """
    _require_l2_target(T)
    if k_max < 1:
        raise InvalidInput("k_max must be >= 1")
    m, d = T.m, T.d
    r = min(m, d) + k_max
    rng = substream(cfg.seed, "weyl", m, d)
    eye = np.zeros((1, m, r))
    eye[0, :, :m] = np.eye(m)
    rank = min(m, d)
    best = np.zeros(k_max)
    flags = np.ones(k_max, dtype=bool)
    witnesses = []
    for n in range(1, min(k_max, rank) + 1):
        u0 = np.concatenate([eye, rng.standard_normal((cfg.restarts, m, r))])
        u, vals, conv = _ascend_sv(T, n, u0, cfg)
        w = u[int(np.argmax(vals))]
        witnesses.append(w)
        s = np.linalg.svd(T.matrix @ w, compute_uv=False)[:k_max]
        best[: len(s)] = np.maximum(best[: len(s)], s)
        flags[n - 1] = conv
    best = np.maximum.accumulate(best[::-1])[::-1]
    return SNumberSequence(best, "weyl", "projected-ascent", flags, witnesses)


def weak_cotype_ratio(T: OperatorCK, q: float, k_max: int, cfg: OptimizerConfig,
                      weyl: SNumberSequence | None = None) -> tuple[float, bool]:
    """``max_{k <= k_max} k^(1/q) x_k(T) / sqrt(log(k+1))`` and an all-converged flag."""
    if not 2 < q < np.inf:
        raise InvalidInput("q must lie in (2, inf)")
    weyl = weyl or weyl_numbers(T, k_max, cfg)
    k = np.arange(1, k_max + 1, dtype=float)
    ratio = k ** (1.0 / q) * weyl.values[:k_max] / np.sqrt(np.log1p(k))
    return float(ratio.max()), bool(np.all(weyl.converged))


def konig_check(S) -> tuple[float, float, float]:
    """``pi_2(S)`` (Hilbert-Schmidt norm) against ``sum_k a_k(S) / sqrt(k)``."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or not np.all(np.isfinite(S)):
        raise InvalidInput("S must be a finite matrix")
    s = np.linalg.svd(S, compute_uv=False)
    lhs = float(np.sqrt(np.sum(s * s)))
    rhs = float(np.sum(s / np.sqrt(np.arange(1, len(s) + 1))))
    return lhs, rhs, lhs / rhs if rhs > 0 else 0.0
