"""Finite (X, q)-summing norms of operators ``T: l_inf^m -> l_p^d``.

``pi_{X,q}^n(T) = sup { ||(||T x_k||)_k||_X : omega_q(x_1..x_n) <= 1 }``.  On
``l_inf^m`` the weak-l_q constraint is columnwise: at every point ``t`` the
vector ``(x_1(t), ..., x_n(t))`` lies in the unit ball of ``l_q^n``.

The objective is convex in the system whenever X is a lattice norm, so for
``q = 1`` the supremum sits on an extreme point of the product of l_1 balls:
each point ``t`` is given to one vector with a sign.  ``pi_exact_q1``
enumerates those up to the symmetries of X (block relabelling, a global sign
per vector).  ``pi_opt`` is the general multi-restart optimiser.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import CapacityError, InvalidInput, UnsupportedConfiguration
from .randnorm import as_system, sign_patterns
from .rng import substream
from .seqspace import SpaceDescriptor

EXACT_OPNORM_CAP = 20
EXACT_Q1_MAX_M = 8
EXACT_Q1_MAX_N = 4


@dataclass(frozen=True)
class OptimizerConfig:
    seed: int
    restarts: int = 32
    iterations: int = 500
    step: float = 0.5
    tol: float = 1e-7

    def __post_init__(self):
        if self.restarts < 1 or self.iterations < 1:
            raise InvalidInput("restarts and iterations must be >= 1")
        if not self.step > 0:
            raise InvalidInput("step must be positive")


@dataclass
class NormCertificate:
    value: float
    witness: np.ndarray
    method: str
    restarts_used: int = 0
    iterations: int = 0
    converged: bool = True
    seed: int | None = None
    extra: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# operators


def _target_norms(Y: np.ndarray, p: float) -> np.ndarray:
    if p == 1:
        return np.abs(Y).sum(axis=-1)
    if p == 2:
        return np.sqrt((Y * Y).sum(axis=-1))
    if p == math.inf:
        return np.abs(Y).max(axis=-1)
    return np.sum(np.abs(Y) ** p, axis=-1) ** (1.0 / p)


def _target_gradient(Y: np.ndarray, p: float) -> np.ndarray:
    """Norming functionals in the dual unit ball, one per trailing vector."""
    if p == 1:
        return np.sign(Y)
    if p == 2:
        nrm = np.sqrt((Y * Y).sum(axis=-1, keepdims=True))
        return np.divide(Y, nrm, out=np.zeros_like(Y), where=nrm > 0)
    if p < math.inf:
        nrm = _target_norms(Y, p)[..., None]
        H = np.sign(Y) * np.abs(np.divide(Y, nrm, out=np.zeros_like(Y), where=nrm > 0)) ** (p - 1)
        return H
    idx = np.argmax(np.abs(Y), axis=-1)
    H = np.zeros_like(Y)
    np.put_along_axis(H, idx[..., None], np.sign(np.take_along_axis(Y, idx[..., None], -1)), -1)
    return H


@dataclass(frozen=True, eq=False)
class OperatorCK:
    """A ``d x m`` matrix acting from ``l_inf^m`` (or ``l_2^m``) into ``l_p^d``.

    Targets ``p`` in {1, 2, inf} are the supported configurations; other
    ``p >= 1`` are accepted for internal compositions such as ``D_sigma R T``.
    """

    matrix: np.ndarray
    target_p: float = 2.0
    domain: str = "linf"

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=float)
        if a.ndim == 1:
            a = a[None, :]
        if a.ndim != 2 or a.size == 0:
            raise InvalidInput("operator matrix must be a non-empty d x m array")
        if not np.all(np.isfinite(a)):
            raise InvalidInput("operator matrix has a non-finite entry")
        p = float(self.target_p)
        if not p >= 1:
            raise InvalidInput("target exponent must lie in [1, inf]")
        if self.domain not in ("linf", "l2"):
            raise InvalidInput("domain must be 'linf' or 'l2'")
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "target_p", p)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def m(self) -> int:
        return self.matrix.shape[1]

    def scaled(self, c: float) -> "OperatorCK":
        return OperatorCK(c * self.matrix, self.target_p, self.domain)

    def compose_right(self, A: np.ndarray) -> "OperatorCK":
        return OperatorCK(self.matrix @ A, self.target_p, self.domain)

    def image_norms(self, x: np.ndarray) -> np.ndarray:
        """``||T x_k||_F`` along the last-but-one axis of ``x`` (``..., n, m``)."""
        return _target_norms(x @ self.matrix.T, self.target_p)

    def operator_norm(self, cap: int = EXACT_OPNORM_CAP, seed: int = 0) -> float:
        if self.domain == "l2":
            if self.target_p != 2:
                raise UnsupportedConfiguration("l_2 domain is only supported with an l_2 target")
            return float(np.linalg.norm(self.matrix, 2))
        m = self.m
        if m <= cap:
            best = 0.0
            total = 1 << (m - 1)
            for start in range(0, total, 1 << 16):
                xi = sign_patterns(m, start, start + (1 << 16))
                best = max(best, float(_target_norms(xi @ self.matrix.T, self.target_p).max()))
            return best
        return _sampled_opnorm(self, seed)


def _sampled_opnorm(T: OperatorCK, seed: int, samples: int = 4096) -> float:
    rng = substream(seed, "opnorm")
    xi = np.sign(rng.standard_normal((samples, T.m)))
    xi[xi == 0] = 1.0
    for _ in range(50):
        H = _target_gradient(xi @ T.matrix.T, T.target_p)
        new = np.sign(H @ T.matrix)
        new[new == 0] = 1.0
        if np.array_equal(new, xi):
            break
        xi = new
    return float(_target_norms(xi @ T.matrix.T, T.target_p).max())


def omega_q(x, q: float) -> float:
    """Weak l_q norm of a system in l_inf^m: ``max_t ||(x_k(t))_k||_q``."""
    x = as_system(x)
    q = float(q)
    if not q >= 1:
        raise InvalidInput("q must lie in [1, inf]")
    if q == math.inf:
        return float(np.abs(x).max())
    return float(np.max(np.sum(np.abs(x) ** q, axis=0) ** (1.0 / q)))


# --------------------------------------------------------------------------
# objective


def objective(T: OperatorCK, X: SpaceDescriptor, x: np.ndarray) -> np.ndarray:
    """``||(||T x_k||)_k||_X`` for a stack of systems ``(..., n, m)``."""
    x = np.asarray(x, dtype=float)
    lead = x.shape[:-2]
    V = T.image_norms(x).reshape(-1, x.shape[-2])
    return X.norm_many(V).reshape(lead)


def objective_gradient(T: OperatorCK, X: SpaceDescriptor, x: np.ndarray):
    """Values and (sub)gradients for a stack ``(R, n, m)`` of systems."""
    Y = x @ T.matrix.T
    V = _target_norms(Y, T.target_p)
    vals, GX = X.gradient_many(V)
    H = _target_gradient(Y, T.target_p)
    return vals, np.abs(GX)[..., None] * (H @ T.matrix)


# --------------------------------------------------------------------------
# exact q = 1


@lru_cache(maxsize=32)
def canonical_assignments(m: int, n: int) -> np.ndarray:
    """Assignments of points to (block, sign) modulo relabelling and block sign.

    Entry ``+-k`` puts the point into vector ``k`` with that sign, ``0`` leaves
    it out.  Blocks open in order and each block's first point has sign +.
    """
    rows = np.zeros((1, 0), dtype=np.int8)
    nb = np.zeros(1, dtype=np.int8)
    for _ in range(m):
        parts, counts = [], []
        parts.append(np.hstack([rows, np.zeros((len(rows), 1), np.int8)]))
        counts.append(nb)
        for j in range(1, n + 1):
            ok = nb >= j
            for s in (j, -j):
                parts.append(np.hstack([rows[ok], np.full((ok.sum(), 1), s, np.int8)]))
                counts.append(nb[ok])
        ok = nb < n
        parts.append(np.hstack([rows[ok], (nb[ok] + 1)[:, None].astype(np.int8)]))
        counts.append(nb[ok] + 1)
        rows = np.vstack(parts)
        nb = np.concatenate(counts).astype(np.int8)
    rows.setflags(write=False)
    return rows


def assignment_system(a: np.ndarray, n: int) -> np.ndarray:
    a = np.asarray(a)
    x = np.zeros(a.shape[:-1] + (n, a.shape[-1]))
    for k in range(1, n + 1):
        x[..., k - 1, :] = (a == k).astype(float) - (a == -k)
    return x


def pi_exact_q1(T: OperatorCK, X: SpaceDescriptor, n: int, max_m: int = EXACT_Q1_MAX_M,
                max_n: int = EXACT_Q1_MAX_N, chunk: int = 1 << 15) -> NormCertificate:
    """Exact ``pi_{X,1}^n(T)`` by enumeration of extreme points."""
    if n < 1:
        raise InvalidInput("n must be >= 1")
    if T.m > max_m or n > max_n:
        raise CapacityError(
            f"exact q=1 enumeration is capped at m <= {max_m}, n <= {max_n} "
            f"(got m={T.m}, n={n}); use pi_opt instead"
        )
    A = canonical_assignments(T.m, n)
    best_val, best_row = -1.0, None
    for start in range(0, len(A), chunk):
        block = A[start:start + chunk]
        V = np.empty((len(block), n))
        for k in range(1, n + 1):
            C = (block == k).astype(float) - (block == -k)
            V[:, k - 1] = _target_norms(C @ T.matrix.T, T.target_p)
        vals = X.norm_many(V)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_row = float(vals[i]), block[i]
    return NormCertificate(best_val, assignment_system(best_row, n), "extreme-enum",
                           extra={"assignments": len(A)})


def exact_q1_feasible(T: OperatorCK, n: int) -> bool:
    return T.m <= EXACT_Q1_MAX_M and n <= EXACT_Q1_MAX_N


# --------------------------------------------------------------------------
# projections and linear maximisation over the feasible set


def _project_l1_rows(V: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the unit l_1 ball."""
    A = np.abs(V)
    inside = A.sum(axis=1) <= 1.0
    if inside.all():
        return V
    U = -np.sort(-A, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    idx = np.arange(1, V.shape[1] + 1)
    cond = U - css / idx > 0
    rho = V.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(len(V)), rho] / (rho + 1)
    out = np.sign(V) * np.maximum(A - theta[:, None], 0.0)
    out[inside] = V[inside]
    return out


def project_columns(x: np.ndarray, q: float) -> np.ndarray:
    """Project every column ``x[..., :, t]`` onto the unit ball of ``l_q^n``."""
    cols = np.swapaxes(x, -1, -2)
    shape = cols.shape
    flat = cols.reshape(-1, shape[-1])
    if q == 2:
        nrm = np.linalg.norm(flat, axis=1, keepdims=True)
        flat = flat / np.maximum(nrm, 1.0)
    elif q == 1:
        flat = _project_l1_rows(flat)
    else:  # pragma: no cover - guarded by callers
        raise UnsupportedConfiguration("only q in {1, 2} is supported")
    return np.swapaxes(flat.reshape(shape), -1, -2)


def best_response(G: np.ndarray, q: float) -> np.ndarray:
    """Columnwise maximiser of ``<G, x>`` over the product of l_q balls."""
    if q == 2:
        nrm = np.linalg.norm(G, axis=-2, keepdims=True)
        return np.divide(G, nrm, out=np.zeros_like(G), where=nrm > 0)
    k = np.argmax(np.abs(G), axis=-2)
    x = np.zeros_like(G)
    s = np.sign(np.take_along_axis(G, k[..., None, :], axis=-2))
    np.put_along_axis(x, k[..., None, :], np.where(s == 0, 1.0, s), axis=-2)
    return x


def random_feasible(rng: np.random.Generator, R: int, n: int, m: int, q: float) -> np.ndarray:
    x = rng.standard_normal((R, n, m))
    if q == 1:
        x = x * (rng.random((R, n, m)) < 0.5) + 1e-3 * x
        nrm = np.abs(x).sum(axis=1, keepdims=True)
    else:
        nrm = np.linalg.norm(x, axis=1, keepdims=True)
    return x / np.maximum(nrm, 1e-300)


# --------------------------------------------------------------------------
# optimiser


def _vertex_local_search(T, X, x, vals, n, max_sweeps=20):
    """Single-point reassignment search over the q=1 extreme points."""
    R, _, m = x.shape
    options = [(k, s) for k in range(n) for s in (1.0, -1.0)]
    for _ in range(max_sweeps):
        improved = False
        for t in range(m):
            cand = np.repeat(x[:, None], len(options), axis=1)
            cand[:, :, :, t] = 0.0
            for j, (k, s) in enumerate(options):
                cand[:, j, k, t] = s
            cv = objective(T, X, cand)
            j = np.argmax(cv, axis=1)
            better = cv[np.arange(R), j] > vals * (1 + 1e-12)
            if better.any():
                improved = True
                x[better] = cand[np.arange(R), j][better]
                vals[better] = cv[np.arange(R), j][better]
        if not improved:
            break
    return x, vals


def ascend(T: OperatorCK, X: SpaceDescriptor, q: float, x: np.ndarray,
           cfg: OptimizerConfig) -> tuple[np.ndarray, np.ndarray, int, bool]:
    """Projected subgradient ascent, then best-response polishing, on a batch."""
    m = x.shape[-1]
    x = project_columns(x, q)
    vals = objective(T, X, x)
    best_x, best = x.copy(), vals.copy()
    history = [best.max()]
    converged = False
    it = 0
    for it in range(1, cfg.iterations + 1):
        _, G = objective_gradient(T, X, x)
        gn = np.linalg.norm(G.reshape(len(G), -1), axis=1)
        step = cfg.step / math.sqrt(it) * math.sqrt(m)
        x = project_columns(x + step * G / np.maximum(gn, 1e-300)[:, None, None], q)
        vals = objective(T, X, x)
        up = vals > best
        best_x[up], best[up] = x[up], vals[up]
        history.append(best.max())
        if it >= 25 and history[-1] - history[-25] <= cfg.tol * max(history[-1], 1e-300):
            converged = True
            break
    x, vals = best_x, best
    for _ in range(200):
        _, G = objective_gradient(T, X, x)
        cand = best_response(G, q)
        cv = objective(T, X, cand)
        up = cv > vals * (1 + 1e-13)
        if not up.any():
            break
        x[up], vals[up] = cand[up], cv[up]
    if q == 1:
        x, vals = _vertex_local_search(T, X, x, vals, x.shape[1])
    return x, vals, it, converged


def pi_opt(T: OperatorCK, X: SpaceDescriptor, q: float, n: int, cfg: OptimizerConfig,
           use_exact: bool = True, starts: np.ndarray | None = None) -> NormCertificate:
    """Lower-bound certificate for ``pi_{X,q}^n(T)``.

    ``starts`` are extra warm-start systems ``(k, n, m)``.  With ``use_exact``
    and ``q = 1`` inside the enumeration caps the exact value is folded in.
    """
    q = float(q)
    if q not in (1.0, 2.0):
        raise UnsupportedConfiguration(f"pi_opt supports q in {{1, 2}}, got {q}")
    if n < 1:
        raise InvalidInput("n must be >= 1")
    rng = substream(cfg.seed, "pi_opt", n, T.m)
    x0 = random_feasible(rng, cfg.restarts, n, T.m, q)
    if starts is not None:
        x0 = np.concatenate([np.asarray(starts, float).reshape(-1, n, T.m), x0])
    x, vals, iters, converged = ascend(T, X, q, x0, cfg)
    i = int(np.argmax(vals))
    cert = NormCertificate(float(vals[i]), x[i], "projected-ascent", len(x0), iters, converged,
                           cfg.seed)
    if use_exact and q == 1 and exact_q1_feasible(T, n):
        exact = pi_exact_q1(T, X, n)
        cert.extra["optimizer_value"] = cert.value
        if exact.value > cert.value:
            cert.value, cert.witness = exact.value, exact.witness
        cert.method = "hybrid"
    return cert


def pi_monotonicity_suite(T: OperatorCK, X: SpaceDescriptor, q: float, n_list, cfg: OptimizerConfig,
                          use_exact: bool = True) -> list[float]:
    """``pi_{X,q}^n(T)`` over increasing ``n``; each run is warm-started from the
    previous witness padded with a zero vector, so the values never decrease."""
    n_list = list(n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise InvalidInput("n_list must be increasing")
    out, prev = [], None
    for n in n_list:
        starts = None
        if prev is not None:
            pad = np.zeros((n, T.m))
            pad[: prev.shape[0]] = prev
            starts = pad[None]
        cert = pi_opt(T, X, q, n, cfg, use_exact=use_exact, starts=starts)
        out.append(cert.value)
        prev = cert.witness
    return out
