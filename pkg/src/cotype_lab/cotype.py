"""Rademacher and gaussian cotype-X constants ``rc_X^n(T)``, ``gc_X^n(T)``.

Both are suprema of the homogeneous ratio ``||(||T x_k||)_k||_X / D(x)`` where
``D`` is the L_2 norm of the random sum.  They are computed by ascent on the
ratio with the iterate renormalised to ``D = 1`` after each step.  Values are
lower-bound certificates.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput
from .randnorm import (
    EXACT_ENUM_CAP,
    NormEstimate,
    as_system,
    gaussian_l2_mc,
    gaussian_matrix,
    rademacher_l2_exact,
    rademacher_l2_mc,
    sign_matrix,
    sign_patterns,
)
from .rng import derive_seed, substream
from .seqspace import Lp, LqLogHalf, SpaceDescriptor
from .summing import OperatorCK, OptimizerConfig, objective, objective_gradient, pi_opt


@dataclass(frozen=True)
class CotypeConfig:
    seed: int
    restarts: int = 16
    iterations: int = 300
    step: float = 0.5
    tol: float = 1e-7
    search_samples: int = 20_000
    final_samples: int = 200_000
    exact_cap: int = EXACT_ENUM_CAP

    def __post_init__(self):
        if self.restarts < 1 or self.iterations < 1:
            raise InvalidInput("restarts and iterations must be >= 1")
        if self.search_samples < 100 or self.final_samples < 100:
            raise InvalidInput("sample budgets must be >= 100")


@dataclass
class CotypeCertificate:
    value: float
    witness: np.ndarray
    denominator_estimate: NormEstimate
    method: str
    seed: int | None = None
    converged: bool = True
    iterations: int = 0
    restarts_used: int = 0
    std_error: float = 0.0
    search_value: float = 0.0
    extra: dict = field(default_factory=dict)


class SampleDenominator:
    """``(mean_s max_t |sum_k xi[s,k] x[k,t]|^2) ** 0.5`` over a fixed sample set."""

    def __init__(self, xi: np.ndarray):
        self.xi = np.asarray(xi, dtype=float)

    def value(self, x: np.ndarray) -> np.ndarray:
        S = np.matmul(self.xi, x)
        return np.sqrt(np.mean(np.max(S * S, axis=-1), axis=-1))

    def value_grad(self, x: np.ndarray):
        S = np.matmul(self.xi, x)
        idx = np.argmax(np.abs(S), axis=-1)
        top = np.take_along_axis(S, idx[..., None], -1)
        D = np.sqrt(np.mean(top[..., 0] ** 2, axis=-1))
        W = np.zeros_like(S)
        np.put_along_axis(W, idx[..., None], top, -1)
        G = np.matmul(self.xi.T, W) / len(self.xi)
        return D, G / np.where(D > 0, D, 1.0)[:, None, None]


def _normalize(den: SampleDenominator, x: np.ndarray) -> np.ndarray:
    d = den.value(x)
    return x / np.where(d > 0, d, 1.0)[:, None, None]


def ratio_ascent(T: OperatorCK, X: SpaceDescriptor, den: SampleDenominator, x0: np.ndarray,
                 iterations: int, step: float, tol: float, mask: np.ndarray | None = None):
    """Batched ascent on ``Phi / D`` with per-restart adaptive steps.

    ``mask`` (same shape as ``x0``) freezes the zero pattern of each restart.
    """
    x = _normalize(den, np.array(x0, dtype=float))
    vals = objective(T, X, x) / np.maximum(den.value(x), 1e-300)
    eta = np.full(len(x), step)
    history = [vals.max()]
    converged, it = False, 0
    for it in range(1, iterations + 1):
        phi, gphi = objective_gradient(T, X, x)
        _, gden = den.value_grad(x)
        g = gphi - phi[:, None, None] * gden
        if mask is not None:
            g = g * mask
        gn = np.linalg.norm(g.reshape(len(g), -1), axis=1)
        xn = np.linalg.norm(x.reshape(len(x), -1), axis=1)
        live = (gn > 0) & (eta > 1e-12)
        if not live.any():
            converged = True
            break
        scale = np.where(live, eta * xn / np.where(gn > 0, gn, 1.0), 0.0)
        cand = _normalize(den, x + scale[:, None, None] * g)
        cv = objective(T, X, cand) / np.maximum(den.value(cand), 1e-300)
        up = live & (cv > vals)
        x[up], vals[up] = cand[up], cv[up]
        eta = np.where(up, np.minimum(eta * 1.5, 4.0), eta * 0.5)
        history.append(vals.max())
        if it >= 30 and history[-1] - history[-30] <= tol * max(history[-1], 1e-300):
            converged = True
            break
    return x, vals, it, converged


def _starts(rng: np.random.Generator, R: int, n: int, m: int) -> np.ndarray:
    """Dense gaussian starts and signed disjoint-support starts, half each."""
    dense = rng.standard_normal((R - R // 2, n, m))
    k = rng.integers(0, n, size=(R // 2, m))
    s = rng.choice([-1.0, 1.0], size=(R // 2, m))
    disjoint = np.zeros((R // 2, n, m))
    np.put_along_axis(disjoint, k[:, None, :], s[:, None, :], axis=1)
    return np.concatenate([dense, disjoint])


def _summing_starts(T, X, n, cfg) -> np.ndarray:
    """Witnesses of ``pi_{X,1}^n`` and ``pi_{X,2}^n``.

    An ``omega_1``-feasible system has every random sum bounded by 1 pointwise,
    so the first start already certifies ``rc >= pi_{X,1}``.
    """
    ocfg = OptimizerConfig(seed=derive_seed(cfg.seed, "summing-starts"), restarts=8, iterations=150)
    return np.stack([pi_opt(T, X, q, n, ocfg, use_exact=False).witness for q in (1, 2)])


def _run(T, X, n, cfg, den, starts, tag):
    if n < 1:
        raise InvalidInput("n must be >= 1")
    rng = substream(cfg.seed, tag, n, T.m)
    x0 = np.concatenate([_summing_starts(T, X, n, cfg), _starts(rng, cfg.restarts, n, T.m)])
    if starts is not None:
        x0 = np.concatenate([np.asarray(starts, float).reshape(-1, n, T.m), x0])
    x0 = x0[np.linalg.norm(x0.reshape(len(x0), -1), axis=1) > 0]
    x, vals, it, conv = ratio_ascent(T, X, den, x0, cfg.iterations, cfg.step, cfg.tol)
    i = int(np.argmax(vals))
    return x[i], float(vals[i]), it, conv, len(x0)


def rc_n(T: OperatorCK, X: SpaceDescriptor, n: int, cfg: CotypeConfig,
         starts: np.ndarray | None = None) -> CotypeCertificate:
    """Lower-bound certificate for ``rc_X^n(T)``.

    The denominator is exact (all sign patterns) when ``n <= cfg.exact_cap``;
    otherwise the search uses fixed Monte Carlo signs and the final value is
    re-estimated on fresh ones.
    """
    exact = n <= cfg.exact_cap
    xi = sign_patterns(n) if exact else sign_matrix(cfg.seed, cfg.search_samples, n)
    w, search, it, conv, used = _run(T, X, n, cfg, SampleDenominator(xi), starts, "rc")
    if exact:
        est = rademacher_l2_exact(w, cfg.exact_cap)
    else:
        est = rademacher_l2_mc(w, cfg.final_samples, derive_seed(cfg.seed, "rc-final"))
    return _certificate(T, X, w, est, "ratio-ascent/exact-denominator" if exact else "ratio-ascent/mc",
                        cfg, conv, it, used, search)


def gc_n(T: OperatorCK, X: SpaceDescriptor, n: int, cfg: CotypeConfig,
         starts: np.ndarray | None = None) -> CotypeCertificate:
    """Lower-bound certificate for ``gc_X^n(T)`` with a gaussian Monte Carlo denominator.

    The search shares one gaussian sample set across all candidates; the
    reported denominator is an independent estimate with ``cfg.final_samples``.
    """
    den = SampleDenominator(gaussian_matrix(cfg.seed, cfg.search_samples, n))
    w, search, it, conv, used = _run(T, X, n, cfg, den, starts, "gc")
    est = gaussian_l2_mc(w, cfg.final_samples, derive_seed(cfg.seed, "gc-final"))
    return _certificate(T, X, w, est, "ratio-ascent/mc", cfg, conv, it, used, search)


def _certificate(T, X, w, est, method, cfg, conv, it, used, search):
    phi = float(objective(T, X, w[None])[0])
    if est.value <= 0 or phi == 0:
        return CotypeCertificate(0.0, w, est, method, cfg.seed, conv, it, used, 0.0, search)
    value = phi / est.value
    return CotypeCertificate(value, w, est, method, cfg.seed, conv, it, used,
                             value * est.std_error / est.value, search)


def gauss_vs_rademacher_pointwise(x, samples: int = 200_000, seed: int = 0,
                                  cap: int = EXACT_ENUM_CAP) -> tuple[float, float]:
    """Gaussian (Monte Carlo) and Rademacher (exact) L_2 norms of the same system."""
    x = as_system(x)
    return gaussian_l2_mc(x, samples, seed).value, rademacher_l2_exact(x, cap).value


@dataclass(frozen=True)
class InequalitySamples:
    samples: int = 200
    seed: int = 0
    gaussian_samples: int = 20_000


@dataclass
class AbstractIneqReport:
    mode: str
    rows: list  # (lhs, denominator, empirical c)
    max_c: float
    bound: float
    reference: float
    passes: bool
    tol: float


def weighted_lq(values: np.ndarray, q: float, sign: int) -> np.ndarray:
    """``(sum_k (v_k* log(k+1)^(sign/2))^q)^(1/q)`` with ``v`` sorted decreasing."""
    v = -np.sort(-np.abs(np.atleast_2d(values)), axis=1)
    w = np.log1p(np.arange(1, v.shape[1] + 1)) ** (sign / 2.0)
    return np.sum((v * w) ** q, axis=1) ** (1.0 / q)


def abstract_ineq_check(T: OperatorCK, q: float, n: int, mode: str,
                        ensemble_cfg: InequalitySamples = InequalitySamples(),
                        cfg: CotypeConfig | None = None, tol: float = 1e-6) -> AbstractIneqReport:
    """Empirical constants of the two weighted-l_q cotype inequalities.

    ``mode="gaussian"`` divides ``(sum (||Tx_k||*/sqrt(log(k+1)))^q)^(1/q)`` by the
    Rademacher average; ``mode="rademacher"`` divides the sum with weights
    ``sqrt(log(k+1))`` by the gaussian average.  Norms are sorted decreasingly.

    ``bound`` is the matching certified constant: ``rc^n`` for the
    ``LqLogHalf(q, -1)`` space in gaussian mode and ``gc^n`` for
    ``LqLogHalf(q, +1)`` in Rademacher mode.  ``reference`` is the plain
    ``gc^n_{l_q}`` (resp. ``rc^n_{l_q}``) certificate the inequality is
    equivalent to up to constants.  Sampled systems are offered to the
    optimiser as starting points, so the check passes when no sampled ratio
    beats the certificate by more than ``tol`` relative.
    """
    if not 2 < q < np.inf:
        raise InvalidInput("q must lie in (2, inf)")
    if mode not in ("gaussian", "rademacher"):
        raise InvalidInput("mode must be 'gaussian' or 'rademacher'")
    cfg = cfg or CotypeConfig(seed=ensemble_cfg.seed)
    rng = substream(ensemble_cfg.seed, "abstract-ineq", n, T.m)
    scales = np.exp(rng.uniform(-2.0, 0.0, size=(ensemble_cfg.samples, n, 1)))
    xs = rng.standard_normal((ensemble_cfg.samples, n, T.m)) * scales
    if mode == "gaussian":
        den = SampleDenominator(sign_patterns(n) if n <= cfg.exact_cap
                                else sign_matrix(ensemble_cfg.seed, ensemble_cfg.gaussian_samples, n))
        sign = -1
    else:
        den = SampleDenominator(gaussian_matrix(ensemble_cfg.seed, ensemble_cfg.gaussian_samples, n))
        sign = +1
    lhs = weighted_lq(T.image_norms(xs), q, sign)
    d = den.value(xs)
    c = np.divide(lhs, d, out=np.zeros_like(lhs), where=d > 0)
    rows = list(zip(lhs.tolist(), d.tolist(), c.tolist()))
    max_c = float(c.max()) if len(c) else 0.0
    top = xs[np.argsort(-c)[: min(4, len(c))]]
    space = LqLogHalf(q, sign)
    if mode == "gaussian":
        bound = _search_value(rc_n(T, space, n, cfg, starts=top), den, T, space)
        reference = gc_n(T, Lp(q), n, cfg).value
    else:
        bound = _search_value(gc_n(T, space, n, cfg, starts=top), den, T, space)
        reference = rc_n(T, Lp(q), n, cfg).value
    passes = max_c <= bound * (1 + tol) + 1e-15
    return AbstractIneqReport(mode, rows, max_c, bound, reference, passes, tol)


def _search_value(cert: CotypeCertificate, den: SampleDenominator, T, space) -> float:
    """Certificate value measured with the same denominator as the samples."""
    d = den.value(cert.witness[None])[0]
    return float(objective(T, space, cert.witness[None])[0] / d) if d > 0 else 0.0



def _disjoint_part(x: np.ndarray) -> np.ndarray:
    """Keep, at every point, only the entry of largest modulus."""
    k = np.argmax(np.abs(x), axis=-2)
    out = np.zeros_like(x)
    np.put_along_axis(out, k[..., None, :], np.take_along_axis(x, k[..., None, :], -2), -2)
    return out


def gc_disjoint(T: OperatorCK, X: SpaceDescriptor, n: int, cfg: CotypeConfig,
                starts: np.ndarray | None = None) -> CotypeCertificate:
    """``gc_X^n`` restricted to systems of vectors with pairwise disjoint supports.

    Starting points are random signed assignments of points to vectors plus the
    disjoint parts of ``starts``; the ascent keeps each zero pattern fixed.
    """
    if n < 1:
        raise InvalidInput("n must be >= 1")
    rng = substream(cfg.seed, "gc-disjoint", n, T.m)
    x0 = _starts(rng, 2 * cfg.restarts, n, T.m)[cfg.restarts:]
    if starts is not None:
        x0 = np.concatenate([_disjoint_part(np.asarray(starts, float).reshape(-1, n, T.m)), x0])
    x0 = x0[np.linalg.norm(x0.reshape(len(x0), -1), axis=1) > 0]
    den = SampleDenominator(gaussian_matrix(cfg.seed, cfg.search_samples, n))
    x, vals, it, conv = ratio_ascent(T, X, den, x0, cfg.iterations, cfg.step, cfg.tol, mask=x0 != 0)
    i = int(np.argmax(vals))
    est = gaussian_l2_mc(x[i], cfg.final_samples, derive_seed(cfg.seed, "gc-disjoint-final"))
    return _certificate(T, X, x[i], est, "ratio-ascent/disjoint", cfg, conv, it, len(x0),
                        float(vals[i]))
