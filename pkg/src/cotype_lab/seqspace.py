"""Norm calculus for maximal symmetric sequence spaces on finite sequences.

Every concrete space here is symmetric, so its norm only sees the
non-increasing rearrangement ``s = sigma*``.  On that cone the concrete
spaces reduce to one of two *profiles*:

* power:  ``(sum_k w_k s_k**r) ** (1/r)``
* sup:    ``max_k g_k s_k``

Both are convex on the cone (even when the functional is only a quasi-norm on
all sequences), which makes sequence duals computable exactly: a linear
objective over the cone-restricted unit ball.  For the power profile the
maximiser is given by a weighted isotonic regression (pool-adjacent-violators);
for the sup profile by running minima of the caps ``1/g_k``.

Spaces built from others (sequence duals and diagonal-operator spaces) use
those exact routes when the inner spaces allow it and fall back to
cutting planes (duals) or linearised ascent (diagonal operators) otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import linprog

from .errors import InvalidDescriptor, InvalidInput
from .rng import substream

_TINY = 1e-300


def as_sequence(sigma) -> np.ndarray:
    a = np.asarray(sigma, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1)
    if a.ndim != 1:
        raise InvalidInput(f"sequence must be one-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("sequence has a non-finite entry")
    return a


def rearrange_decreasing(sigma) -> np.ndarray:
    """Absolute values sorted non-increasingly (stable among ties)."""
    a = as_sequence(sigma)
    mag = np.abs(a)
    return mag[np.argsort(-mag, kind="stable")]


def _sorted_rows(V: np.ndarray):
    mag = np.abs(V)
    order = np.argsort(-mag, axis=1, kind="stable")
    return np.take_along_axis(mag, order, axis=1), order


def _unsort_rows(G_sorted: np.ndarray, order: np.ndarray, V: np.ndarray) -> np.ndarray:
    G = np.empty_like(G_sorted)
    np.put_along_axis(G, order, G_sorted, axis=1)
    return G * np.where(V < 0, -1.0, 1.0)


# --------------------------------------------------------------------------
# weights


@dataclass(frozen=True)
class WeightFunction:
    """``f(t) = t**a * log(t + 1)**b`` evaluated through ``g = f / f(1)``."""

    a: float
    b: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise InvalidDescriptor("weight exponents must be finite")

    @classmethod
    def power(cls, a: float) -> "WeightFunction":
        return cls(float(a), 0.0)

    @classmethod
    def power_log(cls, a: float, b: float) -> "WeightFunction":
        return cls(float(a), float(b))

    @property
    def kind(self) -> str:
        return "power" if self.b == 0.0 else "power_log"

    def _log_raw(self, t):
        t = np.asarray(t, dtype=float)
        out = self.a * np.log(t)
        if self.b != 0.0:
            out = out + self.b * np.log(np.log1p(t))
        return out

    def log(self, t):
        if np.any(np.asarray(t) < 1):
            raise InvalidInput("weight functions are defined on t >= 1")
        return self._log_raw(t) - self._log_raw(1.0)

    def __call__(self, t):
        return np.exp(self.log(t))

    def pow(self, p: float) -> "WeightFunction":
        return WeightFunction(self.a * p, self.b * p)

    def describe(self) -> str:
        if self.b == 0.0:
            return f"power:{self.a:g}"
        return f"power_log:{self.a:g}:{self.b:g}"


# --------------------------------------------------------------------------
# profiles


class Profile(NamedTuple):
    kind: str  # "power" or "sup"
    coef: np.ndarray
    r: float


def _profile_norm(prof: Profile, S: np.ndarray) -> np.ndarray:
    if prof.kind == "sup":
        return np.max(S * prof.coef, axis=1) if S.shape[1] else np.zeros(len(S))
    r = prof.r
    if r == 1.0:
        return S @ prof.coef
    # scale by the row max to keep large exponents finite
    m = S.max(axis=1) if S.shape[1] else np.zeros(len(S))
    safe = np.where(m > 0, m, 1.0)
    inner = (S / safe[:, None]) ** r @ prof.coef
    return np.where(m > 0, safe * inner ** (1.0 / r), 0.0)


def _profile_gradient(prof: Profile, S: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """Gradient on the cone; at zero the functional ``N(e_1) e_1``."""
    G = np.zeros_like(S)
    zero = vals <= _TINY
    if prof.kind == "sup":
        k = np.argmax(S * prof.coef, axis=1)
        G[np.arange(len(S)), k] = prof.coef[k]
    elif prof.r == 1.0:
        G[:] = prof.coef
    else:
        safe = np.where(zero, 1.0, vals)
        G = prof.coef * (S / safe[:, None]) ** (prof.r - 1.0)
    if np.any(zero):
        G[zero] = 0.0
        G[zero, 0] = prof.coef[0] if prof.kind == "sup" or prof.r == 1.0 else prof.coef[0] ** (1.0 / prof.r)
    return G


def _pava_decreasing(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Weighted least-squares projection of ``y`` onto non-increasing sequences."""
    vals: list[float] = []
    wts: list[float] = []
    cnts: list[int] = []
    for yi, wi in zip(y, w):
        vals.append(float(yi))
        wts.append(float(wi))
        cnts.append(1)
        while len(vals) > 1 and vals[-2] < vals[-1]:
            wsum = wts[-2] + wts[-1]
            v = (vals[-2] * wts[-2] + vals[-1] * wts[-1]) / wsum
            c = cnts[-2] + cnts[-1]
            del vals[-1], wts[-1], cnts[-1]
            vals[-1], wts[-1], cnts[-1] = v, wsum, c
    return np.repeat(vals, cnts)


def _profile_dual_sorted(prof: Profile, c: np.ndarray) -> tuple[float, np.ndarray]:
    """Maximise <c, s> over the cone-restricted unit ball; ``c`` sorted, >= 0."""
    n = len(c)
    if n == 0 or not np.any(c > 0):
        return 0.0, np.zeros(n)
    if prof.kind == "sup":
        caps = np.minimum.accumulate(1.0 / prof.coef)
        return float(caps @ c), caps
    w = prof.coef
    if prof.r == 1.0:
        ratios = np.cumsum(c) / np.cumsum(w)
        j = int(np.argmax(ratios))
        s = np.zeros(n)
        s[: j + 1] = 1.0 / np.sum(w[: j + 1])
        return float(ratios[j]), s
    rp = prof.r / (prof.r - 1.0)
    lev = _pava_decreasing(c / w, w)
    total = float(w @ lev**rp)
    value = total ** (1.0 / rp)
    s = lev ** (rp - 1.0) / total ** (1.0 / prof.r)
    return value, s


def _dual_profile(prof: Profile) -> Profile | None:
    """Closed-form profile of the sequence dual, when one exists."""
    if prof.kind == "sup":
        return Profile("power", np.minimum.accumulate(1.0 / prof.coef), 1.0)
    w = prof.coef
    if prof.r == 1.0:
        if np.allclose(w, w[0], rtol=1e-14, atol=0):
            return Profile("sup", np.full_like(w, 1.0 / w[0]), math.inf)
        return None
    if np.all(np.diff(w) >= -1e-15 * np.abs(w[1:])):
        rp = prof.r / (prof.r - 1.0)
        return Profile("power", w ** (1.0 - rp), rp)
    return None


# --------------------------------------------------------------------------
# results


@dataclass
class DualResult:
    value: float
    witness: np.ndarray
    method: str
    converged: bool = True
    iterations: int = 0


# --------------------------------------------------------------------------
# descriptors


class SpaceDescriptor:
    """Base class.  Subclasses are frozen dataclasses."""

    n_support: int | None = None

    def profile(self, n: int) -> Profile | None:
        return None

    def describe(self) -> str:  # pragma: no cover - overridden
        raise NotImplementedError

    def _check_support(self, V: np.ndarray) -> None:
        if self.n_support is None or V.shape[1] <= self.n_support:
            return
        if np.any(V[:, self.n_support:] != 0):
            raise InvalidInput(
                f"{self.describe()} accepts sequences supported on the first "
                f"{self.n_support} coordinates"
            )

    def _prep(self, V) -> np.ndarray:
        V = np.asarray(V, dtype=float)
        if V.ndim == 1:
            V = V[None, :]
        if V.ndim != 2:
            raise InvalidInput("expected a sequence or a 2-d stack of sequences")
        if not np.all(np.isfinite(V)):
            raise InvalidInput("sequence has a non-finite entry")
        self._check_support(V)
        return V

    # --- evaluation -----------------------------------------------------
    def norm(self, sigma) -> float:
        return float(self.norm_many(as_sequence(sigma)[None, :])[0])

    def norm_many(self, V) -> np.ndarray:
        V = self._prep(V)
        prof = self.profile(V.shape[1])
        if prof is None:
            return np.array([self._norm_generic(v) for v in V])
        S, _ = _sorted_rows(V)
        return _profile_norm(prof, S)

    def gradient(self, sigma) -> tuple[float, np.ndarray]:
        vals, G = self.gradient_many(as_sequence(sigma)[None, :])
        return float(vals[0]), G[0]

    def gradient_many(self, V) -> tuple[np.ndarray, np.ndarray]:
        """Values and norming functionals (subgradients where convex)."""
        V = self._prep(V)
        prof = self.profile(V.shape[1])
        if prof is None:
            out = [self._gradient_generic(v) for v in V]
            return np.array([o[0] for o in out]), np.array([o[1] for o in out])
        S, order = _sorted_rows(V)
        vals = _profile_norm(prof, S)
        return vals, _unsort_rows(_profile_gradient(prof, S, vals), order, V)

    def dual(self, tau) -> DualResult:
        """``sup { |<sigma, tau>| : ||sigma|| <= 1 }`` with a maximiser."""
        t = self._prep(tau)[0]
        mag = np.abs(t)
        order = np.argsort(-mag, kind="stable")
        c = mag[order]
        prof = self.profile(len(t))
        if prof is not None:
            value, s = _profile_dual_sorted(prof, c)
            method = "closed-form" if prof.kind == "sup" or prof.r == 1.0 else "pava"
            res = DualResult(value, s, method)
        else:
            res = _kelley_dual(self, c)
        witness = np.empty_like(res.witness)
        witness[order] = res.witness
        res.witness = witness * np.where(t < 0, -1.0, 1.0)
        return res

    def _norm_generic(self, v: np.ndarray) -> float:  # pragma: no cover
        raise NotImplementedError

    def _gradient_generic(self, v: np.ndarray) -> tuple[float, np.ndarray]:  # pragma: no cover
        raise NotImplementedError

    def unit_norm(self) -> float:
        return self.norm(np.array([1.0]))


def _validate_exponent(name: str, p: float, allow_inf: bool = True) -> float:
    p = float(p)
    if math.isnan(p) or p < 1 or (p == math.inf and not allow_inf):
        raise InvalidDescriptor(f"{name} must lie in [1, {'inf' if allow_inf else 'inf)'}], got {p}")
    return p


@dataclass(frozen=True)
class Lp(SpaceDescriptor):
    p: float
    declared_convexity: tuple[float, float] | None = field(default=None, kw_only=True)

    def __post_init__(self):
        object.__setattr__(self, "p", _validate_exponent("p", self.p))
        if self.declared_convexity is None and self.p < math.inf:
            object.__setattr__(self, "declared_convexity", (self.p, 1.0))

    def profile(self, n: int) -> Profile:
        if self.p == math.inf:
            return Profile("sup", np.ones(n), math.inf)
        return Profile("power", np.ones(n), self.p)

    def describe(self) -> str:
        return f"lp:{self.p:g}"


@dataclass(frozen=True)
class LorentzFQ(SpaceDescriptor):
    f: WeightFunction
    q: float
    declared_convexity: tuple[float, float] | None = field(default=None, kw_only=True)

    def __post_init__(self):
        object.__setattr__(self, "q", _validate_exponent("q", self.q))

    def profile(self, n: int) -> Profile:
        k = np.arange(1, n + 1, dtype=float)
        if self.q == math.inf:
            return Profile("sup", self.f(k) if n else np.zeros(0), math.inf)
        logw = self.q * self.f.log(k) - np.log(k) if n else np.zeros(0)
        return Profile("power", np.exp(logw), self.q)

    def describe(self) -> str:
        return f"lorentz:{self.f.describe()}:{self.q:g}"


@dataclass(frozen=True)
class LInfLogHalf(SpaceDescriptor):
    """``sup_k sqrt(log(k+1)) sigma*_k``."""

    declared_convexity: tuple[float, float] | None = field(default=None, kw_only=True)

    def profile(self, n: int) -> Profile:
        k = np.arange(1, n + 1, dtype=float)
        return Profile("sup", np.sqrt(np.log1p(k)), math.inf)

    def describe(self) -> str:
        return "linf-log-half"


@dataclass(frozen=True)
class LqLogHalf(SpaceDescriptor):
    """``(sum_k (sigma*_k * sqrt(log(k+1))**sign) ** q) ** (1/q)``."""

    q: float
    sign: int = -1
    declared_convexity: tuple[float, float] | None = field(default=None, kw_only=True)

    def __post_init__(self):
        object.__setattr__(self, "q", _validate_exponent("q", self.q, allow_inf=False))
        if self.sign not in (1, -1):
            raise InvalidDescriptor("sign must be +1 or -1")

    def profile(self, n: int) -> Profile:
        k = np.arange(1, n + 1, dtype=float)
        return Profile("power", np.log1p(k) ** (self.sign * self.q / 2.0), self.q)

    def describe(self) -> str:
        return f"lq-log-half:{self.q:g}:{self.sign:+d}"


@dataclass(frozen=True)
class DualOf(SpaceDescriptor):
    """Sequence dual ``X^+`` restricted to the first ``n_support`` coordinates."""

    X: SpaceDescriptor
    n_support: int | None = None
    declared_convexity: tuple[float, float] | None = field(default=None, kw_only=True)

    def profile(self, n: int) -> Profile | None:
        inner = self.X.profile(n)
        if inner is None or n == 0:
            return None
        return _dual_profile(inner)

    def _norm_generic(self, v):
        return self.X.dual(v).value

    def _gradient_generic(self, v):
        res = self.X.dual(v)
        return res.value, res.witness

    def describe(self) -> str:
        sup = "" if self.n_support is None else f",{self.n_support}"
        return f"dual({self.X.describe()}{sup})"


@dataclass(frozen=True)
class DiagSpace(SpaceDescriptor):
    """Diagonal operators ``Y -> Z`` with the operator norm."""

    Y: SpaceDescriptor
    Z: SpaceDescriptor
    n_support: int | None = None
    declared_convexity: tuple[float, float] | None = field(default=None, kw_only=True)

    def profile(self, n: int) -> Profile | None:
        if n == 0:
            return None
        Y, Z = self.Y, self.Z
        if isinstance(Y, Lp) and Y.p == math.inf:
            return Z.profile(n)
        if Y == Z:
            return Profile("sup", np.ones(n), math.inf)
        if not isinstance(Z, Lp):
            return None
        if Z.p == math.inf:
            return Profile("sup", np.full(n, 1.0 / Y.unit_norm()), math.inf)
        p = Z.p
        yp = Y.profile(n)
        if yp is None:
            return None
        if yp.kind == "sup":
            caps = np.minimum.accumulate(1.0 / yp.coef)
            return Profile("power", caps**p, p)
        w = yp.coef
        if yp.r == p and np.allclose(w, w[0], rtol=1e-14, atol=0):
            return Profile("sup", np.full(n, w[0] ** (-1.0 / p)), math.inf)
        if yp.r > p and np.all(np.diff(w) >= -1e-15 * np.abs(w[1:])):
            s = yp.r / p
            sp = s / (s - 1.0)
            return Profile("power", w ** (1.0 - sp), p * sp)
        return None

    def _exact_power_route(self, n: int) -> Profile | None:
        """``Z = l_p`` and ``Y`` a power profile with exponent >= p."""
        if not isinstance(self.Z, Lp) or self.Z.p == math.inf:
            return None
        yp = self.Y.profile(n)
        if yp is None or yp.kind != "power" or yp.r < self.Z.p:
            return None
        return Profile("power", yp.coef, yp.r / self.Z.p)

    def solve(self, sigma, method: str = "auto", restarts: int = 8, seed: int = 0) -> DualResult:
        """Norm of ``D_sigma`` with the maximising ``tau`` as witness."""
        v = self._prep(sigma)[0]
        n = len(v)
        a = np.abs(v)
        if method == "auto":
            prof = self.profile(n)
            route = None if prof is not None else self._exact_power_route(n)
            if prof is not None or route is not None:
                return self._solve_exact(a, prof, route)
        elif method != "optimize":
            raise InvalidInput(f"unknown method {method!r}")
        return _dl_ascent(self.Y, self.Z, a, restarts=restarts, seed=seed)

    def _solve_exact(self, a, prof, route) -> DualResult:
        n = len(a)
        if route is not None:
            p = self.Z.p
            order = np.argsort(-a, kind="stable")
            c = a[order] ** p
            value, rho = _profile_dual_sorted(route, c)
            tau = np.empty(n)
            tau[order] = rho ** (1.0 / p)
            return DualResult(value ** (1.0 / p), tau, "exact-pava")
        value = float(_profile_norm(prof, np.sort(a)[::-1][None, :])[0])
        tau = self._closed_form_tau(a)
        return DualResult(value, tau, "closed-form")

    def _closed_form_tau(self, a: np.ndarray) -> np.ndarray:
        """A maximising ``tau`` for the closed-form cases."""
        n = len(a)
        Y, Z = self.Y, self.Z
        if isinstance(Y, Lp) and Y.p == math.inf:
            return np.ones(n)
        tau = np.zeros(n)
        order = np.argsort(-a, kind="stable")
        yp = Y.profile(n)
        if isinstance(Z, Lp) and Z.p < math.inf and Y != Z:
            if yp.kind == "sup":
                tau[order] = np.minimum.accumulate(1.0 / yp.coef)
                return tau
            if yp.r > Z.p:
                route = Profile("power", yp.coef, yp.r / Z.p)
                _, rho = _profile_dual_sorted(route, a[order] ** Z.p)
                tau[order] = rho ** (1.0 / Z.p)
                return tau
        tau[order[0]] = 1.0 / Y.unit_norm()
        return tau

    def _norm_generic(self, v):
        return self.solve(v).value

    def _gradient_generic(self, v):
        res = self.solve(v)
        tau = np.abs(res.witness)
        _, h = self.Z.gradient(np.abs(v) * tau)
        return res.value, np.abs(h) * tau * np.where(v < 0, -1.0, 1.0)

    def describe(self) -> str:
        sup = "" if self.n_support is None else f",{self.n_support}"
        return f"diag({self.Y.describe()},{self.Z.describe()}{sup})"


# --------------------------------------------------------------------------
# numerical routes


def _dl_ascent(Y: SpaceDescriptor, Z: SpaceDescriptor, a: np.ndarray, restarts: int = 8,
               seed: int = 0, max_iter: int = 200, tol: float = 1e-12) -> DualResult:
    """Maximise ``||a * tau||_Z`` over ``tau`` in ``B_Y`` by linearised ascent.

    Each step replaces ``tau`` by the ``B_Y``-maximiser of the linearisation
    ``<h * a, .>`` (``h`` a norming functional of Z), which never decreases the
    objective when Z is a norm.  Starts: the decreasing pairing, a unit vector
    at the largest entry, and random arrangements.
    """
    n = len(a)
    if n == 0 or not np.any(a > 0):
        return DualResult(0.0, np.zeros(n), "dl-ascent")
    starts = [np.abs(Y.dual(a).witness)]
    e = np.zeros(n)
    e[int(np.argmax(a))] = 1.0 / Y.unit_norm()
    starts.append(e)
    rng = substream(seed, "dl-ascent", n)
    for _ in range(restarts):
        starts.append(np.abs(Y.dual(rng.exponential(size=n)).witness))
    best_val, best_tau, total_iter, conv_all = -1.0, None, 0, True
    for tau in starts:
        val = Z.norm(a * tau)
        conv = False
        for it in range(max_iter):
            _, h = Z.gradient(a * tau)
            cand = np.abs(Y.dual(np.abs(h) * a).witness)
            cval = Z.norm(a * cand)
            total_iter += 1
            if cval <= val * (1 + tol) + _TINY:
                conv = True
                break
            tau, val = cand, cval
        conv_all &= conv
        if val > best_val:
            best_val, best_tau = val, tau
    return DualResult(float(best_val), best_tau, "dl-ascent", conv_all, total_iter)


def _kelley_dual(space: SpaceDescriptor, c: np.ndarray, tol: float = 1e-9,
                 max_iter: int = 300, stall: int = 25) -> DualResult:
    """Cutting-plane maximisation of ``<c, s>`` over the cone part of ``B_X``.

    Cuts ``<g, s> <= 1`` come from norming functionals ``g`` of the space and
    are valid on the cone because the norm is convex there.  The LP optimum is
    an upper bound; the normalised LP point is feasible and gives the reported
    lower bound.
    """
    n = len(c)
    if n == 0 or not np.any(c > 0):
        return DualResult(0.0, np.zeros(n), "kelley")
    cone = np.zeros((max(n - 1, 0), n))
    for k in range(n - 1):
        cone[k, k] = -1.0
        cone[k, k + 1] = 1.0
    cuts = []
    for j in range(1, n + 1):
        s = np.zeros(n)
        s[:j] = 1.0
        val, g = space.gradient(s)
        if val > 0:
            cuts.append(np.abs(g) / 1.0)
    best_lb, best_s = 0.0, np.zeros(n)
    ub = math.inf
    converged = False
    it = last_gain = 0
    for it in range(1, max_iter + 1):
        A = np.vstack([cone] + [np.array(cuts)])
        b = np.concatenate([np.zeros(len(cone)), np.ones(len(cuts))])
        res = linprog(-c, A_ub=A, b_ub=b, bounds=[(0, None)] * n, method="highs")
        if res.status != 0:
            break
        s = res.x
        ub = -res.fun
        val, g = space.gradient(s)
        if val <= _TINY:
            break
        lb = float(c @ s) / val
        if lb > best_lb * (1 + 1e-12):
            last_gain = it
        if lb > best_lb:
            best_lb, best_s = lb, s / val
        gap = (ub - best_lb) / max(ub, _TINY)
        # smooth balls close the LP gap slowly; a stalled lower bound with a
        # small gap is as good as it gets
        if gap <= tol or (it - last_gain >= stall and gap <= 1e-3):
            converged = True
            break
        cuts.append(np.abs(g))
    return DualResult(best_lb, best_s, "kelley", converged, it)


# --------------------------------------------------------------------------
# module-level operations


def norm(X: SpaceDescriptor, sigma) -> float:
    return X.norm(sigma)


def dual_norm(X: SpaceDescriptor, tau) -> DualResult:
    return X.dual(tau)


def dl_norm(Y: SpaceDescriptor, Z: SpaceDescriptor, sigma, method: str = "auto",
            restarts: int = 8, seed: int = 0) -> DualResult:
    """Norm of the diagonal operator ``D_sigma: Y -> Z``; witness is the maximising ``tau``.

    ``method="optimize"`` skips the closed forms and always runs the ascent.
    """
    return DiagSpace(Y, Z).solve(sigma, method=method, restarts=restarts, seed=seed)


def weight_indices(f: WeightFunction, t_max: float = 1e30, grid: int = 64) -> tuple[float, float]:
    """Empirical upper and lower indices of ``f``.

    Secant slopes of ``t -> max_s log(f(ts)/f(s))`` (upper) and of the min over
    ``s`` (lower) between ``sqrt(t_max)`` and ``t_max`` on a geometric grid.
    """
    if not t_max >= 4:
        raise InvalidInput("t_max must be >= 4")
    if grid < 16:
        raise InvalidInput("grid must be >= 16")
    logs = np.linspace(0.0, math.log(t_max), grid)
    s = np.exp(logs)
    hi_t, mid_t = math.log(t_max), 0.5 * math.log(t_max)

    def envelope(log_t):
        ratio = f.log(math.exp(log_t) * s) - f.log(s)
        return ratio.max(), ratio.min()

    top_hi, top_lo = envelope(hi_t)
    mid_hi, mid_lo = envelope(mid_t)
    span = hi_t - mid_t
    return float((top_hi - mid_hi) / span), float((top_lo - mid_lo) / span)


def p_convexity_lower_bound(X: SpaceDescriptor, p: float, n: int, tuples: int, seed: int,
                            dim: int | None = None) -> float:
    """Largest sampled ratio ``||(sum |x_j|^p)^(1/p)||_X / (sum ||x_j||_X^p)^(1/p)``.

    Tuples of ``k <= n`` sequences of length ``dim`` (default ``n``) are drawn
    from a mixture of dense, sparse and disjointly supported families; the
    disjoint unit-vector tuples are always included.
    """
    if p < 1:
        raise InvalidInput("p must be >= 1")
    if n < 1 or tuples < 1:
        raise InvalidInput("n and tuples must be >= 1")
    dim = n if dim is None else dim
    best = 0.0
    for k in range(1, min(n, dim) + 1):
        best = max(best, _convexity_ratio(X, p, np.eye(dim)[:k]))
    rng = substream(seed, "p-convexity")
    for _ in range(tuples):
        k = int(rng.integers(1, n + 1))
        family = int(rng.integers(0, 3))
        if family == 0:
            xs = rng.standard_normal((k, dim))
        elif family == 1:
            xs = rng.exponential(size=(k, dim)) * (rng.random((k, dim)) < 0.4)
        else:
            owner = rng.integers(0, k, size=dim)
            xs = np.zeros((k, dim))
            xs[owner, np.arange(dim)] = rng.exponential(size=dim)
        best = max(best, _convexity_ratio(X, p, xs))
    return best


def _convexity_ratio(X: SpaceDescriptor, p: float, xs: np.ndarray) -> float:
    norms = X.norm_many(xs)
    denom = np.sum(norms**p) ** (1.0 / p)
    if denom <= _TINY:
        return 0.0
    combined = np.sum(np.abs(xs) ** p, axis=0) ** (1.0 / p)
    return X.norm(combined) / denom


def lorentz_pconvexity_ratio(f: WeightFunction, q: float, p: float, sigma,
                             horizon: int | None = None) -> float:
    """Ratio of ``|| |sigma|^(1/p) ||_{f,q}^p`` to the ``l_{f^p, q/p}`` norm of the
    running averages of ``sigma*``, both truncated at ``horizon`` (default ``len(sigma)``).
    """
    if not p <= q:
        raise InvalidInput("need p <= q")
    if not 0 < f.a < 1.0 / p:
        raise InvalidInput("the weight's indices must lie in (0, 1/p)")
    s = rearrange_decreasing(sigma)
    horizon = len(s) if horizon is None else int(horizon)
    if horizon < len(s):
        raise InvalidInput("horizon shorter than the sequence")
    s = np.concatenate([s, np.zeros(horizon - len(s))])
    if not np.any(s > 0):
        return 1.0
    lhs = LorentzFQ(f, q).norm(s ** (1.0 / p)) ** p
    averages = np.cumsum(s) / np.arange(1, horizon + 1)
    rhs = LorentzFQ(f.pow(p), q / p).norm(averages)
    return float(lhs / rhs)


# --------------------------------------------------------------------------
# text form


def parse_space(text: str) -> SpaceDescriptor:
    """Parse descriptors such as ``lp:3``, ``lq:3``, ``linf-log-half``,
    ``lq-log-half:3:-1``, ``lorentz:power:0.5:inf``,
    ``lorentz:power_log:0.25:0.5:4``, ``dual(lp:3,6)``,
    ``diag(linf-log-half,lp:3,4)``.
    """
    text = text.strip()
    try:
        return _parse(text)
    except (ValueError, IndexError) as exc:
        if isinstance(exc, InvalidDescriptor):
            raise
        raise InvalidDescriptor(f"cannot parse space {text!r}: {exc}") from None


def _split_args(body: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in body:
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts]


def _parse(text: str) -> SpaceDescriptor:
    if text.endswith(")") and "(" in text:
        head, body = text[:-1].split("(", 1)
        args = _split_args(body)
        if head == "dual":
            n = int(args[1]) if len(args) > 1 else None
            return DualOf(_parse(args[0]), n)
        if head == "diag":
            n = int(args[2]) if len(args) > 2 else None
            return DiagSpace(_parse(args[0]), _parse(args[1]), n)
        raise InvalidDescriptor(f"unknown constructor {head!r}")
    parts = text.split(":")
    head = parts[0]
    if head in ("lp", "lq"):
        return Lp(float(parts[1]))
    if head == "linf-log-half":
        return LInfLogHalf()
    if head == "lq-log-half":
        sign = int(float(parts[2])) if len(parts) > 2 else -1
        return LqLogHalf(float(parts[1]), sign)
    if head == "lorentz":
        if parts[1] == "power":
            return LorentzFQ(WeightFunction.power(float(parts[2])), float(parts[3]))
        if parts[1] == "power_log":
            return LorentzFQ(WeightFunction.power_log(float(parts[2]), float(parts[3])),
                             float(parts[4]))
    raise InvalidDescriptor(f"unknown space {text!r}")
