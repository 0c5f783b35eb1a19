"""Theorem-level checks over operator ensembles.

Every check returns a ``CheckReport``: one row per operator (or per operator
and ``n``) with the two compared quantities, their ratio and a violation flag.
Bands and tolerances are empirical engineering constants; each report states
the ones it used.
"""
from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .cotype import CotypeConfig, abstract_ineq_check, gc_disjoint, gc_n, rc_n, InequalitySamples
from .errors import InvalidInput, UnsupportedConfiguration
from .rng import derive_seed, substream
from .seqspace import DiagSpace, LInfLogHalf, Lp, LqLogHalf, SpaceDescriptor, dl_norm
from .summing import (
    OperatorCK,
    OptimizerConfig,
    _target_gradient,
    _target_norms,
    objective,
    pi_opt,
)

DEGENERATE = 1e-12
FAMILIES = ("gaussian-iid", "diagonal-decay", "sparse-sign", "rank-r")


# --------------------------------------------------------------------------
# ensembles


@dataclass(frozen=True)
class EnsembleSpec:
    family: str
    d: int
    m: int
    count: int
    seed: int
    param: float | None = None
    target_p: float = 2.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInput(f"unknown ensemble family {self.family!r}; expected one of {FAMILIES}")
        if self.count < 1 or self.d < 1 or self.m < 1:
            raise InvalidInput("ensemble count and dims must be >= 1")
        if self.family == "rank-r" and not (self.param and 1 <= self.param <= min(self.d, self.m)):
            raise InvalidInput("rank-r ensembles need 1 <= r <= min(d, m)")
        if self.family == "sparse-sign" and self.param is not None and not 0 < self.param <= 1:
            raise InvalidInput("sparse-sign density must lie in (0, 1]")

    def member_seed(self, i: int) -> int:
        return derive_seed(self.seed, "member", i)

    def member(self, i: int) -> OperatorCK:
        rng = substream(self.seed, "ensemble", self.family, i)
        d, m = self.d, self.m
        if self.family == "gaussian-iid":
            A = rng.standard_normal((d, m))
        elif self.family == "diagonal-decay":
            rate = 0.5 if self.param is None else self.param
            A = np.zeros((d, m))
            k = np.arange(1, min(d, m) + 1)
            A[k - 1, k - 1] = k ** (-rate) * rng.choice([-1.0, 1.0], size=len(k))
        elif self.family == "sparse-sign":
            density = 0.3 if self.param is None else self.param
            A = rng.choice([-1.0, 1.0], size=(d, m)) * (rng.random((d, m)) < density)
        else:
            r = int(self.param)
            while True:
                A = rng.standard_normal((d, r)) @ rng.standard_normal((r, m))
                if np.linalg.matrix_rank(A) == r:
                    break
        return OperatorCK(A, self.target_p)

    def operators(self) -> list[OperatorCK]:
        return [self.member(i) for i in range(self.count)]

    @classmethod
    def parse(cls, text: str, seed: int, target_p: float = 2.0) -> "EnsembleSpec":
        """``gaussian:4x4:30``, ``diag:0.5:4x4:10``, ``sparse:0.3:4x4:10``, ``rank:2:6x6:20``."""
        parts = text.strip().split(":")
        names = {"gaussian": "gaussian-iid", "diag": "diagonal-decay", "sparse": "sparse-sign",
                 "rank": "rank-r"}
        if not parts or parts[0] not in names:
            raise InvalidInput(f"cannot parse ensemble {text!r}")
        param = None
        if parts[0] != "gaussian":
            if len(parts) != 4:
                raise InvalidInput(f"ensemble {text!r} needs family:param:DxM:count")
            param = float(parts[1])
            parts = [parts[0]] + parts[2:]
        if len(parts) != 3 or not re.fullmatch(r"\d+x\d+", parts[1]) or not parts[2].isdigit():
            raise InvalidInput(f"cannot parse ensemble {text!r}")
        d, m = (int(v) for v in parts[1].split("x"))
        return cls(names[parts[0]], d, m, int(parts[2]), seed, param, target_p)


def _members(ensemble) -> list[tuple[int, OperatorCK, int]]:
    if isinstance(ensemble, EnsembleSpec):
        return [(i, ensemble.member(i), ensemble.member_seed(i)) for i in range(ensemble.count)]
    ops = list(ensemble)
    return [(i, T, derive_seed(0, "member", i)) for i, T in enumerate(ops)]


# --------------------------------------------------------------------------
# reports


@dataclass
class CheckRow:
    id: str
    lhs: float
    rhs: float
    converged: bool
    seed: int
    violation: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return abs(self.lhs) < DEGENERATE and abs(self.rhs) < DEGENERATE

    @property
    def ratio(self) -> float:
        if self.degenerate:
            return math.nan
        return self.lhs / self.rhs if self.rhs != 0 else math.inf


@dataclass
class CheckReport:
    name: str
    rows: list[CheckRow]
    config: dict
    notes: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def violations(self) -> int:
        return sum(r.violation for r in self.rows)

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.extra.get("passed", True)

    def summary(self) -> dict:
        live = [r.ratio for r in self.rows if not r.degenerate]
        stats = {"min": None, "median": None, "max": None}
        if live:
            stats = {"min": float(np.min(live)), "median": float(np.median(live)),
                     "max": float(np.max(live))}
        return {
            "check": self.name,
            "rows": len(self.rows),
            "degenerate": sum(r.degenerate for r in self.rows),
            "ratio": stats,
            "violations": self.violations,
            "unconverged": sum(not r.converged for r in self.rows),
            "passed": self.passed,
            "notes": self.notes,
            "extra": _jsonable(self.extra),
            "config": _jsonable(self.config),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", "lhs", "rhs", "ratio", "converged", "seed"])
        for r in self.rows:
            w.writerow([r.id, _g17(r.lhs), _g17(r.rhs), _g17(r.ratio), int(r.converged), r.seed])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def _g17(v: float) -> str:
    return format(float(v), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, SpaceDescriptor):
        return obj.describe()
    if hasattr(obj, "__dataclass_fields__"):
        return _jsonable(asdict(obj))
    return obj


def _pi_cfg(seed: int, cfg: OptimizerConfig | None) -> OptimizerConfig:
    base = cfg or OptimizerConfig(seed=0)
    return OptimizerConfig(seed=seed, restarts=base.restarts, iterations=base.iterations,
                           step=base.step, tol=base.tol)


def _cot_cfg(seed: int, cfg: CotypeConfig | None) -> CotypeConfig:
    base = cfg or CotypeConfig(seed=0)
    return CotypeConfig(seed=seed, restarts=base.restarts, iterations=base.iterations,
                        step=base.step, tol=base.tol, search_samples=base.search_samples,
                        final_samples=base.final_samples, exact_cap=base.exact_cap)


def _pad(w: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((n, w.shape[1]))
    out[: w.shape[0]] = w
    return out


# --------------------------------------------------------------------------
# Maurey chain


def _convexity_constant(X: SpaceDescriptor, q: float) -> float | None:
    decl = getattr(X, "declared_convexity", None)
    if decl is None or decl[0] < q:
        return None
    return float(decl[1])


def maurey_chain_check(ensemble, X: SpaceDescriptor, q: float, n: int, tol: float = 1e-3,
                       pi_cfg: OptimizerConfig | None = None,
                       cot_cfg: CotypeConfig | None = None) -> CheckReport:
    """``pi_{X,1}^n <= rc_X^n <= sqrt(2) pi_{X,2}^n`` per operator.

    The rc search starts from the ``pi_{X,1}`` witness and the ``pi_{X,2}``
    search from the normalised rc witness, which is feasible for it.  The
    closing constant ``sqrt(2) pi_{X,2} / pi_{X,1}`` is reported, not asserted.
    """
    if not q > 2:
        raise InvalidInput("q must exceed 2")
    M = _convexity_constant(X, q)
    rows = []
    for i, T, seed in _members(ensemble):
        p1 = pi_opt(T, X, 1, n, _pi_cfg(seed, pi_cfg))
        rc = rc_n(T, X, n, _cot_cfg(seed, cot_cfg), starts=p1.witness[None])
        p2 = pi_opt(T, X, 2, n, _pi_cfg(seed, pi_cfg), starts=rc.witness[None])
        top = math.sqrt(2) * p2.value
        viol = p1.value > rc.value * (1 + tol) + DEGENERATE or rc.value > top * (1 + tol) + DEGENERATE
        c = top / p1.value if p1.value > DEGENERATE else math.nan
        rows.append(CheckRow(f"op{i}", rc.value, top, p1.converged and rc.converged and p2.converged,
                             seed, viol, {"pi1": p1.value, "rc": rc.value, "pi2": p2.value,
                                          "closing_constant": c}))
    cs = [r.extra["closing_constant"] for r in rows if not math.isnan(r.extra["closing_constant"])]
    band = None if M is None else M * (0.5 - 1.0 / q) ** (-(1.0 - 1.0 / q))
    return CheckReport(
        "maurey_chain", rows,
        {"X": X, "q": q, "n": n, "tol": tol},
        "lhs = rc^n, rhs = sqrt(2) pi_2^n; a row is a violation if pi_1^n > rc^n (1+tol) or "
        "rc^n > sqrt(2) pi_2^n (1+tol)",
        {"max_closing_constant": max(cs) if cs else None, "sanity_band_c0_eq_1": band},
    )


# --------------------------------------------------------------------------
# comparison theorem


def comparison_check(ensemble, X: SpaceDescriptor, q: float, n_list: Sequence[int] = (4, 8),
                     C: float = 10.0, widen: float = 1.25,
                     cot_cfg: CotypeConfig | None = None) -> CheckReport:
    """``gc_X^n(T)`` against ``rc_Y^n(T)`` with ``Y = DL(LInfLogHalf, X)``.

    ``band(n) = max(max ratio, 1 / min ratio)`` over the ensemble.  The check
    passes when every band is at most ``C`` and the band at the largest ``n``
    exceeds the band at the smallest by at most the factor ``widen``.
    """
    if not q > 2:
        raise InvalidInput("q must exceed 2")
    n_list = list(n_list)
    rows, bands = [], {}
    members = _members(ensemble)
    for n in n_list:
        Y = DiagSpace(LInfLogHalf(), X, n)
        ratios = []
        for i, T, seed in members:
            cfg = _cot_cfg(derive_seed(seed, "comparison", n), cot_cfg)
            g = gc_n(T, X, n, cfg)
            r = rc_n(T, Y, n, cfg)
            row = CheckRow(f"op{i}-n{n}", g.value, r.value, g.converged and r.converged, cfg.seed,
                           extra={"n": n, "gc_std_error": g.std_error})
            rows.append(row)
            if not row.degenerate:
                ratios.append(row.ratio)
        bands[n] = max(max(ratios), 1.0 / min(ratios)) if ratios else 1.0
        for row in rows[-len(members):]:
            if not row.degenerate:
                row.violation = not (1.0 / C <= row.ratio <= C)
    not_widening = bands[n_list[-1]] <= widen * bands[n_list[0]]
    return CheckReport(
        "comparison", rows,
        {"X": X, "q": q, "n_list": n_list, "C": C, "widen": widen},
        "lhs = gc_X^n, rhs = rc_Y^n with Y = DL(l_inf_log_half, X); bands are empirical",
        {"bands": {str(k): v for k, v in bands.items()}, "not_widening": not_widening,
         "passed": not_widening and all(b <= C for b in bands.values())},
    )


# --------------------------------------------------------------------------
# the l_q special case


def lq_special_case_check(ensemble, q: float, n: int, sequences: int = 20, seed: int = 0,
                          band: float = 4.0, samples: InequalitySamples | None = None,
                          cot_cfg: CotypeConfig | None = None) -> CheckReport:
    """``DL(LInfLogHalf, l_q)`` against ``LqLogHalf(q, -1)`` on decreasing sequences,
    then the weighted-l_q inequalities in both modes for every operator.

    The DL norm is computed by the numerical ascent route so that the closed
    form is not compared with itself.
    """
    if not q > 2:
        raise InvalidInput("q must exceed 2")
    if not 1 <= n <= 12:
        raise InvalidInput("n must lie in 1..12")
    rng = substream(seed, "lq-special", n)
    Y, W = LInfLogHalf(), LqLogHalf(q, -1)
    rows = []
    seqs = [np.eye(n)[0], np.ones(n)] + [
        np.sort(np.abs(rng.standard_normal(n)) * rng.random(n) ** 2)[::-1] for _ in range(sequences)
    ]
    for j, s in enumerate(seqs):
        dl = dl_norm(Y, Lp(q), s, method="optimize", restarts=8, seed=seed).value
        w = W.norm(s)
        row = CheckRow(f"seq{j}", dl, w, True, seed)
        row.violation = not row.degenerate and not (1.0 / band <= row.ratio <= band)
        rows.append(row)
    samples = samples or InequalitySamples(seed=seed)
    ineq = {}
    for i, T, mseed in _members(ensemble):
        cfg = _cot_cfg(mseed, cot_cfg)
        for mode in ("gaussian", "rademacher"):
            rep = abstract_ineq_check(T, q, n, mode, InequalitySamples(samples.samples, mseed,
                                                                         samples.gaussian_samples), cfg)
            ineq[f"op{i}-{mode}"] = {"max_c": rep.max_c, "bound": rep.bound,
                                     "reference": rep.reference, "passes": rep.passes}
            rows.append(CheckRow(f"op{i}-{mode}", rep.max_c, rep.bound, True, mseed,
                                 not rep.passes, {"reference": rep.reference}))
    return CheckReport(
        "lq_special_case", rows, {"q": q, "n": n, "band": band, "sequences": sequences},
        "seq rows: lhs = DL(linf_log_half, l_q) by ascent, rhs = lq_log_half(q,-1); "
        "op rows: lhs = max empirical constant, rhs = certified constant",
        {"inequalities": ineq},
    )


# --------------------------------------------------------------------------
# quotient formulas


def _conj(p: float) -> float:
    if p == 1:
        return math.inf
    if p == math.inf:
        return 1.0
    return p / (p - 1.0)


def _rows_in_dual_ball(rng, M: int, d: int, p: float) -> np.ndarray:
    R = rng.standard_normal((M, d))
    nrm = _target_norms(R, _conj(p))
    return R / nrm[:, None]


def _quotient1_value(T, q, r, n, R, sigma, cfg, x=None):
    S = OperatorCK(sigma[:, None] * (R @ T.matrix), math.inf)
    return pi_opt(S, Lp(q), r, n, cfg, starts=None if x is None else x[None])


def _quotient1_phi(q, R, sigma, Yx):
    return float(np.sum(np.max(np.abs(sigma[:, None] * (R @ Yx.T)), axis=0) ** q) ** (1.0 / q))


def _quotient1_rhs(T, Y, q, r, n, cfg, starts, rounds=6):
    """Alternating maximisation of ``pi_{q,r}^n(D_sigma R T)`` over ``(x, R, sigma)``.

    ``D_sigma R T`` maps into ``l_inf^M``.  Given ``x`` the objective is convex
    in ``R`` and in ``sigma`` separately, so both steps are linearised best
    responses (rows of ``R`` in the dual ball of ``F``, ``sigma`` in ``B_Y``),
    accepted only when they improve.
    """
    best = None
    for R, sigma in starts:
        x = None
        for _ in range(rounds):
            cert = _quotient1_value(T, q, r, n, R, sigma, cfg, x)
            x = cert.witness
            if best is None or cert.value > best[0]:
                best = (cert.value, R.copy(), sigma.copy(), x.copy())
            Yx = x @ T.matrix.T
            for _ in range(20):
                cur = _quotient1_phi(q, R, sigma, Yx)
                V = sigma[:, None] * (R @ Yx.T)  # M x n
                j = np.argmax(np.abs(V), axis=0)
                top = V[j, np.arange(n)]
                w = np.abs(top) ** (q - 1) * np.sign(top)
                G = np.zeros((len(sigma), T.d))
                np.add.at(G, j, (w * sigma[j])[:, None] * Yx)
                R_new = np.where(np.any(G != 0, axis=1)[:, None], _target_gradient(G, T.target_p), R)
                C = np.abs(R_new @ Yx.T)
                j = np.argmax(np.abs(sigma[:, None] * C), axis=0)
                gs = np.zeros(len(sigma))
                np.add.at(gs, j, np.abs(sigma[j] * C[j, np.arange(n)]) ** (q - 1) * C[j, np.arange(n)])
                s_new = np.abs(Y.dual(gs).witness) if np.any(gs) else sigma
                if _quotient1_phi(q, R_new, s_new, Yx) > cur * (1 + 1e-12):
                    R, sigma = R_new, s_new
                elif _quotient1_phi(q, R_new, sigma, Yx) > cur * (1 + 1e-12):
                    R = R_new
                else:
                    break
    return best


def quotient_formula_1_check(T: OperatorCK, Y: SpaceDescriptor, q: float, r: float, n: int,
                             M: int = 3, tol: float = 5e-2, seed: int = 0, starts: int = 4,
                             pi_cfg: OptimizerConfig | None = None) -> CheckReport:
    """``pi_{X,r}^n(T) = sup pi_{q,r}^n(D_sigma R T)`` with ``X = DL(Y, l_q)``.

    The sup runs over ``R: F -> l_inf^M`` of norm at most one and diagonal
    ``D_sigma`` on ``l_inf^M`` with ``sigma`` in the unit ball of ``Y``.  The constructive ``R`` stacks norming functionals
    of ``T x_k`` for the left-hand witness.
    """
    if r not in (1, 2):
        raise UnsupportedConfiguration(f"quotient checks support r in {{1, 2}}, got {r}")
    if max(T.d, T.m) > 3 or n > 2 or M > 3 or M < n:
        raise InvalidInput("quotient checks are sized for d, m <= 3, n <= 2, n <= M <= 3")
    cfg = _pi_cfg(seed, pi_cfg)
    X = DiagSpace(Y, Lp(q), n)
    lhs = pi_opt(T, X, r, n, cfg)
    x = lhs.witness
    # constructive candidate
    a = T.image_norms(x)
    R0 = np.zeros((M, T.d))
    R0[:n] = _target_gradient(x @ T.matrix.T, T.target_p)
    sig0 = np.zeros(M)
    sig0[:n] = np.abs(DiagSpace(Y, Lp(q), n).solve(a).witness)
    constructive = _quotient1_value(T, q, r, n, R0, sig0, cfg, x)
    # independent nested search
    rng = substream(seed, "quotient-1", n, M)
    cand = []
    for _ in range(starts):
        s = rng.random(M)
        cand.append((_rows_in_dual_ball(rng, M, T.d, T.target_p), s / Y.norm(s)))
    indep = _quotient1_rhs(T, Y, q, r, n, cfg, cand)
    warm = _quotient1_rhs(T, Y, q, r, n, cfg, [(R0, sig0)], rounds=2)
    rhs = max(indep[0], warm[0], constructive.value)
    return _quotient_report("quotient_formula_1", lhs, rhs, indep[0], constructive.value, tol, seed,
                            {"Y": Y, "q": q, "r": r, "n": n, "M": M, "tol": tol})


def _quotient2_phi(T, Z, R, sigma, x):
    S = T.matrix @ R @ np.diag(sigma)
    return float(objective(OperatorCK(S, T.target_p), Z, x[None])[0])


def _quotient2_rhs(T, Y, Z, n, M, cfg, starts, rounds=6):
    """Alternating maximisation of ``pi_{Z,1}^n(T R D_sigma)`` over ``(x, R, sigma)``.

    ``R: l_inf^M -> l_inf^m`` has rows in the unit ball of ``l_1^M``.  Both the
    ``R`` and the ``sigma`` steps are linearised best responses, accepted only
    when they improve the objective at the current ``x``.
    """
    best = None
    for R, sigma in starts:
        x = None
        for _ in range(rounds):
            S = OperatorCK(T.matrix @ R @ np.diag(sigma), T.target_p)
            cert = pi_opt(S, Z, 1, n, cfg, starts=None if x is None else x[None])
            x = cert.witness
            if best is None or cert.value > best[0]:
                best = (cert.value, R.copy(), sigma.copy(), x.copy())
            for _ in range(20):
                cur = _quotient2_phi(T, Z, R, sigma, x)
                zs = sigma * x  # n x M
                ys = zs @ R.T @ T.matrix.T  # n x d
                _, gZ = Z.gradient(_target_norms(ys, T.target_p))
                H = _target_gradient(ys, T.target_p) * np.abs(gZ)[:, None]
                GR = T.matrix.T @ H.T @ zs  # m x M
                R_new = _l1_rows_best(GR)
                GS = np.einsum("kd,dm,mj,kj->j", H, T.matrix, R_new, x)
                s_new = np.abs(Y.dual(GS).witness) if np.any(GS) else sigma
                new = _quotient2_phi(T, Z, R_new, s_new, x)
                if not new > cur * (1 + 1e-12):
                    break
                R, sigma = R_new, s_new
    return best


def _l1_rows_best(G: np.ndarray) -> np.ndarray:
    """Row-wise maximiser of ``<G_i, rho>`` over the unit ball of ``l_1``."""
    k = np.argmax(np.abs(G), axis=1)
    R = np.zeros_like(G)
    s = np.sign(G[np.arange(len(G)), k])
    R[np.arange(len(G)), k] = np.where(s == 0, 1.0, s)
    return R


def quotient_formula_2_check(T: OperatorCK, Y: SpaceDescriptor, Z: SpaceDescriptor, n: int,
                             M: int = 3, tol: float = 5e-2, seed: int = 0, starts: int = 4,
                             pi_cfg: OptimizerConfig | None = None) -> CheckReport:
    """``pi_{X,1}^n(T) = sup pi_{Z,1}^n(T R D_sigma)`` with ``X = DL(Y, Z)``.

    The constructive candidate takes ``R e_k = x_k`` for the left-hand witness
    and ``sigma`` maximising ``||sigma * (||T x_k||)_k||_Z`` over ``B_Y``.
    """
    if max(T.d, T.m) > 3 or n > 2 or M > 3 or M < n:
        raise InvalidInput("quotient checks are sized for d, m <= 3, n <= 2, n <= M <= 3")
    cfg = _pi_cfg(seed, pi_cfg)
    X = DiagSpace(Y, Z, n)
    lhs = pi_opt(T, X, 1, n, cfg)
    x = lhs.witness
    a = T.image_norms(x)
    R0 = np.zeros((T.m, M))
    R0[:, :n] = x.T
    sig0 = np.zeros(M)
    sig0[:n] = np.abs(X.solve(a).witness)
    e = np.zeros((n, M))
    e[:, :n] = np.eye(n)
    S0 = OperatorCK(T.matrix @ R0 @ np.diag(sig0), T.target_p)
    constructive = pi_opt(S0, Z, 1, n, cfg, starts=e[None])
    rng = substream(seed, "quotient-2", n, M)
    cand = []
    for _ in range(starts):
        R = rng.standard_normal((T.m, M))
        R /= np.abs(R).sum(axis=1, keepdims=True)
        s = rng.random(M)
        cand.append((R, s / Y.norm(s)))
    indep = _quotient2_rhs(T, Y, Z, n, M, cfg, cand)
    warm = _quotient2_rhs(T, Y, Z, n, M, cfg, [(R0, sig0)], rounds=2)
    rhs = max(indep[0], warm[0], constructive.value)
    return _quotient_report("quotient_formula_2", lhs, rhs, indep[0], constructive.value, tol, seed,
                            {"Y": Y, "Z": Z, "n": n, "M": M, "tol": tol})


def _quotient_report(name, lhs, rhs, indep, constructive, tol, seed, config) -> CheckReport:
    L = lhs.value
    viol = (L > rhs * (1 + tol) + DEGENERATE or rhs > L * (1 + tol) + DEGENERATE
            or abs(constructive - L) > tol * L + DEGENERATE
            or abs(indep - L) > tol * L + DEGENERATE)
    row = CheckRow("T", L, rhs, lhs.converged, seed, viol,
                   {"independent_rhs": indep, "constructive_rhs": constructive})
    return CheckReport(name, [row], config,
                       "lhs = pi^n(T); rhs = best of nested search, warm-started search and the "
                       "constructive candidate; lhs, rhs, the independent search and the "
                       "constructive value must agree within tol",
                       {"independent_rhs": indep, "constructive_rhs": constructive})


# --------------------------------------------------------------------------
# rank corollary


def rank_corollary_check(ensemble, X: SpaceDescriptor, q: float, n: int, growth_band: float = 4.0,
                         disjoint_band: float = 0.8,
                         cot_cfg: CotypeConfig | None = None) -> CheckReport:
    """``gc_X^{4n}(T) / gc_X^n(T)`` for operators of rank ``n``, plus the
    disjoint-support restricted optimiser against the unrestricted one."""
    if not q > 2:
        raise InvalidInput("q must exceed 2")
    rows = []
    for i, T, seed in _members(ensemble):
        cfg = _cot_cfg(seed, cot_cfg)
        g1 = gc_n(T, X, n, cfg)
        g2 = gc_n(T, X, 2 * n, cfg, starts=_pad(g1.witness, 2 * n)[None])
        g4 = gc_n(T, X, 4 * n, cfg, starts=_pad(g2.witness, 4 * n)[None])
        gd = gc_disjoint(T, X, n, cfg, starts=g1.witness[None])
        growth = g4.value / g1.value if g1.value > DEGENERATE else math.nan
        dis = gd.value / g1.value if g1.value > DEGENERATE else math.nan
        viol = g1.value > DEGENERATE and (growth > growth_band or dis < disjoint_band)
        rows.append(CheckRow(f"op{i}", g4.value, g1.value, g1.converged and g4.converged, seed, viol,
                             {"gc_n": g1.value, "gc_2n": g2.value, "gc_4n": g4.value,
                              "gc_disjoint": gd.value, "disjoint_ratio": dis}))
    return CheckReport(
        "rank_corollary", rows,
        {"X": X, "q": q, "n": n, "growth_band": growth_band, "disjoint_band": disjoint_band},
        "lhs = gc^{4n}, rhs = gc^n; violation if lhs/rhs > growth_band or "
        "disjoint/unrestricted < disjoint_band",
    )
