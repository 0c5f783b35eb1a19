"""Command-line front end.

Examples::

    cotype-lab norm --space linf-log-half --seq 1,1
    cotype-lab summing --matrix "1,0;0,1" --X lp:2 --q 1 --n 2 --seed 1
    cotype-lab check comparison --X lq:3 --n 4 --ensemble gaussian:4x4:30 --seed 7 --out runs
    cotype-lab validate check comparison --X lp:2 --n 4 --ensemble gaussian:4x4:3

With ``--out DIR`` every run gets a fresh ``DIR/run-NNNN`` directory holding
its outputs and a ``manifest.json`` (config echo, version, timestamps, sha256
digests).  Existing runs are never overwritten.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .cotype import CotypeConfig, gc_n, rc_n
from .errors import CapacityError, CotypeLabError
from .experiments import (
    EnsembleSpec,
    comparison_check,
    lq_special_case_check,
    maurey_chain_check,
    quotient_formula_1_check,
    quotient_formula_2_check,
    rank_corollary_check,
)
from .seqspace import parse_space
from .snumbers import approximation_numbers, weyl_numbers
from .summing import EXACT_Q1_MAX_M, EXACT_Q1_MAX_N, OperatorCK, OptimizerConfig, pi_exact_q1, pi_opt

COMMANDS = ("norm", "summing", "cotype", "snumbers", "check")
CHECKS = ("maurey", "comparison", "lq-special", "quotient1", "quotient2", "rank")
STOCHASTIC = ("summing", "cotype", "snumbers", "check")
LOCK_NAME = ".cotype-lab.lock"


@dataclass
class RunConfig:
    command: str
    check: str | None = None
    space: str | None = None
    seq: str | None = None
    dual: bool = False
    matrix: str | None = None
    target: float = 2.0
    domain: str = "linf"
    X: str | None = None
    Y: str | None = None
    Z: str | None = None
    q: float | None = None
    r: float | None = None
    n: int | None = None
    n_list: str | None = None
    k_max: int | None = None
    kind: str | None = None
    ensemble: str | None = None
    exact: bool = False
    restarts: int | None = None
    iterations: int | None = None
    samples: int | None = None
    seed: int | None = None
    output_dir: str | None = None
    format: str = "json"

    def echo(self) -> dict:
        """Canonical record: every field except the output location."""
        d = dataclasses.asdict(self)
        d.pop("output_dir")
        return dict(sorted(d.items()))


class UsageError(CotypeLabError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# --------------------------------------------------------------------------
# parsing


def _float(text: str) -> float:
    t = text.strip().lower()
    return math.inf if t in ("inf", "infinity") else float(t)


def parse_matrix(text: str) -> np.ndarray:
    """Rows separated by ``;``, entries by ``,``."""
    try:
        rows = [[_float(v) for v in row.split(",")] for row in text.strip().split(";")]
    except ValueError as exc:
        raise UsageError("matrix", f"cannot parse {text!r}") from exc
    if len({len(r) for r in rows}) != 1:
        raise UsageError("matrix", "rows have different lengths")
    return np.array(rows, dtype=float)


def parse_seq(text: str) -> np.ndarray:
    try:
        return np.array([_float(v) for v in text.split(",")])
    except ValueError as exc:
        raise UsageError("seq", f"cannot parse {text!r}") from exc


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with config fields; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="output_dir")
    p.add_argument("--format", choices=("csv", "json"))


def _add_operator(p: argparse.ArgumentParser) -> None:
    p.add_argument("--matrix", help='rows separated by ";", e.g. "1,0;0,1"')
    p.add_argument("--target", type=_float, help="target l_p exponent: 1, 2 or inf")
    p.add_argument("--domain", choices=("linf", "l2"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cotype-lab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", help="norm, dual norm or DL norm of a sequence")
    p.add_argument("--space")
    p.add_argument("--seq")
    p.add_argument("--dual", action="store_true", default=None)
    _add_common(p)

    p = sub.add_parser("summing", help="(X, q)-summing norm pi_{X,q}^n(T)")
    _add_operator(p)
    p.add_argument("--X")
    p.add_argument("--q", type=_float)
    p.add_argument("--n", type=int)
    p.add_argument("--exact", action="store_true", default=None, help="exact q=1 enumeration only")
    p.add_argument("--restarts", type=int)
    p.add_argument("--iterations", type=int)
    _add_common(p)

    p = sub.add_parser("cotype", help="rc_X^n(T) or gc_X^n(T)")
    _add_operator(p)
    p.add_argument("--X")
    p.add_argument("--n", type=int)
    p.add_argument("--kind", choices=("rc", "gc"))
    p.add_argument("--restarts", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--samples", type=int, help="final gaussian samples")
    _add_common(p)

    p = sub.add_parser("snumbers", help="approximation or Weyl numbers")
    _add_operator(p)
    p.add_argument("--kind", choices=("approximation", "weyl"))
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--iterations", type=int)
    _add_common(p)

    p = sub.add_parser("check", help="theorem-level checks over ensembles")
    p.add_argument("check", choices=CHECKS)
    _add_operator(p)
    p.add_argument("--X")
    p.add_argument("--Y")
    p.add_argument("--Z")
    p.add_argument("--q", type=_float)
    p.add_argument("--r", type=_float)
    p.add_argument("--n", type=int)
    p.add_argument("--n-list", dest="n_list", help="comma separated, comparison check only")
    p.add_argument("--ensemble", help="e.g. gaussian:4x4:30, rank:2:6x6:20")
    p.add_argument("--restarts", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--samples", type=int)
    _add_common(p)

    p = sub.add_parser("validate", help="static validation of a command line, without running it")
    p.add_argument("args", nargs=argparse.REMAINDER)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    values = {}
    cfg_file = getattr(ns, "config", None)
    if cfg_file:
        try:
            values.update(json.loads(Path(cfg_file).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError("config", str(exc)) from exc
        values.pop("command", None)
    for k, v in vars(ns).items():
        if k in ("config", "args") or v is None:
            continue
        values[k] = v
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(values) - fields)
    if unknown:
        raise UsageError(unknown[0], "unknown config field")
    return RunConfig(**values)


# --------------------------------------------------------------------------
# validation


def _space(cfg: RunConfig, name: str):
    text = getattr(cfg, name)
    if text is None:
        raise UsageError(name, "required")
    return parse_space(text)


def _operator(cfg: RunConfig) -> OperatorCK:
    if cfg.matrix is None:
        raise UsageError("matrix", "required")
    return OperatorCK(parse_matrix(cfg.matrix), cfg.target, cfg.domain)


def _convexity_exponent(X) -> float | None:
    decl = getattr(X, "declared_convexity", None)
    return None if decl is None else float(decl[0])


def validate(cfg: RunConfig) -> list[str]:
    """Static diagnostics; an empty list means the config is runnable."""
    out: list[str] = []

    def need(name):
        if getattr(cfg, name) is None:
            out.append(f"{name}: required")
            return False
        return True

    def space(name):
        if not need(name):
            return None
        try:
            return parse_space(getattr(cfg, name))
        except CotypeLabError as exc:
            out.append(f"{name}: {exc}")
            return None

    T = None
    if cfg.command in ("summing", "cotype", "snumbers") or (
        cfg.command == "check" and cfg.check in ("quotient1", "quotient2")
    ):
        if need("matrix"):
            try:
                T = _operator(cfg)
            except CotypeLabError as exc:
                out.append(f"matrix: {exc}")
    if cfg.command in STOCHASTIC and cfg.seed is None:
        out.append("seed: required for stochastic commands")
    if cfg.command == "norm":
        space("space")
        if need("seq"):
            try:
                parse_seq(cfg.seq)
            except CotypeLabError as exc:
                out.append(str(exc))
    elif cfg.command == "summing":
        space("X")
        need("n")
        if cfg.q is not None and cfg.q not in (1, 2):
            out.append("q: pi_opt supports q in {1, 2}")
        if cfg.exact and cfg.q not in (None, 1):
            out.append("exact: exact enumeration needs q = 1")
        if cfg.exact and T is not None and cfg.n is not None and (
            T.m > EXACT_Q1_MAX_M or cfg.n > EXACT_Q1_MAX_N
        ):
            out.append(
                f"capacity: exact q=1 enumeration is capped at m <= {EXACT_Q1_MAX_M}, "
                f"n <= {EXACT_Q1_MAX_N} (got m={T.m}, n={cfg.n}); drop --exact to use the optimizer"
            )
    elif cfg.command == "cotype":
        space("X")
        need("n")
        need("kind")
    elif cfg.command == "snumbers":
        need("kind")
        if T is not None and T.target_p != 2:
            out.append("target: s-numbers need an l_2 target")
        if cfg.kind == "approximation" and T is not None and T.domain != "l2":
            out.append("domain: approximation numbers need --domain l2")
        if cfg.kind == "weyl":
            need("k_max")
    elif cfg.command == "check":
        _validate_check(cfg, out, space, need, T)
    return out


def _validate_check(cfg, out, space, need, T):
    if cfg.check in ("maurey", "comparison", "rank", "lq-special"):
        need("ensemble")
        if cfg.ensemble is not None and cfg.seed is not None:
            try:
                EnsembleSpec.parse(cfg.ensemble, cfg.seed)
            except CotypeLabError as exc:
                out.append(f"ensemble: {exc}")
        need("n")
    q = cfg.q
    if cfg.check in ("maurey", "comparison", "rank"):
        X = space("X")
        if q is None and X is not None:
            q = _convexity_exponent(X)
        if q is None:
            out.append("q: required (X declares no convexity exponent)")
    if cfg.check == "lq-special" and q is None:
        out.append("q: required")
    if cfg.check in ("maurey", "comparison", "rank", "lq-special") and q is not None and not 2 < q < math.inf:
        out.append("q must exceed 2 (and be finite)")
    if cfg.check == "quotient1":
        space("Y")
        need("q")
        need("n")
        if cfg.r not in (1, 2):
            out.append("r: quotient checks support r in {1, 2}")
    if cfg.check == "quotient2":
        space("Y")
        space("Z")
        need("n")
    if cfg.check in ("quotient1", "quotient2") and T is not None:
        if max(T.d, T.m) > 3 or (cfg.n or 0) > 2:
            out.append("capacity: quotient checks are sized for d, m <= 3 and n <= 2")


# --------------------------------------------------------------------------
# execution


def _pi_cfg(cfg: RunConfig) -> OptimizerConfig:
    kw = {k: v for k, v in (("restarts", cfg.restarts), ("iterations", cfg.iterations)) if v}
    return OptimizerConfig(seed=cfg.seed, **kw)


def _cot_cfg(cfg: RunConfig) -> CotypeConfig:
    kw = {k: v for k, v in (("restarts", cfg.restarts), ("iterations", cfg.iterations),
                            ("final_samples", cfg.samples)) if v}
    return CotypeConfig(seed=cfg.seed, **kw)


def execute(cfg: RunConfig) -> dict[str, str]:
    """Run the configured operation; returns ``{file name: content}``."""
    if cfg.command == "norm":
        X = _space(cfg, "space")
        s = parse_seq(cfg.seq) if cfg.seq else None
        if s is None:
            raise UsageError("seq", "required")
        value = X.dual(s).value if cfg.dual else X.norm(s)
        return {"result.json": json.dumps({"space": X.describe(), "dual": bool(cfg.dual),
                                           "value": value}, sort_keys=True) + "\n",
                "_stdout": f"{value:.6f}"}
    if cfg.command == "summing":
        T, X = _operator(cfg), _space(cfg, "X")
        if cfg.exact:
            cert = pi_exact_q1(T, X, cfg.n)
        else:
            cert = pi_opt(T, X, cfg.q or 1, cfg.n, _pi_cfg(cfg))
        return _certificate_files(cert.value, cert.witness, cert.method, cert.converged)
    if cfg.command == "cotype":
        T, X = _operator(cfg), _space(cfg, "X")
        fn = rc_n if cfg.kind == "rc" else gc_n
        cert = fn(T, X, cfg.n, _cot_cfg(cfg))
        return _certificate_files(cert.value, cert.witness, cert.method, cert.converged,
                                  {"std_error": cert.std_error,
                                   "denominator": cert.denominator_estimate.value})
    if cfg.command == "snumbers":
        T = _operator(cfg)
        seq = approximation_numbers(T) if cfg.kind == "approximation" else \
            weyl_numbers(T, cfg.k_max, _pi_cfg(cfg))
        body = {"kind": seq.kind, "method": seq.method, "values": seq.values.tolist()}
        if seq.converged is not None:
            body["converged"] = seq.converged.tolist()
        return {"result.json": json.dumps(body, sort_keys=True) + "\n"}
    rep = _run_check(cfg)
    return {"results.csv": rep.to_csv(), "summary.json": rep.to_json() + "\n"}


def _certificate_files(value, witness, method, converged, extra=None) -> dict[str, str]:
    body = {"value": value, "method": method, "converged": bool(converged),
            "witness": np.asarray(witness).tolist(), **(extra or {})}
    return {"result.json": json.dumps(body, sort_keys=True) + "\n"}


def _run_check(cfg: RunConfig):
    cot = _cot_cfg(cfg)
    pi = _pi_cfg(cfg)
    if cfg.check in ("quotient1", "quotient2"):
        T, Y = _operator(cfg), _space(cfg, "Y")
        if cfg.check == "quotient1":
            return quotient_formula_1_check(T, Y, cfg.q, cfg.r, cfg.n, seed=cfg.seed, pi_cfg=pi)
        return quotient_formula_2_check(T, Y, _space(cfg, "Z"), cfg.n, seed=cfg.seed, pi_cfg=pi)
    ens = EnsembleSpec.parse(cfg.ensemble, cfg.seed, cfg.target)
    if cfg.check == "lq-special":
        return lq_special_case_check(ens, cfg.q, cfg.n, seed=cfg.seed, cot_cfg=cot)
    X = _space(cfg, "X")
    q = cfg.q if cfg.q is not None else _convexity_exponent(X)
    if cfg.check == "maurey":
        return maurey_chain_check(ens, X, q, cfg.n, pi_cfg=pi, cot_cfg=cot)
    if cfg.check == "comparison":
        n_list = [int(v) for v in cfg.n_list.split(",")] if cfg.n_list else [cfg.n]
        return comparison_check(ens, X, q, n_list, cot_cfg=cot)
    return rank_corollary_check(ens, X, q, cfg.n, cot_cfg=cot)


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _new_run_dir(root: Path) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    i = 1
    while True:
        d = root / f"run-{i:04d}"
        try:
            d.mkdir()
            return d
        except FileExistsError:
            i += 1


def run(cfg: RunConfig) -> dict:
    """Execute ``cfg``; with an output directory, persist outputs and a manifest."""
    # capacity limits are left to the modules so their errors surface verbatim
    blocking = [d for d in validate(cfg) if not d.startswith("capacity:")]
    if blocking:
        raise UsageError("config", "; ".join(blocking))
    started = datetime.now(timezone.utc).isoformat()
    files = execute(cfg)
    stdout = files.pop("_stdout", None)
    manifest = {
        "version": __version__,
        "config": cfg.echo(),
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "threads": _threads(),
        "files": {name: _sha256(body.encode()) for name, body in sorted(files.items())},
    }
    if cfg.output_dir is None:
        manifest["_files"] = files
        manifest["_stdout"] = stdout
        return manifest
    root = Path(cfg.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    lock = root / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError as exc:
        raise CotypeLabError(f"output directory {root} is locked by another run ({lock})") from exc
    try:
        os.write(fd, str(os.getpid()).encode())
        run_dir = _new_run_dir(root)
        for name, body in files.items():
            (run_dir / name).write_text(body)
        manifest["run_dir"] = str(run_dir)
        (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    finally:
        os.close(fd)
        lock.unlink(missing_ok=True)
    manifest["_stdout"] = stdout
    return manifest


def _threads() -> int:
    raw = os.environ.get("COTYPE_LAB_THREADS", "1")
    try:
        v = int(raw)
    except ValueError as exc:
        raise UsageError("COTYPE_LAB_THREADS", f"expected a positive integer, got {raw!r}") from exc
    if v < 1:
        raise UsageError("COTYPE_LAB_THREADS", f"expected a positive integer, got {raw!r}")
    return v


def _error_report(exc: Exception) -> str:
    body = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, UsageError):
        body["field"] = exc.field
    return json.dumps(body, sort_keys=True)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command == "validate":
        inner = parser.parse_args(ns.args)
        if inner.command == "validate":
            parser.error("validate cannot validate itself")
        try:
            diags = validate(config_from_args(inner))
        except CotypeLabError as exc:
            diags = [str(exc)]
        print(json.dumps({"diagnostics": diags}, indent=2))
        return 0
    try:
        cfg = config_from_args(ns)
    except UsageError as exc:
        parser.error(str(exc))
    if cfg.command in STOCHASTIC and cfg.seed is None:
        parser.error("--seed is required for stochastic commands")
    try:
        manifest = run(cfg)
    except UsageError as exc:
        print(_error_report(exc), file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(_error_report(exc), file=sys.stderr)
        return 3
    except (CotypeLabError, ValueError) as exc:
        print(_error_report(exc), file=sys.stderr)
        return 1
    if manifest.get("_stdout") is not None:
        print(manifest["_stdout"])
    elif cfg.output_dir is None:
        files = manifest["_files"]
        if cfg.format == "csv" and "results.csv" in files:
            sys.stdout.write(files["results.csv"])
        else:
            for body in files.values():
                if body.lstrip().startswith("{"):
                    sys.stdout.write(body)
    else:
        print(manifest["run_dir"])
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
