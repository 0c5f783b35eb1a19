import csv
import io
import json
import math

import numpy as np
import pytest

from cotype_lab.cotype import CotypeConfig, InequalitySamples
from cotype_lab.errors import InvalidInput, UnsupportedConfiguration
from cotype_lab.experiments import (
    CheckReport, CheckRow, EnsembleSpec, comparison_check, lq_special_case_check,
    maurey_chain_check, quotient_formula_1_check, quotient_formula_2_check, rank_corollary_check,
)
from cotype_lab.seqspace import DiagSpace, LInfLogHalf, Lp, LqLogHalf, dl_norm
from cotype_lab.summing import OperatorCK, OptimizerConfig, pi_opt

COT = CotypeConfig(seed=0, restarts=6, iterations=150, search_samples=4000, final_samples=40_000)
PI = OptimizerConfig(seed=0, restarts=12, iterations=200)
INV_SQRT_LOG2 = 1 / math.sqrt(math.log(2))


# --------------------------------------------------------------- ensembles

def test_ensemble_parse_and_determinism():
    spec = EnsembleSpec.parse("gaussian:4x3:5", seed=7)
    assert (spec.family, spec.d, spec.m, spec.count) == ("gaussian-iid", 4, 3, 5)
    a, b = spec.operators(), EnsembleSpec.parse("gaussian:4x3:5", seed=7).operators()
    assert all(np.array_equal(x.matrix, y.matrix) for x, y in zip(a, b))
    assert not np.array_equal(a[0].matrix, EnsembleSpec.parse("gaussian:4x3:5", seed=8).member(0).matrix)
    assert EnsembleSpec.parse("diag:0.5:4x4:10", 1).family == "diagonal-decay"
    assert EnsembleSpec.parse("sparse:0.3:4x4:10", 1).param == 0.3
    with pytest.raises(InvalidInput):
        EnsembleSpec.parse("gaussian:4by4:3", 1)
    with pytest.raises(InvalidInput):
        EnsembleSpec("rank-r", 3, 3, 2, 0, param=4)


def test_rank_ensemble_has_exact_rank():
    for T in EnsembleSpec.parse("rank:2:6x6:20", seed=3).operators():
        assert np.linalg.matrix_rank(T.matrix) == 2


def test_diagonal_decay_members():
    T = EnsembleSpec("diagonal-decay", 3, 4, 1, 0, param=1.0).member(0)
    assert np.abs(np.diag(T.matrix)) == pytest.approx([1, 1 / 2, 1 / 3])


def test_gaussian_ensemble_moments():
    entries = np.concatenate([T.matrix.ravel() for T in EnsembleSpec.parse("gaussian:4x4:1000", 5).operators()])
    se = 1 / math.sqrt(len(entries))
    assert abs(entries.mean()) <= 4 * se
    assert abs(entries.var() - 1) <= 4 * math.sqrt(2) * se


# ------------------------------------------------------------------ reports

def test_report_csv_and_json():
    rows = [CheckRow("a", 1 / 3, 2.0, True, 11), CheckRow("b", 0.0, 0.0, False, 12),
            CheckRow("c", 3.0, 1.0, True, 13, violation=True)]
    rep = CheckReport("demo", rows, {"X": Lp(3)})
    parsed = list(csv.reader(io.StringIO(rep.to_csv())))
    assert parsed[0] == ["id", "lhs", "rhs", "ratio", "converged", "seed"]
    assert float(parsed[1][1]) == 1 / 3
    assert parsed[2][3] == "nan" and parsed[2][4] == "0"
    summary = json.loads(rep.to_json())
    assert summary["degenerate"] == 1 and summary["violations"] == 1 and not summary["passed"]
    assert summary["ratio"]["min"] == pytest.approx(1 / 6) and summary["ratio"]["max"] == 3
    assert summary["config"]["X"] == "lp:3"


# ------------------------------------------------------------------ Maurey

def test_maurey_zero_and_identity():
    rep = maurey_chain_check([OperatorCK(np.zeros((2, 2))), OperatorCK(np.eye(2))], Lp(4), 4, 2,
                             pi_cfg=PI, cot_cfg=COT)
    zero, ident = rep.rows
    assert zero.lhs == zero.rhs == 0 and not zero.violation
    assert not ident.violation
    assert ident.extra["pi1"] <= ident.extra["rc"] * (1 + 1e-3) <= math.sqrt(2) * ident.extra["pi2"] * (1 + 1e-3)
    assert rep.passed


def test_maurey_small_ensemble():
    rep = maurey_chain_check(EnsembleSpec.parse("gaussian:4x4:6", 1), Lp(4), 4, 3, pi_cfg=PI, cot_cfg=COT)
    assert rep.violations == 0
    assert rep.extra["sanity_band_c0_eq_1"] == pytest.approx((0.5 - 0.25) ** -0.75)


def test_maurey_needs_q_above_two():
    with pytest.raises(InvalidInput):
        maurey_chain_check([OperatorCK(np.eye(2))], Lp(2), 2, 2)


# -------------------------------------------------------------- comparison

def test_comparison_single_vector_closed_form():
    T = OperatorCK(np.random.default_rng(0).standard_normal((3, 4)))
    rep = comparison_check([T, OperatorCK(np.zeros((3, 4)))], Lp(3), 3, n_list=(1,), cot_cfg=COT)
    row, zero = rep.rows
    # gc^1 = ||e_1||_X ||T|| and rc_Y^1 = ||e_1||_Y ||T|| with ||e_1||_Y = 1/sqrt(log 2)
    assert row.rhs == pytest.approx(INV_SQRT_LOG2 * T.operator_norm(), rel=1e-6)
    assert abs(row.lhs - T.operator_norm()) <= 3 * row.extra["gc_std_error"]
    assert row.ratio == pytest.approx(math.sqrt(math.log(2)), rel=0.02)
    assert zero.degenerate and not zero.violation


def test_comparison_bands_small_ensemble():
    rep = comparison_check(EnsembleSpec.parse("gaussian:3x3:4", 2), Lp(3), 3, n_list=(2, 4), cot_cfg=COT)
    assert rep.passed
    assert set(rep.extra["bands"]) == {"2", "4"}


# ----------------------------------------------------------- l_q special case

def test_lq_special_case_examples():
    rep = lq_special_case_check([OperatorCK(np.eye(2))], 3, 8, sequences=2, seed=1,
                                samples=InequalitySamples(50, 1, 2000), cot_cfg=COT)
    e1, ones = rep.rows[0], rep.rows[1]
    assert e1.lhs == pytest.approx(INV_SQRT_LOG2, rel=1e-9) and e1.ratio == pytest.approx(1, rel=1e-9)
    assert 0.25 <= ones.ratio <= 4
    assert rep.passed
    assert dl_norm(LInfLogHalf(), Lp(3), np.zeros(4)).value == 0 == LqLogHalf(3, -1).norm(np.zeros(4))


# ----------------------------------------------------------------- quotients

def test_quotient_1_zero_operator():
    rep = quotient_formula_1_check(OperatorCK(np.zeros((2, 2))), Lp(math.inf), 3, 1, 2, pi_cfg=PI)
    assert rep.rows[0].lhs == rep.rows[0].rhs == 0 and rep.passed


@pytest.mark.parametrize("r", [1, 2])
def test_quotient_1_single_vector(r):
    T = OperatorCK(np.random.default_rng(1).standard_normal((2, 3)))
    Y = LInfLogHalf()
    rep = quotient_formula_1_check(T, Y, 3, r, 1, M=2, pi_cfg=PI)
    expected = T.operator_norm() / Y.norm([1.0])
    assert rep.rows[0].lhs == pytest.approx(expected, rel=1e-6)
    assert rep.rows[0].rhs == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("seed", range(3))
def test_quotient_1_identity(seed):
    rep = quotient_formula_1_check(OperatorCK(np.eye(2)), Lp(math.inf), 3, 1, 2, seed=seed, pi_cfg=PI)
    assert rep.passed


def test_quotient_1_refuses_other_r():
    with pytest.raises(UnsupportedConfiguration):
        quotient_formula_1_check(OperatorCK(np.eye(2)), Lp(math.inf), 3, 3, 2)
    with pytest.raises(InvalidInput):
        quotient_formula_1_check(OperatorCK(np.eye(4)), Lp(math.inf), 3, 1, 2)


def test_quotient_2_zero_operator():
    rep = quotient_formula_2_check(OperatorCK(np.zeros((2, 2))), LInfLogHalf(), Lp(3), 2, pi_cfg=PI)
    assert rep.rows[0].lhs == rep.rows[0].rhs == 0 and rep.passed


def test_quotient_2_dominates_a_member():
    T = OperatorCK(np.random.default_rng(2).standard_normal((3, 3)))
    Y, Z = LInfLogHalf(), Lp(3)
    rep = quotient_formula_2_check(T, Y, Z, 2, M=3, pi_cfg=PI)
    sigma = np.ones(3) / Y.norm(np.ones(3))
    member = pi_opt(OperatorCK(T.matrix @ np.diag(sigma)), Z, 1, 2, PI).value
    assert rep.rows[0].rhs >= member - 1e-9


@pytest.mark.parametrize("seed", range(3))
def test_quotient_2_identity(seed):
    rep = quotient_formula_2_check(OperatorCK(np.eye(2)), LInfLogHalf(), Lp(3), 2, M=2, seed=seed, pi_cfg=PI)
    assert rep.passed


# ------------------------------------------------------------ rank corollary

def test_rank_corollary_rank_one_and_zero():
    ops = EnsembleSpec.parse("rank:1:4x4:3", 4).operators() + [OperatorCK(np.zeros((4, 4)))]
    rep = rank_corollary_check(ops, Lp(3), 3, 1, cot_cfg=COT)
    for row in rep.rows[:3]:
        assert row.extra["gc_4n"] / row.extra["gc_n"] <= 2
    assert not rep.rows[3].violation and math.isnan(rep.rows[3].extra["disjoint_ratio"])


def test_rank_corollary_diagonal_rank_two():
    A = np.zeros((6, 6))
    A[0, 0], A[1, 1] = 1.0, 0.6
    rep = rank_corollary_check([OperatorCK(A)], Lp(3), 3, 2, cot_cfg=COT)
    assert rep.rows[0].extra["disjoint_ratio"] >= 0.8
    assert rep.passed


def test_reports_are_reproducible():
    spec = EnsembleSpec.parse("gaussian:3x3:3", 9)
    a = comparison_check(spec, Lp(3), 3, n_list=(2,), cot_cfg=COT)
    b = comparison_check(spec, Lp(3), 3, n_list=(2,), cot_cfg=COT)
    assert a.to_csv() == b.to_csv() and a.to_json() == b.to_json()
