import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cotype_lab.errors import InvalidDescriptor, InvalidInput
from cotype_lab.seqspace import (
    DiagSpace, DualOf, LInfLogHalf, LorentzFQ, Lp, LqLogHalf,
    WeightFunction, dl_norm, dual_norm, lorentz_pconvexity_ratio, norm,
    p_convexity_lower_bound, parse_space, rearrange_decreasing, weight_indices,
)

from oracles import cvx_power_dual, log_weighted_lq

LOG2 = math.log(2.0)

# Every descriptor kind, all backed by exact profiles (cheap to evaluate).  Power
# profiles are norms exactly when their weights do not increase.
NORMED = [
    Lp(1), Lp(2), Lp(3.5), Lp(math.inf),
    LorentzFQ(WeightFunction.power(0.25), 3),
    LorentzFQ(WeightFunction.power(0.5), 2),
    LorentzFQ(WeightFunction.power_log(0.25, -0.5), 4),
    LqLogHalf(3, -1),
    DualOf(Lp(3)), DualOf(LorentzFQ(WeightFunction.power(0.5), math.inf)),
    DualOf(LorentzFQ(WeightFunction.power(0.75), 2)),
    DiagSpace(LInfLogHalf(), Lp(3)), DiagSpace(Lp(4), Lp(2)), DiagSpace(Lp(math.inf), Lp(3)),
]
# Growing weights give quasi-norms; they keep every axiom but the triangle inequality.
QUASI = [LInfLogHalf(), LqLogHalf(3, +1), LorentzFQ(WeightFunction.power(0.5), math.inf),
         LorentzFQ(WeightFunction.power(0.75), 2), LorentzFQ(WeightFunction.power_log(0.25, 0.5), 4)]
ALL = NORMED + QUASI

seqs = arrays(np.float64, st.integers(1, 32),
              elements=st.floats(-1e3, 1e3, allow_nan=False, allow_subnormal=False))


def ids(spaces):
    return [X.describe() for X in spaces]


def describe(X):
    return X.describe()


# -------------------------------------------------------------- examples

def test_rearrange_examples():
    assert rearrange_decreasing([-3, 1, 2]).tolist() == [3, 2, 1]
    assert rearrange_decreasing([0, 0]).tolist() == [0, 0]
    assert rearrange_decreasing([1, -1, 1]).tolist() == [1, 1, 1]
    with pytest.raises(InvalidInput):
        rearrange_decreasing([1.0, math.nan])


def test_norm_examples():
    assert norm(Lp(2), [3, 4]) == pytest.approx(5, rel=1e-15)
    assert norm(LInfLogHalf(), [1, 1]) == pytest.approx(math.sqrt(math.log(3)), rel=1e-15)
    assert round(norm(LInfLogHalf(), [1, 1]), 6) == 1.048147
    assert norm(LorentzFQ(WeightFunction.power(0.5), math.inf), [2, 1, 1]) == pytest.approx(2)


def test_log_weighted_norms_match_direct_formula():
    s = [0.3, -2.0, 1.0, 0.5]
    for sign in (-1, 1):
        assert norm(LqLogHalf(3, sign), s) == pytest.approx(log_weighted_lq(s, 3, sign), rel=1e-13)


def test_invalid_descriptors():
    with pytest.raises(InvalidDescriptor):
        Lp(0.5)
    with pytest.raises(InvalidDescriptor):
        LqLogHalf(math.inf)
    with pytest.raises(InvalidDescriptor):
        LqLogHalf(3, 2)
    with pytest.raises(InvalidDescriptor):
        parse_space("nonsense:3")


def test_dual_examples():
    assert dual_norm(Lp(1), [1, 2, 3]).value == pytest.approx(3)
    assert dual_norm(Lp(2), [1, 0]).value == pytest.approx(1)
    # frozen: only sigma_1 matters, max sigma_1 = 1/sqrt(log 2) = 1.2011224087864498
    assert dual_norm(LInfLogHalf(), [1]).value == pytest.approx(1.2011224087864498, rel=1e-12)


def test_dl_examples():
    assert dl_norm(Lp(math.inf), Lp(2), [1, 1]).value == pytest.approx(math.sqrt(2))
    assert dl_norm(Lp(2), Lp(2), [3, 1]).value == pytest.approx(3)
    assert dl_norm(LInfLogHalf(), Lp(2), [1]).value == pytest.approx(1.2011224087864498, rel=1e-9)


def test_weight_indices_examples():
    for a, tol in ((1 / 3, 0.01), (0.0, 0.01)):
        lo_hi = weight_indices(WeightFunction.power(a))
        assert lo_hi == pytest.approx((a, a), abs=tol)
    assert weight_indices(WeightFunction.power_log(0.25, 0.5)) == pytest.approx((0.25, 0.25), abs=0.02)


def test_p_convexity_examples():
    assert p_convexity_lower_bound(Lp(3), 3, 4, 200, seed=1) == pytest.approx(1.0, abs=1e-12)
    assert p_convexity_lower_bound(Lp(1), 2, 2, 50, seed=1) >= math.sqrt(2) - 1e-12
    assert p_convexity_lower_bound(LqLogHalf(4, +1), 3, 8, 10_000, seed=1) <= 10


def test_p_convexity_is_seed_deterministic():
    X = LqLogHalf(4, +1)
    assert p_convexity_lower_bound(X, 3, 6, 300, seed=5) == p_convexity_lower_bound(X, 3, 6, 300, seed=5)


def test_lorentz_pconvexity_examples():
    f = WeightFunction.power(1 / 8)
    assert lorentz_pconvexity_ratio(f, 4, 2, [1]) == pytest.approx(1.0)
    assert 0.1 <= lorentz_pconvexity_ratio(f, 4, 2, [1, 1, 1, 1]) <= 10
    geo = 2.0 ** -np.arange(1, 17)
    assert 0.1 <= lorentz_pconvexity_ratio(f, 4, 2, geo) <= 10
    assert lorentz_pconvexity_ratio(f, 4, 2, [0, 0]) == 1.0


def test_parse_space_round_trip():
    for text in ["lp:3", "linf-log-half", "lq-log-half:3:-1", "lorentz:power:0.5:inf",
                 "lorentz:power_log:0.25:0.5:4", "dual(lp:3,6)", "diag(linf-log-half,lp:3,4)"]:
        X = parse_space(text)
        assert parse_space(X.describe()) == X


# ----------------------------------------------------- dual against cvxpy

@pytest.mark.parametrize("X", [LorentzFQ(WeightFunction.power(0.25), 3), LqLogHalf(3, -1),
                               LorentzFQ(WeightFunction.power(0.75), 2)], ids=describe)
def test_power_profile_dual_against_convex_solver(X):
    rng = np.random.default_rng(3)
    for n in (3, 5):
        tau = rng.standard_normal(n)
        prof = X.profile(n)
        ref = cvx_power_dual(prof.coef, prof.r, tau)
        assert dual_norm(X, tau).value == pytest.approx(ref, rel=1e-5)


def test_dual_witness_attains_value():
    X = LorentzFQ(WeightFunction.power(0.25), 3)
    tau = np.array([0.5, -2.0, 1.0, 0.0, 0.3])
    res = dual_norm(X, tau)
    assert X.norm(res.witness) <= 1 + 1e-9
    assert res.witness @ tau == pytest.approx(res.value, rel=1e-9)


# --------------------------------------------------------------- properties

@pytest.mark.parametrize("X", ALL, ids=ids(ALL))
@given(s=seqs, c=st.floats(-1e3, 1e3, allow_nan=False))
@settings(max_examples=40, deadline=None)
def test_homogeneity_and_symmetry(X, s, c):
    v = norm(X, s)
    assert norm(X, c * s) == pytest.approx(abs(c) * v, rel=1e-12, abs=1e-300)
    perm = np.random.default_rng(len(s)).permutation(len(s))
    signs = np.where(np.arange(len(s)) % 2, -1.0, 1.0)
    assert norm(X, (s * signs)[perm]) == pytest.approx(v, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("X", NORMED, ids=ids(NORMED))
@given(data=st.data(), n=st.integers(1, 32))
@settings(max_examples=40, deadline=None)
def test_triangle_inequality(X, data, n):
    el = st.floats(-100, 100, allow_nan=False, allow_subnormal=False)
    a = data.draw(arrays(np.float64, n, elements=el))
    b = data.draw(arrays(np.float64, n, elements=el))
    assert norm(X, a + b) <= (norm(X, a) + norm(X, b)) * (1 + 1e-12) + 1e-300


def two_point_triangle_ratio(X, n=4):
    # a = (1, t, 0...), b = (t, 1, 0...): the sharpest two-coordinate probe.
    t = np.linspace(0, 1, 201)
    a = np.zeros((len(t), n))
    a[:, 0], a[:, 1] = 1.0, t
    b = a[:, [1, 0] + list(range(2, n))]
    return float(np.max(X.norm_many(a + b) / (X.norm_many(a) + X.norm_many(b))))


@pytest.mark.parametrize("X", NORMED, ids=describe)
def test_triangle_two_point_probe(X):
    assert two_point_triangle_ratio(X) <= 1 + 1e-12


@pytest.mark.parametrize("X", QUASI, ids=describe)
def test_growing_weights_break_triangle(X):
    rng = np.random.default_rng(0)
    ratio = two_point_triangle_ratio(X)
    for _ in range(2000):
        n = int(rng.integers(2, 9))
        a, b = np.abs(rng.standard_normal((2, n))) * (rng.random((2, n)) < 0.6)
        if norm(X, a) + norm(X, b) > 0:
            ratio = max(ratio, norm(X, a + b) / (norm(X, a) + norm(X, b)))
    assert ratio > 1 + 1e-3


@pytest.mark.parametrize("X", ALL, ids=ids(ALL))
@given(s=seqs, data=st.data())
@settings(max_examples=40, deadline=None)
def test_lattice_monotonicity(X, s, data):
    alpha = data.draw(arrays(np.float64, len(s), elements=st.floats(-1, 1, allow_nan=False)))
    assert norm(X, alpha * s) <= norm(X, s) + 1e-12 * max(1.0, norm(X, s))


@pytest.mark.parametrize("X", [Lp(1), Lp(3), LorentzFQ(WeightFunction.power(0.25), 3),
                               LorentzFQ(WeightFunction.power(0.5), 2)], ids=describe)
def test_unit_vectors_have_norm_one(X):
    assert norm(X, [0, 0, 1.0, 0]) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("X", [Lp(1.5), Lp(3), LorentzFQ(WeightFunction.power(0.25), 3),
                               LorentzFQ(WeightFunction.power(0.5), 2),
                               LqLogHalf(3, -1)], ids=describe)
def test_duality_round_trip(X):
    rng = np.random.default_rng(11)
    for n in (2, 4, 6):
        tau = rng.standard_normal(n)
        assert DualOf(DualOf(X, n), n).norm(tau) == pytest.approx(X.norm(tau), rel=0.02)


@pytest.mark.parametrize("X,q", [(Lp(4), 2), (Lp(3), 3), (LqLogHalf(3, -1), 3),
                                 (LorentzFQ(WeightFunction.power(0.25), 3), 3)])
def test_diagonal_sandwich_for_convex_spaces(X, q):
    # Each X here is q-convex with constant 1, so both sides of the sandwich coincide.
    Y = DiagSpace(X, Lp(q))
    rng = np.random.default_rng(2)
    for n in (2, 6):
        s = rng.standard_normal(n)
        v = dl_norm(Y, Lp(q), s).value
        assert v <= X.norm(s) * (1 + 1e-6)
        assert v >= X.norm(s) * (1 - 1e-4)


@pytest.mark.parametrize("Z", [Lp(2), Lp(3), LqLogHalf(3, -1), LorentzFQ(WeightFunction.power(0.25), 3)],
                         ids=describe)
def test_diagonal_shortcuts_match_optimizer(Z):
    rng = np.random.default_rng(4)
    s = rng.standard_normal(5)
    inf_z = dl_norm(Lp(math.inf), Z, s)
    assert inf_z.value == Z.norm(s)
    assert dl_norm(Lp(math.inf), Z, s, method="optimize").value == pytest.approx(inf_z.value, rel=1e-6)
    same = dl_norm(Z, Z, s)
    assert same.value == np.max(np.abs(s))
    assert dl_norm(Z, Z, s, method="optimize").value == pytest.approx(same.value, rel=1e-6)


def test_support_restriction_is_enforced():
    with pytest.raises(InvalidInput):
        DualOf(Lp(2), 2).norm([1, 2, 3])


@pytest.mark.parametrize("X", QUASI, ids=describe)
def test_bidual_of_quasi_norm_is_its_convex_envelope(X):
    # X^{++} is the largest norm below ||.||_X, never above it.
    rng = np.random.default_rng(11)
    for n in (2, 4, 6):
        tau = rng.standard_normal(n)
        assert DualOf(DualOf(X, n), n).norm(tau) <= X.norm(tau) * (1 + 1e-6)
