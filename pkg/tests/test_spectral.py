import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundcount import _kernels
from boundcount.potential import ZERO, CompactSupport, InverseSquare, PowerDecay, Scaled, Sum, values
from boundcount.spectral import (
    CountOptions,
    CountResult,
    IntervalCount,
    count_bound_states,
    dense_count_oracle,
    dense_matrix,
    node_count,
    prefix_counts,
    sturm_count,
    top_band_count,
    whole_line_count,
)

from conftest import random_instance, whole_line_dense


def test_free_single_site():
    assert sturm_count(ZERO, -0.5, 1) == 0
    assert node_count(ZERO, -0.5, 1) == 0


def test_two_site_quadratic_formula():
    V = CompactSupport((-3.0,))
    # matrix [[-1,-1],[-1,2]]: eigenvalues (1 +- sqrt(13)) / 2
    eig = [(1 - math.sqrt(13)) / 2, (1 + math.sqrt(13)) / 2]
    expected = sum(e <= 0 for e in eig)
    assert expected == 1
    assert sturm_count(V, 0.0, 2) == node_count(V, 0.0, 2) == dense_count_oracle(V, 0.0, 2) == expected


def test_method_agreement_random(rng):
    for _ in range(500):
        V, lam, L = random_instance(rng)
        d = dense_count_oracle(V, lam, L)
        assert sturm_count(V, lam, L) == d
        assert node_count(V, lam, L) == d


@given(
    st.lists(st.floats(-3, 1), min_size=1, max_size=40),
    st.floats(-2.5, 4.5),
)
@settings(max_examples=300, deadline=None)
def test_method_agreement_property(vals, lam):
    V = CompactSupport(tuple(vals))
    L = len(vals)
    eig = np.linalg.eigvalsh(dense_matrix(V, L))
    # skip near-ties, where the inclusive convention meets eigensolver rounding
    if np.min(np.abs(eig - lam)) < 1e-9:
        return
    d = dense_count_oracle(V, lam, L)
    assert sturm_count(V, lam, L) == d == node_count(V, lam, L)


def test_exact_zero_pivot_counts_as_included():
    # d_1 = 2 - 2.5 + 0.5 = 0 exactly: eigenvalue -0.5 of the 1-site matrix
    V = CompactSupport((-2.5,))
    assert sturm_count(V, -0.5, 1) == 1
    assert node_count(V, -0.5, 1) == 1
    assert dense_count_oracle(V, -0.5, 1) == 1
    # the zero pivot must not poison the next step: [[-0.5,-1],[-1,2]] has one eigenvalue <= -0.5
    assert sturm_count(V, -0.5, 2) == node_count(V, -0.5, 2) == dense_count_oracle(V, -0.5, 2) == 1


def test_pivot_saturation_stays_finite():
    d, e, count = _kernels.pivot_block(np.array([-2.5, 0.0, 0.0]), -0.5, np.inf, np.inf, 0)
    assert math.isfinite(d) and math.isfinite(e)
    assert count == 1


def test_dense_oracle_examples():
    assert dense_count_oracle(ZERO, 2.0, 1) == 1
    # free eigenvalues 2 - 2 cos(k pi / 6), k = 1..5; three are <= 2
    free = [2 - 2 * math.cos(k * math.pi / 6) for k in range(1, 6)]
    assert sum(f <= 2 + 1e-12 for f in free) == 3
    assert dense_count_oracle(ZERO, 2.0, 5) == 3


def test_dense_oracle_limit():
    with pytest.raises(ValueError):
        dense_count_oracle(ZERO, 0.0, 513)


def test_dense_oracle_monotone_in_lambda(rng):
    for _ in range(50):
        V, _, L = random_instance(rng)
        lams = np.sort(rng.uniform(-4, 6, 20))
        counts = [dense_count_oracle(V, lam, L) for lam in lams]
        assert counts == sorted(counts)


def test_free_operator_has_no_nodes_below_band():
    for L in (1, 10, 1000, 100_000):
        assert node_count(ZERO, -1.0, L) == 0


def test_sturm_monotone_in_lambda(rng):
    for _ in range(100):
        V, _, L = random_instance(rng)
        lams = np.sort(rng.uniform(-3, 5, 10))
        counts = [sturm_count(V, lam, L) for lam in lams]
        assert counts == sorted(counts)


def test_sturm_monotone_in_potential(rng):
    for _ in range(200):
        V1, lam, L = random_instance(rng)
        bump = rng.uniform(0, 1.5, L)
        V2 = CompactSupport(tuple(np.array(V1.values) + bump))
        assert sturm_count(V1, lam, L) >= sturm_count(V2, lam, L)


@pytest.mark.parametrize("scale", [1e-300, 1e-5, 1.0, 7.5, 1e5, 1e300])
def test_node_count_rescaling_invariance(scale):
    V = InverseSquare(5.0)
    assert node_count(V, -1e-6, 50_000, scale=scale) == node_count(V, -1e-6, 50_000)
    rng = np.random.default_rng(3)
    for _ in range(50):
        W, lam, L = random_instance(rng, L_max=300)
        assert node_count(W, lam, L, scale=scale) == node_count(W, lam, L)


def test_rescaling_keeps_long_runs_finite():
    # growth like 3.7^n would overflow within a few hundred sites without rescaling
    V = CompactSupport((-3.0,) * 5000)
    assert node_count(V, -2.0, 5000) == sturm_count(V, -2.0, 5000)
    u, w, _ = _kernels.node_block(values(V, 1, 5001), -2.0, 1.0, 1.0, 0)
    assert math.isfinite(u) and math.isfinite(w)


def test_difference_form_matches_three_term_signs(rng):
    for _ in range(200):
        L = int(rng.integers(1, 1001))
        V = CompactSupport(tuple(rng.uniform(-0.05, 0.05, L)))
        lam = float(rng.uniform(-0.05, 0.0))
        v = values(V, 1, L + 1)
        a = _kernels.three_term_signs(v, lam, 0.0, 1.0)
        b = _kernels.difference_signs(v, lam, 1.0, 1.0)
        assert np.array_equal(a, b)


def test_difference_form_resolves_tiny_energies():
    # plain three-term recurrence adds 1e-14 to 2 and loses it; the difference form keeps it
    V = ZERO
    lam = -1e-14
    L = 10**6
    assert node_count(V, lam, L) == 0
    assert sturm_count(V, lam, L) == 0
    # a well of depth 1e-13 on 10^6 sites: eigenvalue count by the continuum box estimate
    W = CompactSupport(tuple([-2e-12] * 10**6))
    k = math.sqrt(2e-12 - 1e-12)  # 2 - 2 cos k ~ k^2 = depth - E
    expected = math.floor(k * (L + 1) / math.pi)
    assert node_count(W, -1e-12, L) == sturm_count(W, -1e-12, L) == expected


def test_prefix_counts_match_separate_runs():
    V = InverseSquare(5.0)
    Ls = [10, 100, 1000, 10_000, 300_000]
    for method in ("sturm", "nodes"):
        assert prefix_counts(V, -1e-7, Ls, method) == [
            (sturm_count if method == "sturm" else node_count)(V, -1e-7, L) for L in Ls
        ]


def test_prefix_counts_validation():
    with pytest.raises(ValueError):
        prefix_counts(ZERO, 0.0, [10, 5])
    with pytest.raises(ValueError):
        prefix_counts(ZERO, float("nan"), [10])
    with pytest.raises(ValueError):
        prefix_counts(ZERO, 0.0, [0])
    with pytest.raises(ValueError):
        prefix_counts(ZERO, 0.0, [10], "dense")


def test_node_count_inverse_square_ten_million():
    # leading-order phase sqrt(c - 1/4) ln L / pi predicts ~11.2 nodes
    assert math.sqrt(4.75) * math.log(10**7) / math.pi == pytest.approx(11.2, abs=0.05)
    assert node_count(InverseSquare(5), 0.0, 10**7) in {10, 11, 12}


# --- adaptive counting ------------------------------------------------------


def test_count_free_operator():
    r = count_bound_states(ZERO, 0.1)
    assert r == CountResult(E=0.1, count=0, L=4096, method="nodes", converged=True)


def test_count_rejects_nonpositive_energy():
    for E in (0.0, -1.0, float("inf")):
        with pytest.raises(ValueError):
            count_bound_states(ZERO, E)


def test_count_subcritical_is_small_and_stable():
    r = count_bound_states(InverseSquare(0.2), 1e-6)
    assert r.converged and r.count == 0
    # dense cross-check at a larger energy on the same window
    for E in (1e-1, 1e-2, 1e-3):
        assert dense_count_oracle(InverseSquare(0.2), -E, 512) == count_bound_states(InverseSquare(0.2), E).count


def test_count_supercritical_c100():
    V = InverseSquare(100)
    r = count_bound_states(V, 1e-8)
    s = count_bound_states(V, 1e-8, CountOptions(method="sturm"))
    assert r.converged and s.converged
    assert r.count == s.count == 35
    # leading term 29.3 plus the O(1) offset visible already at E = 1e-2 in the dense oracle
    lead = lambda E: math.sqrt(99.75) / (2 * math.pi) * -math.log(E)
    offset = dense_count_oracle(V, -1e-2, 512) - lead(1e-2)
    assert abs(r.count - (lead(1e-8) + offset)) <= 2


@pytest.mark.parametrize("V,E", [(InverseSquare(5), 1e-6), (InverseSquare(100), 1e-4), (Sum((InverseSquare(3), PowerDecay(-4, 3))), 1e-5)])
def test_converged_counts_survive_another_doubling(V, E):
    r = count_bound_states(V, E)
    assert r.converged
    for method in ("sturm", "nodes"):
        assert prefix_counts(V, -E, [r.L, 2 * r.L], method) == [r.count, r.count]


def test_count_methods_agree_on_curve_points():
    for E in (1e-2, 1e-4, 1e-6, 1e-8):
        V = Sum((InverseSquare(7), PowerDecay(2, 3)))
        a = count_bound_states(V, E, CountOptions(method="sturm"))
        b = count_bound_states(V, E, CountOptions(method="nodes"))
        assert (a.count, a.L) == (b.count, b.L)


def test_count_hits_L_max():
    r = count_bound_states(InverseSquare(100), 1e-8, CountOptions(L_min=16, L_max=100))
    assert not r.converged
    assert r.L == 100


def test_count_fixed_truncation():
    r = count_bound_states(InverseSquare(100), 1e-2, CountOptions(L=300))
    assert r.L == 300 and not r.converged
    assert r.count == dense_count_oracle(InverseSquare(100), -1e-2, 300)
    d = count_bound_states(InverseSquare(100), 1e-2, CountOptions(L=300, method="dense"))
    assert d.count == r.count and d.method == "dense"
    with pytest.raises(ValueError):
        count_bound_states(ZERO, 1.0, CountOptions(method="dense"))


def test_count_result_json_keys():
    assert set(count_bound_states(ZERO, 1.0).to_dict()) == {"E", "count", "L", "method", "converged"}


def test_count_options_validation():
    for kwargs in ({"method": "qr"}, {"safety": 0.5}, {"L_min": 0}, {"L_min": 10, "L_max": 5}, {"L": 0}):
        with pytest.raises(ValueError):
            CountOptions(**kwargs)


# --- decoupling and reflection ---------------------------------------------


def test_whole_line_free():
    for E in (1e-3, 0.1, 1.0):
        iv = whole_line_count(ZERO, ZERO, E)
        assert iv == IntervalCount(0, 1)
    eig = np.linalg.eigvalsh(whole_line_dense(ZERO, ZERO, 30))
    assert np.count_nonzero(eig <= -1e-3) == 0


def test_whole_line_brackets_dense(rng):
    for _ in range(100):
        L = int(rng.integers(1, 31))
        left = CompactSupport(tuple(rng.uniform(-3, 1, int(rng.integers(1, L + 2)))))
        right = CompactSupport(tuple(rng.uniform(-3, 1, int(rng.integers(1, L + 1)))))
        E = float(10 ** rng.uniform(-3, 0))
        eig = np.linalg.eigvalsh(whole_line_dense(left, right, L))
        true = int(np.count_nonzero(eig <= -E + 1e-12))
        for method in ("sturm", "nodes"):
            iv = whole_line_count(left, right, E, CountOptions(method=method, L=L))
            assert iv.lower <= true <= iv.upper
            assert iv.upper - iv.lower <= 2


def test_whole_line_symmetric_well():
    W = CompactSupport((-3.0,))
    for E in (0.1, 0.5, 1.0, 2.0):
        iv = whole_line_count(W, W, E, CountOptions(L=20))
        eig = np.linalg.eigvalsh(whole_line_dense(W, W, 20))
        assert iv.lower <= np.count_nonzero(eig <= -E) <= iv.upper
    # adaptive version
    iv = whole_line_count(W, W, 0.1)
    assert iv.lower <= np.count_nonzero(np.linalg.eigvalsh(whole_line_dense(W, W, 200)) <= -0.1) <= iv.upper


def test_top_band_free():
    for E in (1e-4, 0.1, 1.0):
        assert top_band_count(ZERO, E).count == 0


def test_top_band_matches_dense(rng):
    for _ in range(100):
        V, _, L = random_instance(rng)
        # push some sites up so the top band has bound states
        V = CompactSupport(tuple(-np.array(V.values)))
        E = float(rng.uniform(1e-3, 2))
        eig = np.linalg.eigvalsh(dense_matrix(V, L))
        expected = int(np.count_nonzero(eig >= 4 + E - 1e-12 * (4 + E)))
        for method in ("sturm", "nodes"):
            assert top_band_count(V, E, CountOptions(method=method, L=L)).count == expected


def test_double_reflection_is_identity():
    V = InverseSquare(100)
    twice = Scaled(-1.0, Scaled(-1.0, V))
    assert top_band_count(Scaled(-1.0, V), 1e-6) == count_bound_states(twice, 1e-6)
    assert count_bound_states(twice, 1e-6) == count_bound_states(V, 1e-6)
