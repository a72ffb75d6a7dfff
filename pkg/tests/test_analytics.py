import math

import numpy as np
import pytest

from sketchrelay import (
    ColumnSketchlet,
    ReconSketch,
    Sketch,
    SketchParams,
    detect_heavy_hitters,
    estimate_cardinality,
    estimate_entropy,
    estimate_fsd,
    evaluate,
    f1_score,
    rae,
    relative_error,
    wmre,
)
from sketchrelay.analytics import top_keys, true_fsd


def synced_pair(params, truth):
    """Switch sketch plus fully delivered reconstruction for given truth."""
    s, r = Sketch(params), ReconSketch(params)
    for key, n in truth.items():
        s.update(key, n)
    for col in range(params.w):
        r.apply(ColumnSketchlet(col, tuple(int(v) for v in s.buckets[:, col])))
    return s, r


class TestRelativeError:
    def test_exact_estimate(self):
        assert relative_error(30, 30) == 0.0

    def test_overestimate_by_half(self):
        assert relative_error(45, 30) == pytest.approx(0.5, abs=1e-9)

    def test_zero_truth_rejected(self):
        with pytest.raises(ValueError):
            relative_error(1, 0)


class TestF1:
    def test_perfect(self):
        assert f1_score({1, 2}, {1, 2}) == 1.0

    def test_disjoint(self):
        assert f1_score({1}, {2}) == 0.0

    def test_empty_detection(self):
        assert f1_score(set(), {1, 2}) == 0.0

    def test_partial(self):
        # precision 1/2, recall 1/3
        assert f1_score({1, 9}, {1, 2, 3}) == pytest.approx(0.4, abs=1e-9)


class TestWmre:
    def test_identical(self):
        assert wmre({1: 5, 2: 3}, {1: 5, 2: 3}) == 0.0

    def test_hand_example(self):
        got = wmre({1: 10, 2: 20}, {1: 12, 2: 18})
        assert got == pytest.approx(4 / 30, abs=1e-9)

    def test_disjoint_sizes(self):
        assert wmre({1: 4}, {2: 4}) == pytest.approx(2.0, abs=1e-9)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            wmre({}, {})


class TestRae:
    def test_equal_sets(self):
        assert rae({1: 10, 2: 20}, {1: 10, 2: 20}) == 0.0

    def test_hand_example(self):
        got = rae({1: 10, 2: 20}, {1: 12, 2: 18})
        assert got == pytest.approx(4 / 30, abs=1e-9)

    def test_not_symmetric(self):
        x, y = {1: 10, 2: 20}, {1: 5, 2: 10}
        assert rae(x, y) == pytest.approx(0.5, abs=1e-9)
        assert rae(y, x) == pytest.approx(1.0, abs=1e-9)

    def test_empty_flow_set_rejected(self):
        with pytest.raises(ValueError):
            rae({}, {})

    def test_zero_reference_mass_rejected(self):
        with pytest.raises(ValueError):
            rae({1: 0}, {1: 5})

    def test_triangle_style_bound(self):
        # RAE(truth, recon) <= RAE(truth, switch) + RAE(switch, recon) * mass ratio
        rng = np.random.default_rng(4)
        keys = list(range(30))
        truth = {k: int(rng.integers(1, 100)) for k in keys}
        sw = {k: truth[k] + int(rng.integers(0, 20)) for k in keys}
        rc = {k: max(0, sw[k] - int(rng.integers(0, 30))) for k in keys}
        lhs = rae(truth, rc)
        scale = sum(sw.values()) / sum(truth.values())
        assert lhs <= rae(truth, sw) + rae(sw, rc) * scale + 1e-12


class TestEntropy:
    def test_uniform_size_one(self):
        assert estimate_entropy({1: 17}) == 0.0

    def test_hand_example(self):
        got = estimate_entropy({1: 1, 2: 1})
        assert got == pytest.approx(-1.5, abs=1e-9)

    def test_scale_invariant(self):
        a = estimate_entropy({1: 3, 4: 2, 9: 5})
        b = estimate_entropy({1: 30, 4: 20, 9: 50})
        assert a == pytest.approx(b, abs=1e-12)

    def test_empty_histogram_rejected(self):
        with pytest.raises(ValueError):
            estimate_entropy({})


class TestCardinality:
    def test_empty_reconstruction(self):
        r = ReconSketch(SketchParams(2, 64, 16, 0))
        assert estimate_cardinality(r) == 0.0

    def test_saturates_when_no_row_slack(self):
        p = SketchParams(1, 16, 16, 0)
        r = ReconSketch(p)
        r.buckets[0, :] = 1
        r.valid[0, :] = True
        assert estimate_cardinality(r) == pytest.approx(16 * math.log(16))

    def test_within_five_percent_at_low_load(self):
        # linear counting at N=100 over w=2^15, full delivery
        p = SketchParams(2, 2 ** 15, 64, 0)
        for seed in range(5):
            rng = np.random.default_rng(seed)
            truth = {int(k): 1 for k in rng.integers(0, 1 << 60, size=100, dtype=np.uint64)}
            _, r = synced_pair(SketchParams(2, 2 ** 15, 64, seed), truth)
            assert estimate_cardinality(r) == pytest.approx(100, rel=0.05)


class TestHeavyHitters:
    def test_top_one_of_ten(self):
        p = SketchParams(2, 1024, 32, 3)
        truth = {k: k for k in range(1, 11)}  # sizes 1..10
        _, r = synced_pair(p, truth)
        assert detect_heavy_hitters(r, sorted(truth)) == {10}

    def test_perfect_reconstruction_gives_unit_f1(self):
        p = SketchParams(2, 2 ** 12, 32, 8)
        rng = np.random.default_rng(1)
        keys = [int(k) for k in rng.integers(0, 1 << 50, size=60, dtype=np.uint64)]
        truth = {k: int(rng.integers(1, 200)) for k in keys}
        _, r = synced_pair(p, truth)
        got = detect_heavy_hitters(r, sorted(truth))
        assert f1_score(got, top_keys(truth)) == 1.0

    def test_ties_break_toward_smaller_key(self):
        p = SketchParams(2, 1024, 32, 5)
        truth = {7: 5, 3: 5, 9: 5, 11: 5, 20: 5}
        _, r = synced_pair(p, truth)
        assert detect_heavy_hitters(r, sorted(truth), fraction=0.2) == {3}

    def test_empty_candidates_rejected(self):
        r = ReconSketch(SketchParams(1, 16, 8, 0))
        with pytest.raises(ValueError):
            detect_heavy_hitters(r, [])


class TestFsd:
    def test_two_flows_of_size_five(self):
        p = SketchParams(2, 2 ** 12, 32, 2)
        truth = {101: 5, 202: 5}
        _, r = synced_pair(p, truth)
        assert estimate_fsd(r, sorted(truth)) == {5: 2}

    def test_undelivered_flows_excluded(self):
        p = SketchParams(2, 64, 32, 2)
        r = ReconSketch(p)  # nothing delivered
        assert estimate_fsd(r, [1, 2, 3]) == {}

    def test_true_fsd(self):
        assert true_fsd({1: 4, 2: 4, 3: 9}) == {4: 2, 9: 1}


class TestEvaluate:
    def test_full_sync_degeneracy(self):
        # when the reconstruction equals the switch sketch, the staleness
        # term vanishes and task accuracies equal the switch's
        p = SketchParams(2, 2 ** 12, 32, 6)
        rng = np.random.default_rng(0)
        keys = [int(k) for k in rng.integers(0, 1 << 50, size=80, dtype=np.uint64)]
        truth = {k: int(rng.integers(1, 50)) for k in keys}
        s, r = synced_pair(p, truth)
        rep = evaluate(s, r, truth)
        assert rep.rae_recon_vs_switch == 0.0
        assert rep.rae_recon_vs_truth == rep.rae_switch_vs_truth
        assert rep.f1_heavy_hitter == 1.0

    def test_relabeled_keys_leave_histogram_metrics_unchanged(self):
        rng = np.random.default_rng(7)
        sizes = [int(rng.integers(1, 40)) for _ in range(50)]
        truth_a = {k: n for k, n in enumerate(sizes)}
        truth_b = {k + 10_000: n for k, n in enumerate(sizes)}
        assert estimate_entropy(true_fsd(truth_a)) == estimate_entropy(true_fsd(truth_b))
        assert wmre(true_fsd(truth_a), true_fsd(truth_b)) == 0.0

    def test_report_fields_nonnegative(self):
        p = SketchParams(2, 2 ** 12, 32, 9)
        rng = np.random.default_rng(3)
        keys = [int(k) for k in rng.integers(0, 1 << 50, size=40, dtype=np.uint64)]
        truth = {k: int(rng.integers(1, 30)) for k in keys}
        s, r = synced_pair(p, truth)
        rep = evaluate(s, r, truth)
        for name in rep.FIELDS:
            assert getattr(rep, name) >= 0.0
        assert 0.0 <= rep.f1_heavy_hitter <= 1.0
