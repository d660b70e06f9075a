import math

import numpy as np
import pytest

from errmap.errors import InputError, RangeError
from errmap.transforms import (
    AttributeTransform,
    SelectionReport,
    TransformSpec,
    boxcox_apply,
    boxcox_invert,
    boxcox_shift,
    dcor,
    fit_attribute,
    fit_boxcox_lambda,
    fit_transforms,
    order_features,
    select_features,
)


def dcor_oracle(x, y):
    """Loop-based double-centering reference, deliberately unvectorized."""
    n = len(x)
    a = [[abs(x[i] - x[j]) for j in range(n)] for i in range(n)]
    b = [[abs(y[i] - y[j]) for j in range(n)] for i in range(n)]

    def center(m):
        row = [sum(r) / n for r in m]
        col = [sum(m[i][j] for i in range(n)) / n for j in range(n)]
        grand = sum(row) / n
        return [[m[i][j] - row[i] - col[j] + grand for j in range(n)] for i in range(n)]

    A, B = center(a), center(b)
    dcov2 = sum(A[i][j] * B[i][j] for i in range(n) for j in range(n)) / n**2
    dvx = sum(v * v for r in A for v in r) / n**2
    dvy = sum(v * v for r in B for v in r) / n**2
    if dvx <= 0 or dvy <= 0:
        return 0.0
    return math.sqrt(max(dcov2, 0.0) / math.sqrt(dvx * dvy))


class TestBoxCox:
    def test_lambda_one_is_shift_by_one(self):
        assert boxcox_apply(5.0, 0.0, 1.0) == pytest.approx(4.0, abs=1e-15)

    def test_lambda_zero_is_log(self):
        assert boxcox_apply(math.e, 0.0, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_round_trip_many(self, rng):
        for _ in range(1000):
            x = float(rng.uniform(0.1, 50.0))
            lam = float(rng.uniform(-3.0, 3.0))
            shift = float(rng.uniform(0.0, 5.0))
            y = boxcox_apply(x, shift, lam)
            assert boxcox_invert(y, shift, lam) == pytest.approx(x, rel=1e-9, abs=1e-9)

    def test_out_of_domain_is_nan(self):
        assert np.isnan(boxcox_apply(-2.0, 0.0, 0.5))
        arr = boxcox_apply(np.array([-1.0, 1.0]), 0.0, 0.0)
        assert np.isnan(arr[0]) and arr[1] == 0.0

    def test_shift_rule(self):
        assert boxcox_shift(np.array([2.0, 3.0, 4.0])) == 0.0
        v = np.array([-1.0, 0.0, 9.0])
        s = boxcox_shift(v)
        assert s == pytest.approx(1.0 + 1e-6 * 10.0)
        assert np.all(v + s > 0.0)

    def test_lognormal_lambda_near_zero(self):
        rng = np.random.default_rng(0)
        v = np.exp(rng.standard_normal(10_000))
        lam = fit_boxcox_lambda(v, 0.0)
        assert -0.1 <= lam <= 0.1

    def test_normal_lambda_near_one(self):
        rng = np.random.default_rng(1)
        v = rng.standard_normal(10_000) + 10.0
        lam = fit_boxcox_lambda(v, 0.0)
        assert 0.7 <= lam <= 1.3

    def test_nonpositive_shifted_rejected(self):
        with pytest.raises(InputError):
            fit_boxcox_lambda(np.array([-1.0, 1.0, 2.0]), 0.0)


class TestAttributeTransform:
    def test_minmax_unit_interval(self):
        t = fit_attribute(np.array([2.0, 4.0, 6.0]))
        assert not t.use_boxcox
        np.testing.assert_allclose(t.apply(np.array([2.0, 4.0, 6.0])), [0.0, 0.5, 1.0])

    def test_no_clamp_outside_training_range(self):
        t = fit_attribute(np.array([2.0, 4.0, 6.0]))
        assert t.apply(8.0) == pytest.approx(1.5)
        assert t.apply(0.0) == pytest.approx(-0.5)

    def test_round_trip(self, rng):
        t = fit_attribute(rng.uniform(0.0, 9.0, size=50))
        x = rng.uniform(-5.0, 15.0, size=200)
        np.testing.assert_allclose(t.invert(np.asarray(t.apply(x))), x, atol=1e-12)

    def test_constant_input_identity_marker(self):
        t = fit_attribute(np.full(30, 7.0))
        assert not t.use_boxcox and t.degenerate
        assert t.apply(7.0) == 0.0
        assert t.invert(0.0) == 7.0

    def test_skew_gates_power_transform(self):
        rng = np.random.default_rng(3)
        skewed = np.exp(rng.standard_normal(500))
        sym = rng.uniform(0.0, 1.0, size=500)
        assert fit_attribute(skewed).use_boxcox
        assert not fit_attribute(sym).use_boxcox

    def test_boxcox_branch_round_trip(self):
        rng = np.random.default_rng(4)
        v = np.exp(rng.standard_normal(300))
        t = fit_attribute(v)
        assert t.use_boxcox
        np.testing.assert_allclose(t.invert(np.asarray(t.apply(v))), v, rtol=1e-9)
        lo = t.apply(float(v.min()))
        hi = t.apply(float(v.max()))
        assert lo == pytest.approx(0.0, abs=1e-12)
        assert hi == pytest.approx(1.0, abs=1e-12)

    def test_validation(self):
        with pytest.raises(InputError):
            fit_attribute(np.array([1.0]))
        with pytest.raises(InputError):
            fit_attribute(np.array([1.0, np.nan, 2.0]))

    def test_dict_round_trip(self):
        t = fit_attribute(np.exp(np.random.default_rng(5).standard_normal(100)))
        back = AttributeTransform.from_dict(t.to_dict())
        assert back == t


class TestTransformSpec:
    def test_columns_follow_names(self, rng):
        X = rng.uniform(0.0, 1.0, size=(40, 2))
        spec = fit_transforms(X, ["a", "b"], rng.uniform(0.0, 1.0, size=40))
        Xt = spec.transform_X(X[:, ::-1], ["b", "a"])
        np.testing.assert_allclose(Xt[:, 1], np.asarray(spec.features["a"].apply(X[:, 0])))

    def test_target_round_trip(self, rng):
        y = np.exp(rng.standard_normal(200))
        spec = fit_transforms(rng.uniform(size=(200, 1)), ["a"], y)
        np.testing.assert_allclose(spec.invert_y(spec.transform_y(y)), y, rtol=1e-9)

    def test_dict_round_trip(self, rng):
        spec = fit_transforms(rng.uniform(size=(30, 2)), ["a", "b"], rng.uniform(size=30))
        assert TransformSpec.from_dict(spec.to_dict()) == spec

    def test_shape_guard(self, rng):
        with pytest.raises(InputError):
            fit_transforms(rng.uniform(size=(30, 2)), ["a"], rng.uniform(size=30))


class TestDcor:
    def test_self_association_is_one(self, rng):
        x = rng.standard_normal(30)
        assert dcor(x, x) == pytest.approx(1.0, abs=1e-12)
        assert dcor(x, 3.0 * x - 7.0) == pytest.approx(1.0, abs=1e-12)

    def test_constant_is_zero(self, rng):
        x = rng.standard_normal(20)
        assert dcor(x, np.full(20, 2.5)) == 0.0
        assert dcor(np.full(20, 1.0), x) == 0.0

    def test_matches_loop_oracle(self, rng):
        for n in (4, 7, 13, 30, 50):
            x = rng.standard_normal(n)
            y = x**2 + 0.3 * rng.standard_normal(n)
            assert dcor(x, y) == pytest.approx(dcor_oracle(list(x), list(y)), abs=1e-10)

    def test_detects_nonmonotone_dependence(self, rng):
        x = rng.uniform(-1.0, 1.0, size=200)
        assert dcor(x, x**2) > 0.4

    def test_symmetry_and_affine_invariance(self, rng):
        x, y = rng.standard_normal(25), rng.standard_normal(25)
        base = dcor(x, y)
        assert dcor(y, x) == pytest.approx(base, abs=1e-12)
        assert dcor(x + 100.0, y) == pytest.approx(base, abs=1e-10)
        assert dcor(2.5 * x, y) == pytest.approx(base, abs=1e-10)

    def test_validation(self, rng):
        with pytest.raises(InputError):
            dcor(rng.standard_normal(5), rng.standard_normal(6))
        with pytest.raises(InputError):
            dcor(np.array([1.0, 2.0, 3.0]), np.array([1.0, 2.0, 3.0]))
        with pytest.raises(InputError):
            dcor(np.array([1.0, np.nan, 2.0, 3.0]), np.array([1.0, 2.0, 3.0, 4.0]))


def planted_dataset(rng, n=120):
    """Target driven by column a1; a2 is its near-copy; the rest are noise."""
    a1 = rng.uniform(0.0, 1.0, size=n)
    a2 = a1 + 1e-6 * rng.standard_normal(n)
    b1 = rng.uniform(0.0, 1.0, size=n)
    b2 = rng.uniform(0.0, 1.0, size=n)
    c1 = rng.uniform(0.0, 1.0, size=n)
    y = a1**2 + 0.05 * rng.standard_normal(n)
    X = np.column_stack([a1, a2, b1, b2, c1])
    names = ["a1", "a2", "b1", "b2", "c1"]
    groups = {"a1": "ga", "a2": "ga", "b1": "gb", "b2": "gb", "c1": "gc"}
    return X, names, groups, y


class TestSelectFeatures:
    def test_near_duplicate_excluded(self, rng):
        X, names, groups, y = planted_dataset(rng)
        rep = select_features(X, names, groups, y)
        assert rep.selected["ga"] == ("a1",)
        assert any(c == "a2" and k == "a1" and r > 0.8 for c, k, r in rep.excluded)

    def test_planted_driver_ranked_first(self, rng):
        X, names, groups, y = planted_dataset(rng)
        rep = select_features(X, names, groups, y)
        assert max(rep.target_dcor, key=rep.target_dcor.get) == "a1"
        assert rep.ordering[0] == "a1"

    def test_independent_features_all_kept_in_dcor_order(self, rng):
        n = 150
        cols = {f"f{i}": rng.uniform(size=n) for i in range(3)}
        X = np.column_stack(list(cols.values()))
        names = list(cols)
        groups = {n_: "g" for n_ in names}
        y = rng.uniform(size=n)
        rep = select_features(X, names, groups, y)
        kept = rep.selected["g"]
        assert set(kept) == set(names)
        scores = [rep.target_dcor[f] for f in kept]
        assert scores == sorted(scores, reverse=True)

    def test_group_cap(self, rng):
        n = 100
        X = rng.uniform(size=(n, 5))
        names = [f"f{i}" for i in range(5)]
        groups = {n_: "g" for n_ in names}
        rep = select_features(X, names, groups, rng.uniform(size=n), max_per_group=2)
        assert len(rep.selected["g"]) == 2

    def test_exact_duplicate_lexicographic_tie(self, rng):
        x = rng.uniform(size=80)
        X = np.column_stack([x, x])
        rep = select_features(X, ["zz", "aa"], {"zz": "g", "aa": "g"}, x + rng.normal(size=80) * 0.1)
        assert rep.selected["g"] == ("aa",)

    def test_subsampling_recorded_and_deterministic(self, rng):
        X, names, groups, y = planted_dataset(rng, n=300)
        r1 = select_features(X, names, groups, y, max_n=100, subsample_seed=5)
        r2 = select_features(X, names, groups, y, max_n=100, subsample_seed=5)
        assert r1.subsample_n == 100
        assert r1.target_dcor == r2.target_dcor
        full = select_features(X, names, groups, y)
        assert full.subsample_n is None

    def test_missing_group_rejected(self, rng):
        X = rng.uniform(size=(50, 2))
        with pytest.raises(InputError):
            select_features(X, ["a", "b"], {"a": "g"}, rng.uniform(size=50))

    def test_report_json_round_trip(self, rng, tmp_path):
        X, names, groups, y = planted_dataset(rng)
        rep = select_features(X, names, groups, y)
        path = tmp_path / "sel.json"
        rep.to_json(path)
        assert SelectionReport.from_json(path) == rep


class TestOrderFeatures:
    def make_report(self, rng):
        n = 200
        data = {}
        groups = {}
        for g, prefix in (("ga", "a"), ("gb", "b"), ("gc", "c")):
            for i in range(3):
                name = f"{prefix}{i}"
                data[name] = rng.uniform(size=n)
                groups[name] = g
        y = data["a0"] + 0.7 * data["b0"] + 0.4 * data["c0"] + 0.1 * rng.standard_normal(n)
        X = np.column_stack(list(data.values()))
        return select_features(X, list(data), groups, y)

    def test_first_pick_is_global_best(self, rng):
        rep = self.make_report(rng)
        selected = [f for fs in rep.selected.values() for f in fs]
        best = max(selected, key=lambda f: rep.target_dcor[f])
        assert order_features(rep, 1) == [best]

    def test_k3_spans_groups(self, rng):
        rep = self.make_report(rng)
        first3 = order_features(rep, 3)
        assert {rep.groups[f] for f in first3} == {"ga", "gb", "gc"}

    def test_full_ordering_descends_within_groups(self, rng):
        rep = self.make_report(rng)
        full = order_features(rep, len(rep.ordering))
        for g in ("ga", "gb", "gc"):
            scores = [rep.target_dcor[f] for f in full if rep.groups[f] == g]
            assert scores == sorted(scores, reverse=True)

    def test_range_guard(self, rng):
        rep = self.make_report(rng)
        with pytest.raises(RangeError):
            order_features(rep, 0)
        with pytest.raises(RangeError):
            order_features(rep, len(rep.ordering) + 1)
