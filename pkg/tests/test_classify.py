import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hsiband import (ClassifierConfig, GroundTruth, HyperCube, PixelDataset, SplitSpec,
                     build_estimated_map, load_model, pixel_dataset, predict, save_model,
                     split, train)
from hsiband.infotheory import conditional_entropy, joint_histogram


def _dataset(x, y):
    x = np.asarray(x, dtype=float).reshape(len(y), -1)
    y = np.asarray(y)
    return PixelDataset(x, y, np.arange(len(y)), tuple(range(1, x.shape[1] + 1)))


class TestSplit:
    def test_exact_halving(self):
        gt = GroundTruth(np.array([[1] * 10, [1] * 10]))
        s = split(gt, SplitSpec(0.5, seed=3))
        assert s.train.size == 10 and s.test.size == 10

    def test_singleton_class_goes_to_train(self):
        gt = GroundTruth(np.array([[1, 1, 1, 2]]))
        with pytest.warns(UserWarning, match="class 2"):
            s = split(gt, SplitSpec(seed=0))
        assert 3 in s.train.tolist() and 3 not in s.test.tolist()
        assert any("class 2" in n for n in s.notes)

    def test_deterministic(self, small):
        _, gt = small
        a, b = split(gt, SplitSpec(seed=9)), split(gt, SplitSpec(seed=9))
        assert a.train.tolist() == b.train.tolist() and a.test.tolist() == b.test.tolist()
        assert split(gt, SplitSpec(seed=10)).train.tolist() != a.train.tolist()

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.integers(0, 4), min_size=4, max_size=60), st.floats(0.1, 0.9), st.integers(0, 99))
    def test_partition_and_quota(self, labels, fraction, seed):
        lab = np.array(labels)
        if np.bincount(lab[lab > 0], minlength=1).max(initial=0) < 2:
            return
        gt = GroundTruth(lab[None, :])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            s = split(gt, SplitSpec(fraction, seed))
        tr, te = set(s.train.tolist()), set(s.test.tolist())
        assert not tr & te
        assert tr | te == set(np.flatnonzero(lab).tolist())
        for c in range(1, lab.max() + 1):
            n = int(np.sum(lab == c))
            k = int(np.sum(lab[s.train] == c))
            if n >= 2:
                assert abs(k - n * fraction) <= 1 and 1 <= k <= n - 1

    def test_unstratified(self, small):
        _, gt = small
        s = split(gt, SplitSpec(0.3, seed=1, stratified=False))
        assert s.train.size + s.test.size == gt.n_labeled

    def test_bad_fraction(self):
        with pytest.raises(ValueError):
            SplitSpec(1.0)


class TestLinear:
    def test_separable_one_band(self):
        data = _dataset([1, 2, 3, 10, 11, 12], [1, 1, 1, 2, 2, 2])
        model = train(data)
        assert (predict(model, data.features) == data.labels).all()

    def test_single_class(self):
        with pytest.raises(ValueError, match="single class"):
            train(_dataset([1, 2, 3], [4, 4, 4]))

    def test_zero_variance_band(self):
        data = _dataset(np.c_[[1, 2, 10, 11], [5, 5, 5, 5]], [1, 1, 2, 2])
        model = train(data)
        assert model.scale[1] == 1.0
        assert (model.predict(data.features) == data.labels).all()

    def test_wrong_dimension(self):
        model = train(_dataset([1, 2, 10, 11], [1, 1, 2, 2]))
        with pytest.raises(ValueError, match="features"):
            model.predict(np.zeros((3, 2)))

    def test_ties_go_to_lowest_class(self):
        # a symmetric problem scores the midpoint equally for both classes
        model = train(_dataset([-1, -1, 1, 1], [3, 3, 5, 5]), ClassifierConfig(regularization=0))
        assert model.predict([[0.0]]).tolist() == [3]

    def test_shift_invariance(self, small):
        cube, gt = small
        s = split(gt)
        data = pixel_dataset(cube, gt, [1, 2, 4], s.train)
        shifted = PixelDataset(data.features + np.array([0, 500.0, 0]), data.labels, data.index, data.bands)
        test = pixel_dataset(cube, gt, [1, 2, 4], s.test)
        a = train(data).predict(test.features)
        b = train(shifted).predict(test.features + np.array([0, 500.0, 0]))
        np.testing.assert_array_equal(a, b)

    def test_planted_band_accuracy(self, planted):
        cube, gt = planted
        s = split(gt)
        model = train(pixel_dataset(cube, gt, [1, 2, 3], s.train))
        test = pixel_dataset(cube, gt, [1, 2, 3], s.test)
        assert np.mean(model.predict(test.features) == test.labels) >= 0.95

    def test_predict_contract(self, small):
        cube, gt = small
        s = split(gt)
        model = train(pixel_dataset(cube, gt, [1], s.train))
        out = model.predict(pixel_dataset(cube, gt, [1], s.test).features)
        assert out.size == s.test.size and set(out.tolist()) <= set(model.classes.tolist())


class TestNearestNeighbor:
    def test_centroid_maps_to_its_class(self):
        x = np.array([[0, 0], [0, 1], [1, 0], [10, 10], [10, 11], [11, 10]], dtype=float)
        y = np.array([1, 1, 1, 2, 2, 2])
        model = train(_dataset(x, y), ClassifierConfig("knn"))
        assert model.predict(x[:3].mean(axis=0)).tolist() == [1]
        assert model.predict(x[3:].mean(axis=0)).tolist() == [2]
        np.testing.assert_array_equal(model.predict(x), y)

    def test_linear_baseline_centroid(self):
        x = np.array([[0.0], [1.0], [10.0], [11.0]])
        model = train(_dataset(x, [1, 1, 2, 2]))
        assert model.predict([[0.5]]).tolist() == [1] and model.predict([[10.5]]).tolist() == [2]

    def test_chunking_matches(self, small):
        cube, gt = small
        s = split(gt)
        model = train(pixel_dataset(cube, gt, [1, 4], s.train), ClassifierConfig("knn"))
        f = pixel_dataset(cube, gt, [1, 4], s.test).features
        np.testing.assert_array_equal(model.predict(f, chunk=7), model.predict(f))


class TestEstimatedMap:
    def test_perfect_feature(self):
        labels = np.array([[1, 2, 3, 0], [3, 2, 1, 1], [0, 2, 3, 2]])
        cube = HyperCube(np.stack([labels * 1000 + 900, np.ones_like(labels)], axis=2))
        gt = GroundTruth(labels)
        s = split(gt)
        model = train(pixel_dataset(cube, gt, [1], s.train), ClassifierConfig("knn"))
        np.testing.assert_array_equal(build_estimated_map(cube, gt, [1], model), labels)

    def test_empty_bands(self, small):
        cube, gt = small
        with pytest.raises(ValueError, match="empty"):
            build_estimated_map(cube, gt, [], None)

    def test_band_mismatch(self, small):
        cube, gt = small
        model = train(pixel_dataset(cube, gt, [1], split(gt).train))
        with pytest.raises(ValueError, match="trained on"):
            build_estimated_map(cube, gt, [2], model)

    def test_informative_band_lowers_conditional_entropy(self, planted):
        cube, gt = planted
        s = split(gt)
        truth = gt.labels.ravel()[s.test]

        def h(bands):
            model = train(pixel_dataset(cube, gt, bands, s.train))
            est = build_estimated_map(cube, gt, bands, model).ravel()[s.test]
            return conditional_entropy(joint_histogram(truth, est, 5, 5))

        assert h([7, 8, 1]) <= h([7, 8]) + 1e-9


@pytest.mark.parametrize("kind", ["linear", "knn"])
def test_model_round_trip(tmp_path, small, kind):
    cube, gt = small
    s = split(gt)
    model = train(pixel_dataset(cube, gt, [1, 2], s.train), ClassifierConfig(kind))
    save_model(model, tmp_path / "m.npz")
    back = load_model(tmp_path / "m.npz")
    f = pixel_dataset(cube, gt, [1, 2], s.test).features
    assert back.bands == (1, 2)
    np.testing.assert_array_equal(back.predict(f), model.predict(f))
