import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from bprt import (
    Blob,
    CellParams,
    DimensionError,
    InvalidInputError,
    UndefinedRateError,
    VoltageFrame,
    detect,
    extract_blobs,
    invert_frame,
    match_blobs,
    merged_output_grid,
    roc_sweep,
    train_detector,
)

P = CellParams()


def checkerboard_template():
    """4x4 template: two dark and two bright blocks, mean exactly 0.5."""
    v = np.zeros((4, 4))
    v[0:2, 0:2] = 0.1
    v[0:2, 2:4] = 0.9
    v[2:4, 0:2] = 0.1
    v[2:4, 2:4] = 0.9
    return v


def two_change_test():
    """Dark block (0,0) turns bright and bright block (0,1) turns dark."""
    v = checkerboard_template()
    v[0:2, 0:2] = 0.9
    v[0:2, 2:4] = 0.1
    return v


class TestInvertFrame:
    def test_all_dark_becomes_all_bright(self):
        out = invert_frame(VoltageFrame(v=np.zeros((2, 2))), 1.0)
        np.testing.assert_array_equal(out.v, np.ones((2, 2)))

    def test_single_value(self):
        out = invert_frame(VoltageFrame(v=np.array([[0.2]])), 1.0)
        assert out.v[0, 0] == pytest.approx(0.8, abs=0)

    @given(hnp.arrays(float, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=st.floats(0.0, 1.0)))
    def test_involution(self, v):
        # double inversion is the identity up to one rounding of v_ref - v
        frame = VoltageFrame(v=v)
        back = invert_frame(invert_frame(frame, 1.0), 1.0)
        np.testing.assert_allclose(back.v, v, rtol=0, atol=2**-52)

    def test_involution_exact_on_dyadic_values(self):
        v = np.array([[0.0, 0.25], [0.5, 1.0]])
        back = invert_frame(invert_frame(VoltageFrame(v=v), 1.0), 1.0)
        np.testing.assert_array_equal(back.v, v)

    def test_rejects_value_above_vref(self):
        with pytest.raises(InvalidInputError):
            invert_frame(VoltageFrame(v=np.array([[1.5]])), 1.0)


class TestTrainDetector:
    def test_self_inverse_template(self):
        model = train_detector(VoltageFrame(v=np.full((4, 4), 0.5)), 2, P, 1.0)
        assert model.module2.x_a == pytest.approx(0.5, abs=0)

    def test_two_modules_of_matching_shape(self):
        model = train_detector(VoltageFrame(v=checkerboard_template()), 2, P, 1.0)
        assert model.module1.weights.shape == (2, 2, 4)
        assert model.module2.weights.shape == (2, 2, 4)

    def test_module2_mean_is_complement(self):
        v = np.full((4, 4), 0.3)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model = train_detector(VoltageFrame(v=v), 2, P, 1.0)
        assert model.module1.x_a == pytest.approx(0.3, abs=1e-15)
        assert model.module2.x_a == pytest.approx(0.7, abs=1e-15)


class TestDetect:
    def test_template_produces_no_changes(self):
        v = checkerboard_template()
        model = train_detector(VoltageFrame(v=v), 2, P, 1.0)
        assert np.array_equal(model.module1.baselines, np.ones((2, 2), dtype=np.uint8))
        assert np.array_equal(model.module2.baselines, np.ones((2, 2), dtype=np.uint8))
        change = detect(model, VoltageFrame(v=v))
        assert not change.any()

    def test_both_polarities_flagged(self):
        model = train_detector(VoltageFrame(v=checkerboard_template()), 2, P, 1.0)
        change = detect(model, VoltageFrame(v=two_change_test()))
        np.testing.assert_array_equal(change, [[True, True], [False, False]])

    def test_each_module_is_blind_to_one_polarity(self):
        from bprt import evaluate_network

        model = train_detector(VoltageFrame(v=checkerboard_template()), 2, P, 1.0)
        test = VoltageFrame(v=two_change_test())
        grid1 = evaluate_network(model.module1, test)
        grid2 = evaluate_network(model.module2, invert_frame(test, 1.0))
        # module 1 sees only the dark-to-bright block, module 2 only the other
        np.testing.assert_array_equal(grid1, [[0, 1], [1, 1]])
        np.testing.assert_array_equal(grid2, [[1, 0], [1, 1]])

    def test_merged_grid_is_complement_of_change_map(self):
        model = train_detector(VoltageFrame(v=checkerboard_template()), 2, P, 1.0)
        test = VoltageFrame(v=two_change_test())
        merged = merged_output_grid(model, test)
        np.testing.assert_array_equal(merged == 0, detect(model, test))

    def test_change_map_dimensions(self):
        rng = np.random.default_rng(2)
        v = rng.uniform(0.0, 1.0, size=(288, 352))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model = train_detector(VoltageFrame(v=v), 2, P, 1.0)
        change = detect(model, VoltageFrame(v=v))
        assert change.shape == (144, 176)

    def test_dimension_mismatch_rejected(self):
        model = train_detector(VoltageFrame(v=checkerboard_template()), 2, P, 1.0)
        with pytest.raises(DimensionError):
            detect(model, VoltageFrame(v=np.zeros((8, 8))))

    @given(hnp.arrays(float, st.tuples(st.just(4), st.just(4)), elements=st.floats(0.0, 1.0)))
    @settings(max_examples=30, deadline=None)
    def test_polarity_symmetry(self, test_pixels):
        template = VoltageFrame(v=checkerboard_template())
        test = VoltageFrame(v=test_pixels)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            direct = train_detector(template, 2, P, 1.0)
            mirrored = train_detector(invert_frame(template, 1.0), 2, P, 1.0)
        a = detect(direct, test)
        b = detect(mirrored, invert_frame(test, 1.0))
        np.testing.assert_array_equal(a, b)


class TestBlobs:
    def test_empty_map(self):
        assert extract_blobs(np.zeros((3, 3), dtype=bool)) == []

    def test_single_cell(self):
        m = np.zeros((3, 3), dtype=bool)
        m[1, 2] = True
        blobs = extract_blobs(m)
        assert len(blobs) == 1
        assert blobs[0].cells == [(1, 2)]
        assert blobs[0].bbox == (1, 2, 1, 2)
        assert blobs[0].size == 1

    def test_diagonal_cells_are_separate(self):
        m = np.zeros((3, 3), dtype=bool)
        m[0, 0] = True
        m[1, 1] = True
        blobs = extract_blobs(m)
        assert len(blobs) == 2

    def test_scan_order(self):
        m = np.zeros((3, 3), dtype=bool)
        m[2, 0] = True
        m[0, 2] = True
        blobs = extract_blobs(m)
        assert blobs[0].cells == [(0, 2)]
        assert blobs[1].cells == [(2, 0)]

    def test_l_shaped_component(self):
        m = np.zeros((3, 3), dtype=bool)
        m[0, 0] = m[1, 0] = m[1, 1] = True
        blobs = extract_blobs(m)
        assert len(blobs) == 1
        assert blobs[0].cells == [(0, 0), (1, 0), (1, 1)]
        assert blobs[0].bbox == (0, 0, 1, 1)

    @given(hnp.arrays(bool, st.tuples(st.integers(1, 8), st.integers(1, 8))))
    @settings(max_examples=60)
    def test_blobs_partition_true_cells(self, m):
        blobs = extract_blobs(m)
        seen = [c for blob in blobs for c in blob.cells]
        assert len(seen) == len(set(seen)) == int(m.sum())
        assert set(seen) == {(r, c) for r, c in zip(*np.nonzero(m))}


class TestMatchBlobs:
    def test_exact_match(self):
        a = Blob(cells=[(0, 0), (0, 1)], bbox=(0, 0, 0, 1))
        detected, missed, spurious = match_blobs([a], [a])
        assert (detected, missed, spurious) == (1, 0, 0)

    def test_low_overlap_does_not_match(self):
        pred = Blob(cells=[(0, 0)], bbox=(0, 0, 0, 0))
        truth = Blob(cells=[(0, 0), (0, 1), (0, 2)], bbox=(0, 0, 0, 2))
        detected, missed, spurious = match_blobs([pred], [truth], iou_threshold=0.5)
        assert (detected, missed, spurious) == (0, 1, 1)

    def test_each_prediction_matches_once(self):
        pred = Blob(cells=[(0, 0)], bbox=(0, 0, 0, 0))
        truth = Blob(cells=[(0, 0)], bbox=(0, 0, 0, 0))
        detected, missed, spurious = match_blobs([pred], [truth, truth])
        assert (detected, missed, spurious) == (1, 1, 0)


class TestRocSweep:
    @staticmethod
    def _instance(seed=9):
        rng = np.random.default_rng(seed)
        template = VoltageFrame(v=checkerboard_template())
        test = VoltageFrame(v=two_change_test())
        truth = np.array([[True, True], [False, False]])
        return template, [(test, truth)]

    def test_degenerate_zero_threshold_flags_everything(self):
        template, tests = self._instance()
        (pt,) = roc_sweep(template, tests, [0.0], 2, P, 1.0)
        assert (pt.fpr, pt.tpr) == (1.0, 1.0)

    def test_unreachable_threshold_flags_nothing(self):
        template, tests = self._instance()
        (pt,) = roc_sweep(template, tests, [10.0], 2, P, 1.0)
        assert (pt.fpr, pt.tpr) == (0.0, 0.0)

    def test_monotone_in_threshold(self):
        rng = np.random.default_rng(13)
        template = VoltageFrame(v=rng.uniform(0.0, 1.0, size=(8, 8)))
        test = VoltageFrame(v=rng.uniform(0.0, 1.0, size=(8, 8)))
        truth = rng.uniform(size=(4, 4)) < 0.5
        grid = [0.0, 0.1, 0.25, 0.4, 0.5, 0.6, 0.8, 10.0]
        points = roc_sweep(template, [(test, truth)], grid, 2, P, 1.0)
        fprs = [pt.fpr for pt in points]
        tprs = [pt.tpr for pt in points]
        assert fprs == sorted(fprs, reverse=True)
        assert tprs == sorted(tprs, reverse=True)
        assert points[0].t_a == 0.0

    def test_changed_cell_count_nonincreasing(self):
        rng = np.random.default_rng(21)
        template = VoltageFrame(v=rng.uniform(0.0, 1.0, size=(8, 8)))
        test = VoltageFrame(v=rng.uniform(0.0, 1.0, size=(8, 8)))
        counts = []
        for t_a in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                model = train_detector(template, 2, CellParams(t_a=t_a), 1.0)
            counts.append(int(detect(model, test).sum()))
        assert counts == sorted(counts, reverse=True)

    def test_blob_mode_tpr(self):
        template, tests = self._instance()
        (pt,) = roc_sweep(template, tests, [0.5], 2, P, 1.0, blob_mode=True)
        assert pt.tpr == 1.0

    def test_empty_grid_rejected(self):
        template, tests = self._instance()
        with pytest.raises(InvalidInputError):
            roc_sweep(template, tests, [], 2, P, 1.0)

    def test_truth_shape_mismatch_rejected(self):
        template, tests = self._instance()
        bad = [(tests[0][0], np.zeros((3, 3), dtype=bool))]
        with pytest.raises(DimensionError):
            roc_sweep(template, bad, [0.5], 2, P, 1.0)

    def test_single_class_truth_rejected(self):
        template = VoltageFrame(v=checkerboard_template())
        test = VoltageFrame(v=two_change_test())
        all_true = np.ones((2, 2), dtype=bool)
        with pytest.raises(UndefinedRateError):
            roc_sweep(template, [(test, all_true)], [0.5], 2, P, 1.0)
