import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from bprt import (
    CellParams,
    DimensionError,
    GrayFrame,
    ModelFormatError,
    ParseError,
    VoltageFrame,
    detect,
    export_netlist,
    load_model,
    load_pgm,
    normalize,
    overlay,
    read_change_map,
    save_model,
    train_detector,
    write_change_map,
    write_pgm,
)

P = CellParams()


def small_model(seed=3, shape=(4, 4)):
    rng = np.random.default_rng(seed)
    v = rng.uniform(0.0, 1.0, size=shape)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return train_detector(VoltageFrame(v=v), 2, P, 1.0), v


class TestLoadPgm:
    def test_ascii_grammar_example(self):
        frame = load_pgm(b"P2 2 2 255 0 255 0 255")
        np.testing.assert_array_equal(frame.pixels, [[0, 255], [0, 255]])

    def test_binary_equivalent(self):
        frame = load_pgm(b"P5 2 2 255\n" + bytes([0, 255, 0, 255]))
        np.testing.assert_array_equal(frame.pixels, [[0, 255], [0, 255]])

    def test_comments_and_odd_whitespace(self):
        data = b"P2 # magic\n# a comment line\n 2\t2 # dims\n255\n0 255\n0 255"
        frame = load_pgm(data)
        np.testing.assert_array_equal(frame.pixels, [[0, 255], [0, 255]])

    def test_truncated_binary_payload(self):
        with pytest.raises(ParseError, match="truncated") as err:
            load_pgm(b"P5 2 2 255\n" + bytes([0, 255, 0]))
        assert err.value.offset is not None

    def test_truncated_ascii_payload(self):
        with pytest.raises(ParseError):
            load_pgm(b"P2 2 2 255 0 255 0")

    def test_maxval_above_255_rejected(self):
        with pytest.raises(ParseError, match="maxval"):
            load_pgm(b"P2 1 1 65535 0")

    def test_bad_magic(self):
        with pytest.raises(ParseError, match="magic"):
            load_pgm(b"P6 1 1 255 \x00")

    def test_missing_header_field(self):
        with pytest.raises(ParseError, match="expected"):
            load_pgm(b"P2 2")

    def test_ascii_value_above_maxval(self):
        with pytest.raises(ParseError, match="exceeds maxval"):
            load_pgm(b"P2 1 1 100 101")

    def test_binary_value_above_small_maxval(self):
        with pytest.raises(ParseError, match="exceeds maxval"):
            load_pgm(b"P5 2 1 100\n" + bytes([50, 120]))

    @given(hnp.arrays(np.uint8, st.tuples(st.integers(1, 7), st.integers(1, 7))))
    def test_round_trip(self, pixels):
        frame = GrayFrame(pixels=pixels)
        again = load_pgm(write_pgm(frame))
        np.testing.assert_array_equal(again.pixels, pixels)

    def test_write_is_canonical(self):
        noisy = b"P2  # padded\n 2 2  255\n0 255 0 255"
        once = write_pgm(load_pgm(noisy))
        twice = write_pgm(load_pgm(once))
        assert once == twice


class TestNormalize:
    def test_full_scale(self):
        frame = GrayFrame(pixels=np.array([[255]], dtype=np.uint8))
        assert normalize(frame, 1.0).v[0, 0] == 1.0

    def test_zero(self):
        frame = GrayFrame(pixels=np.array([[0]], dtype=np.uint8))
        assert normalize(frame, 1.0).v[0, 0] == 0.0

    def test_exact_three_fifths(self):
        frame = GrayFrame(pixels=np.array([[153]], dtype=np.uint8))
        assert normalize(frame, 1.0).v[0, 0] == 0.6

    def test_vref_scales(self):
        frame = GrayFrame(pixels=np.array([[255]], dtype=np.uint8))
        assert normalize(frame, 2.5).v[0, 0] == 2.5


class TestChangeMapIO:
    def test_all_clear_writes_white(self):
        data = write_change_map(np.zeros((2, 3), dtype=bool))
        frame = load_pgm(data)
        assert (frame.pixels == 255).all()

    def test_changed_cells_are_black(self):
        m = np.zeros((2, 2), dtype=bool)
        m[0, 1] = True
        m[1, 0] = True
        pixels = load_pgm(write_change_map(m)).pixels
        assert (pixels == 0).sum() == 2
        assert pixels[0, 1] == 0 and pixels[1, 0] == 0

    def test_read_back(self):
        m = np.array([[True, False], [False, True]])
        np.testing.assert_array_equal(read_change_map(write_change_map(m)), m)


class TestOverlay:
    def test_red_tint_on_changed_blocks_only(self):
        frame = GrayFrame(pixels=np.full((4, 4), 100, dtype=np.uint8))
        m = np.array([[True, False], [False, False]])
        data = overlay(m, frame)
        assert data.startswith(b"P6\n4 4\n255\n")
        rgb = np.frombuffer(data.split(b"255\n", 1)[1], dtype=np.uint8).reshape(4, 4, 3)
        np.testing.assert_array_equal(rgb[0, 0], [(255 + 100) // 2, 50, 50])
        np.testing.assert_array_equal(rgb[1, 1], [(255 + 100) // 2, 50, 50])
        np.testing.assert_array_equal(rgb[0, 2], [100, 100, 100])
        np.testing.assert_array_equal(rgb[3, 3], [100, 100, 100])

    def test_dimension_mismatch(self):
        frame = GrayFrame(pixels=np.zeros((4, 5), dtype=np.uint8))
        with pytest.raises(DimensionError):
            overlay(np.zeros((2, 2), dtype=bool), frame)


class TestModelPersistence:
    def test_save_load_save_is_byte_identical(self):
        model, _ = small_model()
        first = save_model(model)
        second = save_model(load_model(first))
        assert first == second

    def test_round_trip_preserves_detections_exactly(self):
        model, v = small_model(seed=11, shape=(8, 8))
        rng = np.random.default_rng(99)
        reloaded = load_model(save_model(model))
        for _ in range(10):
            test = VoltageFrame(v=rng.uniform(0.0, 1.0, size=(8, 8)))
            np.testing.assert_array_equal(detect(model, test), detect(reloaded, test))

    def test_round_trip_preserves_every_conductance(self):
        model, _ = small_model(seed=7)
        reloaded = load_model(save_model(model))
        np.testing.assert_array_equal(reloaded.module1.weights, model.module1.weights)
        np.testing.assert_array_equal(reloaded.module2.weights, model.module2.weights)
        assert reloaded.module1.x_a == model.module1.x_a
        assert reloaded.v_ref == model.v_ref

    def test_version_mismatch(self):
        import zlib

        model, _ = small_model()
        body = save_model(model).rsplit(b"crc ", 1)[0].replace(b"BPRT1", b"BPRT9", 1)
        data = body + f"crc {zlib.crc32(body) & 0xFFFFFFFF:08x}\n".encode()
        with pytest.raises(ModelFormatError, match="version"):
            load_model(data)

    def test_stale_checksum_detected(self):
        model, _ = small_model()
        data = save_model(model).replace(b"BPRT1", b"BPRT9", 1)
        with pytest.raises(ModelFormatError, match="checksum"):
            load_model(data)

    def test_checksum_mismatch(self):
        model, _ = small_model()
        data = bytearray(save_model(model))
        at = data.index(b"weights") + 20
        data[at] = ord("9") if data[at] != ord("9") else ord("8")
        with pytest.raises(ModelFormatError, match="checksum|version"):
            load_model(bytes(data))

    def test_truncated_weight_grid(self):
        model, _ = small_model()
        text = save_model(model).decode()
        lines = text.splitlines()
        # drop one weights row, then re-checksum so the dimension check fires
        import zlib

        idx = lines.index("weights") + 1
        del lines[idx]
        body = "\n".join(lines[:-1]) + "\n"
        data = body.encode()
        data += f"crc {zlib.crc32(data) & 0xFFFFFFFF:08x}\n".encode()
        with pytest.raises(ModelFormatError):
            load_model(data)

    def test_missing_crc(self):
        with pytest.raises(ModelFormatError, match="crc"):
            load_model(b"BPRT1\ndims 4 4 2\n")


class TestNetlist:
    def test_worked_cell_resistances(self):
        # all-dark 2x2 template: module 1 is a single cell of four w_l
        # resistors (100 kOhm) plus the 50 kOhm constant leg
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model = train_detector(VoltageFrame(v=np.zeros((2, 2))), 2, P, 1.0)
        text = export_netlist(model)
        lines = text.splitlines()
        m1_resistors = [ln for ln in lines if ln.startswith("R_m1_0_")]
        assert len(m1_resistors) == 4
        for ln in m1_resistors:
            ohms = float(ln.split()[-1])
            assert ohms == 1.0 / P.w_l
            assert ohms == pytest.approx(1e5, rel=1e-12)
        leg = next(ln for ln in lines if ln.startswith("R0_m1_0 "))
        assert float(leg.split()[-1]) == pytest.approx(5e4, rel=1e-12)

    def test_high_label_resistances(self):
        # a mixed template puts w_h (10 MOhm) resistors on the bright block
        v = np.zeros((4, 4))
        v[0:2, 2:4] = 0.9
        model = train_detector(VoltageFrame(v=v), 2, P, 1.0)
        lines = export_netlist(model).splitlines()
        bright_cell = [ln for ln in lines if ln.startswith("R_m1_1_")]
        assert len(bright_cell) == 4
        for ln in bright_cell:
            assert float(ln.split()[-1]) == pytest.approx(1e7, rel=1e-12)

    def test_component_counts(self):
        model, _ = small_model()
        lines = export_netlist(model).splitlines()
        resistors = [ln for ln in lines if ln.startswith("R")]
        inverters = [ln for ln in lines if ln.startswith("Xinv")]
        cells = model.module1.cells_w * model.module1.cells_h
        assert len(resistors) == 2 * cells * (4 + 1)
        assert len(inverters) == 2 * cells
        assert ".SUBCKT INV in out" in lines
        assert lines[-1] == ".END"

    def test_names_are_unique(self):
        model, _ = small_model()
        names = [
            ln.split()[0]
            for ln in export_netlist(model).splitlines()
            if ln.startswith(("R", "Xinv"))
        ]
        assert len(names) == len(set(names))

    def test_export_is_deterministic(self):
        model, _ = small_model()
        assert export_netlist(model) == export_netlist(model)

    def test_resistances_are_exact_reciprocals(self):
        model, _ = small_model()
        lines = export_netlist(model).splitlines()
        first = next(ln for ln in lines if ln.startswith("R_m1_0_0"))
        ohms = float(first.split()[-1])
        assert ohms == 1.0 / model.module1.weights[0, 0, 0]

    def test_header_records_parameters(self):
        model, _ = small_model()
        head = export_netlist(model).splitlines()[1]
        assert "block=2" in head and "t_a=" in head and "xa_m1=" in head
