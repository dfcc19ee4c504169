import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lanecue.dataio import (
    LabelStore,
    LibsvmParseError,
    SparseSample,
    densify,
    format_libsvm_line,
    frame_id_for,
    list_frames,
    read_frame,
    read_libsvm,
    sparsify,
    write_frame,
    write_libsvm,
)
from lanecue.features import BehaviorLabel, FeatureKind
from lanecue.imaging import RgbImage

PAPER_LINES = "-1 1:1 11:1 18:1 20:1 37:1 42:1 59:1 \n+1 5:1 18:1 19:1 39:1 40:1 63:1 \n"


class TestSparseSample:
    def test_rejects_bad_entries(self):
        with pytest.raises(ValueError):
            SparseSample(1, ((0, 1.0),))
        with pytest.raises(ValueError):
            SparseSample(1, ((3, 1.0), (3, 2.0)))
        with pytest.raises(ValueError):
            SparseSample(1, ((1, 1.0), (2, 0.0)))


class TestLibsvmFormat:
    def test_writes_first_example_line(self):
        sample = SparseSample(-1, tuple((i, 1.0) for i in (1, 11, 18, 20, 37, 42, 59)))
        assert format_libsvm_line(sample) + "\n" == PAPER_LINES.splitlines(True)[0]

    def test_example_lines_parse(self):
        samples = read_libsvm(io.StringIO(PAPER_LINES))
        assert len(samples) == 2
        assert len(samples[0].entries) == 7
        assert len(samples[1].entries) == 6
        assert samples[0].label == -1
        assert samples[1].label == 1

    def test_example_lines_reserialize_byte_identical(self):
        samples = read_libsvm(io.StringIO(PAPER_LINES))
        out = io.StringIO()
        write_libsvm(samples, out)
        assert out.getvalue() == PAPER_LINES

    def test_empty_sample_list(self, tmp_path):
        path = tmp_path / "empty.libsvm"
        write_libsvm([], path)
        assert path.read_bytes() == b""
        assert read_libsvm(path) == []

    def test_non_increasing_index_rejected(self):
        with pytest.raises(LibsvmParseError, match="non-increasing index at line 1"):
            read_libsvm(io.StringIO("1 3:1 1:1\n"))

    def test_index_zero_rejected(self):
        with pytest.raises(LibsvmParseError, match="index 0 at line 2"):
            read_libsvm(io.StringIO("1 1:1\n-1 0:5\n"))

    def test_malformed_pair_has_position(self):
        with pytest.raises(LibsvmParseError, match="line 1, col 4"):
            read_libsvm(io.StringIO("+1 abc\n"))

    def test_bad_label(self):
        with pytest.raises(LibsvmParseError, match="bad label"):
            read_libsvm(io.StringIO("x 1:1\n"))

    def test_write_read_write_fixpoint_random(self, tmp_path):
        rng = np.random.default_rng(123)
        samples = []
        for _ in range(1000):
            n = int(rng.integers(0, 12))
            idx = np.sort(rng.choice(np.arange(1, 200), size=n, replace=False))
            vals = rng.normal(size=n) * 10.0 ** rng.integers(-8, 8)
            entries = tuple(
                (int(i), float(v)) for i, v in zip(idx, vals) if v != 0.0
            )
            samples.append(SparseSample(int(rng.integers(-3, 4)), entries))
        p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
        write_libsvm(samples, p1)
        first = read_libsvm(p1)
        write_libsvm(first, p2)
        assert p1.read_bytes() == p2.read_bytes()
        again = read_libsvm(p2)
        assert again == first == samples

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(
            st.tuples(
                st.integers(min_value=-5, max_value=5),
                st.lists(
                    st.tuples(
                        st.integers(min_value=1, max_value=40),
                        st.floats(
                            allow_nan=False,
                            allow_infinity=False,
                            min_value=-1e9,
                            max_value=1e9,
                        ).filter(lambda v: v != 0.0),
                    ),
                    max_size=8,
                    unique_by=lambda e: e[0],
                ),
            ),
            max_size=6,
        )
    )
    def test_roundtrip_lossless_property(self, rows):
        samples = [
            SparseSample(label, tuple(sorted(entries))) for label, entries in rows
        ]
        out = io.StringIO()
        write_libsvm(samples, out)
        assert read_libsvm(io.StringIO(out.getvalue())) == samples


class TestDensify:
    def test_single_placement(self):
        fv = densify(SparseSample(2, ((2, 5.0),)), 4)
        assert list(fv.values) == [0.0, 5.0, 0.0, 0.0]
        assert fv.label is BehaviorLabel.CHANGE_RIGHT

    def test_empty_entries(self):
        fv = densify(SparseSample(0, ()), 3)
        assert list(fv.values) == [0.0, 0.0, 0.0]
        assert fv.label is BehaviorLabel.KEEP

    def test_index_exceeds_dim(self):
        with pytest.raises(ValueError):
            densify(SparseSample(1, ((5, 1.0),)), 4)

    def test_unmapped_label_code(self):
        fv = densify(SparseSample(-1, ((1, 1.0),)), 2)
        assert fv.label is None

    def test_densify_sparsify_identity(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            dense = rng.normal(size=20)
            dense[rng.random(20) < 0.5] = 0.0
            sample = sparsify(dense, 3)
            back = densify(sample, 20, FeatureKind.HOG)
            assert np.array_equal(back.values, dense)
            assert back.label is BehaviorLabel.UNKNOWN


class TestLabelStore:
    def test_append_and_snapshot(self, tmp_path):
        store = LabelStore(tmp_path / "labels.txt")
        store.assign("frame_000001", BehaviorLabel.KEEP, 1.0)
        store.assign("frame_000002", BehaviorLabel.CHANGE_LEFT, 2.0)
        snap = store.snapshot()
        assert snap["frame_000001"] == (BehaviorLabel.KEEP, 1.0)
        assert snap["frame_000002"] == (BehaviorLabel.CHANGE_LEFT, 2.0)

    def test_last_write_wins(self, tmp_path):
        store = LabelStore(tmp_path / "labels.txt")
        store.assign("f1", BehaviorLabel.KEEP, 1.0)
        store.assign("f1", BehaviorLabel.UNKNOWN, 2.0)
        store.assign("f1", BehaviorLabel.CHANGE_RIGHT, 3.0)
        assert store.labels() == {"f1": BehaviorLabel.CHANGE_RIGHT}
        # the file keeps the full history
        lines = (tmp_path / "labels.txt").read_text().splitlines()
        assert len(lines) == 3

    def test_missing_file_is_empty(self, tmp_path):
        assert LabelStore(tmp_path / "nope.txt").snapshot() == {}

    def test_invalid_frame_id(self, tmp_path):
        store = LabelStore(tmp_path / "labels.txt")
        with pytest.raises(ValueError):
            store.assign("a,b", BehaviorLabel.KEEP, 0.0)

    def test_replay_order_independent_of_intermediate(self, tmp_path):
        s1 = LabelStore(tmp_path / "a.txt")
        s2 = LabelStore(tmp_path / "b.txt")
        s1.assign("f1", BehaviorLabel.KEEP, 0.0)
        s1.assign("f2", BehaviorLabel.UNKNOWN, 0.0)
        s1.assign("f1", BehaviorLabel.CHANGE_LEFT, 1.0)
        s2.assign("f1", BehaviorLabel.UNKNOWN, 0.0)
        s2.assign("f2", BehaviorLabel.UNKNOWN, 0.0)
        s2.assign("f1", BehaviorLabel.CHANGE_LEFT, 1.0)
        assert s1.labels() == s2.labels()


class TestFrames:
    def test_frame_naming(self):
        assert frame_id_for(7) == "frame_000007"

    def test_png_roundtrip(self, tmp_path):
        rng = np.random.default_rng(9)
        img = RgbImage(rng.integers(0, 256, size=(24, 32, 3), dtype=np.uint8))
        path = tmp_path / "frame_000001.png"
        write_frame(img, path)
        back = read_frame(path)
        assert np.array_equal(back.pixels, img.pixels)

    def test_png_write_deterministic(self, tmp_path):
        rng = np.random.default_rng(10)
        img = RgbImage(rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8))
        p1, p2 = tmp_path / "a.png", tmp_path / "b.png"
        write_frame(img, p1)
        write_frame(img, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_list_frames_sorted(self, tmp_path):
        img = RgbImage(np.zeros((4, 4, 3), dtype=np.uint8))
        for i in (3, 1, 2):
            write_frame(img, tmp_path / f"frame_{i:06d}.png")
        (tmp_path / "notes.txt").write_text("ignore me")
        assert list_frames(tmp_path) == ["frame_000001", "frame_000002", "frame_000003"]

    def test_missing_dir(self, tmp_path):
        with pytest.raises(NotADirectoryError):
            list_frames(tmp_path / "missing")
