import pytest

from slotmax import ValidationError, enumerate_slots, parse_billboards, parse_trajectories
from slotmax.synth import generate_synthetic


class TestGenerateSynthetic:
    def test_byte_identical_for_fixed_seed(self, tmp_path):
        paths = [(tmp_path / f"b{i}.csv", tmp_path / f"t{i}.csv") for i in (0, 1)]
        for bp, tp in paths:
            generate_synthetic(bp, tp, 12, 30, 3, 240, 10, seed=42, hotspots=4)
        assert paths[0][0].read_bytes() == paths[1][0].read_bytes()
        assert paths[0][1].read_bytes() == paths[1][1].read_bytes()

    def test_different_seed_differs(self, tmp_path):
        generate_synthetic(tmp_path / "a.csv", tmp_path / "at.csv", 12, 30, 3, 240, 10, seed=1)
        generate_synthetic(tmp_path / "b.csv", tmp_path / "bt.csv", 12, 30, 3, 240, 10, seed=2)
        assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "b.csv").read_bytes()

    def test_files_conform_to_corpus_formats(self, tmp_path):
        bp, tp = tmp_path / "b.csv", tmp_path / "t.csv"
        inst = generate_synthetic(bp, tp, 15, 25, 2, 120, 5, seed=9, hotspots=3)
        boards = parse_billboards(bp)
        recs = parse_trajectories(tp)
        assert boards == inst.billboards
        assert recs == inst.trajectories
        assert len(boards) == 15
        assert len(recs) == 25 * 2
        assert all(0 <= r.t_start <= r.t_end <= 120 for r in recs)

    def test_table_scale_slot_count(self, tmp_path):
        bp, tp = tmp_path / "b.csv", tmp_path / "t.csv"
        generate_synthetic(bp, tp, 76, 5, 1, 1440, 5, seed=0)
        slots = enumerate_slots(parse_billboards(bp), 0, 1440, 5)
        assert len(slots) == 21888

    def test_zero_users_produces_empty_trajectories(self, tmp_path):
        bp, tp = tmp_path / "b.csv", tmp_path / "t.csv"
        generate_synthetic(bp, tp, 5, 0, 3, 60, 5, seed=1)
        assert parse_trajectories(tp) == []

    def test_bad_arguments(self, tmp_path):
        bp, tp = tmp_path / "b.csv", tmp_path / "t.csv"
        with pytest.raises(ValidationError):
            generate_synthetic(bp, tp, 0, 10, 3, 60, 5)
        with pytest.raises(ValidationError):
            generate_synthetic(bp, tp, 5, 10, 3, 61, 5)
        with pytest.raises(ValidationError):
            generate_synthetic(bp, tp, 5, 10, 3, 60, 5, geo_box=(1, 1, 1, 1))
        with pytest.raises(ValidationError):
            generate_synthetic(bp, tp, 5, 10, 3, 60, 5, panel_size_range=(0, 10))
