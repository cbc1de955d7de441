import math

import numpy as np
import pytest

from slotmax import (
    Billboard,
    ParseError,
    TrajectoryRecord,
    ValidationError,
    build_exposure_model,
    enumerate_slots,
    haversine_m,
    parse_billboards,
    parse_trajectories,
    write_billboards,
    write_trajectories,
)
from slotmax.corpus import PROB_CAP, exposure_predicate

# closed-form: one degree of arc along the equator
ONE_DEGREE_M = 6_371_000 * math.pi / 180  # = 111194.92664455873


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestParseBillboards:
    def test_single_row(self, tmp_path):
        p = _write(tmp_path / "b.csv",
                   "billboard_id,lat,lon,panel_size,cost\nb139,40.7128,-74.0060,600,25\n")
        boards = parse_billboards(p)
        assert boards == [Billboard("b139", 40.7128, -74.0060, 600.0, 25.0)]

    def test_empty_data_section(self, tmp_path):
        p = _write(tmp_path / "b.csv", "billboard_id,lat,lon,panel_size,cost\n")
        assert parse_billboards(p) == []

    def test_zero_panel_size_rejected(self, tmp_path):
        p = _write(tmp_path / "b.csv",
                   "billboard_id,lat,lon,panel_size,cost\nb1,0,0,0,25\n")
        with pytest.raises(ValidationError):
            parse_billboards(p)

    def test_wrong_column_count_names_line(self, tmp_path):
        p = _write(tmp_path / "b.csv",
                   "billboard_id,lat,lon,panel_size,cost\nb1,0,0,5,1\nb2,0,0,5\n")
        with pytest.raises(ParseError, match="line 3"):
            parse_billboards(p)

    def test_non_numeric_field_names_line(self, tmp_path):
        p = _write(tmp_path / "b.csv",
                   "billboard_id,lat,lon,panel_size,cost\nb1,abc,0,5,1\n")
        with pytest.raises(ParseError, match="line 2"):
            parse_billboards(p)

    def test_duplicate_id_rejected(self, tmp_path):
        p = _write(tmp_path / "b.csv",
                   "billboard_id,lat,lon,panel_size,cost\nb1,0,0,5,1\nb1,1,1,5,1\n")
        with pytest.raises(ValidationError, match="duplicate"):
            parse_billboards(p)

    def test_header_must_match_exactly(self, tmp_path):
        p = _write(tmp_path / "b.csv", "id,lat,lon,size,cost\n")
        with pytest.raises(ParseError, match="header"):
            parse_billboards(p)

    def test_coordinate_bounds(self, tmp_path):
        p = _write(tmp_path / "b.csv",
                   "billboard_id,lat,lon,panel_size,cost\nb1,91,0,5,1\n")
        with pytest.raises(ParseError):
            parse_billboards(p)


class TestParseTrajectories:
    def test_single_row(self, tmp_path):
        p = _write(tmp_path / "t.csv",
                   "user_id,lat,lon,t_start,t_end\nu225,40.6413,-73.7781,1400,1600\n")
        recs = parse_trajectories(p)
        assert recs == [TrajectoryRecord("u225", 40.6413, -73.7781, 1400, 1600)]

    def test_same_user_twice_is_two_records(self, tmp_path):
        p = _write(tmp_path / "t.csv",
                   "user_id,lat,lon,t_start,t_end\nu1,0,0,0,10\nu1,1,1,20,30\n")
        recs = parse_trajectories(p)
        assert len(recs) == 2
        assert {r.user_id for r in recs} == {"u1"}

    def test_reversed_interval_rejected_with_line(self, tmp_path):
        p = _write(tmp_path / "t.csv",
                   "user_id,lat,lon,t_start,t_end\nu1,0,0,10,5\n")
        with pytest.raises(ParseError, match="t_start exceeds t_end"):
            parse_trajectories(p)
        with pytest.raises(ParseError, match="line 2"):
            parse_trajectories(p)

    def test_header_checked(self, tmp_path):
        p = _write(tmp_path / "t.csv", "user,lat,lon,start,end\n")
        with pytest.raises(ParseError, match="header"):
            parse_trajectories(p)


class TestRoundTrip:
    def test_parse_write_parse_identity(self, tmp_path):
        rng = np.random.default_rng(7)
        boards = [
            Billboard(f"b{i}", float(rng.uniform(-90, 90)), float(rng.uniform(-180, 180)),
                      float(rng.uniform(1, 900)), float(rng.uniform(0, 50)))
            for i in range(20)
        ]
        recs = [
            TrajectoryRecord(f"u{int(rng.integers(0, 5))}", float(rng.uniform(-90, 90)),
                             float(rng.uniform(-180, 180)), int(rng.integers(0, 100)),
                             int(rng.integers(100, 200)))
            for _ in range(30)
        ]
        bp, tp = tmp_path / "b.csv", tmp_path / "t.csv"
        write_billboards(bp, boards)
        write_trajectories(tp, recs)
        assert parse_billboards(bp) == boards
        assert parse_trajectories(tp) == recs
        # a second round trip reproduces the bytes
        bp2, tp2 = tmp_path / "b2.csv", tmp_path / "t2.csv"
        write_billboards(bp2, parse_billboards(bp))
        write_trajectories(tp2, parse_trajectories(tp))
        assert bp.read_bytes() == bp2.read_bytes()
        assert tp.read_bytes() == tp2.read_bytes()


def _boards(n):
    return [Billboard(f"b{i}", 0.0, 0.0, 100.0, 1.0) for i in range(n)]


class TestEnumerateSlots:
    def test_table_scale_count(self):
        slots = enumerate_slots(_boards(76), 0, 1440, 5)
        assert len(slots) == 21888

    def test_single_window(self):
        slots = enumerate_slots(_boards(1), 0, 60, 60)
        assert len(slots) == 1
        assert (slots[0].window_start, slots[0].window_end) == (0, 60)

    def test_two_boards_day_hourly(self):
        assert len(enumerate_slots(_boards(2), 0, 1440, 60)) == 48

    def test_non_divisible_horizon_rejected(self):
        with pytest.raises(ValidationError):
            enumerate_slots(_boards(1), 0, 100, 33)

    def test_dense_indices_and_ordering(self):
        slots = enumerate_slots(_boards(3), 100, 400, 100)
        assert [s.slot_index for s in slots] == list(range(9))
        assert [s.billboard_id for s in slots[:3]] == ["b0", "b0", "b0"]
        assert [s.window_start for s in slots[:3]] == [100, 200, 300]
        for s in slots:
            assert s.window_end - s.window_start == 100

    def test_count_formula_holds_randomly(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            m = int(rng.integers(1, 20))
            delta = int(rng.integers(1, 30))
            windows = int(rng.integers(1, 40))
            t1 = int(rng.integers(-100, 100))
            slots = enumerate_slots(_boards(m), t1, t1 + windows * delta, delta)
            assert len(slots) == m * windows


class TestHaversine:
    def test_identical_points(self):
        assert haversine_m(12.3, 45.6, 12.3, 45.6) == 0.0

    def test_one_degree_equator(self):
        assert abs(haversine_m(0, 0, 0, 1) - ONE_DEGREE_M) <= 1.0

    def test_symmetry(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            a = rng.uniform(-90, 90), rng.uniform(-180, 180)
            b = rng.uniform(-90, 90), rng.uniform(-180, 180)
            assert haversine_m(*a, *b) == pytest.approx(haversine_m(*b, *a), abs=1e-9)

    def test_array_broadcast_matches_scalar(self):
        lats = np.array([0.0, 10.0, -45.0])
        lons = np.array([0.0, 20.0, 90.0])
        batch = haversine_m(5.0, 5.0, lats, lons)
        for i in range(3):
            assert batch[i] == pytest.approx(haversine_m(5.0, 5.0, lats[i], lons[i]))


class TestBuildExposureModel:
    def _simple(self, lambda_m=100.0, sizes=(300.0, 600.0)):
        boards = [Billboard("b0", 0.0, 0.0, sizes[0], 1.0),
                  Billboard("b1", 0.0005, 0.0, sizes[1], 1.0)]  # ~55m apart
        recs = [TrajectoryRecord("u0", 0.0, 0.0, 10, 50),
                TrajectoryRecord("u1", 0.0005, 0.0, 30, 80)]
        slots = enumerate_slots(boards, 0, 120, 60)
        return boards, recs, slots

    def test_panel_size_ratio_and_cap(self):
        boards, recs, slots = self._simple()
        model = build_exposure_model(boards, recs, slots, 100.0)
        probs = set()
        for _, _, p in model.pairs():
            probs.add(p)
        assert probs == {0.5, PROB_CAP}

    def test_radius_excludes_everyone(self):
        boards = [Billboard("b0", 0.0, 0.0, 100.0, 1.0)]
        recs = [TrajectoryRecord("u0", 0.0018, 0.0, 0, 60)]  # ~200m away
        slots = enumerate_slots(boards, 0, 60, 60)
        model = build_exposure_model(boards, recs, slots, 100.0)
        assert model.matrix.nnz == 0

    def test_shared_endpoint_counts_as_exposure(self):
        boards = [Billboard("b0", 0.0, 0.0, 100.0, 1.0)]
        recs = [TrajectoryRecord("u0", 0.0, 0.0, 100, 160)]
        slots = enumerate_slots(boards, 160, 220, 60)
        model = build_exposure_model(boards, recs, slots, 100.0)
        assert list(model.users(0)) == [0]

    def test_multiple_records_count_once(self):
        boards = [Billboard("b0", 0.0, 0.0, 100.0, 1.0)]
        recs = [TrajectoryRecord("u0", 0.0, 0.0, 0, 30),
                TrajectoryRecord("u0", 0.0001, 0.0, 40, 60)]
        slots = enumerate_slots(boards, 0, 60, 60)
        model = build_exposure_model(boards, recs, slots, 100.0)
        assert model.matrix.nnz == 1
        assert model.probs(0)[0] == PROB_CAP

    def _random_instance(self, rng, n_boards=6, n_users=8, n_recs=30):
        boards = [
            Billboard(f"b{i}", float(rng.uniform(0, 0.004)), float(rng.uniform(0, 0.004)),
                      float(rng.uniform(50, 500)), 1.0)
            for i in range(n_boards)
        ]
        recs = []
        for _ in range(n_recs):
            t0 = int(rng.integers(0, 230))
            recs.append(TrajectoryRecord(
                f"u{int(rng.integers(0, n_users))}", float(rng.uniform(0, 0.004)),
                float(rng.uniform(0, 0.004)), t0, t0 + int(rng.integers(0, 25))))
        slots = enumerate_slots(boards, 0, 240, 30)
        return boards, recs, slots

    def test_membership_audit_against_raw_predicate(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            boards, recs, slots = self._random_instance(rng)
            lam = 150.0
            model = build_exposure_model(boards, recs, slots, lam)
            by_id = {b.id: b for b in boards}
            users = {r.user_id for r in recs}
            uidx = {u: i for i, u in enumerate(model.user_ids)}
            # every stored pair re-verifies, every absent pair fails the predicate
            stored = {(b, u) for b, u, _ in model.pairs()}
            for s in slots:
                for u in users:
                    hit = any(
                        exposure_predicate(by_id[s.billboard_id], s, r, lam)
                        for r in recs if r.user_id == u
                    )
                    assert hit == ((s.slot_index, uidx[u]) in stored)

    def test_lists_sorted_unique_and_bounded(self):
        rng = np.random.default_rng(5)
        boards, recs, slots = self._random_instance(rng, n_boards=8, n_recs=60)
        model = build_exposure_model(boards, recs, slots, 200.0)
        for b in range(model.n_slots):
            users = model.users(b)
            assert np.all(np.diff(users) > 0)
            probs = model.probs(b)
            assert np.all(probs > 0) and np.all(probs <= PROB_CAP)

    def test_lambda_monotone_nesting(self):
        rng = np.random.default_rng(9)
        boards, recs, slots = self._random_instance(rng, n_recs=50)
        prev = set()
        for lam in (25.0, 50.0, 100.0, 200.0):
            model = build_exposure_model(boards, recs, slots, lam)
            pairs = {(b, u) for b, u, _ in model.pairs()}
            assert prev <= pairs
            prev = pairs
