"""Billboard/trajectory parsing, slot enumeration, and the exposure model.

The exposure model is the sparse slot-by-user matrix of influence
probabilities that every downstream algorithm consumes. A (slot, user)
pair is present iff some trajectory record of the user lies within
``lambda_m`` meters of the slot's billboard and its time interval
intersects the slot window (closed intervals, shared endpoints count).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .errors import ParseError, ValidationError

EARTH_RADIUS_M = 6_371_000.0

# Largest storable probability. The biggest billboard gets probability 1
# under the panel-size ratio, which would zero out the residual products
# used for incremental marginal gains; the clamp keeps 1-p > 0.
PROB_CAP = 1.0 - 1e-12

BILLBOARD_HEADER = "billboard_id,lat,lon,panel_size,cost"
TRAJECTORY_HEADER = "user_id,lat,lon,t_start,t_end"


@dataclass(frozen=True)
class Billboard:
    id: str
    latitude: float
    longitude: float
    panel_size: float
    cost: float  # parsed and retained, unused by the selectors


@dataclass(frozen=True)
class TrajectoryRecord:
    user_id: str
    latitude: float
    longitude: float
    t_start: int
    t_end: int


@dataclass(frozen=True)
class Slot:
    """One billboard paired with one fixed-length time window."""

    slot_index: int
    billboard_id: str
    window_start: int
    window_end: int


def haversine_m(lat1, lon1, lat2, lon2):
    """Great-circle distance in meters; accepts scalars or numpy arrays."""
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    dphi = np.radians(np.subtract(lat2, lat1))
    dlam = np.radians(np.subtract(lon2, lon1))
    a = np.sin(dphi / 2) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2) ** 2
    d = 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(a))
    if np.ndim(d) == 0:
        return float(d)
    return d


def _check_lat_lon(lat: float, lon: float, line: int) -> None:
    if not -90.0 <= lat <= 90.0:
        raise ParseError(f"latitude {lat} outside [-90, 90]", line)
    if not -180.0 <= lon <= 180.0:
        raise ParseError(f"longitude {lon} outside [-180, 180]", line)


def parse_billboards(path) -> list[Billboard]:
    """Parse a billboard CSV (header ``billboard_id,lat,lon,panel_size,cost``)."""
    boards: list[Billboard] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\n").rstrip("\r")
        if header != BILLBOARD_HEADER:
            raise ParseError(f"expected header {BILLBOARD_HEADER!r}, got {header!r}", 1)
        for lineno, raw in enumerate(fh, start=2):
            row = raw.rstrip("\n").rstrip("\r")
            if not row:
                continue
            parts = row.split(",")
            if len(parts) != 5:
                raise ParseError(f"expected 5 columns, got {len(parts)}", lineno)
            bid = parts[0]
            try:
                lat, lon, size, cost = (float(x) for x in parts[1:])
            except ValueError:
                raise ParseError(f"non-numeric field in {row!r}", lineno) from None
            _check_lat_lon(lat, lon, lineno)
            if size <= 0:
                raise ParseError(f"panel_size must be positive, got {size}", lineno)
            if cost < 0:
                raise ParseError(f"cost must be non-negative, got {cost}", lineno)
            if bid in seen:
                raise ParseError(f"duplicate billboard id {bid!r}", lineno)
            seen.add(bid)
            boards.append(Billboard(bid, lat, lon, size, cost))
    return boards


def parse_trajectories(path) -> list[TrajectoryRecord]:
    """Parse a trajectory CSV (header ``user_id,lat,lon,t_start,t_end``)."""
    records: list[TrajectoryRecord] = []
    with open(path, encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\n").rstrip("\r")
        if header != TRAJECTORY_HEADER:
            raise ParseError(f"expected header {TRAJECTORY_HEADER!r}, got {header!r}", 1)
        for lineno, raw in enumerate(fh, start=2):
            row = raw.rstrip("\n").rstrip("\r")
            if not row:
                continue
            parts = row.split(",")
            if len(parts) != 5:
                raise ParseError(f"expected 5 columns, got {len(parts)}", lineno)
            uid = parts[0]
            try:
                lat = float(parts[1])
                lon = float(parts[2])
                t_start = int(parts[3])
                t_end = int(parts[4])
            except ValueError:
                raise ParseError(f"non-numeric field in {row!r}", lineno) from None
            if t_start > t_end:
                raise ParseError(f"t_start exceeds t_end ({t_start} > {t_end})", lineno)
            records.append(TrajectoryRecord(uid, lat, lon, t_start, t_end))
    return records


def _fmt(x: float) -> str:
    # repr round-trips exactly, so parse -> write -> parse is the identity
    return repr(float(x))


def write_billboards(path, billboards: list[Billboard]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(BILLBOARD_HEADER + "\n")
        for b in billboards:
            fh.write(
                f"{b.id},{_fmt(b.latitude)},{_fmt(b.longitude)},"
                f"{_fmt(b.panel_size)},{_fmt(b.cost)}\n"
            )


def write_trajectories(path, records: list[TrajectoryRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(TRAJECTORY_HEADER + "\n")
        for r in records:
            fh.write(
                f"{r.user_id},{_fmt(r.latitude)},{_fmt(r.longitude)},"
                f"{r.t_start},{r.t_end}\n"
            )


def enumerate_slots(billboards: list[Billboard], t1: int, t2: int, delta: int) -> list[Slot]:
    """Tile [t1, t2] with windows of length delta for every billboard.

    Returns exactly ``len(billboards) * (t2 - t1) / delta`` slots ordered by
    (billboard as given, window_start), with dense indices from 0.
    """
    if delta <= 0:
        raise ValidationError(f"delta must be positive, got {delta}")
    horizon = t2 - t1
    if horizon <= 0:
        raise ValidationError(f"empty time horizon [{t1}, {t2}]")
    if horizon % delta != 0:
        raise ValidationError(
            f"horizon {horizon} not divisible by delta {delta}; no partial windows"
        )
    windows = horizon // delta
    slots: list[Slot] = []
    idx = 0
    for b in billboards:
        for w in range(windows):
            start = t1 + w * delta
            slots.append(Slot(idx, b.id, start, start + delta))
            idx += 1
    return slots


@dataclass
class ExposureModel:
    """Immutable sparse slot-to-user probability index.

    ``matrix`` is CSR with one row per slot; row indices are the exposed
    users in strictly increasing order, entries are influence probabilities
    in (0, PROB_CAP]. After construction the model must be treated as
    read-only; concurrent readers are then safe.
    """

    matrix: sparse.csr_matrix
    slots: list[Slot]
    n_users: int
    user_ids: list[str]
    billboards: dict[str, Billboard] | None = None
    lambda_m: float | None = None
    singleton: np.ndarray = field(init=False)

    def __post_init__(self):
        self.matrix.sort_indices()
        if self.matrix.shape != (len(self.slots), self.n_users):
            raise ValidationError("matrix shape does not match slots/users")
        if self.matrix.nnz:
            if self.matrix.data.min() < 0 or self.matrix.data.max() > PROB_CAP:
                raise ValidationError("exposure probabilities outside [0, 1 - 1e-12]")
        self.singleton = np.asarray(self.matrix.sum(axis=1)).ravel()
        self.singleton.setflags(write=False)

    @property
    def n_slots(self) -> int:
        return len(self.slots)

    def users(self, b: int) -> np.ndarray:
        """User indices exposed to slot b, strictly increasing."""
        lo, hi = self.matrix.indptr[b], self.matrix.indptr[b + 1]
        return self.matrix.indices[lo:hi]

    def probs(self, b: int) -> np.ndarray:
        lo, hi = self.matrix.indptr[b], self.matrix.indptr[b + 1]
        return self.matrix.data[lo:hi]

    def check_slot(self, b: int) -> None:
        if not 0 <= b < self.n_slots:
            raise ValidationError(f"slot index {b} out of range [0, {self.n_slots})")

    def pairs(self):
        """Yield every stored (slot_index, user_index, probability) triple."""
        m = self.matrix
        for b in range(self.n_slots):
            for k in range(m.indptr[b], m.indptr[b + 1]):
                yield b, int(m.indices[k]), float(m.data[k])

    @classmethod
    def from_lists(cls, slot_user_probs, n_users, slots=None, user_ids=None,
                   billboards=None, lambda_m=None) -> "ExposureModel":
        """Build a model from explicit per-slot (user, probability) lists.

        Intended for tests and synthetic setups that bypass the geo/time
        construction. Probabilities are clamped to PROB_CAP; zero entries
        are dropped.
        """
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for pairs in slot_user_probs:
            row = sorted((int(u), float(p)) for u, p in pairs)
            seen = set()
            for u, p in row:
                if u in seen:
                    raise ValidationError(f"duplicate user {u} in one slot's exposure list")
                seen.add(u)
                if not 0 <= u < n_users:
                    raise ValidationError(f"user index {u} out of range")
                if p < 0 or p > 1:
                    raise ValidationError(f"probability {p} outside [0, 1]")
                if p > 0:
                    indices.append(u)
                    data.append(min(p, PROB_CAP))
            indptr.append(len(indices))
        n_slots = len(slot_user_probs)
        mat = sparse.csr_matrix(
            (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
            shape=(n_slots, n_users),
        )
        if slots is None:
            slots = [Slot(i, f"b{i}", 0, 1) for i in range(n_slots)]
        if user_ids is None:
            user_ids = [f"u{j}" for j in range(n_users)]
        return cls(mat, slots, n_users, user_ids, billboards, lambda_m)


def _windows_hit(t_a: int, t_b: int, t1: int, delta: int, n_windows: int) -> range:
    """Window indices whose closed interval intersects [t_a, t_b]."""
    # window j covers [t1 + j*delta, t1 + (j+1)*delta]; intersect iff
    # t1 + j*delta <= t_b and t1 + (j+1)*delta >= t_a
    lo = -(-(t_a - t1 - delta) // delta)  # ceil division
    hi = (t_b - t1) // delta
    return range(max(0, lo), min(n_windows - 1, hi) + 1)


def build_exposure_model(billboards: list[Billboard], trajectories: list[TrajectoryRecord],
                         slots: list[Slot], lambda_m: float) -> ExposureModel:
    """Compute the exposure matrix from raw geo/time data.

    Probability for an exposed pair is panel_size / max panel_size (capped
    at PROB_CAP). Multiple qualifying records of one user for one slot
    contribute a single entry.
    """
    if not billboards:
        raise ValidationError("billboard list is empty")
    max_size = max(b.panel_size for b in billboards)
    if max_size <= 0:
        raise ValidationError("max panel_size must be positive")
    for pos, s in enumerate(slots):
        if s.slot_index != pos:
            raise ValidationError("slot indices must be dense and in list order")

    by_board: dict[str, list[int]] = {}
    for s in slots:
        by_board.setdefault(s.billboard_id, []).append(s.slot_index)

    user_ids: list[str] = []
    user_index: dict[str, int] = {}
    for r in trajectories:
        if r.user_id not in user_index:
            user_index[r.user_id] = len(user_ids)
            user_ids.append(r.user_id)
    n_users = len(user_ids)

    rec_lat = np.array([r.latitude for r in trajectories])
    rec_lon = np.array([r.longitude for r in trajectories])

    exposed: dict[int, set[int]] = {s.slot_index: set() for s in slots}
    for b in billboards:
        slot_ids = by_board.get(b.id)
        if not slot_ids:
            continue
        # all slots of one billboard tile the same horizon
        first = slots[slot_ids[0]]
        delta = first.window_end - first.window_start
        t1 = min(slots[i].window_start for i in slot_ids)
        n_windows = len(slot_ids)
        ordered = sorted(slot_ids, key=lambda i: slots[i].window_start)
        if trajectories:
            near = np.nonzero(
                haversine_m(b.latitude, b.longitude, rec_lat, rec_lon) <= lambda_m
            )[0]
        else:
            near = ()
        for ri in near:
            r = trajectories[ri]
            uj = user_index[r.user_id]
            for w in _windows_hit(r.t_start, r.t_end, t1, delta, n_windows):
                exposed[ordered[w]].add(uj)

    size_of = {b.id: b.panel_size for b in billboards}
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for s in slots:
        p = min(size_of[s.billboard_id] / max_size, PROB_CAP)
        for uj in sorted(exposed[s.slot_index]):
            indices.append(uj)
            data.append(p)
        indptr.append(len(indices))
    mat = sparse.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(slots), n_users),
    )
    return ExposureModel(mat, list(slots), n_users, user_ids,
                         {b.id: b for b in billboards}, float(lambda_m))


def exposure_predicate(board: Billboard, slot: Slot, record: TrajectoryRecord,
                       lambda_m: float) -> bool:
    """Raw geo/time test used to audit model membership from first principles."""
    if haversine_m(board.latitude, board.longitude, record.latitude, record.longitude) > lambda_m:
        return False
    return record.t_start <= slot.window_end and record.t_end >= slot.window_start


def count_covered_records(model: ExposureModel, trajectories: list[TrajectoryRecord],
                          ground_set=None) -> dict[int, int]:
    """Number of trajectory records each slot covers (probability ignored)."""
    if model.billboards is None or model.lambda_m is None:
        raise ValidationError("model lacks geo metadata; rebuild via build_exposure_model")
    if ground_set is None:
        ground_set = range(model.n_slots)
    counts: dict[int, int] = {}
    rec_lat = np.array([r.latitude for r in trajectories])
    rec_lon = np.array([r.longitude for r in trajectories])
    near_cache: dict[str, np.ndarray] = {}
    for b in ground_set:
        model.check_slot(b)
        slot = model.slots[b]
        board = model.billboards[slot.billboard_id]
        if board.id not in near_cache:
            if trajectories:
                near_cache[board.id] = np.nonzero(
                    haversine_m(board.latitude, board.longitude, rec_lat, rec_lon)
                    <= model.lambda_m
                )[0]
            else:
                near_cache[board.id] = np.array([], dtype=int)
        n = 0
        for ri in near_cache[board.id]:
            r = trajectories[ri]
            if r.t_start <= slot.window_end and r.t_end >= slot.window_start:
                n += 1
        counts[b] = n
    return counts
