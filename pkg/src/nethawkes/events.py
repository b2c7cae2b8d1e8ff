"""Event-stream data model: validation, windowing, binning, file ingestion.

Events are marked points (time, process) on K processes over a window
[0, T].  Sequences are immutable after construction and store their
events as parallel numpy arrays sorted by time (stable, so simultaneous
events keep input order).
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, ParseError, ValidationError


@dataclass(frozen=True)
class Event:
    """A single marked event: time in seconds, process index in [0, K)."""

    time: float
    process: int


@dataclass(frozen=True)
class EventSequence:
    """Time-sorted marked events on ``num_processes`` processes over [0, horizon].

    ``labels`` optionally maps process indices back to the string labels
    found in the source file.
    """

    times: np.ndarray
    processes: np.ndarray
    horizon: float
    num_processes: int
    labels: tuple = field(default=None)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        procs = np.asarray(self.processes, dtype=np.int64)
        if times.shape != procs.shape or times.ndim != 1:
            raise ArgumentError("times and processes must be 1-d arrays of equal length")
        if not self.horizon > 0:
            raise ArgumentError(f"horizon must be positive, got {self.horizon}")
        if self.num_processes < 1:
            raise ArgumentError("num_processes must be >= 1")
        if times.size:
            if not np.all(np.isfinite(times)):
                raise ValidationError("event times must be finite")
            if times.min() < 0:
                raise ValidationError(f"negative event time {times.min()}")
            if times.max() > self.horizon:
                raise ValidationError(
                    f"event time {times.max()} exceeds horizon {self.horizon}"
                )
            if procs.min() < 0 or procs.max() >= self.num_processes:
                raise ValidationError("process index out of range")
            order = np.argsort(times, kind="stable")
            times = times[order]
            procs = procs[order]
        times.setflags(write=False)
        procs.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "processes", procs)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))

    def __len__(self):
        return int(self.times.size)

    def __iter__(self):
        for t, c in zip(self.times, self.processes):
            yield Event(float(t), int(c))

    @property
    def events(self):
        return list(self)

    def counts_per_process(self):
        return np.bincount(self.processes, minlength=self.num_processes)

    @classmethod
    def from_events(cls, events, horizon, num_processes, labels=None):
        times = np.array([e.time for e in events], dtype=float)
        procs = np.array([e.process for e in events], dtype=np.int64)
        return cls(times, procs, horizon, num_processes, labels)


@dataclass(frozen=True)
class BinnedCounts:
    """K x M matrix of event counts on a regular grid of bins."""

    counts: np.ndarray
    bin_width: float


def load_events(path, horizon, num_processes=None):
    """Read an event CSV (header ``time,process``) into a validated sequence.

    Process labels may be integers (used directly as indices) or strings,
    in which case a deterministic sorted-lexicographic label -> index map
    is built and kept on the sequence.  When ``num_processes`` is None it
    defaults to max index + 1 for integer labels and to the number of
    distinct labels otherwise.  Rows need not be pre-sorted.
    """
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            header_ok = False
        else:
            header_ok = [h.strip().lower() for h in header[:2]] == ["time", "process"]
        if not header_ok:
            raise ParseError("expected header 'time,process'", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", line=lineno)
            try:
                t = float(row[0])
            except ValueError:
                raise ParseError(f"bad time value {row[0]!r}", line=lineno) from None
            rows.append((lineno, t, row[1].strip()))

    tokens = [tok for _, _, tok in rows]
    all_int = all(_is_int(tok) for tok in tokens)
    labels = None
    if all_int:
        procs = [int(tok) for tok in tokens]
        if num_processes is None:
            num_processes = (max(procs) + 1) if procs else 1
    else:
        distinct = sorted(set(tokens))
        index = {lab: i for i, lab in enumerate(distinct)}
        procs = [index[tok] for tok in tokens]
        labels = tuple(distinct)
        if num_processes is None:
            num_processes = len(distinct)
        elif len(distinct) > num_processes:
            raise ValidationError(
                f"{len(distinct)} distinct labels exceed num_processes={num_processes}"
            )

    for (lineno, t, _), p in zip(rows, procs):
        if not np.isfinite(t) or t < 0 or t > horizon:
            raise ValidationError(f"line {lineno}: time {t} outside [0, {horizon}]")
        if p < 0 or p >= num_processes:
            raise ValidationError(f"line {lineno}: process {p} not in [0, {num_processes})")

    times = np.array([t for _, t, _ in rows], dtype=float)
    return EventSequence(times, np.array(procs, dtype=np.int64), horizon,
                         num_processes, labels)


def save_events(seq, path):
    """Write a sequence back to the event CSV format (round-trips load_events)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "process"])
        for t, c in zip(seq.times, seq.processes):
            tok = seq.labels[c] if seq.labels is not None else int(c)
            writer.writerow([repr(float(t)), tok])


def events_to_csv_text(seq):
    """Render a sequence as CSV text (used for byte-stable CLI output)."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["time", "process"])
    for t, c in zip(seq.times, seq.processes):
        tok = seq.labels[c] if seq.labels is not None else int(c)
        writer.writerow([repr(float(t)), tok])
    return buf.getvalue()


def bin_events(seq, num_bins):
    """Count events on a regular grid of ``num_bins`` bins over [0, T].

    Bin m covers [m*T/M, (m+1)*T/M); events at exactly T fall in the last
    bin, so the bins partition [0, T] and row sums equal per-process counts.
    """
    if num_bins < 1:
        raise ArgumentError(f"num_bins must be >= 1, got {num_bins}")
    K, M, T = seq.num_processes, int(num_bins), seq.horizon
    counts = np.zeros((K, M), dtype=np.int64)
    if len(seq):
        idx = np.floor(seq.times * M / T).astype(np.int64)
        np.clip(idx, 0, M - 1, out=idx)
        np.add.at(counts, (seq.processes, idx), 1)
    return BinnedCounts(counts, T / M)


def split_train_test(seq, t_split):
    """Split at ``t_split``: events up to and including it form the training
    window [0, t_split]; later events are shifted by -t_split onto
    [0, T - t_split].  The two parts partition the sequence.
    """
    if not (0 < t_split < seq.horizon):
        raise ArgumentError(
            f"t_split must lie strictly inside (0, {seq.horizon}), got {t_split}"
        )
    mask = seq.times <= t_split
    train = EventSequence(seq.times[mask], seq.processes[mask], t_split,
                          seq.num_processes, seq.labels)
    test = EventSequence(seq.times[~mask] - t_split, seq.processes[~mask],
                         seq.horizon - t_split, seq.num_processes, seq.labels)
    return train, test


def _is_int(token):
    try:
        int(token)
        return True
    except ValueError:
        return False
