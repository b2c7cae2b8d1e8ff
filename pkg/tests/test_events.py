import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import nethawkes as nh
from nethawkes.errors import ArgumentError, ParseError, ValidationError
from nethawkes.events import events_to_csv_text


def write_csv(tmp_path, text, name="events.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadEvents:
    def test_sorts_unsorted_rows(self, tmp_path):
        path = write_csv(tmp_path, "time,process\n0.5,0\n0.2,1\n")
        seq = nh.load_events(path, horizon=1.0, num_processes=2)
        assert seq.times.tolist() == [0.2, 0.5]
        assert seq.processes.tolist() == [1, 0]

    def test_empty_file(self, tmp_path):
        path = write_csv(tmp_path, "time,process\n")
        seq = nh.load_events(path, horizon=10.0, num_processes=3)
        assert len(seq) == 0
        assert seq.num_processes == 3

    def test_time_past_horizon_rejected(self, tmp_path):
        path = write_csv(tmp_path, "time,process\n2.0,0\n")
        with pytest.raises(ValidationError):
            nh.load_events(path, horizon=1.0, num_processes=1)

    def test_process_out_of_range_rejected(self, tmp_path):
        path = write_csv(tmp_path, "time,process\n0.5,3\n")
        with pytest.raises(ValidationError):
            nh.load_events(path, horizon=1.0, num_processes=2)

    def test_malformed_row_reports_line(self, tmp_path):
        path = write_csv(tmp_path, "time,process\n0.1,0\nnot-a-time,1\n")
        with pytest.raises(ParseError, match="line 3"):
            nh.load_events(path, horizon=1.0, num_processes=2)

    def test_missing_header(self, tmp_path):
        path = write_csv(tmp_path, "0.1,0\n")
        with pytest.raises(ParseError, match="line 1"):
            nh.load_events(path, horizon=1.0)

    def test_string_labels_sorted_lexicographic(self, tmp_path):
        path = write_csv(tmp_path, "time,process\n1.0,MSFT\n2.0,AAPL\n3.0,MSFT\n")
        seq = nh.load_events(path, horizon=5.0)
        assert seq.labels == ("AAPL", "MSFT")
        assert seq.num_processes == 2
        assert seq.processes.tolist() == [1, 0, 1]

    def test_integer_labels_default_k(self, tmp_path):
        path = write_csv(tmp_path, "time,process\n0.1,0\n0.2,2\n")
        seq = nh.load_events(path, horizon=1.0)
        assert seq.num_processes == 3

    def test_round_trip(self, tmp_path, rng):
        times = np.sort(rng.random(40) * 9.7)
        procs = rng.integers(0, 4, 40)
        seq = nh.EventSequence(times, procs, 9.7, 4)
        path = tmp_path / "out.csv"
        nh.save_events(seq, path)
        back = nh.load_events(path, horizon=9.7, num_processes=4)
        assert np.array_equal(back.times, seq.times)
        assert np.array_equal(back.processes, seq.processes)

    def test_round_trip_with_labels(self, tmp_path):
        seq = nh.EventSequence([0.5, 1.0], [1, 0], 2.0, 2, labels=("x", "y"))
        path = tmp_path / "out.csv"
        nh.save_events(seq, path)
        back = nh.load_events(path, horizon=2.0)
        assert back.labels == ("x", "y")
        assert np.array_equal(back.processes, seq.processes)

    def test_csv_text_is_stable(self):
        seq = nh.EventSequence([0.25, 0.75], [0, 1], 1.0, 2)
        assert events_to_csv_text(seq) == events_to_csv_text(seq)


class TestSequenceInvariants:
    def test_stable_order_for_ties(self):
        seq = nh.EventSequence([1.0, 1.0, 0.5], [2, 0, 1], 2.0, 3)
        # the two tied events keep their input order
        assert seq.processes.tolist() == [1, 2, 0]

    def test_negative_time_rejected(self):
        with pytest.raises(ValidationError):
            nh.EventSequence([-0.1], [0], 1.0, 1)

    def test_nonfinite_time_rejected(self):
        with pytest.raises(ValidationError):
            nh.EventSequence([np.nan], [0], 1.0, 1)


class TestBinEvents:
    def test_direct_count(self):
        seq = nh.EventSequence([0.2, 0.5], [0, 0], 1.0, 1)
        binned = nh.bin_events(seq, 2)
        assert binned.counts.tolist() == [[1, 1]]
        assert binned.bin_width == 0.5

    def test_no_events(self):
        seq = nh.EventSequence([], [], 1.0, 2)
        assert nh.bin_events(seq, 4).counts.tolist() == [[0] * 4] * 2

    def test_event_at_horizon_in_last_bin(self):
        seq = nh.EventSequence([1.0], [0], 1.0, 1)
        assert nh.bin_events(seq, 4).counts.tolist() == [[0, 0, 0, 1]]

    def test_bad_bin_count(self):
        seq = nh.EventSequence([], [], 1.0, 1)
        with pytest.raises(ArgumentError):
            nh.bin_events(seq, 0)

    @given(st.lists(st.floats(min_value=0.0, max_value=7.0), max_size=50),
           st.integers(min_value=1, max_value=40))
    @settings(max_examples=50, deadline=None)
    def test_conserves_events(self, times, num_bins):
        procs = [i % 3 for i in range(len(times))]
        seq = nh.EventSequence(times, procs, 7.0, 3)
        binned = nh.bin_events(seq, num_bins)
        assert binned.counts.sum() == len(seq)
        assert np.array_equal(binned.counts.sum(axis=1),
                              seq.counts_per_process())


class TestSplitTrainTest:
    def test_shift_arithmetic(self):
        seq = nh.EventSequence([0.2, 0.9], [0, 1], 1.0, 2)
        train, test = nh.split_train_test(seq, 0.5)
        assert train.times.tolist() == [0.2] and train.horizon == 0.5
        assert np.allclose(test.times, [0.4]) and test.horizon == 0.5
        assert test.processes.tolist() == [1]

    def test_window_lengths(self):
        seq = nh.EventSequence([10.0, 950.0], [0, 0], 1000.0, 1)
        train, test = nh.split_train_test(seq, 900.0)
        assert train.horizon == 900.0
        assert test.horizon == 100.0

    def test_all_events_before_split(self):
        seq = nh.EventSequence([0.1, 0.2], [0, 0], 1.0, 1)
        train, test = nh.split_train_test(seq, 0.9)
        assert len(train) == 2 and len(test) == 0

    def test_out_of_range_split(self):
        seq = nh.EventSequence([0.1], [0], 1.0, 1)
        for bad in (0.0, 1.0, -2.0, 3.0):
            with pytest.raises(ArgumentError):
                nh.split_train_test(seq, bad)

    @given(st.lists(st.floats(min_value=0.0, max_value=5.0), max_size=30),
           st.floats(min_value=0.5, max_value=4.5))
    @settings(max_examples=50, deadline=None)
    def test_partitions(self, times, t_split):
        seq = nh.EventSequence(times, [0] * len(times), 5.0, 1)
        train, test = nh.split_train_test(seq, t_split)
        assert len(train) + len(test) == len(seq)
