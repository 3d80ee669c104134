import numpy as np
import pytest

import hawksteer as hs
from hawksteer.cli import _load_significance
from hawksteer.io import (
    read_csv_records,
    read_events_csv,
    read_events_jsonl,
    write_csv,
    write_events_jsonl,
)


def test_csv_event_import_with_header(tmp_path):
    path = tmp_path / "log.csv"
    path.write_text("t,dim\n0.5,0\n1.25,1\n3.75,0\n")
    seq = read_events_csv(path)
    assert seq.m == 2
    assert seq.times.tolist() == [0.5, 1.25, 3.75]
    assert seq.dims.tolist() == [0, 1, 0]


def test_csv_event_import_headerless_single_column(tmp_path):
    path = tmp_path / "log.csv"
    path.write_text("0.5\n1.5\n")
    seq = read_events_csv(path)
    assert seq.m == 1 and len(seq) == 2


def test_jsonl_reader_rejects_garbage(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"t": 1.0, "dim": 0}\nnot json\n')
    with pytest.raises(ValueError, match="bad.jsonl:2"):
        read_events_jsonl(path)


def test_jsonl_awkward_floats_round_trip(tmp_path):
    times = [0.1, 0.1 + 0.2, 1e-9 + 1.0, np.nextafter(2.0, 3.0)]
    seq = hs.EventSeq(1, np.sort(times), [0, 0, 0, 0])
    path = tmp_path / "e.jsonl"
    write_events_jsonl(path, seq)
    assert read_events_jsonl(path, m=1) == seq


def test_metrics_csv_formatting(tmp_path):
    path = tmp_path / "m.csv"
    write_csv(path, ["a", "b", "c"], [[1, 2.5, None], ["x", 0.1 + 0.2, 3]])
    text = path.read_text()
    assert text.splitlines()[0] == "a,b,c"
    assert text.splitlines()[1] == "1,2.5,"
    records = read_csv_records(path)
    assert float(records[1]["b"]) == 0.1 + 0.2


def test_significance_csv_loader(tmp_path):
    path = tmp_path / "sig.csv"
    path.write_text("0.5,0.25,0.25\n0.1,0.8,0.1\n")
    sig = _load_significance(str(path), 2, q=2.0, period=3.0)
    assert sig.n_followers == 2 and sig.n_bins == 3
    assert sig.q == 2.0
    assert np.allclose(sig.at(1.5), [0.25, 0.8])
    assert _load_significance("none", 3, 1.0, 7.0).n_followers == 3
