import json

import pandas as pd
import pytest

from src.exceptions import ReportError
from src.ledger import TxStatus
from src.metrics import COLUMNS, MetricsRecord, records_frame, summarize
from src.report_generator import RECORDS_FILE, SUMMARY_FILE, SUMMARY_JSON, ReportGenerator, load_records


def _records():
    def record(terminal_id, seq, status, finished, config):
        committed = status is TxStatus.COMMITTED
        return MetricsRecord(
            tx_id=f"t{terminal_id}-{seq}-0", terminal_id=terminal_id, seq=seq, retry=0, worker_id=0,
            profile="NewOrder", status=status.value, created=finished - 1.25, submitted=finished - 0.5,
            endorsed=finished - 0.4, ordered=finished - 0.1 if committed else None, finished=finished,
            block_no=seq if committed else None, tx_index=0 if committed else None,
            read_count=3, write_count=2, config=config,
        )

    return records_frame([
        record(1, 1, TxStatus.COMMITTED, 2.0, "10"),
        record(1, 2, TxStatus.BUSINESS_ROLLBACK, 4.5, "10"),
        record(2, 1, TxStatus.MVCC_CONFLICT, 3.0, "20"),
        record(2, 2, TxStatus.COMMITTED, 6.0, "20"),
    ])


def test_empty_export_is_header_only(tmp_path):
    path = ReportGenerator(tmp_path).export_records(records_frame([]))
    assert path.read_text().splitlines() == [",".join(COLUMNS)]
    assert load_records(path).empty


def test_reexport_is_byte_identical(tmp_path):
    first = ReportGenerator(tmp_path / "a").export_records(_records())
    second = ReportGenerator(tmp_path / "b").export_records(load_records(first))
    assert first.read_bytes() == second.read_bytes()
    assert first.name == RECORDS_FILE


def test_load_records_errors(tmp_path):
    with pytest.raises(ReportError):
        load_records(tmp_path / "missing.csv")
    partial = tmp_path / "partial.csv"
    pd.DataFrame({"tx_id": ["t1-1-0"]}).to_csv(partial, index=False)
    with pytest.raises(ReportError, match="lacks columns"):
        load_records(partial)


def test_summary_files(tmp_path):
    reports = ReportGenerator(tmp_path)
    summary = summarize(_records(), duration=60.0, label="10", terminals=2)
    path = reports.write_summary([summary])
    text = path.read_text()
    assert path.name == SUMMARY_FILE
    assert "[10]" in text and "tpmC:" in text and "assessment:" in text
    stored = json.loads((tmp_path / SUMMARY_JSON).read_text())
    assert stored[0]["attempts"] == 4

    rate = reports.write_rate_data([summary]).read_text().splitlines()
    assert rate[0].startswith("#") and rate[1].split()[0] == "2"


def test_conflict_assessment():
    reports = ReportGenerator(".")
    assert reports._interpret_conflicts({TxStatus.COMMITTED.value: 1.0}) == "low contention"
    assert reports._interpret_conflicts({TxStatus.MVCC_CONFLICT.value: 0.5}).startswith("contended")
    assert reports._interpret_conflicts({TxStatus.COMMIT_TIMEOUT.value: 0.6}).startswith("saturated")


def test_error_profile_and_figures(tmp_path):
    reports = ReportGenerator(tmp_path)
    table = reports.write_error_profile(_records())
    assert list(table.index) == ["10", "20"]
    assert (tmp_path / "error_profile.csv").exists()
    assert (tmp_path / "error_profile.dat").read_text().startswith("# config")

    summary = summarize(_records(), duration=60.0, terminals=2)
    assert reports.plot_rate([summary]).exists()
    assert reports.plot_error_profile(table).exists()
    assert reports.plot_precision({10: [0.1, 0.2, -0.01], 20: [0.05]}).exists()
    assert reports.plot_rate([]) is None
    assert reports.plot_precision({}) is None
    assert reports.plot_error_profile(table.iloc[0:0]) is None
