from __future__ import annotations

import json
import subprocess
import sys
import time

import pytest

from ppmetrics.cli import main
from ppmetrics.csvio import dataset_path
from ppmetrics.store import LOG_NAME, Store

T1, T2, T3 = (str(dataset_path(f"clovertree_{n}")) for n in ("table1", "table2", "table3"))
T3_BEFORE = str(dataset_path("clovertree_table3_without_sycl"))
REF = ["--reference", "A100=CUDA,P100=CUDA,MI250=HIP"]


def edited_copy(src, dst, line, **fields):
    """Copy a measurement CSV, overwriting columns of one (1-based) line."""
    text = open(src).read().splitlines()
    header = text[0].split(",")
    cells = text[line - 1].split(",")
    for k, v in fields.items():
        cells[header.index(k)] = v
    text[line - 1] = ",".join(cells)
    dst.write_text("\n".join(text) + "\n")
    return str(dst)


def run(capsys, *argv):
    try:
        code = main(list(argv))
    except SystemExit as exc:
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


def test_compute_table(capsys):
    code, out, _ = run(capsys, "compute", T1)
    assert code == 0
    lines = out.splitlines()
    assert lines[2].split() == ["OpenACC", "100%", "50%", "67%", "72%"]
    assert lines[3].split()[-1] == "85%" and lines[4].split()[-1] == "61%"


def test_compute_json_and_csv(capsys):
    code, out, _ = run(capsys, "compute", T3, "--policy", "fixed-ref", *REF, "--format", "json")
    assert code == 0
    scores = json.loads(out)
    assert [s["implementation"] for s in scores] == ["OpenACC", "OpenMP", "Kokkos", "SYCL"]
    assert [round(s["value"] * 100) for s in scores] == [23, 28, 18, 26]
    code, out, _ = run(capsys, "compute", T1, "--format", "csv", "--metric", "harmonic")
    assert out.splitlines()[0] == "implementation,A100,P100,MI250,score"
    assert float(out.splitlines()[2].split(",")[-1]) == pytest.approx(36 / 43)


def test_compute_platform_subset(capsys):
    code, out, err = run(capsys, "compute", T1, "--platforms", "A100,P100")
    assert code == 0 and "ignoring platforms outside --platforms: MI250" in err
    assert out.splitlines()[2].split() == ["OpenACC", "100%", "50%", "75%"]


@pytest.mark.parametrize("argv, code", [
    (["compute", "/no/such.csv"], 1),
    (["compute", T1, "--policy", "nah"], 1),
    (["compute", T1, "--policy", "fixed-ref", "--reference", "A100"], 1),
    (["compute", T1, "--policy", "arch-theoretical"], 2),
    (["compute", T1, "--policy", "fixed-ref", *REF], 2),
])
def test_exit_codes(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_bad_value_reports_line(capsys, tmp_path):
    bad = edited_copy(T1, tmp_path / "bad.csv", 5, value="-40")
    code, _, err = run(capsys, "compute", bad)
    assert code == 2 and "line 5" in err


def test_audit_churn(capsys):
    code, out, _ = run(capsys, "audit", "--before", T1, "--after", T2, "--diff")
    assert code == 3
    assert out.count("VIOLATION [criterion 4]") == 3 and "~~80%~~ 60%" in out
    code, out, _ = run(capsys, "audit", "--before", T1, "--after", T2, "--format", "json")
    findings = json.loads(out)["findings"]
    assert sum(f["severity"] == "violation" for f in findings) == 3


def test_audit_fixed_reference_is_clean(capsys):
    code, out, _ = run(capsys, "audit", "--before", T3_BEFORE, "--after", T3, "--policy", "fixed-ref", *REF,
                       "--format", "json")
    assert code == 0
    assert json.loads(out)["findings"] == []


def test_import_and_report(capsys, tmp_path):
    store = str(tmp_path / "s")
    code, out, _ = run(capsys, "import", T1, "--store", store, "--define-study")
    assert code == 0 and out.startswith("ingested 9 measurement(s)")
    code, out, _ = run(capsys, "import", T1, "--store", store)
    assert out.startswith("ingested 0 measurement(s)") and "9 duplicate(s) skipped" in out
    code, out, _ = run(capsys, "import", T2, "--store", store)
    assert out.startswith("ingested 3 measurement(s)") and "recalculated" in out
    code, out, _ = run(capsys, "report", "--store", store, "--format", "json")
    got = {s["implementation"]: s["value"] for s in json.loads(out)}
    assert got["Kokkos"] == pytest.approx(0.5277777, abs=1e-6)


def test_import_bad_row_is_atomic(capsys, tmp_path):
    store = tmp_path / "s"
    bad = edited_copy(T2, tmp_path / "bad.csv", 12, value="zero")
    code, _, err = run(capsys, "import", bad, "--store", str(store))
    assert code == 2 and "line 12" in err
    assert Store(store).seq == 0
    # a row that parses but cannot be ingested also aborts the whole file
    bad = edited_copy(T2, tmp_path / "bad2.csv", 12, kind="throughput_gflops")
    code, _, err = run(capsys, "import", bad, "--store", str(store))
    assert code == 2 and "line 12" in err
    assert Store(store).seq == 0


def test_import_uses_env_store(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("PPMETRICS_STORE", str(tmp_path))
    assert run(capsys, "import", T1)[0] == 0
    monkeypatch.delenv("PPMETRICS_STORE")
    assert run(capsys, "report")[0] == 1


def test_report_lists_unscorable_studies(capsys, tmp_path):
    run(capsys, "import", T1, "--store", str(tmp_path), "--define-study", "--policy", "fixed-ref", *REF)
    code, out, _ = run(capsys, "report", "--store", str(tmp_path))
    assert code == 0 and "not scorable" in out


def test_serve_refuses_corrupt_log(capsys, tmp_path):
    run(capsys, "import", T1, "--store", str(tmp_path))
    log = tmp_path / LOG_NAME
    lines = log.read_text().splitlines(keepends=True)
    lines[2] = "garbage\n"
    log.write_text("".join(lines))
    code, _, err = run(capsys, "serve", "--store", str(tmp_path), "--listen", "127.0.0.1:0")
    assert code == 1 and "seq 3" in err


def test_serve_answers_requests(tmp_path):
    import socket
    import urllib.request

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    subprocess.run([sys.executable, "-m", "ppmetrics", "import", T1, "--store", str(tmp_path), "--define-study"],
                   check=True, capture_output=True)
    proc = subprocess.Popen([sys.executable, "-m", "ppmetrics", "serve", "--store", str(tmp_path),
                             "--listen", f"127.0.0.1:{port}"], stderr=subprocess.PIPE)
    try:
        body = None
        for _ in range(100):
            try:
                with urllib.request.urlopen(f"http://127.0.0.1:{port}/api/v1/scores", timeout=1) as r:
                    body = json.load(r)
                break
            except OSError:
                time.sleep(0.1)
        assert body is not None and len(body) == 3
    finally:
        proc.terminate()
        proc.wait(timeout=10)
