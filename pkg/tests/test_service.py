from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from ppmetrics.service import create_app
from ppmetrics.store import Store

from ._data import APP, PROBLEM, post_study, post_table

MEAS = "/api/v1/measurements"


@pytest.fixture
def client():
    return TestClient(create_app(Store()))


def _sycl_mi250():
    return {"app": APP, "problem": PROBLEM, "implementation": "SYCL", "platform": "MI250",
            "kind": "runtime_seconds", "value": 30, "model": "SYCL"}


def by_impl(resp):
    return {s["implementation"]: s for s in resp.json()}


def test_post_measurement_triggers_recalculation(client):
    assert all(r.status_code == 200 for r in post_table(client, "table1"))
    post_study(client)
    r = client.post(MEAS, json=_sycl_mi250())
    assert r.status_code == 200
    body = r.json()
    assert body["recalculated"] and body["seq"] == client.app.state.store.seq


def test_post_errors(client):
    post_table(client, "table1")
    bad = {**_sycl_mi250(), "value": -4}
    r = client.post(MEAS, json=bad)
    assert r.status_code == 400
    assert r.json()["detail"][0]["field"] == "value"
    assert client.post(MEAS, json={**_sycl_mi250(), "platform": "V100"}).status_code == 400
    assert client.post(MEAS, content=b"not json", headers={"content-type": "application/json"}).status_code == 400
    assert client.post(MEAS, json=_sycl_mi250()).status_code == 200
    assert client.post(MEAS, json=_sycl_mi250()).status_code == 409
    assert client.post("/api/v1/platforms", json={"id": "MI250", "arch_class": "gpu"}).status_code == 409


def test_scores_table3_fixed_reference(client):
    post_table(client, "table3")
    post_study(client, "fixed_reference")
    got = by_impl(client.get("/api/v1/scores", params={"policy": "fixed_reference"}))
    assert list(got) == ["OpenACC", "OpenMP", "Kokkos", "SYCL"]
    pct = [round(got[i]["value"] * 100) for i in got]
    assert pct == [23, 28, 18, 26]
    a100 = got["OpenACC"]["per_platform"][0]
    assert a100["baseline"] == {"source": "reference_implementation", "value": 10.0, "implementation": "CUDA"}


def test_scores_filters_and_errors(client):
    post_table(client, "table1")
    post_study(client)
    assert client.get("/api/v1/scores", params={"app": "nope"}).json() == []
    assert client.get("/api/v1/scores", params={"policy": "bogus"}).status_code == 400
    assert client.get("/api/v1/scores", params={"metric": "median"}).status_code == 400


def test_values_carry_twelve_significant_digits(client):
    post_table(client, "table1")
    post_study(client)
    got = by_impl(client.get("/api/v1/scores"))
    assert got["OpenACC"]["value"] == 0.722222222222
    assert got["Kokkos"]["per_platform"][1]["e"] == 0.333333333333


def test_gets_are_pure_views(client):
    post_table(client, "table1")
    post_study(client)
    seq = client.app.state.store.seq
    urls = ["/api/v1/scores", "/api/v1/studies",
            f"/api/v1/history?app={APP}&problem={PROBLEM}&implementation=Kokkos",
            f"/api/v1/audit?app={APP}&problem={PROBLEM}"]
    for url in urls:
        first = client.get(url)
        assert first.status_code == 200
        assert client.get(url).content == first.content
    assert client.app.state.store.seq == seq


def test_audit_across_sycl_ingest(client):
    post_table(client, "table1")
    post_study(client)
    post_table(client, "table3_without_sycl", problem="refs")
    post_study(client, "fixed_reference", problem="refs")
    lo = client.app.state.store.seq
    post_table(client, "table2")
    post_table(client, "table3", problem="refs")
    hi = client.app.state.store.seq

    def violations(problem):
        r = client.get("/api/v1/audit", params={"app": APP, "problem": problem, "from_seq": lo, "to_seq": hi})
        assert r.status_code == 200
        return [f for f in r.json()["findings"] if f["severity"] == "violation"]

    v = violations(PROBLEM)
    assert len(v) == 3 and {f["platform"] for f in v} == {"MI250"}
    assert all(f["policy"] == "study_local_best" for f in v)
    assert violations("refs") == []


def test_audit_ranges(client):
    post_table(client, "table1")
    post_study(client)
    seq = client.app.state.store.seq
    r = client.get("/api/v1/audit", params={"app": APP, "problem": PROBLEM, "from_seq": 4, "to_seq": 4})
    assert r.status_code == 200 and r.json()["findings"] == []
    for lo, hi in [(3, 2), (0, seq + 1), ("x", 1)]:
        r = client.get("/api/v1/audit", params={"app": APP, "problem": PROBLEM, "from_seq": lo, "to_seq": hi})
        assert r.status_code == 400


def test_history_and_studies(client):
    post_table(client, "table1")
    post_study(client)
    post_table(client, "table2")
    h = client.get("/api/v1/history", params={"app": APP, "problem": PROBLEM, "implementation": "Kokkos"}).json()
    assert [round(e["score"]["value"], 4) for e in h["entries"]] == [0.6111, 0.5278]
    studies = client.get("/api/v1/studies").json()
    assert [s["key"] for s in studies] == [f"{APP}/{PROBLEM}/study_local_best/arithmetic_mean"]
    assert studies[0]["error"] is None


def test_post_is_durable_before_response(tmp_path):
    client = TestClient(create_app(Store(tmp_path)))
    post_table(client, "table1")
    assert Store(tmp_path).seq == client.app.state.store.seq
