"""Tests for the HTTP service endpoints and the error envelope."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from activepool.service import create_app


@pytest.fixture()
def client():
    return TestClient(create_app(), raise_server_exceptions=False)


def blob_sparse(n_per_class=15, seed=2):
    rng = np.random.default_rng(seed)
    lines = []
    for cls, shift in ((0, -2.0), (1, 2.0)):
        points = rng.normal(size=(n_per_class, 2)) + shift
        for x1, x2 in points:
            lines.append(f"{cls} 1:{float(x1)!r} 2:{float(x2)!r}")
    return "\n".join(lines) + "\n"


def run_payload(**setting_overrides):
    settings = dict(
        strategies=["proposed", "random"],
        runs=2,
        max_queries=3,
        beta=1.0,
        svm_c=10.0,
        svm_gamma=0.5,
        seed=0,
    )
    settings.update(setting_overrides)
    return {
        "dataset": {"content": blob_sparse(), "format": "sparse", "name": "blob"},
        "settings": settings,
    }


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "ok"


def test_run_endpoint_returns_all_documents(client):
    response = client.post("/experiments/run", json=run_payload())
    assert response.status_code == 200
    body = response.json()
    assert body["curves_csv"].startswith("strategy,run,iteration,accuracy")
    assert "dataset=blob" in body["summary_txt"]
    assert "wtl.proposed_vs_random=" in body["summary_txt"]
    assert body["wtl_tsv"].startswith("dataset\t")


def test_run_endpoint_is_deterministic(client):
    first = client.post("/experiments/run", json=run_payload()).json()
    second = client.post("/experiments/run", json=run_payload()).json()
    assert first == second


def test_run_single_strategy_has_no_wtl(client):
    response = client.post(
        "/experiments/run", json=run_payload(strategies=["random"])
    )
    assert response.status_code == 200
    assert response.json()["wtl_tsv"] is None


def test_run_single_run_has_no_wtl(client):
    response = client.post("/experiments/run", json=run_payload(runs=1))
    assert response.status_code == 200
    assert response.json()["wtl_tsv"] is None


def test_bench_endpoint(client):
    payload = {
        "datasets": [
            {"content": blob_sparse(seed=2), "format": "sparse", "name": "one"},
            {"content": blob_sparse(seed=5), "format": "sparse", "name": "two"},
        ],
        "settings": run_payload()["settings"],
    }
    response = client.post("/experiments/bench", json=payload)
    assert response.status_code == 200
    body = response.json()
    assert [item["name"] for item in body["results"]] == ["one", "two"]
    lines = body["wtl_tsv"].strip().splitlines()
    assert lines[0].startswith("dataset\t")
    assert {line.split("\t")[0] for line in lines[1:]} == {"one", "two"}


def test_sweep_endpoint(client):
    payload = {
        "dataset": {"content": blob_sparse(), "format": "sparse", "name": "blob"},
        "settings": dict(run_payload()["settings"], strategies=["proposed"]),
        "betas": [0.0, 100.0],
    }
    response = client.post("/experiments/sweep", json=payload)
    assert response.status_code == 200
    sweep_csv = response.json()["sweep_csv"]
    assert sweep_csv.startswith("beta,iteration,mean_accuracy")
    betas = {line.split(",")[0] for line in sweep_csv.strip().splitlines()[1:]}
    assert betas == {"0.0", "100.0"}


def test_ttest_endpoint(client):
    run_body = client.post("/experiments/run", json=run_payload()).json()
    payload = {
        "curves": [{"name": "blob", "content": run_body["curves_csv"]}],
        "reference": "proposed",
    }
    response = client.post("/analysis/ttest", json=payload)
    assert response.status_code == 200
    assert response.json()["wtl_tsv"] == run_body["wtl_tsv"]


def test_convert_round_trip(client):
    sparse = blob_sparse(n_per_class=4)
    to_csv = client.post(
        "/datasets/convert",
        json={"dataset": {"content": sparse, "format": "sparse"}},
    )
    assert to_csv.status_code == 200
    assert to_csv.json()["format"] == "csv"
    back = client.post(
        "/datasets/convert",
        json={"dataset": {"content": to_csv.json()["content"], "format": "csv"}},
    )
    assert back.status_code == 200
    assert back.json()["format"] == "sparse"
    assert back.json()["content"] == sparse


def test_usage_error_envelope(client):
    response = client.post(
        "/experiments/run", json=run_payload(strategies=["bogus"])
    )
    assert response.status_code == 400
    body = response.json()
    assert body["kind"] == "usage"
    assert "bogus" in body["message"]


def test_data_error_envelope(client):
    payload = run_payload()
    payload["dataset"]["content"] = "0 1:1.0\n1 broken\n"
    response = client.post("/experiments/run", json=payload)
    assert response.status_code == 422
    body = response.json()
    assert body["kind"] == "data"
    assert "line 2" in body["message"]


def test_validation_error_uses_usage_envelope(client):
    response = client.post("/experiments/run", json={"settings": {}})
    assert response.status_code == 400
    assert response.json()["kind"] == "usage"


def test_unknown_session_is_usage_error(client):
    response = client.get("/sessions/nope")
    assert response.status_code == 400
    assert response.json()["kind"] == "usage"


def test_session_flow(client):
    create = client.post(
        "/sessions",
        json={
            "dataset": {"content": blob_sparse(), "format": "sparse", "name": "blob"},
            "svm_c": 10.0,
            "svm_gamma": 0.5,
            "seed": 1,
        },
    )
    assert create.status_code == 200
    state = create.json()
    session_id = state["id"]
    assert state["iteration"] == 0
    assert len(state["labeled"]) == 2  # one seed label per class
    assert state["unlabeled_count"] == state["n_samples"] - 2

    query = client.post(f"/sessions/{session_id}/query", json={"strategy": "proposed"})
    assert query.status_code == 200
    index = query.json()["index"]
    assert index not in state["labeled"]

    labeled = client.post(
        f"/sessions/{session_id}/labels", json={"index": index, "label": 0}
    )
    assert labeled.status_code == 200
    assert labeled.json()["iteration"] == 1
    assert index in labeled.json()["labeled"]

    listing = client.get("/sessions")
    assert [s["id"] for s in listing.json()] == [session_id]

    deleted = client.delete(f"/sessions/{session_id}")
    assert deleted.status_code == 200
    assert client.get(f"/sessions/{session_id}").status_code == 400


def test_session_without_seed_labels_requires_two_classes(client):
    create = client.post(
        "/sessions",
        json={
            "dataset": {"content": blob_sparse(), "format": "sparse"},
            "seed_one_per_class": False,
        },
    )
    session_id = create.json()["id"]
    assert create.json()["labeled"] == []
    # model-based queries need two labeled classes first
    response = client.post(f"/sessions/{session_id}/query", json={"strategy": "proposed"})
    assert response.status_code == 400
    assert response.json()["kind"] == "usage"
    # random works immediately and labeling unlocks the rest
    random_query = client.post(f"/sessions/{session_id}/query", json={"strategy": "random"})
    assert random_query.status_code == 200
