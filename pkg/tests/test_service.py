import time
import warnings

import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore", DeprecationWarning)
    from fastapi.testclient import TestClient

from seqnovel.corpus import Corpus
from seqnovel.detector import load_detector, score
from seqnovel.service import create_app, load_config
from seqnovel.service.store import content_id


def wait_for(client, jid, timeout=120.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        job = client.get(f"/jobs/{jid}").json()
        if job["state"] in ("done", "error"):
            return job
        time.sleep(0.05)
    raise TimeoutError(f"job {jid} did not finish")


@pytest.fixture(scope="module")
def service(tmp_path_factory, train_corpus):
    root = tmp_path_factory.mktemp("service-data")
    app = create_app(str(root))
    client = TestClient(app)
    small = Corpus(train_corpus.vocabulary, train_corpus.sequences[:40])
    resp = client.post("/projects", json={"corpus": small.to_json()})
    assert resp.status_code == 200, resp.text
    pid = resp.json()["project_id"]
    job = client.post(f"/projects/{pid}/lda",
                      json={"k_values": [2], "iterations": 15, "burn_in": 3,
                            "seed": 4, "fold_iterations": 30,
                            "projection_iterations": 40}).json()
    assert wait_for(client, job["id"])["state"] == "done"
    return client, pid, root, small


def test_create_project_from_documents(service):
    client = service[0]
    docs = {"documents": [{"tokens": ["a", "b", "a"], "id": "d0"},
                          {"tokens": ["b", "c"], "label": "normal"}]}
    resp = client.post("/projects", json=docs)
    assert resp.status_code == 200
    body = resp.json()
    assert body["num_sequences"] == 2
    assert body["vocab_size"] == 6  # three reserved ids plus a, b, c
    # same payload, same project: content addressed
    again = client.post("/projects", json=docs)
    assert again.json()["project_id"] == body["project_id"]


def test_create_project_validation(service):
    client = service[0]
    assert client.post("/projects", json={}).status_code == 422
    both = {"documents": [{"tokens": ["a"]}], "corpus": {"x": 1}}
    assert client.post("/projects", json=both).status_code == 422
    bad = {"corpus": {"vocabulary": {"tokens": []},
                      "sequences": [{"id": "s", "tokens": [99]}]}}
    resp = client.post("/projects", json=bad)
    assert resp.status_code == 422
    assert "malformed corpus" in resp.json()["detail"]


def test_get_project_info(service):
    client, pid = service[:2]
    body = client.get(f"/projects/{pid}").json()
    assert body["project_id"] == pid
    assert body["num_sequences"] == 40
    assert body["has_topics"] is True
    assert client.get("/projects/nope").status_code == 404


def test_lda_without_run_spec_rejected(service):
    client, pid = service[:2]
    resp = client.post(f"/projects/{pid}/lda", json={})
    assert resp.status_code == 422


def test_topics_payload(service):
    client, pid = service[:2]
    body = client.get(f"/projects/{pid}/topics").json()
    assert set(body) >= {"coords", "glyphs", "chord", "topics", "runs",
                         "fold_iterations"}
    assert len(body["topics"]) == 2
    assert body["fold_iterations"] == 30
    assert len(body["coords"]) == 2
    assert all(len(g["words"]) == 8 for g in body["glyphs"])


def test_topics_missing_is_404(service):
    client = service[0]
    resp = client.post("/projects", json={
        "documents": [{"tokens": ["q", "q", "r"]}]})
    fresh = resp.json()["project_id"]
    assert client.get(f"/projects/{fresh}/topics").status_code == 404


def test_definition_round_trip(service):
    client, pid = service[:2]
    payload = {"name": "identity", "k": 2,
               "assignment": [{"topic_id": 0, "cluster": 0},
                              {"topic_id": 1, "cluster": 1}]}
    resp = client.post(f"/projects/{pid}/clusters", json=payload)
    assert resp.status_code == 200
    did = resp.json()["definition_id"]
    assert did in client.get(f"/projects/{pid}/clusters").json()["definitions"]
    body = client.get(f"/projects/{pid}/clusters/{did}").json()
    assert body["name"] == "identity" and body["k"] == 2
    assert client.get(f"/projects/{pid}/clusters/zzz").status_code == 404


def test_definition_totality_conflict(service):
    client, pid = service[:2]
    partial = {"name": "partial", "k": 1,
               "assignment": [{"topic_id": 0, "cluster": 0}]}
    resp = client.post(f"/projects/{pid}/clusters", json=partial)
    assert resp.status_code == 409
    detail = resp.json()["detail"]
    assert detail["missing_topic_ids"] == [1]
    assert detail["unknown_topic_ids"] == []
    stranger = {"name": "stranger", "k": 1,
                "assignment": [{"topic_id": 0, "cluster": 0},
                               {"topic_id": 1, "cluster": 0},
                               {"topic_id": 7, "cluster": 0}]}
    detail = client.post(f"/projects/{pid}/clusters", json=stranger).json()["detail"]
    assert detail["unknown_topic_ids"] == [7]


def test_definition_malformed_rejected(service):
    client, pid = service[:2]
    dup = {"name": "dup", "k": 1,
           "assignment": [{"topic_id": 0, "cluster": 0},
                          {"topic_id": 0, "cluster": 0}]}
    resp = client.post(f"/projects/{pid}/clusters", json=dup)
    assert resp.status_code == 422
    assert "assigned twice" in resp.json()["detail"]
    hollow = {"name": "hollow", "k": 2,
              "assignment": [{"topic_id": 0, "cluster": 0},
                             {"topic_id": 1, "cluster": 0}]}
    assert client.post(f"/projects/{pid}/clusters", json=hollow).status_code == 422


def test_grouping_state_round_trip(service):
    client, pid = service[:2]
    assert client.get(f"/projects/{pid}/grouping").json() == {"groups": []}
    state = {"groups": [{"name": "g1", "topic_ids": [0]}], "history": 3}
    assert client.put(f"/projects/{pid}/grouping", json=state).json() == {"ok": True}
    assert client.get(f"/projects/{pid}/grouping").json() == state


@pytest.fixture(scope="module")
def trained(service):
    client, pid = service[:2]
    glob = {"name": "all", "k": 1,
            "assignment": [{"topic_id": 0, "cluster": 0},
                           {"topic_id": 1, "cluster": 0}]}
    did = client.post(f"/projects/{pid}/clusters", json=glob).json()["definition_id"]
    body = {"definition_id": did,
            "train_config": {"epochs": 3, "batch_size": 16,
                             "learning_rate": 3e-3, "seed": 2},
            "embed_dim": 8, "hidden_dim": 12, "fold_iterations": 30,
            "fold_seed": 1}
    job = client.post(f"/projects/{pid}/train", json=body).json()
    job = wait_for(client, job["id"])
    assert job["state"] == "done", job["error"]
    assert job["progress"] == 1.0
    return job["result"]["detector_id"]


def test_train_job_reports_sizes(service, trained):
    client, pid = service[:2]
    info = client.get(f"/projects/{pid}").json()
    assert trained in info["detectors"]


def test_train_two_clusters(service):
    client, pid = service[:2]
    ident = {"name": "identity", "k": 2,
             "assignment": [{"topic_id": 0, "cluster": 0},
                            {"topic_id": 1, "cluster": 1}]}
    did = client.post(f"/projects/{pid}/clusters", json=ident).json()["definition_id"]
    body = {"definition_id": did,
            "train_config": {"epochs": 2, "batch_size": 16, "seed": 0},
            "embed_dim": 8, "hidden_dim": 12, "fold_iterations": 30}
    job = wait_for(client, client.post(f"/projects/{pid}/train", json=body).json()["id"])
    assert job["state"] == "done", job["error"]
    sizes = job["result"]["cluster_sizes"]
    assert len(sizes) == 2 and all(s > 0 for s in sizes)
    assert sum(sizes) == 40


def test_scores_match_library_exactly(service, trained):
    """HTTP scoring must round-trip to the same floats the library
    produces."""
    client, pid, root, small = service
    detector = load_detector(str(root / "detectors" / trained))
    seqs = [s.tokens for s in small.sequences[:10]]
    resp = client.post(f"/detectors/{trained}/score", json={"sequences": seqs})
    assert resp.status_code == 200
    for row, tokens in zip(resp.json()["scores"], seqs):
        cluster, pp = score(detector, tokens)
        assert row["cluster"] == cluster
        assert row["perplexity"] == pp


def test_score_accepts_word_strings(service, trained):
    client, pid, root, small = service
    words = [small.vocabulary.id_to_word[t] for t in small.sequences[0].tokens]
    resp = client.post(f"/detectors/{trained}/score",
                       json={"sequences": [words]})
    assert resp.status_code == 200
    direct = client.post(f"/detectors/{trained}/score",
                         json={"sequences": [small.sequences[0].tokens]})
    assert resp.json() == direct.json()


def test_score_rejects_bad_ids(service, trained):
    client = service[0]
    resp = client.post(f"/detectors/{trained}/score",
                       json={"sequences": [[999999]]})
    assert resp.status_code == 422
    assert client.post("/detectors/unknown/score",
                       json={"sequences": [[3]]}).status_code == 404


def test_evaluate_endpoint(service, trained):
    client, pid, root, small = service
    seqs = [{"tokens": s.tokens, "label": "normal"} for s in small.sequences[:6]]
    seqs += [{"tokens": s.tokens[::-1], "label": "novel"} for s in small.sequences[6:12]]
    resp = client.post(f"/detectors/{trained}/evaluate",
                       json={"sequences": seqs, "method": "demo"})
    assert resp.status_code == 200
    body = resp.json()
    assert body["method"] == "demo"
    assert 0.0 <= body["auc"] <= 1.0
    assert body["threshold_policy"] == "youden-test-optimistic"
    assert body["roc"][0] == [0.0, 0.0, None]
    assert body["per_cluster"]
    # the report lands in the project's eval directory
    evals = list((root / "projects" / pid / "evals").iterdir())
    assert evals


def test_evaluate_single_class_rejected(service, trained):
    client = service[0]
    seqs = [{"tokens": [3, 4], "label": "normal"}]
    resp = client.post(f"/detectors/{trained}/evaluate", json={"sequences": seqs})
    assert resp.status_code == 422


def test_job_404(service):
    client = service[0]
    assert client.get("/jobs/missing").status_code == 404


def test_job_listing_fields(service):
    client, pid = service[:2]
    job = client.post(f"/projects/{pid}/lda",
                      json={"k_values": [2], "iterations": 2, "burn_in": 0}).json()
    assert job["kind"] == "lda_ensemble"
    assert job["project_id"] == pid
    assert job["state"] in ("queued", "running", "done")
    wait_for(client, job["id"])


def test_content_id_stable():
    assert content_id({"a": 1, "b": 2}) == content_id({"b": 2, "a": 1})
    assert content_id({"a": 1}) != content_id({"a": 2})


def test_load_config_precedence(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text('{"root_dir": "/data", "port": 9000}')
    cfg = load_config(str(cfg_path))
    assert cfg.root_dir == "/data" and cfg.port == 9000
    cfg = load_config(str(cfg_path), port=9999, host=None)
    assert cfg.port == 9999
    assert cfg.host == "127.0.0.1"  # None overrides are ignored
    assert load_config(None).root_dir == "./seqnovel-data"
