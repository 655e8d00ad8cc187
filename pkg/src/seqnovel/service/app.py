"""HTTP API over the pipeline: project intake, topic ensembles, cluster
definitions, asynchronous training jobs, scoring and evaluation, plus static
serving of the built exploration UI."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace as dc_replace

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles

from ..corpus import Corpus, Label, LabeledSequence, build_vocabulary, encode
from ..clustering import ClusterDefinition, projection_payload
from ..detector import evaluate as evaluate_scores
from ..detector import score as score_sequence
from ..lda import run_ensemble
from ..lstm import TrainConfig
from .. import detector as detector_mod
from .schemas import (ClusterDefinitionIn, CorpusUpload, EnsembleParams,
                      EvaluateRequest, JobOut, ProjectOut, ScoreRequest,
                      TrainRequest)
from .store import Job, NotFound, ProjectStore, content_id


@dataclass
class ServiceConfig:
    root_dir: str = "./seqnovel-data"
    ui_dir: str | None = None
    host: str = "127.0.0.1"
    port: int = 8000


def load_config(path: str | None = None, **overrides) -> ServiceConfig:
    """Read a JSON or TOML config file; keyword overrides win. The port may
    additionally be overridden by the SEQNOVEL_PORT environment variable
    (handled by the serve command)."""
    data: dict = {}
    if path:
        if path.endswith(".toml"):
            try:
                import tomllib
            except ImportError:
                try:
                    import tomli as tomllib  # type: ignore
                except ImportError:
                    raise RuntimeError(
                        "TOML config needs Python 3.11+ or the tomli package; "
                        "use a .json config instead")
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        else:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
    cfg = ServiceConfig(**data)
    clean = {k: v for k, v in overrides.items() if v is not None}
    return dc_replace(cfg, **clean) if clean else cfg


def _corpus_from_upload(body: CorpusUpload) -> Corpus:
    if (body.documents is None) == (body.corpus is None):
        raise HTTPException(422, "provide exactly one of documents or corpus")
    try:
        if body.corpus is not None:
            return Corpus.from_json(body.corpus)
        raw = [d.tokens for d in body.documents]
        vocab = build_vocabulary(raw, min_frequency=body.min_frequency)
        sequences = []
        for i, doc in enumerate(body.documents):
            sequences.append(LabeledSequence(
                id=doc.id or f"doc-{i}",
                tokens=encode(doc.tokens, vocab),
                label=Label(doc.label),
            ))
        return Corpus(sequences=sequences, vocabulary=vocab)
    except (ValueError, KeyError, TypeError) as exc:
        raise HTTPException(422, f"malformed corpus: {exc}")


def _encode_tokens(tokens, vocabulary) -> list[int]:
    if all(isinstance(t, int) for t in tokens):
        return list(tokens)
    return encode([str(t) for t in tokens], vocabulary)


def create_app(root_dir: str, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="seqnovel", version="0.1.0")
    store = ProjectStore(root_dir)
    app.state.store = store

    @app.exception_handler(NotFound)
    async def _not_found(request, exc: NotFound):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=404, content={"detail": str(exc.args[0])})

    # -- projects --------------------------------------------------------
    @app.post("/projects", response_model=ProjectOut)
    def create_project(body: CorpusUpload):
        corpus = _corpus_from_upload(body)
        pid = store.create_project(corpus)
        return store.project_info(pid)

    @app.get("/projects/{pid}", response_model=ProjectOut)
    def get_project(pid: str):
        return store.project_info(pid)

    # -- topic modeling ----------------------------------------------------
    @app.post("/projects/{pid}/lda", response_model=JobOut)
    def submit_lda(pid: str, params: EnsembleParams):
        store.project_info(pid)
        if params.k_values is None and params.num_runs is None:
            raise HTTPException(422, "provide k_values or num_runs")

        def fn(job: Job) -> dict:
            corpus = store.load_corpus(pid)
            topic_set = run_ensemble(
                corpus, params.k_values, num_runs=params.num_runs,
                k_min=params.k_min, k_max=params.k_max, alpha=params.alpha,
                beta=params.beta, iterations=params.iterations,
                burn_in=params.burn_in, seed=params.seed, corpus_hash=pid,
                progress=lambda done, total: store.update_job(
                    job, progress=0.9 * done / total))
            payload = projection_payload(
                topic_set, corpus.vocabulary,
                top_words=params.projection_top_words,
                word_classes=params.word_classes,
                perplexity=params.projection_perplexity,
                iterations=params.projection_iterations,
                seed=params.seed)
            payload["fold_iterations"] = params.fold_iterations
            store.save_topicset(pid, topic_set, payload)
            return {"num_topics": topic_set.num_topics,
                    "k_values": [r.num_topics for r in topic_set.runs]}

        return store.submit_job(pid, "lda_ensemble", fn).to_json()

    @app.get("/projects/{pid}/topics")
    def get_topics(pid: str):
        return store.load_projection(pid)

    # -- cluster definitions -----------------------------------------------
    @app.post("/projects/{pid}/clusters")
    def post_definition(pid: str, body: ClusterDefinitionIn):
        topic_set = store.load_topicset(pid)
        seen = set()
        for entry in body.assignment:
            if entry.topic_id in seen:
                raise HTTPException(422, f"topic id {entry.topic_id} assigned twice")
            seen.add(entry.topic_id)
        try:
            definition = ClusterDefinition(
                name=body.name, k=body.k,
                assignment={e.topic_id: e.cluster for e in body.assignment})
        except ValueError as exc:
            raise HTTPException(422, str(exc))
        missing = definition.missing_topic_ids(topic_set)
        extra = definition.extra_topic_ids(topic_set)
        if missing or extra:
            raise HTTPException(409, detail={
                "message": "cluster definition not total over the topic set",
                "missing_topic_ids": missing,
                "unknown_topic_ids": extra,
            })
        return {"definition_id": store.add_definition(pid, definition)}

    @app.get("/projects/{pid}/clusters")
    def list_definitions(pid: str):
        return {"definitions": store.list_definitions(pid)}

    @app.get("/projects/{pid}/clusters/{did}")
    def get_definition(pid: str, did: str):
        return store.get_definition(pid, did).to_json()

    # -- UI grouping state ---------------------------------------------------
    @app.get("/projects/{pid}/grouping")
    def get_grouping(pid: str):
        return store.load_grouping(pid)

    @app.put("/projects/{pid}/grouping")
    def put_grouping(pid: str, body: dict):
        store.save_grouping(pid, body)
        return {"ok": True}

    # -- training ------------------------------------------------------------
    @app.post("/projects/{pid}/train", response_model=JobOut)
    def submit_train(pid: str, body: TrainRequest):
        definition = store.get_definition(pid, body.definition_id)
        store.load_topicset(pid)
        cfg = TrainConfig(**body.train_config.model_dump())

        def fn(job: Job) -> dict:
            corpus = store.load_corpus(pid)
            topic_set = store.load_topicset(pid)
            k = definition.k
            epochs = cfg.epochs

            def prog(c, e, total, loss):
                store.update_job(job, progress=0.95 * (c * epochs + e) / (k * epochs))

            detector = detector_mod.train_detector(
                corpus, topic_set, definition, cfg,
                embed_dim=body.embed_dim, hidden_dim=body.hidden_dim,
                fold_iterations=body.fold_iterations, fold_seed=body.fold_seed,
                progress=prog)
            did = store.register_detector(pid, detector)
            return {"detector_id": did, "definition_id": body.definition_id,
                    "cluster_sizes": [len(ids) for ids in
                                      detector_mod.partition_corpus(
                                          corpus, topic_set, definition).subsets]}

        return store.submit_job(pid, "train_detector", fn).to_json()

    # -- scoring and evaluation ------------------------------------------------
    def _detector_and_vocab(did: str):
        pid = store.detector_project(did)
        detector = store.get_detector(did)
        corpus = store.load_corpus(pid)
        return pid, detector, corpus.vocabulary

    @app.post("/detectors/{did}/score")
    def score_endpoint(did: str, body: ScoreRequest):
        _, detector, vocab = _detector_and_vocab(did)
        out = []
        try:
            for tokens in body.sequences:
                cluster, pp = score_sequence(detector, _encode_tokens(tokens, vocab))
                out.append({"cluster": cluster, "perplexity": pp})
        except ValueError as exc:
            raise HTTPException(422, str(exc))
        return {"scores": out}

    @app.post("/detectors/{did}/evaluate")
    def evaluate_endpoint(did: str, body: EvaluateRequest):
        pid, detector, vocab = _detector_and_vocab(did)
        try:
            pairs = []
            clusters = []
            for item in body.sequences:
                cluster, pp = score_sequence(detector, _encode_tokens(item.tokens, vocab))
                pairs.append((pp, Label(item.label)))
                clusters.append(cluster)
            validation_pairs = None
            if body.validation is not None:
                validation_pairs = []
                for item in body.validation:
                    _, pp = score_sequence(detector, _encode_tokens(item.tokens, vocab))
                    validation_pairs.append((pp, Label(item.label)))
            report = evaluate_scores(pairs, validation_pairs=validation_pairs,
                                     clusters=clusters, method=body.method)
        except ValueError as exc:
            raise HTTPException(422, str(exc))
        payload = report.to_json()
        store.save_eval(pid, content_id({"detector": did, "request": body.model_dump()}),
                        payload)
        return payload

    # -- jobs -------------------------------------------------------------------
    @app.get("/jobs/{jid}", response_model=JobOut)
    def get_job(jid: str):
        return store.get_job(jid).to_json()

    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
