"""Disk-backed project state and background jobs.

Everything lives under one root directory as plain JSON plus detector
bundles, so project state is diffable and portable. Ids are content hashes,
which makes resource creation idempotent. Jobs run on one worker thread per
project; results are written to a temp path and renamed into place.
"""
from __future__ import annotations

import hashlib
import json
import os
import queue
import shutil
import tempfile
import threading
import uuid
from dataclasses import dataclass, field
from typing import Callable

from ..corpus import Corpus
from ..clustering import ClusterDefinition
from ..detector import NoveltyDetector, canonical_json, load_detector, save_detector
from ..lda import TopicSet, load_topicset


def content_id(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()[:12]


def atomic_write_json(path: str, obj) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
    os.replace(tmp, path)


@dataclass
class Job:
    id: str
    kind: str
    project_id: str
    state: str = "queued"       # queued | running | done | failed
    progress: float = 0.0
    error: str | None = None
    result: dict | None = None

    def to_json(self) -> dict:
        return {"id": self.id, "kind": self.kind, "project_id": self.project_id,
                "state": self.state, "progress": self.progress,
                "error": self.error, "result": self.result}


class NotFound(KeyError):
    pass


class ProjectStore:
    def __init__(self, root: str):
        self.root = root
        os.makedirs(os.path.join(root, "projects"), exist_ok=True)
        os.makedirs(os.path.join(root, "jobs"), exist_ok=True)
        os.makedirs(os.path.join(root, "detectors"), exist_ok=True)
        self._lock = threading.RLock()
        self._jobs: dict[str, Job] = {}
        self._workers: dict[str, queue.Queue] = {}
        self._detector_cache: dict[str, NoveltyDetector] = {}

    # -- paths ---------------------------------------------------------
    def _project_dir(self, pid: str) -> str:
        return os.path.join(self.root, "projects", pid)

    def _require_project(self, pid: str) -> str:
        path = self._project_dir(pid)
        if not os.path.isdir(path):
            raise NotFound(f"project {pid}")
        return path

    def _detector_dir(self, did: str) -> str:
        return os.path.join(self.root, "detectors", did)

    # -- projects ------------------------------------------------------
    def create_project(self, corpus: Corpus) -> str:
        obj = corpus.to_json()
        pid = content_id(obj)
        with self._lock:
            pdir = self._project_dir(pid)
            if not os.path.isdir(pdir):
                os.makedirs(os.path.join(pdir, "definitions"), exist_ok=True)
                os.makedirs(os.path.join(pdir, "evals"), exist_ok=True)
                atomic_write_json(os.path.join(pdir, "corpus.json"), obj)
                atomic_write_json(os.path.join(pdir, "project.json"),
                                  {"id": pid, "detectors": []})
        return pid

    def project_info(self, pid: str) -> dict:
        pdir = self._require_project(pid)
        with open(os.path.join(pdir, "project.json"), encoding="utf-8") as fh:
            meta = json.load(fh)
        corpus = self.load_corpus(pid)
        return {
            "project_id": pid,
            "num_sequences": len(corpus),
            "vocab_size": len(corpus.vocabulary),
            "has_topics": os.path.exists(os.path.join(pdir, "topicset.json")),
            "definitions": self.list_definitions(pid),
            "detectors": meta.get("detectors", []),
        }

    def load_corpus(self, pid: str) -> Corpus:
        pdir = self._require_project(pid)
        with open(os.path.join(pdir, "corpus.json"), encoding="utf-8") as fh:
            return Corpus.from_json(json.load(fh))

    # -- topic data ------------------------------------------------------
    def save_topicset(self, pid: str, topic_set: TopicSet, projection: dict) -> None:
        pdir = self._require_project(pid)
        atomic_write_json(os.path.join(pdir, "topicset.json"), topic_set.to_json())
        atomic_write_json(os.path.join(pdir, "projection.json"), projection)

    def load_topicset(self, pid: str) -> TopicSet:
        pdir = self._require_project(pid)
        path = os.path.join(pdir, "topicset.json")
        if not os.path.exists(path):
            raise NotFound(f"project {pid} has no topic set yet")
        return load_topicset(path)

    def load_projection(self, pid: str) -> dict:
        pdir = self._require_project(pid)
        path = os.path.join(pdir, "projection.json")
        if not os.path.exists(path):
            raise NotFound(f"project {pid} has no topic projection yet")
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)

    # -- cluster definitions ---------------------------------------------
    def add_definition(self, pid: str, definition: ClusterDefinition) -> str:
        pdir = self._require_project(pid)
        obj = definition.to_json()
        did = content_id(obj)
        atomic_write_json(os.path.join(pdir, "definitions", did + ".json"), obj)
        return did

    def get_definition(self, pid: str, did: str) -> ClusterDefinition:
        pdir = self._require_project(pid)
        path = os.path.join(pdir, "definitions", did + ".json")
        if not os.path.exists(path):
            raise NotFound(f"definition {did}")
        with open(path, encoding="utf-8") as fh:
            return ClusterDefinition.from_json(json.load(fh))

    def list_definitions(self, pid: str) -> list[str]:
        pdir = self._require_project(pid)
        names = os.listdir(os.path.join(pdir, "definitions"))
        return sorted(n[:-5] for n in names if n.endswith(".json"))

    # -- UI grouping state -------------------------------------------------
    def save_grouping(self, pid: str, obj: dict) -> None:
        pdir = self._require_project(pid)
        atomic_write_json(os.path.join(pdir, "grouping.json"), obj)

    def load_grouping(self, pid: str) -> dict:
        pdir = self._require_project(pid)
        path = os.path.join(pdir, "grouping.json")
        if not os.path.exists(path):
            return {"groups": []}
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)

    # -- detectors ---------------------------------------------------------
    def register_detector(self, pid: str, detector: NoveltyDetector) -> str:
        """Persist a bundle under a content id derived from its manifest.
        Written to a temp dir first, then renamed into place."""
        pdir = self._require_project(pid)
        tmp = tempfile.mkdtemp(dir=os.path.join(self.root, "detectors"))
        try:
            manifest_hash = save_detector(detector, tmp)
            did = manifest_hash[:12]
            final = self._detector_dir(did)
            with self._lock:
                if os.path.isdir(final):
                    shutil.rmtree(tmp)
                else:
                    os.replace(tmp, final)
        except BaseException:
            shutil.rmtree(tmp, ignore_errors=True)
            raise
        with self._lock:
            meta_path = os.path.join(pdir, "project.json")
            with open(meta_path, encoding="utf-8") as fh:
                meta = json.load(fh)
            if did not in meta["detectors"]:
                meta["detectors"].append(did)
                atomic_write_json(meta_path, meta)
            index_path = os.path.join(self.root, "detectors", "index.json")
            index = {}
            if os.path.exists(index_path):
                with open(index_path, encoding="utf-8") as fh:
                    index = json.load(fh)
            index[did] = pid
            atomic_write_json(index_path, index)
        return did

    def detector_project(self, did: str) -> str:
        index_path = os.path.join(self.root, "detectors", "index.json")
        if os.path.exists(index_path):
            with open(index_path, encoding="utf-8") as fh:
                index = json.load(fh)
            if did in index:
                return index[did]
        raise NotFound(f"detector {did}")

    def get_detector(self, did: str) -> NoveltyDetector:
        with self._lock:
            cached = self._detector_cache.get(did)
        if cached is not None:
            return cached
        path = self._detector_dir(did)
        if not os.path.isdir(path):
            raise NotFound(f"detector {did}")
        detector = load_detector(path)
        with self._lock:
            self._detector_cache[did] = detector
        return detector

    def save_eval(self, pid: str, key: str, report: dict) -> None:
        pdir = self._require_project(pid)
        atomic_write_json(os.path.join(pdir, "evals", key + ".json"), report)

    # -- jobs --------------------------------------------------------------
    def _job_path(self, jid: str) -> str:
        return os.path.join(self.root, "jobs", jid + ".json")

    def _persist_job(self, job: Job) -> None:
        atomic_write_json(self._job_path(job.id), job.to_json())

    def update_job(self, job: Job, **changes) -> None:
        with self._lock:
            if job.state in ("done", "failed") and changes.get("state") not in (None, job.state):
                raise ValueError("terminal job state is immutable")
            for key, value in changes.items():
                setattr(job, key, value)
            self._persist_job(job)

    def get_job(self, jid: str) -> Job:
        with self._lock:
            if jid in self._jobs:
                return self._jobs[jid]
        path = self._job_path(jid)
        if not os.path.exists(path):
            raise NotFound(f"job {jid}")
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        return Job(**obj)

    def _worker_loop(self, q: queue.Queue) -> None:
        while True:
            job, fn = q.get()
            self.update_job(job, state="running")
            try:
                result = fn(job)
                self.update_job(job, state="done", progress=1.0, result=result)
            except Exception as exc:
                self.update_job(job, state="failed", error=str(exc))

    def submit_job(self, pid: str, kind: str,
                   fn: Callable[[Job], dict]) -> Job:
        """Queue fn on the project's worker thread. fn receives the job (for
        progress updates) and returns the result dict."""
        self._require_project(pid)
        job = Job(id=uuid.uuid4().hex[:12], kind=kind, project_id=pid)
        with self._lock:
            self._jobs[job.id] = job
            self._persist_job(job)
            if pid not in self._workers:
                q: queue.Queue = queue.Queue()
                self._workers[pid] = q
                threading.Thread(target=self._worker_loop, args=(q,),
                                 daemon=True).start()
            self._workers[pid].put((job, fn))
        return job
