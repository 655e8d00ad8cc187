"""Request and response shapes for the HTTP API."""
from __future__ import annotations

from pydantic import BaseModel, Field

TokenSeq = list[int] | list[str]


class DocumentIn(BaseModel):
    id: str | None = None
    tokens: list[str] = Field(min_length=1)
    label: str = "unlabeled"


class CorpusUpload(BaseModel):
    """Either raw documents (a vocabulary gets built server-side) or an
    already-encoded corpus object as produced by the library."""
    documents: list[DocumentIn] | None = None
    corpus: dict | None = None
    min_frequency: int = 1


class ProjectOut(BaseModel):
    project_id: str
    num_sequences: int
    vocab_size: int
    has_topics: bool = False
    definitions: list[str] = []
    detectors: list[str] = []


class EnsembleParams(BaseModel):
    k_values: list[int] | None = None
    num_runs: int | None = None
    k_min: int = 2
    k_max: int = 10
    alpha: float | None = None
    beta: float = 0.01
    iterations: int = 200
    burn_in: int = 50
    seed: int = 0
    fold_iterations: int = 100
    projection_top_words: int = 8
    projection_perplexity: float = 5.0
    projection_iterations: int = 500
    word_classes: dict[str, str] | None = None


class AssignmentEntry(BaseModel):
    topic_id: int
    cluster: int


class ClusterDefinitionIn(BaseModel):
    name: str
    k: int
    assignment: list[AssignmentEntry]


class TrainConfigIn(BaseModel):
    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_norm: float = 5.0
    max_len: int = 200
    seed: int = 0


class TrainRequest(BaseModel):
    definition_id: str
    train_config: TrainConfigIn = TrainConfigIn()
    embed_dim: int = 32
    hidden_dim: int = 64
    fold_iterations: int = 100
    fold_seed: int = 0


class ScoreRequest(BaseModel):
    sequences: list[TokenSeq] = Field(min_length=1)


class ScoreOut(BaseModel):
    cluster: int
    perplexity: float


class LabeledSeqIn(BaseModel):
    tokens: TokenSeq = Field(min_length=1)
    label: str


class EvaluateRequest(BaseModel):
    sequences: list[LabeledSeqIn] = Field(min_length=1)
    validation: list[LabeledSeqIn] | None = None
    method: str = "detector"


class JobOut(BaseModel):
    id: str
    kind: str
    project_id: str
    state: str
    progress: float
    error: str | None = None
    result: dict | None = None
