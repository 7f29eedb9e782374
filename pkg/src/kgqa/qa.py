"""Retrieval-augmented answering over the edited-fact memory.

Edited facts are kept verbatim as sentences. For each question the top-x
most similar facts go into the prompt, because at large edit volumes the
model cannot be shown everything.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .catalog import token_jaccard
from .embeddings import EmbeddingProvider
from .errors import EmptyMemoryError
from .extraction import PromptTemplate, load_prompt_set
from .llm import CompletionPort, CompletionRequest

__all__ = ["FactMemory", "RetrieverConfig", "retrieve_top_x", "answer_question", "extract_answer_line"]

_ANSWER_MARKER = "Answer:"
_STRIP_CHARS = " \t\"'"
_TERMINAL_PUNCTUATION = ".,;:!?"


@dataclass
class FactMemory:
    """Ordered, duplicate-free store of edited-fact sentences.

    When a provider is attached, fact vectors are built lazily and kept
    unit-norm; adding a fact invalidates the cache so vectors always cover
    every stored fact.
    """

    provider: EmbeddingProvider | None = None
    facts: list[str] = field(default_factory=list)
    _vectors: np.ndarray | None = field(default=None, repr=False)
    _seen: set[str] = field(default_factory=set, repr=False)

    def add(self, fact: str) -> None:
        if fact in self._seen:
            return
        self._seen.add(fact)
        self.facts.append(fact)
        self._vectors = None

    def extend(self, facts) -> None:
        for fact in facts:
            self.add(fact)

    def __len__(self) -> int:
        return len(self.facts)

    def vectors(self) -> np.ndarray | None:
        if self.provider is None or not self.facts:
            return None
        if self._vectors is None or self._vectors.shape[0] != len(self.facts):
            raw = np.asarray(self.provider.embed(self.facts), dtype=np.float64)
            norms = np.linalg.norm(raw, axis=1, keepdims=True)
            norms[norms == 0.0] = 1.0
            self._vectors = raw / norms
        return self._vectors


@dataclass(frozen=True)
class RetrieverConfig:
    """How many facts make it into the QA prompt."""

    top_x: int = 6

    def __post_init__(self):
        if self.top_x < 1:
            raise ValueError("top_x must be >= 1")

    @classmethod
    def for_catalog(cls, catalog_name: str) -> "RetrieverConfig":
        # Tuned retrieval widths: 6 facts for counterfactual-style data,
        # 1 for temporal data where each instance carries a single edit.
        return cls(top_x=1 if catalog_name == "mquake-t" else 6)


def retrieve_top_x(question: str, mem: FactMemory, cfg: RetrieverConfig) -> list[str]:
    """The min(top_x, |mem|) facts most similar to the question, best first.

    Cosine over provider embeddings when available, token Jaccard otherwise.
    Ties prefer an exact string match, then insertion order, so a stored
    fact always retrieves itself at rank 1 under either backend.
    """
    if not mem.facts:
        raise EmptyMemoryError("fact memory is empty")
    vectors = mem.vectors()
    if vectors is not None:
        query = np.asarray(mem.provider.embed([question]), dtype=np.float64)[0]
        norm = np.linalg.norm(query)
        if norm > 0.0:
            query = query / norm
        scores = vectors @ query
    else:
        scores = np.array([token_jaccard(question, fact) for fact in mem.facts])

    order = sorted(
        range(len(mem.facts)),
        key=lambda i: (-scores[i], mem.facts[i] != question, i),
    )
    return [mem.facts[i] for i in order[: min(cfg.top_x, len(mem.facts))]]


def extract_answer_line(completion: str) -> str | None:
    """Pull the answer text out of a completion.

    Takes the first non-empty line after the literal "Answer:" marker, or
    the completion's first non-empty line when no marker is present; trims
    quotes and terminal punctuation. None when nothing usable remains.
    """
    marker_at = completion.find(_ANSWER_MARKER)
    candidate_text = completion[marker_at + len(_ANSWER_MARKER) :] if marker_at != -1 else completion
    for line in candidate_text.splitlines():
        cleaned = line.strip(_STRIP_CHARS)
        while cleaned and cleaned[-1] in _TERMINAL_PUNCTUATION:
            cleaned = cleaned[:-1].rstrip(_STRIP_CHARS)
        if cleaned:
            return cleaned
    return None


def answer_question(
    question: str,
    facts: list[str],
    llm: CompletionPort,
    template: PromptTemplate | None = None,
) -> str | None:
    """Prompt the model with the retrieved facts and the question.

    Returns the extracted answer string, or None when the completion holds
    no usable answer. The model's answer is reported as-is; judging it
    against the graph happens downstream.
    """
    if template is None:
        template = load_prompt_set().qa
    facts_block = "\n".join(f"- {fact}" for fact in facts) if facts else "- (none)"
    prompt = template.render(facts=facts_block, question=question)
    completion = llm.complete(
        CompletionRequest(prompt=prompt, stop_sequences=("\n\n", "\nQuestion:"))
    )
    return extract_answer_line(completion)
