"""LLM-backed extraction of fact triples and relation chains, plus the
deterministic post-processing that makes model output usable.

The models are prompted few-shot to emit ``a->b->c`` lines. Everything after
the completion is pure string work: pick the first line carrying ``->``,
split it, drop ``?`` variable placeholders, normalize relations onto the
catalog, and fix swapped subject/object order for non-person objects.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from typing import Protocol

from .catalog import RelationCatalog, normalize_relation
from .errors import MalformedChainError, MalformedTripleError
from .graph import RelationChain
from .llm import CompletionPort, CompletionRequest

__all__ = [
    "PromptTask",
    "PromptTemplate",
    "PromptSet",
    "load_prompt_set",
    "FactTripleDraft",
    "PersonDetector",
    "LexiconPersonDetector",
    "default_person_detector",
    "parse_chain_output",
    "render_chain",
    "extract_fact_triple",
    "extract_relation_chain",
    "correct_triple_orientation",
]

logger = logging.getLogger(__name__)


class PromptTask(Enum):
    TRIPLE_EXTRACTION = "triple_extraction"
    CHAIN_EXTRACTION = "chain_extraction"
    QA = "qa"


_SHOT_PREFIXES = {
    PromptTask.TRIPLE_EXTRACTION: ("Sentence: ", "Triple: "),
    PromptTask.CHAIN_EXTRACTION: ("Question: ", "Chain: "),
    PromptTask.QA: ("Question: ", "Answer: "),
}


@dataclass(frozen=True)
class PromptTemplate:
    """Few-shot template: instruction text with ``{{...}}`` placeholders plus exemplars.

    ``{{shots}}`` expands to the exemplars formatted with the task's own
    input/output line prefixes; other placeholders are filled by ``render``.
    """

    task: PromptTask
    text: str
    shots: tuple[tuple[str, str], ...] = ()

    def render(self, **inputs: str) -> str:
        input_prefix, output_prefix = _SHOT_PREFIXES[self.task]
        shot_block = "".join(
            f"{input_prefix}{shot_in}\n{output_prefix}{shot_out}\n\n" for shot_in, shot_out in self.shots
        )
        rendered = self.text.replace("{{shots}}", shot_block)
        for key, value in inputs.items():
            rendered = rendered.replace("{{" + key + "}}", value)
        leftover = re.search(r"\{\{(\w+)\}\}", rendered)
        if leftover:
            raise KeyError(f"prompt template still has unfilled placeholder {leftover.group(1)!r}")
        return rendered


def _read_shots(package_file: str) -> tuple[tuple[str, str], ...]:
    text = (resources.files("kgqa.data.prompts") / package_file).read_text("utf-8")
    shots = []
    for raw in text.splitlines():
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        shot_in, _, shot_out = line.partition("\t")
        shots.append((shot_in, shot_out))
    return tuple(shots)


@dataclass(frozen=True)
class PromptSet:
    triple: PromptTemplate
    chain: PromptTemplate
    qa: PromptTemplate


def load_prompt_set(catalog_name: str = "mquake-cf") -> PromptSet:
    """Built-in templates. The chain template is 4-shot for mquake-cf (and any
    custom catalog) and 3-shot for mquake-t."""
    chain_stem = "chain_extraction_t" if catalog_name == "mquake-t" else "chain_extraction_cf"
    files = resources.files("kgqa.data.prompts")
    return PromptSet(
        triple=PromptTemplate(
            task=PromptTask.TRIPLE_EXTRACTION,
            text=(files / "triple_extraction.txt").read_text("utf-8"),
            shots=_read_shots("triple_extraction_shots.txt"),
        ),
        chain=PromptTemplate(
            task=PromptTask.CHAIN_EXTRACTION,
            text=(files / f"{chain_stem}.txt").read_text("utf-8"),
            shots=_read_shots(f"{chain_stem}_shots.txt"),
        ),
        qa=PromptTemplate(task=PromptTask.QA, text=(files / "qa.txt").read_text("utf-8")),
    )


@dataclass(frozen=True)
class FactTripleDraft:
    """A parsed edited-fact triple, before it is applied to the graph."""

    subject_label: str
    relation_label: str
    object_label: str
    normalized: bool = False
    orientation_corrected: bool = False


# -- person detection --------------------------------------------------------


class PersonDetector(Protocol):
    def is_person(self, label: str) -> bool: ...


_TITLES = frozenset(
    "mr mrs ms miss dr prof sir dame lord lady president king queen prince princess pope saint sultan emperor".split()
)

# Lowercase connective particles common inside person names.
_NAME_PARTICLES = frozenset(
    "van von de der den da di del della bin ibn al le la dos du ter".split()
)


class LexiconPersonDetector:
    """Heuristic person check: title prefix, or a known given name followed by
    capitalized name parts. Deliberately conservative; swap in an NER-backed
    implementation for live runs."""

    def __init__(self, given_names: frozenset[str]):
        self.given_names = given_names

    def is_person(self, label: str) -> bool:
        tokens = label.split()
        if not tokens or len(tokens) > 4:
            return False
        first = tokens[0].strip(".,").casefold()
        if first in _TITLES:
            return True
        if first not in self.given_names:
            return False
        return all(t[0].isupper() or t.casefold() in _NAME_PARTICLES for t in tokens)


def default_person_detector() -> LexiconPersonDetector:
    text = (resources.files("kgqa.data.names") / "given_names.txt").read_text("utf-8")
    names = frozenset(
        line.strip().casefold() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )
    return LexiconPersonDetector(names)


# -- parsing -----------------------------------------------------------------


def parse_chain_output(raw: str) -> tuple[str, list[str]]:
    """Parse a completion into (head entity, relation labels).

    Only the first line containing ``->`` is considered; surrounding prose is
    ignored. The first segment is the entity; later segments are relations
    unless they start with ``?`` (variable placeholders) or are blank.
    """
    line = next((candidate for candidate in raw.splitlines() if "->" in candidate), None)
    if line is None:
        raise MalformedChainError(f"no '->' line in completion: {raw[:120]!r}")
    segments = [segment.strip() for segment in line.split("->")]
    entity = segments[0]
    if not entity:
        raise MalformedChainError(f"empty entity segment in line: {line!r}")
    relations = [segment for segment in segments[1:] if segment and not segment.startswith("?")]
    return entity, relations


_RENDER_VARS = ("?x", "?y", "?z", "?m")


def render_chain(chain: RelationChain) -> str:
    """Inverse of parse_chain_output: ``head->r1->?x->r2->?y->...``."""
    parts = [chain.head_entity_label]
    for i, relation in enumerate(chain.relations):
        parts.append(relation)
        parts.append(_RENDER_VARS[i] if i < len(_RENDER_VARS) else f"?v{i + 1}")
    return "->".join(parts)


def correct_triple_orientation(draft: FactTripleDraft, detector: PersonDetector) -> FactTripleDraft:
    """Swap subject and object when the object is not a person but the subject is.

    Models sometimes emit "Richard Dawkins->author->Misery" for "the author of
    Misery is Richard Dawkins"; the person is the value there, not the owner
    of the slot. Requiring the subject to look like a person keeps correct
    triples such as (United Kingdom, capital, London) untouched. Applying the
    correction twice is the same as applying it once: after a swap the new
    subject is a non-person, so the guard fails.
    """
    if detector.is_person(draft.object_label) or not detector.is_person(draft.subject_label):
        return draft
    return replace(
        draft,
        subject_label=draft.object_label,
        object_label=draft.subject_label,
        orientation_corrected=True,
    )


# -- LLM-backed extraction -----------------------------------------------------


def _relations_line(catalog: RelationCatalog) -> str:
    return ", ".join(catalog.relations)


def extract_fact_triple(
    sentence: str,
    llm: CompletionPort,
    catalog: RelationCatalog,
    template: PromptTemplate | None = None,
    person_detector: PersonDetector | None = None,
) -> FactTripleDraft:
    """Turn one edited-fact sentence into a catalog-canonical triple draft."""
    if not sentence.strip():
        raise MalformedTripleError("edited-fact sentence is empty")
    if template is None:
        template = load_prompt_set(catalog.name).triple
    prompt = template.render(relations=_relations_line(catalog), input=sentence)
    completion = llm.complete(
        CompletionRequest(prompt=prompt, stop_sequences=("\n\n", "\nSentence:"))
    )

    line = next((candidate for candidate in completion.splitlines() if "->" in candidate), None)
    if line is None:
        raise MalformedTripleError(f"no '->' line in completion: {completion[:120]!r}")
    segments = [segment.strip() for segment in line.split("->")]
    if len(segments) != 3 or not all(segments):
        raise MalformedTripleError(f"expected subject->relation->object, got {line!r}")

    relation = normalize_relation(segments[1], catalog).label
    draft = FactTripleDraft(
        subject_label=segments[0],
        relation_label=relation,
        object_label=segments[2],
        normalized=True,
    )
    return correct_triple_orientation(draft, person_detector or default_person_detector())


def extract_relation_chain(
    question: str,
    llm: CompletionPort,
    catalog: RelationCatalog,
    template: PromptTemplate | None = None,
) -> RelationChain:
    """Turn a multi-hop question into a chain of catalog-canonical relations.

    The first parsed segment is taken as the head entity; questions that
    mention several known entities are logged and resolved the same way.
    """
    if not question.strip():
        raise MalformedChainError("question is empty")
    if template is None:
        template = load_prompt_set(catalog.name).chain
    prompt = template.render(relations=_relations_line(catalog), input=question)
    completion = llm.complete(
        CompletionRequest(prompt=prompt, stop_sequences=("\n\n", "\nQuestion:"))
    )
    entity, raw_relations = parse_chain_output(completion)
    if not raw_relations:
        raise MalformedChainError(f"chain for {question!r} has no relations: {completion[:120]!r}")
    if len(completion.splitlines()) > 1:
        logger.debug("chain completion had extra lines; kept the first '->' line: %r", completion[:200])
    relations = [normalize_relation(candidate, catalog).label for candidate in raw_relations]
    return RelationChain(head_entity_label=entity, relations=relations)
