"""Compile relation chains into formal path queries and execute them.

Local execution walks the in-memory graph directly. The compiled text form
exists for inspection and for the optional remote endpoint path; both give
the same single-answer (LIMIT 1) semantics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import requests

from .errors import EmptyChainError, MalformedResponseError, TransportError
from .graph import KnowledgeGraph, RelationChain

__all__ = ["CompiledQuery", "IdResolver", "build_query", "execute_local", "execute_remote"]

_PREFIX_BLOCK = "PREFIX ent: <http://www.kg/entity/>\nPREFIX rel: <http://www.kg/relation/>"
# Intermediate variable names for hops 1..3; later hops continue as ?v5, ?v6, ...
_HOP_VARS = ("?x", "?y", "?z")


class IdResolver(Protocol):
    def resolve_entity_id(self, label: str) -> str: ...

    def resolve_relation_id(self, label: str) -> str: ...


@dataclass(frozen=True)
class CompiledQuery:
    text: str
    variable_names: tuple[str, ...]
    hop_count: int


def _hop_variables(hop_count: int) -> list[str]:
    names = []
    for i in range(hop_count - 1):
        names.append(_HOP_VARS[i] if i < len(_HOP_VARS) else f"?v{i + 2}")
    return names


def build_query(chain: RelationChain, id_resolver: IdResolver) -> CompiledQuery:
    """Fill the formal query template with the chain's entity and relation ids.

    One triple pattern per hop threads the intermediate variables in order,
    the last hop binds ?id, a label pattern binds ?label, and LIMIT 1 keeps
    the single-answer semantics of the local walk.
    """
    if not chain.relations:
        raise EmptyChainError("relation chain has no relations")
    head_id = id_resolver.resolve_entity_id(chain.head_entity_label)
    relation_ids = [id_resolver.resolve_relation_id(label) for label in chain.relations]

    intermediates = _hop_variables(len(relation_ids))
    subjects = [f"ent:{head_id}"] + intermediates
    objects = intermediates + ["?id"]

    lines = [_PREFIX_BLOCK, "SELECT DISTINCT ?id ?label WHERE {"]
    for subject, rid, obj in zip(subjects, relation_ids, objects):
        lines.append(f"   {subject} rel:{rid} {obj}.")
    lines.append("   ?id rdfs:label ?label.")
    lines.append("}")
    lines.append("LIMIT 1")
    return CompiledQuery(
        text="\n".join(lines),
        variable_names=tuple(intermediates) + ("?id", "?label"),
        hop_count=len(relation_ids),
    )


def execute_local(chain: RelationChain, g: KnowledgeGraph) -> tuple[str, str] | None:
    """Walk the chain over the graph; (entity id, label) or None when any hop is empty."""
    terminal = g.chain_query(chain)
    if terminal is None:
        return None
    return terminal.id, terminal.label


def execute_remote(
    q: CompiledQuery,
    endpoint_url: str,
    timeout: float = 30.0,
    session: requests.Session | None = None,
) -> tuple[str, str] | None:
    """POST the compiled query to a SPARQL endpoint and return the first binding.

    Zero bindings map to None (absence is a value); transport and payload
    problems raise instead of being silently treated as no answer.
    """
    session = session or requests.Session()
    try:
        response = session.post(
            endpoint_url,
            data=q.text.encode("utf-8"),
            headers={
                "Content-Type": "application/sparql-query",
                "Accept": "application/sparql-results+json",
            },
            timeout=timeout,
        )
    except requests.RequestException as exc:
        raise TransportError(f"query endpoint unreachable: {exc}") from exc
    if response.status_code != 200:
        raise TransportError(f"query endpoint returned HTTP {response.status_code}")
    try:
        payload = response.json()
        bindings = payload["results"]["bindings"]
    except (ValueError, KeyError, TypeError) as exc:
        raise MalformedResponseError(f"not a SPARQL results payload: {exc!r}") from exc
    if not bindings:
        return None
    first = bindings[0]
    try:
        return first["id"]["value"], first["label"]["value"]
    except (KeyError, TypeError) as exc:
        raise MalformedResponseError(f"binding missing id/label values: {first!r}") from exc
