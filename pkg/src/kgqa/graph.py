"""Edit-aware in-memory knowledge graph.

The graph stores (subject, relation, object) triples indexed by
``(subject_id, relation_id)``. Base facts may be multi-valued; applying an
edit makes the touched slot functional (exactly one object). Path queries
walk the graph greedily, taking the first object at every hop, which mirrors
a LIMIT-1 query against the same data.

Concurrency contract: ``apply_edit``/``assert_triple``/``upsert_entity``
require exclusive access; ``objects_of``/``chain_query`` are read-only and
may run concurrently between writes. Instances are plain data and can be
handed across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

from .catalog import RelationCatalog
from .errors import (
    EmptyLabelError,
    LabelCollisionError,
    UnknownRelationError,
    UnresolvableEntityError,
)

__all__ = [
    "EntityRef",
    "RelationRef",
    "Provenance",
    "Triple",
    "EditRecord",
    "RelationChain",
    "KnowledgeGraph",
]


@dataclass(frozen=True, slots=True)
class EntityRef:
    """A graph node: opaque unique id plus human-readable label."""

    id: str
    label: str


@dataclass(frozen=True, slots=True)
class RelationRef:
    """A relation: opaque unique id plus its canonical catalog label."""

    id: str
    label: str


class Provenance(Enum):
    BASE = "base"
    EDITED = "edited"


@dataclass(frozen=True, slots=True)
class Triple:
    subject: EntityRef
    relation: RelationRef
    object: EntityRef
    provenance: Provenance = Provenance.BASE


@dataclass(frozen=True, slots=True)
class EditRecord:
    """What a single accepted edit did: which objects it displaced and what replaced them."""

    subject: EntityRef
    relation: RelationRef
    removed: tuple[EntityRef, ...]
    new_object: EntityRef


@dataclass(frozen=True)
class RelationChain:
    """One known head entity plus the ordered relations leading to the answer.

    Intermediate entities are unknowns resolved at query time. Hop count is
    ``len(relations)``.
    """

    head_entity_label: str
    relations: tuple[str, ...]

    def __init__(self, head_entity_label: str, relations) -> None:
        object.__setattr__(self, "head_entity_label", head_entity_label)
        object.__setattr__(self, "relations", tuple(relations))
        if not self.head_entity_label.strip():
            raise EmptyLabelError("relation chain needs a non-empty head entity")
        if not self.relations:
            raise ValueError("relation chain needs at least one relation")

    def __len__(self) -> int:
        return len(self.relations)


class KnowledgeGraph:
    """Label-indexed entity set plus adjacency keyed by (subject, relation).

    Entity ids are ``E0, E1, ...`` in insertion order; relation ids are
    ``R0, R1, ...`` in order of first use. Both counters are per graph, so a
    graph built by replaying the same operations is identical.
    """

    def __init__(self, catalog: RelationCatalog):
        self.catalog = catalog
        self._entities_by_id: dict[str, EntityRef] = {}
        self._id_by_label: dict[str, str] = {}  # casefolded label -> id
        self._relations_by_label: dict[str, RelationRef] = {}
        self._adjacency: dict[tuple[str, str], list[Triple]] = {}
        self.edit_log: list[EditRecord] = []

    # -- entities ----------------------------------------------------------

    def upsert_entity(self, label: str) -> EntityRef:
        """Return the entity with this label, creating it if absent.

        Label matching is case-insensitive, so "eeyore" resolves to an
        existing "Eeyore" node rather than creating a duplicate.
        """
        label = label.strip()
        if not label:
            raise EmptyLabelError("entity label is empty")
        key = label.casefold()
        existing = self._id_by_label.get(key)
        if existing is not None:
            return self._entities_by_id[existing]
        ref = EntityRef(id=f"E{len(self._entities_by_id)}", label=label)
        self._register(ref)
        return ref

    def _register(self, ref: EntityRef) -> None:
        key = ref.label.casefold()
        clash = self._id_by_label.get(key)
        if clash is not None and clash != ref.id:
            raise LabelCollisionError(
                f"label {ref.label!r} already resolves to entity {clash}, cannot also map to {ref.id}"
            )
        if ref.id in self._entities_by_id and self._entities_by_id[ref.id] != ref:
            raise LabelCollisionError(f"entity id {ref.id} already registered with a different label")
        self._entities_by_id[ref.id] = ref
        self._id_by_label[key] = ref.id

    def entity(self, label: str) -> EntityRef | None:
        """Case-insensitive label lookup; None when absent."""
        eid = self._id_by_label.get(label.strip().casefold())
        return self._entities_by_id[eid] if eid is not None else None

    @property
    def entities(self) -> list[EntityRef]:
        return list(self._entities_by_id.values())

    # -- relations ---------------------------------------------------------

    def relation_ref(self, label: str) -> RelationRef:
        """Resolve a canonical relation label to this graph's RelationRef.

        First use assigns the next sequential id. Labels outside the active
        catalog are rejected.
        """
        label = label.strip()
        ref = self._relations_by_label.get(label)
        if ref is not None:
            return ref
        if label not in self.catalog:
            raise UnknownRelationError(f"relation {label!r} is not in catalog {self.catalog.name!r}")
        ref = RelationRef(id=f"R{len(self._relations_by_label)}", label=label)
        self._relations_by_label[label] = ref
        return ref

    # -- facts and edits ----------------------------------------------------

    def add_fact(
        self,
        subject_label: str,
        relation_label: str,
        object_label: str,
        provenance: Provenance = Provenance.BASE,
    ) -> Triple:
        """Upsert both entities and assert the triple. Returns the stored triple."""
        t = Triple(
            subject=self.upsert_entity(subject_label),
            relation=self.relation_ref(relation_label),
            object=self.upsert_entity(object_label),
            provenance=provenance,
        )
        self.assert_triple(t)
        return t

    def assert_triple(self, t: Triple) -> None:
        """Append the triple under its (subject, relation) slot, set semantics.

        A triple whose object is already present in the slot is a no-op, so
        loading the same snapshot twice leaves the graph unchanged.
        """
        if t.relation.label not in self.catalog:
            raise UnknownRelationError(
                f"relation {t.relation.label!r} is not in catalog {self.catalog.name!r}"
            )
        self._register(t.subject)
        self._register(t.object)
        self._relations_by_label.setdefault(t.relation.label, t.relation)
        slot = self._adjacency.setdefault((t.subject.id, t.relation.id), [])
        if any(existing.object.id == t.object.id for existing in slot):
            return
        slot.append(t)

    def apply_edit(self, subject, relation, new_object) -> EditRecord:
        """Break every connection under (subject, relation) and install the new one.

        Arguments may be refs or plain labels; unseen subjects/objects are
        created rather than dropped. After the call the slot holds exactly
        the new object, with edited provenance.
        """
        subj = subject if isinstance(subject, EntityRef) else self.upsert_entity(subject)
        rel = relation if isinstance(relation, RelationRef) else self.relation_ref(relation)
        if rel.label not in self.catalog:
            raise UnknownRelationError(f"relation {rel.label!r} is not in catalog {self.catalog.name!r}")
        obj = new_object if isinstance(new_object, EntityRef) else self.upsert_entity(new_object)
        self._register(subj)
        self._register(obj)
        self._relations_by_label.setdefault(rel.label, rel)

        removed = tuple(t.object for t in self._adjacency.get((subj.id, rel.id), ()))
        self._adjacency[(subj.id, rel.id)] = [
            Triple(subject=subj, relation=rel, object=obj, provenance=Provenance.EDITED)
        ]
        record = EditRecord(subject=subj, relation=rel, removed=removed, new_object=obj)
        self.edit_log.append(record)
        return record

    # -- queries -----------------------------------------------------------

    def objects_of(self, subject, relation) -> list[EntityRef]:
        """Current objects under (subject, relation), insertion-ordered; [] when absent."""
        if isinstance(subject, EntityRef):
            sid = subject.id
        else:
            found = self.entity(subject)
            if found is None:
                return []
            sid = found.id
        if isinstance(relation, RelationRef):
            rid = relation.id
        else:
            ref = self._relations_by_label.get(relation.strip())
            if ref is None:
                return []
            rid = ref.id
        return [t.object for t in self._adjacency.get((sid, rid), ())]

    def chain_query(self, chain: RelationChain) -> EntityRef | None:
        """Follow the chain from its head, first object at every hop.

        Absence is a value: an unknown head entity or an empty hop yields
        None rather than an error.
        """
        current = self.entity(chain.head_entity_label)
        if current is None:
            return None
        for relation_label in chain.relations:
            objects = self.objects_of(current, relation_label)
            if not objects:
                return None
            current = objects[0]
        return current

    # -- id resolution (query compilation) -----------------------------------

    def resolve_entity_id(self, label: str) -> str:
        found = self.entity(label)
        if found is None:
            raise UnresolvableEntityError(f"entity {label!r} is not in the graph")
        return found.id

    def resolve_relation_id(self, label: str) -> str:
        ref = self._relations_by_label.get(label.strip())
        if ref is None:
            raise UnresolvableEntityError(f"relation {label!r} has no id in this graph")
        return ref.id

    # -- whole-graph helpers --------------------------------------------------

    def triples(self) -> Iterator[Triple]:
        for slot in self._adjacency.values():
            yield from slot

    def __len__(self) -> int:
        return sum(len(slot) for slot in self._adjacency.values())

    def copy(self) -> "KnowledgeGraph":
        """Independent copy sharing only immutable refs. Edits to one graph never show in the other."""
        g = KnowledgeGraph(self.catalog)
        g._entities_by_id = dict(self._entities_by_id)
        g._id_by_label = dict(self._id_by_label)
        g._relations_by_label = dict(self._relations_by_label)
        g._adjacency = {key: list(slot) for key, slot in self._adjacency.items()}
        g.edit_log = list(self.edit_log)
        return g

    def snapshot(self) -> tuple:
        """Hashable (entity set, adjacency) view, for state-equality checks."""
        entities = tuple(sorted((e.id, e.label) for e in self._entities_by_id.values()))
        adjacency = tuple(
            sorted(
                (sid, rid, tuple((t.object.id, t.provenance.value) for t in slot))
                for (sid, rid), slot in self._adjacency.items()
                if slot
            )
        )
        return entities, adjacency

    # -- persistence -----------------------------------------------------------

    def save(self, path) -> None:
        """Write one tab-separated ``subject \\t relation \\t object`` line per triple, UTF-8."""
        lines = []
        for t in self.triples():
            for piece in (t.subject.label, t.relation.label, t.object.label):
                if "\t" in piece or "\n" in piece:
                    raise ValueError(f"label {piece!r} cannot be stored in the tab-separated format")
            lines.append(f"{t.subject.label}\t{t.relation.label}\t{t.object.label}\n")
        with open(path, "w", encoding="utf-8") as fh:
            fh.writelines(lines)

    @classmethod
    def load(cls, path, catalog: RelationCatalog) -> "KnowledgeGraph":
        """Read a snapshot written by :meth:`save`. All triples load as base facts."""
        g = cls(catalog)
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}")
                g.add_fact(parts[0], parts[1], parts[2])
        return g
