"""Label data: named, typed entity sets with hierarchy and algebra.

A label store is a directory tree of JSON files; the file's root-relative
path becomes its id (`regions/CN.json` -> `:regions/CN`). Labels hold
org/repo/user id lists plus references to other labels; resolution takes
the transitive closure. Type names act as the union of all labels of that
type. Org and repo axes stay separate: an org id never implicitly expands
to the org's repos here, matching on each axis is the query engine's job.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import LabelLoadError, UnknownLabelError

_AXES = ("orgs", "repos", "users")


@dataclass(frozen=True)
class EntitySet:
    orgs: frozenset[int] = frozenset()
    repos: frozenset[int] = frozenset()
    users: frozenset[int] = frozenset()

    def union(self, other: "EntitySet") -> "EntitySet":
        return EntitySet(self.orgs | other.orgs, self.repos | other.repos,
                         self.users | other.users)

    def intersect(self, other: "EntitySet") -> "EntitySet":
        return EntitySet(self.orgs & other.orgs, self.repos & other.repos,
                         self.users & other.users)

    def is_empty(self) -> bool:
        return not (self.orgs or self.repos or self.users)

    def to_jsonable(self) -> dict:
        return {"orgs": sorted(self.orgs), "repos": sorted(self.repos),
                "users": sorted(self.users)}


EMPTY_SET = EntitySet()


def normalize_ref(ref: str) -> str:
    """Canonical label id; both `:regions/CN` and `:.regions/CN` parse."""
    if ref.startswith(":."):
        return ":" + ref[2:]
    return ref


@dataclass(frozen=True)
class Label:
    id: str
    name: str
    type: str
    own: EntitySet
    references: tuple[str, ...] = ()

    @classmethod
    def from_json(cls, label_id: str, raw: Mapping, source: str = "<inject>") -> "Label":
        if not isinstance(raw, Mapping):
            raise LabelLoadError(f"{source}: label body must be an object")
        name = raw.get("name")
        type_ = raw.get("type")
        if not isinstance(name, str) or not name:
            raise LabelLoadError(f"{source}: missing or invalid 'name'")
        if not isinstance(type_, str) or not type_:
            raise LabelLoadError(f"{source}: missing or invalid 'type'")
        data = raw.get("data", {})
        if not isinstance(data, Mapping):
            raise LabelLoadError(f"{source}: 'data' must be an object")
        sets = {}
        for axis in _AXES:
            values = data.get(f"github_{axis}", [])
            if not isinstance(values, list) or not all(isinstance(v, int) for v in values):
                raise LabelLoadError(f"{source}: data.github_{axis} must be a list of ids")
            sets[axis] = frozenset(values)
        refs = data.get("labels", [])
        if not isinstance(refs, list) or not all(isinstance(r, str) for r in refs):
            raise LabelLoadError(f"{source}: data.labels must be a list of label ids")
        return cls(id=label_id, name=name, type=type_,
                   own=EntitySet(**sets),
                   references=tuple(normalize_ref(r) for r in refs))


class LabelStore:
    """Immutable after construction; closures precomputed, cycles rejected."""

    def __init__(self, labels: Iterable[Label]):
        self._labels: dict[str, Label] = {}
        for label in labels:
            if label.id in self._labels:
                raise LabelLoadError(f"duplicate label id {label.id}")
            self._labels[label.id] = label
        self._closures: dict[str, EntitySet] = {}
        self._by_type: dict[str, list[str]] = {}
        for label in self._labels.values():
            self._by_type.setdefault(label.type, []).append(label.id)
        for label_id in self._labels:
            self._close(label_id, stack=[])

    def _close(self, label_id: str, stack: list[str]) -> EntitySet:
        if label_id in self._closures:
            return self._closures[label_id]
        if label_id in stack:
            cycle = " -> ".join(stack[stack.index(label_id):] + [label_id])
            raise LabelLoadError(f"label reference cycle: {cycle}")
        label = self._labels.get(label_id)
        if label is None:
            origin = stack[-1] if stack else "?"
            raise LabelLoadError(f"label {origin} references unknown label {label_id}")
        stack.append(label_id)
        result = label.own
        for ref in label.references:
            result = result.union(self._close(ref, stack))
        stack.pop()
        self._closures[label_id] = result
        return result

    @property
    def labels(self) -> dict[str, Label]:
        return dict(self._labels)

    def types(self) -> list[str]:
        return sorted(self._by_type)

    def ids(self) -> list[str]:
        return sorted(self._labels)

    def get(self, label_id: str) -> Optional[Label]:
        return self._labels.get(normalize_ref(label_id))

    def labels_of_type(self, type_name: str) -> list[Label]:
        return [self._labels[i] for i in sorted(self._by_type.get(type_name, []))]


def load_labels(root: Union[str, Path]) -> LabelStore:
    """Load every *.json under root; file path becomes the label id."""
    root = Path(root)
    if not root.is_dir():
        raise LabelLoadError(f"label root {root} is not a directory")
    labels = []
    for path in sorted(root.rglob("*.json")):
        rel = path.relative_to(root).with_suffix("")
        label_id = ":" + rel.as_posix()
        try:
            raw = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise LabelLoadError(f"cannot load label file {path}: {exc}") from exc
        labels.append(Label.from_json(label_id, raw, source=str(path)))
    return LabelStore(labels)


def resolve(store: LabelStore, ref: str) -> EntitySet:
    """A label id (`:`-prefixed) resolves to its transitive closure; a bare
    type name resolves to the union over all labels of that type."""
    ref = normalize_ref(ref)
    if ref.startswith(":"):
        if store.get(ref) is None:
            raise UnknownLabelError(ref, kind="id")
        return store._closures[ref]
    members = store.labels_of_type(ref)
    if not members:
        raise UnknownLabelError(ref, kind="type")
    result = EMPTY_SET
    for label in members:
        result = result.union(store._closures[label.id])
    return result


def label_union(store: LabelStore, refs: Sequence[str]) -> EntitySet:
    if not refs:
        raise LabelLoadError("label_union requires at least one ref")
    result = EMPTY_SET
    for ref in refs:
        result = result.union(resolve(store, ref))
    return result


def label_intersect(store: LabelStore, refs: Sequence[str]) -> EntitySet:
    if not refs:
        raise LabelLoadError("label_intersect requires at least one ref")
    sets = [resolve(store, ref) for ref in refs]
    result = sets[0]
    for other in sets[1:]:
        result = result.intersect(other)
    return result


def inject_labels(store: LabelStore, custom: Iterable[Label]) -> LabelStore:
    """Merged store; custom ids may not collide with existing ones."""
    return LabelStore(list(store._labels.values()) + list(custom))


def parse_injected(raw: object) -> list[Label]:
    """Custom labels from request JSON: a list of {id, name, type, data}."""
    if not isinstance(raw, list):
        raise LabelLoadError("injectLabelData must be a list of label objects")
    labels = []
    for i, item in enumerate(raw):
        if not isinstance(item, Mapping) or not isinstance(item.get("id"), str):
            raise LabelLoadError(f"injectLabelData[{i}] needs a string 'id'")
        label_id = normalize_ref(item["id"])
        if not label_id.startswith(":"):
            label_id = ":" + label_id
        labels.append(Label.from_json(label_id, item, source=f"injectLabelData[{i}]"))
    return labels
