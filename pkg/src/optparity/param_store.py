"""Named, tagged flat parameter vectors.

Optimizers and regularizers route per group by tag; the four tags cover
every exclusion rule used in the experiments (weights vs. bias/BN scale/
BN shift). All optimizer math downstream is shape-oblivious: norms are
taken over the flat vector, shape metadata exists only for the model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateGroupName, ShapeMismatch, UnknownGroupName

TAGS = ("weight", "bias", "bn_scale", "bn_shift")


@dataclass
class ParamGroup:
    name: str
    tag: str
    values: np.ndarray
    shape: tuple[int, ...]

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown tag {self.tag!r}")
        self.values = np.asarray(self.values, dtype=np.float64).ravel()
        self.shape = tuple(int(d) for d in self.shape)
        if self.values.size == 0:
            raise ShapeMismatch(f"group {self.name!r} is empty")
        if any(d <= 0 for d in self.shape):
            raise ShapeMismatch(f"group {self.name!r} has non-positive dims {self.shape}")
        if math.prod(self.shape) != self.values.size:
            raise ShapeMismatch(
                f"group {self.name!r}: {self.values.size} values vs shape {self.shape}"
            )

    def as_matrix(self) -> np.ndarray:
        return self.values.reshape(self.shape)


@dataclass
class ParamStore:
    groups: list[ParamGroup] = field(default_factory=list)

    def __post_init__(self):
        names = [g.name for g in self.groups]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DuplicateGroupName(", ".join(dupes))
        self._index = {g.name: g for g in self.groups}

    def __iter__(self):
        return iter(self.groups)

    def __len__(self):
        return len(self.groups)

    def __getitem__(self, name: str) -> ParamGroup:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownGroupName(name) from None

    def names(self) -> list[str]:
        return [g.name for g in self.groups]

    @property
    def total_params(self) -> int:
        return sum(g.values.size for g in self.groups)

    def copy(self) -> "ParamStore":
        return ParamStore(
            [ParamGroup(g.name, g.tag, g.values.copy(), g.shape) for g in self.groups]
        )


def build_param_store(groups: list[ParamGroup]) -> ParamStore:
    """Validate and assemble groups, preserving input order."""
    if not groups:
        raise ShapeMismatch("empty group list")
    return ParamStore(list(groups))


def select_groups(store: ParamStore, tags: set[str]) -> list[str]:
    """Names of all groups whose tag is in `tags`, in store order."""
    return [g.name for g in store if g.tag in tags]


def global_l2_norm(store: ParamStore, names: list[str]) -> float:
    """sqrt of the sum of squares over the listed groups; 0 for an empty list."""
    total = 0.0
    for name in names:
        v = store[name].values
        total += float(v @ v)
    return math.sqrt(total)


def store_to_json(store: ParamStore) -> str:
    """Snapshot for checkpoint/restore: list of {name, tag, shape, values}."""
    doc = [
        {"name": g.name, "tag": g.tag, "shape": list(g.shape), "values": g.values.tolist()}
        for g in store
    ]
    return json.dumps(doc)


def store_from_json(text: str) -> ParamStore:
    doc = json.loads(text)
    return build_param_store(
        [
            ParamGroup(d["name"], d["tag"], np.array(d["values"]), tuple(d["shape"]))
            for d in doc
        ]
    )
