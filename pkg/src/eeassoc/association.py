from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class MalformedAssociation(ValueError):
    pass


@dataclass(frozen=True)
class Association:
    """Binary N x K assignment; every user (column) sits on exactly one BS."""

    x: np.ndarray

    def __post_init__(self):
        x = np.array(self.x)
        if x.ndim != 2:
            raise MalformedAssociation("association must be an N x K matrix")
        if not np.all((x == 0) | (x == 1)):
            raise MalformedAssociation("association entries must be 0 or 1")
        if not np.all(x.sum(axis=0) == 1):
            raise MalformedAssociation("every user must be associated with exactly one BS")
        x = x.astype(np.int8)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @classmethod
    def from_choice(cls, choice, num_bs: int) -> "Association":
        choice = np.asarray(choice, dtype=int)
        if choice.ndim != 1 or np.any(choice < 0) or np.any(choice >= num_bs):
            raise MalformedAssociation(f"BS indices must lie in [0, {num_bs})")
        x = np.zeros((num_bs, choice.size), dtype=np.int8)
        x[choice, np.arange(choice.size)] = 1
        return cls(x)

    @property
    def choice(self) -> np.ndarray:
        return np.argmax(self.x, axis=0)

    @property
    def load(self) -> np.ndarray:
        return self.x.sum(axis=1).astype(int)

    @property
    def shape(self) -> tuple[int, int]:
        return self.x.shape

    def __eq__(self, other):
        if not isinstance(other, Association):
            return NotImplemented
        return np.array_equal(self.x, other.x)

    __hash__ = None
