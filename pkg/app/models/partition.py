"""Block-labeled set partitions of [n].

Elements are 1-based (the set [n] = {1, ..., n}); block labels are stored
0-based and rendered 1-based in every text encoding.
"""
from dataclasses import dataclass
from typing import Iterable, Tuple

from app.errors import InvalidArgumentError

Block = Tuple[Tuple[int, ...], int]


@dataclass(frozen=True)
class LabeledPartition:
    """A partition of [n] whose blocks each carry a type label < d.

    Blocks are kept in order of appearance (the block containing 1 first,
    then the block containing the least element not yet covered, ...) with
    sorted elements, so two partitions are equal iff their encodings are.
    """
    n: int
    d: int
    blocks: Tuple[Block, ...]

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise InvalidArgumentError(f"need n >= 1 and d >= 1, got n={self.n}, d={self.d}")
        canonical = []
        seen = set()
        for elements, label in self.blocks:
            members = tuple(sorted(int(e) for e in elements))
            if not members:
                raise InvalidArgumentError("empty block")
            if not 0 <= label < self.d:
                raise InvalidArgumentError(f"block label {label + 1} outside 1..{self.d}")
            overlap = seen.intersection(members)
            if overlap or len(set(members)) != len(members):
                raise InvalidArgumentError(f"blocks are not disjoint (element {min(overlap or members)})")
            seen.update(members)
            canonical.append((members, int(label)))
        if seen != set(range(1, self.n + 1)):
            raise InvalidArgumentError(f"blocks do not cover [{self.n}] exactly")
        canonical.sort(key=lambda block: block[0][0])
        object.__setattr__(self, 'blocks', tuple(canonical))

    @property
    def size(self) -> int:
        """Number of blocks |pi|."""
        return len(self.blocks)

    @property
    def labels(self) -> Tuple[int, ...]:
        return tuple(label for _, label in self.blocks)

    @property
    def unlabeled(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(elements for elements, _ in self.blocks)

    def block_counts(self) -> Tuple[int, ...]:
        """Number of k-blocks for every type k."""
        counts = [0] * self.d
        for _, label in self.blocks:
            counts[label] += 1
        return tuple(counts)

    def blocks_of_type(self, k: int) -> Tuple[Tuple[int, ...], ...]:
        return tuple(elements for elements, label in self.blocks if label == k)

    def label_of(self, element: int) -> int:
        for elements, label in self.blocks:
            if element in elements:
                return label
        raise InvalidArgumentError(f"element {element} not in [{self.n}]")

    def encode(self) -> str:
        """Canonical text form, e.g. '1,2:1|3:2'."""
        return '|'.join(
            ','.join(str(e) for e in elements) + f":{label + 1}"
            for elements, label in self.blocks
        )

    def __str__(self) -> str:
        return self.encode()

    @classmethod
    def parse(cls, text: str, d: int) -> "LabeledPartition":
        """Decode the canonical text form; n is the largest element present."""
        blocks = []
        try:
            for chunk in text.strip().split('|'):
                elements, label = chunk.split(':')
                blocks.append((tuple(int(e) for e in elements.split(',')), int(label) - 1))
        except ValueError:
            raise InvalidArgumentError(f"malformed partition encoding '{text}'")
        n = max((max(elements) for elements, _ in blocks), default=0)
        return cls(n=n, d=d, blocks=tuple(blocks))

    @classmethod
    def singletons(cls, labels: Iterable[int], d: int) -> "LabeledPartition":
        """The partition {({1},k_1), ..., ({n},k_n)}."""
        labels = tuple(labels)
        return cls(n=len(labels), d=d, blocks=tuple(((i + 1,), k) for i, k in enumerate(labels)))
