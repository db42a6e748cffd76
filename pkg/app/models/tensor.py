"""Merge tensors T = (t_{k,l}) with entries i_{k,l,s}.

Rows k index the types of the child blocks (the new blocks after one step
backwards), columns l the types of the blocks that merge into them, and
s in 0..j_k-1 the k-blocks in order of appearance. The grid is stored
dense: every (k, l) cell holds a vector of length j_k.
"""
from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

from app.errors import InvalidArgumentError

Cell = Tuple[int, ...]


@dataclass(frozen=True)
class MergeTensor:
    d: int
    j: Tuple[int, ...]
    entries: Tuple[Tuple[Cell, ...], ...]

    def __post_init__(self):
        j = tuple(int(v) for v in self.j)
        if len(j) != self.d or any(v < 0 for v in j):
            raise InvalidArgumentError(f"j must be a nonnegative vector of length {self.d}, got {self.j}")
        if len(self.entries) != self.d or any(len(row) != self.d for row in self.entries):
            raise InvalidArgumentError(f"tensor grid must be {self.d}x{self.d}")
        grid = []
        for k, row in enumerate(self.entries):
            cells = []
            for l, cell in enumerate(row):
                cell = tuple(int(v) for v in cell)
                if len(cell) != j[k]:
                    raise InvalidArgumentError(
                        f"t_{{{k + 1},{l + 1}}} has length {len(cell)}, expected j_{k + 1} = {j[k]}")
                if any(v < 0 for v in cell):
                    raise InvalidArgumentError(f"negative entry in t_{{{k + 1},{l + 1}}}")
                cells.append(cell)
            grid.append(tuple(cells))
        object.__setattr__(self, 'j', j)
        object.__setattr__(self, 'entries', tuple(grid))

    @classmethod
    def from_cells(cls, d: int, j: Sequence[int], cells: Dict[Tuple[int, int], Sequence[int]]) -> "MergeTensor":
        """Build a tensor from the nonzero cells; missing cells are zero vectors."""
        grid = tuple(
            tuple(tuple(cells.get((k, l), (0,) * j[k])) for l in range(d))
            for k in range(d)
        )
        return cls(d=d, j=tuple(j), entries=grid)

    def cell(self, k: int, l: int) -> Cell:
        return self.entries[k][l]

    def parent_counts(self) -> Tuple[int, ...]:
        """Induced i_l = sum_k sum_s i_{k,l,s}."""
        return tuple(
            sum(sum(self.entries[k][l]) for k in range(self.d))
            for l in range(self.d)
        )

    def pair_counts(self) -> Tuple[Tuple[int, ...], ...]:
        """i_{k,l} = sum_s i_{k,l,s}."""
        return tuple(tuple(sum(cell) for cell in row) for row in self.entries)

    def slot_totals(self, k: int) -> Tuple[int, ...]:
        """sum_l i_{k,l,s} for every k-slot s."""
        return tuple(
            sum(self.entries[k][l][s] for l in range(self.d))
            for s in range(self.j[k])
        )

    @property
    def total(self) -> int:
        """sum_l i_l, the number of merging blocks."""
        return sum(self.parent_counts())

    @property
    def is_diagonal(self) -> bool:
        return all(
            not any(self.entries[k][l])
            for k in range(self.d) for l in range(self.d) if k != l
        )

    def diagonal_rows(self) -> Tuple[Cell, ...]:
        return tuple(self.entries[k][k] for k in range(self.d))

    def canonical(self) -> "MergeTensor":
        """Sort the k-slots of every row jointly across l (a per-k permutation)."""
        grid = []
        for k in range(self.d):
            columns = sorted(
                (tuple(self.entries[k][l][s] for l in range(self.d)) for s in range(self.j[k])),
                reverse=True,
            )
            grid.append(tuple(tuple(column[l] for column in columns) for l in range(self.d)))
        return MergeTensor(d=self.d, j=self.j, entries=tuple(grid))

    def describe(self) -> str:
        """Short 1-based rendering used in reports, e.g. 'j=(1,0) [1,1]=(2)'."""
        cells = [
            f"[{k + 1},{l + 1}]=({','.join(str(v) for v in self.entries[k][l])})"
            for k in range(self.d) for l in range(self.d)
            if any(self.entries[k][l])
        ]
        j = ','.join(str(v) for v in self.j)
        return f"j=({j}) " + (' '.join(cells) if cells else 'T0' if not any(self.j) else 'zero')

    def to_json(self) -> Dict[str, Any]:
        return {
            'j': list(self.j),
            'entries': {
                f"{k + 1},{l + 1}": list(self.entries[k][l])
                for k in range(self.d) for l in range(self.d)
            },
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "MergeTensor":
        try:
            j = tuple(int(v) for v in data['j'])
            d = len(j)
            cells = {}
            for key, values in data.get('entries', {}).items():
                k, l = (int(part) - 1 for part in key.split(','))
                if not (0 <= k < d and 0 <= l < d):
                    raise InvalidArgumentError(f"tensor entry key '{key}' outside 1..{d}")
                cells[(k, l)] = tuple(values)
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, InvalidArgumentError):
                raise
            raise InvalidArgumentError(f"malformed tensor JSON: {e}")
        return cls.from_cells(d, j, cells)
