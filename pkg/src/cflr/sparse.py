"""Sparse Boolean matrices in row- or column-major layout, plus the kernel
operations the reachability engine is built from: Boolean matrix product in
both orientations, element-wise union/difference, layout conversion, and the
block-matrix reshapes used for indexed symbol families.

A matrix stores, per nonempty line (row in row-major, column in column-major),
a sorted duplicate-free list of positions.  Empty lines are simply absent, so
storage is proportional to nnz even for very wide block matrices.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Iterator

ROW = "row"
COL = "col"

ROW_BY_ROW = "row-by-row"
COL_BY_COL = "column-by-column"


@dataclass
class OpCounter:
    """Deterministic work counters: a machine-independent cost signal.

    scalar_ops counts every (left-entry, matching right-line-entry) pair a
    multiplication visits; union_entries counts every stored entry a union
    reads.  Both are independent of thread scheduling because they are sums
    of per-operation totals.
    """

    spgemm_calls: int = 0
    scalar_ops: int = 0
    union_entries: int = 0

    def add(self, other: "OpCounter") -> None:
        self.spgemm_calls += other.spgemm_calls
        self.scalar_ops += other.scalar_ops
        self.union_entries += other.union_entries

    def copy(self) -> "OpCounter":
        return OpCounter(self.spgemm_calls, self.scalar_ops, self.union_entries)

    def as_dict(self) -> dict[str, int]:
        return {
            "spgemm_calls": self.spgemm_calls,
            "scalar_ops": self.scalar_ops,
            "union_entries": self.union_entries,
        }


class BoolMat:
    """Immutable-by-convention sparse Boolean matrix.

    ``lines`` maps a row index (row-major) or column index (column-major) to
    a sorted list of the true positions on that line.  All operations return
    fresh matrices and never mutate their inputs.
    """

    __slots__ = ("rows", "cols", "layout", "lines", "nnz")

    def __init__(self, rows: int, cols: int, layout: str, lines: dict[int, list[int]]):
        if layout not in (ROW, COL):
            raise ValueError(f"unknown layout {layout!r}")
        self.rows = rows
        self.cols = cols
        self.layout = layout
        # Normalize to sorted line keys so iteration order never depends on
        # how the dict was assembled.
        self.lines = {k: lines[k] for k in sorted(lines)} if lines else {}
        self.nnz = sum(len(v) for v in self.lines.values())

    # -- construction -------------------------------------------------

    @classmethod
    def empty(cls, rows: int, cols: int, layout: str = ROW) -> "BoolMat":
        return cls(rows, cols, layout, {})

    @classmethod
    def from_entries(
        cls, rows: int, cols: int, entries: Iterable[tuple[int, int]], layout: str = ROW
    ) -> "BoolMat":
        buckets: dict[int, set[int]] = {}
        for i, j in entries:
            if not (0 <= i < rows and 0 <= j < cols):
                raise ValueError(f"entry ({i}, {j}) out of bounds for {rows}x{cols}")
            if layout == ROW:
                buckets.setdefault(i, set()).add(j)
            else:
                buckets.setdefault(j, set()).add(i)
        return cls(rows, cols, layout, {k: sorted(v) for k, v in buckets.items()})

    @classmethod
    def identity(cls, n: int, layout: str = ROW) -> "BoolMat":
        return cls(n, n, layout, {i: [i] for i in range(n)})

    # -- queries ------------------------------------------------------

    def get(self, i: int, j: int) -> bool:
        line, pos = (i, j) if self.layout == ROW else (j, i)
        lst = self.lines.get(line)
        if not lst:
            return False
        at = bisect_left(lst, pos)
        return at < len(lst) and lst[at] == pos

    def entries(self) -> Iterator[tuple[int, int]]:
        """Yield (row, col) pairs in line order."""
        if self.layout == ROW:
            for i, lst in self.lines.items():
                for j in lst:
                    yield (i, j)
        else:
            for j, lst in self.lines.items():
                for i in lst:
                    yield (i, j)

    def entry_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.entries())

    def coordinate_text(self) -> str:
        """Debug serialization: sorted ``row col`` lines."""
        return "\n".join(f"{i} {j}" for i, j in sorted(self.entries()))

    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __eq__(self, other: object) -> bool:
        """Logical equality: same shape and same true entries, any layout."""
        if not isinstance(other, BoolMat):
            return NotImplemented
        if self.shape() != other.shape() or self.nnz != other.nnz:
            return False
        if self.layout == other.layout:
            return self.lines == other.lines
        return self.entry_set() == other.entry_set()

    def __hash__(self):  # logical eq makes hashing a trap
        raise TypeError("BoolMat is not hashable")

    def __repr__(self) -> str:
        return f"BoolMat({self.rows}x{self.cols}, {self.layout}, nnz={self.nnz})"


def _merge_sorted(a: list[int], b: list[int]) -> list[int]:
    if not a:
        return list(b)
    if not b:
        return list(a)
    out: list[int] = []
    ia = ib = 0
    la, lb = len(a), len(b)
    while ia < la and ib < lb:
        x, y = a[ia], b[ib]
        if x < y:
            out.append(x)
            ia += 1
        elif x > y:
            out.append(y)
            ib += 1
        else:
            out.append(x)
            ia += 1
            ib += 1
    if ia < la:
        out.extend(a[ia:])
    if ib < lb:
        out.extend(b[ib:])
    return out


def _diff_sorted(a: list[int], b: list[int]) -> list[int]:
    if not b:
        return list(a)
    bs = set(b)
    return [x for x in a if x not in bs]


def spgemm(
    a: BoolMat, b: BoolMat, orientation: str = ROW_BY_ROW, counter: OpCounter | None = None
) -> BoolMat:
    """Exact Boolean product a @ b.

    Row-by-row iterates the left operand's lines (both operands row-major,
    row-major result); column-by-column iterates the right operand's lines
    (both column-major, column-major result).  Cost is therefore driven by
    the operand on the orientation's natural driving side, which is what
    makes a sparse delta cheap when placed there.
    """
    if a.cols != b.rows:
        raise ValueError(f"dimension mismatch: {a.shape()} @ {b.shape()}")
    sops = 0
    out: dict[int, list[int]] = {}
    if orientation == ROW_BY_ROW:
        if a.layout != ROW or b.layout != ROW:
            raise ValueError("row-by-row requires both operands row-major")
        blines = b.lines
        bget = blines.get
        for i, aline in a.lines.items():
            acc: set[int] = set()
            for k in aline:
                bl = bget(k)
                if bl:
                    acc.update(bl)
                    sops += len(bl)
            if acc:
                out[i] = sorted(acc)
        result = BoolMat(a.rows, b.cols, ROW, out)
    elif orientation == COL_BY_COL:
        if a.layout != COL or b.layout != COL:
            raise ValueError("column-by-column requires both operands column-major")
        alines = a.lines
        aget = alines.get
        for j, bline in b.lines.items():
            acc = set()
            for k in bline:
                al = aget(k)
                if al:
                    acc.update(al)
                    sops += len(al)
            if acc:
                out[j] = sorted(acc)
        result = BoolMat(a.rows, b.cols, COL, out)
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    if counter is not None:
        counter.spgemm_calls += 1
        counter.scalar_ops += sops
    return result


def union(a: BoolMat, b: BoolMat, counter: OpCounter | None = None) -> BoolMat:
    """Element-wise union.  Operands must share shape and layout."""
    if a.shape() != b.shape():
        raise ValueError(f"shape mismatch: {a.shape()} vs {b.shape()}")
    if a.layout != b.layout:
        raise ValueError("union requires matching layouts")
    if counter is not None:
        counter.union_entries += a.nnz + b.nnz
    if not b.nnz:
        return BoolMat(a.rows, a.cols, a.layout, dict(a.lines))
    if not a.nnz:
        return BoolMat(a.rows, a.cols, a.layout, dict(b.lines))
    out: dict[int, list[int]] = {}
    for k in a.lines.keys() | b.lines.keys():
        out[k] = _merge_sorted(a.lines.get(k, []), b.lines.get(k, []))
    return BoolMat(a.rows, a.cols, a.layout, out)


def difference(a: BoolMat, b: BoolMat, counter: OpCounter | None = None) -> BoolMat:
    """Entries of ``a`` absent from ``b``.  Layouts may differ."""
    if a.shape() != b.shape():
        raise ValueError(f"shape mismatch: {a.shape()} vs {b.shape()}")
    if not b.nnz or not a.nnz:
        return BoolMat(a.rows, a.cols, a.layout, dict(a.lines))
    out: dict[int, list[int]] = {}
    if a.layout == b.layout:
        for k, aline in a.lines.items():
            kept = _diff_sorted(aline, b.lines.get(k, []))
            if kept:
                out[k] = kept
    else:
        for k, aline in a.lines.items():
            kept = []
            for pos in aline:
                i, j = (k, pos) if a.layout == ROW else (pos, k)
                if not b.get(i, j):
                    kept.append(pos)
            if kept:
                out[k] = kept
    return BoolMat(a.rows, a.cols, a.layout, out)


def convert(a: BoolMat, layout: str) -> BoolMat:
    """Return the same logical matrix stored in ``layout``."""
    if layout not in (ROW, COL):
        raise ValueError(f"unknown layout {layout!r}")
    if a.layout == layout:
        return a
    buckets: dict[int, list[int]] = {}
    for k, line in a.lines.items():
        for pos in line:
            buckets.setdefault(pos, []).append(k)
    # source lines are iterated in sorted-key order, so bucket contents
    # arrive already sorted
    return BoolMat(a.rows, a.cols, layout, buckets)


def _remap(a: BoolMat, rows: int, cols: int, move) -> BoolMat:
    """Rebuild ``a`` with every entry (i, j) moved to move(i, j)."""
    buckets: dict[int, set[int]] = {}
    if a.layout == ROW:
        for i, line in a.lines.items():
            for j in line:
                ni, nj = move(i, j)
                buckets.setdefault(ni, set()).add(nj)
    else:
        for j, line in a.lines.items():
            for i in line:
                ni, nj = move(i, j)
                buckets.setdefault(nj, set()).add(ni)
    return BoolMat(rows, cols, a.layout, {k: sorted(v) for k, v in buckets.items()})


def block_offset(a: BoolMat, slot: int, universe: int, side: str) -> BoolMat:
    """Place a square matrix into block ``slot`` of a 1 x k (horizontal) or
    k x 1 (vertical) block matrix over a ``universe`` of k index slots."""
    if a.rows != a.cols:
        raise ValueError("block_offset expects a square matrix")
    if not (0 <= slot < universe):
        raise ValueError(f"slot {slot} out of range for universe {universe}")
    n = a.rows
    off = slot * n
    if side == "horizontal":
        return _remap(a, n, universe * n, lambda i, j: (i, j + off))
    if side == "vertical":
        return _remap(a, universe * n, n, lambda i, j: (i + off, j))
    raise ValueError(f"unknown side {side!r}")


def block_diagonalize(v: BoolMat, block_size: int, universe: int) -> BoolMat:
    """Spread a vertical block matrix onto the block diagonal: entry
    (t*n + u, w) becomes (t*n + u, t*n + w)."""
    n = block_size
    if v.rows != universe * n or v.cols != n:
        raise ValueError(f"expected {universe * n}x{n} vertical blocks, got {v.shape()}")
    return _remap(v, universe * n, universe * n, lambda i, j: (i, (i // n) * n + j))


def block_collapse(h: BoolMat, block_size: int, universe: int) -> BoolMat:
    """Union the column blocks of a horizontal block matrix: entry
    (u, t*n + w) becomes (u, w)."""
    n = block_size
    if h.rows != n or h.cols != universe * n:
        raise ValueError(f"expected {n}x{universe * n} horizontal blocks, got {h.shape()}")
    return _remap(h, n, n, lambda i, j: (i, j % n))


def horizontal_to_vertical(h: BoolMat, block_size: int, universe: int) -> BoolMat:
    """Re-index per-slot blocks from horizontal to vertical storage."""
    n = block_size
    if h.rows != n or h.cols != universe * n:
        raise ValueError(f"expected {n}x{universe * n} horizontal blocks, got {h.shape()}")
    return _remap(h, universe * n, n, lambda i, j: ((j // n) * n + i, j % n))


def vertical_to_horizontal(v: BoolMat, block_size: int, universe: int) -> BoolMat:
    """Inverse of :func:`horizontal_to_vertical`."""
    n = block_size
    if v.rows != universe * n or v.cols != n:
        raise ValueError(f"expected {universe * n}x{n} vertical blocks, got {v.shape()}")
    return _remap(v, n, universe * n, lambda i, j: (i % n, (i // n) * n + j))
