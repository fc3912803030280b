"""Core data model: per-row alphabets, amalgamation chains, windows, rectangles.

A window is a finite K-rows-by-N-columns slab of a two-sided array.  Columns
carry absolute indices (``origin`` is the index of the first column), so the
horizontal shift is pure coordinate bookkeeping and never mutates cells.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

INVERSE_LIMIT = "inverse_limit"
INDEPENDENT = "independent"

_MAX_CANONICAL_ROWS = 20


class SymbolError(ValueError):
    """A cell value is outside its row alphabet."""


@dataclass(frozen=True)
class AmalgamationChain:
    """Per-row alphabet sizes with surjections collapsing row k+1 onto row k.

    ``maps[k-1][m-1]`` is the row-k image of symbol m of row k+1 (symbols are
    1-based).  Every map must be onto the lower alphabet.
    """

    alphabet_sizes: tuple[int, ...]
    maps: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if not self.alphabet_sizes or any(s < 1 for s in self.alphabet_sizes):
            raise ValueError("alphabet sizes must be positive")
        if len(self.maps) != len(self.alphabet_sizes) - 1:
            raise ValueError("need exactly K-1 amalgamation maps")
        for k, table in enumerate(self.maps, start=1):
            upper, lower = self.alphabet_sizes[k], self.alphabet_sizes[k - 1]
            if len(table) != upper:
                raise ValueError(f"map {k} must cover the row-{k + 1} alphabet")
            if any(not 1 <= v <= lower for v in table):
                raise SymbolError(f"map {k} leaves the row-{k} alphabet")
            if set(table) != set(range(1, lower + 1)):
                raise ValueError(f"map {k} is not surjective")

    @property
    def row_count(self) -> int:
        return len(self.alphabet_sizes)

    @classmethod
    def canonical(cls, rows: int) -> "AmalgamationChain":
        """The chain with |alphabet_k| = 2^k and map m -> ceil(m/2)."""
        if not 1 <= rows <= _MAX_CANONICAL_ROWS:
            raise ValueError(f"rows must be in [1, {_MAX_CANONICAL_ROWS}]")
        sizes = tuple(2**k for k in range(1, rows + 1))
        maps = tuple(
            tuple((m + 1) // 2 for m in range(1, 2 ** (k + 1) + 1))
            for k in range(1, rows)
        )
        return cls(sizes, maps)


def amalgamate(chain: AmalgamationChain, k: int, m: int) -> int:
    """Image of row-(k+1) symbol m in row k."""
    if not 1 <= k < chain.row_count:
        raise ValueError(f"no amalgamation below row {k}")
    table = chain.maps[k - 1]
    if not 1 <= m <= len(table):
        raise SymbolError(f"symbol {m} outside the row-{k + 1} alphabet")
    return table[m - 1]


@dataclass(frozen=True)
class ArrayWindow:
    """K x N slab of an array; cells[k-1][j] is the symbol at (k, origin+j)."""

    chain: AmalgamationChain
    origin: int
    cells: tuple[tuple[int, ...], ...]
    mode: str = INVERSE_LIMIT

    def __post_init__(self) -> None:
        if self.mode not in (INVERSE_LIMIT, INDEPENDENT):
            raise ValueError(f"unknown mode {self.mode!r}")
        if len(self.cells) != self.chain.row_count:
            raise ValueError("cell grid does not match the chain's row count")
        widths = {len(row) for row in self.cells}
        if len(widths) != 1 or widths == {0}:
            raise ValueError("rows must share a positive width")

    @property
    def rows(self) -> int:
        return len(self.cells)

    @property
    def columns(self) -> int:
        return len(self.cells[0])

    def column(self, n: int) -> tuple[int, ...]:
        """Cells of the absolute column n, rows 1..K."""
        j = n - self.origin
        if not 0 <= j < self.columns:
            raise IndexError(f"column {n} outside the window")
        return tuple(row[j] for row in self.cells)


def validate_window(w: ArrayWindow) -> bool:
    """True iff every cell is in its alphabet and, in inverse-limit mode,
    every symbol amalgamates to the one above it."""
    for k, row in enumerate(w.cells, start=1):
        size = w.chain.alphabet_sizes[k - 1]
        if any(not 1 <= v <= size for v in row):
            return False
    if w.mode == INDEPENDENT:
        return True
    for k in range(1, w.rows):
        lower, upper = w.cells[k - 1], w.cells[k]
        table = w.chain.maps[k - 1]
        if any(table[m - 1] != v for v, m in zip(lower, upper)):
            return False
    return True


def shift(w: ArrayWindow, t: int) -> ArrayWindow:
    """Horizontal left shift by t: the origin decreases, cells do not move."""
    if t == 0:
        return w
    return ArrayWindow(w.chain, w.origin - t, w.cells, w.mode)


@dataclass(frozen=True)
class Rectangle:
    """A k x w block of symbols with per-cell marker flags.

    ``marks[i][j]`` set means "a marker sits right after cell (i+1, j)".
    Identity is cellwise on symbols and flags; horizontal position is not
    part of a rectangle.
    """

    cells: tuple[tuple[int, ...], ...]
    marks: tuple[tuple[bool, ...], ...]

    def __post_init__(self) -> None:
        if not self.cells or not self.cells[0]:
            raise ValueError("rectangle must be nonempty")
        w = len(self.cells[0])
        if any(len(r) != w for r in self.cells):
            raise ValueError("ragged rectangle")
        if len(self.marks) != len(self.cells) or any(
            len(r) != w for r in self.marks
        ):
            raise ValueError("marks must mirror the cell grid")

    @property
    def rows(self) -> int:
        return len(self.cells)

    @property
    def width(self) -> int:
        return len(self.cells[0])

    @classmethod
    def from_rows(
        cls,
        rows: Sequence[Sequence[int]],
        marks: Sequence[Sequence[bool]] | None = None,
    ) -> "Rectangle":
        cells = tuple(tuple(r) for r in rows)
        if marks is None:
            flat = tuple(tuple(False for _ in r) for r in cells)
        else:
            flat = tuple(tuple(bool(v) for v in r) for r in marks)
        return cls(cells, flat)

    @classmethod
    def from_word(cls, word: Iterable[int | str]) -> "Rectangle":
        """One-row rectangle; accepts digit strings for convenience."""
        return cls.from_rows([[int(c) for c in word]])

    def without_marks(self) -> "Rectangle":
        if not any(any(r) for r in self.marks):
            return self
        return Rectangle.from_rows(self.cells)

    def sub(self, rows: int, col: int, width: int) -> "Rectangle":
        """Sub-rectangle over rows 1..rows and relative columns [col, col+width)."""
        if not 1 <= rows <= self.rows or not 0 <= col <= self.width - width:
            raise ValueError("sub-rectangle out of range")
        return Rectangle(
            tuple(r[col : col + width] for r in self.cells[:rows]),
            tuple(r[col : col + width] for r in self.marks[:rows]),
        )


def extract_rectangle(
    w: ArrayWindow,
    k: int,
    first: int,
    last: int,
    markers=None,
) -> Rectangle:
    """Rectangle over rows 1..k and absolute columns [first, last].

    Marker flags are copied from ``markers`` (a MarkerSystem) restricted to
    rows 1..k: a row-j marker at position n flags cell (j, n) when n is in
    the column range.
    """
    if not 1 <= k <= w.rows:
        raise ValueError(f"row range [1,{k}] outside the window")
    lo, hi = w.origin, w.origin + w.columns - 1
    if first > last or first < lo or last > hi:
        raise ValueError(f"columns [{first},{last}] outside [{lo},{hi}]")
    a, b = first - w.origin, last - w.origin + 1
    cells = tuple(row[a:b] for row in w.cells[:k])
    width = last - first + 1
    flags = [[False] * width for _ in range(k)]
    if markers is not None:
        for j in range(min(k, markers.row_count)):
            for p in markers.positions_between(j + 1, first, last):
                flags[j][p - first] = True
    return Rectangle(cells, tuple(tuple(r) for r in flags))


def lift_binary(word: str | Sequence[int], rows: int) -> ArrayWindow:
    """Embed a 0/1 word into the canonical chain: cell (k, n) is one plus the
    value of the binary block word[n .. n+k-1].  The result is always valid in
    inverse-limit mode."""
    bits = [int(c) for c in word]
    if any(b not in (0, 1) for b in bits):
        raise ValueError("word must be over {0,1}")
    if len(bits) < rows:
        raise ValueError("word shorter than the row count")
    n = len(bits) - rows + 1
    chain = AmalgamationChain.canonical(rows)
    cells = []
    for k in range(1, rows + 1):
        row = []
        for j in range(n):
            v = 0
            for b in bits[j : j + k]:
                v = (v << 1) | b
            row.append(1 + v)
        cells.append(tuple(row))
    return ArrayWindow(chain, 0, tuple(cells), INVERSE_LIMIT)


def window_to_rectangle(w: ArrayWindow, markers=None) -> Rectangle:
    """Full-window extraction."""
    return extract_rectangle(
        w, w.rows, w.origin, w.origin + w.columns - 1, markers
    )


def replace_cells(
    w: ArrayWindow, k: int, first: int, block: Rectangle, mode: str
) -> ArrayWindow:
    """Overwrite rows 1..k from absolute column ``first`` with ``block``."""
    a = first - w.origin
    if a < 0 or a + block.width > w.columns or block.rows != k:
        raise ValueError("replacement block out of range")
    cells = [list(row) for row in w.cells]
    for i in range(k):
        cells[i][a : a + block.width] = block.cells[i]
    return ArrayWindow(w.chain, w.origin, tuple(tuple(r) for r in cells), mode)


# --- .arr text format -------------------------------------------------------
#
# line 1: K N origin mode
# line 2: K alphabet sizes
# then K lines of N tokens; a token is a decimal symbol, optionally suffixed
# with "|" meaning "marker after this cell".


def write_arr(path: str | Path, w: ArrayWindow, markers=None) -> None:
    lines = [
        f"{w.rows} {w.columns} {w.origin} {w.mode}",
        " ".join(str(s) for s in w.chain.alphabet_sizes),
    ]
    for k, row in enumerate(w.cells, start=1):
        cuts = set()
        if markers is not None and k <= markers.row_count:
            cuts = set(
                markers.positions_between(
                    k, w.origin, w.origin + w.columns - 1
                )
            )
        toks = [
            f"{v}|" if w.origin + j in cuts else str(v)
            for j, v in enumerate(row)
        ]
        lines.append(" ".join(toks))
    Path(path).write_text("\n".join(lines) + "\n")


def read_arr(path: str | Path):
    """Returns (window, marker positions per row or None)."""
    from .markers import MarkerSystem

    raw = Path(path).read_text().splitlines()
    if len(raw) < 3:
        raise ValueError(f"{path}: truncated .arr file")
    k, n, origin, mode = raw[0].split()
    rows, cols, origin = int(k), int(n), int(origin)
    sizes = tuple(int(s) for s in raw[1].split())
    if len(sizes) != rows:
        raise ValueError(f"{path}: alphabet line does not match row count")
    chain = _chain_for(sizes)
    cells, positions = [], []
    for k_idx in range(rows):
        toks = raw[2 + k_idx].split()
        if len(toks) != cols:
            raise ValueError(f"{path}: row {k_idx + 1} has {len(toks)} tokens")
        row, cuts = [], []
        for j, tok in enumerate(toks):
            if tok.endswith("|"):
                cuts.append(origin + j)
                tok = tok[:-1]
            row.append(int(tok))
        cells.append(tuple(row))
        positions.append(tuple(cuts))
    window = ArrayWindow(chain, origin, tuple(cells), mode)
    if any(positions):
        gaps = tuple(
            (min(b - a for a, b in zip(ps, ps[1:])) if len(ps) > 1 else 1)
            for ps in positions
        )
        markers = MarkerSystem(
            tuple(positions), gaps, origin, origin + cols - 1
        )
        return window, markers
    return window, None


def _chain_for(sizes: tuple[int, ...]) -> AmalgamationChain:
    """Reconstruct a chain from sizes; only the canonical chain round-trips."""
    canonical = tuple(2**k for k in range(1, len(sizes) + 1))
    if sizes == canonical:
        return AmalgamationChain.canonical(len(sizes))
    # Fall back to the order-preserving block surjection for ad-hoc sizes.
    maps = []
    for lo, hi in zip(sizes, sizes[1:]):
        if hi < lo:
            raise ValueError("alphabet sizes must be non-decreasing")
        maps.append(tuple(min(lo, 1 + (m - 1) * lo // hi) for m in range(1, hi + 1)))
    return AmalgamationChain(tuple(sizes), tuple(maps))
