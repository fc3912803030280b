"""Empirical measures on rectangles, the weighted-L1 rectangle metric,
mixtures, concatenation and the Cesaro uniformity diagnostic.

All weights and distances are exact fractions; floats appear only when a
caller formats a report.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .arrays import Rectangle

Truncation = tuple[int, int]  # (max rows, max width)


class TruncationMismatch(ValueError):
    """Operands carry different truncations."""


def frequency(r: Rectangle, q: Rectangle) -> Fraction:
    """Sliding-window frequency of q among the sub-rectangles of r.

    Zero when q has more rows or is wider than r; otherwise the number of
    horizontal offsets at which q occurs, divided by the number of offsets.
    Marker flags take part in equality.
    """
    if q.rows > r.rows or q.width > r.width:
        return Fraction(0)
    offsets = r.width - q.width + 1
    hits = sum(
        1
        for i in range(offsets)
        if r.sub(q.rows, i, q.width) == q
    )
    return Fraction(hits, offsets)


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Cylinder weights up to a truncation; for each dimension pair the
    weights over all rectangles of that dimension sum to one."""

    truncation: Truncation
    weights: Mapping[Rectangle, Fraction]
    source_tag: str = ""

    def weight(self, q: Rectangle) -> Fraction:
        return self.weights.get(q, Fraction(0))

    def by_dimension(self) -> dict[tuple[int, int], dict[Rectangle, Fraction]]:
        out: dict[tuple[int, int], dict[Rectangle, Fraction]] = {}
        for q, w in self.weights.items():
            out.setdefault((q.rows, q.width), {})[q] = w
        return out


def _slab_counts(r: Rectangle, rows: int, width: int) -> dict[Rectangle, int]:
    # count on raw tuples first; distinct slabs are few even in huge windows
    raw: dict[tuple, int] = {}
    cells = r.cells[:rows]
    marks = r.marks[:rows]
    for i in range(r.width - width + 1):
        key = (
            tuple(row[i : i + width] for row in cells),
            tuple(row[i : i + width] for row in marks),
        )
        raw[key] = raw.get(key, 0) + 1
    return {Rectangle(c, m): n for (c, m), n in raw.items()}


def empirical_measure(
    r: Rectangle, truncation: Truncation, source_tag: str = ""
) -> EmpiricalMeasure:
    """Weights(q) = frequency(r, q) for every q within the truncation."""
    max_rows, max_width = truncation
    if max_rows < 1 or max_width < 1:
        raise ValueError("truncation must be positive in both dimensions")
    if r.rows < max_rows or r.width < max_width:
        raise ValueError("rectangle smaller than the requested truncation")
    weights: dict[Rectangle, Fraction] = {}
    for rows in range(1, max_rows + 1):
        for width in range(1, max_width + 1):
            offsets = r.width - width + 1
            for q, c in _slab_counts(r, rows, width).items():
                weights[q] = Fraction(c, offsets)
    return EmpiricalMeasure(truncation, weights, source_tag)


def point_mass(q: Rectangle, truncation: Truncation) -> EmpiricalMeasure:
    """The measure of the constant stream of q's single symbol per row; q must
    be one column wide."""
    if q.width != 1:
        raise ValueError("point mass expects a single-column rectangle")
    max_rows, max_width = truncation
    wide = Rectangle.from_rows(
        [[row[0]] * max(max_width, 1) for row in q.cells[:max_rows]]
    )
    return empirical_measure(wide, truncation, source_tag="point-mass")


@dataclass(frozen=True)
class TruncatedDistance:
    """A truncated metric value plus a certified bound on the omitted tail."""

    value: Fraction
    tail_bound: Fraction

    def __post_init__(self) -> None:
        if self.value < 0 or self.value + self.tail_bound > 2:
            raise ValueError("distance outside [0, 2]")

    def __float__(self) -> float:
        return float(self.value)


def _as_measure(
    x: Rectangle | EmpiricalMeasure, truncation: Truncation
) -> EmpiricalMeasure:
    if isinstance(x, Rectangle):
        return empirical_measure(x, truncation)
    if x.truncation != truncation:
        raise TruncationMismatch(
            f"stored truncation {x.truncation} != requested {truncation}"
        )
    return x


def dstar(
    a: Rectangle | EmpiricalMeasure,
    b: Rectangle | EmpiricalMeasure,
    truncation: Truncation,
) -> TruncatedDistance:
    """Sum over dimensions (l, r) of 2^(-l-r) times the L1 distance between
    the two weight vectors of that dimension, cut at the truncation."""
    ma = _as_measure(a, truncation)
    mb = _as_measure(b, truncation)
    total = Fraction(0)
    for q in set(ma.weights) | set(mb.weights):
        diff = abs(ma.weight(q) - mb.weight(q))
        if diff:
            total += Fraction(diff, 2 ** (q.rows + q.width))
    max_rows, max_width = truncation
    covered = (1 - Fraction(1, 2**max_rows)) * (1 - Fraction(1, 2**max_width))
    return TruncatedDistance(total, 2 * (1 - covered))


def mixture(
    measures: Sequence[EmpiricalMeasure], lambdas: Sequence[Fraction]
) -> EmpiricalMeasure:
    """Pointwise convex combination; per-dimension sums remain one."""
    if len(measures) != len(lambdas) or not measures:
        raise ValueError("one weight per measure required")
    if any(w < 0 for w in lambdas) or sum(lambdas) != 1:
        raise ValueError("mixture weights must be nonnegative and sum to 1")
    trunc = measures[0].truncation
    if any(m.truncation != trunc for m in measures):
        raise TruncationMismatch("mixture components must share a truncation")
    weights: dict[Rectangle, Fraction] = {}
    for m, lam in zip(measures, lambdas):
        if lam == 0:
            continue
        for q, w in m.weights.items():
            weights[q] = weights.get(q, Fraction(0)) + lam * w
    return EmpiricalMeasure(trunc, weights, source_tag="mixture")


def concat(rectangles: Sequence[Rectangle]) -> Rectangle:
    """Glue rectangles of equal row counts left to right.  A marker flag is
    set on the last cell of every internal junction, in every row."""
    if not rectangles:
        raise ValueError("nothing to concatenate")
    rows = rectangles[0].rows
    if any(r.rows != rows for r in rectangles):
        raise ValueError("row counts differ")
    if len(rectangles) == 1:
        return rectangles[0]
    cells = tuple(
        tuple(v for r in rectangles for v in r.cells[i]) for i in range(rows)
    )
    marks = []
    for i in range(rows):
        row: list[bool] = []
        for j, r in enumerate(rectangles):
            flags = list(r.marks[i])
            if j < len(rectangles) - 1:
                flags[-1] = True
            row.extend(flags)
        marks.append(tuple(row))
    return Rectangle(cells, tuple(marks))


def cesaro_spread(
    word: Sequence[int] | str, pattern: Sequence[int] | str, n: int
) -> Fraction:
    """Max minus min, over start positions, of the n-block average of the
    indicator of the pattern; zero means exact uniformity at this scale."""
    w = [int(c) for c in word]
    q = [int(c) for c in pattern]
    if len(w) < 2 * n:
        raise ValueError("window shorter than two blocks")
    hits = [1 if w[i : i + len(q)] == q else 0 for i in range(len(w) - len(q) + 1)]
    if len(hits) < n:
        raise ValueError("pattern leaves fewer positions than a block")
    running = sum(hits[:n])
    lo = hi = running
    for t in range(1, len(hits) - n + 1):
        running += hits[t + n - 1] - hits[t - 1]
        lo = min(lo, running)
        hi = max(hi, running)
    return Fraction(hi - lo, n)


# --- .emp text format -------------------------------------------------------
#
# header: "L Rw"; one line per rectangle: rows width, row-major symbols,
# marker bitmask (row-major bits, least significant first), weight p/q.


def write_emp(path: str | Path, m: EmpiricalMeasure) -> None:
    lines = [f"{m.truncation[0]} {m.truncation[1]}"]
    for q in sorted(m.weights, key=lambda q: (q.rows, q.width, q.cells, q.marks)):
        syms = " ".join(str(v) for row in q.cells for v in row)
        mask = 0
        for i, flag in enumerate(f for row in q.marks for f in row):
            if flag:
                mask |= 1 << i
        w = m.weights[q]
        lines.append(
            f"{q.rows} {q.width} {syms} {mask} {w.numerator}/{w.denominator}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_emp(path: str | Path) -> EmpiricalMeasure:
    raw = [l for l in Path(path).read_text().splitlines() if l.strip()]
    max_rows, max_width = (int(t) for t in raw[0].split())
    weights: dict[Rectangle, Fraction] = {}
    for line in raw[1:]:
        toks = line.split()
        rows, width = int(toks[0]), int(toks[1])
        syms = [int(t) for t in toks[2 : 2 + rows * width]]
        mask = int(toks[2 + rows * width])
        num, den = toks[3 + rows * width].split("/")
        cells = tuple(
            tuple(syms[i * width : (i + 1) * width]) for i in range(rows)
        )
        marks = tuple(
            tuple(bool(mask >> (i * width + j) & 1) for j in range(width))
            for i in range(rows)
        )
        weights[Rectangle(cells, marks)] = Fraction(int(num), int(den))
    return EmpiricalMeasure((max_rows, max_width), weights)
