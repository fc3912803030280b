"""Stitching machinery over a base subshift: exceptional-case detection,
base rectangles, transition lengths, tabbed rectangle pairs, embeddings of
periodic and markered models, and language-level convergence checks.

The base oracle must be binary.  Rectangles interface with it through their
generating 0/1 word: a k-row rectangle of width w is in the lifted language
iff it is the lift of a language word of length w + k - 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .arrays import (
    INDEPENDENT,
    INVERSE_LIMIT,
    ArrayWindow,
    Rectangle,
    extract_rectangle,
    lift_binary,
    window_to_rectangle,
)
from .generators import LanguageOracle
from .markers import MarkerSystem


class NotFoundWithinHorizon(ValueError):
    """No transition length is certified at this horizon."""


class NoWitness(ValueError):
    """No language word realizes the requested gap."""

    def __init__(self, l: int):
        super().__init__(f"no witness word for gap {l}")
        self.l = l


# --- exceptional periodic spectra -------------------------------------------


@dataclass(frozen=True)
class PeriodSpec:
    """The set of minimal periods of the periodic part of a system, given as
    an explicit finite set plus an optional symbolic infinite family."""

    explicit_periods: frozenset[int]
    infinite_family: str = "none"  # none | all_primes | geometric(b)
    all_periodic: bool = False

    def __post_init__(self) -> None:
        if any(p < 1 for p in self.explicit_periods):
            raise ValueError("periods must be positive")
        fam = self.infinite_family
        if fam not in ("none", "all_primes") and not _geometric_base(fam):
            raise ValueError(f"unsupported symbolic family {fam!r}")
        if (
            self.all_periodic
            and fam == "none"
            and not self.explicit_periods
        ):
            raise ValueError("an all-periodic system needs some period")


def _geometric_base(fam: str) -> int | None:
    if fam.startswith("geometric(") and fam.endswith(")"):
        try:
            b = int(fam[len("geometric(") : -1])
        except ValueError:
            return None
        return b if b >= 2 else None
    return None


def detect_exceptional(spec: PeriodSpec) -> bool:
    """True iff every point is periodic and the period set contains an
    infinite sequence with no common divisor inside the set (1 counts as a
    divisor, so sets containing 1 are never exceptional)."""
    if not spec.all_periodic:
        return False
    fam = spec.infinite_family
    if fam == "none":
        return False  # finite period sets are never exceptional
    if _geometric_base(fam):
        # the base divides every member and belongs to the family
        return False
    if fam == "all_primes":
        # distinct primes share only the divisor 1
        return 1 not in spec.explicit_periods
    raise ValueError(f"unsupported symbolic family {fam!r}")


# --- binary-word bridge ------------------------------------------------------


def rectangle_to_binary_word(rect: Rectangle) -> str | None:
    """The 0/1 word whose lift is this rectangle, or None when the cells are
    not lift-consistent.  Marker flags are ignored."""
    w, rows = rect.width, rect.rows
    bits = [rect.cells[0][j] - 1 for j in range(w)]
    if any(b not in (0, 1) for b in bits):
        return None
    for i in range(1, rows):
        bits.append((rect.cells[i][w - 1] - 1) & 1)
    word = "".join(str(b) for b in bits)
    lifted = lift_binary(word, rows)
    if lifted.cells != rect.cells:
        return None
    return word


def _bit_alphabet(oracle: LanguageOracle) -> tuple[str, str]:
    if len(oracle.alphabet) != 2:
        raise ValueError("assembly requires a binary base oracle")
    lo, hi = sorted(oracle.alphabet)
    return lo, hi


def _to_oracle_word(oracle: LanguageOracle, bits: str) -> str:
    lo, hi = _bit_alphabet(oracle)
    if (lo, hi) == ("0", "1"):
        return bits
    return bits.translate(str.maketrans("01", lo + hi))


def _to_bits(oracle: LanguageOracle, word: str) -> str:
    lo, hi = _bit_alphabet(oracle)
    if (lo, hi) == ("0", "1"):
        return word
    return word.translate(str.maketrans(lo + hi, "01"))


def lifted_contains(oracle: LanguageOracle, rect: Rectangle) -> bool:
    """Membership of a rectangle in the lifted language of the base oracle."""
    bits = rectangle_to_binary_word(rect)
    if bits is None:
        return False
    return oracle.contains(_to_oracle_word(oracle, bits))


# --- transition lengths and kits --------------------------------------------


def transition_length(
    x0: LanguageOracle, B: Rectangle, horizon: int
) -> int:
    """Smallest l0 such that for every l in [l0, horizon] some language word
    contains B both at offset 0 and at offset l.  The certificate is bounded
    by the horizon; tail behaviour beyond it is not claimed."""
    bits = rectangle_to_binary_word(B)
    if bits is None or not x0.contains(_to_oracle_word(x0, bits)):
        raise ValueError("base rectangle not in the language")
    n = len(bits)
    witnessed = set()
    if x0.text is None:
        for l in range(1, horizon + 1):
            if l >= n or bits[l:] == bits[: n - l]:
                witnessed.add(l)
    else:
        occ = x0.occurrences(_to_oracle_word(x0, bits))
        occ_set = set(occ)
        for i in occ:
            for l in range(1, horizon + 1):
                if i + l in occ_set:
                    witnessed.add(l)
    for l0 in range(1, horizon + 1):
        if all(l in witnessed for l in range(l0, horizon + 1)):
            return l0
    raise NotFoundWithinHorizon(
        f"no transition length certified up to horizon {horizon}"
    )


@dataclass
class StitchKit:
    """Base rectangles per level, their transition lengths, and the derived
    per-length tabbed pairs, all certified up to one horizon."""

    x0: LanguageOracle | None
    horizon: int
    bases: list[tuple[Rectangle, int]]  # (B^(k), l(B^(k))) for k = 1..K
    tabbed: dict[int, tuple[Rectangle, Rectangle]] = field(default_factory=dict)

    @property
    def level_count(self) -> int:
        return len(self.bases)

    @property
    def l_sequence(self) -> list[int]:
        """l_k = k + max transition length among levels up to k."""
        out, best = [], 0
        for k, (_, lb) in enumerate(self.bases, start=1):
            best = max(best, lb)
            out.append(k + best)
        return out

    def level_for(self, l: int) -> int:
        """The level k with l_k <= l < l_{k+1} (the last level is unbounded)."""
        ls = self.l_sequence
        if l < ls[0]:
            raise ValueError(f"gap {l} below the smallest level length {ls[0]}")
        k = 1
        for i, lk in enumerate(ls, start=1):
            if lk <= l:
                k = i
        return k


def _min_language_word(x0: LanguageOracle, n: int) -> str:
    if n > x0.horizon:
        raise NotFoundWithinHorizon(f"length {n} beyond oracle horizon")
    try:
        word = next(iter(x0.words(n)))
    except StopIteration:
        raise NotFoundWithinHorizon(f"language empty at length {n}") from None
    return word


def build_stitch_kit(
    x0: LanguageOracle, k_max: int, horizon: int
) -> StitchKit:
    """Per level k: the lexicographically smallest k x 2k rectangle of the
    lifted language and its transition length."""
    if k_max < 1:
        raise ValueError("need at least one level")
    bases = []
    for k in range(1, k_max + 1):
        word = _to_bits(x0, _min_language_word(x0, 3 * k - 1))
        B = window_to_rectangle(lift_binary(word, k))
        bases.append((B, transition_length(x0, B, horizon)))
    return StitchKit(x0, horizon, bases)


def _witness(x0: LanguageOracle, bits: str, l: int) -> str:
    """Lexicographically smallest language word (as bits) containing the base
    word at offsets 0 and l."""
    n = len(bits)
    total = l + n
    if x0.text is None:
        merged = [None] * total
        for start in (0, l):
            for j, c in enumerate(bits):
                if merged[start + j] not in (None, c):
                    raise NoWitness(l)
                merged[start + j] = c
        return "".join(c if c is not None else "0" for c in merged)
    if total > x0.horizon:
        raise NoWitness(l)
    u = _to_oracle_word(x0, bits)
    occ = set(x0.occurrences(u))
    best: str | None = None
    for i in sorted(occ):
        if i + l in occ and i + total <= len(x0.text):
            cand = x0.text[i : i + total]
            if best is None or cand < best:
                best = cand
    if best is None:
        raise NoWitness(l)
    return _to_bits(x0, best)


def tabbed_rectangles(
    kit: StitchKit, l: int
) -> tuple[Rectangle, Rectangle]:
    """The pair (R_l, R-bar_l) of widths l and l+1: central cuts of witnesses
    realizing the base rectangle of the level of l at gaps l and l+1.  Both
    start with the right half of the base rectangle and end with its left
    half."""
    if l in kit.tabbed:
        return kit.tabbed[l]
    if kit.x0 is None:
        raise NoWitness(l)
    k = kit.level_for(l)
    B, _ = kit.bases[k - 1]
    bits = rectangle_to_binary_word(B)
    pair = []
    for gap in (l, l + 1):
        witness = _witness(kit.x0, bits, gap)
        window = lift_binary(witness, k)
        pair.append(
            extract_rectangle(window, k, k, gap + k - 1)
        )
    kit.tabbed[l] = (pair[0], pair[1])
    return kit.tabbed[l]


def check_stitchable(
    kit: StitchKit, l: int
) -> tuple[bool, list[Rectangle]]:
    """Every k_l x k_l sub-rectangle of the four concatenations of the tabbed
    pair must lie in the lifted language.  Returns the verdict and the
    offending sub-rectangles."""
    if kit.x0 is None:
        raise ValueError("kit carries no oracle to check against")
    R, Rbar = tabbed_rectangles(kit, l)
    k = R.rows
    bad: list[Rectangle] = []
    for left in (R, Rbar):
        for right in (R, Rbar):
            cells = tuple(
                a + b for a, b in zip(left.cells, right.cells)
            )
            glued = Rectangle.from_rows(cells)
            for i in range(glued.width - k + 1):
                sub = glued.sub(k, i, k)
                if not lifted_contains(kit.x0, sub):
                    if sub not in bad:
                        bad.append(sub)
    return not bad, bad


# --- embeddings --------------------------------------------------------------


def _replace_gaps(
    w: ArrayWindow,
    cuts: Sequence[int],
    blocks: dict[int, Rectangle],
    k: int,
) -> ArrayWindow:
    cells = [list(row) for row in w.cells]
    for a, b in zip(cuts, cuts[1:]):
        block = blocks.get(b - a)
        if block is None:
            raise NoWitness(b - a)
        j = a + 1 - w.origin
        for i in range(k):
            cells[i][j : j + block.width] = block.cells[i]
    return ArrayWindow(
        w.chain, w.origin, tuple(tuple(r) for r in cells), INDEPENDENT
    )


def embed_periodic(
    w: ArrayWindow, cuts: Sequence[int], p: int, kit: StitchKit
) -> ArrayWindow:
    """Replace rows 1..k_p of every complete p-gap between consecutive cuts
    with the tabbed rectangle R_p.  Rows above k_p are untouched; the output
    is in independent mode."""
    if any(b - a != p for a, b in zip(cuts, cuts[1:])):
        raise ValueError("cut positions are not p-periodic")
    k = kit.level_for(p)
    if k >= w.rows:
        raise ValueError("model window needs rows above the embedding level")
    R, _ = tabbed_rectangles(kit, p)
    return _replace_gaps(w, cuts, {p: R}, k)


def embed_aperiodic(
    w: ArrayWindow, ms: MarkerSystem, row: int, kit: StitchKit
) -> ArrayWindow:
    """As embed_periodic over a two-gap marker row: each gap is replaced by
    the tabbed rectangle of matching width (R for l, R-bar for l+1)."""
    l = ms.gaps[row - 1]
    k = kit.level_for(l)
    if k >= w.rows:
        raise ValueError("model window needs rows above the embedding level")
    R, Rbar = tabbed_rectangles(kit, l)
    cuts = ms.positions_between(row, w.origin, w.origin + w.columns - 1)
    return _replace_gaps(w, cuts, {l: R, l + 1: Rbar}, k)


def convergence_check(
    systems: Sequence[tuple[str, ArrayWindow, int, int]],
    x0: LanguageOracle,
    size: int,
) -> dict:
    """For each (name, window, first, last): every size x size rectangle of
    the window's first ``size`` rows, within the column span [first, last],
    must appear in the lifted language of x0.  Lists every violation."""
    report: dict = {"size": size, "systems": [], "ok": True}
    for name, w, first, last in systems:
        if w.rows < size:
            raise ValueError(f"{name}: window has fewer than {size} rows")
        violations = []
        for col in range(first, last - size + 2):
            rect = extract_rectangle(w, size, col, col + size - 1)
            if not lifted_contains(x0, rect):
                violations.append(
                    {"column": col, "cells": rect.cells}
                )
        report["systems"].append(
            {
                "name": name,
                "span": [first, last],
                "checked": max(0, last - size + 2 - first),
                "violations": violations,
            }
        )
        if violations:
            report["ok"] = False
    return report


def reconstruct(w: ArrayWindow, k: int) -> ArrayWindow:
    """Recompute rows 1..k from row k+1 by repeated amalgamation.  Rows above
    k must already be inverse-limit consistent among themselves."""
    if not 1 <= k < w.rows:
        raise ValueError("need at least one intact row above the target")
    for j in range(k + 1, w.rows):
        table = w.chain.maps[j - 1]
        if any(
            table[m - 1] != v for v, m in zip(w.cells[j - 1], w.cells[j])
        ):
            raise ValueError(f"rows {j} and {j + 1} are not amalgamation-consistent")
    cells = [list(row) for row in w.cells]
    for j in range(k, 0, -1):
        table = w.chain.maps[j - 1]
        cells[j - 1] = [table[m - 1] for m in cells[j]]
    return ArrayWindow(
        w.chain, w.origin, tuple(tuple(r) for r in cells), INVERSE_LIMIT
    )


# --- .kit text format --------------------------------------------------------
#
# header: "K horizon"; per level: "level k lB" then k rows of 2k symbols;
# per tabbed length: "tab l" then k_l rows of l symbols, "tabbar l" then
# k_l rows of l+1 symbols.


def write_kit(path: str | Path, kit: StitchKit) -> None:
    lines = [f"{kit.level_count} {kit.horizon}"]
    for k, (B, lb) in enumerate(kit.bases, start=1):
        lines.append(f"level {k} {lb}")
        lines.extend(" ".join(str(v) for v in row) for row in B.cells)
    for l in sorted(kit.tabbed):
        R, Rbar = kit.tabbed[l]
        lines.append(f"tab {l}")
        lines.extend(" ".join(str(v) for v in row) for row in R.cells)
        lines.append(f"tabbar {l}")
        lines.extend(" ".join(str(v) for v in row) for row in Rbar.cells)
    Path(path).write_text("\n".join(lines) + "\n")


def read_kit(path: str | Path) -> StitchKit:
    raw = [l for l in Path(path).read_text().splitlines() if l.strip()]
    levels, horizon = (int(t) for t in raw[0].split())
    i = 1
    bases: list[tuple[Rectangle, int]] = []
    for _ in range(levels):
        _, k_s, lb_s = raw[i].split()
        k, lb = int(k_s), int(lb_s)
        rows = [
            tuple(int(t) for t in raw[i + 1 + r].split()) for r in range(k)
        ]
        bases.append((Rectangle.from_rows(rows), lb))
        i += 1 + k
    kit = StitchKit(None, horizon, bases)
    while i < len(raw):
        tag, l_s = raw[i].split()
        assert tag == "tab"
        l = int(l_s)
        k = kit.level_for(l)
        r_rows = [
            tuple(int(t) for t in raw[i + 1 + r].split()) for r in range(k)
        ]
        i += 1 + k
        tag2, l2 = raw[i].split()
        assert tag2 == "tabbar" and int(l2) == l
        rb_rows = [
            tuple(int(t) for t in raw[i + 1 + r].split()) for r in range(k)
        ]
        i += 1 + k
        kit.tabbed[l] = (
            Rectangle.from_rows(r_rows),
            Rectangle.from_rows(rb_rows),
        )
    return kit
