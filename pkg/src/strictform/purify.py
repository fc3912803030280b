"""Good/bad classification of k-rectangles against target families, tabbed
replacement, and the staged purification pipeline over a nested family tree.

Classification is decided on the truncated metric value only, with marker
flags stripped, so the pipeline is deterministic and platform independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .arrays import (
    INDEPENDENT,
    ArrayWindow,
    Rectangle,
    extract_rectangle,
    lift_binary,
    window_to_rectangle,
)
from .generators import GeneratorSpec, parse_spec
from .markers import MarkerSystem, build_marker_system, check_two_gaps
from .measures import (
    EmpiricalMeasure,
    Truncation,
    dstar,
    empirical_measure,
)

GOOD = "good"
BAD = "bad"


class MissingLength(ValueError):
    """No good rectangle of one of the two admissible widths."""

    def __init__(self, width: int):
        super().__init__(f"no good rectangle of width {width}")
        self.width = width


class SeparationViolation(ValueError):
    """The closeness radius does not respect the family separation policy."""


class InvalidMarkers(ValueError):
    """The marker system violates the two-gap or congruency conditions."""


@dataclass(frozen=True)
class TargetFamily:
    """A node of the partition tree: its member measures and the closeness
    radius used to call a rectangle good at this stage."""

    path: tuple[int, ...]
    members: tuple[EmpiricalMeasure, ...]
    gamma: Fraction

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("family needs at least one member")
        trunc = self.members[0].truncation
        if any(m.truncation != trunc for m in self.members):
            raise ValueError("family members must share a truncation")

    @property
    def truncation(self) -> Truncation:
        return self.members[0].truncation


@dataclass
class GoodFamily:
    """Record of one family's good rectangles at one stage, split by width."""

    stage: int
    depth: int
    path: tuple[int, ...]
    by_width: dict[int, list[Rectangle]] = field(default_factory=dict)
    tabbed: dict[int, Rectangle] = field(default_factory=dict)

    def add(self, rect: Rectangle) -> None:
        bucket = self.by_width.setdefault(rect.width, [])
        if rect not in bucket:
            bucket.append(rect)


def classify(rect: Rectangle, family: TargetFamily) -> str:
    """Good iff the truncated distance to some member is below gamma."""
    bare = rect.without_marks()
    for member in family.members:
        if dstar(bare, member, family.truncation).value < family.gamma:
            return GOOD
    return BAD


def extract_k_rectangles(
    w: ArrayWindow, ms: MarkerSystem, k: int
) -> list[Rectangle]:
    """All blocks of rows 1..k between consecutive row-k markers, with the
    finer-row markers embedded as flags."""
    if not 1 <= k <= ms.row_count:
        raise InvalidMarkers(f"marker system has no row {k}")
    if not check_two_gaps(ms, k):
        raise InvalidMarkers(f"row {k} gaps are not two-sized")
    l = ms.gaps[k - 1]
    out = []
    ps = ms.positions_between(k, w.origin, w.origin + w.columns - 1)
    for p, q in zip(ps, ps[1:]):
        if q - p not in (l, l + 1):
            raise InvalidMarkers(f"gap {q - p} at {p} not in {{{l},{l + 1}}}")
        out.append(extract_rectangle(w, k, p + 1, q, ms))
    return out


def select_tabbed(
    good: Sequence[Rectangle], l: int
) -> tuple[Rectangle, Rectangle]:
    """Lexicographically smallest good rectangle of each width l and l+1."""
    chosen: dict[int, Rectangle] = {}
    for rect in good:
        cur = chosen.get(rect.width)
        if cur is None or (rect.cells, rect.marks) < (cur.cells, cur.marks):
            chosen[rect.width] = rect
    for width in (l, l + 1):
        if width not in chosen:
            raise MissingLength(width)
    return chosen[l], chosen[l + 1]


def replace_bad(
    w: ArrayWindow,
    ms: MarkerSystem,
    k: int,
    family: TargetFamily,
    tabbed: dict[int, Rectangle],
    *,
    verdicts: dict[Rectangle, str] | None = None,
) -> tuple[ArrayWindow, MarkerSystem, int, int]:
    """Overwrite every bad k-rectangle with the tabbed rectangle of its width.

    Rows above k and row->=k markers never change; markers of rows below k
    inside a replaced gap are rewritten from the tabbed rectangle's flags.
    Returns (window, markers, changed columns, replaced count); the output
    window is in independent mode.
    """
    l = ms.gaps[k - 1]
    cells = [list(row) for row in w.cells]
    sub_rows = {
        j: set(ms.row(j)) for j in range(1, min(k, ms.row_count + 1))
    }
    changed = replaced = 0
    ps = ms.positions_between(k, w.origin, w.origin + w.columns - 1)
    for p, q in zip(ps, ps[1:]):
        rect = extract_rectangle(w, k, p + 1, q, ms)
        verdict = (
            verdicts.get(rect) if verdicts is not None else None
        ) or classify(rect, family)
        if verdict == GOOD:
            continue
        block = tabbed[q - p]
        a = p + 1 - w.origin
        for i in range(k):
            cells[i][a : a + block.width] = block.cells[i]
        for j in range(1, k):
            inside = {x for x in sub_rows[j] if p < x < q}
            fresh = {
                p + 1 + c
                for c, flag in enumerate(block.marks[j - 1])
                if flag and p + 1 + c < q
            }
            sub_rows[j] = (sub_rows[j] - inside) | fresh
        changed += q - p
        replaced += 1
    out = ArrayWindow(
        w.chain, w.origin, tuple(tuple(r) for r in cells), INDEPENDENT
    )
    new_ms = ms
    for j in range(1, k):
        new_ms = new_ms.with_row(j, sorted(sub_rows[j]))
    return out, new_ms, changed, replaced


# --- configuration ----------------------------------------------------------


@dataclass(frozen=True)
class LeafSpec:
    path: tuple[int, ...]
    target: GeneratorSpec
    samples: tuple[GeneratorSpec, ...]


@dataclass(frozen=True)
class PurifyConfig:
    """Declarative experiment description (see README for the JSON schema)."""

    truncation: Truncation
    gaps: tuple[int, ...]
    depths: tuple[int, ...]
    epsilons: tuple[Fraction, ...]
    columns: int
    leaves: tuple[LeafSpec, ...]
    gammas: tuple[Fraction, ...] | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        m = len(self.depths)
        if len(self.epsilons) != m or (self.gammas and len(self.gammas) != m):
            raise ValueError("one epsilon (and gamma, if given) per stage")
        if list(self.depths) != sorted(set(self.depths)):
            raise ValueError("stage depths must be strictly increasing")
        if self.depths[-1] > len(self.gaps):
            raise ValueError("stage depth exceeds the marker hierarchy")
        for i, eps in enumerate(self.epsilons):
            if eps <= 0 or eps > self.epsilons[0] * Fraction(1, 2**i):
                raise ValueError(
                    "epsilons must be positive with eps_m <= eps_1 * 2^(1-m)"
                )
        if self.truncation[0] > self.depths[0]:
            raise ValueError(
                "truncation rows must not exceed the first stage depth"
            )
        depth = len(self.leaves[0].path) if self.leaves else 0
        if depth != m or any(len(l.path) != m for l in self.leaves):
            raise ValueError("leaf paths must match the number of stages")

    @property
    def stage_count(self) -> int:
        return len(self.depths)


def config_from_dict(raw: dict) -> PurifyConfig:
    leaves: list[LeafSpec] = []

    def walk(nodes: list, prefix: tuple[int, ...]) -> None:
        for i, node in enumerate(nodes, start=1):
            path = prefix + (i,)
            if "families" in node:
                walk(node["families"], path)
            else:
                leaves.append(
                    LeafSpec(
                        path,
                        parse_spec(node["target"]),
                        tuple(parse_spec(s) for s in node["samples"]),
                    )
                )

    walk(raw["tree"], ())
    return PurifyConfig(
        truncation=(int(raw["truncation"][0]), int(raw["truncation"][1])),
        gaps=tuple(int(g) for g in raw["gaps"]),
        depths=tuple(int(d) for d in raw["depths"]),
        epsilons=tuple(Fraction(e) for e in raw["epsilons"]),
        columns=int(raw["columns"]),
        leaves=tuple(leaves),
        gammas=(
            tuple(Fraction(g) for g in raw["gammas"])
            if raw.get("gammas")
            else None
        ),
        seed=int(raw.get("seed", 0)),
    )


# --- the staged pipeline ----------------------------------------------------


@dataclass
class _Sample:
    path: tuple[int, ...]
    spec: GeneratorSpec
    window: ArrayWindow
    markers: MarkerSystem
    changed: list[int] = field(default_factory=list)


def _window_measure(
    sample: _Sample, truncation: Truncation, tag: str
) -> EmpiricalMeasure:
    rect = window_to_rectangle(sample.window).without_marks()
    return empirical_measure(rect, truncation, source_tag=tag)


def _stage_gamma(
    config: PurifyConfig,
    stage: int,
    families: dict[tuple[int, ...], TargetFamily | None],
    members: dict[tuple[int, ...], list[EmpiricalMeasure]],
) -> Fraction:
    eps = config.epsilons[stage - 1]
    sep: Fraction | None = None
    paths = sorted(members)
    for i, pa in enumerate(paths):
        for pb in paths[i + 1 :]:
            for ma in members[pa]:
                for mb in members[pb]:
                    d = dstar(ma, mb, config.truncation).value
                    sep = d if sep is None else min(sep, d)
    if config.gammas is not None:
        gamma = config.gammas[stage - 1]
        if gamma >= eps:
            raise SeparationViolation(
                f"stage {stage}: gamma {gamma} not below epsilon {eps}"
            )
        if sep is not None and 2 * gamma >= sep:
            raise SeparationViolation(
                f"stage {stage}: gamma {gamma} not below half separation "
                f"{sep}/2"
            )
        return gamma
    if sep is None:
        return eps * Fraction(9, 10)
    if sep == 0:
        raise SeparationViolation(f"stage {stage}: families are not separated")
    return min(eps, sep / 2) * Fraction(9, 10)


def purify_stage(
    samples: list[_Sample],
    config: PurifyConfig,
    stage: int,
    targets: dict[tuple[int, ...], EmpiricalMeasure],
) -> tuple[dict, dict[tuple[int, ...], GoodFamily]]:
    """Run one classification/replacement stage in place over the samples."""
    k = config.depths[stage - 1]
    eps = config.epsilons[stage - 1]
    trunc = config.truncation
    paths = sorted({s.path[:stage] for s in samples})
    members = {
        p: [targets[lp] for lp in sorted(targets) if lp[:stage] == p]
        for p in paths
    }
    gamma = _stage_gamma(config, stage, {}, members)

    families = {
        p: TargetFamily(p, tuple(members[p]), gamma) for p in paths
    }
    report: dict = {"stage": stage, "k": k, "gamma": gamma, "families": {}}
    good_records: dict[tuple[int, ...], GoodFamily] = {}

    for path in paths:
        family = families[path]
        record = GoodFamily(stage, k, path)
        verdict_cache: dict[Rectangle, str] = {}
        census = {GOOD: 0, BAD: 0}
        fam_samples = [s for s in samples if s.path[:stage] == path]
        all_good: list[Rectangle] = []
        for sample in fam_samples:
            for rect in extract_k_rectangles(sample.window, sample.markers, k):
                verdict = verdict_cache.get(rect)
                if verdict is None:
                    verdict = classify(rect, family)
                    verdict_cache[rect] = verdict
                census[verdict] += 1
                if verdict == GOOD:
                    all_good.append(rect)
                    record.add(rect)
        l = config.gaps[k - 1]
        short, long = select_tabbed(all_good, l)
        tabbed = {short.width: short, long.width: long}
        record.tabbed = dict(tabbed)

        fam_report: dict = {
            "census": dict(census),
            "census_ok": census[GOOD] * 1
            >= (census[GOOD] + census[BAD]) * (1 - gamma),
            "samples": [],
        }
        displacement_max = Fraction(0)
        out_measures = []
        for sample in fam_samples:
            before = _window_measure(sample, trunc, "before")
            window, ms, changed, replaced = replace_bad(
                sample.window,
                sample.markers,
                k,
                family,
                tabbed,
                verdicts=verdict_cache,
            )
            sample.window, sample.markers = window, ms
            sample.changed.append(changed)
            # an untouched window keeps its measure; skip the recount
            after = (
                before
                if changed == 0
                else _window_measure(sample, trunc, "after")
            )
            out_measures.append(after)
            moved = dstar(before, after, trunc).value
            displacement_max = max(displacement_max, moved)
            total_good = all(
                classify(rect, family) == GOOD
                for rect in extract_k_rectangles(window, ms, k)
            )
            fam_report["samples"].append(
                {
                    "generator": sample.spec.spec,
                    "replaced": replaced,
                    "changed_columns": changed,
                    "changed_fraction": Fraction(changed, config.columns),
                    "displacement": moved,
                    "all_good_after": total_good,
                }
            )
        fam_report["displacement_max"] = displacement_max
        fam_report["displacement_ok"] = displacement_max < 2 * eps
        diameter = Fraction(0)
        for i, ma in enumerate(out_measures):
            for mb in out_measures[i + 1 :]:
                diameter = max(diameter, dstar(ma, mb, trunc).value)
        fam_report["diameter"] = diameter
        fam_report["diameter_ok"] = diameter <= 3 * eps
        report["families"]["/".join(map(str, path))] = fam_report
        good_records[path] = record
    return report, good_records


def check_nesting(
    fine: GoodFamily, coarse: GoodFamily, coarse_l: int
) -> bool:
    """Every good fine-stage rectangle, restricted to the coarse depth, must
    split along its embedded coarse-row markers into coarse-stage good
    rectangles of the parent family."""
    k = coarse.depth
    coarse_good = {
        r.without_marks() for rects in coarse.by_width.values() for r in rects
    }
    for rects in fine.by_width.values():
        for rect in rects:
            cuts = [
                j + 1
                for j, flag in enumerate(rect.marks[k - 1])
                if flag and j + 1 < rect.width
            ]
            bounds = [0] + cuts + [rect.width]
            for a, b in zip(bounds, bounds[1:]):
                if b - a not in (coarse_l, coarse_l + 1):
                    return False
                piece = rect.sub(k, a, b - a).without_marks()
                if piece not in coarse_good:
                    return False
    return True


def purify_pipeline(config: PurifyConfig) -> dict:
    """Run all stages over refining families and verify the stage invariants:
    good-family nesting, per-family diameters, and cumulative column-change
    accounting."""
    word_len = config.columns + len(config.gaps) - 1
    base_ms = build_marker_system(config.columns, 0, config.gaps)
    rows = len(config.gaps)

    targets: dict[tuple[int, ...], EmpiricalMeasure] = {}
    samples: list[_Sample] = []
    for leaf in config.leaves:
        target_rect = window_to_rectangle(
            lift_binary(leaf.target.word(word_len), rows)
        )
        targets[leaf.path] = empirical_measure(
            target_rect, config.truncation, source_tag=leaf.target.spec
        )
        for spec in leaf.samples:
            samples.append(
                _Sample(
                    leaf.path,
                    spec,
                    lift_binary(spec.word(word_len), rows),
                    base_ms,
                )
            )

    report: dict = {"stages": [], "columns": config.columns}
    records: dict[int, dict[tuple[int, ...], GoodFamily]] = {}
    for stage in range(1, config.stage_count + 1):
        stage_report, good = purify_stage(samples, config, stage, targets)
        records[stage] = good
        report["stages"].append(stage_report)

    nesting_ok = True
    for stage in range(2, config.stage_count + 1):
        coarse_l = config.gaps[config.depths[stage - 2] - 1]
        for path, fine in records[stage].items():
            coarse = records[stage - 1][path[: stage - 1]]
            if not check_nesting(fine, coarse, coarse_l):
                nesting_ok = False
    report["nesting_ok"] = nesting_ok
    report["cumulative_changes"] = [
        {
            "generator": s.spec.spec,
            "path": "/".join(map(str, s.path)),
            "changed_columns_per_stage": list(s.changed),
            "changed_columns_total": sum(s.changed),
        }
        for s in samples
    ]
    report["ok"] = (
        nesting_ok
        and all(
            fam["displacement_ok"] and fam["diameter_ok"]
            and all(s["all_good_after"] for s in fam["samples"])
            for st in report["stages"]
            for fam in st["families"].values()
        )
    )
    return report
