"""SpectrumQA construction: metadata extraction, templated QA, and QC.

Stage 1 distills each sample into a ``SampleMetadata`` record (per-band
transmitter tallies, shared bands, spatial statistics, severity, hotspots,
and a mitigation recommendation). Stage 2 renders question-answer pairs from
a fixed template bank across four categories; every answer is built
deterministically from the metadata and carries its grounded fields. Stage 3
re-checks each emitted answer against the metadata and measures linguistic
uniqueness over sliding windows of consecutive answers.

Category mix follows the corpus proportions: descriptive 0.36, localization
0.28, reasoning 0.175, prescriptive 0.185. When a prescriptive question is
drawn for a sample with no co-channel sharing (no recommendation exists), a
descriptive question is substituted and flagged. Reasoning answers embed
fine-grained map statistics, and within one sample each reasoning draw uses
a different template, so consecutive reasoning answers stay unique; draws
beyond the reasoning template count also fall back to descriptive.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .radiomap import (
    GroundTruthLabels,
    InterferenceGrid,
    QUADRANT_ORDER,
    to_dbm,
)
from .scenarios import BAND_ORDER, TransmitterSet

CATEGORIES = ("descriptive", "localization", "reasoning", "prescriptive")
CATEGORY_PROBS = {
    "descriptive": 0.36,
    "localization": 0.28,
    "reasoning": 0.175,
    "prescriptive": 0.185,
}

QUADRANT_NAMES = {"NW": "northwest", "NE": "northeast", "SW": "southwest", "SE": "southeast"}
QA_WINDOW = 100


class QCError(RuntimeError):
    """Raised when a generated corpus fails factual verification."""


@dataclass(frozen=True)
class Mitigation:
    source_band: str
    target_band: str
    moved: int
    before: int
    after: int

    def to_dict(self) -> dict:
        return {
            "source_band": self.source_band,
            "target_band": self.target_band,
            "moved": self.moved,
            "before": self.before,
            "after": self.after,
        }


@dataclass(frozen=True)
class SampleMetadata:
    """Stage-1 ground-truth substrate for one sample."""

    per_band_counts: dict[str, tuple[int, int]]  # band -> (satellites, base stations)
    shared_bands: tuple[str, ...]
    quadrant_means: tuple[float, float, float, float]
    hotspot_count: int
    hotspot_centroids: tuple[tuple[float, float], ...]
    severity: str
    hottest_quadrant: str
    positive_fraction: float
    peak_dbm: float
    mean_dbm: float
    mitigation: Mitigation | None

    def band_total(self, band: str) -> int:
        s, b = self.per_band_counts[band]
        return s + b

    def to_dict(self) -> dict:
        return {
            "per_band_counts": {b: list(c) for b, c in self.per_band_counts.items()},
            "shared_bands": list(self.shared_bands),
            "quadrant_means": list(self.quadrant_means),
            "hotspot_count": self.hotspot_count,
            "hotspot_centroids": [list(c) for c in self.hotspot_centroids],
            "severity": self.severity,
            "hottest_quadrant": self.hottest_quadrant,
            "positive_fraction": self.positive_fraction,
            "peak_dbm": self.peak_dbm,
            "mean_dbm": self.mean_dbm,
            "mitigation": self.mitigation.to_dict() if self.mitigation else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SampleMetadata":
        mit = d.get("mitigation")
        return cls(
            per_band_counts={b: (int(c[0]), int(c[1])) for b, c in d["per_band_counts"].items()},
            shared_bands=tuple(d["shared_bands"]),
            quadrant_means=tuple(float(v) for v in d["quadrant_means"]),
            hotspot_count=int(d["hotspot_count"]),
            hotspot_centroids=tuple((float(r), float(c)) for r, c in d["hotspot_centroids"]),
            severity=d["severity"],
            hottest_quadrant=d["hottest_quadrant"],
            positive_fraction=float(d["positive_fraction"]),
            peak_dbm=float(d["peak_dbm"]),
            mean_dbm=float(d["mean_dbm"]),
            mitigation=Mitigation(**mit) if mit else None,
        )


def most_congested_band(per_band_counts: dict[str, tuple[int, int]]) -> str:
    """Band with the most transmitters; ties broken in canonical band order."""
    return max(BAND_ORDER, key=lambda b: sum(per_band_counts.get(b, (0, 0))))


def coolest_quadrant(quadrant_means) -> str:
    return QUADRANT_ORDER[int(np.argmin(np.asarray(quadrant_means)))]


def mitigation_recommendation(metadata: SampleMetadata) -> Mitigation | None:
    """Move up to two satellites off the busiest band onto the emptiest one.

    Returns None when no band is shared (nothing to mitigate). The moved
    count is min(2, satellites on the source band); with zero satellites on
    the source the recommendation is a no-op tuple, which the prescriptive
    templates phrase accordingly.
    """
    if not metadata.shared_bands:
        return None
    counts = metadata.per_band_counts
    source = most_congested_band(counts)
    others = [b for b in BAND_ORDER if b != source]
    target = min(others, key=lambda b: sum(counts.get(b, (0, 0))))
    moved = min(2, counts[source][0])
    before = metadata.band_total(source)
    return Mitigation(source, target, moved, before, before - moved)


def extract_metadata(
    transmitter_set: TransmitterSet,
    labels: GroundTruthLabels,
    hotspots: tuple[int, tuple[tuple[float, float], ...]],
    grid: InterferenceGrid,
) -> SampleMetadata:
    """Stage 1: tally the deployment and collect map statistics."""
    counts: dict[str, tuple[int, int]] = {}
    for band in BAND_ORDER:
        sats = sum(
            1 for t in transmitter_set.transmitters if t.band == band and t.kind == "satellite"
        )
        bss = sum(
            1
            for t in transmitter_set.transmitters
            if t.band == band and t.kind == "base_station"
        )
        counts[band] = (sats, bss)
    shared = tuple(b for b in BAND_ORDER if sum(counts[b]) >= 2)
    dbm = to_dbm(grid.values)
    meta = SampleMetadata(
        per_band_counts=counts,
        shared_bands=shared,
        quadrant_means=labels.quadrant_means,
        hotspot_count=hotspots[0],
        hotspot_centroids=hotspots[1],
        severity=labels.severity,
        hottest_quadrant=labels.hottest_quadrant,
        positive_fraction=labels.positive_fraction,
        peak_dbm=float(dbm.max()),
        mean_dbm=float(dbm.mean()),
        mitigation=None,
    )
    return replace(meta, mitigation=mitigation_recommendation(meta))


# ---------------------------------------------------------------------------
# Grounded-field resolvers: canonical values recomputed from metadata alone,
# used by QC to cross-check what the templates emitted.
# ---------------------------------------------------------------------------


def _fmt(value: float, spec: str) -> str:
    return format(value, spec)


def _first_centroid(meta: SampleMetadata) -> tuple[float, float]:
    return meta.hotspot_centroids[0] if meta.hotspot_centroids else (0.0, 0.0)


def _centroid_quadrant(centroid: tuple[float, float]) -> str:
    row, col = centroid
    return QUADRANT_ORDER[(2 if row >= 32 else 0) + (1 if col >= 32 else 0)]


GROUNDED_RESOLVERS: dict[str, Callable[[SampleMetadata], str]] = {
    "band": lambda m: most_congested_band(m.per_band_counts),
    "satellite_count": lambda m: str(m.per_band_counts[most_congested_band(m.per_band_counts)][0]),
    "bs_count": lambda m: str(m.per_band_counts[most_congested_band(m.per_band_counts)][1]),
    "band_total": lambda m: str(m.band_total(most_congested_band(m.per_band_counts))),
    "severity": lambda m: m.severity,
    "quadrant": lambda m: QUADRANT_NAMES[m.hottest_quadrant],
    "low_quadrant": lambda m: QUADRANT_NAMES[coolest_quadrant(m.quadrant_means)],
    "hotspot_count": lambda m: str(m.hotspot_count),
    "shared_count": lambda m: str(len(m.shared_bands)),
    "shared_list": lambda m: ", ".join(m.shared_bands) if m.shared_bands else "none",
    "total_transmitters": lambda m: str(sum(m.band_total(b) for b in BAND_ORDER)),
    "satellite_total": lambda m: str(sum(m.per_band_counts[b][0] for b in BAND_ORDER)),
    "pct": lambda m: _fmt(100.0 * m.positive_fraction, ".2f"),
    "peak_dbm": lambda m: _fmt(m.peak_dbm, ".2f"),
    "mean_dbm": lambda m: _fmt(m.mean_dbm, ".2f"),
    "qmean": lambda m: _fmt(m.quadrant_means[QUADRANT_ORDER.index(m.hottest_quadrant)], ".6f"),
    "low_qmean": lambda m: _fmt(min(m.quadrant_means), ".6f"),
    "nw_mean": lambda m: _fmt(m.quadrant_means[0], ".6f"),
    "ne_mean": lambda m: _fmt(m.quadrant_means[1], ".6f"),
    "sw_mean": lambda m: _fmt(m.quadrant_means[2], ".6f"),
    "se_mean": lambda m: _fmt(m.quadrant_means[3], ".6f"),
    "hotspot_row": lambda m: _fmt(_first_centroid(m)[0], ".1f"),
    "hotspot_col": lambda m: _fmt(_first_centroid(m)[1], ".1f"),
    "hotspot_quadrant": lambda m: QUADRANT_NAMES[_centroid_quadrant(_first_centroid(m))],
    "source_band": lambda m: m.mitigation.source_band if m.mitigation else "",
    "target_band": lambda m: m.mitigation.target_band if m.mitigation else "",
    "moved": lambda m: str(m.mitigation.moved) if m.mitigation else "",
    "before": lambda m: str(m.mitigation.before) if m.mitigation else "",
    "after": lambda m: str(m.mitigation.after) if m.mitigation else "",
}


def resolve_grounded(meta: SampleMetadata, key: str) -> str | None:
    resolver = GROUNDED_RESOLVERS.get(key)
    return resolver(meta) if resolver else None


# ---------------------------------------------------------------------------
# Template bank
# ---------------------------------------------------------------------------

Builder = Callable[[SampleMetadata], tuple[str, dict[str, str]]]


@dataclass(frozen=True)
class QATemplate:
    id: str
    category: str
    variants: tuple[str, ...]  # 4-8 question phrasings, formatted with grounded fields
    build: Builder

    def __post_init__(self) -> None:
        if not 4 <= len(self.variants) <= 8:
            raise ValueError(f"template {self.id}: need 4-8 variants, got {len(self.variants)}")


@dataclass(frozen=True)
class QAPair:
    sample_id: str
    category: str
    template_id: str
    variant_id: int
    question: str
    answer: str
    grounded: dict[str, str]
    substituted: bool = False

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "category": self.category,
            "template_id": self.template_id,
            "variant_id": self.variant_id,
            "question": self.question,
            "answer": self.answer,
            "grounded": self.grounded,
            "substituted": self.substituted,
        }


def _g(meta: SampleMetadata, *keys: str) -> dict[str, str]:
    return {k: GROUNDED_RESOLVERS[k](meta) for k in keys}


def _build_congested(meta: SampleMetadata):
    g = _g(meta, "band", "satellite_count", "bs_count")
    if meta.band_total(most_congested_band(meta.per_band_counts)) >= 2:
        answer = (
            f"The {g['band']} band is most congested with {g['satellite_count']} satellite "
            f"beams and {g['bs_count']} terrestrial stations sharing the same frequency."
        )
    else:
        answer = (
            f"No band carries more than one transmitter; the busiest is {g['band']} with "
            f"{g['satellite_count']} satellite beams and {g['bs_count']} terrestrial stations."
        )
    return answer, g


def _build_hotspot_count(meta: SampleMetadata):
    g = _g(meta, "hotspot_count")
    return (
        f"The number of distinct interference hotspots on the map is {g['hotspot_count']}.",
        g,
    )


def _build_severity(meta: SampleMetadata):
    g = _g(meta, "severity", "pct")
    return (
        f"The overall interference severity is {g['severity']}, with {g['pct']}% of the "
        f"grid above the interference threshold.",
        g,
    )


def _build_shared(meta: SampleMetadata):
    if meta.shared_bands:
        g = _g(meta, "shared_count", "shared_list")
        answer = (
            f"{g['shared_count']} of the 5 frequency bands experience co-channel sharing: "
            f"{g['shared_list']}."
        )
    else:
        g = _g(meta, "shared_count")
        answer = "0 of the 5 frequency bands experience co-channel sharing."
    return answer, g


def _build_hottest_region(meta: SampleMetadata):
    g = _g(meta, "quadrant")
    return f"The {g['quadrant']} region shows the highest interference concentration.", g


def _build_coolest_region(meta: SampleMetadata):
    g = _g(meta, "low_quadrant", "low_qmean")
    return (
        f"The {g['low_quadrant']} quadrant is least affected, with the lowest mean "
        f"normalized interference ({g['low_qmean']}).",
        g,
    )


def _build_hotspot_location(meta: SampleMetadata):
    if meta.hotspot_count == 0:
        g = _g(meta, "hotspot_count")
        return "There are 0 interference hotspots on the map.", g
    g = _g(meta, "hotspot_count", "hotspot_row", "hotspot_col", "hotspot_quadrant")
    return (
        f"Interference concentrates in {g['hotspot_count']} hotspot region(s), one centered "
        f"near grid cell ({g['hotspot_row']}, {g['hotspot_col']}) in the "
        f"{g['hotspot_quadrant']} quadrant.",
        g,
    )


def _build_why_congested(meta: SampleMetadata):
    g = _g(meta, "band", "satellite_count", "bs_count", "peak_dbm", "mean_dbm")
    if meta.band_total(most_congested_band(meta.per_band_counts)) >= 2:
        answer = (
            f"Because {g['satellite_count']} satellite beams and {g['bs_count']} terrestrial "
            f"stations are all allocated to {g['band']} band, creating co-channel "
            f"interference; the aggregate map peaks at {g['peak_dbm']} dBm against a "
            f"map-wide mean of {g['mean_dbm']} dBm."
        )
    else:
        answer = (
            f"The {g['band']} band is not actually congested: it carries only "
            f"{g['satellite_count']} satellite beams and {g['bs_count']} terrestrial "
            f"stations, and the aggregate map peaks at {g['peak_dbm']} dBm against a "
            f"map-wide mean of {g['mean_dbm']} dBm."
        )
    return answer, g


def _build_why_quadrant(meta: SampleMetadata):
    g = _g(meta, "quadrant", "qmean", "peak_dbm")
    return (
        f"The {g['quadrant']} quadrant records the highest mean normalized interference, "
        f"{g['qmean']}, because co-channel footprints overlap there more than anywhere "
        f"else on a map that peaks at {g['peak_dbm']} dBm.",
        g,
    )


def _build_severity_cause(meta: SampleMetadata):
    g = _g(meta, "severity", "pct", "mean_dbm", "peak_dbm")
    return (
        f"The severity is {g['severity']} because {g['pct']}% of grid cells exceed the "
        f"interference threshold; the map-wide mean sits at {g['mean_dbm']} dBm while the "
        f"hottest cell reaches {g['peak_dbm']} dBm.",
        g,
    )


def _build_cochannel_origin(meta: SampleMetadata):
    if meta.shared_bands:
        g = _g(meta, "shared_count", "band", "band_total", "mean_dbm", "peak_dbm")
        answer = (
            f"{g['shared_count']} of the 5 bands carry multiple transmitters; the busiest, "
            f"{g['band']}, carries {g['band_total']} emitters whose powers add in the "
            f"linear domain, lifting the mean aggregate level to {g['mean_dbm']} dBm with "
            f"the strongest cell at {g['peak_dbm']} dBm."
        )
    else:
        g = _g(meta, "mean_dbm")
        answer = (
            f"No co-channel interference arises: every band carries at most one "
            f"transmitter, so the mean aggregate level stays at {g['mean_dbm']} dBm."
        )
    return answer, g


def _build_footprint_shape(meta: SampleMetadata):
    g = _g(meta, "nw_mean", "ne_mean", "sw_mean", "se_mean", "quadrant")
    return (
        f"Quadrant mean levels are NW {g['nw_mean']}, NE {g['ne_mean']}, SW {g['sw_mean']}, "
        f"SE {g['se_mean']} (normalized); the {g['quadrant']} quadrant leads because "
        f"overlapping co-channel coverage concentrates there.",
        g,
    )


def _build_satellite_role(meta: SampleMetadata):
    g = _g(
        meta,
        "satellite_total",
        "total_transmitters",
        "band",
        "satellite_count",
        "peak_dbm",
        "mean_dbm",
    )
    return (
        f"Satellites contribute {g['satellite_total']} of the {g['total_transmitters']} "
        f"transmitters; on the busiest band, {g['band']}, {g['satellite_count']} emitters "
        f"are satellite beams, so the spaceborne layer shapes much of the co-channel "
        f"overlap, with the hottest cell at {g['peak_dbm']} dBm over a {g['mean_dbm']} dBm "
        f"mean.",
        g,
    )


_NO_MITIGATION_ANSWER = (
    "No band carries more than one transmitter, so there is no co-channel "
    "interference to mitigate."
)


def _build_reallocation(meta: SampleMetadata):
    if meta.mitigation is None:
        return _NO_MITIGATION_ANSWER, {}
    if meta.mitigation.moved >= 1:
        g = _g(meta, "moved", "source_band", "target_band", "before", "after")
        answer = (
            f"Migrating {g['moved']} satellite beams from {g['source_band']} to "
            f"{g['target_band']} band would reduce co-channel transmitters from "
            f"{g['before']} to {g['after']}."
        )
    else:
        g = _g(meta, "source_band", "target_band")
        answer = (
            f"The congested {g['source_band']} band carries no satellite beams to migrate; "
            f"relief would require re-pointing terrestrial carriers toward the lightly "
            f"loaded {g['target_band']} band instead."
        )
    return answer, g


def _build_avoid_band(meta: SampleMetadata):
    if meta.mitigation is None:
        return _NO_MITIGATION_ANSWER, {}
    g = _g(meta, "source_band", "before", "target_band")
    return (
        f"New assignments should avoid the {g['source_band']} band, which already carries "
        f"{g['before']} co-channel transmitters; the {g['target_band']} band is the least "
        f"loaded alternative.",
        g,
    )


def _build_mitigation_focus(meta: SampleMetadata):
    if meta.mitigation is None:
        return _NO_MITIGATION_ANSWER, {}
    g = _g(meta, "quadrant", "source_band", "before")
    return (
        f"Mitigation should focus on the {g['quadrant']} quadrant, where mean interference "
        f"is highest, and on the {g['source_band']} band, which carries {g['before']} "
        f"co-channel transmitters.",
        g,
    )


TEMPLATES: dict[str, tuple[QATemplate, ...]] = {
    "descriptive": (
        QATemplate(
            "d_congested",
            "descriptive",
            (
                "Which frequency band is most congested?",
                "Which band carries the most transmitters?",
                "Identify the band with the heaviest co-channel load.",
                "What is the busiest frequency band in this deployment?",
                "Which of the five bands is under the most pressure?",
                "Name the most heavily shared frequency band.",
                "Which band shows the worst spectral crowding?",
                "On which band do the most emitters operate?",
            ),
            _build_congested,
        ),
        QATemplate(
            "d_hotspots",
            "descriptive",
            (
                "How many distinct interference hotspots appear on the map?",
                "Count the separate interference hotspots in this heatmap.",
                "How many isolated high-interference regions are visible?",
                "What is the number of distinct hotspot regions?",
                "How many separate areas of elevated interference can you find?",
                "How many disconnected interference clusters does the map show?",
            ),
            _build_hotspot_count,
        ),
        QATemplate(
            "d_severity",
            "descriptive",
            (
                "How severe is the overall interference?",
                "What is the overall interference severity level?",
                "Rate the interference situation across the whole map.",
                "How bad is the aggregate interference in this scene?",
                "Classify the overall severity of the observed interference.",
                "What severity class does this interference map fall into?",
            ),
            _build_severity,
        ),
        QATemplate(
            "d_shared",
            "descriptive",
            (
                "How many frequency bands experience co-channel sharing?",
                "Which bands are shared by multiple transmitters?",
                "How many of the five bands carry more than one emitter?",
                "List the bands that suffer co-channel overlap.",
                "On how many bands do transmitters collide?",
            ),
            _build_shared,
        ),
    ),
    "localization": (
        QATemplate(
            "l_hottest",
            "localization",
            (
                "Which region has the highest interference?",
                "Where is the interference concentration strongest?",
                "Which quadrant of the map is most affected?",
                "In which part of the area does interference peak?",
                "Point out the region with the heaviest interference.",
                "Which quarter of the coverage area suffers most?",
                "Where on the map is the interference worst?",
            ),
            _build_hottest_region,
        ),
        QATemplate(
            "l_coolest",
            "localization",
            (
                "Which region is least affected by interference?",
                "Where is the interference weakest?",
                "Which quadrant shows the lowest interference level?",
                "What part of the map stays cleanest?",
                "Identify the quietest quadrant of the coverage area.",
            ),
            _build_coolest_region,
        ),
        QATemplate(
            "l_hotspot_loc",
            "localization",
            (
                "Where are the interference hotspots located?",
                "Give the location of the interference hotspots.",
                "Where should I look for the strongest hotspot regions?",
                "In which cells do the hotspots sit?",
                "Describe where the hotspot regions fall on the grid.",
            ),
            _build_hotspot_location,
        ),
    ),
    "reasoning": (
        QATemplate(
            "r_why_congested",
            "reasoning",
            (
                "Why is the {band} band congested?",
                "What makes the {band} band so crowded?",
                "Explain the congestion on the {band} band.",
                "What causes the heavy load on the {band} band?",
                "Why does the {band} band suffer from interference?",
                "What is behind the spectral crowding on {band} band?",
            ),
            _build_why_congested,
        ),
        QATemplate(
            "r_why_quadrant",
            "reasoning",
            (
                "Why does the {quadrant} area show elevated interference?",
                "Explain why the {quadrant} region is the hottest.",
                "What makes the {quadrant} quadrant stand out in this map?",
                "Why is interference concentrated toward the {quadrant}?",
            ),
            _build_why_quadrant,
        ),
        QATemplate(
            "r_severity_cause",
            "reasoning",
            (
                "What drives the overall severity rating?",
                "Why did this scene receive its severity classification?",
                "Explain the reasoning behind the severity label.",
                "What evidence supports the assessed severity level?",
                "Why is the interference rated the way it is?",
            ),
            _build_severity_cause,
        ),
        QATemplate(
            "r_cochannel_origin",
            "reasoning",
            (
                "Why does co-channel interference arise in this deployment?",
                "What is the root cause of the observed interference?",
                "Explain how the interference in this scene comes about.",
                "Why do these transmitters interfere with each other?",
            ),
            _build_cochannel_origin,
        ),
        QATemplate(
            "r_footprint_shape",
            "reasoning",
            (
                "Why is the interference footprint distributed this way?",
                "Explain the spatial shape of the interference pattern.",
                "What accounts for the uneven spread of interference?",
                "Why does the map look the way it does spatially?",
            ),
            _build_footprint_shape,
        ),
        QATemplate(
            "r_satellite_role",
            "reasoning",
            (
                "What role do satellites play in the congestion?",
                "How much of the interference is driven by satellites?",
                "Explain the satellite contribution to this interference scene.",
                "Are the satellites or the ground stations the bigger factor here?",
            ),
            _build_satellite_role,
        ),
    ),
    "prescriptive": (
        QATemplate(
            "p_reallocation",
            "prescriptive",
            (
                "What reallocation would reduce interference?",
                "Suggest a band reassignment to ease the congestion.",
                "How could transmitters be moved to cut co-channel interference?",
                "What frequency migration would relieve the busiest band?",
                "Recommend a reallocation to improve this spectrum situation.",
                "Which reassignment would lower the interference level?",
            ),
            _build_reallocation,
        ),
        QATemplate(
            "p_avoid_band",
            "prescriptive",
            (
                "Which band should new traffic avoid?",
                "Where should additional transmitters not be placed?",
                "Which band is a poor choice for new assignments?",
                "If we add a transmitter, which band should we steer clear of?",
            ),
            _build_avoid_band,
        ),
        QATemplate(
            "p_focus",
            "prescriptive",
            (
                "Where should mitigation efforts focus first?",
                "What should a spectrum manager address first here?",
                "Which area and band deserve priority attention?",
                "Where would intervention help the most?",
            ),
            _build_mitigation_focus,
        ),
    ),
}


def _draw_category(u: float) -> str:
    acc = 0.0
    for category in CATEGORIES[:-1]:
        acc += CATEGORY_PROBS[category]
        if u < acc:
            return category
    return CATEGORIES[-1]


def generate_qa(
    metadata: SampleMetadata,
    templates: dict[str, tuple[QATemplate, ...]],
    rng: np.random.Generator,
    count: int,
    sample_id: str = "",
) -> list[QAPair]:
    """Stage 2: draw ``count`` pairs for one sample.

    Categories are drawn i.i.d. with the corpus probabilities; the template
    within a category cycles from a per-sample random offset so repeated
    draws hit different templates; the question variant is uniform.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    for category in CATEGORIES:
        if not templates.get(category):
            raise ValueError(f"no templates for category {category!r}")

    offsets = {c: int(rng.integers(0, len(templates[c]))) for c in CATEGORIES}
    occurrences: Counter[str] = Counter()
    prescriptive_ok = metadata.mitigation is not None
    n_reasoning = len(templates["reasoning"])

    pairs = []
    for _ in range(count):
        category = _draw_category(rng.random())
        substituted = False
        if category == "prescriptive" and not prescriptive_ok:
            category, substituted = "descriptive", True
        if category == "reasoning" and occurrences["reasoning"] >= n_reasoning:
            category, substituted = "descriptive", True
        bank = templates[category]
        k = occurrences[category]
        occurrences[category] += 1
        template = bank[(offsets[category] + k) % len(bank)]
        variant_id = int(rng.integers(0, len(template.variants)))
        answer, grounded = template.build(metadata)
        question = template.variants[variant_id].format(**grounded)
        pairs.append(
            QAPair(
                sample_id=sample_id,
                category=category,
                template_id=template.id,
                variant_id=variant_id,
                question=question,
                answer=answer,
                grounded=grounded,
                substituted=substituted,
            )
        )
    return pairs


# ---------------------------------------------------------------------------
# Stage 3: quality assurance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QCFailure:
    sample_id: str
    template_id: str
    key: str
    reason: str  # "missing" (not verbatim in answer) | "mismatch" (wrong value)

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "template_id": self.template_id,
            "key": self.key,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class QCReport:
    total_checked: int
    factual_failures: tuple[QCFailure, ...]
    window_size: int
    min_window_unique: dict[str, int]  # category -> min distinct answers per window

    @property
    def passed(self) -> bool:
        return not self.factual_failures

    def to_dict(self) -> dict:
        return {
            "total_checked": self.total_checked,
            "factual_failure_count": len(self.factual_failures),
            "factual_failures": [f.to_dict() for f in self.factual_failures[:20]],
            "window_size": self.window_size,
            "min_window_unique": dict(self.min_window_unique),
            "passed": self.passed,
        }


def _min_window_unique(answers: list[str], window: int) -> int:
    if not answers:
        return 0
    size = min(window, len(answers))
    counts: Counter[str] = Counter(answers[:size])
    best = len(counts)
    for i in range(size, len(answers)):
        counts[answers[i]] += 1
        old = answers[i - size]
        counts[old] -= 1
        if not counts[old]:
            del counts[old]
        best = min(best, len(counts))
    return best


def verify_qa(
    pairs: list[QAPair],
    metadata_by_sample: dict[str, SampleMetadata],
    window: int = QA_WINDOW,
) -> QCReport:
    """Stage 3: verbatim grounding, metadata consistency, and uniqueness."""
    failures: list[QCFailure] = []
    per_category_answers: dict[str, list[str]] = {c: [] for c in CATEGORIES}
    for pair in pairs:
        meta = metadata_by_sample[pair.sample_id]
        for key, value in pair.grounded.items():
            if value not in pair.answer:
                failures.append(QCFailure(pair.sample_id, pair.template_id, key, "missing"))
            expected = resolve_grounded(meta, key)
            if expected is not None and expected != value:
                failures.append(QCFailure(pair.sample_id, pair.template_id, key, "mismatch"))
        per_category_answers[pair.category].append(pair.answer)
    return QCReport(
        total_checked=len(pairs),
        factual_failures=tuple(failures),
        window_size=window,
        min_window_unique={
            c: _min_window_unique(answers, window)
            for c, answers in per_category_answers.items()
        },
    )
