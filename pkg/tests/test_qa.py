from collections import Counter

import pytest

from spectrumqa.dataset import build_sample
from spectrumqa.qa import (
    CATEGORIES,
    CATEGORY_PROBS,
    Mitigation,
    SampleMetadata,
    TEMPLATES,
    extract_metadata,
    generate_qa,
    mitigation_recommendation,
    most_congested_band,
    resolve_grounded,
    verify_qa,
)
from spectrumqa.radiomap import (
    connected_hotspots,
    ground_truth_labels,
    total_interference_grid,
)
from spectrumqa.rng import substream
from spectrumqa.scenarios import BAND_ORDER, Transmitter, TransmitterSet, builtin_scenario, sample_transmitters


def _tx(i, kind, band):
    alt = 550.0 if kind == "satellite" else 0.0
    power = 60.0 if kind == "satellite" else 46.0
    return Transmitter(f"t{i:02d}", kind, (10.0 + i, 20.0 + (3 * i) % 17), alt, band, power)


def _metadata_for(transmitters):
    ts = TransmitterSet("A", 0, 0, 50.0, tuple(transmitters))
    grid = total_interference_grid(ts)
    labels = ground_truth_labels(grid)
    return extract_metadata(ts, labels, connected_hotspots(labels.mask64), grid)


def _counts_meta(per_band_counts, mitigation="auto") -> SampleMetadata:
    meta = SampleMetadata(
        per_band_counts={b: per_band_counts.get(b, (0, 0)) for b in BAND_ORDER},
        shared_bands=tuple(b for b in BAND_ORDER if sum(per_band_counts.get(b, (0, 0))) >= 2),
        quadrant_means=(0.01, 0.02, 0.03, 0.04),
        hotspot_count=2,
        hotspot_centroids=((3.0, 4.0), (40.0, 41.0)),
        severity="moderate",
        hottest_quadrant="SE",
        positive_fraction=0.25,
        peak_dbm=-42.5,
        mean_dbm=-71.3,
        mitigation=None,
    )
    if mitigation == "auto":
        from dataclasses import replace

        return replace(meta, mitigation=mitigation_recommendation(meta))
    return meta


# --- stage 1 -----------------------------------------------------------------


def test_extract_metadata_counts_shared_bands():
    txs = [_tx(i, "satellite", "Ka") for i in range(3)]
    txs += [_tx(10 + i, "base_station", "Ka") for i in range(4)]
    txs += [_tx(20, "base_station", "L")]
    meta = _metadata_for(txs)
    assert meta.per_band_counts["Ka"] == (3, 4)
    assert meta.per_band_counts["L"] == (0, 1)
    assert meta.shared_bands == ("Ka",)
    assert most_congested_band(meta.per_band_counts) == "Ka"


def test_extract_metadata_single_per_band_has_no_shared():
    txs = [_tx(0, "base_station", "L"), _tx(1, "base_station", "S")]
    meta = _metadata_for(txs)
    assert meta.shared_bands == ()
    assert meta.mitigation is None


def test_extract_metadata_matches_brute_force_tally():
    for i in range(100):
        scenario = builtin_scenario("ABC"[i % 3])
        ts = sample_transmitters(scenario, 31, i)
        grid = total_interference_grid(ts)
        labels = ground_truth_labels(grid)
        meta = extract_metadata(ts, labels, connected_hotspots(labels.mask64), grid)
        tally = Counter((t.band, t.kind) for t in ts.transmitters)
        for band in BAND_ORDER:
            assert meta.per_band_counts[band] == (
                tally[(band, "satellite")],
                tally[(band, "base_station")],
            )
        assert set(meta.shared_bands) == {
            b for b in BAND_ORDER if sum(meta.per_band_counts[b]) >= 2
        }


# --- mitigation --------------------------------------------------------------


def test_mitigation_moves_two_satellites_seven_to_five():
    meta = _counts_meta({"C": (4, 3), "L": (0, 1), "S": (1, 1), "Ku": (1, 0), "Ka": (0, 1)})
    m = meta.mitigation
    # ties among least-loaded bands resolve in canonical band order (L first)
    assert m == Mitigation("C", "L", 2, 7, 5)


def test_mitigation_eight_to_six():
    meta = _counts_meta({"C": (5, 3), "L": (0, 0), "S": (1, 1), "Ku": (1, 0), "Ka": (1, 1)})
    assert meta.mitigation == Mitigation("C", "L", 2, 8, 6)


def test_mitigation_single_satellite_moves_one():
    meta = _counts_meta({"Ka": (1, 4), "L": (0, 0)})
    assert meta.mitigation == Mitigation("Ka", "L", 1, 5, 4)


def test_mitigation_no_satellites_moves_zero():
    meta = _counts_meta({"S": (0, 3), "L": (0, 0)})
    assert meta.mitigation == Mitigation("S", "L", 0, 3, 3)


def test_mitigation_none_without_shared_band():
    meta = _counts_meta({"L": (1, 0), "S": (0, 1)})
    assert meta.mitigation is None


def test_mitigation_target_excludes_source():
    # every band equally loaded: target must still differ from source
    meta = _counts_meta({b: (1, 1) for b in BAND_ORDER})
    assert meta.mitigation.source_band == "L"
    assert meta.mitigation.target_band == "S"


# --- stage 2 -----------------------------------------------------------------


def test_template_bank_shape():
    assert set(TEMPLATES) == set(CATEGORIES)
    for category, bank in TEMPLATES.items():
        assert bank, category
        for template in bank:
            assert 4 <= len(template.variants) <= 8
            assert template.category == category


def test_generate_is_deterministic():
    meta = _counts_meta({"C": (4, 3), "L": (0, 1), "S": (2, 1)})
    a = generate_qa(meta, TEMPLATES, substream(5, "qa", "A", 0), 10, sample_id="A00000")
    b = generate_qa(meta, TEMPLATES, substream(5, "qa", "A", 0), 10, sample_id="A00000")
    assert a == b


def test_generated_answers_embed_grounded_fields():
    meta = _counts_meta({"C": (4, 3), "L": (0, 1), "S": (2, 1)})
    pairs = generate_qa(meta, TEMPLATES, substream(5, "qa", "A", 1), 50, sample_id="x")
    assert len(pairs) == 50
    for pair in pairs:
        for key, value in pair.grounded.items():
            assert value in pair.answer, (pair.template_id, key)
            expected = resolve_grounded(meta, key)
            assert expected == value


def test_descriptive_congestion_answer_names_band_and_counts():
    meta = _counts_meta({"Ka": (3, 4), "L": (0, 1)})
    answer, grounded = TEMPLATES["descriptive"][0].build(meta)
    assert "Ka band is most congested" in answer
    assert "3 satellite beams" in answer and "4 terrestrial stations" in answer
    assert grounded["band"] == "Ka"


def test_localization_answer_names_quadrant():
    meta = _counts_meta({"C": (2, 2)})
    answer, grounded = TEMPLATES["localization"][0].build(meta)
    assert "southeast" in answer
    assert grounded["quadrant"] == "southeast"


def test_prescriptive_answer_quotes_mitigation_numbers():
    meta = _counts_meta({"C": (5, 3), "L": (0, 0), "S": (1, 1), "Ku": (1, 0), "Ka": (1, 1)})
    answer, _ = TEMPLATES["prescriptive"][0].build(meta)
    assert "Migrating 2 satellite beams from C to L band" in answer
    assert "from 8 to 6" in answer


def test_prescriptive_substituted_when_no_shared_band():
    meta = _counts_meta({"L": (1, 0), "S": (0, 1)})
    pairs = generate_qa(meta, TEMPLATES, substream(1, "qa", "A", 2), 120, sample_id="x")
    assert all(p.category != "prescriptive" for p in pairs)
    assert any(p.substituted for p in pairs)


def test_reasoning_repeats_capped_per_sample():
    meta = _counts_meta({"C": (4, 3), "S": (2, 0)})
    pairs = generate_qa(meta, TEMPLATES, substream(9, "qa", "B", 3), 200, sample_id="x")
    reasoning = [p for p in pairs if p.category == "reasoning"]
    assert len(reasoning) == len(TEMPLATES["reasoning"])
    assert len({p.template_id for p in reasoning}) == len(reasoning)


def test_category_proportions_over_10k_pairs():
    # corpus conditions: 10 pairs per image over a three-scenario mix
    metas = []
    for i in range(60):
        scenario = builtin_scenario("ABC"[i % 3])
        ts = sample_transmitters(scenario, 12, i)
        grid = total_interference_grid(ts)
        labels = ground_truth_labels(grid)
        metas.append(extract_metadata(ts, labels, connected_hotspots(labels.mask64), grid))
    counts = Counter()
    total = 0
    for i in range(1000):
        meta = metas[i % len(metas)]
        pairs = generate_qa(meta, TEMPLATES, substream(3, "qa", "mix", i), 10, sample_id=str(i))
        counts.update(p.category for p in pairs)
        total += len(pairs)
    assert total == 10_000
    for category in CATEGORIES:
        assert abs(counts[category] / total - CATEGORY_PROBS[category]) < 0.02


def test_variant_ids_span_bank():
    meta = _counts_meta({"C": (4, 3)})
    pairs = generate_qa(meta, TEMPLATES, substream(2, "qa", "A", 4), 400, sample_id="x")
    by_template: dict[str, set[int]] = {}
    for p in pairs:
        by_template.setdefault(p.template_id, set()).add(p.variant_id)
    bank = {t.id: t for c in TEMPLATES.values() for t in c}
    for template_id, seen in by_template.items():
        assert seen <= set(range(len(bank[template_id].variants)))


def test_generate_rejects_bad_count():
    with pytest.raises(ValueError):
        generate_qa(_counts_meta({"C": (2, 1)}), TEMPLATES, substream(0), 0)


def test_builders_total_over_edge_metadata():
    # every builder must produce a grounded answer even for degenerate inputs
    from dataclasses import replace

    edge_cases = [
        _counts_meta({"L": (1, 0), "S": (0, 1)}),          # no shared bands
        _counts_meta({"S": (0, 3)}),                       # mitigation moves 0 sats
        replace(                                           # no hotspots at all
            _counts_meta({"C": (2, 2)}),
            hotspot_count=0,
            hotspot_centroids=(),
        ),
        _counts_meta({b: (1, 1) for b in BAND_ORDER}),     # everything shared
    ]
    for meta in edge_cases:
        for bank in TEMPLATES.values():
            for template in bank:
                answer, grounded = template.build(meta)
                assert answer
                for key, value in grounded.items():
                    assert value in answer, (template.id, key)
                for variant in template.variants:
                    assert variant.format(**grounded)


# --- stage 3 -----------------------------------------------------------------


def test_verify_clean_corpus_passes():
    meta = _counts_meta({"C": (4, 3), "S": (2, 1)})
    pairs = generate_qa(meta, TEMPLATES, substream(4, "qa", "A", 5), 40, sample_id="s1")
    report = verify_qa(pairs, {"s1": meta})
    assert report.passed
    assert report.total_checked == 40
    assert not report.factual_failures


def test_verify_detects_missing_grounded_field():
    from dataclasses import replace

    meta = _counts_meta({"C": (4, 3)})
    pairs = generate_qa(meta, TEMPLATES, substream(4, "qa", "A", 6), 10, sample_id="s1")
    broken = replace(pairs[0], answer="An answer that names nothing at all.")
    report = verify_qa([broken] + pairs[1:], {"s1": meta})
    assert not report.passed
    assert any(f.reason == "missing" for f in report.factual_failures)


def test_verify_detects_wrong_value_against_metadata():
    from dataclasses import replace

    meta = _counts_meta({"C": (4, 3)})
    pairs = generate_qa(meta, TEMPLATES, substream(4, "qa", "A", 7), 10, sample_id="s1")
    target = next(p for p in pairs if "band" in p.grounded)
    forged = replace(
        target,
        grounded={**target.grounded, "band": "Ku"},
        answer=target.answer.replace(target.grounded["band"], "Ku"),
    )
    report = verify_qa([forged], {"s1": meta})
    assert any(f.reason == "mismatch" and f.key == "band" for f in report.factual_failures)


def test_window_uniqueness_statistic():
    from spectrumqa.qa import _min_window_unique

    assert _min_window_unique([], 100) == 0
    assert _min_window_unique(["a", "a", "b"], 2) == 1
    assert _min_window_unique(["a", "b", "a"], 2) == 2  # no window holds the repeat
    assert _min_window_unique(["a", "b", "c"], 2) == 2
    assert _min_window_unique([str(i) for i in range(250)], 100) == 100
    assert _min_window_unique([str(i % 150) for i in range(300)], 100) == 100
    assert _min_window_unique([str(i % 60) for i in range(300)], 100) == 60


def test_reasoning_answers_unique_across_consecutive_samples():
    answers = []
    for i in range(80):
        scenario = builtin_scenario("ABC"[i % 3])
        result = build_sample(scenario, 55, i)
        answers.extend(p.answer for p in result.qa_pairs if p.category == "reasoning")
    window = answers[:100]
    assert len(set(window)) == len(window)
