"""Dataset assembly: samples on disk, QA corpus, splits, and the manifest.

Samples are generated round-robin across the configured scenarios. Each
sample gets its own directory with the rendered heatmap, a label record, and
a metadata record. QA pairs for the whole corpus are emitted to one JSONL
file in generation order, the corpus is QC-verified, and the manifest is
written last with an atomic rename so interrupted runs are detectable.

Per-sample work is a pure function of (scenario, master seed, sample index),
so it can run in a process pool; outputs are byte-identical for any worker
count because files are keyed by sample id and corpus-order assembly happens
in the parent.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import qa as qa_mod
from .qa import QAPair, QCError, QCReport, SampleMetadata, extract_metadata, generate_qa, verify_qa
from .radiomap import (
    connected_hotspots,
    ground_truth_labels,
    render_heatmap,
    total_interference_grid,
    write_png,
)
from .rng import substream
from .scenarios import BUILTIN_SCENARIOS, Scenario, sample_transmitters

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
QA_FILE_NAME = "qa_pairs.jsonl"
DEFAULT_QA_PER_IMAGE = 10
SPLIT_WEIGHTS = {"train": 10000, "val": 500, "test": 500}


class DataError(ValueError):
    """Malformed or inconsistent on-disk data."""


@dataclass(frozen=True)
class BuildConfig:
    scenario_counts: dict[str, int]
    master_seed: int
    qa_per_image: int = DEFAULT_QA_PER_IMAGE
    render_images: bool = True
    workers: int | None = None
    absolute_threshold_dbm: float | None = None
    scenarios: dict[str, Scenario] = field(default_factory=lambda: dict(BUILTIN_SCENARIOS))

    def __post_init__(self) -> None:
        if self.master_seed < 0:
            raise ValueError("master_seed must be >= 0")
        if self.qa_per_image < 0:
            raise ValueError("qa_per_image must be >= 0")
        for sid, count in self.scenario_counts.items():
            if sid not in self.scenarios:
                raise ValueError(f"unknown scenario {sid!r} in scenario_counts")
            if count < 0:
                raise ValueError(f"negative count for scenario {sid!r}")


def sample_id_for(scenario_id: str, index: int) -> str:
    return f"{scenario_id}{index:05d}"


def generation_order(scenario_counts: dict[str, int]) -> list[tuple[str, int]]:
    """Round-robin (scenario, per-scenario index) sequence."""
    order: list[tuple[str, int]] = []
    remaining = dict(scenario_counts)
    counters = {sid: 0 for sid in scenario_counts}
    while any(remaining.values()):
        for sid in scenario_counts:
            if remaining[sid] > 0:
                order.append((sid, counters[sid]))
                counters[sid] += 1
                remaining[sid] -= 1
    return order


def split_sizes(total: int, weights: dict[str, int] = SPLIT_WEIGHTS) -> dict[str, int]:
    """Train/val/test sizes at the corpus ratio (10000:500:500)."""
    train = total * weights["train"] // sum(weights.values())
    remaining = total - train
    val = remaining // 2
    return {"train": train, "val": val, "test": remaining - val}


def assign_splits(
    ordered_ids: list[str], master_seed: int, weights: dict[str, int] = SPLIT_WEIGHTS
) -> dict[str, list[str]]:
    """Contiguous index ranges in corpus order, then shuffled within split."""
    sizes = split_sizes(len(ordered_ids), weights)
    splits: dict[str, list[str]] = {}
    start = 0
    for name in ("train", "val", "test"):
        chunk = list(ordered_ids[start : start + sizes[name]])
        start += sizes[name]
        substream(master_seed, "split-shuffle", name).shuffle(chunk)
        splits[name] = chunk
    return splits


@dataclass
class SampleResult:
    sample_id: str
    scenario_id: str
    sample_index: int
    metadata: SampleMetadata
    qa_pairs: list[QAPair]
    labels_record: dict
    files: dict[str, str]  # role -> path relative to the dataset root
    transmitter_set: object = None  # populated in-process, stripped before IPC
    grid: object = None


def _mask_to_string(mask) -> str:
    return "".join("1" if v else "0" for v in mask.astype(int).ravel())


def _json_bytes(payload: dict) -> bytes:
    return (json.dumps(payload, sort_keys=True, indent=2) + "\n").encode()


def build_sample(
    scenario: Scenario,
    master_seed: int,
    sample_index: int,
    *,
    qa_per_image: int = DEFAULT_QA_PER_IMAGE,
    absolute_threshold_dbm: float | None = None,
) -> SampleResult:
    """Run the full per-sample pipeline in memory (no files written)."""
    sid = sample_id_for(scenario.id, sample_index)
    ts = sample_transmitters(scenario, master_seed, sample_index)
    grid = total_interference_grid(ts)
    labels = ground_truth_labels(grid, absolute_threshold_dbm=absolute_threshold_dbm)
    hotspots = connected_hotspots(labels.mask64)
    metadata = extract_metadata(ts, labels, hotspots, grid)
    # Canonical free-text reference: the first reasoning template's answer,
    # so every sample has an L4 gold even if no reasoning pair was drawn.
    l4_reference, _ = qa_mod.TEMPLATES["reasoning"][0].build(metadata)
    pairs = (
        generate_qa(
            metadata,
            qa_mod.TEMPLATES,
            substream(master_seed, "qa", scenario.id, sample_index),
            qa_per_image,
            sample_id=sid,
        )
        if qa_per_image
        else []
    )
    labels_record = {
        "sample_id": sid,
        "scenario": scenario.id,
        "sample_index": sample_index,
        "severity": labels.severity,
        "severity_mode": labels.severity_mode,
        "positive_fraction": labels.positive_fraction,
        "hottest_quadrant": labels.hottest_quadrant,
        "quadrant_means": list(labels.quadrant_means),
        "mask64": _mask_to_string(labels.mask64),
        "mask16": _mask_to_string(labels.mask16),
        "hotspot_count": hotspots[0],
        "hotspot_centroids": [list(c) for c in hotspots[1]],
        "l4_reference": l4_reference,
    }
    return SampleResult(
        sample_id=sid,
        scenario_id=scenario.id,
        sample_index=sample_index,
        metadata=metadata,
        qa_pairs=pairs,
        labels_record=labels_record,
        files={},
        transmitter_set=ts,
        grid=grid,
    )


def _write_sample(job: tuple) -> SampleResult:
    (scenario, master_seed, sample_index, qa_per_image, absolute_threshold_dbm,
     render_images, out_dir) = job
    result = build_sample(
        scenario,
        master_seed,
        sample_index,
        qa_per_image=qa_per_image,
        absolute_threshold_dbm=absolute_threshold_dbm,
    )
    sample_dir = Path(out_dir) / "samples" / result.sample_id
    sample_dir.mkdir(parents=True, exist_ok=True)
    rel = f"samples/{result.sample_id}"
    (sample_dir / "labels.json").write_bytes(_json_bytes(result.labels_record))
    metadata_record = {
        "sample_id": result.sample_id,
        "transmitter_set": result.transmitter_set.to_dict(),
        "metadata": result.metadata.to_dict(),
    }
    (sample_dir / "metadata.json").write_bytes(_json_bytes(metadata_record))
    result.files = {"labels": f"{rel}/labels.json", "metadata": f"{rel}/metadata.json"}
    if render_images:
        write_png(render_heatmap(result.grid), sample_dir / "heatmap.png")
        result.files["image"] = f"{rel}/heatmap.png"
    result.transmitter_set = None  # keep the IPC payload small
    result.grid = None
    return result


def build_dataset(config: BuildConfig, out_dir: str | Path) -> dict:
    """Generate the full dataset under ``out_dir`` and return the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    order = generation_order(config.scenario_counts)
    jobs = [
        (
            config.scenarios[sid],
            config.master_seed,
            idx,
            config.qa_per_image,
            config.absolute_threshold_dbm,
            config.render_images,
            str(out),
        )
        for sid, idx in order
    ]
    workers = config.workers or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_write_sample, jobs, chunksize=8))
    else:
        results = [_write_sample(job) for job in jobs]

    all_pairs: list[QAPair] = []
    metadata_by_sample: dict[str, SampleMetadata] = {}
    for res in results:
        metadata_by_sample[res.sample_id] = res.metadata
        all_pairs.extend(res.qa_pairs)

    report = verify_qa(all_pairs, metadata_by_sample)
    if not report.passed:
        first = report.factual_failures[0]
        raise QCError(
            f"QC failed: {len(report.factual_failures)} factual failures "
            f"(first: sample {first.sample_id}, template {first.template_id}, "
            f"key {first.key}, {first.reason})"
        )

    with open(out / QA_FILE_NAME, "wb") as fh:
        for pair in all_pairs:
            fh.write(json.dumps(pair.to_dict(), sort_keys=True).encode() + b"\n")

    ordered_ids = [res.sample_id for res in results]
    manifest = {
        "format": "spectrumqa-manifest-v1",
        "master_seed": config.master_seed,
        "scenario_counts": dict(config.scenario_counts),
        "qa_per_image": config.qa_per_image,
        "absolute_threshold_dbm": config.absolute_threshold_dbm,
        "sample_order": ordered_ids,
        "splits": assign_splits(ordered_ids, config.master_seed),
        "samples": {
            res.sample_id: {
                "scenario": res.scenario_id,
                "sample_index": res.sample_index,
                **res.files,
            }
            for res in results
        },
        "qa": {
            "path": QA_FILE_NAME,
            "pair_count": len(all_pairs),
            "category_tallies": _category_tallies(all_pairs),
            "substituted": sum(1 for p in all_pairs if p.substituted),
        },
        "qc": report.to_dict(),
    }
    _write_manifest(manifest, out)
    logger.info(
        "dataset built: %d samples, %d QA pairs, QC %s",
        len(results),
        len(all_pairs),
        "passed" if report.passed else "FAILED",
    )
    return manifest


def _category_tallies(pairs: list[QAPair]) -> dict[str, int]:
    tallies = {c: 0 for c in qa_mod.CATEGORIES}
    for pair in pairs:
        tallies[pair.category] += 1
    return tallies


def _write_manifest(manifest: dict, out: Path) -> None:
    # Atomic rename: a manifest.json present means the run completed.
    fd, tmp_name = tempfile.mkstemp(dir=out, prefix=".manifest-", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(_json_bytes(manifest))
        os.replace(tmp_name, out / MANIFEST_NAME)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def load_manifest(dataset_dir: str | Path) -> dict:
    path = Path(dataset_dir) / MANIFEST_NAME
    if not path.exists():
        raise DataError(f"no {MANIFEST_NAME} in {dataset_dir} (incomplete or missing run?)")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"corrupt manifest {path}: {exc}") from exc


def load_labels(dataset_dir: str | Path, manifest: dict, sample_id: str) -> dict:
    entry = manifest["samples"].get(sample_id)
    if entry is None:
        raise DataError(f"sample id {sample_id!r} not in manifest")
    return json.loads((Path(dataset_dir) / entry["labels"]).read_text())


def load_metadata(dataset_dir: str | Path, manifest: dict, sample_id: str) -> dict:
    entry = manifest["samples"].get(sample_id)
    if entry is None:
        raise DataError(f"sample id {sample_id!r} not in manifest")
    return json.loads((Path(dataset_dir) / entry["metadata"]).read_text())


def regenerate_qa(
    dataset_dir: str | Path,
    *,
    qa_per_image: int | None = None,
    master_seed: int | None = None,
    out_path: str | Path | None = None,
) -> QCReport:
    """Rebuild the QA corpus from stored metadata records.

    Uses the manifest's seed and pair count unless overridden; rewrites the
    JSONL and refreshes the manifest's qa/qc blocks.
    """
    root = Path(dataset_dir)
    manifest = load_manifest(root)
    seed = manifest["master_seed"] if master_seed is None else master_seed
    per_image = manifest["qa_per_image"] if qa_per_image is None else qa_per_image
    all_pairs: list[QAPair] = []
    metadata_by_sample: dict[str, SampleMetadata] = {}
    for sid in manifest["sample_order"]:
        record = load_metadata(root, manifest, sid)
        meta = SampleMetadata.from_dict(record["metadata"])
        metadata_by_sample[sid] = meta
        entry = manifest["samples"][sid]
        if per_image:
            rng = substream(seed, "qa", entry["scenario"], entry["sample_index"])
            all_pairs.extend(generate_qa(meta, qa_mod.TEMPLATES, rng, per_image, sample_id=sid))
    report = verify_qa(all_pairs, metadata_by_sample)
    if not report.passed:
        raise QCError(f"QC failed with {len(report.factual_failures)} factual failures")
    target = Path(out_path) if out_path else root / QA_FILE_NAME
    with open(target, "wb") as fh:
        for pair in all_pairs:
            fh.write(json.dumps(pair.to_dict(), sort_keys=True).encode() + b"\n")
    if target == root / QA_FILE_NAME:
        manifest["qa"] = {
            "path": QA_FILE_NAME,
            "pair_count": len(all_pairs),
            "category_tallies": _category_tallies(all_pairs),
            "substituted": sum(1 for p in all_pairs if p.substituted),
        }
        manifest["qa_per_image"] = per_image
        manifest["qc"] = report.to_dict()
        _write_manifest(manifest, root)
    return report
