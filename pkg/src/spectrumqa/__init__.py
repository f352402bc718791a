"""SpectrumQA: spectrum-heatmap simulator, benchmark generator, and scorer.

The package covers the full loop for spectrum-heatmap understanding in
satellite-terrestrial networks: deterministic interference simulation over
three deployment scenarios, four-level ground truth (severity, hottest
quadrant, binary masks, free-text references), templated QA generation with
quality assurance, and a scoring harness with a task-type router.
"""

from .dataset import BuildConfig, build_dataset, build_sample, load_manifest
from .qa import (
    QAPair,
    QCReport,
    SampleMetadata,
    extract_metadata,
    generate_qa,
    mitigation_recommendation,
    verify_qa,
)
from .propagation import (
    LinkGeometry,
    atmospheric_attenuation,
    elevation_angle,
    free_space_path_loss,
    link_geometry,
    received_power,
    slant_range,
)
from .radiomap import (
    GroundTruthLabels,
    InterferenceGrid,
    connected_hotspots,
    downsample_mask,
    ground_truth_labels,
    hottest_quadrant,
    interference_mask,
    normalize,
    render_heatmap,
    severity_label,
    total_interference_grid,
)
from .scenarios import (
    BANDS,
    BandSpec,
    Scenario,
    Transmitter,
    TransmitterSet,
    builtin_scenario,
    sample_transmitters,
)
from .scoring import (
    CompositeReport,
    GoldStore,
    LevelScores,
    PredictionRecord,
    WeightScheme,
    accuracy,
    best_routing,
    composite_report,
    composite_score,
    iou,
    keyword_f1,
    rouge_l,
    score_predictions,
    synth_predict,
)

__version__ = "0.1.0"
