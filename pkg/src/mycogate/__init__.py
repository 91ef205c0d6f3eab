"""Excitation waves on image-derived mycelium grids, mined for Boolean gates.

Pipeline: a colony photograph is thresholded and dilated into a conductive
grid; a two-variable excitable-medium model is integrated on it with explicit
Euler and a five-node Laplacian; virtual electrodes record potentials; binary
inputs injected as current impulses yield spike responses that are classified
into two-input Boolean gates.
"""

from .engine import (
    FhnParams,
    FhnState,
    RULE_ABSORBING,
    RULE_NO_FLUX,
    Stimulus,
    laplacian,
    load_checkpoint,
    run,
    save_checkpoint,
    step,
)
from .errors import (
    ConfigError,
    DivergenceError,
    ImageDataError,
    ImageFormatError,
    MycogateError,
)
from .gatelab import (
    DetectionParams,
    GateLabel,
    GateTally,
    StimulusSpec,
    aggregate,
    classify,
    cluster_events,
    detect_spikes,
    encode_inputs,
    mine,
)
from .images import RgbImage, load_image, read_mask_pgm, write_mask_pgm, write_png
from .probes import (
    ActivityProbe,
    Electrode,
    SnapshotProbe,
    Trace,
    TraceProbe,
    activity,
    electrode_potential,
    render_coverage,
    render_snapshot,
    update_coverage,
)
from .synth import colony_image
from .template import (
    ConductiveGrid,
    binarize,
    build_grid,
    dilate,
    k_histogram,
    neighbor_counts,
)

__version__ = "0.1.0"
