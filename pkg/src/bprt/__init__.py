"""Bilevel programmable-resistance threshold networks for change detection.

A behavioral simulator for networks of threshold-logic cells whose input
conductances are memorized from a template frame.  The package covers the
device model (linear ion-drift memristor with pulse programming), the cell
and network math, the dual-module detector, scoring metrics, NetPBM frame
I/O with model persistence and netlist export, plus a CLI.
"""

from .cell import (
    CellOutput,
    CellParams,
    CellWeights,
    assign_weights_hard,
    assign_weights_soft,
    divider_output,
    evaluate_cell,
    threshold_hard,
    threshold_soft,
    threshold_soft_merged,
)
from .detector import (
    Blob,
    ChangeMap,
    DetectorModel,
    RocPoint,
    detect,
    extract_blobs,
    invert_frame,
    match_blobs,
    merged_output_grid,
    roc_sweep,
    train_detector,
)
from .errors import (
    BprtError,
    ConductanceRangeError,
    DimensionError,
    InvalidInputError,
    ModelFormatError,
    NonConvergenceError,
    ParseError,
    SingularThresholdError,
    UndefinedRateError,
)
from .frameio import (
    GrayFrame,
    export_netlist,
    load_model,
    load_pgm,
    normalize,
    overlay,
    read_change_map,
    save_model,
    write_change_map,
    write_pgm,
)
from .memristor import (
    MemristorParams,
    MemristorState,
    PulseSpec,
    memristance,
    program_to_conductance,
    step,
)
from .metrics import (
    Composites,
    ConfusionCounts,
    MetricsReport,
    composites_from_rates,
    metrics_from_counts,
)
from .network import (
    OutputGrid,
    TrainedNetwork,
    VoltageFrame,
    evaluate_network,
    global_similarity,
    tile_frame,
    train_network,
    untile_frame,
)

__version__ = "0.1.0"
