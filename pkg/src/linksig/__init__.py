"""Location distinction from temporal link signatures of MIMO channels.

Submodules:

* ``channel`` — synthetic multipath channel model and band-limited snapshots
* ``sounding`` — multitone and OFDM waveform-level channel estimation
* ``signatures`` — link-signature extraction, distances, difference metric
* ``detector`` — FIFO-history change detector
* ``evaluation`` — ROC harness, parameter sweeps, power-law fit
* ``traceio`` / ``cli`` — trace file format and command-line pipeline
"""

from .channel import (
    ArrayGeometry,
    ChannelSnapshot,
    MultipathChannel,
    Path,
    Trajectory,
    add_noise,
    make_random_channel,
    snapshot_at,
    walk_snapshots,
)
from .detector import Decision, Detector, DetectorConfig, run_trace
from .errors import (
    DegenerateProbe,
    DimensionMismatch,
    InsufficientHistory,
    SyncFailure,
    TraceFormatError,
)
from .evaluation import (
    DeltaSample,
    PowerLawFit,
    RocPoint,
    Scenario,
    avg_distance_vs_separation,
    collect_deltas,
    fit_power_law,
    pm_at_pfa,
    roc,
    scenario_deltas,
    standard_scenario,
    sweep,
)
from .signatures import (
    LinkSignature,
    ctls_from_snapshot,
    delta,
    distance,
    l2_dist,
    phi2_dist,
    sigma,
    tls_from_ctls,
)
from .sounding import (
    MultitoneProbe,
    OfdmConfig,
    PreambleConfig,
    estimate_freq_response,
    estimate_mimo_ofdm_channel,
    frame_sync,
    freq_to_cir,
    make_multitone,
    make_preamble,
    make_walsh_training,
    moose_cfo_estimate,
    reference_snapshot,
    sound_snapshot,
)
from .traceio import TraceFile, TraceHeader, read_trace, write_trace

__version__ = "1.0.0"
