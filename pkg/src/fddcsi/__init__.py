"""Uplink-CSI based downlink precoding for FDD massive MIMO.

Dataset handling, a geometric channel simulator, analytic baselines,
from-scratch neural precoders and a checkerboard generalization framework.
"""

from .baselines import PrincipalComponentPrecoder, RandomPrecoder
from .dataset import (
    ArrayPose,
    CsiDataset,
    CsiRecord,
    DatasetMeta,
    SamplePair,
    SampleSet,
    average_subcarriers,
    extract_ul_dl,
    load_dataset,
    write_dataset,
)
from .evaluation import (
    CheckerboardSplit,
    EvalReport,
    HeatmapGrid,
    RandomSplit,
    checkerboard_split,
    evaluate_seen_unseen,
    heatmap,
    sweep_grid,
)
from .metrics import (
    autocorrelation,
    dominant_eigenvector,
    mean_power_db,
    normalized_power,
    principal_component_baseline,
    random_precoder,
)
from .neural import AoaEncoderDecoderPrecoder, DNNPrecoder, EncoderDecoderPrecoder
from .synthgen import FrequencyPlan, Scene, generate_dataset, synth_channel

__version__ = "0.1.0"
