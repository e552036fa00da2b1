"""Irregular LDPC code design tools for the two-user Gaussian interference
channel: superimposed-BPSK signaling, joint belief-propagation decoding,
Monte-Carlo density evolution, degree-distribution optimization, and
achievable-rate-region computation."""

__version__ = "0.1.0"

from .ensembles import (
    DegreeDistribution,
    HkCodeSet,
    ParityCheckMatrix,
    design_rate,
    node_edge_convert,
    sample_code,
)
from .channel import (
    ChannelBlock,
    GicParameters,
    classify,
    modulate_hk,
    transmit,
)
from .decoder import JointDecoderConfig, StateNodePrior, joint_decode, state_node_llr
from .density import (
    AdmissibilityReport,
    DensityEvolutionConfig,
    LlrPopulation,
    evolve_ensemble,
    mutual_information,
    threshold_bisect,
)
from .optimizer import (
    OptimizationTask,
    PerturbationVector,
    optimize_joint,
    optimize_single,
    sample_perturbation,
)
from .region import (
    RatePoint,
    RegionCurve,
    bpsk_awgn_capacity,
    hk_subregion,
    mac_mutual_informations,
    ts_regions,
)
