"""Detector-decoy photon-number estimation and key rates for entanglement-based QKD."""
from .fock import JointPhotonDist, PhotonDist, binary_entropy, binomial_loss, flip_split
from .source import PdcSource, pair_dist, pair_state_weights
from .channel import (ChannelParams, OutcomeDist, ResolvedStats, SimulationResult,
                      arrival_stats, click_pattern, simulate, single_photon_qber,
                      transmittance_from_db, wstate_loss_qber)
from .estimation import (DecoySetting, DetectorModel, Prop1Bounds, convergence_sweep,
                         joint_p11_bounds, prop1_bounds, pvac_ideal, pvac_joint, pvac_noisy,
                         truncated_solve)
from .keyrate import (Protocol, Scenario, distance_sweep, max_distance, optimize_lambda,
                      rate_for)
from .plugplay import estimate_input_stats, output_stats, pvac_phase

__version__ = "0.1.0"
