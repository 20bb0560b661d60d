"""Twin-beam states with symmetric photon subtraction: photon statistics and
absorption-estimation uncertainties, with Fock-space and Monte-Carlo checks."""

from .estimators import (
    FIXED_EXPOSURE,
    FIXED_SQUEEZING,
    Protocol,
    UncertaintyPoint,
    balance_energy,
    delta_gamma_diff,
    delta_gamma_opt,
    delta_gamma_ratio,
    uncertainty_point,
)
from .fock import FockState, ModeOpTerm, RawMoments, number_moments, tmsv_state
from .model import ModelParams, seed_state, subtracted_tmsv
from .stats import PhotonStatistics, apply_loss, detected_statistics

__version__ = "0.1.0"
