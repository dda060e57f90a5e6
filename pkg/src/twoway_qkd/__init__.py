"""Key rates, tolerable error regions and secure distances for decoy-state BB84
with one-way and two-way classical post-processing."""

from .boundary import apply_sequence, boundary_curve, diagonal_threshold, scan_region, secure_with_some_sequence
from .bounds import distance_upper_bound, rate_upper_bound
from .bstep import BStepState, bstep_rate, bstep_trace
from .channel import GYS, PRESETS, ChannelParams, link_transmittance, overall_gain_qber, photon_number_stats
from .decoy import DecoyEstimates, SchemeConfig, asymptotic_estimates, oneway_rate, practical_bounds
from .edp import BellDiagonal, b_step, css_rate, p_step, rates_of
from .entropy import h2, one_minus_h2
from .fluctuations import ExperimentPlan, finite_max_distance, finite_rate, optimize_plan
from .optimize import max_secure_distance, optimize_mu, rate_at, rate_curve, scheme_rate
from .oracle import enumerate_b, enumerate_p, mc_sequence, run_verification
from .recurrence import maximize_F_a, recurrence_rate, recurrence_rate_single_photon

__version__ = "0.1.0"
