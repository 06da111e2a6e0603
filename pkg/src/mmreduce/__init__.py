"""Data-driven two-sided moment-matching model reduction for MIMO LTI systems."""

from .design import (Design, SignalGenerator, SwappedFilter, build_filter,
                     build_generator, design_from_dict, exact_exp, load_design)
from .estimation import (EstimationResult, estimate_c_pi, estimate_ups_b,
                         estimate_ups_b_instant, estimate_ups_b_robust)
from .lti import (StateSpace, Trajectory, simulate_autonomous_augmented,
                  simulate_filtered_impulse, spectrum, transfer_eval)
from .oracle import (bode_data, normalised_error, solve_pi, solve_upsilon,
                     tangential_moments, verify_rom)
from .rom import (ReducedModel, build_one_sided_left, build_one_sided_right,
                  build_two_sided, solve_ups_pi)

__version__ = "0.1.0"
