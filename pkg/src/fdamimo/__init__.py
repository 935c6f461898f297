"""FDA-MIMO range-angle estimation toolkit with frequency offsets."""

from .anm import DenoisedStack, anm_denoise, default_tau
from .config import (DomainError, NumericError, OffsetModel, PulseDraw,
                     RadarConfig, Target, default_config, default_offsets,
                     default_target)
from .crlb import FimReport, crlb_curve, fim
from .estimators import (CumulantMatrix, Estimate, GridSpec, Spectrum2D,
                         build_c4, music_2d, music_rows, omp)
from .experiments import (Scenario, SearchSpec, curve_tables, monte_carlo,
                          reproduce_curves, reproduce_eqsnr_tables,
                          run_estimator, scenario_from_dict)
from .noise_stats import (CovarianceModel, EqualizedSnrReport,
                          StructureReport, covariance_model, equalized_snr,
                          structure_report)
from .signal_model import (SignalMatrix, approximation_error, draw_pulse,
                           draw_stack, i1_integral, matched_output_approx,
                           matched_output_exact, steering_vectors)

__version__ = "0.1.0"
