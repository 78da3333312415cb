"""Free-recall attractor network: weights, spectra, Hopf analysis, dynamics."""

from .errors import (AnalysisError, DegeneracyError, DegenerateSpectrumError, DimensionError,
                     DivergenceError, InputError, InvalidStateError, NotAtHopfError,
                     RecallDynError, RenormalizationError, ResonanceError, StructureError,
                     UnsupportedRuleError)
from .model import (NetworkConfig, StateVector, WeightMatrix, jacobian_shifted, rhs_original,
                    rhs_shifted, shifted_nonlinearity, softmax_output, trivial_equilibrium,
                    validate_assumptions)
from .learning import REFERENCE_PATTERNS, LearningSpec, Pattern, learn_weights
from .spectral import Regime, classify_regime, lemma2_basis
from .hopf import (HopfReport, algorithm1_coefficient, closed_form_I1, closed_form_I2,
                   closed_form_I3, hopf_report, hopf_setup, theorem3_verdict)
from .dynamics import (IntegratorSpec, Trajectory, detect_recall, estimate_period,
                       find_equilibria, integrate, lyapunov_spectrum, sum_property_check)

__version__ = "0.1.0"
