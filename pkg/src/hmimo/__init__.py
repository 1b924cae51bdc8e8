"""Spatial degrees of freedom and capacity of holographic MIMO links.

The channel is modelled in the wavenumber domain: each planar aperture
supports a finite lattice of propagating plane-wave modes, the separable
spatial correlation is ``R_t (x) R_r`` with ``R = Phi diag(sigma**2) Phi^H``,
and capacity is evaluated on the angular-domain channel.
"""

from .analysis import (EigenReport, dense_spectrum, discarded_power, dof_limit,
                       eigen_spectrum, eigenvalue_count_gap, evanescent_loss,
                       significant_mode_count)
from .capacity import (CapacityReport, PowerAllocation, capacity_asymptotic,
                       capacity_csir_uniform, capacity_perfect_csi, capacity_stat_csit,
                       waterfill)
from .channel import (AngularChannel, CorrelationModel, angular_to_spatial,
                      correlation_matrix, correlation_model, kronecker_eigenvalues,
                      reference_correlation, sample_angular)
from .errors import ConvergenceError, NumericalError, RankZeroError, UsageError
from .geometry import (Aperture, ModeSet, enumerate_modes, formula_mode_count,
                       fourier_matrix)
from .harness import ExperimentSpec, Table, run_experiment
from .multiuser import LisConfig, UserLink, lis_sum_rate
from .spectrum import ModeVariances, ScatteringSpec, iid_variances, mode_variances

__version__ = "0.1.0"
