"""greenlab: discrete Green/Coulomb energies, optimal transport and
uniformity measures on flat tori and spheres."""

__version__ = "0.1.0"

from .errors import (GreenlabError, InvalidInputError, NumericalFailureError,
                     SingularityError, StallError, VerificationFailureError)
from .geometry import (Manifold, PointConfiguration, flat_torus, grid_torus,
                       load_config_csv, lowdisc_sequence, sphere,
                       sphere_distance, tangent_project, torus_distance,
                       uniform_sample)
from .kernels import (EnergyReport, KernelSpec, cd_constant,
                      coulomb_sphere_kernel, green_sphere2_kernel,
                      green_t1_kernel, green_torus_spectral_kernel,
                      log_sphere2_kernel, pair_energy, riesz_kernel)
from .optimize import (MinimizationResult, OptimizerParams, energy_gradient,
                       min_separation, minimize)
from .spectral import (DiaphonyResult, SpectralMeasure, diaphony_t1,
                       funk_hecke_eigenvalue, heat_density_torus,
                       hminus1_norm, riesz_laplacian_constant,
                       spectral_measure)
from .transport import (W2Estimate, star_discrepancy_t1, w2_empirical_pair,
                        w2_semidiscrete, w_p_circle_exact)
