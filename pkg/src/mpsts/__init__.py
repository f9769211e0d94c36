"""
mpsts
=====

Photon statistics, non-Gaussianity and homodyne reconstruction of
multiphoton-subtracted thermal states, parameterized by the compound-Poisson
mean ``mu`` and coherence parameter ``a``.

Submodules
----------
pnd          photon-number law, photon subtraction, optical damping
quadrature   homodyne quadrature density, moments, detector efficiency
measures     four non-Gaussianity measures and parameter sweeps
wigner       Wigner functions of Fock-diagonal states
sampling     synthetic photon numbers, quadrature datasets, heralding tap
estimation   maximum likelihood, Fisher information, chi-squared, bootstrap
cli          ``mpsts`` command-line tool
"""

from .errors import (
    DegenerateModelError,
    EstimationError,
    InsufficientDataError,
    MpstsError,
    ParameterError,
    UnphysicalDataError,
)
from .estimation import (
    FitReport,
    MLEstimate,
    chi2_goodness_of_fit,
    delta_k_from_samples,
    efficiency_correct,
    estimate_loss_level,
    fisher_information,
    log_likelihood,
    mle_fit,
)
from .measures import (
    MEASURE_NAMES,
    NonGaussianityReport,
    all_measures,
    delta_f,
    delta_hs,
    delta_k,
    delta_re,
    fidelity_diagonal,
    measure_error_propagation,
    sweep_measures,
)
from .pnd import (
    LossChannel,
    PndParams,
    TruncatedPnd,
    apply_binomial_loss_oracle,
    damped_pmf,
    gauss_2f1_terminating,
    pnd_moments,
    pnd_pmf,
    pnd_truncate,
    subtract_photons_oracle,
)
from .quadrature import (
    DetectorModel,
    MomentSummary,
    corrected_kurtosis,
    detector_smear_pdf,
    ideal_moments,
    oscillator_eigenfunction,
    quadrature_pdf,
    sample_moments,
)
from .sampling import (
    HomodyneDataset,
    SubtractionTap,
    apply_loss_to_dataset,
    read_dataset,
    sample_photon_number,
    sample_quadrature_dataset,
    simulate_conditional_subtraction,
    write_dataset,
)
from .wigner import WignerGrid, radial_argmax, wigner_fock, wigner_mpsts, wigner_radial

__version__ = "0.1.0"
