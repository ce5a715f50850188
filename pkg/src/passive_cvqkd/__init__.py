"""Passive-state-preparation continuous-variable QKD toolkit.

Simulator, noise-budget calculator and secure-key-rate engine for the
Gaussian-modulated coherent-state protocol with a passively prepared
(thermal-source) sender, plus the conjugate-homodyne photon-statistics
pipeline used to characterize thermal sources.
"""

from .errors import (
    DegenerateDataError,
    ParameterError,
    PhysicalityError,
    RecordFormatError,
    TrackingDisabledError,
    UnitError,
)
from .g2 import (
    CalibrationResult,
    G2Result,
    QuadratureRecord,
    calibrate_photon_number,
    export_histogram,
    g2_estimate,
    load_quadrature_records,
)
from .gaussian import (
    DetectorModel,
    RngStream,
    beamsplitter,
    heterodyne_measure,
    sample_thermal_quadratures,
)
from .keyrate import (
    KeyRateReport,
    ModulationOptimum,
    g_function,
    holevo_bound,
    mutual_information,
    optimize_modulation,
    secure_key_rate,
)
from .noise import (
    ChannelModel,
    NoiseBudget,
    ProtocolParams,
    alice_uncertainty,
    channel_transmittance,
    excess_noise_alice,
    heterodyne_noise,
    total_noise,
)
from .simulate import (
    SimConfig,
    SimSummary,
    empirical_mutual_information,
    estimate_excess_noise,
    run_protocol,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationResult",
    "ChannelModel",
    "DegenerateDataError",
    "DetectorModel",
    "G2Result",
    "KeyRateReport",
    "ModulationOptimum",
    "NoiseBudget",
    "ParameterError",
    "PhysicalityError",
    "ProtocolParams",
    "QuadratureRecord",
    "RecordFormatError",
    "RngStream",
    "SimConfig",
    "SimSummary",
    "TrackingDisabledError",
    "UnitError",
    "alice_uncertainty",
    "beamsplitter",
    "calibrate_photon_number",
    "channel_transmittance",
    "empirical_mutual_information",
    "estimate_excess_noise",
    "excess_noise_alice",
    "export_histogram",
    "g2_estimate",
    "g_function",
    "heterodyne_measure",
    "heterodyne_noise",
    "holevo_bound",
    "load_quadrature_records",
    "mutual_information",
    "optimize_modulation",
    "run_protocol",
    "sample_thermal_quadratures",
    "secure_key_rate",
    "total_noise",
]
