"""Closed-form noise budget of the passive preparation stage and the channel.

All variances are in shot-noise units.  The preparation stage splits a
thermal source of mean photon number ``n0``, measures one arm with a
noisy conjugate-homodyne receiver, and attenuates the other arm down to
modulation variance ``v_a``; the residual mismatch between the measured
estimate and the outgoing quadrature is the preparation excess noise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import ParameterError
from .gaussian import DetectorModel

__all__ = [
    "ChannelModel",
    "NoiseBudget",
    "ProtocolParams",
    "TransmittanceFloorWarning",
    "alice_uncertainty",
    "channel_transmittance",
    "excess_noise_alice",
    "heterodyne_noise",
    "total_noise",
]

# Floor on channel transmittance; absurd lengths clamp here with a warning
# instead of dividing by numbers below double precision.
T_FLOOR = 1e-15


class TransmittanceFloorWarning(UserWarning):
    """The configured fiber length drove the transmittance to the floor."""


@dataclass(frozen=True)
class ProtocolParams:
    """Source brightness, modulation variance, reconciliation efficiency and
    residual untrusted noise of one protocol configuration.

    ``v_a = 0`` (full attenuation, nothing sent) is a legal edge case for
    simulation; key-rate operations require ``v_a > 0``.
    """

    n0: float
    v_a: float
    f: float = 0.95
    eps0: float = 0.01

    def __post_init__(self):
        if not (self.n0 > 0.0 and math.isfinite(self.n0)):
            raise ParameterError(f"source mean photon number must be > 0, got {self.n0}")
        if not (0.0 <= self.v_a and math.isfinite(self.v_a)):
            raise ParameterError(f"modulation variance must be >= 0, got {self.v_a}")
        if self.v_a > self.n0:
            raise ParameterError(
                f"modulation variance {self.v_a} exceeds source photon number {self.n0} "
                "(attenuator transmittance would be > 1)"
            )
        if not (0.0 < self.f <= 1.0):
            raise ParameterError(f"reconciliation efficiency must be in (0, 1], got {self.f}")
        if not (self.eps0 >= 0.0 and math.isfinite(self.eps0)):
            raise ParameterError(f"residual excess noise must be >= 0, got {self.eps0}")

    @property
    def eta_a(self) -> float:
        """Attenuator transmittance on the outgoing mode, ``v_a / n0``."""
        return self.v_a / self.n0


@dataclass(frozen=True)
class ChannelModel:
    """Telecom fiber of attenuation ``gamma_db_km`` (dB/km) and length (km)."""

    gamma_db_km: float
    length_km: float

    def __post_init__(self):
        if not (self.gamma_db_km >= 0.0 and math.isfinite(self.gamma_db_km)):
            raise ParameterError(f"attenuation coefficient must be >= 0, got {self.gamma_db_km}")
        if not (self.length_km >= 0.0 and math.isfinite(self.length_km)):
            raise ParameterError(f"fiber length must be >= 0, got {self.length_km}")

    @classmethod
    def from_transmittance(cls, t: float) -> "ChannelModel":
        """Channel with a directly specified transmittance in (0, 1]."""
        if not (0.0 < t <= 1.0):
            raise ParameterError(f"transmittance must be in (0, 1], got {t}")
        return cls(gamma_db_km=1.0, length_km=-10.0 * math.log10(t))


@dataclass(frozen=True)
class NoiseBudget:
    """Derived noise quantities, all in SNU.

    ``eps_a``: preparation excess noise; ``eps_e``: total untrusted excess
    noise; ``chi_het``: receiver-added noise referred to the receiver
    input; ``chi_line``: channel-added noise referred to the channel
    input; ``chi_tot = chi_line + chi_het / T``.
    """

    eps_a: float
    eps_e: float
    chi_het: float
    chi_line: float
    chi_tot: float


def _prep_excess(eta_a: float, det: DetectorModel) -> float:
    # Shared by alice_uncertainty and excess_noise_alice so that the
    # identity "uncertainty == excess + 1" holds bit-exactly.
    return (2.0 * eta_a / det.eta_d) * (1.0 + det.v_el - det.eta_d / 2.0)


def alice_uncertainty(eta_a: float, det: DetectorModel) -> float:
    """Variance of Alice's error when estimating the outgoing quadrature.

    Returns ``(2 eta_a / eta_d) (1 + v_el - eta_d / 2) + 1``; the trailing
    1 is the vacuum unit carried by the outgoing mode itself.
    """
    if not (0.0 <= eta_a <= 1.0):
        raise ParameterError(f"attenuator transmittance must be in [0, 1], got {eta_a}")
    return _prep_excess(eta_a, det) + 1.0


def excess_noise_alice(params: ProtocolParams, det: DetectorModel) -> float:
    """Preparation excess noise ``(2 v_a / (n0 eta_d)) (1 + v_el - eta_d / 2)``.

    Linear in ``v_a`` and inversely proportional to the source brightness,
    which is why a bright source tolerates a noisy local receiver.
    """
    return _prep_excess(params.eta_a, det)


def channel_transmittance(ch: ChannelModel) -> float:
    """Power transmittance ``10 ** (-gamma L / 10)``, floored at ``T_FLOOR``."""
    t = 10.0 ** (-ch.gamma_db_km * ch.length_km / 10.0)
    if t < T_FLOOR:
        warnings.warn(
            f"transmittance {t:.3g} below floor {T_FLOOR:g}; clamping",
            TransmittanceFloorWarning,
            stacklevel=2,
        )
        return T_FLOOR
    return t


def heterodyne_noise(det: DetectorModel) -> float:
    """Receiver-added noise referred to the receiver input,
    ``[1 + (1 - eta_d) + 2 v_el] / eta_d``; equals 1 for an ideal receiver."""
    return (1.0 + (1.0 - det.eta_d) + 2.0 * det.v_el) / det.eta_d


def total_noise(
    params: ProtocolParams,
    det_a: DetectorModel,
    det_b: DetectorModel,
    ch: ChannelModel,
) -> NoiseBudget:
    """Assemble the full noise budget for one configuration.

    The preparation noise (from Alice's receiver ``det_a``) is treated as
    untrusted and folded into the channel excess noise; Bob's receiver
    ``det_b`` contributes trusted detection noise only.
    """
    eps_a = excess_noise_alice(params, det_a)
    eps_e = eps_a + params.eps0
    t = channel_transmittance(ch)
    chi_line = 1.0 / t - 1.0 + eps_e
    chi_het = heterodyne_noise(det_b)
    chi_tot = chi_line + chi_het / t
    return NoiseBudget(eps_a=eps_a, eps_e=eps_e, chi_het=chi_het, chi_line=chi_line, chi_tot=chi_tot)
