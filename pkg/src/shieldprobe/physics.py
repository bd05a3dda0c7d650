"""Physical response models for a shielded computing device under RF probing.

Covers the quantities an external measurement sees:

* passive pickup: a magnetic loop probe integrating the near field of the
  device's switching currents (Faraday voltage with an inverse-cube
  distance kernel),
* active probing: the complex reflection coefficient at the probe/device
  interface, modulated by the workload-dependent input impedance,
* the enclosure: a frequency-dependent shielding-effectiveness curve with
  a designed protection band and degraded attenuation above it.

All functions are pure and accept scalar or ndarray frequency arguments
(numpy broadcasting); randomness (impedance jitter, countermeasure draws)
is always supplied by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

# Denominators of the reflection quotient smaller than this are treated as
# degenerate (short between probe and device).
_DEGENERATE_OHM = 1e-12

# |gamma| may exceed 1 by at most this much before being rejected as
# non-passive input.
_PASSIVITY_SLACK = 1e-9


class ProgramId(IntEnum):
    """Workload executed by the device; stored as a u8 label in trace files."""

    IDLE = 1
    BLINK = 2
    COMPUTE = 3


def _require_finite(name: str, *values: complex) -> None:
    for v in values:
        z = complex(v)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ValueError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class ShieldProfile:
    """Frequency-dependent shielding effectiveness of an enclosure.

    Attenuation is ``se_in_band_db`` for frequencies inside
    [band_lo_hz, band_hi_hz].  Above the band it falls linearly in dB per
    decade of frequency but never below ``se_high_cap_db`` (the residual
    attenuation the material still provides well above its design band).
    Below the band it falls symmetrically toward 0 dB.
    """

    name: str
    band_lo_hz: float
    band_hi_hz: float
    se_in_band_db: float
    se_high_cap_db: float
    rolloff_db_per_decade: float

    def __post_init__(self) -> None:
        if not self.band_lo_hz < self.band_hi_hz:
            raise ValueError("band_lo_hz must be below band_hi_hz")
        if min(self.se_in_band_db, self.se_high_cap_db, self.rolloff_db_per_decade) < 0:
            raise ValueError("shielding effectiveness values must be >= 0 dB")
        _require_finite("ShieldProfile fields", self.band_lo_hz, self.band_hi_hz,
                        self.se_in_band_db, self.se_high_cap_db,
                        self.rolloff_db_per_decade)


@dataclass(frozen=True)
class DeviceImpedanceModel:
    """Workload-dependent input impedance of the device under test.

    The baseline is a series RLC:  Z(f) = R + j(2*pi*f*L - 1/(2*pi*f*C)),
    with R = r0 + activity * delta_r + jitter.  ``shield_static_reflection``
    is the state-independent reflection off the enclosure surface seen by
    an active probe; it does not traverse the shield.
    """

    z_probe_ohm: complex = 50 + 0j
    r0_ohm: float = 45.0
    l_henry: float = 3e-9
    c_farad: float = 0.3e-12
    delta_r_ohm: float = 10.0
    jitter_sigma_ohm: float = 0.4
    shield_static_reflection: complex = 0.3 + 0j

    def __post_init__(self) -> None:
        if self.r0_ohm <= 0 or self.l_henry <= 0 or self.c_farad <= 0:
            raise ValueError("r0_ohm, l_henry and c_farad must be positive")
        if self.delta_r_ohm < 0 or self.jitter_sigma_ohm < 0:
            raise ValueError("delta_r_ohm and jitter_sigma_ohm must be >= 0")
        if abs(self.shield_static_reflection) > 1 + _PASSIVITY_SLACK:
            raise ValueError("|shield_static_reflection| must be <= 1")
        _require_finite("DeviceImpedanceModel fields", self.z_probe_ohm,
                        self.r0_ohm, self.l_henry, self.c_farad,
                        self.delta_r_ohm, self.jitter_sigma_ohm,
                        self.shield_static_reflection)


@dataclass(frozen=True)
class ProgramProfile:
    """One workload state: an activity level and an optional on/off pattern.

    ``modulation_period_points`` makes the activity toggle between this
    profile's level and the idle level every that-many points along the
    sweep axis (a fixed-period blinking workload).
    """

    id: ProgramId
    activity_level: float
    modulation_period_points: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.activity_level <= 1.0:
            raise ValueError("activity_level must lie in [0, 1]")
        if self.modulation_period_points is not None and self.modulation_period_points < 1:
            raise ValueError("modulation_period_points must be a positive integer")


@dataclass(frozen=True)
class CurrentSource:
    """Point current source on the die with per-workload amplitude."""

    position_m: tuple[float, float, float]
    amplitude_per_state: dict[ProgramId, float]
    harmonic_freqs_hz: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(a < 0 for a in self.amplitude_per_state.values()):
            raise ValueError("source amplitudes must be >= 0")
        if any(f <= 0 for f in self.harmonic_freqs_hz):
            raise ValueError("harmonic frequencies must be positive")


@dataclass(frozen=True)
class CurrentSourceSet:
    """The set of switching-current sources radiating from the device."""

    sources: tuple[CurrentSource, ...]


@dataclass(frozen=True)
class ProbeModel:
    """Magnetic loop probe: position, loop area, alignment and medium."""

    position_m: tuple[float, float, float]
    loop_area_m2: float
    orientation_gain: float = 1.0
    permeability: float = 4e-7 * math.pi

    def __post_init__(self) -> None:
        if self.loop_area_m2 <= 0:
            raise ValueError("loop_area_m2 must be positive")
        if not 0.0 <= self.orientation_gain <= 1.0:
            raise ValueError("orientation_gain must lie in [0, 1]")
        if self.permeability <= 0:
            raise ValueError("permeability must be positive")


def reflection_coefficient(z_dut, z_probe):
    """Complex reflection coefficient (z_dut - z_probe) / (z_dut + z_probe).

    Accepts scalars or broadcastable arrays.  Raises ValueError when the
    denominator is degenerate (|z_dut + z_probe| < 1e-12 ohm).
    """
    z_dut = np.asarray(z_dut, dtype=complex)
    z_probe = np.asarray(z_probe, dtype=complex)
    den = z_dut + z_probe
    if np.any(np.abs(den) < _DEGENERATE_OHM):
        raise ValueError("degenerate impedance sum: |z_dut + z_probe| < 1e-12 ohm")
    gamma = (z_dut - z_probe) / den
    return complex(gamma) if gamma.ndim == 0 else gamma


def device_impedance(model: DeviceImpedanceModel, program: ProgramProfile, f, jitter_draw=0.0):
    """Input impedance at frequency ``f`` for a given workload state.

    Real part: r0 + activity_level * delta_r + jitter_draw * jitter_sigma.
    Imaginary part: series-RLC reactance 2*pi*f*L - 1/(2*pi*f*C).
    ``jitter_draw`` is a caller-supplied standard-normal draw, so the
    function itself stays deterministic.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequency must be positive")
    r = (model.r0_ohm
         + program.activity_level * model.delta_r_ohm
         + np.asarray(jitter_draw, dtype=float) * model.jitter_sigma_ohm)
    w = 2.0 * np.pi * f
    x = w * model.l_henry - 1.0 / (w * model.c_farad)
    z = r + 1j * x
    return complex(z) if z.ndim == 0 else z


def shield_attenuation(shield: ShieldProfile, f):
    """Amplitude transmission factor 10**(-SE(f)/20) in (0, 1].

    SE(f) equals ``se_in_band_db`` inside the protection band.  Above the
    band it decreases by ``rolloff_db_per_decade`` per decade of f but is
    floored at ``se_high_cap_db``; below the band it decreases
    symmetrically and is floored at 0 dB.  Continuous at both band edges.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequency must be positive")
    se_in = shield.se_in_band_db
    above = se_in - shield.rolloff_db_per_decade * np.log10(f / shield.band_hi_hz)
    below = se_in - shield.rolloff_db_per_decade * np.log10(shield.band_lo_hz / f)
    se = np.where(f > shield.band_hi_hz,
                  np.clip(above, min(shield.se_high_cap_db, se_in), se_in),
                  np.where(f < shield.band_lo_hz,
                           np.clip(below, 0.0, se_in),
                           se_in))
    factor = 10.0 ** (-se / 20.0)
    return float(factor) if factor.ndim == 0 else factor


def backscatter_response(model: DeviceImpedanceModel, shield: ShieldProfile,
                         program: ProgramProfile, f, v_in=1.0 + 0j, jitter_draw=0.0):
    """Reflected voltage seen by an active probe facing the shielded device.

    The state-independent surface reflection adds directly; the
    state-dependent reflection off the device traverses the shield twice,
    so its amplitude scales with the square of the shield transmission
    factor:

        V_r = (static + A(f)**2 * gamma(f, state)) * v_in
    """
    a = shield_attenuation(shield, f)
    z = device_impedance(model, program, f, jitter_draw)
    gamma = reflection_coefficient(z, model.z_probe_ohm)
    v = (model.shield_static_reflection + np.asarray(a) ** 2 * gamma) * np.asarray(v_in, dtype=complex)
    v = np.asarray(v)
    return complex(v) if v.ndim == 0 else v


def probe_voltage_em(sources: CurrentSourceSet, probe: ProbeModel, shield: ShieldProfile,
                     program: ProgramProfile, f, match_tol_hz: float = 0.0):
    """Frequency-domain voltage induced in the loop probe by device currents.

    Each source emitting at ``f`` contributes its amplitude divided by
    4*pi*d**3 (near-field inverse-cube kernel, d the probe-source
    distance); the sum is scaled by j*2*pi*f, the medium permeability, the
    loop area and the orientation gain, then attenuated by the shield.
    Sources whose harmonic set does not contain ``f`` (within
    ``match_tol_hz``) contribute nothing.

    Raises ValueError if any source coincides with the probe position.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequency must be positive")
    p = np.asarray(probe.position_m, dtype=float)
    kernel_sum = np.zeros(f.shape, dtype=float)
    for src in sources.sources:
        d = float(np.linalg.norm(p - np.asarray(src.position_m, dtype=float)))
        if d <= 0.0:
            raise ValueError(f"source at {src.position_m} coincides with the probe")
        amp = src.amplitude_per_state.get(program.id, 0.0)
        if amp == 0.0 or not src.harmonic_freqs_hz:
            continue
        hf = np.asarray(src.harmonic_freqs_hz, dtype=float)
        emits = (np.abs(f[..., None] - hf) <= match_tol_hz).any(axis=-1)
        kernel_sum = kernel_sum + emits * (amp / (4.0 * np.pi * d ** 3))
    v = (1j * 2.0 * np.pi * f
         * probe.permeability * probe.loop_area_m2 * probe.orientation_gain
         * kernel_sum * shield_attenuation(shield, f))
    v = np.asarray(v)
    return complex(v) if v.ndim == 0 else v


def leakage_model(gamma):
    """Reflected-power fraction |gamma|**2 used to rank probing frequencies.

    Rejects non-passive input (|gamma| materially above 1).
    """
    g = np.abs(np.asarray(gamma, dtype=complex))
    if np.any(g > 1.0 + _PASSIVITY_SLACK):
        raise ValueError("non-passive reflection coefficient: |gamma| > 1")
    out = g ** 2
    return float(out) if out.ndim == 0 else out


def randomize_impedance(model: DeviceImpedanceModel, strength: float,
                        draw: float) -> DeviceImpedanceModel:
    """Countermeasure: randomly perturb the baseline resistance.

    Returns a copy with r0 scaled by (1 + strength * delta_r/r0 * draw);
    ``draw`` is a caller-supplied uniform draw on [-1, 1], so symmetric
    draws preserve the expected r0.  strength=0 is the identity.
    """
    if not 0.0 <= strength <= 1.0:
        raise ValueError("strength must lie in [0, 1]")
    if strength == 0.0:
        return model
    r0 = model.r0_ohm * (1.0 + strength * (model.delta_r_ohm / model.r0_ohm) * draw)
    return replace(model, r0_ohm=r0)
