"""Waveforms and the scalar SDR / SDRi primitives.

All signals are single-channel and stored as read-only float64 arrays.
SDR follows the usual definition

    SDR(est, ref) = 10 log10( ||ref||^2 / ||ref - est||^2 )

with two guards that keep the value finite: the error energy is floored at
``energy_floor * ||ref||^2`` and the result is capped at ``sdr_cap_db``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, SampleRateMismatch, SilentReference

DEFAULT_SDR_CAP_DB = 60.0
DEFAULT_ENERGY_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class Waveform:
    """A finite single-channel sampled signal."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64, copy=True)
        if x.ndim != 1:
            raise ValueError(f"waveform must be 1-D, got shape {x.shape}")
        if x.size == 0:
            raise ValueError("waveform is empty")
        if not np.all(np.isfinite(x)):
            raise ValueError("waveform contains NaN or Inf samples")
        rate = int(self.sample_rate_hz)
        if rate <= 0 or rate != self.sample_rate_hz:
            raise ValueError(f"sample rate must be a positive integer, got {self.sample_rate_hz!r}")
        x.flags.writeable = False
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate_hz", rate)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    def __eq__(self, other):
        if not isinstance(other, Waveform):
            return NotImplemented
        return (self.sample_rate_hz == other.sample_rate_hz
                and np.array_equal(self.samples, other.samples))

    __hash__ = None

    def scaled(self, factor: float) -> "Waveform":
        return Waveform(self.samples * factor, self.sample_rate_hz)


@dataclass(frozen=True)
class NumericGuards:
    """Bounds that keep SDR finite in the perfect-reconstruction case."""

    sdr_cap_db: float = DEFAULT_SDR_CAP_DB
    energy_floor: float = DEFAULT_ENERGY_FLOOR

    def __post_init__(self):
        if not (math.isfinite(self.sdr_cap_db) and self.sdr_cap_db > 0):
            raise ValueError(f"sdr_cap_db must be positive and finite, got {self.sdr_cap_db}")
        if not (math.isfinite(self.energy_floor) and self.energy_floor > 0):
            raise ValueError(f"energy_floor must be positive and finite, got {self.energy_floor}")


DEFAULT_GUARDS = NumericGuards()


def _as_array(w) -> np.ndarray:
    return w.samples if isinstance(w, Waveform) else np.asarray(w, dtype=np.float64)


def energy(w) -> float:
    """Sum of squared samples."""
    x = _as_array(w)
    return float(np.dot(x, x))


def check_compatible(*waves: Waveform) -> None:
    """Raise unless all waveforms share length and sample rate."""
    first = waves[0]
    for w in waves[1:]:
        if w.sample_rate_hz != first.sample_rate_hz:
            raise SampleRateMismatch(
                f"sample rates differ: {first.sample_rate_hz} Hz vs {w.sample_rate_hz} Hz")
        if len(w) != len(first):
            raise LengthMismatch(f"lengths differ: {len(first)} vs {len(w)} samples")


def sdr(est: Waveform, ref: Waveform, guards: NumericGuards = DEFAULT_GUARDS) -> float:
    """Signal-to-distortion ratio of ``est`` against ``ref`` in dB.

    Raises
    ------
    LengthMismatch
        if the two signals differ in length or sample rate.
    SilentReference
        if ``energy(ref) <= guards.energy_floor``.
    """
    check_compatible(est, ref)
    ref_energy = energy(ref)
    if not ref_energy > guards.energy_floor:
        raise SilentReference(
            f"reference energy {ref_energy:.3e} is not above the floor {guards.energy_floor:.3e}")
    err_energy = energy(ref.samples - est.samples)
    err_energy = max(err_energy, guards.energy_floor * ref_energy)
    return min(10.0 * math.log10(ref_energy / err_energy), guards.sdr_cap_db)


def sdri(est: Waveform, ref: Waveform, mixture_ref_channel: Waveform,
         guards: NumericGuards = DEFAULT_GUARDS) -> float:
    """SDR improvement of ``est`` over the unprocessed mixture channel."""
    check_compatible(est, ref, mixture_ref_channel)
    return sdr(est, ref, guards) - sdr(mixture_ref_channel, ref, guards)
