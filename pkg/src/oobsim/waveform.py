"""Transmit waveforms: symbols, root-raised-cosine shaping, amplitude statistics."""

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve


@dataclass(frozen=True)
class SampledSignal:
    """Uniformly sampled complex-baseband waveform."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 1 or samples.size < 1:
            raise ValueError("samples must be a nonempty 1-D sequence")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", samples)

    @property
    def power(self) -> float:
        """Mean of |sample|^2."""
        return float(np.mean(np.abs(self.samples) ** 2))

    def scaled(self, factor: complex) -> "SampledSignal":
        return SampledSignal(self.samples * factor, self.sample_rate)


@dataclass(frozen=True)
class PulseShape:
    """Unit-energy FIR interpolation filter with its oversampling factor."""

    taps: np.ndarray
    oversampling_factor: int
    rolloff: float

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        object.__setattr__(self, "taps", taps)
        if self.oversampling_factor < 1:
            raise ValueError("oversampling_factor must be >= 1")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ValueError("rolloff must lie in [0, 1]")


def design_rrc(rolloff: float, span_symbols: int, oversampling_factor: int) -> PulseShape:
    """Root-raised-cosine taps over `span_symbols`, unit energy, symmetric.

    The removable singularities of the closed-form impulse response (t = 0
    and |t| = Ts/(4*rolloff)) are filled with their analytic limits.
    """
    if not 0.0 <= rolloff <= 1.0:
        raise ValueError("rolloff must lie in [0, 1]")
    if span_symbols < 1:
        raise ValueError("span_symbols must be >= 1")
    if oversampling_factor < 1:
        raise ValueError("oversampling_factor must be >= 1")

    n = span_symbols * oversampling_factor + 1
    t = (np.arange(n) - (n - 1) / 2) / oversampling_factor  # in symbol periods
    taps = np.empty(n, dtype=np.float64)

    at_center = np.abs(t) < 1e-12
    if rolloff > 0:
        at_pole = np.abs(np.abs(t) - 1.0 / (4.0 * rolloff)) < 1e-9
    else:
        at_pole = np.zeros(n, dtype=bool)
    regular = ~(at_center | at_pole)

    tr = t[regular]
    numerator = np.sin(np.pi * tr * (1 - rolloff)) + 4 * rolloff * tr * np.cos(np.pi * tr * (1 + rolloff))
    denominator = np.pi * tr * (1 - (4 * rolloff * tr) ** 2)
    taps[regular] = numerator / denominator
    taps[at_center] = 1.0 - rolloff + 4.0 * rolloff / np.pi
    if rolloff > 0:
        taps[at_pole] = (rolloff / np.sqrt(2.0)) * (
            (1 + 2 / np.pi) * np.sin(np.pi / (4 * rolloff))
            + (1 - 2 / np.pi) * np.cos(np.pi / (4 * rolloff))
        )

    taps /= np.linalg.norm(taps)
    return PulseShape(taps=taps, oversampling_factor=oversampling_factor, rolloff=rolloff)


def generate_symbols(
    num_users: int, num_symbols: int, seed: int, constellation: str = "gaussian"
) -> np.ndarray:
    """i.i.d. zero-mean unit-power symbol streams, shape (num_users, num_symbols).

    Circularly-symmetric complex Gaussian by default; precoded sums of many
    streams are near-Gaussian regardless, so a QPSK option is also offered.
    """
    if num_users < 1 or num_symbols < 1:
        raise ValueError("num_users and num_symbols must be >= 1")
    rng = np.random.default_rng(seed)
    if constellation == "gaussian":
        re = rng.standard_normal((num_users, num_symbols))
        im = rng.standard_normal((num_users, num_symbols))
        return (re + 1j * im) / np.sqrt(2.0)
    if constellation == "qpsk":
        bits = rng.integers(0, 4, size=(num_users, num_symbols))
        return np.exp(1j * (np.pi / 4 + np.pi / 2 * bits))
    raise ValueError(f"unknown constellation {constellation!r}")


def pulse_shape(symbols: np.ndarray, shape: PulseShape, baud_rate: float) -> SampledSignal:
    """Zero-stuff by the oversampling factor and filter with the pulse taps.

    Taps are scaled by sqrt(oversampling) so unit-power symbols give a
    unit-power waveform; sample_rate = baud_rate * oversampling_factor.
    """
    symbols = np.asarray(symbols)
    if symbols.ndim != 1 or symbols.size < 1:
        raise ValueError("symbols must be a nonempty 1-D sequence")
    if baud_rate <= 0:
        raise ValueError("baud_rate must be positive")
    os = shape.oversampling_factor
    upsampled = np.zeros(symbols.size * os, dtype=np.complex128)
    upsampled[::os] = symbols
    out = fftconvolve(upsampled, shape.taps * np.sqrt(os), mode="full")
    return SampledSignal(out, baud_rate * os)


def peak_to_average_ratio(signal: SampledSignal, percentile: float) -> float:
    """Ratio of the given percentile of instantaneous power to mean power, in dB."""
    if not 0.0 < percentile < 1.0:
        raise ValueError("percentile must lie in (0, 1)")
    inst = np.abs(signal.samples) ** 2
    return 10.0 * np.log10(np.quantile(inst, percentile) / np.mean(inst))
