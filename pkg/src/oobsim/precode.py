"""Maximum-ratio precoding, power allocation, and total-power normalization.

MRT is applied per frequency bin for line-of-sight channels (a true
delay-conjugate over the whole oversampled band, not a single carrier
phase) and as time-reversed conjugated symbol-spaced filters for tap
channels. Per-user precoding filters are normalized in aggregate energy
first; one global scale then pins the realized mean total frame power
exactly, since the paper's comparisons fix total radiated power and
per-user received power rather than per-antenna power.
"""

from dataclasses import dataclass

import numpy as np

from oobsim.channel import LosChannel, TapChannel
from oobsim.geometry import SPEED_OF_LIGHT
from oobsim.waveform import SampledSignal


@dataclass(frozen=True)
class PowerAllocation:
    """Nonnegative per-user power fractions summing to one."""

    per_user_powers: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.per_user_powers, dtype=np.float64))
        object.__setattr__(self, "per_user_powers", p)
        if np.any(p < 0):
            raise ValueError("per-user powers must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"per-user powers sum to {p.sum()}, expected 1")

    @property
    def num_users(self) -> int:
        return self.per_user_powers.size


def allocate_power(path_gains, mode: str) -> PowerAllocation:
    """Equal split, or beam powers inversely proportional to the power path loss.

    `path_gains` are linear amplitude gains beta_k; inverse mode sets
    p_k proportional to 1/beta_k^2, which equalizes received powers under MRT.
    """
    gains = np.atleast_1d(np.asarray(path_gains, dtype=np.float64))
    if mode == "equal":
        p = np.full(gains.size, 1.0 / gains.size)
    elif mode == "inverse_path_loss":
        if np.any(gains <= 0):
            raise ValueError("inverse_path_loss requires strictly positive gains")
        p = 1.0 / gains**2
        p = p / p.sum()
    else:
        raise ValueError(f"unknown allocation mode {mode!r}")
    return PowerAllocation(per_user_powers=p)


def siso_reference_power(siso_power: float, num_antennas: int, num_users: int) -> float:
    """Array total power giving each MRT-served user the SISO received power.

    With array gain M/K per user under equal allocation, P_array =
    (K/M) * P_SISO.
    """
    if num_users < 1 or num_antennas < num_users:
        raise ValueError("need M >= K >= 1")
    if siso_power <= 0:
        raise ValueError("siso_power must be positive")
    return siso_power * num_users / num_antennas


@dataclass(frozen=True)
class PrecodedFrame:
    """Per-antenna waveforms sharing one sample rate and length.

    total_power is the realized mean over time of sum_m |x_m|^2 and is
    verified against the stored samples on construction.
    """

    samples: np.ndarray  # complex, shape (M, N)
    sample_rate: float
    total_power: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 2 or samples.shape[1] < 1:
            raise ValueError("samples must have shape (M, N)")
        object.__setattr__(self, "samples", samples)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        measured = self.measured_total_power()
        if not np.isclose(measured, self.total_power, rtol=1e-9, atol=1e-300):
            raise ValueError(
                f"stored total_power {self.total_power} != measured {measured}"
            )

    @property
    def num_antennas(self) -> int:
        return self.samples.shape[0]

    @property
    def num_samples(self) -> int:
        return self.samples.shape[1]

    def measured_total_power(self) -> float:
        return float(np.sum(np.mean(np.abs(self.samples) ** 2, axis=1)))

    def antenna_signal(self, m: int) -> SampledSignal:
        return SampledSignal(self.samples[m], self.sample_rate)


def _as_signal_matrix(user_signals) -> tuple[np.ndarray, float]:
    if isinstance(user_signals, SampledSignal):
        user_signals = [user_signals]
    signals = list(user_signals)
    if not signals:
        raise ValueError("at least one user signal required")
    rate = signals[0].sample_rate
    length = signals[0].samples.size
    for s in signals[1:]:
        if s.sample_rate != rate or s.samples.size != length:
            raise ValueError("user signals must share sample rate and length")
    return np.stack([s.samples for s in signals]), rate


def _scale_frame(samples: np.ndarray, sample_rate: float, total_power: float) -> PrecodedFrame:
    measured = float(np.sum(np.mean(np.abs(samples) ** 2, axis=1)))
    if measured <= 0:
        raise ValueError("precoded frame has zero power")
    samples = samples * np.sqrt(total_power / measured)
    return PrecodedFrame(
        samples=samples,
        sample_rate=sample_rate,
        total_power=float(np.sum(np.mean(np.abs(samples) ** 2, axis=1))),
    )


def _mrt_los(signals: np.ndarray, rate: float, channel: LosChannel, powers: np.ndarray) -> np.ndarray:
    geom = channel.geometry
    num_users, n = signals.shape
    f_abs = geom.carrier_frequency + np.fft.fftfreq(n, d=1.0 / rate)
    spectra = np.fft.fft(signals, axis=1)
    acc = np.zeros((geom.num_antennas, n), dtype=np.complex128)
    # conjugate steering phasors advance geometrically along the ULA:
    # weight of antenna m is base_k^m with base_k = exp(+j 2 pi f tau_1(theta_k))
    tau1 = geom.spacing_m * np.sin(channel.user_angles) / SPEED_OF_LIGHT
    weights = np.sqrt(powers / geom.num_antennas)
    for k in range(num_users):
        if channel.path_gains[k] == 0 and powers[k] > 0:
            raise ValueError(f"user {k} has zero channel gain; MRT undefined")
        base = np.exp(2j * np.pi * f_abs * tau1[k])
        contribution = weights[k] * spectra[k]
        running = np.ones(n, dtype=np.complex128)
        for m in range(geom.num_antennas):
            acc[m] += contribution * running
            running *= base
    return np.fft.ifft(acc, axis=1)


def _mrt_taps(
    signals: np.ndarray, channel: TapChannel, powers: np.ndarray, samples_per_symbol: int
) -> np.ndarray:
    num_users, n = signals.shape
    taps = channel.taps
    num_antennas, _, num_taps = taps.shape
    norms = np.sqrt(np.sum(np.abs(taps) ** 2, axis=(0, 2)))  # (K,)
    if np.any(norms == 0):
        raise ValueError("zero channel for some user; MRT normalization undefined")
    # matched filter: time-reversed complex conjugate, taps at symbol spacing
    filters = np.conj(taps[:, :, ::-1])
    n_out = n + (num_taps - 1) * samples_per_symbol
    spectra = np.fft.fft(signals, n=n_out, axis=1)
    delay = np.exp(
        -2j
        * np.pi
        * np.outer(np.arange(num_taps) * samples_per_symbol, np.fft.fftfreq(n_out))
    )  # (L, n_out)
    coef = np.sqrt(powers) / norms
    acc = np.empty((num_antennas, n_out), dtype=np.complex128)
    for m in range(num_antennas):
        filter_response = filters[m] @ delay  # (K, n_out)
        acc[m] = np.sum(coef[:, None] * spectra * filter_response, axis=0)
    return np.fft.ifft(acc, axis=1)


def mrt_precode(
    user_signals,
    channel,
    allocation: PowerAllocation,
    total_power: float,
    samples_per_symbol: int | None = None,
) -> PrecodedFrame:
    """Maximum-ratio precoding of K user signals onto M antennas.

    LOS channels get per-bin conjugate delay steering; tap channels get the
    time-reversed conjugated channel filter (linear convolution, so the frame
    grows by (L-1) symbol periods). The realized mean total power equals
    `total_power` exactly by a final global scale.
    """
    signals, rate = _as_signal_matrix(user_signals)
    if total_power <= 0:
        raise ValueError("total_power must be positive")
    if allocation.num_users != signals.shape[0]:
        raise ValueError(
            f"allocation covers {allocation.num_users} users, got {signals.shape[0]} signals"
        )
    powers = allocation.per_user_powers
    if isinstance(channel, LosChannel):
        if channel.num_users != signals.shape[0]:
            raise ValueError("channel user count does not match signals")
        out = _mrt_los(signals, rate, channel, powers)
    elif isinstance(channel, TapChannel):
        if channel.num_users != signals.shape[0]:
            raise ValueError("channel user count does not match signals")
        if samples_per_symbol is None or samples_per_symbol < 1:
            raise ValueError("samples_per_symbol required for tap channels")
        out = _mrt_taps(signals, channel, powers, samples_per_symbol)
    else:
        raise TypeError(f"unsupported channel type {type(channel).__name__}")
    return _scale_frame(out, rate, total_power)


def mrt_precode_response(
    user_signals,
    response: np.ndarray,
    allocation: PowerAllocation,
    total_power: float,
) -> PrecodedFrame:
    """MRT against an explicit per-bin frequency response, shape (M, K, N).

    Used for channels without a simple parametric form (e.g. scatterer rays);
    the response must be sampled on the FFT grid of the user signals.
    Conjugate combining per bin, aggregate-energy normalization per user.
    """
    signals, rate = _as_signal_matrix(user_signals)
    num_users, n = signals.shape
    if response.ndim != 3 or response.shape[1] != num_users or response.shape[2] != n:
        raise ValueError("response must have shape (M, K, N) matching the signals")
    norms = np.sqrt(np.mean(np.sum(np.abs(response) ** 2, axis=0), axis=1))  # (K,)
    if np.any(norms == 0):
        raise ValueError("zero channel for some user; MRT normalization undefined")
    spectra = np.fft.fft(signals, axis=1)
    coef = np.sqrt(allocation.per_user_powers) / norms
    acc = np.einsum("k,kn,mkn->mn", coef, spectra, np.conj(response), optimize=True)
    out = np.fft.ifft(acc, axis=1)
    return _scale_frame(out, rate, total_power)
