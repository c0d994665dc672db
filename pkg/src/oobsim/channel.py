"""Propagation models: static line-of-sight, i.i.d. Rayleigh taps, scatterer rays."""

from dataclasses import dataclass

import numpy as np

from oobsim.geometry import SPEED_OF_LIGHT, UlaGeometry, _angle_of


@dataclass(frozen=True)
class LosChannel:
    """Plane-wave channel: per user one departure angle and one amplitude gain.

    A pure delay channel, so |H(f)| is frequency-independent.
    """

    geometry: UlaGeometry
    user_angles: np.ndarray  # radians, shape (K,)
    path_gains: np.ndarray  # linear amplitude, shape (K,)

    def __post_init__(self):
        angles = np.atleast_1d(np.asarray(self.user_angles, dtype=np.float64))
        gains = np.atleast_1d(np.asarray(self.path_gains, dtype=np.float64))
        object.__setattr__(self, "user_angles", angles)
        object.__setattr__(self, "path_gains", gains)
        if angles.size < 1:
            raise ValueError("at least one user required")
        if not np.all(np.isfinite(gains)) or np.any(gains < 0):
            raise ValueError("path gains must be finite and nonnegative")

    @property
    def num_users(self) -> int:
        return self.user_angles.size

    def element_delays(self) -> np.ndarray:
        """Per-antenna, per-user far-field delays, shape (M, K)."""
        pos = self.geometry.element_positions()
        return np.outer(pos, np.sin(self.user_angles)) / SPEED_OF_LIGHT

    def frequency_response(self, absolute_frequencies: np.ndarray) -> np.ndarray:
        """Response beta_k * exp(-j 2 pi f tau_mk), shape (M, K, F)."""
        f = np.asarray(absolute_frequencies, dtype=np.float64)
        tau = self.element_delays()
        phase = np.exp(-2j * np.pi * tau[:, :, None] * f[None, None, :])
        return self.path_gains[None, :, None] * phase


def make_los(geometry: UlaGeometry, angles, gains) -> LosChannel:
    """Build a LosChannel from per-user Directions/radians and amplitude gains."""
    angles = np.atleast_1d(np.asarray([_angle_of(a) for a in np.atleast_1d(angles)]))
    gains = np.atleast_1d(np.asarray(gains, dtype=np.float64))
    if angles.size != gains.size:
        raise ValueError(f"{angles.size} angles but {gains.size} gains")
    return LosChannel(geometry=geometry, user_angles=angles, path_gains=gains)


@dataclass(frozen=True)
class TapChannel:
    """Symbol-spaced FIR fading channel, taps h[m][k][l] with E[sum_l |h|^2] = 1."""

    taps: np.ndarray  # complex, shape (M, K, L)

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.complex128)
        if taps.ndim != 3 or taps.shape[2] < 1:
            raise ValueError("taps must have shape (M, K, L) with L >= 1")
        object.__setattr__(self, "taps", taps)

    @property
    def num_antennas(self) -> int:
        return self.taps.shape[0]

    @property
    def num_users(self) -> int:
        return self.taps.shape[1]

    @property
    def num_taps(self) -> int:
        return self.taps.shape[2]


def sample_rayleigh(num_antennas: int, num_users: int, num_taps: int, seed: int) -> TapChannel:
    """i.i.d. CN(0, 1/L) taps: uniform power-delay profile, unit total energy."""
    if min(num_antennas, num_users, num_taps) < 1:
        raise ValueError("num_antennas, num_users and num_taps must be >= 1")
    rng = np.random.default_rng(seed)
    shape = (num_antennas, num_users, num_taps)
    taps = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2 * num_taps)
    return TapChannel(taps=taps)


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned region in meters."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError("region must be nondegenerate")

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        xy = rng.uniform(size=(count, 2))
        return np.column_stack(
            (
                self.x_min + xy[:, 0] * (self.x_max - self.x_min),
                self.y_min + xy[:, 1] * (self.y_max - self.y_min),
            )
        )


@dataclass(frozen=True)
class RayChannel:
    """Single-bounce rays to one terminal: per (antenna, scatterer) gain and delay.

    gain = g_s / (d_bs->scatterer * d_scatterer->terminal), delay = total path
    length / c.
    """

    gains: np.ndarray  # complex, shape (M, S)
    delays: np.ndarray  # seconds, shape (M, S)

    def frequency_response(self, absolute_frequencies: np.ndarray) -> np.ndarray:
        """Sum over rays of gain * exp(-j 2 pi f delay), shape (M, F)."""
        f = np.asarray(absolute_frequencies, dtype=np.float64)
        out = np.zeros((self.gains.shape[0], f.size), dtype=np.complex128)
        # loop over scatterers keeps the (M, S, F) intermediate out of memory
        for s in range(self.gains.shape[1]):
            out += self.gains[:, s, None] * np.exp(
                -2j * np.pi * self.delays[:, s, None] * f[None, :]
            )
        return out


@dataclass(frozen=True)
class ScatterLayout:
    """Randomly dropped scatterers and users; a factory for per-position rays.

    The array is centered at the origin with its axis along y, so broadside
    points east (+x) toward the scatterer region. Reflection coefficients are
    fixed at 1 (single bounce, spherical spreading on each leg, no direct
    path).
    """

    geometry: UlaGeometry
    antenna_positions: np.ndarray  # (M, 2)
    scatterer_positions: np.ndarray  # (S, 2)
    user_positions: np.ndarray  # (U, 2)
    reflection_coefficients: np.ndarray  # (S,)

    def ray_channel(self, position) -> RayChannel:
        """Rays from every antenna through every scatterer to `position`."""
        pos = np.asarray(position, dtype=np.float64)
        d_st = np.hypot(*(self.scatterer_positions - pos[None, :]).T)  # (S,)
        if np.any(d_st < 1e-9):
            raise ValueError("terminal position coincides with a scatterer")
        diff = self.antenna_positions[:, None, :] - self.scatterer_positions[None, :, :]
        d_ms = np.hypot(diff[..., 0], diff[..., 1])  # (M, S)
        gains = self.reflection_coefficients[None, :] / (d_ms * d_st[None, :])
        delays = (d_ms + d_st[None, :]) / SPEED_OF_LIGHT
        return RayChannel(gains=gains.astype(np.complex128), delays=delays)


def sample_scatter_map(
    geometry: UlaGeometry,
    num_scatterers: int,
    region: Rectangle,
    user_count: int,
    seed: int,
) -> ScatterLayout:
    """Drop scatterers and users uniformly in `region`; deterministic in seed."""
    if num_scatterers < 1:
        raise ValueError("num_scatterers must be >= 1")
    if user_count < 1:
        raise ValueError("user_count must be >= 1")
    rng = np.random.default_rng(seed)
    m = geometry.num_antennas
    axis = (np.arange(m) - (m - 1) / 2) * geometry.spacing_m
    antenna_positions = np.column_stack((np.zeros(m), axis))
    scatterers = region.sample(rng, num_scatterers)
    users = region.sample(rng, user_count)
    return ScatterLayout(
        geometry=geometry,
        antenna_positions=antenna_positions,
        scatterer_positions=scatterers,
        user_positions=users,
        reflection_coefficients=np.ones(num_scatterers),
    )
