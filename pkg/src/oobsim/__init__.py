"""Simulator for the spatial behavior of out-of-band radiation from large arrays.

The package models a multi-user downlink with per-antenna third-order
nonlinearities and measures where the distortion goes: conducted and
over-the-air adjacent-channel leakage, wideband beampatterns, victim-power
statistics under Rayleigh fading, and average spectra.
"""

from oobsim.geometry import Direction, UlaGeometry, element_delays, steering_phases
from oobsim.waveform import (
    PulseShape,
    SampledSignal,
    design_rrc,
    generate_symbols,
    peak_to_average_ratio,
    pulse_shape,
)
from oobsim.channel import (
    LosChannel,
    RayChannel,
    ScatterLayout,
    TapChannel,
    make_los,
    sample_rayleigh,
    sample_scatter_map,
)
from oobsim.precode import (
    PowerAllocation,
    PrecodedFrame,
    allocate_power,
    mrt_precode,
    siso_reference_power,
)
from oobsim.frontend import CalibrationError, NonlinearityModel, apply_nonlinearity, calibrate_drive
from oobsim.analysis import (
    BandSpec,
    Beampattern,
    CcdfCurve,
    PsdEstimate,
    array_aclr,
    band_power,
    beampattern,
    conducted_aclr,
    empirical_ccdf,
    estimate_psd,
    fading_received_power,
    far_field_signal,
)

__version__ = "0.1.0"
