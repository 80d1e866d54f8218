"""Atomic-frequency-comb optical stage and the memory efficiency chain.

The comb is a periodic grating of Gaussian absorption teeth; its Fourier
response produces an echo one comb period later (t = 1/delta).  The overall
memory efficiency factorizes into the comb echo efficiency, the squared
optical-to-spin transfer, the squared surviving spin coherence over the
storage window, an optional fitted spin-decay calibration factor, and a
readout loss.

The absorption part of the echo efficiency, d_eff^2 * exp(-d_eff) *
exp(-d0) with d_eff = peak depth / finesse, is the standard forward-recall
result from the AFC literature; it is a modeling choice here, not something
derived by this package, and the comb dephasing part is always computed
numerically from the sampled comb so the two routes can be cross-checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensemble import DetuningDistribution, dephasing_envelope, grid_ensemble
from .errors import CapacityError, InvalidArgumentError
from .pulses import PulseSpec
from .sequences import SEQUENCE_KINDS, build_sequence, rephasing_fidelity

# Frequency-grid points per tooth FWHM when sampling a comb.
_GRID_PER_TOOTH = 25.0

# Fraction of the AFC delay unavailable to input modes (control-pulse dead time).
DEFAULT_DEAD_TIME_FRACTION = 0.2


@dataclass(frozen=True)
class CombConfig:
    """Geometry of the spectral grating.

    periodicity_hz is the tooth spacing; finesse = spacing / tooth FWHM;
    optical_depth is the per-pass peak absorbance d = alpha*L, multiplied
    by the number of passes of the input beam; background_depth is a
    uniform absorbing pedestal.
    """

    periodicity_hz: float = 100e3
    finesse: float = 4.0
    width_hz: float = 2e6
    optical_depth: float = 2.6
    passes: int = 2
    background_depth: float = 0.0

    def __post_init__(self):
        if not self.periodicity_hz > 0:
            raise InvalidArgumentError(f"periodicity_hz must be > 0, got {self.periodicity_hz}")
        if not self.finesse > 1:
            raise InvalidArgumentError(f"finesse must be > 1, got {self.finesse}")
        if self.width_hz < 3.0 * self.periodicity_hz:
            raise InvalidArgumentError(
                f"width_hz must cover at least 3 teeth (>= {3.0 * self.periodicity_hz:g}), "
                f"got {self.width_hz:g}")
        if not self.optical_depth > 0:
            raise InvalidArgumentError(f"optical_depth must be > 0, got {self.optical_depth}")
        if self.passes not in (1, 2):
            raise InvalidArgumentError(f"passes must be 1 or 2, got {self.passes}")
        if self.background_depth < 0:
            raise InvalidArgumentError(f"background_depth must be >= 0, got {self.background_depth}")

    @property
    def tooth_fwhm_hz(self) -> float:
        return self.periodicity_hz / self.finesse

    @property
    def peak_depth(self) -> float:
        return self.optical_depth * self.passes

    @property
    def afc_delay_s(self) -> float:
        return 1.0 / self.periodicity_hz


@dataclass(frozen=True, eq=False)
class CombSpectrum:
    """Sampled absorption profile alpha(f) of a comb."""

    freq_hz: np.ndarray
    depth: np.ndarray
    config: CombConfig

    def __post_init__(self):
        for arr in (self.freq_hz, self.depth):
            arr.setflags(write=False)


def build_comb(cfg: CombConfig, resolution_hz: float | None = None) -> CombSpectrum:
    """Sample the comb: Gaussian teeth of FWHM spacing/finesse on a uniform grid.

    Teeth sit at integer multiples of the periodicity within +-width/2
    (odd count, centered on zero).  The summed profile is rescaled so its
    peak equals optical_depth * passes, then the uniform background is
    added.
    """
    tooth = cfg.tooth_fwhm_hz
    res = resolution_hz if resolution_hz is not None else tooth / _GRID_PER_TOOTH
    if not res > 0:
        raise InvalidArgumentError(f"resolution_hz must be > 0, got {res}")
    n_side = int(math.floor(0.5 * cfg.width_hz / cfg.periodicity_hz))
    centers = np.arange(-n_side, n_side + 1) * cfg.periodicity_hz
    half_span = 0.5 * cfg.width_hz + 4.0 * tooth
    m = int(round(2.0 * half_span / res)) + 1
    freq = np.linspace(-half_span, half_span, m)
    c = 4.0 * math.log(2.0) / tooth ** 2
    depth = np.zeros_like(freq)
    for f0 in centers:
        depth += np.exp(-c * (freq - f0) ** 2)
    depth *= cfg.peak_depth / depth.max()
    depth += cfg.background_depth
    return CombSpectrum(freq, depth, cfg)


def afc_echo_amplitude(comb: CombSpectrum, t: float) -> complex:
    """Normalized Fourier response of the comb at time t (1 at t = 0).

    The echo re-phases when t is a multiple of 1/periodicity; the tooth
    width sets how much amplitude survives there.
    """
    if t < 0:
        raise InvalidArgumentError(f"t must be >= 0, got {t}")
    phases = np.exp(2j * math.pi * comb.freq_hz * t)
    return complex(np.dot(comb.depth, phases) / comb.depth.sum())


def echo_trace(comb: CombSpectrum, times: np.ndarray) -> np.ndarray:
    """|echo amplitude| over an array of times (chunked to bound memory)."""
    times = np.asarray(times, dtype=float)
    total = comb.depth.sum()
    out = np.empty(times.size)
    for i0 in range(0, times.size, 128):
        chunk = times[i0:i0 + 128]
        ph = np.exp(2j * math.pi * np.outer(comb.freq_hz, chunk))
        out[i0:i0 + 128] = np.abs(comb.depth @ ph) / total
    return out


def find_echo_peak(comb: CombSpectrum, n_grid: int = 801,
                   window: tuple[float, float] = (0.3, 1.7)) -> tuple[float, float]:
    """Locate the echo maximum inside a window around the nominal delay.

    Returns (t_peak, amplitude); the window is in units of 1/periodicity
    and excludes the trivial response at t = 0.  Timing is resolved to the
    grid step (window span / (n_grid - 1)); at very low finesse the true
    peak sits up to ~0.2% of the delay away from 1/periodicity because the
    baseline lobe of an overlapping comb interferes with the echo sideband.
    """
    delay = comb.config.afc_delay_s
    times = np.linspace(window[0] * delay, window[1] * delay, n_grid)
    amps = echo_trace(comb, times)
    k = int(np.argmax(amps))
    return float(times[k]), float(amps[k])


def comb_dephasing_factor(comb: CombSpectrum) -> float:
    """Intensity fraction surviving tooth-width dephasing at the echo time."""
    return abs(afc_echo_amplitude(comb, comb.config.afc_delay_s)) ** 2


def afc_efficiency(cfg: CombConfig, comb: CombSpectrum | None = None) -> float:
    """Echo efficiency of the comb alone (absorption factor x dephasing factor)."""
    if comb is None:
        comb = build_comb(cfg)
    d_eff = cfg.peak_depth / cfg.finesse
    absorption = d_eff ** 2 * math.exp(-d_eff) * math.exp(-cfg.background_depth)
    return absorption * comb_dephasing_factor(comb)


@dataclass(frozen=True)
class SpinDecayModel:
    """Stretched-exponential intensity decay exp(-(t/tau)^exponent).

    Calibration artifact: it soaks up the measured efficiency-vs-storage-time
    decay that the ideal chain does not model (labeled as fitted in outputs).
    """

    tau_s: float
    exponent: float

    def __post_init__(self):
        if not self.tau_s > 0:
            raise InvalidArgumentError(f"tau_s must be > 0, got {self.tau_s}")
        if not self.exponent > 0:
            raise InvalidArgumentError(f"exponent must be > 0, got {self.exponent}")

    def factor(self, t_s: float) -> float:
        return math.exp(-((t_s / self.tau_s) ** self.exponent))


@dataclass(frozen=True)
class MemoryModel:
    """Everything needed to evaluate the memory efficiency chain.

    conversion_efficiency is the optical/spin transfer per control pulse
    (applied twice); write_stage is the lumped probability that an input
    photon becomes a spin-wave excitation (absorption capture x transfer,
    unsplit because only the product is measured).
    """

    comb: CombConfig = CombConfig()
    conversion_efficiency: float = 0.5
    spin_line: DetuningDistribution = DetuningDistribution()
    sequence_kind: str | None = "xy4"
    readout_loss: float = 0.0
    write_stage: float = 0.5
    spin_decay: SpinDecayModel | None = None

    def __post_init__(self):
        for name in ("conversion_efficiency", "readout_loss", "write_stage"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidArgumentError(f"{name} must be in [0, 1], got {v}")
        if self.sequence_kind is not None and self.sequence_kind not in SEQUENCE_KINDS:
            raise InvalidArgumentError(
                f"sequence_kind must be None or one of {SEQUENCE_KINDS}, got {self.sequence_kind!r}")


def memory_efficiency(model: MemoryModel, t_s: float, pulse: PulseSpec | None = None,
                      n_spins: int = 4096, seed: int = 0) -> float:
    """End-to-end probability of retrieving an input photon after storage.

    eta = eta_afc * eta_c^2 * |spin amplitude(t_s)|^2
          * fitted decay(t_s) * (1 - readout_loss)

    Without a decoupling sequence the spin amplitude is the closed-form
    inhomogeneous envelope at t_s; with one it is the simulated rephasing
    fidelity over a stratified ensemble (deterministic for given n_spins).
    """
    if t_s < 0:
        raise InvalidArgumentError(f"t_s must be >= 0, got {t_s}")
    eta = afc_efficiency(model.comb) * model.conversion_efficiency ** 2
    if model.sequence_kind is None:
        amp = dephasing_envelope(model.spin_line, t_s)
    else:
        seq = build_sequence(model.sequence_kind, t_s, pulse)
        ens = grid_ensemble(model.spin_line, n_spins)
        amp = rephasing_fidelity(ens, seq, seed=seed)
    eta *= amp ** 2
    if model.spin_decay is not None:
        eta *= model.spin_decay.factor(t_s)
    return eta * (1.0 - model.readout_loss)


def spinwave_excitation(mu_in: float, model: MemoryModel) -> float:
    """Mean spin-wave excitation created by a mean input photon number.

    Linear: mu_in times the lumped write-stage probability.
    """
    if mu_in < 0:
        raise InvalidArgumentError(f"mu_in must be >= 0, got {mu_in}")
    return mu_in * model.write_stage


@dataclass(frozen=True)
class MemoryTimeline:
    """Input/output schedule; every mode is stored for exactly 1/delta + t_s."""

    afc_delay_s: float
    t_s_s: float
    total_s: float
    mode_slots: tuple[tuple[float, float], ...]


def memory_timeline(delta_hz: float, t_s: float, n_modes: int, mode_duration_s: float,
                    dead_time_fraction: float = DEFAULT_DEAD_TIME_FRACTION) -> MemoryTimeline:
    """Schedule n_modes sequential input modes through one storage cycle.

    Mode k enters at k * mode_duration and exits exactly one total storage
    time (1/delta + t_s) later.  The usable input window is the AFC delay
    minus the control-pulse dead time.

    Raises
    ------
    CapacityError
        If n_modes * mode_duration exceeds the usable window.
    """
    if not delta_hz > 0:
        raise InvalidArgumentError(f"delta_hz must be > 0, got {delta_hz}")
    if n_modes < 1:
        raise InvalidArgumentError(f"n_modes must be >= 1, got {n_modes}")
    if not mode_duration_s > 0:
        raise InvalidArgumentError(f"mode_duration_s must be > 0, got {mode_duration_s}")
    if not 0.0 <= dead_time_fraction < 1.0:
        raise InvalidArgumentError(
            f"dead_time_fraction must be in [0, 1), got {dead_time_fraction}")
    afc_delay = 1.0 / delta_hz
    usable = afc_delay * (1.0 - dead_time_fraction)
    needed = n_modes * mode_duration_s
    if needed > usable:
        raise CapacityError(
            f"usable input window exceeded: n_modes * mode_duration = {needed:g} s "
            f"> (1/delta) * (1 - dead_time_fraction) = {usable:g} s")
    total = afc_delay + t_s
    slots = tuple((k * mode_duration_s, k * mode_duration_s + total) for k in range(n_modes))
    return MemoryTimeline(afc_delay, t_s, total, slots)
