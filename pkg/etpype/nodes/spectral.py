"""Frequency grids, spectral objects and the spectral/temporal transform.

Angular frequencies are in rad/fs and detunings Ω are taken relative to
the grid center. All objects are frozen after construction; their arrays
are stored read-only so they can be shared between scan workers.
"""

from dataclasses import dataclass, field

import numpy as np

from etpype.utils.errors import (
    ConfigurationError,
    InvalidArgumentError,
    RangeError,
)
from etpype.utils.units import omega_to_wavelength


def _frozen(values, dtype=complex, name="amplitude"):
    arr = np.array(values, dtype=dtype, copy=True)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains NaN or Inf values.")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform, symmetric sampling of the detuning around `center`.

    Args:
        center (float): Center angular frequency (rad/fs).
        spacing (float): Sample spacing (rad/fs).
        count (int): Number of samples.
    """

    center: float
    spacing: float
    count: int

    def __post_init__(self):
        if not self.center > 0:
            raise InvalidArgumentError(
                f"Grid center must be positive, got {self.center}."
            )
        if not self.spacing > 0:
            raise InvalidArgumentError(
                f"Grid spacing must be positive, got {self.spacing}."
            )
        if int(self.count) != self.count or self.count < 8:
            raise InvalidArgumentError(
                f"Grid count must be an integer >= 8, got {self.count}."
            )

    @property
    def omega(self):
        """Detuning samples Ω_k (rad/fs), symmetric around zero."""
        k = np.arange(self.count)
        return (k - (self.count - 1) / 2) * self.spacing

    @property
    def absolute(self):
        """Absolute angular frequencies (rad/fs)."""
        return self.center + self.omega

    @property
    def span(self):
        return self.spacing * (self.count - 1)

    @property
    def wavelength(self):
        """Wavelength of each sample (nm)."""
        return omega_to_wavelength(self.absolute)


def grid_make(center, span, count):
    """Build a grid of `count` samples covering `span` around `center`.

    Args:
        center (float): Center angular frequency (rad/fs).
        span (float): Total width covered by the samples (rad/fs).
        count (int): Number of samples, at least 8.

    Returns:
        FrequencyGrid: grid with spacing ``span / (count - 1)``.
    """
    if not span > 0:
        raise InvalidArgumentError(f"Grid span must be positive, got {span}.")
    if count is None or count < 8:
        raise InvalidArgumentError(f"Grid count must be >= 8, got {count}.")
    return FrequencyGrid(
        center=float(center), spacing=span / (count - 1), count=int(count)
    )


@dataclass(frozen=True, eq=False)
class ClassicalField:
    """Spectral envelope E⁺(Ω) of a pulse train.

    The amplitude is normalised so that Σ|E_k|²·spacing equals the number
    of photons per pulse.
    """

    grid: FrequencyGrid
    amplitude: np.ndarray
    repetition_rate: float
    polarization: str = "s"

    def __post_init__(self):
        amp = _frozen(self.amplitude)
        if amp.shape != (self.grid.count,):
            raise InvalidArgumentError(
                f"Amplitude has shape {amp.shape}, expected "
                f"({self.grid.count},)."
            )
        if not self.repetition_rate > 0:
            raise InvalidArgumentError(
                "Repetition rate must be positive, "
                f"got {self.repetition_rate}."
            )
        object.__setattr__(self, "amplitude", amp)

    @property
    def photons_per_pulse(self):
        return float(np.sum(np.abs(self.amplitude) ** 2) * self.grid.spacing)

    @property
    def spectrum(self):
        return np.abs(self.amplitude) ** 2

    def with_amplitude(self, amplitude):
        return ClassicalField(
            grid=self.grid,
            amplitude=amplitude,
            repetition_rate=self.repetition_rate,
            polarization=self.polarization,
        )


@dataclass(frozen=True, eq=False)
class BiphotonState:
    """Reduced biphoton amplitude ψ(Ω) on the monochromatic-pump line.

    Signal and idler sit at ω_p/2 + Ω and ω_p/2 − Ω. A freshly generated
    state has unit norm; shaped states keep the transmitted norm.
    """

    grid: FrequencyGrid
    psi: np.ndarray
    pump_frequency: float
    pair_rate: float = 0.0
    entanglement_size: float = 26.0
    entanglement_time: float = 24.4

    def __post_init__(self):
        psi = _frozen(self.psi, name="psi")
        if psi.shape != (self.grid.count,):
            raise InvalidArgumentError(
                f"psi has shape {psi.shape}, expected ({self.grid.count},)."
            )
        if self.pair_rate < 0:
            raise InvalidArgumentError(
                f"Pair rate must be non-negative, got {self.pair_rate}."
            )
        object.__setattr__(self, "psi", psi)

    @property
    def norm(self):
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.spacing)

    @property
    def signal_frequency(self):
        return self.pump_frequency / 2 + self.grid.omega

    @property
    def idler_frequency(self):
        return self.pump_frequency / 2 - self.grid.omega

    def with_psi(self, psi):
        return BiphotonState(
            grid=self.grid,
            psi=psi,
            pump_frequency=self.pump_frequency,
            pair_rate=self.pair_rate,
            entanglement_size=self.entanglement_size,
            entanglement_time=self.entanglement_time,
        )


@dataclass(frozen=True, eq=False)
class Jsa2D:
    """Joint spectral amplitude Λ(Ω_s, Ω_i) on a square grid.

    Rows index the signal detuning, columns the idler detuning, both on
    `grid`.
    """

    grid: FrequencyGrid
    amplitude: np.ndarray
    pump: dict = field(default_factory=dict)
    phase_matching: dict = field(default_factory=dict)

    def __post_init__(self):
        amp = _frozen(self.amplitude)
        n = self.grid.count
        if amp.shape != (n, n):
            raise InvalidArgumentError(
                f"JSA has shape {amp.shape}, expected ({n}, {n})."
            )
        object.__setattr__(self, "amplitude", amp)

    def anti_diagonal(self):
        """Slice Λ(Ω, −Ω) along the monochromatic-pump line."""
        return np.fliplr(self.amplitude).diagonal().copy()


def apply_phase(field, phase):
    """Multiply a classical field by exp(i·phase(Ω))."""
    return field.with_amplitude(field.amplitude * np.exp(1j * phase))


def resample(field, grid):
    """Interpolate a classical field onto `grid`.

    Samples outside the source grid are set to zero. Resampling onto the
    grid a field already lives on returns the same samples.
    """
    if grid == field.grid:
        return field
    src = field.grid.absolute
    dst = grid.absolute
    re = np.interp(dst, src, field.amplitude.real, left=0.0, right=0.0)
    im = np.interp(dst, src, field.amplitude.imag, left=0.0, right=0.0)
    return ClassicalField(
        grid=grid,
        amplitude=re + 1j * im,
        repetition_rate=field.repetition_rate,
        polarization=field.polarization,
    )


def to_time_profile(field, pad_to_pow2=True):
    """Temporal intensity |E⁺(t)|² of a classical field.

    The transform is normalised so that Σ|E(t)|²·dt = Σ|E(Ω)|²·dΩ.

    Args:
        field (ClassicalField): Input field.
        pad_to_pow2 (bool): Zero-pad the spectrum symmetrically to the
            next power of two.

    Returns:
        tuple: (t in fs, |E(t)|²).
    """
    amp = np.asarray(field.amplitude)
    n = amp.size
    if pad_to_pow2:
        n_fft = 1 << int(np.ceil(np.log2(n)))
        pad = n_fft - n
        amp = np.pad(amp, (pad // 2, pad - pad // 2))
    n_fft = amp.size
    d_omega = field.grid.spacing
    dt = 2 * np.pi / (n_fft * d_omega)
    et = (
        np.fft.fftshift(np.fft.fft(np.fft.ifftshift(amp)))
        * d_omega
        / np.sqrt(2 * np.pi)
    )
    t = (np.arange(n_fft) - n_fft // 2) * dt
    return t, np.abs(et) ** 2


def fwhm(x, y):
    """Full width at half maximum of a sampled peak.

    The half-maximum crossings are linearly interpolated between samples.

    Args:
        x (array): Strictly increasing abscissa.
        y (array): Non-negative samples.

    Returns:
        float: width in units of `x`.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 3:
        raise InvalidArgumentError(
            "fwhm needs matching arrays of at least 3 points."
        )
    peak = np.max(y)
    if not peak > 0:
        raise InvalidArgumentError("fwhm of a non-positive signal.")
    half = peak / 2
    above = np.flatnonzero(y >= half)
    lo, hi = above[0], above[-1]
    if lo == 0 or hi == y.size - 1:
        raise RangeError("Peak is not resolved within the sampled range.")
    left = np.interp(half, [y[lo - 1], y[lo]], [x[lo - 1], x[lo]])
    right = np.interp(half, [y[hi + 1], y[hi]], [x[hi + 1], x[hi]])
    return float(right - left)


def check_centered(grid, frequency, what="grid"):
    """Raise ConfigurationError when `grid` is not centered at `frequency`."""
    if abs(grid.center - frequency) > grid.spacing / 2:
        raise ConfigurationError(
            f"{what} must be centered at {frequency:.6f} rad/fs, "
            f"got {grid.center:.6f} rad/fs."
        )
