"""Seeded synthesis of detector voltage traces for coherent and scattered light.

A coherent source produces Poissonian photon counts; a scattered source
produces super-Poissonian (multimode-thermal, negative-binomial) counts whose
variance is ``mean_rate * (1 + mean_rate / mode_count)``.  Counts are converted
to a band-limited detector voltage, optionally AC-coupled, and white Gaussian
electronic noise is added on top.  Every generator output is a pure function
of its parameters and seeds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import lfilter

from .errors import CalibrationInfeasibleError, InvalidArgumentError

__all__ = [
    "SourceModel",
    "DetectorModel",
    "NoiseModel",
    "SignalTrace",
    "VarianceDecomposition",
    "gen_photon_counts",
    "counts_to_voltage",
    "add_electronic_noise",
    "synthesize_quantum_trace",
    "synthesize_trace",
    "calibrate_mode_count",
    "variance_decomposition",
]

# Distinguish the rng streams of one logical seed so that reusing the same
# integer for source and noise seeds still yields independent streams.
_COUNTS_STREAM = 1
_THERMAL_STREAM = 2
_ELECTRONIC_STREAM = 3


@dataclass(frozen=True)
class SourceModel:
    """Photon-statistics model of the light hitting the detector.

    Parameters
    ----------
    kind : {"coherent", "scattered"}
        Coherent light gives Poissonian counts; scattered light gives
        super-Poissonian counts.
    mean_rate : float
        Mean photon count per sample window (> 0).
    mode_count : float, optional
        Effective speckle mode number for scattered light (> 0).  Larger
        values approach the coherent limit.
    seed : int
        64-bit reproducibility seed.
    decorrelation_hz : float, optional
        Corner frequency of the scattered excess-intensity fluctuations.
        ``None`` means the thermal modulation is independent per sample.
    """

    kind: str
    mean_rate: float
    mode_count: float | None = None
    seed: int = 0
    decorrelation_hz: float | None = None

    def __post_init__(self):
        if self.kind not in ("coherent", "scattered"):
            raise InvalidArgumentError(f"unknown source kind {self.kind!r}")
        if not self.mean_rate > 0:
            raise InvalidArgumentError("mean_rate must be > 0")
        if self.kind == "scattered":
            if self.mode_count is None or not self.mode_count > 0:
                raise InvalidArgumentError("scattered sources need mode_count > 0")
        if self.decorrelation_hz is not None and not self.decorrelation_hz > 0:
            raise InvalidArgumentError("decorrelation_hz must be > 0 when set")


@dataclass(frozen=True)
class DetectorModel:
    """Band-limited photodetector plus acquisition front end.

    ``gain_mV_per_photon`` converts counts to voltage; the single-pole
    low-pass at ``bandwidth_hz`` models the detector response.  An optional
    mean-preserving AC-coupling stage at ``ac_corner_hz`` models the
    acquisition chain's DC block; it shapes fluctuations without touching
    the mean level.
    """

    bandwidth_hz: float = 5e9
    sample_rate_hz: float = 40e9
    gain_mV_per_photon: float = 0.01
    responsivity_A_per_W: float = 1.5
    load_resistance_ohm: float = 50.0
    ac_corner_hz: float | None = None

    def __post_init__(self):
        for name in ("bandwidth_hz", "sample_rate_hz", "gain_mV_per_photon",
                     "responsivity_A_per_W", "load_resistance_ohm"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} must be > 0")
        if not self.bandwidth_hz < self.sample_rate_hz / 2:
            raise InvalidArgumentError("bandwidth_hz must be below Nyquist")
        if self.ac_corner_hz is not None and not 0 < self.ac_corner_hz < self.sample_rate_hz / 2:
            raise InvalidArgumentError("ac_corner_hz must be in (0, Nyquist)")


@dataclass(frozen=True)
class NoiseModel:
    """Additive white Gaussian electronic noise."""

    electronic_sigma_mV: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.electronic_sigma_mV < 0:
            raise InvalidArgumentError("electronic_sigma_mV must be >= 0")


@dataclass(frozen=True)
class SignalTrace:
    """A uniformly sampled voltage record in millivolts."""

    samples: np.ndarray
    sample_rate_hz: float
    label: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size < 1:
            raise InvalidArgumentError("samples must be a non-empty 1-d array")
        if not np.all(np.isfinite(samples)):
            raise InvalidArgumentError("samples must be finite")
        if not self.sample_rate_hz > 0:
            raise InvalidArgumentError("sample_rate_hz must be > 0")
        samples = samples.copy()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class VarianceDecomposition:
    """Total, electronic, and quantum variance of a trace, in mV^2.

    ``consistent`` is False when the electronic share came out negative
    beyond statistical tolerance, i.e. the inputs cannot be a quantum trace
    and the same trace plus independent noise.
    """

    total_var: float
    electronic_var: float
    quantum_var: float
    consistent: bool = True


def _counts_rng(model: SourceModel) -> np.random.Generator:
    return np.random.default_rng([model.seed, _COUNTS_STREAM])


def _thermal_rng(model: SourceModel) -> np.random.Generator:
    return np.random.default_rng([model.seed, _THERMAL_STREAM])


def gen_photon_counts(model: SourceModel, n: int) -> np.ndarray:
    """Draw ``n`` photon counts from the source's sampling distribution.

    Coherent sources draw i.i.d. Poisson(mean_rate).  Scattered sources draw
    i.i.d. negative-binomial counts with the same mean and variance
    ``mean_rate * (1 + mean_rate / mode_count)`` (multimode-thermal form).
    Identical model parameters give bit-identical output.
    """
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    rng = _counts_rng(model)
    lam = model.mean_rate
    if model.kind == "coherent":
        return rng.poisson(lam, n).astype(np.int64)
    m = float(model.mode_count)
    # negative binomial with shape m and success probability m / (m + lam):
    # mean lam, variance lam * (1 + lam / m)
    return rng.negative_binomial(m, m / (m + lam), n).astype(np.int64)


def _lowpass_alpha(detector: DetectorModel) -> float:
    return float(np.exp(-2.0 * np.pi * detector.bandwidth_hz / detector.sample_rate_hz))


def counts_to_voltage(counts, detector: DetectorModel, label: str = "") -> SignalTrace:
    """Convert photon counts to a band-limited detector voltage.

    The raw voltage ``gain * counts`` is passed through a single-pole
    low-pass with unity DC gain, pole at ``exp(-2*pi*f_c/f_s)`` and zero
    initial state, so a unit impulse count maps to the geometric decay
    ``gain * (1 - a) * a**k``.
    """
    counts = np.asarray(counts)
    if counts.size == 0:
        raise InvalidArgumentError("counts must be non-empty")
    a = _lowpass_alpha(detector)
    v = lfilter([1.0 - a], [1.0, -a], detector.gain_mV_per_photon * counts.astype(np.float64))
    return SignalTrace(v, detector.sample_rate_hz, label)


def _ac_couple(samples: np.ndarray, dc_level: float, detector: DetectorModel) -> np.ndarray:
    """Single-pole DC block applied around a known mean level."""
    if detector.ac_corner_hz is None:
        return samples
    b = float(np.exp(-2.0 * np.pi * detector.ac_corner_hz / detector.sample_rate_hz))
    return lfilter([1.0, -1.0], [1.0, -b], samples - dc_level) + dc_level


def _thermal_voltage(model: SourceModel, detector: DetectorModel, n: int) -> np.ndarray:
    """Excess-intensity voltage of a scattered source.

    Per-sample gamma modulation of the mean intensity carries the
    super-Poissonian excess variance ``(gain * mean_rate)**2 / mode_count``
    before any band limit; a finite ``decorrelation_hz`` low-passes it.
    """
    gm = _thermal_rng(model).gamma(float(model.mode_count), 1.0 / float(model.mode_count), n)
    v = detector.gain_mV_per_photon * model.mean_rate * (gm - 1.0)
    if model.decorrelation_hz is not None:
        a = float(np.exp(-2.0 * np.pi * model.decorrelation_hz / detector.sample_rate_hz))
        v = lfilter([1.0 - a], [1.0, -a], v)
    return v


def add_electronic_noise(trace: SignalTrace, noise: NoiseModel) -> SignalTrace:
    """Add seeded white Gaussian electronic noise to a trace."""
    if noise.electronic_sigma_mV == 0.0:
        return trace
    rng = np.random.default_rng([noise.seed, _ELECTRONIC_STREAM])
    out = trace.samples + rng.normal(0.0, noise.electronic_sigma_mV, len(trace))
    return SignalTrace(out, trace.sample_rate_hz, trace.label)


def _warmup_samples(detector: DetectorModel) -> int:
    """Samples to discard so filter transients decay below 1e-4 of scale."""
    corners = [detector.bandwidth_hz]
    if detector.ac_corner_hz is not None:
        corners.append(detector.ac_corner_hz)
    slowest = min(corners)
    need = int(np.ceil(10.0 * detector.sample_rate_hz / (2.0 * np.pi * slowest)))
    return min(max(4096, need), 1 << 16)


def synthesize_quantum_trace(model: SourceModel, detector: DetectorModel, n: int,
                             label: str = "") -> SignalTrace:
    """Synthesize the quantum-only voltage trace (no electronic noise).

    Chain: photon counts -> gain -> detector low-pass, plus the scattered
    excess-intensity term, then the AC-coupling stage.  Filter warm-up
    samples are generated and discarded so the returned trace is stationary.
    """
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    warm = _warmup_samples(detector)
    total = n + warm
    v = counts_to_voltage(gen_photon_counts(model, total), detector).samples
    if model.kind == "scattered":
        v = v + _thermal_voltage(model, detector, total)
    dc = detector.gain_mV_per_photon * model.mean_rate
    v = _ac_couple(v, dc, detector)
    return SignalTrace(v[warm:], detector.sample_rate_hz, label)


def synthesize_trace(model: SourceModel, detector: DetectorModel, noise: NoiseModel,
                     n: int, label: str = "") -> SignalTrace:
    """Synthesize the full detector trace: quantum signal plus electronic noise."""
    quantum = synthesize_quantum_trace(model, detector, n, label)
    return add_electronic_noise(quantum, noise)


def variance_decomposition(quantum_trace: SignalTrace, noisy_trace: SignalTrace) -> VarianceDecomposition:
    """Split the total variance of ``noisy_trace`` into quantum and electronic parts.

    The electronic share is reported as total minus quantum; a negative value
    beyond the statistical tolerance of the two estimates marks the inputs
    inconsistent instead of raising.
    """
    if len(quantum_trace) != len(noisy_trace):
        raise InvalidArgumentError("traces must have equal length")
    if quantum_trace.sample_rate_hz != noisy_trace.sample_rate_hz:
        raise InvalidArgumentError("traces must have equal sample rates")
    q = float(np.var(quantum_trace.samples))
    t = float(np.var(noisy_trace.samples))
    e = t - q
    # var estimates fluctuate by ~ var * sqrt(2/n); allow 5 sigma before flagging
    tol = 5.0 * max(q, t) * np.sqrt(2.0 / len(noisy_trace))
    consistent = e >= -tol
    return VarianceDecomposition(total_var=t, electronic_var=e, quantum_var=q,
                                 consistent=consistent)


def _fwhm_of_trace(trace: SignalTrace, n_bins: int = 256) -> float:
    from .analysis import histogram

    return histogram(trace, n_bins).fwhm_mV


def calibrate_mode_count(target_fwhm_ratio: float, base: SourceModel,
                         detector: DetectorModel, noise: NoiseModel,
                         n: int = 2_000_000, tol: float = 0.02,
                         bracket: tuple[float, float] = (1.0, 1e9)) -> float:
    """Find the mode count whose scattered trace broadens the coherent FWHM
    by ``target_fwhm_ratio``.

    Bisects on the mode count; the FWHM ratio decreases monotonically in it.
    Raises :class:`CalibrationInfeasibleError` when even the smallest mode
    count in the bracket cannot reach the target (electronic noise dominates),
    naming the maximum achievable ratio.
    """
    if not target_fwhm_ratio > 1.0:
        raise InvalidArgumentError("target_fwhm_ratio must be > 1")
    coherent = replace(base, kind="coherent", mode_count=None)
    baseline = _fwhm_of_trace(synthesize_trace(coherent, detector, noise, n))

    def ratio_at(mode_count: float) -> float:
        scattered = replace(base, kind="scattered", mode_count=mode_count)
        return _fwhm_of_trace(synthesize_trace(scattered, detector, noise, n)) / baseline

    lo, hi = bracket
    max_ratio = ratio_at(lo)
    if max_ratio < target_fwhm_ratio:
        raise CalibrationInfeasibleError(
            f"target ratio {target_fwhm_ratio:.4g} unreachable; "
            f"maximum achievable is {max_ratio:.4g}",
            max_ratio=max_ratio,
        )
    # ratio(hi) is the coherent limit (~1); target sits inside the bracket
    while hi / lo > 1.0 + 1e-6:
        mid = float(np.sqrt(lo * hi))
        r = ratio_at(mid)
        if r > target_fwhm_ratio:
            lo = mid
        else:
            hi = mid
        if abs(r - target_fwhm_ratio) <= tol * target_fwhm_ratio:
            return mid
    return float(np.sqrt(lo * hi))
