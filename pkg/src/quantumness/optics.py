"""Classical Mach-Zehnder realization of qubit measurements.

Two classical analytic signals ``a_j I(t)`` enter the ports of an
interferometer tuned to a 2x2 unitary ``U``.  Output port ``i`` carries
``a'_i I(t)`` with ``a' = U a``, and detectors respond to intensity.  Weighting
the time-integrated detector intensities by the eigenvalues of an observable
reproduces its quantum expectation value exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codec import encode_matrix
from .errors import NumericalError, UnknownSignalKind, ValidationError, WrongDimension, ZeroAmplitudes
from .opalg import HermitianOperator, expectation, make_pure_state, spectral_decompose

UNITARITY_TOL = 1e-12
CANCELLATION_RTOL = 1e-12
SIGNAL_KINDS = ("constant", "gaussian-noise", "chirp")


@dataclass(frozen=True)
class InterferometerTuning:
    """A unitary with detector weights; detector ``i`` reads weight ``i``."""

    unitary: np.ndarray
    weights: np.ndarray
    observable_tag: str = "X"

    def __post_init__(self):
        u = np.asarray(self.unitary)
        if u.shape != (2, 2) or np.asarray(self.weights).shape != (2,):
            raise WrongDimension("an interferometer tuning acts on two modes")
        if np.max(np.abs(u.conj().T @ u - np.eye(2))) > UNITARITY_TOL:
            raise ValidationError("tuning matrix is not unitary")

    def squared(self) -> "InterferometerTuning":
        """Same optics, weights squared: the classical readout of ``X^2``."""
        return InterferometerTuning(self.unitary, self.weights**2, f"{self.observable_tag}^2")

    def to_dict(self) -> dict:
        return {
            "unitary": encode_matrix(self.unitary),
            "weights": self.weights.tolist(),
            "observable_tag": self.observable_tag,
        }


@dataclass(frozen=True)
class ClassicalSignal:
    samples: np.ndarray
    description: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 1 or not np.all(np.isfinite(s)):
            raise ValidationError("signal samples must be a finite 1-D sequence")
        if not np.any(np.abs(s) > 0):
            raise ValidationError("signal carries no intensity")


@dataclass(frozen=True)
class OpticsResult:
    weighted_average: float
    per_detector_intensity: tuple[float, float]
    normalization: float
    input_norm_sq: float
    output_amplitudes: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "weighted_average": self.weighted_average,
            "per_detector_intensity": list(self.per_detector_intensity),
            "normalization": self.normalization,
            "input_norm_sq": self.input_norm_sq,
        }


def tuning_from_observable(x: HermitianOperator, tag: str = "X") -> InterferometerTuning:
    """Tune ``U`` so that ``U a`` expresses ``a`` in the eigenbasis of ``x``.

    Rows of ``U`` are the conjugated eigenvectors, in ascending eigenvalue
    order, and the weights are the eigenvalues.
    """
    if x.dim != 2:
        raise WrongDimension(f"interferometer realizes 2x2 observables, got dim {x.dim}")
    dec = spectral_decompose(x)
    u = np.ascontiguousarray(dec.eigenvectors.conj().T)
    return InterferometerTuning(u, np.array(dec.eigenvalues, dtype=float), tag)


def generate_signal(kind: str, n: int, seed: int | None = None) -> ClassicalSignal:
    """Sampled analytic signal ``I(t)`` shared by both input ports."""
    if n < 1:
        raise ValidationError("signal length must be at least 1")
    if kind == "constant":
        s = np.ones(n, dtype=np.complex128)
    elif kind == "gaussian-noise":
        rng = np.random.default_rng(seed)
        s = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    elif kind == "chirp":
        t = np.arange(n)
        s = np.exp(1j * np.pi * t**2 / n)
    else:
        raise UnknownSignalKind(f"signal kind must be one of {SIGNAL_KINDS}, got {kind!r}")
    return ClassicalSignal(s, {"kind": kind, "n": n, "seed": seed if kind == "gaussian-noise" else None})


def simulate(tuning: InterferometerTuning, amplitudes, signal: ClassicalSignal) -> OpticsResult:
    """Detector intensities and the eigenvalue-weighted average.

    ``weighted_average = sum_i w_i <<|a'_i I|^2>> / (<<|I|^2>> ||a||^2)``,
    with ``<<.>>`` a plain sum over signal samples.  The signal factor
    cancels; the cancellation is checked to ``1e-12``.
    """
    a = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
    if a.shape != (2,):
        raise WrongDimension("two input amplitudes expected")
    norm_sq = float(np.real(np.vdot(a, a)))
    if norm_sq == 0.0:
        raise ZeroAmplitudes("both input amplitudes are zero")
    out = tuning.unitary @ a
    fields = np.outer(out, signal.samples)
    intensity = np.sum(np.abs(fields) ** 2, axis=1)
    normalization = float(np.sum(np.abs(signal.samples) ** 2))
    weighted = float(np.dot(tuning.weights, intensity) / (normalization * norm_sq))
    direct = float(np.dot(tuning.weights, np.abs(out) ** 2) / norm_sq)
    scale = max(1.0, float(np.max(np.abs(tuning.weights))))
    if abs(weighted - direct) > CANCELLATION_RTOL * scale:
        raise NumericalError(f"signal factor failed to cancel: {weighted!r} vs {direct!r}")
    return OpticsResult(
        weighted_average=weighted,
        per_detector_intensity=(float(intensity[0]), float(intensity[1])),
        normalization=normalization,
        input_norm_sq=norm_sq,
        output_amplitudes=out,
    )


def quantum_reference(x: HermitianOperator, amplitudes) -> float:
    return expectation(make_pure_state(amplitudes), x)


def compare_with_quantum(x: HermitianOperator, amplitudes) -> float:
    """``|classical weighted average - Tr(rho_a x)|`` for a constant signal."""
    res = simulate(tuning_from_observable(x), amplitudes, generate_signal("constant", 1))
    return abs(res.weighted_average - quantum_reference(x, amplitudes))
