"""Dense Hermitian operator and density-matrix algebra.

All objects wrap read-only ``complex128`` arrays and are immutable after
construction, so they can be shared freely between threads.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    DimensionTooLarge,
    ImaginaryResidue,
    NonFinite,
    NonSquare,
    NormTooFarFromUnit,
    NotAState,
    NotHermitian,
    ZeroVector,
)

MAX_DIM = 64
HERMITICITY_RTOL = 1e-12
PSD_RTOL = 1e-9
TRACE_TOL = 1e-10
IMAG_TOL = 1e-10
PHASE_THRESHOLD = 1e-8
DEGENERACY_GAP = 1e-8
PURE_STATE_NORM_TOL = 1e-2


class RenormalizationWarning(UserWarning):
    """Emitted when a nearly-normalized amplitude vector is rescaled."""


def _scale(m: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0


def psd_tolerance(m) -> float:
    """Absolute eigenvalue slack ``1e-9 * max(1, ||M||_max)`` for PSD tests."""
    arr = m.matrix if isinstance(m, _HermitianMatrix) else np.asarray(m)
    return PSD_RTOL * _scale(arr)


def _as_square(entries) -> np.ndarray:
    m = np.array(entries, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise NonSquare(f"expected a non-empty square matrix, got shape {m.shape}")
    if m.shape[0] > MAX_DIM:
        raise DimensionTooLarge(f"dimension {m.shape[0]} exceeds maximum {MAX_DIM}")
    if not np.all(np.isfinite(m)):
        raise NonFinite("matrix has NaN or infinite entries")
    return m


def _symmetrize(m: np.ndarray) -> np.ndarray:
    dev = float(np.max(np.abs(m - m.conj().T)))
    tol = HERMITICITY_RTOL * _scale(m)
    if dev > tol:
        raise NotHermitian(f"max |M - M^H| = {dev:.3e} exceeds tolerance {tol:.1e}")
    out = 0.5 * (m + m.conj().T)
    out.setflags(write=False)
    return out


class _HermitianMatrix:
    __slots__ = ("_m",)

    def __init__(self, entries):
        object.__setattr__(self, "_m", _symmetrize(_as_square(entries)))

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self._m)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._m, dtype=dtype)

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self._m.shape == other._m.shape and bool(np.array_equal(self._m, other._m))

    def __hash__(self):
        return hash((type(self).__name__, self._m.tobytes()))

    def __repr__(self):
        return f"{type(self).__name__}({self._m.tolist()!r})"


class HermitianOperator(_HermitianMatrix):
    """An observable: a Hermitian matrix, stored exactly symmetrized."""

    __slots__ = ()

    def __add__(self, other):
        return op_add(self, other)

    def __sub__(self, other):
        return op_sub(self, other)

    def __neg__(self):
        return HermitianOperator(-self._m)

    def __mul__(self, s):
        if not np.isscalar(s) or np.iscomplexobj(s):
            return NotImplemented
        return HermitianOperator(float(s) * self._m)

    __rmul__ = __mul__


class DensityMatrix(_HermitianMatrix):
    """A quantum state: Hermitian, unit trace, positive semidefinite.

    The trace is checked to within ``1e-10`` and then rescaled to exactly one.
    """

    __slots__ = ()

    def __init__(self, entries):
        m = _symmetrize(_as_square(entries))
        tr = float(np.real(np.trace(m)))
        if abs(tr - 1.0) > TRACE_TOL:
            raise NotAState(f"trace {tr!r} differs from 1 by more than {TRACE_TOL}")
        min_eig = float(np.linalg.eigvalsh(m)[0])
        if min_eig < -psd_tolerance(m):
            raise NotAState(f"density matrix has negative eigenvalue {min_eig:.3e}")
        m = m / tr
        m.setflags(write=False)
        object.__setattr__(self, "_m", m)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues with eigenvectors stored as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    gap: float = DEGENERACY_GAP

    def vector(self, k: int) -> np.ndarray:
        return self.eigenvectors[:, k]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def clusters(self, gap: float | None = None) -> list[np.ndarray]:
        """Index groups of eigenvalues closer than ``gap`` to their neighbour."""
        gap = self.gap if gap is None else gap
        groups: list[list[int]] = []
        for k, lam in enumerate(self.eigenvalues):
            if groups and lam - self.eigenvalues[groups[-1][-1]] < gap:
                groups[-1].append(k)
            else:
                groups.append([k])
        return [np.array(g) for g in groups]

    def spectral_projectors(self, gap: float | None = None):
        """Distinct eigenvalues and their (merged) spectral projectors.

        Degenerate clusters contribute one outcome whose value is the cluster
        mean and whose projector is the sum over the cluster.
        """
        values, projectors = [], []
        for idx in self.clusters(gap):
            v = self.eigenvectors[:, idx]
            values.append(float(np.mean(self.eigenvalues[idx])))
            projectors.append(v @ v.conj().T)
        return np.array(values), projectors


def _fix_phase(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > PHASE_THRESHOLD)
    if nz.size == 0:
        return v
    c = v[nz[0]]
    return v * (abs(c) / c)


def make_hermitian(entries) -> HermitianOperator:
    """Validate a square complex matrix and return ``(M + M^H) / 2``."""
    return HermitianOperator(entries)


def spectral_decompose(h: _HermitianMatrix) -> SpectralDecomposition:
    """Eigendecomposition under a deterministic phase convention.

    Eigenvalues come out ascending. Each eigenvector is rotated so that its
    first component of magnitude above ``1e-8`` is real and nonnegative;
    vectors inside a degenerate cluster are re-orthonormalized in index
    order after that rotation.
    """
    try:
        w, v = np.linalg.eigh(h.matrix)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    v = np.array(v, dtype=np.complex128)
    for k in range(v.shape[1]):
        v[:, k] = _fix_phase(v[:, k])
    gap = DEGENERACY_GAP * _scale(h.matrix)
    for idx in SpectralDecomposition(w, v, gap).clusters():
        if idx.size < 2:
            continue
        for j, k in enumerate(idx):
            u = v[:, k].copy()
            for prev in idx[:j]:
                u -= (v[:, prev].conj() @ u) * v[:, prev]
            v[:, k] = _fix_phase(u / np.linalg.norm(u))
    w.setflags(write=False)
    v.setflags(write=False)
    return SpectralDecomposition(w, v, gap)


def is_psd(h: _HermitianMatrix) -> tuple[bool, float]:
    """Return ``(min_eig >= -eps_psd, min_eig)``."""
    try:
        min_eig = float(np.linalg.eigvalsh(h.matrix)[0])
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return min_eig >= -psd_tolerance(h), min_eig


def _check_dims(*ops: _HermitianMatrix) -> None:
    dims = {op.dim for op in ops}
    if len(dims) != 1:
        raise DimensionMismatch(f"operator dimensions differ: {sorted(dims)}")


def expectation(rho: DensityMatrix, h: _HermitianMatrix) -> float:
    """``Tr(rho H)``; the imaginary residue must be below ``1e-10``."""
    _check_dims(rho, h)
    # Tr(rho H) = sum_jk rho_jk H_kj
    val = complex(np.sum(rho.matrix * h.matrix.T))
    if abs(val.imag) > IMAG_TOL * _scale(h.matrix):
        raise ImaginaryResidue(f"Tr(rho H) has imaginary part {val.imag:.3e}")
    return val.real


def op_add(h1: HermitianOperator, h2: HermitianOperator) -> HermitianOperator:
    _check_dims(h1, h2)
    return HermitianOperator(h1.matrix + h2.matrix)


def op_sub(h1: HermitianOperator, h2: HermitianOperator) -> HermitianOperator:
    _check_dims(h1, h2)
    return HermitianOperator(h1.matrix - h2.matrix)


def op_square(h: HermitianOperator) -> HermitianOperator:
    m = h.matrix @ h.matrix
    return HermitianOperator(0.5 * (m + m.conj().T))


def commutator_norm(h1: _HermitianMatrix, h2: _HermitianMatrix) -> float:
    """Largest entry magnitude of ``H1 H2 - H2 H1``."""
    _check_dims(h1, h2)
    c = h1.matrix @ h2.matrix - h2.matrix @ h1.matrix
    return float(np.max(np.abs(c)))


def make_pure_state(amplitudes: Sequence[complex]) -> DensityMatrix:
    """Projector ``v v^H / ||v||^2`` onto an amplitude vector.

    Vectors whose squared norm is within ``1e-2`` of one are accepted and
    renormalized with a :class:`RenormalizationWarning`.
    """
    v = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise NonFinite("amplitudes must be a non-empty finite vector")
    norm_sq = float(np.real(np.vdot(v, v)))
    if norm_sq == 0.0:
        raise ZeroVector("amplitude vector is zero")
    if abs(norm_sq - 1.0) > PURE_STATE_NORM_TOL:
        raise NormTooFarFromUnit(f"squared norm {norm_sq!r} is not within 1e-2 of 1")
    if abs(norm_sq - 1.0) > 1e-12:
        warnings.warn(
            f"renormalizing amplitudes with squared norm {norm_sq:.6g}",
            RenormalizationWarning,
            stacklevel=2,
        )
    return DensityMatrix(np.outer(v, v.conj()) / norm_sq)


def basis_state(dim: int, k: int) -> DensityMatrix:
    e = np.zeros(dim)
    e[k] = 1.0
    return DensityMatrix(np.outer(e, e))


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(np.eye(dim) / dim)
