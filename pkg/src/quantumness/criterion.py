"""The single-system quantumness criterion.

For observables with ``0 <= A <= B`` a state *violates* the criterion when
``<A^2> > <B^2>`` although ``<A> <= <B>``.  The best violating state is the
top eigenvector of ``A^2 - B^2``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidTriple, ValidationError
from .opalg import (
    DensityMatrix,
    HermitianOperator,
    _check_dims,
    commutator_norm,
    expectation,
    is_psd,
    make_hermitian,
    make_pure_state,
    op_square,
    op_sub,
    spectral_decompose,
)

VIOLATION_TOL = 1e-8

# Canonical qubit pair: A is the projector on |0>, B - A = |+><+|.
CANONICAL_A = ((1.0, 0.0), (0.0, 0.0))
CANONICAL_B = ((1.5, 0.5), (0.5, 0.5))
FIXTURE_AMPLITUDES = (0.391, 0.920)


def canonical_pair() -> tuple[HermitianOperator, HermitianOperator]:
    return make_hermitian(CANONICAL_A), make_hermitian(CANONICAL_B)


@dataclass(frozen=True)
class TripleValidity:
    a_psd: bool
    b_psd: bool
    diff_psd: bool
    min_eigs: tuple[float, float, float]

    @property
    def ok(self) -> bool:
        return self.a_psd and self.b_psd and self.diff_psd

    @property
    def failed(self) -> tuple[str, ...]:
        names = ("A", "B", "B-A")
        flags = (self.a_psd, self.b_psd, self.diff_psd)
        return tuple(n for n, f in zip(names, flags) if not f)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["min_eigs"] = list(self.min_eigs)
        return d


@dataclass(frozen=True)
class CriterionReport:
    mean_a: float
    mean_b: float
    sq_a: float
    sq_b: float
    first_moment_gap: float
    violation_margin: float
    violated: bool
    commutator: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SweepReport:
    trials: int
    dim: int
    seed: int
    max_margin: float | None
    violations: int

    def to_dict(self) -> dict:
        return asdict(self)


def check_triple(a: HermitianOperator, b: HermitianOperator) -> TripleValidity:
    """PSD verdicts for ``A``, ``B`` and ``B - A``."""
    _check_dims(a, b)
    fa, ea = is_psd(a)
    fb, eb = is_psd(b)
    fc, ec = is_psd(op_sub(b, a))
    return TripleValidity(fa, fb, fc, (ea, eb, ec))


def _require_valid(a, b) -> TripleValidity:
    validity = check_triple(a, b)
    if not validity.ok:
        raise InvalidTriple(validity)
    return validity


def evaluate_criterion(
    a: HermitianOperator, b: HermitianOperator, rho: DensityMatrix
) -> CriterionReport:
    """First and second moments of ``A`` and ``B`` in ``rho``.

    Raises
    ------
    InvalidTriple
        If any of ``A``, ``B``, ``B - A`` fails the PSD test.
    """
    _require_valid(a, b)
    mean_a = expectation(rho, a)
    mean_b = expectation(rho, b)
    sq_a = expectation(rho, op_square(a))
    sq_b = expectation(rho, op_square(b))
    margin = sq_a - sq_b
    return CriterionReport(
        mean_a=mean_a,
        mean_b=mean_b,
        sq_a=sq_a,
        sq_b=sq_b,
        first_moment_gap=mean_b - mean_a,
        violation_margin=margin,
        violated=margin > VIOLATION_TOL,
        commutator=commutator_norm(a, b),
    )


def optimal_violation_state(
    a: HermitianOperator, b: HermitianOperator
) -> tuple[DensityMatrix, float]:
    """State maximizing ``<A^2> - <B^2>`` and the maximal value.

    The maximum of ``Tr(rho M)`` over states is the top eigenvalue of
    ``M = A^2 - B^2``, attained on its eigenvector. For a degenerate top
    eigenvalue the lowest-index vector of the cluster is returned.
    """
    _require_valid(a, b)
    dec = spectral_decompose(op_sub(op_square(a), op_square(b)))
    top = dec.clusters()[-1]
    margin = float(dec.eigenvalues[-1])
    return make_pure_state(dec.vector(int(top[0]))), margin


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _check_dim(dim: int) -> None:
    if not 1 <= dim <= 64:
        raise ValidationError(f"dimension must be in [1, 64], got {dim}")


def random_valid_pair(dim: int, seed: int) -> tuple[HermitianOperator, HermitianOperator]:
    """Seeded random pair with ``0 <= A <= B``.

    ``A = M^H M`` and ``B = A + N^H N`` with complex Gaussian ``M, N``; both
    are then divided by ``max|B_jk|`` so that violation margins are on an
    order-one scale.
    """
    _check_dim(dim)
    rng = np.random.default_rng(seed)
    m = _complex_gaussian(rng, (dim, dim))
    n = _complex_gaussian(rng, (dim, dim))
    a = m.conj().T @ m
    b = a + n.conj().T @ n
    s = float(np.max(np.abs(b)))
    return make_hermitian(0.5 * (a + a.conj().T) / s), make_hermitian(0.5 * (b + b.conj().T) / s)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(_complex_gaussian(rng, (dim, dim)))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def commuting_valid_pair(dim: int, seed: int) -> tuple[HermitianOperator, HermitianOperator]:
    """Seeded pair ``A = U diag(a) U^H``, ``B = U diag(a + c) U^H`` sharing ``U``."""
    _check_dim(dim)
    rng = np.random.default_rng(seed)
    u = random_unitary(dim, rng)
    a = rng.uniform(0.0, 1.0, dim)
    c = rng.uniform(0.0, 1.0, dim)
    ua = (u * a) @ u.conj().T
    ub = (u * (a + c)) @ u.conj().T
    return make_hermitian(0.5 * (ua + ua.conj().T)), make_hermitian(0.5 * (ub + ub.conj().T))


def trial_seed(seed: int, index: int) -> int:
    """Independent 64-bit seed for trial ``index`` of a seeded batch."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def _sweep_margins(dim: int, seed: int, indices: range) -> list[float]:
    out = []
    for i in indices:
        a, b = commuting_valid_pair(dim, trial_seed(seed, i))
        out.append(optimal_violation_state(a, b)[1])
    return out


def commuting_sweep(trials: int, dim: int, seed: int, workers: int = 1) -> SweepReport:
    """Maximal violation margins over ``trials`` seeded commuting pairs.

    Trial ``i`` depends only on ``(seed, i)``, so the report does not depend
    on ``workers``.
    """
    if trials < 0:
        raise ValidationError("trials must be nonnegative")
    _check_dim(dim)
    if trials == 0:
        return SweepReport(trials=0, dim=dim, seed=seed, max_margin=None, violations=0)
    workers = max(1, min(workers, trials))
    bounds = np.linspace(0, trials, workers + 1).astype(int)
    chunks = [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]
    if workers == 1:
        margins = _sweep_margins(dim, seed, chunks[0])
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(lambda r: _sweep_margins(dim, seed, r), chunks)
            margins = [m for part in parts for m in part]
    margins_arr = np.array(margins)
    return SweepReport(
        trials=trials,
        dim=dim,
        seed=seed,
        max_margin=float(margins_arr.max()),
        violations=int(np.sum(margins_arr > VIOLATION_TOL)),
    )

