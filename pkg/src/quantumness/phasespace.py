"""Classical phase-space models as an LP feasibility problem.

A d-level observable is embedded in the Fock span ``|0>..|d-1>`` of one
optical mode and represented classically by its coherent-state symbol
``X_Q(alpha) = <alpha|X|alpha>``.  A classical model is a nonnegative weight
``p_k`` on a finite grid of coherent amplitudes; it must reproduce
``<A>, <A^2>, <B>, <B^2>`` with ``A_Q`` and its classical square ``A_Q^2``.

If ``0 <= A <= B`` then ``0 <= A_Q <= B_Q`` pointwise, so no such weights can
exist once ``<A^2> > <B^2>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.optimize import linprog

from .criterion import check_triple
from .errors import BadRadius, BadResolution, DimensionTooLarge, ImaginaryResidue, InvalidTriple, SolverFailure
from .opalg import DensityMatrix, HermitianOperator, _check_dims, expectation, op_square

MAX_FOCK_DIM = 16
DEFAULT_RADIUS = 4.0
DEFAULT_RESOLUTION = 61
DEFAULT_DELTA = 1e-6
QSYMBOL_IMAG_TOL = 1e-12
MOMENT_NAMES = ("mean_a", "sq_a", "mean_b", "sq_b")


@dataclass(frozen=True)
class PhaseSpaceGrid:
    points: np.ndarray  # complex alphas, row-major over (Im, Re)
    radius: float
    resolution: int

    def __len__(self):
        return self.points.size

    def index_of(self, alpha: complex) -> int:
        return int(np.argmin(np.abs(self.points - alpha)))


@dataclass(frozen=True)
class FeasibilityResult:
    status: str
    residual: float
    witness: np.ndarray | None
    constraints_used: tuple[str, ...]
    targets: dict
    delta: float

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    def to_dict(self, include_witness: bool = False) -> dict:
        d = {
            "status": self.status,
            "residual": self.residual,
            "delta": self.delta,
            "constraints_used": list(self.constraints_used),
            "targets": dict(self.targets),
        }
        if self.witness is not None:
            support = np.flatnonzero(self.witness > 0)
            d["witness_support"] = int(support.size)
            if include_witness:
                d["witness"] = self.witness.tolist()
        return d


def build_grid(radius: float = DEFAULT_RADIUS, resolution: int = DEFAULT_RESOLUTION) -> PhaseSpaceGrid:
    """Square lattice of ``resolution**2`` points over ``[-radius, radius]^2``."""
    if not radius > 0 or not np.isfinite(radius):
        raise BadRadius(f"radius must be positive and finite, got {radius!r}")
    if int(resolution) != resolution or resolution < 3 or resolution % 2 == 0:
        raise BadResolution(f"resolution must be an odd integer >= 3, got {resolution!r}")
    axis = np.linspace(-radius, radius, int(resolution))
    axis[int(resolution) // 2] = 0.0
    re, im = np.meshgrid(axis, axis)
    return PhaseSpaceGrid((re + 1j * im).ravel(), float(radius), int(resolution))


def coherent_amplitudes(alphas, dim: int) -> np.ndarray:
    """Rows ``<n|alpha>`` for ``n < dim``: ``exp(-|a|^2/2) a^n / sqrt(n!)``."""
    alphas = np.atleast_1d(np.asarray(alphas, dtype=np.complex128))
    n = np.arange(dim)
    norms = np.sqrt([float(factorial(k)) for k in n])
    return np.exp(-0.5 * np.abs(alphas) ** 2)[:, None] * alphas[:, None] ** n / norms


def q_symbols(x: HermitianOperator, alphas) -> np.ndarray:
    if x.dim > MAX_FOCK_DIM:
        raise DimensionTooLarge(f"Fock embedding supports dim <= {MAX_FOCK_DIM}, got {x.dim}")
    c = coherent_amplitudes(alphas, x.dim)
    vals = np.einsum("km,mn,kn->k", c.conj(), x.matrix, c)
    scale = max(1.0, float(np.max(np.abs(x.matrix))))
    if np.max(np.abs(vals.imag)) > QSYMBOL_IMAG_TOL * scale:
        raise ImaginaryResidue("coherent-state symbol has an imaginary part")
    return vals.real


def q_symbol(x: HermitianOperator, alpha: complex) -> float:
    """``<alpha|X|alpha>`` with ``X`` embedded in the lowest Fock states."""
    return float(q_symbols(x, [alpha])[0])


def pointwise_order_summary(a: HermitianOperator, b: HermitianOperator, grid: PhaseSpaceGrid) -> dict:
    """Smallest ``A_Q`` and ``B_Q - A_Q`` over the grid."""
    aq = q_symbols(a, grid.points)
    bq = q_symbols(b, grid.points)
    return {
        "min_a_q": float(aq.min()),
        "min_b_q_minus_a_q": float((bq - aq).min()),
        "ordered": bool(aq.min() >= -1e-10 and (bq - aq).min() >= -1e-10),
    }


def quantum_targets(a: HermitianOperator, b: HermitianOperator, rho: DensityMatrix) -> dict:
    return {
        "mean_a": expectation(rho, a),
        "sq_a": expectation(rho, op_square(a)),
        "mean_b": expectation(rho, b),
        "sq_b": expectation(rho, op_square(b)),
    }


def coherent_control_targets(
    a: HermitianOperator, b: HermitianOperator, alpha: complex
) -> dict:
    """Moments of the classical model concentrated on one coherent amplitude."""
    aq, bq = q_symbol(a, alpha), q_symbol(b, alpha)
    return {"mean_a": aq, "sq_a": aq * aq, "mean_b": bq, "sq_b": bq * bq}


def feasibility_from_targets(
    a: HermitianOperator,
    b: HermitianOperator,
    targets: dict,
    grid: PhaseSpaceGrid,
    delta: float = DEFAULT_DELTA,
) -> FeasibilityResult:
    """Search for grid weights matching ``targets`` with classical symbols.

    Solves ``min sum|F p - t|`` subject to ``p >= 0, sum p = 1``, where the
    rows of ``F`` are ``A_Q, A_Q^2, B_Q, B_Q^2``.  The optimum is the
    residual; the instance is feasible when it is at most ``delta``.
    """
    _check_dims(a, b)
    aq = q_symbols(a, grid.points)
    bq = q_symbols(b, grid.points)
    f = np.vstack([aq, aq**2, bq, bq**2])
    t = np.array([targets[k] for k in MOMENT_NAMES], dtype=float)
    n, m = f.shape[1], f.shape[0]
    # variables: p (n), over-shoot (m), under-shoot (m)
    cost = np.concatenate([np.zeros(n), np.ones(2 * m)])
    a_eq = np.zeros((m + 1, n + 2 * m))
    a_eq[0, :n] = 1.0
    a_eq[1:, :n] = f
    a_eq[1:, n : n + m] = -np.eye(m)
    a_eq[1:, n + m :] = np.eye(m)
    b_eq = np.concatenate([[1.0], t])
    res = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs-ds")
    if res.status != 0:
        raise SolverFailure(f"LP solve failed: {res.message}")
    p = np.clip(res.x[:n], 0.0, None)
    p /= p.sum()
    residual = float(np.sum(np.abs(f @ p - t)))
    feasible = residual <= delta
    return FeasibilityResult(
        status="feasible" if feasible else "infeasible",
        residual=residual,
        witness=p if feasible else None,
        constraints_used=(
            "sum(p) = 1",
            "E[A_Q] = <A>",
            "E[A_Q^2] = <A^2>",
            "E[B_Q] = <B>",
            "E[B_Q^2] = <B^2>",
        ),
        targets={k: float(v) for k, v in zip(MOMENT_NAMES, t)},
        delta=delta,
    )


def classical_p_feasibility(
    a: HermitianOperator,
    b: HermitianOperator,
    rho: DensityMatrix,
    grid: PhaseSpaceGrid | None = None,
    delta: float = DEFAULT_DELTA,
) -> FeasibilityResult:
    """Can a nonnegative grid distribution reproduce the quantum moments of ``rho``?"""
    validity = check_triple(a, b)
    if not validity.ok:
        raise InvalidTriple(validity)
    grid = build_grid() if grid is None else grid
    return feasibility_from_targets(a, b, quantum_targets(a, b, rho), grid, delta)


def witness_violations(
    a: HermitianOperator, b: HermitianOperator, result: FeasibilityResult, grid: PhaseSpaceGrid
) -> np.ndarray:
    """Per-constraint absolute error of a feasible witness."""
    aq = q_symbols(a, grid.points)
    bq = q_symbols(b, grid.points)
    p = result.witness
    got = np.array([p @ aq, p @ aq**2, p @ bq, p @ bq**2])
    want = np.array([result.targets[k] for k in MOMENT_NAMES])
    return np.abs(got - want)
