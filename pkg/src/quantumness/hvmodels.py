"""Product hidden-variable models.

The measurement outcomes themselves serve as hidden variables: for each
observable we record its distinct eigenvalues and their Born probabilities in
the given state, and the joint distribution is the plain product of these
marginals.  Such a model reproduces every single-observable moment of the
quantum state, including criterion-violating ones, while ignoring the
operator ordering between the observables.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .codec import decode_matrix, encode_matrix
from .criterion import check_triple
from .errors import InvalidTriple, NotCommuting, SchemaViolation, UnknownTag, ValidationError
from .opalg import (
    DensityMatrix,
    HermitianOperator,
    _check_dims,
    commutator_norm,
    expectation,
    op_sub,
    spectral_decompose,
)

PROB_TOL = 1e-12
SUM_RULE_TOL = 1e-9
COMMUTING_TOL = 1e-10
# Draws per substream; fixed so that merged samples do not depend on worker count.
PARTITION_SIZE = 1 << 16


@dataclass(frozen=True)
class OutcomeAlphabet:
    label: str
    values: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        p = self.probabilities
        if np.any(p < 0) or abs(float(p.sum()) - 1.0) > PROB_TOL:
            raise ValidationError(f"alphabet {self.label}: probabilities must form a distribution")

    def moment(self, power: int) -> float:
        return float(np.dot(self.probabilities, self.values**power))

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "values": self.values.tolist(),
            "probabilities": self.probabilities.tolist(),
        }


@dataclass(frozen=True)
class HiddenVariableModel:
    """Outcome alphabets plus a joint table indexed by outcome indices.

    ``joint[i, j]`` (or ``joint[i, j, k]``) is the probability that the
    observables take their ``i``-th, ``j``-th (and ``k``-th) values.
    ``rho`` is provenance only: the table is specific to the state it was
    built from.
    """

    alphabets: tuple[OutcomeAlphabet, ...]
    joint: np.ndarray
    factorized: bool
    rho: DensityMatrix | None = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.alphabets) not in (2, 3):
            raise ValidationError("a model has two or three alphabets")
        if self.joint.shape != tuple(len(a.values) for a in self.alphabets):
            raise ValidationError("joint table shape does not match the alphabets")
        if np.any(self.joint < 0) or abs(float(self.joint.sum()) - 1.0) > PROB_TOL:
            raise ValidationError("joint table is not a probability distribution")
        for a in self.alphabets:
            if np.max(np.abs(self.marginal(a.label) - a.probabilities)) > PROB_TOL:
                raise ValidationError(f"marginal of {a.label} disagrees with its alphabet")

    @property
    def tags(self) -> tuple[str, ...]:
        return tuple(a.label for a in self.alphabets)

    def axis(self, tag: str) -> int:
        try:
            return self.tags.index(tag)
        except ValueError:
            raise UnknownTag(f"tag {tag!r} not in model {self.tags}") from None

    def marginal(self, tag: str) -> np.ndarray:
        ax = self.axis(tag)
        others = tuple(i for i in range(self.joint.ndim) if i != ax)
        return self.joint.sum(axis=others)

    def values_grid(self, tag: str) -> np.ndarray:
        """Value of ``tag`` broadcast over the joint table."""
        ax = self.axis(tag)
        shape = [1] * self.joint.ndim
        shape[ax] = -1
        return np.broadcast_to(self.alphabets[ax].values.reshape(shape), self.joint.shape)

    def to_dict(self) -> dict:
        return {
            "alphabets": [a.to_dict() for a in self.alphabets],
            "joint": self.joint.tolist(),
            "factorized": self.factorized,
            "rho": None if self.rho is None else encode_matrix(self.rho.matrix),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HiddenVariableModel":
        try:
            alphabets = tuple(
                OutcomeAlphabet(
                    a["label"],
                    np.asarray(a["values"], dtype=float),
                    np.asarray(a["probabilities"], dtype=float),
                )
                for a in d["alphabets"]
            )
            joint = np.asarray(d["joint"], dtype=float)
            rho = None if d.get("rho") is None else DensityMatrix(decode_matrix(d["rho"]))
            return cls(alphabets, joint, bool(d["factorized"]), rho)
        except (KeyError, TypeError) as exc:
            raise SchemaViolation(f"malformed model: {exc}") from exc


def born_alphabet(label: str, x: HermitianOperator, rho: DensityMatrix) -> OutcomeAlphabet:
    """Distinct eigenvalues of ``x`` and ``P(x_k | rho) = Tr(rho Pi_k)``.

    Degenerate eigenvalues form one outcome with the summed projector.
    """
    _check_dims(x, rho)
    values, projectors = spectral_decompose(x).spectral_projectors()
    probs = np.array([expectation(rho, HermitianOperator(p)) for p in projectors])
    # Born weights of a PSD state are >= -eps; clip the rounding residue.
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    return OutcomeAlphabet(label, values, probs)


def product_model(alphabets, rho: DensityMatrix | None = None) -> HiddenVariableModel:
    """Joint table equal to the outer product of the alphabet marginals."""
    joint = reduce(np.multiply.outer, [a.probabilities for a in alphabets])
    return HiddenVariableModel(tuple(alphabets), joint, True, rho)


def build_pair_model(
    a: HermitianOperator, b: HermitianOperator, rho: DensityMatrix
) -> HiddenVariableModel:
    """``P_HV(A_i, B_j) = P(A_i|rho) P(B_j|rho)``."""
    _check_dims(a, b, rho)
    return product_model([born_alphabet("A", a, rho), born_alphabet("B", b, rho)], rho)


def build_triple_model(
    a: HermitianOperator, b: HermitianOperator, rho: DensityMatrix
) -> HiddenVariableModel:
    """``P_HV(A_i, B_j, C_k) = P(A_i|rho) P(B_j|rho) P(C_k|rho)`` with ``C = B - A``."""
    _check_dims(a, b, rho)
    validity = check_triple(a, b)
    if not validity.diff_psd:
        raise InvalidTriple(validity)
    c = op_sub(b, a)
    return product_model(
        [born_alphabet("A", a, rho), born_alphabet("B", b, rho), born_alphabet("C", c, rho)],
        rho,
    )


def model_moment(model: HiddenVariableModel, tag: str, power: int) -> float:
    """``E[X^power]`` computed exactly from the joint table."""
    if power not in (1, 2):
        raise ValidationError("power must be 1 or 2")
    ax = model.axis(tag)
    return float(np.dot(model.marginal(tag), model.alphabets[ax].values**power))


def negative_difference_probability(model: HiddenVariableModel) -> float:
    """Exact probability that ``v(B) - v(A) < 0`` under the joint table."""
    diff = model.values_grid("B") - model.values_grid("A")
    return float(model.joint[diff < 0].sum())


@dataclass
class EmpiricalReport:
    n: int
    seed: int
    tags: tuple[str, ...]
    counts: np.ndarray
    moments: dict[str, dict[int, float]]
    outcomes: np.ndarray = field(repr=False)

    def valuation_stream(self, model: HiddenVariableModel):
        """Per-draw values ``{tag: v}`` in draw order."""
        idx = np.unravel_index(self.outcomes, self.counts.shape)
        cols = {a.label: a.values[i] for a, i in zip(model.alphabets, idx)}
        for k in range(self.n):
            yield {t: float(cols[t][k]) for t in self.tags}

    def rows(self, model: HiddenVariableModel) -> list[dict]:
        """One row per joint outcome: indices, values and count."""
        out = []
        for flat, count in enumerate(self.counts.ravel()):
            idx = np.unravel_index(flat, self.counts.shape)
            row = {}
            for a, i in zip(model.alphabets, idx):
                row[f"i_{a.label}"] = int(i)
                row[f"v_{a.label}"] = float(a.values[i])
            row["count"] = int(count)
            out.append(row)
        return out

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "seed": self.seed,
            "tags": list(self.tags),
            "counts": self.counts.tolist(),
            "moments": {t: {str(p): v for p, v in m.items()} for t, m in self.moments.items()},
        }


def _draw_block(cdf: np.ndarray, seed: int, block: int, size: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, block]))
    return np.searchsorted(cdf, rng.random(size), side="right")


def sample(model: HiddenVariableModel, n: int, seed: int, workers: int = 1) -> EmpiricalReport:
    """``n`` i.i.d. draws from the joint table by inverse CDF.

    Cells are ordered lexicographically by outcome index.  Draws come in
    blocks of :data:`PARTITION_SIZE`; block ``k`` uses the substream
    ``(seed, k)``, so the result is identical for any ``workers``.
    """
    if n < 1:
        raise ValidationError("n must be at least 1")
    cdf = np.cumsum(model.joint.ravel())
    cdf[-1] = 1.0
    last = int(np.flatnonzero(model.joint.ravel() > 0)[-1])
    blocks = [
        (k, min(PARTITION_SIZE, n - k * PARTITION_SIZE))
        for k in range((n + PARTITION_SIZE - 1) // PARTITION_SIZE)
    ]
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda kb: _draw_block(cdf, seed, *kb), blocks))
    else:
        parts = [_draw_block(cdf, seed, k, size) for k, size in blocks]
    outcomes = np.minimum(np.concatenate(parts), last)
    counts = np.bincount(outcomes, minlength=model.joint.size).reshape(model.joint.shape)
    freq = counts / n
    moments = {}
    for a in model.alphabets:
        vals = model.values_grid(a.label)
        moments[a.label] = {p: float(np.sum(freq * vals**p)) for p in (1, 2)}
    return EmpiricalReport(n, seed, model.tags, counts, moments, outcomes)


@dataclass(frozen=True)
class ValuationAudit:
    samples: int
    frac_negative_diff: float
    min_vC: float
    frac_sum_rule_holds: float

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "frac_negative_diff": self.frac_negative_diff,
            "min_vC": self.min_vC,
            "frac_sum_rule_holds": self.frac_sum_rule_holds,
        }


def audit_valuations(model3: HiddenVariableModel, n: int, seed: int, workers: int = 1) -> ValuationAudit:
    """Sample ``(v(A), v(B), v(C))`` and check the von Neumann difference rule.

    Reports how often ``v(B) - v(A)`` is negative, the smallest sampled
    ``v(C)``, and how often ``v(C) = v(B) - v(A)`` holds to ``1e-9``.
    """
    if model3.tags != ("A", "B", "C"):
        raise ValidationError("valuation audit needs a triple (A, B, C) model")
    rep = sample(model3, n, seed, workers)
    va, vb, vc = (model3.values_grid(t) for t in "ABC")
    hit = rep.counts > 0
    diff = vb - va
    return ValuationAudit(
        samples=n,
        frac_negative_diff=float(rep.counts[diff < 0].sum() / n),
        min_vC=float(vc[hit].min()),
        frac_sum_rule_holds=float(rep.counts[np.abs(vc - diff) < SUM_RULE_TOL].sum() / n),
    )


@dataclass(frozen=True)
class DispersionFreeValuation:
    assignments: dict[str, float]

    @property
    def sum_rule_residual(self) -> float:
        v = self.assignments
        return abs(v["B-A"] - (v["B"] - v["A"]))


def joint_eigenbasis_valuation(
    a: HermitianOperator, b: HermitianOperator
) -> list[DispersionFreeValuation]:
    """Valuations read off a simultaneous eigenbasis of commuting ``A, B``.

    Each basis vector is dispersion free for ``A``, ``B`` and ``B - A``
    alike, and the difference rule holds on it.
    """
    _check_dims(a, b)
    if commutator_norm(a, b) >= COMMUTING_TOL:
        raise NotCommuting(f"||[A, B]||_max = {commutator_norm(a, b):.3e}")
    dec = spectral_decompose(a)
    basis = []
    # Diagonalize B inside each eigenspace of A.
    for idx in dec.clusters():
        v = dec.eigenvectors[:, idx]
        _, w = np.linalg.eigh(v.conj().T @ b.matrix @ v)
        basis.extend((v @ w).T)
    c = op_sub(b, a).matrix
    out = []
    for vec in basis:
        va = float(np.real(vec.conj() @ a.matrix @ vec))
        vb = float(np.real(vec.conj() @ b.matrix @ vec))
        vc = float(np.real(vec.conj() @ c @ vec))
        out.append(DispersionFreeValuation({"A": va, "B": vb, "B-A": vc}))
    return out
