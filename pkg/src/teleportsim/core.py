"""Density matrices and operators on labelled composite Hilbert spaces.

Everything downstream (photonic modes, atomic qubits, the protocol state
machine) manipulates states through the small vocabulary defined here:
tensor products, operator embedding, unitaries, partial traces, projective
and POVM measurements, and the two qubit noise channels.

All values are immutable after construction and every operation is a pure
function of its inputs, so states can be evaluated on parallel workers
without shared mutable state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import tolerances as tol


class QuantumStateError(ValueError):
    """Raised when a state, operator, or measurement fails a validity check."""


@dataclass(frozen=True)
class HilbertLayout:
    """Ordered list of labelled subsystems, e.g. (("bob", 2), ("ph1", 4)).

    The global label order used by the protocol is (Bob atom, Alice atom,
    photonic modes, ancilla modes).
    """

    subsystems: tuple[tuple[str, int], ...]

    def __post_init__(self):
        subs = tuple((str(label), int(dim)) for label, dim in self.subsystems)
        object.__setattr__(self, "subsystems", subs)
        labels = [label for label, _ in subs]
        if len(set(labels)) != len(labels):
            raise QuantumStateError(f"duplicate subsystem labels in {labels}")
        if any(dim < 1 for _, dim in subs):
            raise QuantumStateError("subsystem dimensions must be positive")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.subsystems)

    @property
    def dim(self) -> int:
        out = 1
        for d in self.dims:
            out *= d
        return out

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise QuantumStateError(f"unknown subsystem label {label!r}") from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.axis(label)]

    def concat(self, other: "HilbertLayout") -> "HilbertLayout":
        return HilbertLayout(self.subsystems + other.subsystems)

    def restricted(self, labels: Iterable[str]) -> "HilbertLayout":
        """Sub-layout of the given labels, kept in this layout's order."""
        wanted = set(labels)
        unknown = wanted - set(self.labels)
        if unknown:
            raise QuantumStateError(f"unknown subsystem labels {sorted(unknown)}")
        return HilbertLayout(tuple(s for s in self.subsystems if s[0] in wanted))


def _as_matrix(matrix: np.ndarray, dim: int, what: str) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (dim, dim):
        raise QuantumStateError(f"{what} has shape {m.shape}, expected {(dim, dim)}")
    m = m.copy()
    m.flags.writeable = False
    return m


@dataclass(frozen=True)
class DensityState:
    """A density matrix on a labelled composite space.

    The matrix is always stored normalized (trace one).  A conditional branch
    of a measurement carries its probability in ``weight`` instead of leaving
    the matrix silently sub-normalized, so herald accounting stays auditable.
    """

    layout: HilbertLayout
    matrix: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        m = _as_matrix(self.matrix, self.layout.dim, "density matrix")
        if np.max(np.abs(m - m.conj().T)) > tol.HERMITICITY_TOL:
            raise QuantumStateError("density matrix is not Hermitian")
        tr = m.trace().real
        if abs(tr - 1.0) > tol.TRACE_TOL:
            raise QuantumStateError(f"density matrix trace {tr} != 1")
        if np.min(np.linalg.eigvalsh(m)) < -tol.PSD_TOL:
            raise QuantumStateError("density matrix has a negative eigenvalue")
        if not (0.0 <= self.weight <= 1.0 + tol.PROB_SUM_TOL):
            raise QuantumStateError(f"branch weight {self.weight} outside [0, 1]")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_vector(cls, layout: HilbertLayout, vector: Sequence[complex],
                    weight: float = 1.0) -> "DensityState":
        v = np.asarray(vector, dtype=complex).reshape(-1)
        if v.shape[0] != layout.dim:
            raise QuantumStateError(
                f"vector length {v.shape[0]} != layout dimension {layout.dim}")
        norm = np.linalg.norm(v)
        if norm == 0:
            raise QuantumStateError("zero vector cannot define a state")
        v = v / norm
        return cls(layout, np.outer(v, v.conj()), weight)

    def with_weight(self, weight: float) -> "DensityState":
        return DensityState(self.layout, self.matrix, weight)


@dataclass(frozen=True)
class LinearOperator:
    """A matrix acting on a labelled space; ``unitary`` asserts U^dag U = 1."""

    layout: HilbertLayout
    matrix: np.ndarray
    unitary: bool = False

    def __post_init__(self):
        m = _as_matrix(self.matrix, self.layout.dim, "operator")
        if self.unitary:
            dev = np.max(np.abs(m.conj().T @ m - np.eye(self.layout.dim)))
            if dev > tol.UNITARITY_TOL:
                raise QuantumStateError(
                    f"operator flagged unitary deviates from unitarity by {dev:.2e}")
        object.__setattr__(self, "matrix", m)

    @property
    def dag(self) -> np.ndarray:
        return self.matrix.conj().T


@dataclass(frozen=True)
class NoiseChannelSpec:
    """Single-qubit noise: 'dephasing' or 'depolarizing' with strength in [0, 1].

    Dephasing multiplies the target's off-diagonal blocks by (1 - parameter);
    depolarizing replaces the target's reduced state by
    parameter * I/2 + (1 - parameter) * rho.
    """

    kind: str
    parameter: float

    def __post_init__(self):
        if self.kind not in ("dephasing", "depolarizing"):
            raise QuantumStateError(f"unknown noise kind {self.kind!r}")
        if not (0.0 <= self.parameter <= 1.0):
            raise QuantumStateError(f"noise parameter {self.parameter} outside [0, 1]")


def tensor_product(factors: Sequence[DensityState] | Sequence[LinearOperator]):
    """Kronecker product of states or of operators, concatenating layouts."""
    if not factors:
        raise QuantumStateError("tensor_product needs at least one factor")
    kinds = {type(f) for f in factors}
    if len(kinds) != 1:
        raise QuantumStateError("tensor_product factors must all be the same kind")
    layout = factors[0].layout
    for f in factors[1:]:
        layout = layout.concat(f.layout)  # raises on duplicate labels
    matrix = factors[0].matrix
    for f in factors[1:]:
        matrix = np.kron(matrix, f.matrix)
    if isinstance(factors[0], DensityState):
        weight = 1.0
        for f in factors:
            weight *= f.weight
        return DensityState(layout, matrix, weight)
    return LinearOperator(layout, matrix, unitary=all(f.unitary for f in factors))


def embed_operator(op: LinearOperator, targets: Sequence[str],
                   layout: HilbertLayout) -> LinearOperator:
    """Lift ``op`` so it acts on ``targets`` inside ``layout`` and as identity
    elsewhere.  Targets may be non-adjacent and in any order; ``op``'s own
    subsystem order must match the order of ``targets``.
    """
    targets = list(targets)
    if len(set(targets)) != len(targets):
        raise QuantumStateError("duplicate target labels")
    if len(targets) != len(op.layout.subsystems):
        raise QuantumStateError(
            f"operator has {len(op.layout.subsystems)} subsystems, got "
            f"{len(targets)} targets")
    for t, (_, d) in zip(targets, op.layout.subsystems):
        if layout.dim_of(t) != d:
            raise QuantumStateError(
                f"dimension mismatch embedding on {t!r}: operator expects {d}, "
                f"layout has {layout.dim_of(t)}")

    rest = [lab for lab in layout.labels if lab not in targets]
    dims = dict(zip(layout.labels, layout.dims))
    big = op.matrix
    for lab in rest:
        big = np.kron(big, np.eye(dims[lab]))
    # big acts on [targets..., rest...]; permute to the layout order
    order = targets + rest
    perm = [order.index(lab) for lab in layout.labels]
    n = len(layout.labels)
    shaped = big.reshape([dims[lab] for lab in order] * 2)
    shaped = shaped.transpose(perm + [p + n for p in perm])
    matrix = shaped.reshape(layout.dim, layout.dim)
    return LinearOperator(layout, matrix, unitary=op.unitary)


def apply_unitary(state: DensityState, op: LinearOperator) -> DensityState:
    """U rho U^dagger.  The operator must be flagged (and thus checked) unitary."""
    if not op.unitary:
        raise QuantumStateError("apply_unitary requires an operator flagged unitary")
    if op.layout.dim != state.layout.dim:
        raise QuantumStateError("operator and state dimensions differ")
    return DensityState(state.layout, op.matrix @ state.matrix @ op.dag, state.weight)


def apply_kraus(state: DensityState, kraus: Sequence[np.ndarray]) -> DensityState:
    """Sum_k K rho K^dagger for a trace-preserving Kraus family."""
    rho = state.matrix
    out = np.zeros_like(rho)
    for k in kraus:
        out += k @ rho @ k.conj().T
    return DensityState(state.layout, out, state.weight)


def partial_trace(state: DensityState, keep: Sequence[str]) -> DensityState:
    """Reduced state on ``keep`` (returned in the original layout order)."""
    keep_set = set(keep)
    if not keep_set:
        raise QuantumStateError("keep set must be non-empty")
    sub = state.layout.restricted(keep_set)
    if len(sub.labels) == len(state.layout.labels):
        return state
    dims = state.layout.dims
    n = len(dims)
    shaped = state.matrix.reshape(dims * 2)
    keep_axes = [i for i, lab in enumerate(state.layout.labels) if lab in keep_set]
    # einsum with integer subscripts: traced axes share an index bra/ket side
    bra = list(range(n))
    ket = [i + n if i in keep_axes else i for i in range(n)]
    out_idx = keep_axes + [i + n for i in keep_axes]
    reduced = np.einsum(shaped, bra + ket, out_idx)
    d = sub.dim
    return DensityState(sub, reduced.reshape(d, d), state.weight)


def projective_measure(state: DensityState, projectors: Sequence[LinearOperator]
                       ) -> list[tuple[float, DensityState | None]]:
    """Measure a complete set of orthogonal projectors.

    Returns one (probability, conditional state) pair per projector, in the
    given order.  Probabilities sum to one; a zero-probability branch carries
    ``None`` instead of a divided-by-zero state.  Conditional states keep the
    branch probability in their ``weight``.
    """
    d = state.layout.dim
    total = np.zeros((d, d), dtype=complex)
    for p in projectors:
        m = p.matrix
        if m.shape != (d, d):
            raise QuantumStateError("projector dimension mismatch")
        if np.max(np.abs(m - m.conj().T)) > tol.HERMITICITY_TOL:
            raise QuantumStateError("projector is not Hermitian")
        if np.max(np.abs(m @ m - m)) > tol.IDEMPOTENCY_TOL:
            raise QuantumStateError("projector is not idempotent")
        total += m
    if np.max(np.abs(total - np.eye(d))) > tol.IDEMPOTENCY_TOL:
        raise QuantumStateError("projectors do not sum to the identity")

    results: list[tuple[float, DensityState | None]] = []
    for p in projectors:
        prob = float(np.real(np.trace(p.matrix @ state.matrix)))
        prob = max(prob, 0.0)
        if prob < tol.ZERO_PROB:
            results.append((0.0, None))
            continue
        cond = p.matrix @ state.matrix @ p.matrix / prob
        cond = 0.5 * (cond + cond.conj().T)
        results.append((prob, DensityState(state.layout, cond, state.weight * prob)))
    total_prob = sum(p for p, _ in results)
    if abs(total_prob - 1.0) > tol.PROB_SUM_TOL:
        raise QuantumStateError(f"branch probabilities sum to {total_prob}, not 1")
    return results


def povm_measure(state: DensityState, elements: Sequence[np.ndarray]
                 ) -> list[tuple[float, DensityState | None]]:
    """Generalized measurement: branch k gets sqrt(E_k) rho sqrt(E_k) / p_k.

    Elements must be PSD and sum to the identity on the state's space.
    """
    d = state.layout.dim
    total = np.zeros((d, d), dtype=complex)
    for e in elements:
        total += e
    if np.max(np.abs(total - np.eye(d))) > tol.PROB_SUM_TOL * d:
        raise QuantumStateError("POVM elements do not sum to the identity")
    results: list[tuple[float, DensityState | None]] = []
    for e in elements:
        prob = float(np.real(np.trace(e @ state.matrix)))
        prob = max(prob, 0.0)
        if prob < tol.ZERO_PROB:
            results.append((0.0, None))
            continue
        if np.max(np.abs(e - np.diag(np.diagonal(e)))) < 1e-14:
            root = np.diag(np.sqrt(np.clip(np.diagonal(e).real, 0.0, None)))
        else:
            evals, evecs = np.linalg.eigh(e)
            root = (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.conj().T
        cond = root @ state.matrix @ root / prob
        cond = 0.5 * (cond + cond.conj().T)
        results.append((prob, DensityState(state.layout, cond, state.weight * prob)))
    return results


def fidelity_pure(state: DensityState, target: Sequence[complex]) -> float:
    """<psi| rho |psi> against a normalized pure target."""
    v = np.asarray(target, dtype=complex).reshape(-1)
    if v.shape[0] != state.layout.dim:
        raise QuantumStateError("target vector dimension mismatch")
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise QuantumStateError("target vector is not normalized")
    f = float(np.real(v.conj() @ state.matrix @ v))
    return min(max(f, 0.0), 1.0)


_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def apply_noise(state: DensityState, target: str, spec: NoiseChannelSpec
                ) -> DensityState:
    """Apply a single-qubit noise channel to one dimension-2 subsystem."""
    if state.layout.dim_of(target) != 2:
        raise QuantumStateError(f"noise target {target!r} is not a qubit")
    p = spec.parameter
    if p == 0.0:
        return state
    qubit = HilbertLayout(((target, 2),))
    if spec.kind == "dephasing":
        z = embed_operator(LinearOperator(qubit, _PAULI_Z, unitary=True),
                           [target], state.layout).matrix
        q = p / 2.0  # off-diagonals shrink by (1 - 2q) = (1 - p)
        kraus = [np.sqrt(1.0 - q) * np.eye(state.layout.dim), np.sqrt(q) * z]
        return apply_kraus(state, kraus)
    # depolarizing, via the Pauli twirl identity
    paulis = [
        embed_operator(LinearOperator(qubit, s, unitary=True), [target],
                       state.layout).matrix
        for s in (_PAULI_X, _PAULI_Y, _PAULI_Z)
    ]
    rho = state.matrix
    out = (1.0 - 0.75 * p) * rho
    for s in paulis:
        out = out + 0.25 * p * (s @ rho @ s)
    return DensityState(state.layout, out, state.weight)
