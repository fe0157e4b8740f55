"""Clonability of orthogonal composite states released one subsystem at a time.

A set of mutually orthogonal bipartite states is handed over subsystem by
subsystem. Whoever holds the first subsystem must forward it before the
second arrives, so the only ways to copy the data are:

* MEASURE_FIRST: the first-subsystem reductions are orthogonal, so they can
  be read out without disturbance;
* DUMMY_SWAP: the first-subsystem reductions coincide, so a substitute with
  the same reduction can be forwarded and fixed up later;
* MEASURE_SECOND: the second-subsystem reductions are orthogonal;
* MEASURE_BOTH: a set whose pairs need different mechanisms can still be
  read out if each subsystem admits a measurement that leaves every state
  unchanged and the two outcomes together pin down the label.

When none of the first three applies to some pair the set cannot be cloned. If the
first-subsystem reductions commute they can still be broadcast, but
broadcasting entangles the copy with the forwarded subsystem and so
disturbs the composite state.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidArgument,
    NotOrthogonal,
    NotOrthogonalInput,
    NotProduct,
    Unsupported,
)
from .qlinalg import (
    EPS_CLASS,
    DensityMatrix,
    PureState,
    common_eigenbasis,
    commutes,
    embed_operator,
    is_identical,
    is_orthogonal,
    overlap,
    partial_trace,
)


class Verdict(str, enum.Enum):
    CLONABLE = "CLONABLE"
    NOT_CLONABLE = "NOT_CLONABLE"


class Mechanism(str, enum.Enum):
    MEASURE_FIRST = "MEASURE_FIRST"
    DUMMY_SWAP = "DUMMY_SWAP"
    MEASURE_SECOND = "MEASURE_SECOND"
    MEASURE_BOTH = "MEASURE_BOTH"


# why a NOT_CLONABLE verdict was reached
PAIR_CONDITION = "PAIR_CONDITION"
MIXED_MECHANISMS = "MIXED_MECHANISMS"


@dataclass(frozen=True)
class StateSet:
    dims: tuple[int, ...]
    labels: tuple[str, ...]
    states: tuple[DensityMatrix, ...]
    release_order: tuple[int, ...] = (1, 2)
    # optional state vectors for the pure members, aligned with ``labels``
    pure: tuple[PureState | None, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "release_order", tuple(int(i) for i in self.release_order))
        if len(self.labels) != len(self.states):
            raise InvalidArgument("labels and states differ in length")
        if len(set(self.labels)) != len(self.labels):
            raise InvalidArgument(f"duplicate labels in {self.labels}")
        for lab, st in zip(self.labels, self.states):
            if st.dims != self.dims:
                raise DimensionMismatch(f"state {lab!r} has dims {st.dims}, set has {self.dims}")
        if sorted(self.release_order) != list(range(1, len(self.dims) + 1)):
            raise InvalidArgument(f"release_order {self.release_order} is not a permutation of the subsystems")
        if self.pure is not None:
            object.__setattr__(self, "pure", tuple(self.pure))
            if len(self.pure) != len(self.labels):
                raise InvalidArgument("pure and labels differ in length")

    @classmethod
    def from_pure(cls, dims, items: dict[str, Sequence[complex]], release_order=(1, 2)) -> "StateSet":
        pure = [PureState(tuple(dims), v) for v in items.values()]
        return cls(tuple(dims), tuple(items), tuple(p.to_density() for p in pure), release_order, tuple(pure))

    def state(self, label: str) -> DensityMatrix:
        return self.states[self.labels.index(label)]

    def non_orthogonal_pairs(self, tol: float = EPS_CLASS) -> list[tuple[str, str]]:
        return [
            (self.labels[i], self.labels[j])
            for i, j in combinations(range(len(self.states)), 2)
            if not is_orthogonal(self.states[i], self.states[j], tol)
        ]

    @property
    def mutually_orthogonal(self) -> bool:
        return not self.non_orthogonal_pairs()


@dataclass(frozen=True)
class CloneVerdict:
    verdict: Verdict
    mechanism: Mechanism | None = None
    # None means "unknown": the reductions do not commute
    broadcastable_first_subsystem: bool | None = None
    witness: tuple[str, str] | None = None
    reason: str | None = None
    theory_complete: bool = True
    notes: list[str] = field(default_factory=list, compare=False)

    @property
    def clonable(self) -> bool:
        return self.verdict is Verdict.CLONABLE

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "mechanism": self.mechanism.value if self.mechanism else None,
            "broadcastable_first_subsystem": self.broadcastable_first_subsystem,
            "witness": list(self.witness) if self.witness else None,
            "reason": self.reason,
            "theory_complete": self.theory_complete,
        }


def reduced_family(states: StateSet, subsystem: int) -> list[DensityMatrix]:
    """Reduced state of ``subsystem`` (numbered from 1) for every member, in label order."""
    if not 1 <= subsystem <= len(states.dims):
        raise InvalidArgument(f"subsystem {subsystem} outside 1..{len(states.dims)}")
    return [partial_trace(s, {subsystem}) for s in states.states]


def _broadcastable(family: Sequence[DensityMatrix], tol: float) -> bool | None:
    if all(commutes(a, b, tol) for a, b in combinations(family, 2)):
        return True
    return None


def classify_pair(
    a: DensityMatrix,
    b: DensityMatrix,
    dims: Sequence[int] | None = None,
    labels: tuple[str, str] = ("a", "b"),
    release_order: Sequence[int] = (1, 2),
    tol: float = EPS_CLASS,
) -> CloneVerdict:
    dims = tuple(dims) if dims is not None else a.dims
    if a.dims != dims or b.dims != dims:
        raise DimensionMismatch(f"states have dims {a.dims} and {b.dims}, expected {dims}")
    if len(dims) != 2:
        raise Unsupported("only bipartite states are supported")
    if not is_orthogonal(a, b, tol):
        raise NotOrthogonalInput(
            f"states {labels[0]!r} and {labels[1]!r} overlap (Tr = {overlap(a, b):.3g})", labels
        )
    first, second = release_order
    a1, b1 = partial_trace(a, {first}), partial_trace(b, {first})
    bc = _broadcastable([a1, b1], tol)
    if is_orthogonal(a1, b1, tol):
        return CloneVerdict(Verdict.CLONABLE, Mechanism.MEASURE_FIRST, bc)
    if is_identical(a1, b1, tol):
        return CloneVerdict(Verdict.CLONABLE, Mechanism.DUMMY_SWAP, bc)
    if is_orthogonal(partial_trace(a, {second}), partial_trace(b, {second}), tol):
        return CloneVerdict(Verdict.CLONABLE, Mechanism.MEASURE_SECOND, bc)
    return CloneVerdict(Verdict.NOT_CLONABLE, None, bc, tuple(labels), PAIR_CONDITION)


def _pairwise(family, pred, tol) -> bool:
    return all(pred(x, y, tol) for x, y in combinations(family, 2))


def classify_set(states: StateSet, tol: float = EPS_CLASS) -> CloneVerdict:
    """Classify a whole set.

    CLONABLE only when one mechanism handles every pair. Sets whose pairs
    need different mechanisms are reported NOT_CLONABLE with reason
    MIXED_MECHANISMS and ``theory_complete=False``.
    """
    if len(states.dims) != 2:
        raise Unsupported(f"only bipartite sets are supported, got dims {states.dims}")
    if len(states.states) < 2:
        raise InvalidArgument("need at least two states")
    bad = states.non_orthogonal_pairs(tol)
    if bad:
        raise NotOrthogonalInput(f"states {bad[0][0]!r} and {bad[0][1]!r} are not orthogonal", bad[0])

    first, second = states.release_order
    fam1 = reduced_family(states, first)
    fam2 = reduced_family(states, second)
    bc = _broadcastable(fam1, tol)

    idx_pairs = list(combinations(range(len(states.states)), 2))
    pair_verdicts = {}
    for i, j in idx_pairs:
        lab = (states.labels[i], states.labels[j])
        v = classify_pair(states.states[i], states.states[j], states.dims, lab, states.release_order, tol)
        if not v.clonable:
            return CloneVerdict(Verdict.NOT_CLONABLE, None, bc, lab, PAIR_CONDITION)
        pair_verdicts[i, j] = v

    if _pairwise(fam1, is_orthogonal, tol):
        return CloneVerdict(Verdict.CLONABLE, Mechanism.MEASURE_FIRST, bc)
    if _pairwise(fam1, is_identical, tol):
        return CloneVerdict(Verdict.CLONABLE, Mechanism.DUMMY_SWAP, bc)
    if _pairwise(fam2, is_orthogonal, tol):
        return CloneVerdict(Verdict.CLONABLE, Mechanism.MEASURE_SECOND, bc)

    # prefer a pair that defeats both first-subsystem mechanisms
    witness = None
    for i, j in idx_pairs:
        if not is_orthogonal(fam1[i], fam1[j], tol) and not is_identical(fam1[i], fam1[j], tol):
            witness = (states.labels[i], states.labels[j])
            break
    if witness is None:
        ref = pair_verdicts[idx_pairs[0]].mechanism
        i, j = next(p for p in idx_pairs if pair_verdicts[p].mechanism is not ref)
        witness = (states.labels[i], states.labels[j])
    mechs = sorted({v.mechanism.value for v in pair_verdicts.values()})
    if sequential_readout(states, tol) is not None:
        return CloneVerdict(
            Verdict.CLONABLE, Mechanism.MEASURE_BOTH, bc,
            notes=[f"pairs need {', '.join(mechs)}; both subsystems can be measured without disturbance"],
        )
    return CloneVerdict(
        Verdict.NOT_CLONABLE,
        None,
        bc,
        witness,
        MIXED_MECHANISMS,
        theory_complete=False,
        notes=[f"pairs are clonable only via different mechanisms: {', '.join(mechs)}"],
    )


def invariant_measurement(states: StateSet, subsystem: int, tol: float = EPS_CLASS) -> list[np.ndarray] | None:
    """Projectors on ``subsystem`` that leave every state of the set unchanged.

    Built from the joint eigenspaces of the commuting reduced family, so it
    separates the reductions as finely as they can be separated. None when
    the reductions do not commute or measuring would disturb some state.
    """
    fam = reduced_family(states, subsystem)
    mats = [r.matrix for r in fam]
    if not _pairwise(mats, commutes, tol):
        return None
    frame = common_eigenbasis(mats, tol)
    groups: list[tuple[np.ndarray, list[int]]] = []
    for k in range(frame.shape[1]):
        e = frame[:, k]
        sig = np.array([np.real(e.conj() @ m @ e) for m in mats])
        for g_sig, cols in groups:
            if np.max(np.abs(g_sig - sig)) <= tol:
                cols.append(k)
                break
        else:
            groups.append((sig, [k]))
    projs = [frame[:, cols] @ frame[:, cols].conj().T for _, cols in groups]
    lifted = [embed_operator(p, states.dims, [subsystem - 1]) for p in projs]
    for rho in states.states:
        m = rho.matrix
        if np.max(np.abs(sum(p @ m @ p for p in lifted) - m)) > tol:
            return None
    return projs


def sequential_readout(states: StateSet, tol: float = EPS_CLASS) -> tuple[list[np.ndarray], list[np.ndarray]] | None:
    """Non-disturbing measurements on both subsystems that identify every label, or None."""
    first, second = states.release_order
    p1 = invariant_measurement(states, first, tol)
    p2 = invariant_measurement(states, second, tol)
    if p1 is None or p2 is None:
        return None
    outcomes = [
        embed_operator(a, states.dims, [first - 1]) @ embed_operator(b, states.dims, [second - 1])
        for a in p1 for b in p2
    ]
    dist = np.array([[np.real(np.trace(o @ rho.matrix)) for o in outcomes] for rho in states.states])
    for i, j in combinations(range(len(dist)), 2):
        if np.minimum(dist[i], dist[j]).sum() > tol:
            return None
    return p1, p2


def _split(psi: PureState, factor: int) -> tuple[np.ndarray, np.ndarray]:
    """Matrix of amplitudes with ``factor`` (zero-based) as rows; returns (singular values, left vectors)."""
    t = psi.amplitudes.reshape(psi.dims)
    t = np.moveaxis(t, factor, 0).reshape(psi.dims[factor], -1)
    u, s, _ = np.linalg.svd(t)
    return s, u


def is_product(psi: PureState, tol: float = EPS_CLASS) -> bool:
    return all(len(s) < 2 or s[1] <= tol for s in (_split(psi, i)[0] for i in range(len(psi.dims))))


def product_orthogonality_locator(a: PureState, b: PureState, tol: float = EPS_CLASS) -> int:
    """Subsystem (numbered from 1) on which two orthogonal product states are already orthogonal.

    Copying that subsystem alone copies the whole datum, which is why two
    orthogonal product pure states are never protected by sequential release.
    """
    if a.dims != b.dims:
        raise DimensionMismatch(f"dims {a.dims} and {b.dims} differ")
    for name, psi in (("first", a), ("second", b)):
        if not is_product(psi, tol):
            raise NotProduct(f"{name} state is entangled across some factor split")
    if abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2 > tol:
        raise NotOrthogonal("states are not orthogonal")
    overlaps = []
    for i in range(len(a.dims)):
        ua, ub = _split(a, i)[1][:, 0], _split(b, i)[1][:, 0]
        overlaps.append(abs(np.vdot(ua, ub)) ** 2)
    return int(np.argmin(overlaps)) + 1
