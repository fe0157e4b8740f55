"""Two-round restricted eavesdroppers.

Eve holds an ancilla. In round 1 she may act jointly on the first subsystem
and the ancilla, then must forward the first subsystem. In round 2 she may
act on the second subsystem and the ancilla. Every measurement is deferred:
attacks are unitaries, and Eve's knowledge is whatever her final ancilla
state lets her distinguish.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cloneability import Mechanism, sequential_readout
from .errors import DimensionMismatch, InvalidArgument, PreconditionFailed
from .protocols import BasisSpec, Protocol
from .qlinalg import (
    EPS_CLASS,
    EPS_EQ,
    DensityMatrix,
    PureState,
    common_eigenbasis,
    dagger,
    eig_hermitian,
    embed_operator,
    haar_unitary,
    is_identical,
    ket,
    max_abs,
    partial_trace,
)


@dataclass(frozen=True, eq=False)
class AttackChannel:
    """Eve's strategy.

    ``round1`` acts on (A1 x ancilla) and ``round2`` on (A2 x ancilla), both in
    big-endian factor order; ``None`` means identity. ``scopes`` lists the
    subsystems each round claims to touch; the simulator refuses any attack
    whose scopes break the delivery order.
    """

    name: str
    ancilla_dims: tuple[int, ...]
    ancilla_init: PureState | None
    round1: np.ndarray | None = None
    round2: np.ndarray | None = None
    params: dict = field(default_factory=dict)
    scopes: tuple[tuple[int, ...], tuple[int, ...]] = ((1,), (2,))
    # ancilla factors (zero-based) holding Eve's copy of the first subsystem
    copy_register: tuple[int, ...] | None = None
    mechanism: Mechanism | None = None

    def __post_init__(self):
        object.__setattr__(self, "ancilla_dims", tuple(int(d) for d in self.ancilla_dims))
        if self.ancilla_dims:
            if self.ancilla_init is None or self.ancilla_init.dims != self.ancilla_dims:
                raise DimensionMismatch(f"ancilla_init must be a state on dims {self.ancilla_dims}")
        elif self.ancilla_init is not None:
            raise DimensionMismatch("ancilla_init given for an empty ancilla")
        for k in ("round1", "round2"):
            u = getattr(self, k)
            if u is None:
                continue
            u = np.array(u, dtype=complex)
            u.setflags(write=False)
            object.__setattr__(self, k, u)
            if u.ndim != 2 or u.shape[0] != u.shape[1]:
                raise DimensionMismatch(f"{k} must be square, got {u.shape}")
            err = max_abs(dagger(u) @ u - np.eye(u.shape[0]))
            if err > EPS_EQ:
                raise InvalidArgument(f"{k} is not unitary (|U^dag U - I| = {err:.3g})")

    def unitaries(self) -> list[np.ndarray]:
        return [u for u in (self.round1, self.round2) if u is not None]

    def describe_params(self) -> str:
        return ";".join(f"{k}={_fmt(v)}" for k, v in self.params.items())


def _fmt(v) -> str:
    return f"{v:.12g}" if isinstance(v, float) else str(v)


def _ancilla(dims: Sequence[int], vec=None) -> PureState:
    dims = tuple(dims)
    return PureState(dims, ket(dims, [0] * len(dims)) if vec is None else vec)


def shift(d: int, k: int = 1) -> np.ndarray:
    """Cyclic shift |j> -> |j + k mod d>."""
    return np.roll(np.eye(d, dtype=complex), k, axis=0)


def copy_unitary(projectors: Sequence[np.ndarray], ancilla_dim: int, frame: np.ndarray | None = None) -> np.ndarray:
    """Controlled shift sum_i P_i (x) F X^i F^dag on (target x ancilla).

    With orthogonal projectors summing to identity this writes the index i
    into the ancilla, taken in the basis given by the columns of ``frame``.
    """
    if len(projectors) > ancilla_dim:
        raise InvalidArgument(f"{len(projectors)} outcomes do not fit an ancilla of dimension {ancilla_dim}")
    f = np.eye(ancilla_dim, dtype=complex) if frame is None else frame
    return sum(np.kron(p, f @ shift(ancilla_dim, i) @ dagger(f)) for i, p in enumerate(projectors))


def identity_attack(ancilla_dims: Sequence[int] = ()) -> AttackChannel:
    dims = tuple(ancilla_dims)
    return AttackChannel("identity", dims, _ancilla(dims) if dims else None)


def intercept_resend(basis: BasisSpec, round: int = 1) -> AttackChannel:
    """Copy the held qubit's value in ``basis`` into a fresh ancilla qubit.

    This is measure-and-resend with the measurement deferred: the forwarded
    qubit is dephased in ``basis`` and the ancilla records the outcome.
    """
    if round not in (1, 2):
        raise InvalidArgument(f"round must be 1 or 2, got {round}")
    b0, b1 = basis.vectors
    u = copy_unitary([np.outer(b0, b0.conj()), np.outer(b1, b1.conj())], 2)
    return AttackChannel(
        "intercept",
        (2,),
        _ancilla((2,)),
        round1=u if round == 1 else None,
        round2=u if round == 2 else None,
        params={"basis_angle": float(basis.angle), "round": round},
    )


def measure_second_attack(basis: BasisSpec) -> AttackChannel:
    a = intercept_resend(basis, round=2)
    return AttackChannel(
        "measure-second", a.ancilla_dims, a.ancilla_init, None, a.round2,
        {"basis_angle": float(basis.angle)}, mechanism=Mechanism.MEASURE_SECOND,
    )


def broadcast_attack(reduced_family: Sequence[DensityMatrix], tol: float = EPS_CLASS) -> AttackChannel:
    """Broadcast a commuting family of first-subsystem states.

    Eve copies the held subsystem in the common eigenbasis {|e_i>}, mapping
    |e_i>|e_0> to |e_i>|e_i>. The forwarded subsystem and Eve's register then
    both have marginal rho_p, while the joint state differs from
    rho_p (x) rho_p whenever rho_p is mixed. When every member is the same
    state, Eve needs no interaction at all: she prepares that state herself
    (register plus a purifying reference) and leaves the subsystem alone.
    """
    family = list(reduced_family)
    if not family:
        raise InvalidArgument("empty family")
    d = family[0].dim
    if any(r.dim != d for r in family):
        raise DimensionMismatch("family members differ in dimension")
    if all(is_identical(family[0], r, tol) for r in family[1:]):
        w, v = eig_hermitian(family[0].matrix)
        vec = sum(np.sqrt(max(w[i], 0.0)) * np.kron(v[:, i], np.eye(d)[i]) for i in range(d))
        return AttackChannel(
            "broadcast", (d, d), PureState((d, d), vec / np.linalg.norm(vec)),
            params={"construction": "prepare"}, copy_register=(0,),
        )
    frame = common_eigenbasis(family, tol)
    projs = [np.outer(frame[:, i], frame[:, i].conj()) for i in range(d)]
    return AttackChannel(
        "broadcast", (d,), PureState((d,), frame[:, 0]),
        round1=copy_unitary(projs, d, frame), params={"construction": "copy"}, copy_register=(0,),
    )


def support_copy_attack(reduced_family: Sequence[DensityMatrix], round: int = 1, tol: float = EPS_CLASS) -> AttackChannel:
    """Read out which member of an orthogonal family is present, without disturbing it.

    Projects onto the supports of the (mutually orthogonal) members and
    records the index; states inside one support are left untouched.
    """
    family = list(reduced_family)
    d = family[0].dim
    projs = []
    for r in family:
        w, v = eig_hermitian(r.matrix)
        sup = v[:, w > tol]
        projs.append(sup @ dagger(sup))
    total = sum(projs)
    if max_abs(total @ total - total) > 1e-8:
        raise PreconditionFailed("family members are not mutually orthogonal")
    rest = np.eye(d) - total
    if max_abs(rest) > 1e-8:
        projs.append(rest)
    k = len(projs)
    u = copy_unitary(projs, k)
    mech = Mechanism.MEASURE_FIRST if round == 1 else Mechanism.MEASURE_SECOND
    return AttackChannel(
        "support-copy", (k,), _ancilla((k,)),
        round1=u if round == 1 else None, round2=u if round == 2 else None,
        params={"round": round}, mechanism=mech,
    )


def _swap(d: int) -> np.ndarray:
    s = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            s[j * d + i, i * d + j] = 1.0
    return s


def _local_fix(ref: np.ndarray, target: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    """Unitary V on the second factor with (I (x) V)|ref> = |target>."""
    m_ref, m_tgt = ref.reshape(dims), target.reshape(dims)
    u, _, wh = np.linalg.svd(dagger(m_ref) @ m_tgt)
    x = u @ wh
    if max_abs(m_ref @ x - m_tgt) > 1e-9:
        raise PreconditionFailed("no local unitary on the second factor maps the dummy onto this state")
    return x.T


def dummy_swap_attack(protocol: Protocol, tol: float = EPS_CLASS) -> AttackChannel:
    """Forward a dummy instead of the real first subsystem, fix it up later.

    Eve prepares a dummy pair (E3, E4) in the first catalog state and in
    round 1 swaps A1 with E3, so Bob receives E3. Its reduced state equals
    the real one because all first-subsystem reductions coincide. In round
    2 Eve holds the genuine pair (A1, A2) and knows which catalog state it
    is; she rotates E4 so (E3, E4) becomes that state and forwards E4 in
    place of A2.
    """
    fam = [partial_trace(s, {1}) for s in protocol.states]
    if not all(is_identical(fam[0], r, tol) for r in fam[1:]):
        raise PreconditionFailed("first-subsystem reductions are not identical")
    if any(p is None for p in protocol.pure):
        raise PreconditionFailed("dummy swap needs pure catalog states")
    d1, d2 = protocol.dims
    ref = protocol.pure[0].amplitudes

    # round 1 on (A1, E3, E4): exchange A1 and E3
    r1 = embed_operator(_swap(d1), (d1, d1, d2), (0, 1))

    # round 2 on (A2, E3, E4); E3 now holds the genuine A1
    local = (d2, d1, d2)
    w = np.eye(d1 * d2 * d2, dtype=complex)
    for p in protocol.pure:
        proj = embed_operator(np.outer(p.amplitudes, p.amplitudes.conj()), local, (1, 0))
        fix = embed_operator(_local_fix(ref, p.amplitudes, (d1, d2)), local, (2,))
        w = w + proj @ fix - proj
    r2 = embed_operator(_swap(d2), local, (0, 2)) @ w

    return AttackChannel(
        "dummy-swap", (d1, d2), PureState((d1, d2), ref), r1, r2,
        copy_register=None, mechanism=Mechanism.DUMMY_SWAP,
    )


def measure_both_attack(protocol: Protocol, tol: float = EPS_CLASS) -> AttackChannel:
    """Record a non-disturbing measurement of each subsystem in its own register.

    Round 1 copies the outcome on A1 into register E1, round 2 the outcome on
    A2 into E2. Nothing Bob receives changes.
    """
    found = sequential_readout(protocol.state_set(), tol)
    if found is None:
        raise PreconditionFailed("no pair of non-disturbing measurements identifies every state")
    p1, p2 = found
    k1, k2 = len(p1), len(p2)
    r1 = embed_operator(copy_unitary(p1, k1), (protocol.dims[0], k1, k2), (0, 1))
    r2 = embed_operator(copy_unitary(p2, k2), (protocol.dims[1], k1, k2), (0, 2))
    return AttackChannel(
        "measure-both", (k1, k2), _ancilla((k1, k2)), r1, r2, mechanism=Mechanism.MEASURE_BOTH,
    )


def mechanism_attack(protocol: Protocol, mechanism: Mechanism) -> AttackChannel:
    """The attack realizing a clonability mechanism on ``protocol``."""
    if mechanism is Mechanism.DUMMY_SWAP:
        return dummy_swap_attack(protocol)
    if mechanism is Mechanism.MEASURE_BOTH:
        return measure_both_attack(protocol)
    sub = 1 if mechanism is Mechanism.MEASURE_FIRST else 2
    return support_copy_attack([partial_trace(s, {sub}) for s in protocol.states], round=sub)


def _near_identity(dim: int, eps: float, rng: np.random.Generator) -> np.ndarray:
    h = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = h + dagger(h)
    h /= np.linalg.norm(h, 2)
    w, v = eig_hermitian(h)
    return (v * np.exp(1j * eps * w)) @ dagger(v)


def random_attack(rng: np.random.Generator, ancilla_dim: int = 2, kind: str = "haar", eps: float = 1e-3) -> AttackChannel:
    """Random two-round attack on a qubit pair.

    kinds: ``haar`` (both rounds Haar random), ``near-identity`` (both rounds
    exp(i eps H) with ||H|| = 1), ``ancilla-only`` (random unitaries that
    never couple to the system).
    """
    dim = 2 * ancilla_dim
    if kind == "haar":
        u1, u2 = haar_unitary(dim, rng), haar_unitary(dim, rng)
    elif kind == "near-identity":
        u1, u2 = _near_identity(dim, eps, rng), _near_identity(dim, eps, rng)
    elif kind == "ancilla-only":
        u1 = np.kron(np.eye(2), haar_unitary(ancilla_dim, rng))
        u2 = np.kron(np.eye(2), haar_unitary(ancilla_dim, rng))
    else:
        raise InvalidArgument(f"unknown random attack kind {kind!r}")
    return AttackChannel(
        "random", (ancilla_dim,), _ancilla((ancilla_dim,)), u1, u2,
        params={"kind": kind, "eps": float(eps)} if kind == "near-identity" else {"kind": kind},
    )


def random_attack_suite(seed: int, n: int = 200, ancilla_dim: int = 2) -> list[AttackChannel]:
    """Seeded mixture of Haar, near-identity (eps from 1e-6 to 1e-1) and ancilla-only attacks."""
    rng = np.random.default_rng(seed)
    eps_grid = np.logspace(-6, -1, 11)
    out = []
    for i in range(n):
        kind = ("haar", "near-identity", "ancilla-only")[i % 3]
        out.append(random_attack(rng, ancilla_dim, kind, float(eps_grid[i % len(eps_grid)])))
    return out


ATTACK_NAMES = ("identity", "intercept", "broadcast", "dummy-swap", "measure-second", "measure-both")


def make_attack(name: str, protocol: Protocol, basis_angle: float = 0.0, round: int = 1) -> AttackChannel:
    """Build an attack from its CLI name against ``protocol``."""
    if name == "identity":
        return identity_attack()
    if name == "intercept":
        return intercept_resend(BasisSpec(basis_angle), round)
    if name == "measure-second":
        return measure_second_attack(BasisSpec(basis_angle))
    if name == "broadcast":
        return broadcast_attack([partial_trace(s, {1}) for s in protocol.states])
    if name == "dummy-swap":
        return dummy_swap_attack(protocol)
    if name == "measure-both":
        return measure_both_attack(protocol)
    raise InvalidArgument(f"unknown attack {name!r}; valid: {', '.join(ATTACK_NAMES)}")
