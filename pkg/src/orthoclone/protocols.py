"""Catalog of two-qubit key distribution schemes built from orthogonal states.

Every scheme sends a two-qubit composite, first qubit first. Labels "0"
and "1" carry the key bit; label "2", when present, is a check state that
is never used for key and only exposes tampering.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from itertools import combinations
from math import cos, pi, sin, sqrt

import numpy as np

from .cloneability import StateSet
from .errors import InvalidArgument
from .qlinalg import EPS_EQ, DensityMatrix, PureState, is_orthogonal, ket, max_abs

DIMS = (2, 2)
INCONCLUSIVE = None


class Scheme(str, enum.Enum):
    KOASHI_IMOTO = "KOASHI_IMOTO"
    GV_THREE_STATE = "GV_THREE_STATE"
    BB84_COMPOSITE = "BB84_COMPOSITE"
    MINIMAL_PURE = "MINIMAL_PURE"
    MINIMAL_MIXED = "MINIMAL_MIXED"


CLI_NAMES = {
    "ki": Scheme.KOASHI_IMOTO,
    "gv": Scheme.GV_THREE_STATE,
    "bb84": Scheme.BB84_COMPOSITE,
    "minimal-pure": Scheme.MINIMAL_PURE,
    "minimal-mixed": Scheme.MINIMAL_MIXED,
}


@dataclass(frozen=True)
class BasisSpec:
    """Qubit basis cos(t)|0> + sin(t)|1>, -sin(t)|0> + cos(t)|1>."""

    angle: float

    @classmethod
    def z(cls) -> "BasisSpec":
        return cls(0.0)

    @classmethod
    def x(cls) -> "BasisSpec":
        return cls(pi / 4)

    @classmethod
    def breidbart(cls) -> "BasisSpec":
        return cls(pi / 8)

    @property
    def vectors(self) -> tuple[np.ndarray, np.ndarray]:
        c, s = cos(self.angle), sin(self.angle)
        return np.array([c, s], dtype=complex), np.array([-s, c], dtype=complex)

    @property
    def matrix(self) -> np.ndarray:
        """Unitary whose columns are the basis vectors."""
        return np.column_stack(self.vectors)


@dataclass(frozen=True)
class Outcome:
    projector: np.ndarray
    label: str | None  # None marks an inconclusive (rejected) result


@dataclass(frozen=True)
class Protocol:
    name: Scheme
    labels: tuple[str, ...]
    key_labels: tuple[str, ...]
    check_labels: tuple[str, ...]
    states: tuple[DensityMatrix, ...]
    pure: tuple[PureState | None, ...]
    decode: tuple[Outcome, ...]
    params: dict = field(default_factory=dict)
    # constant applied to unnormalized mixtures, per label
    normalization: dict = field(default_factory=dict)
    dims: tuple[int, ...] = DIMS

    def __post_init__(self):
        for a, b in combinations(range(len(self.states)), 2):
            if not is_orthogonal(self.states[a], self.states[b]):
                raise InvalidArgument(f"{self.name.value}: states {self.labels[a]} and {self.labels[b]} overlap")
        projs = [o.projector for o in self.decode]
        if max_abs(sum(projs) - np.eye(self.dim)) > EPS_EQ:
            raise InvalidArgument(f"{self.name.value}: decode projectors do not sum to identity")
        for p, q in combinations(projs, 2):
            if max_abs(p @ q) > EPS_EQ:
                raise InvalidArgument(f"{self.name.value}: decode projectors are not mutually orthogonal")

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def title(self) -> str:
        if self.name is Scheme.KOASHI_IMOTO:
            return f"KOASHI_IMOTO(alpha={self.params['alpha']:.12g})"
        return self.name.value

    def encode(self, label: str) -> DensityMatrix:
        try:
            return self.states[self.labels.index(str(label))]
        except ValueError:
            raise InvalidArgument(f"{self.name.value} has no label {label!r}; labels are {self.labels}") from None

    def pure_state(self, label: str) -> PureState | None:
        return self.pure[self.labels.index(str(label))]

    def decode_distribution(self, rho) -> dict:
        """Outcome label -> probability for Bob's measurement; key None collects rejects."""
        m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
        dist: dict = {}
        for o in self.decode:
            p = float(np.real(np.trace(o.projector @ m)))
            dist[o.label] = dist.get(o.label, 0.0) + p
        return dist

    def state_set(self) -> StateSet:
        return StateSet(self.dims, self.labels, self.states, (1, 2), self.pure)


def _proj(v: np.ndarray) -> np.ndarray:
    return np.outer(v, v.conj())


def _with_rest(outcomes: list[Outcome], dim: int) -> tuple[Outcome, ...]:
    rest = np.eye(dim, dtype=complex) - sum(o.projector for o in outcomes)
    if max_abs(rest) > EPS_EQ:
        outcomes = outcomes + [Outcome(rest, INCONCLUSIVE)]
    return tuple(outcomes)


def _pure_protocol(name, vectors: dict, key, check, params=None) -> Protocol:
    pure = tuple(PureState(DIMS, v) for v in vectors.values())
    decode = _with_rest([Outcome(_proj(p.amplitudes), lab) for lab, p in zip(vectors, pure)], 4)
    return Protocol(
        name, tuple(vectors), tuple(key), tuple(check),
        tuple(p.to_density() for p in pure), pure, decode, params or {},
    )


def ki_vectors(alpha: float) -> tuple[np.ndarray, np.ndarray]:
    c, s = cos(alpha), sin(alpha)
    k01, k10 = ket(DIMS, (0, 1)), ket(DIMS, (1, 0))
    return c * k01 + s * k10, s * k01 - c * k10


def make_koashi_imoto(alpha: float) -> Protocol:
    """Two entangled orthogonal states; the angle is known to everyone."""
    if not -1e-12 <= alpha <= pi / 2 + 1e-12:
        raise InvalidArgument(f"alpha={alpha} outside [0, pi/2]")
    psi0, psi1 = ki_vectors(alpha)
    return _pure_protocol(Scheme.KOASHI_IMOTO, {"0": psi0, "1": psi1}, ["0", "1"], [], {"alpha": float(alpha)})


def make_gv() -> Protocol:
    psi0, psi1 = ki_vectors(pi / 4)
    vac = ket(DIMS, (0, 0))
    return _pure_protocol(Scheme.GV_THREE_STATE, {"0": psi0, "1": psi1, "2": vac}, ["0", "1"], ["2"])


def _qubit_x() -> tuple[np.ndarray, np.ndarray]:
    return BasisSpec.x().vectors[0], -BasisSpec.x().vectors[1]


def make_bb84_composite() -> Protocol:
    """Four-state scheme with the preparation basis stored in the second qubit.

    Each key value is the equal mixture of its z and x preparations. Bob
    reads the basis from qubit 2 and then measures qubit 1 in that basis.
    """
    z0, z1 = np.eye(2, dtype=complex)
    x0, x1 = _qubit_x()
    phi = {
        "0z": np.kron(z0, z0), "0x": np.kron(x0, z1),
        "1z": np.kron(z1, z0), "1x": np.kron(x1, z1),
    }
    chi0 = 0.5 * (_proj(phi["0z"]) + _proj(phi["0x"]))
    chi1 = 0.5 * (_proj(phi["1z"]) + _proj(phi["1x"]))
    decode = tuple(Outcome(_proj(phi[k]), k[0]) for k in ("0z", "1z", "0x", "1x"))
    return Protocol(
        Scheme.BB84_COMPOSITE, ("0", "1"), ("0", "1"), (),
        (DensityMatrix(DIMS, chi0), DensityMatrix(DIMS, chi1)), (None, None), decode,
        normalization={"0": 0.5, "1": 0.5},
    )


def make_minimal(variant: str = "PURE") -> Protocol:
    """Two product key states |00>, |10> guarded by a check state on the x basis.

    PURE uses |+,1> as the check state, MIXED the equal mixture of |+,1> and
    |-,1>. Bob projects onto each catalog state; the remainder is rejected.
    """
    variant = variant.upper()
    z0, z1 = np.eye(2, dtype=complex)
    x0, x1 = _qubit_x()
    k0, k1 = np.kron(z0, z0), np.kron(z1, z0)
    if variant == "PURE":
        return _pure_protocol(Scheme.MINIMAL_PURE, {"0": k0, "1": k1, "2": np.kron(x0, z1)}, ["0", "1"], ["2"])
    if variant != "MIXED":
        raise InvalidArgument(f"unknown minimal variant {variant!r}; expected PURE or MIXED")
    chi2 = 0.5 * (_proj(np.kron(x0, z1)) + _proj(np.kron(x1, z1)))
    pure0, pure1 = PureState(DIMS, k0), PureState(DIMS, k1)
    decode = (
        Outcome(_proj(k0), "0"),
        Outcome(_proj(k1), "1"),
        Outcome(2.0 * chi2, "2"),
        Outcome(np.eye(4) - _proj(k0) - _proj(k1) - 2.0 * chi2, INCONCLUSIVE),
    )
    decode = tuple(o for o in decode if max_abs(o.projector) > EPS_EQ)
    return Protocol(
        Scheme.MINIMAL_MIXED, ("0", "1", "2"), ("0", "1"), ("2",),
        (pure0.to_density(), pure1.to_density(), DensityMatrix(DIMS, chi2)),
        (pure0, pure1, None), decode, normalization={"2": 0.5},
    )


def make_protocol(name: str, alpha: float | None = None) -> Protocol:
    """Build a catalog protocol from its CLI name."""
    scheme = CLI_NAMES.get(name)
    if scheme is None:
        raise InvalidArgument(f"unknown protocol {name!r}; valid: {', '.join(CLI_NAMES)}")
    if scheme is Scheme.KOASHI_IMOTO:
        if alpha is None:
            raise InvalidArgument("protocol ki needs --alpha")
        return make_koashi_imoto(alpha)
    if scheme is Scheme.GV_THREE_STATE:
        return make_gv()
    if scheme is Scheme.BB84_COMPOSITE:
        return make_bb84_composite()
    return make_minimal("PURE" if scheme is Scheme.MINIMAL_PURE else "MIXED")


def catalog() -> dict[str, Protocol]:
    """One instance of every scheme, with the angle cases that matter for the two-state scheme."""
    return {
        "ki(0)": make_koashi_imoto(0.0),
        "ki(pi/6)": make_koashi_imoto(pi / 6),
        "ki(pi/4)": make_koashi_imoto(pi / 4),
        "ki(pi/2)": make_koashi_imoto(pi / 2),
        "gv": make_gv(),
        "bb84": make_bb84_composite(),
        "minimal-pure": make_minimal("PURE"),
        "minimal-mixed": make_minimal("MIXED"),
    }


BREIDBART_COS2 = (1 + 1 / sqrt(2)) / 2
