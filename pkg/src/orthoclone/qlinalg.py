"""Dense complex linear algebra for small tensor-factored Hilbert spaces.

Subsystems are numbered from 1 (A1, A2, ...). Basis ordering is big-endian
over the dims list: the first factor is the most significant index, so for
``dims = (2, 2)`` the basis runs |00>, |01>, |10>, |11>.
"""
from __future__ import annotations

from dataclasses import InitVar, dataclass
from itertools import combinations
from math import pi, prod
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, InvalidArgument, InvalidState, NonCommutingFamily, NotHermitian

EPS_EQ = 1e-10
EPS_CLASS = 1e-9

MAX_DIM = 256


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite operator on ``prod(dims)``."""

    dims: tuple[int, ...]
    matrix: np.ndarray
    check: InitVar[bool] = True

    def __post_init__(self, check: bool) -> None:
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise InvalidArgument(f"bad dims {self.dims!r}")
        m = _frozen(self.matrix)
        D = prod(dims)
        if m.shape != (D, D):
            raise DimensionMismatch(f"matrix shape {m.shape} does not match dims {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", m)
        if check:
            validate_density(m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_matrix(cls, matrix, dims: Sequence[int] | None = None, check: bool = True) -> "DensityMatrix":
        matrix = np.asarray(matrix, dtype=complex)
        return cls(tuple(dims) if dims is not None else (matrix.shape[0],), matrix, check)

    def allclose(self, other: "DensityMatrix", tol: float = EPS_EQ) -> bool:
        return self.dims == other.dims and max_abs(self.matrix - other.matrix) <= tol

    def __repr__(self) -> str:
        return f"DensityMatrix(dims={self.dims}, matrix=\n{np.round(self.matrix, 6)})"


@dataclass(frozen=True, eq=False)
class PureState:
    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        v = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if v.shape[0] != prod(dims):
            raise DimensionMismatch(f"{v.shape[0]} amplitudes do not match dims {dims}")
        if abs(np.linalg.norm(v) - 1.0) > EPS_EQ:
            raise InvalidState(f"state vector has norm {np.linalg.norm(v):.3g}, expected 1")
        v.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", v)

    @classmethod
    def normalized(cls, dims: Sequence[int], amplitudes) -> "PureState":
        v = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(tuple(dims), v / np.linalg.norm(v))

    def to_density(self) -> DensityMatrix:
        v = self.amplitudes
        return DensityMatrix(self.dims, np.outer(v, v.conj()), check=False)


State = Union[DensityMatrix, np.ndarray]


def _mat(x) -> np.ndarray:
    if isinstance(x, DensityMatrix):
        return x.matrix
    if isinstance(x, PureState):
        return x.to_density().matrix
    return np.asarray(x, dtype=complex)


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")


def max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(a))


# --- tensor structure -------------------------------------------------------

def tensor(a, b):
    """Kronecker product. Density matrices keep their factor structure."""
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(a.dims + b.dims, np.kron(a.matrix, b.matrix), check=False)
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(a.dims + b.dims, np.kron(a.amplitudes, b.amplitudes))
    return np.kron(_mat(a), _mat(b))


def ket(dims: Sequence[int], digits: Sequence[int]) -> np.ndarray:
    """Computational basis vector |digits> over ``dims``."""
    v = np.zeros(prod(dims), dtype=complex)
    v[int(np.ravel_multi_index(tuple(digits), tuple(dims)))] = 1.0
    return v


def ptrace_matrix(matrix: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Partial trace on a raw matrix; ``keep`` holds zero-based factor indices."""
    dims = list(dims)
    n = len(dims)
    keep = sorted(set(keep))
    t = np.asarray(matrix).reshape(dims + dims)
    # trace from the highest factor down so lower axis numbers stay valid
    for i in sorted(set(range(n)) - set(keep), reverse=True):
        cur = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=i + cur)
    dk = prod(dims[i] for i in keep)
    return t.reshape(dk, dk)


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state on the subsystems in ``keep`` (numbered from 1, kept in ascending order)."""
    keep = set(keep)
    n = len(rho.dims)
    if not keep or len(keep) >= n or not keep <= set(range(1, n + 1)):
        raise InvalidArgument(f"keep={sorted(keep)} must be a nonempty proper subset of 1..{n}")
    keep0 = sorted(k - 1 for k in keep)
    m = ptrace_matrix(rho.matrix, rho.dims, keep0)
    return DensityMatrix(tuple(rho.dims[i] for i in keep0), m, check=False)


def embed_operator(op: np.ndarray, dims: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """Lift ``op`` acting on factors ``targets`` (zero-based, in that order) to the full space."""
    dims = [int(d) for d in dims]
    n = len(dims)
    targets = list(targets)
    if len(set(targets)) != len(targets) or not all(0 <= t < n for t in targets):
        raise InvalidArgument(f"bad target factors {targets} for dims {dims}")
    dt = prod(dims[t] for t in targets)
    if op.shape != (dt, dt):
        raise DimensionMismatch(f"operator shape {op.shape} does not match target dimension {dt}")
    rest = [i for i in range(n) if i not in targets]
    order = targets + rest
    big = np.kron(op, np.eye(prod(dims[i] for i in rest), dtype=complex))
    pdims = [dims[i] for i in order]
    inv = list(np.argsort(order))
    D = prod(dims)
    return big.reshape(pdims + pdims).transpose(inv + [n + i for i in inv]).reshape(D, D)


# --- eigensolver ------------------------------------------------------------

def eig_hermitian(m, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic complex Jacobi eigensolver.

    Returns eigenvalues sorted descending and a unitary whose columns are the
    matching eigenvectors. Each eigenvector is rephased so that its
    largest-magnitude component is real and positive.
    """
    a = np.array(_mat(m), dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n > MAX_DIM:
        raise InvalidArgument(f"dimension {n} exceeds {MAX_DIM}")
    scale = max(1.0, float(np.linalg.norm(a)))
    if max_abs(a - dagger(a)) > EPS_EQ * scale:
        raise NotHermitian(f"matrix is not Hermitian (deviation {max_abs(a - dagger(a)):.3g})")
    a = 0.5 * (a + dagger(a))
    v = np.eye(n, dtype=complex)
    skip = 1e-13 * scale / max(n, 1)

    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off < tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= skip:
                    continue
                phase = apq / mag
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = dagger(rot) @ a[idx, :]
                v[:, idx] = v[:, idx] @ rot
                a[p, q] = a[q, p] = 0.0

    w = np.real(np.diag(a)).copy()
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    for j in range(n):
        k = int(np.argmax(np.abs(v[:, j])))
        v[:, j] *= abs(v[k, j]) / v[k, j]
    return w, v


def eigvals_hermitian(m) -> np.ndarray:
    return eig_hermitian(m)[0]


def sqrtm_psd(m) -> np.ndarray:
    w, v = eig_hermitian(m)
    # rounding noise on null eigenvalues would otherwise be amplified by the root
    w = np.where(w > 1e-14 * max(1.0, w[0]), w, 0.0)
    return (v * np.sqrt(w)) @ dagger(v)


def validate_density(m: np.ndarray, tol: float = EPS_EQ) -> None:
    if max_abs(m - dagger(m)) > tol:
        raise InvalidState(f"density matrix is not Hermitian (deviation {max_abs(m - dagger(m)):.3g})")
    tr = np.trace(m)
    if abs(tr - 1.0) > tol:
        raise InvalidState(f"density matrix trace is {tr.real:.12g}, expected 1")
    lam = eig_hermitian(m)[0][-1]
    if lam < -tol:
        raise InvalidState(f"density matrix has negative eigenvalue {lam:.3g}")


def is_density(m, tol: float = EPS_EQ) -> bool:
    try:
        validate_density(_mat(m), tol)
    except InvalidState:
        return False
    return True


# --- comparison functionals -------------------------------------------------

def overlap(rho, sigma) -> float:
    """Hilbert-Schmidt overlap Tr(rho sigma)."""
    a, b = _mat(rho), _mat(sigma)
    _same_dim(a, b)
    return float(np.real(np.sum(a * b.T)))


def is_orthogonal(rho, sigma, tol: float = EPS_CLASS) -> bool:
    return overlap(rho, sigma) <= tol


def is_identical(rho, sigma, tol: float = EPS_CLASS) -> bool:
    a, b = _mat(rho), _mat(sigma)
    _same_dim(a, b)
    return max_abs(a - b) <= tol


def commutes(rho, sigma, tol: float = EPS_CLASS) -> bool:
    a, b = _mat(rho), _mat(sigma)
    _same_dim(a, b)
    return max_abs(a @ b - b @ a) <= tol


def _blocks(w: np.ndarray, tol: float) -> list[list[int]]:
    out = [[0]]
    for i in range(1, len(w)):
        if abs(w[i] - w[out[-1][0]]) <= tol:
            out[-1].append(i)
        else:
            out.append([i])
    return out


def common_eigenbasis(family: Sequence[np.ndarray], tol: float = EPS_CLASS) -> np.ndarray:
    """Unitary diagonalizing every member of a commuting family.

    The weighted sum with powers of pi as weights is diagonalized first;
    blocks that stay degenerate are refined with each member in turn.
    """
    mats = [np.asarray(getattr(m, "matrix", m), dtype=complex) for m in family]
    for a, b in combinations(mats, 2):
        if not commutes(a, b, tol):
            raise NonCommutingFamily("family members do not commute")
    w, v = eig_hermitian(sum(pi ** k * m for k, m in enumerate(mats)))
    groups = [v[:, b] for b in _blocks(w, tol)]
    for m in mats:
        refined = []
        for g in groups:
            if g.shape[1] == 1:
                refined.append(g)
                continue
            wg, vg = eig_hermitian(dagger(g) @ m @ g)
            g = g @ vg
            refined.extend(g[:, b] for b in _blocks(wg, tol))
        groups = refined
    return np.column_stack(groups)


def trace_norm(m) -> float:
    return float(np.sum(np.abs(eig_hermitian(m)[0])))


def trace_distance(rho, sigma) -> float:
    a, b = _mat(rho), _mat(sigma)
    _same_dim(a, b)
    return min(1.0, 0.5 * trace_norm(a - b))


def fidelity_pure(rho, psi) -> float:
    """<psi|rho|psi> for a pure reference state."""
    a = _mat(rho)
    v = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi, dtype=complex)
    if a.shape[0] != v.shape[0]:
        raise DimensionMismatch(f"state dimension {a.shape[0]} vs vector length {v.shape[0]}")
    return float(np.clip(np.real(np.vdot(v, a @ v)), 0.0, 1.0))


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ||sqrt(rho) sqrt(sigma)||_1^2."""
    a, b = _mat(rho), _mat(sigma)
    _same_dim(a, b)
    sv = np.linalg.svd(sqrtm_psd(a) @ sqrtm_psd(b), compute_uv=False)
    return float(np.clip(np.sum(sv) ** 2, 0.0, 1.0))


def helstrom_guess(rho_a, rho_b, prior: float = 0.5) -> float:
    """Optimal probability of telling rho_a (prior) from rho_b (1 - prior)."""
    if not 0.0 <= prior <= 1.0:
        raise InvalidArgument(f"prior {prior} outside [0, 1]")
    a, b = _mat(rho_a), _mat(rho_b)
    _same_dim(a, b)
    return min(1.0, 0.5 + 0.5 * trace_norm(prior * a - (1.0 - prior) * b))


def helstrom_projector(rho_a, rho_b, prior: float = 0.5) -> np.ndarray:
    """Projector onto the positive part of prior*rho_a - (1-prior)*rho_b (guess "a")."""
    w, v = eig_hermitian(prior * _mat(rho_a) - (1.0 - prior) * _mat(rho_b))
    pos = v[:, w > 0]
    return pos @ dagger(pos)


# --- random objects (tests and random attacks) ------------------------------

def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    g = rng.standard_normal((dim, rank or dim)) + 1j * rng.standard_normal((dim, rank or dim))
    m = g @ dagger(g)
    return m / np.trace(m).real


def random_pure(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)
