"""Sequential-delivery engine: Alice prepares, Eve acts in two rounds, Bob decodes.

The global state lives on (A1, A2, ancilla...) as one dense density
matrix. Released subsystems stay in the global state; they are protected
by construction because round unitaries are only ever embedded on the
factors the schedule allows.
"""
from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .adversary import AttackChannel
from .cloneability import CloneVerdict, Verdict, classify_set
from .errors import DimensionMismatch, EngineError, InvalidArgument, ScheduleViolation
from .protocols import Protocol, make_koashi_imoto
from .qlinalg import (
    EPS_EQ,
    DensityMatrix,
    dagger,
    eig_hermitian,
    embed_operator,
    fidelity,
    fidelity_pure,
    helstrom_guess,
    helstrom_projector,
    max_abs,
    ptrace_matrix,
)

log = logging.getLogger(__name__)

PERFECT = 1e-9


class Event(str, enum.Enum):
    A1_TO_EVE = "A1->Eve"
    A1_TO_BOB = "A1->Bob"
    A2_TO_EVE = "A2->Eve"
    A2_TO_BOB = "A2->Bob"


@dataclass(frozen=True)
class Schedule:
    events: tuple[Event, ...]
    # Bob must hold A1 before A2 leaves Alice
    require_first_delivered: bool = True

    def validate(self) -> None:
        ev = list(self.events)
        if sorted(ev) != sorted(Event):
            raise ScheduleViolation(f"schedule must contain each delivery exactly once, got {[e.value for e in ev]}")
        pos = {e: i for i, e in enumerate(ev)}
        if pos[Event.A1_TO_EVE] > pos[Event.A1_TO_BOB] or pos[Event.A2_TO_EVE] > pos[Event.A2_TO_BOB]:
            raise ScheduleViolation("every subsystem passes Eve before it reaches Bob")
        if self.require_first_delivered and pos[Event.A1_TO_BOB] > pos[Event.A2_TO_EVE]:
            raise ScheduleViolation("A2 was sent before Bob confirmed receipt of A1")


SEQUENTIAL = Schedule((Event.A1_TO_EVE, Event.A1_TO_BOB, Event.A2_TO_EVE, Event.A2_TO_BOB))


@dataclass(frozen=True)
class RunTrace:
    """Global states after each stage of one run."""

    dims: tuple[int, ...]
    stages: tuple[tuple[str, np.ndarray], ...]
    bob: DensityMatrix
    eve: DensityMatrix
    # what Bob holds right after A1 is released (before round 2)
    bob_first: DensityMatrix


def check_state(m: np.ndarray, where: str, tol: float = EPS_EQ) -> None:
    tr = np.trace(m)
    if abs(tr - 1.0) > tol:
        raise EngineError(f"{where}: trace {tr.real:.12g} deviates from 1")
    if max_abs(m - dagger(m)) > tol:
        raise EngineError(f"{where}: state is not Hermitian")
    lam = eig_hermitian(m)[0][-1]
    if lam < -tol:
        raise EngineError(f"{where}: negative eigenvalue {lam:.3g}")


def wire(protocol: Protocol, attack: AttackChannel) -> tuple[tuple[int, ...], np.ndarray, np.ndarray]:
    """Global dims and the two round unitaries lifted to the global space.

    Scopes are checked here, before anything runs: round 1 may only touch
    A1, round 2 only A2.
    """
    s1, s2 = (tuple(s) for s in attack.scopes)
    if s1 != (1,):
        raise ScheduleViolation(f"round 1 of {attack.name!r} touches {s1}; only A1 has arrived")
    if s2 != (2,):
        raise ScheduleViolation(f"round 2 of {attack.name!r} touches {s2}; A1 has already been released")
    d1, d2 = protocol.dims
    dims = tuple(protocol.dims) + attack.ancilla_dims
    anc = list(range(2, len(dims)))
    da = int(np.prod(attack.ancilla_dims)) if attack.ancilla_dims else 1
    D = int(np.prod(dims))
    lifted = []
    for k, (u, sub, dk) in enumerate(((attack.round1, 0, d1), (attack.round2, 1, d2)), start=1):
        if u is None:
            lifted.append(np.eye(D, dtype=complex))
            continue
        if u.shape != (dk * da, dk * da):
            raise DimensionMismatch(
                f"round {k} unitary has shape {u.shape}; A{k} x ancilla needs {(dk * da, dk * da)}"
            )
        lifted.append(embed_operator(u, dims, [sub] + anc))
    return dims, lifted[0], lifted[1]


def run_trace(
    protocol: Protocol, attack: AttackChannel, label: str, schedule: Schedule = SEQUENTIAL, check: bool = True
) -> RunTrace:
    schedule.validate()
    if schedule.events != SEQUENTIAL.events:
        raise ScheduleViolation("the engine only executes the sequential delivery order")
    dims, u1, u2 = wire(protocol, attack)
    rho = protocol.encode(label).matrix
    if attack.ancilla_dims:
        e = attack.ancilla_init.amplitudes
        rho = np.kron(rho, np.outer(e, e.conj()))
    stages = [("prepared", rho)]
    rho = u1 @ rho @ dagger(u1)
    stages.append(("round1", rho))
    bob_first = ptrace_matrix(rho, dims, [0])
    rho = u2 @ rho @ dagger(u2)
    stages.append(("round2", rho))
    if check:
        for name, m in stages:
            check_state(m, f"{protocol.title}/{attack.name}/label {label}/{name}")
    bob = ptrace_matrix(rho, dims, [0, 1])
    if attack.ancilla_dims:
        eve = DensityMatrix(attack.ancilla_dims, ptrace_matrix(rho, dims, range(2, len(dims))), check=False)
    else:
        eve = DensityMatrix((1,), np.ones((1, 1)), check=False)
    return RunTrace(
        dims, tuple(stages),
        DensityMatrix(protocol.dims, bob, check=False), eve,
        DensityMatrix((protocol.dims[0],), bob_first, check=False),
    )


def run(protocol: Protocol, attack: AttackChannel, label: str, schedule: Schedule = SEQUENTIAL) -> tuple[DensityMatrix, DensityMatrix]:
    """Bob's (A1, A2) state and Eve's ancilla state after one transmission of ``label``."""
    t = run_trace(protocol, attack, label, schedule)
    return t.bob, t.eve


@dataclass
class LabelStats:
    fidelity: float
    error: float  # P(conclusive and wrong)
    reject: float  # P(inconclusive)

    @property
    def error_rate(self) -> float:
        """Error probability given a conclusive outcome."""
        conclusive = 1.0 - self.reject
        return self.error / conclusive if conclusive > 1e-15 else 0.0


@dataclass
class RunReport:
    protocol: str
    protocol_params: dict
    attack: str
    attack_params: dict
    labels: dict[str, LabelStats]
    key_labels: tuple[str, ...]
    check_labels: tuple[str, ...]
    qber: float
    reject_rate: float
    check_error_rate: float | None
    weighted_error_rate: float
    eve_guess: float
    disturbance: float
    verdict: CloneVerdict
    verdict_crosscheck: bool
    notes: list[str] = field(default_factory=list)

    @property
    def min_fidelity(self) -> float:
        return min(s.fidelity for s in self.labels.values())

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "protocol_params": self.protocol_params,
            "attack": self.attack,
            "attack_params": self.attack_params,
            "labels": {
                k: {"fidelity": s.fidelity, "error_rate": s.error_rate, "reject_rate": s.reject,
                    "role": "key" if k in self.key_labels else "check"}
                for k, s in self.labels.items()
            },
            "qber": self.qber,
            "reject_rate": self.reject_rate,
            "check_error_rate": self.check_error_rate,
            "weighted_error_rate": self.weighted_error_rate,
            "eve_guess": self.eve_guess,
            "disturbance": self.disturbance,
            "verdict": self.verdict.to_dict(),
            "verdict_crosscheck": self.verdict_crosscheck,
            "notes": list(self.notes),
        }


def _clamp(p: float, what: str) -> float:
    if not -1e-12 <= p <= 1 + 1e-12:
        raise EngineError(f"{what} = {p!r} is not a probability")
    # below double precision for a probability
    return 0.0 if p < 1e-15 else min(1.0, p)


def _label_stats(protocol: Protocol, label: str, bob: DensityMatrix) -> LabelStats:
    psi = protocol.pure_state(label)
    f = fidelity_pure(bob, psi) if psi is not None else fidelity(bob, protocol.encode(label))
    dist = protocol.decode_distribution(bob)
    reject = _clamp(dist.get(None, 0.0), "reject probability")
    error = _clamp(sum(p for k, p in dist.items() if k is not None and k != label), "error probability")
    return LabelStats(f, error, reject)


def eve_guess_from(eve_states: dict[str, DensityMatrix], key_labels: Sequence[str]) -> float:
    """Mean pairwise Helstrom guess over the key labels, equal priors."""
    pairs = list(combinations(key_labels, 2))
    if not pairs:
        return 1.0
    return float(np.mean([helstrom_guess(eve_states[a], eve_states[b]) for a, b in pairs]))


def crosscheck(verdict: CloneVerdict, attack: AttackChannel, eve_guess: float, disturbance: float) -> bool:
    """False when the attack outcome contradicts the clonability verdict."""
    perfect = eve_guess >= 1 - PERFECT and disturbance <= PERFECT
    if perfect and verdict.verdict is Verdict.NOT_CLONABLE:
        return False
    if verdict.clonable and attack.mechanism is not None and attack.mechanism is verdict.mechanism:
        return perfect
    return True


def report(protocol: Protocol, attack: AttackChannel, check_fraction: float = 0.25) -> RunReport:
    if not 0.0 <= check_fraction <= 1.0:
        raise InvalidArgument(f"check_fraction {check_fraction} outside [0, 1]")
    stats, eve = {}, {}
    for lab in protocol.labels:
        bob, eve[lab] = run(protocol, attack, lab)
        stats[lab] = _label_stats(protocol, lab, bob)

    keys = protocol.key_labels
    conclusive = sum(1.0 - stats[k].reject for k in keys)
    qber = sum(stats[k].error for k in keys) / conclusive if conclusive > 1e-15 else 0.0
    reject_rate = float(np.mean([stats[k].reject for k in keys]))
    check_err = None
    weighted = qber
    if protocol.check_labels:
        check_err = float(np.mean([stats[c].error + stats[c].reject for c in protocol.check_labels]))
        weighted = (1 - check_fraction) * qber + check_fraction * check_err
    guess = eve_guess_from(eve, keys)
    disturbance = 1.0 - min(s.fidelity for s in stats.values())
    disturbance = 0.0 if disturbance < 1e-15 else disturbance
    verdict = classify_set(protocol.state_set())
    return RunReport(
        protocol.name.value, dict(protocol.params), attack.name, dict(attack.params),
        stats, keys, protocol.check_labels,
        qber, reject_rate, check_err, weighted, guess, disturbance,
        verdict, crosscheck(verdict, attack, guess, disturbance),
    )


AttackSpec = Union[AttackChannel, Callable[[Protocol], AttackChannel]]


def sweep(alphas: Iterable[float], attack: AttackSpec, workers: int = 1) -> list[RunReport]:
    """One report per angle of the two-state entangled scheme.

    ``attack`` is either a fixed channel or a factory called with each
    protocol (needed for attacks that depend on the states, like broadcast).
    Results come back in input order whatever ``workers`` is.
    """
    alphas = [float(a) for a in alphas]

    def one(alpha: float) -> RunReport:
        p = make_koashi_imoto(alpha)
        return report(p, attack(p) if callable(attack) else attack)

    if workers <= 1:
        return [one(a) for a in alphas]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, alphas))


def alpha_grid(alpha_min: float, alpha_max: float, steps: int) -> np.ndarray:
    if steps < 2:
        raise InvalidArgument(f"steps must be at least 2, got {steps}")
    if not 0.0 <= alpha_min < alpha_max <= np.pi / 2 + 1e-12:
        raise InvalidArgument(f"alpha range [{alpha_min}, {alpha_max}] must be increasing inside [0, pi/2]")
    return np.linspace(alpha_min, alpha_max, steps)


@dataclass
class SampledRun:
    protocol: str
    attack: str
    label: str
    shots: int
    seed: int
    counts: dict  # decode outcome label (None = reject) -> count
    error_rate: float
    reject_rate: float
    eve_correct: int | None
    eve_guess: float | None
    exact_error_rate: float
    exact_reject_rate: float
    exact_eve_guess: float | None

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["counts"] = {("reject" if k is None else k): v for k, v in self.counts.items()}
        return d


def sample_run(protocol: Protocol, attack: AttackChannel, label: str, shots: int, seed: int) -> SampledRun:
    """Monte Carlo version of one label's run.

    Bob's decode outcomes are drawn from the exact outcome distribution;
    Eve applies the Helstrom measurement for the first two key labels. Two
    independent streams are spawned from ``seed``, one for Bob and one for
    Eve.
    """
    if shots < 1:
        raise InvalidArgument(f"shots must be at least 1, got {shots}")
    bob_rng, eve_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    bob, eve = run(protocol, attack, label)
    stats = _label_stats(protocol, label, bob)

    dist = protocol.decode_distribution(bob)
    outcomes = list(dist)
    probs = np.clip(np.array([dist[k] for k in outcomes]), 0.0, None)
    drawn = bob_rng.multinomial(shots, probs / probs.sum())
    counts = {k: int(n) for k, n in zip(outcomes, drawn)}
    rejects = counts.get(None, 0)
    errors = sum(n for k, n in counts.items() if k is not None and k != label)
    conclusive = shots - rejects

    eve_correct = eve_guess = exact_guess = None
    keys = protocol.key_labels
    if label in keys[:2] and len(keys) >= 2:
        a, b = keys[0], keys[1]
        other = b if label == a else a
        _, eve_other = run(protocol, attack, other)
        states = {label: eve, other: eve_other}
        proj = helstrom_projector(states[a], states[b])
        p_a = float(np.real(np.trace(proj @ eve.matrix)))
        p_correct = p_a if label == a else 1.0 - p_a
        eve_correct = int(eve_rng.binomial(shots, min(1.0, max(0.0, p_correct))))
        eve_guess = eve_correct / shots
        exact_guess = p_correct

    return SampledRun(
        protocol.title, attack.name, label, shots, seed, counts,
        errors / conclusive if conclusive else 0.0, rejects / shots,
        eve_correct, eve_guess,
        stats.error_rate, stats.reject, exact_guess,
    )
