import numpy as np
import pytest

from orthoclone.protocols import catalog


@pytest.fixture
def rng():
    return np.random.default_rng(20240615)


@pytest.fixture(scope="session")
def protocols():
    return catalog()


def ki_reduced(alpha):
    """Closed-form first-qubit reductions of the two-state entangled scheme."""
    c2, s2 = np.cos(alpha) ** 2, np.sin(alpha) ** 2
    return np.diag([c2, s2]).astype(complex), np.diag([s2, c2]).astype(complex)


def attack_library(protocol):
    """Every shipped attack that can be built against ``protocol``."""
    from orthoclone.adversary import (
        broadcast_attack,
        dummy_swap_attack,
        identity_attack,
        intercept_resend,
        measure_both_attack,
        measure_second_attack,
        support_copy_attack,
    )
    from orthoclone.errors import NonCommutingFamily, PreconditionFailed
    from orthoclone.protocols import BasisSpec
    from orthoclone.qlinalg import partial_trace

    out = [identity_attack(), identity_attack((2,))]
    for angle in (0.0, np.pi / 8, np.pi / 4, 3 * np.pi / 8):
        for rnd in (1, 2):
            out.append(intercept_resend(BasisSpec(angle), rnd))
        out.append(measure_second_attack(BasisSpec(angle)))
    builders = [
        lambda: broadcast_attack([partial_trace(s, {1}) for s in protocol.states]),
        lambda: dummy_swap_attack(protocol),
        lambda: measure_both_attack(protocol),
        lambda: support_copy_attack([partial_trace(s, {1}) for s in protocol.states], 1),
        lambda: support_copy_attack([partial_trace(s, {2}) for s in protocol.states], 2),
    ]
    for build in builders:
        try:
            out.append(build())
        except (NonCommutingFamily, PreconditionFailed):
            pass
    return out


ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
