import numpy as np
import pytest

from clusterperf.model import Semantics, SystemParams

ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_params(rng: np.random.Generator, semantics: Semantics, max_s: int = 6,
                  max_l: int = 12) -> SystemParams:
    """Small instance with every rate log-uniform over [1e-3, 1e2]."""
    S = int(rng.integers(1, max_s + 1))
    L = int(rng.integers(S, max_l + 1))
    lam, mu, xi, xi_h, eta, eta_h = 10 ** rng.uniform(-3, 2, size=6)
    return SystemParams(S=S, L=L, lam=lam, mu=mu, xi=xi, xi_h=xi_h, eta=eta, eta_h=eta_h,
                        semantics=semantics)


def random_instances(n: int, seed: int = 7) -> list[SystemParams]:
    rng = np.random.default_rng(seed)
    sems = [Semantics.PAPER_LITERAL, Semantics.PER_COMPUTING_NODE]
    return [random_params(rng, sems[k % 2]) for k in range(n)]


@pytest.fixture
def small():
    return SystemParams(S=3, L=6, lam=1.0, mu=0.5, xi=0.01, xi_h=0.01, eta=0.5, eta_h=0.5)
