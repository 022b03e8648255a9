from __future__ import annotations

import pytest

from robust_regret.core import Edge, Kind, RobustInstance


def make(n: int, edges: list[tuple[int, int, float, float]], terminals, kind: Kind = Kind.STEINER) -> RobustInstance:
    return RobustInstance(n, tuple(Edge(*e) for e in edges), frozenset(terminals), kind)


@pytest.fixture
def diamond() -> RobustInstance:
    """Square 0-1-2-3 with a chord 0-2; terminals 0 and 2."""
    return make(4, [(0, 1, 1, 2), (1, 2, 1, 2), (2, 3, 0, 3), (3, 0, 0, 3), (0, 2, 2, 5)], {0, 2})


@pytest.fixture
def triangle_tsp() -> RobustInstance:
    return make(3, [(0, 1, 1, 2), (1, 2, 1, 1), (0, 2, 0, 4)], range(3), Kind.TSP)


# acceptance criteria report: criterion -> [(part, ok, detail)]
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


@pytest.fixture
def record():
    def add(criterion: int, part: str, ok: bool, detail: str = "") -> bool:
        ACCEPTANCE.setdefault(criterion, []).append((part, bool(ok), detail))
        return bool(ok)

    return add


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        verdict = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        terminalreporter.write_line(f"{verdict} criterion {crit}")
        for part, ok, detail in parts:
            terminalreporter.write_line(f"    {'ok  ' if ok else 'FAIL'} {part}: {detail}")
