from __future__ import annotations

import sys
from fractions import Fraction

import pytest

from clonemix.core import ROOT, CharState, CloneTree, FrequencyTensor, StateTree
from clonemix.simulate import SimulationConfig, simulate_instance


def F_(x) -> Fraction:
    return Fraction(x)


def one_character(*rows) -> FrequencyTensor:
    """Tensor with a single character; each argument is one sample's state row."""
    return FrequencyTensor([[list(r)] for r in rows])


def binary_tensor(*samples) -> FrequencyTensor:
    """Two-state characters given by their state-1 frequencies, one tuple per sample."""
    return FrequencyTensor([[{0: 1 - Fraction(x), 1: Fraction(x)} for x in s] for s in samples])


def v(c, s) -> CharState:
    return CharState(c, s)


@pytest.fixture
def chain2():
    """One character on the chain 0 -> 1 -> 2."""
    return (StateTree.chain(0, 3),)


@pytest.fixture
def chain_tree():
    return CloneTree([(ROOT, v(0, 1)), (v(0, 1), v(0, 2))])


@pytest.fixture
def binary_pair():
    return (StateTree.chain(0, 2), StateTree.chain(1, 2))


@pytest.fixture(scope="session")
def small_sims():
    return [simulate_instance(SimulationConfig(n=1 + s % 3, m=1 + s % 4, seed=s)) for s in range(30)]


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(acceptance.TITLES):
        terminalreporter.write_line(acceptance.summary_line(k))
