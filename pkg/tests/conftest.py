from pathlib import Path

import pytest

from milpreorder.adapters import MockAdapter
from milpreorder.model import Constraint, MilpInstance

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def knapsack() -> MilpInstance:
    """min -x0 - x1 s.t. x0 + x1 <= 1, x binary; z* = -1."""
    return MilpInstance(
        name="knap",
        objective=(-1.0, -1.0),
        rows=(Constraint(entries=((0, 1.0), (1, 1.0)), sense="LE", rhs=1.0, original_index=0),),
        var_bounds=((0.0, 1.0), (0.0, 1.0)),
        integrality=frozenset({0, 1}),
    )


@pytest.fixture
def three_rows() -> MilpInstance:
    """Binary instance with three distinguishable rows (nnz 2, 5, 1)."""
    rows = (
        Constraint(entries=((0, 1.0), (1, 1.0)), sense="LE", rhs=3.0, original_index=0),
        Constraint(
            entries=((0, 1.0), (1, 2.0), (2, 1.0), (3, 1.0), (4, 2.0)),
            sense="LE", rhs=5.0, original_index=1,
        ),
        Constraint(entries=((2, 1.0),), sense="GE", rhs=0.0, original_index=2),
    )
    return MilpInstance(
        name="three",
        objective=(1.0, 1.0, 1.0, 1.0, 1.0),
        rows=rows,
        var_bounds=tuple((0.0, 1.0) for _ in range(5)),
        integrality=frozenset(range(5)),
    )


@pytest.fixture
def mock_adapter() -> MockAdapter:
    return MockAdapter()
