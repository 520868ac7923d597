import pytest

from hfmdvrp.model import Family

from support import make_instance


@pytest.fixture
def one_task():
    """1 robot at (0,0), speed 1, capacity 10; pick at (3,0) with demand 5; station at (5,0)."""
    return make_instance([(3, 0, 5)], [(5, 0)], [(0, 0, 10, 1.0)], family=Family.WMT)


@pytest.fixture
def split_pair():
    """Same robot and station with two picks of demand 6 at (3,0) and (4,0)."""
    return make_instance([(3, 0, 6), (4, 0, 6)], [(5, 0)], [(0, 0, 10, 1.0)], family=Family.WMT)
