import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from hfmdvrp.datagen import GenSpec, generate_instance, random_cvrp_base
from hfmdvrp.io import ParseError, parse_instance, parse_solution, write_instance, write_solution
from hfmdvrp.model import (
    DeliveryStation,
    Family,
    Instance,
    PickingTask,
    Point,
    Robot,
    Solution,
    deliver,
    pick,
    solution_from_routes,
)
from hfmdvrp.scheduler import solve

MINIMAL = """NAME : tiny
TYPE : HFMDVRP-DV
PICKING : 1
STATIONS : 1
ROBOTS : 1
EDGE_WEIGHT_TYPE : MAN_2D
NODE_COORD_SECTION
1 3 0
2 5 0
DEMAND_SECTION
1 5
2 0
STATION_SECTION
2
-1
ROBOT_SECTION
1 0 0 10 1.0
EOF
"""

CLASSIC = """NAME : X-n5-k2
COMMENT : synthetic
TYPE : CVRP
DIMENSION : 5
EDGE_WEIGHT_TYPE : EUC_2D
CAPACITY : 20
NODE_COORD_SECTION
1 50 50
2 10 10
3 90 10
4 10 90
5 90 90
DEMAND_SECTION
1 0
2 5
3 7
4 9
5 11
DEPOT_SECTION
1
-1
EOF
"""


def test_minimal_extended_file():
    inst = parse_instance(MINIMAL)
    assert inst.tasks == (PickingTask(1, Point(3, 0), 5),)
    assert inst.stations == (DeliveryStation(1, Point(5, 0)),)
    assert inst.robots == (Robot(1, Point(0, 0), 10, 1.0),)
    assert inst.family is Family.SMT
    assert write_instance(inst) == MINIMAL


def test_classic_cvrp_file():
    inst = parse_instance(CLASSIC)
    assert inst.family is Family.XMT
    assert len(inst.stations) == 1 and inst.stations[0].pos == Point(50, 50)
    assert [t.demand for t in inst.tasks] == [5, 7, 9, 11]
    assert len(inst.robots) == 2
    assert all(r.start == Point(50, 50) and r.speed == 1.0 and r.max_capacity == 20 for r in inst.robots)


def test_classic_fleet_size_without_k_in_name():
    text = CLASSIC.replace("X-n5-k2", "plain")
    # ceil(32 / 20)
    assert len(parse_instance(text).robots) == 2
    text = text.replace("CAPACITY : 20", "CAPACITY : 20\nVEHICLES : 4")
    assert len(parse_instance(text).robots) == 4


def test_bytes_and_crlf_accepted():
    assert parse_instance(MINIMAL.replace("\n", "\r\n").encode()) == parse_instance(MINIMAL)


@pytest.mark.parametrize(
    "edit, needle",
    [
        (("ROBOTS : 1", "ROBOTS : 3"), "robot count mismatch"),
        (("PICKING : 1", "PICKING : 2"), "node count mismatch"),
        (("1 3 0", "1 3 x"), "expected an integer"),
        (("2\n-1", "2"), "missing -1"),
        (("1 0 0 10 1.0", "1 0 0 10 fast"), "speed"),
        (("1 0 0 10 1.0", "1 0 0 10 0"), "positive"),
        (("TYPE : HFMDVRP-DV", "TYPE : TSP"), "unknown problem type"),
        (("EOF\n", "EOF\nNAME : again\n"), "after EOF"),
        (("1 5\n2 0", "1 5\n1 6\n2 0"), "duplicate node id 1"),
        (("1 5\n2 0", "1 50\n2 0"), "exceeds fleet max capacity"),
        (("2 0\nSTATION", "2 4\nSTATION"), "must have demand 0"),
    ],
)
def test_errors(edit, needle):
    with pytest.raises(ParseError, match=needle):
        parse_instance(MINIMAL.replace(*edit))


def test_error_carries_location():
    with pytest.raises(ParseError) as err:
        parse_instance(MINIMAL.replace("1 3 0", "1 3 x"))
    assert (err.value.line, err.value.col) == (8, 5)


def test_semantic_error_names_offender():
    with pytest.raises(ParseError) as err:
        parse_instance(MINIMAL.replace("1 5\n2 0", "1 5\n1 6\n2 0"))
    assert err.value.ref == 1


@pytest.mark.parametrize("family", list(Family))
def test_generated_round_trip(family):
    inst = generate_instance(GenSpec(random_cvrp_base(120, 9, 5), family, 5))
    text = write_instance(inst)
    again = parse_instance(text)
    assert again == inst
    assert write_instance(again) == text


@st.composite
def instances(draw):
    m = draw(st.integers(0, 8))
    p = draw(st.integers(1, 3))
    n = draw(st.integers(1, 4))
    coord = st.integers(-10**6, 10**6)
    caps = draw(st.lists(st.integers(1, 10**6), min_size=n, max_size=n))
    speeds = draw(
        st.lists(
            st.floats(1e-3, 1e3, allow_nan=False, allow_infinity=False), min_size=n, max_size=n
        )
    )
    names = draw(st.lists(st.one_of(st.none(), st.from_regex(r"[A-Za-z0-9_.-]{1,12}", fullmatch=True)), min_size=n, max_size=n))
    tasks = tuple(
        PickingTask(i + 1, Point(draw(coord), draw(coord)), draw(st.integers(1, max(caps)))) for i in range(m)
    )
    stations = tuple(DeliveryStation(i + 1, Point(draw(coord), draw(coord))) for i in range(p))
    robots = tuple(
        Robot(i + 1, Point(draw(coord), draw(coord)), caps[i], speeds[i], names[i]) for i in range(n)
    )
    name = draw(st.from_regex(r"[A-Za-z0-9][A-Za-z0-9 _.:-]{0,20}[A-Za-z0-9]", fullmatch=True))
    return Instance(name, tasks, stations, robots, Family.SMT)


@settings(max_examples=150)
@given(instances())
def test_round_trip_identity(inst):
    text = write_instance(inst)
    assert parse_instance(text) == inst
    assert write_instance(parse_instance(text)) == text


@settings(max_examples=300)
@given(st.binary(max_size=600))
def test_parser_never_crashes_on_bytes(data):
    try:
        parse_instance(data)
    except ParseError:
        pass


_LINES = MINIMAL.splitlines()


@settings(max_examples=300, suppress_health_check=[HealthCheck.too_slow])
@given(
    st.lists(
        st.one_of(
            st.sampled_from(_LINES),
            st.text(alphabet="0123456789 -.:ABCDEFGHIJKLMNOPQRSTUVWXYZ_\t", max_size=30),
        ),
        max_size=30,
    )
)
def test_parser_never_crashes_on_mutated_files(lines):
    try:
        parse_instance("\n".join(lines))
    except ParseError:
        pass


class TestSolutions:
    def test_empty(self):
        text = write_solution(Solution(routes={}))
        sol = parse_solution(text)
        assert sol.routes == {} and sol.total_cost == 0

    def test_hand_built(self, one_task):
        sol = solution_from_routes(one_task, {1: [pick(1), deliver(1)]}, algorithm="done-cpta", seed=4)
        assert parse_solution(write_solution(sol)) == sol

    def test_solver_output(self):
        inst = generate_instance(GenSpec(random_cvrp_base(60, 5, 2), Family.SMT, 2))
        sol = solve(inst)
        text = write_solution(sol)
        assert parse_solution(text) == sol
        assert write_solution(parse_solution(text)) == text

    @pytest.mark.parametrize(
        "text, needle",
        [
            ("not json", "Expecting value"),
            ("[]", "JSON object"),
            ('{"format": "other"}', "format"),
            ('{"format": "hfmdvrp-solution", "version": 9}', "unsupported version"),
        ],
    )
    def test_errors(self, text, needle):
        with pytest.raises(ParseError, match=needle):
            parse_solution(text)

    def test_malformed_step(self, one_task):
        text = write_solution(solution_from_routes(one_task, {1: [pick(1), deliver(1)]}))
        with pytest.raises(ParseError, match="malformed step"):
            parse_solution(text.replace('"pick"', '"teleport"'))

    @settings(max_examples=200)
    @given(st.binary(max_size=300))
    def test_never_crashes(self, data):
        try:
            parse_solution(data)
        except ParseError:
            pass
