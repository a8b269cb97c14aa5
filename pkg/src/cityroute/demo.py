"""A small built-in network and a self-check scenario that exercises the
one-way and rush-hour behavior end to end. The CLI ``demo`` subcommand runs
it; the test suite reuses the same fixture."""

from __future__ import annotations

import datetime as dt
import json

from .conditions import ConditionRule, RuleKind, Schedule
from .network import RoadNetwork, ingest_network


def demo_network_document() -> dict:
    """Four corners of a 100 m square plus one diagonal shortcut.

    The diagonal's base_cost is intentionally omitted so ingest fills it from
    the geometry length.
    """
    return {
        "crs_label": "local-meters",
        "vertices": [
            {"id": 1, "x": 0.0, "y": 0.0, "name": "Harbour Corner"},
            {"id": 2, "x": 100.0, "y": 0.0, "name": "Market Corner"},
            {"id": 3, "x": 100.0, "y": 100.0, "name": "Lake Corner"},
            {"id": 4, "x": 0.0, "y": 100.0, "name": "Temple Corner"},
        ],
        "segments": [
            {"id": 1, "name": "Harbour Road", "from": 1, "to": 2,
             "geometry": [[0.0, 0.0], [100.0, 0.0]], "base_cost": 100.0},
            {"id": 2, "name": "Market Street", "from": 2, "to": 3,
             "geometry": [[100.0, 0.0], [100.0, 100.0]], "base_cost": 100.0},
            {"id": 3, "name": "Lake Cut", "from": 1, "to": 3,
             "geometry": [[0.0, 0.0], [100.0, 100.0]]},
            {"id": 4, "name": "Temple Road", "from": 3, "to": 4,
             "geometry": [[100.0, 100.0], [0.0, 100.0]], "base_cost": 100.0},
            {"id": 5, "name": "West Avenue", "from": 4, "to": 1,
             "geometry": [[0.0, 100.0], [0.0, 0.0]], "base_cost": 100.0},
        ],
    }


def demo_network() -> RoadNetwork:
    return ingest_network(json.dumps(demo_network_document()))


def run_demo(echo=print) -> None:
    """Assert the headline routing behaviors on the built-in network.

    Raises AssertionError with a descriptive message on the first check that
    does not hold; prints one line per passing check.
    """
    from .routing import Mode, plan_route

    network = demo_network()
    always = Schedule.absolute(dt.datetime(2000, 1, 1, 0, 0))
    tuesday_morning = dt.datetime(2024, 6, 4, 8, 0)
    tuesday_noon = dt.datetime(2024, 6, 4, 12, 0)

    one_way = [ConditionRule(id=1, segment_id=3, kind=RuleKind.ONE_WAY_FORWARD, schedule=always)]
    out = plan_route(network, one_way, 1, 3, tuesday_noon)
    back = plan_route(network, one_way, 3, 1, tuesday_noon)
    assert abs(out.cost - 141.4214) < 1e-3, f"one-way outbound cost {out.cost}"
    assert abs(back.cost - 200.0) < 1e-3, f"one-way return cost {back.cost}"
    assert list(back.segments) == [2, 1], f"one-way return path {back.segments}"
    echo("ok - one-way diagonal: outbound 141.4 m, return detours at 200.0 m")

    out_f = plan_route(network, one_way, 1, 3, tuesday_noon, mode=Mode.FAITHFUL)
    back_f = plan_route(network, one_way, 3, 1, tuesday_noon, mode=Mode.FAITHFUL)
    assert list(out_f.segments) == list(out.segments), "penalty mode diverged on outbound"
    assert list(back_f.segments) == list(back.segments), "penalty mode diverged on return"
    echo("ok - penalty-cost mode matches strict arc exclusion on both queries")

    rush_hour = [ConditionRule(
        id=2, segment_id=3, kind=RuleKind.CONGESTION, multiplier=3.0,
        schedule=Schedule.weekly(range(5), 7 * 60, 9 * 60 + 30),
    )]
    morning = plan_route(network, rush_hour, 1, 3, tuesday_morning)
    noon = plan_route(network, rush_hour, 1, 3, tuesday_noon)
    assert list(morning.segments) == [1, 2], f"rush-hour route {morning.segments}"
    assert list(noon.segments) == [3], f"off-peak route {noon.segments}"
    assert abs(morning.cost - 200.0) < 1e-3 and abs(noon.cost - 141.4214) < 1e-3
    echo("ok - rush-hour congestion reroutes at 08:00 and relaxes at 12:00")
