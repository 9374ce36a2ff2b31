"""Harness tests: topology building, demand statistics, metrics, determinism."""

import math
import statistics

import pytest

from qnetsim.harness import (
    DemandSpec,
    InvalidDemand,
    InvalidTopology,
    LinkSpec,
    NodeSpec,
    TopologySpec,
    build_network,
    cdf_points,
    compute_metrics,
    generate_demand,
    hub_and_spoke_config,
    parse_config,
    quantile,
    run_experiment,
    run_records_csv,
)
from qnetsim.control import RequestRecord


def test_build_minimal_network():
    net = build_network(TopologySpec(
        [NodeSpec("a", "end_node"), NodeSpec("b", "end_node"),
         NodeSpec("hub", "heralding_hub", 1)],
        [LinkSpec("a", "hub"), LinkSpec("b", "hub")]))
    assert len(net.devices) == 3
    assert len(net.fabric._fibres) == 4  # two fibres, keyed from both ends
    assert net.controller_hub == "hub"


def test_build_paper_topology():
    cfg = hub_and_spoke_config(16, units=4, rate_per_s=10.0)
    net = build_network(cfg.topology, cfg.physics, 1)
    assert len(net.devices) == 17
    assert len(net.end_nodes) == 16
    assert net.devices["hub"].bsm_units_total == 4


def test_build_chain_loads_router_program():
    spec = TopologySpec(
        [NodeSpec("a", "end_node"), NodeSpec("b", "end_node"),
         NodeSpec("h1", "heralding_hub", 1), NodeSpec("h2", "heralding_hub", 1),
         NodeSpec("r", "router")],
        [LinkSpec("a", "h1"), LinkSpec("h1", "r"), LinkSpec("r", "h2"),
         LinkSpec("h2", "b")])
    net = build_network(spec)
    assert len(net.devices) == 5
    assert "t_swap_outcome" in net.devices["r"].processor.entries
    assert net.path("a", "b") == ["a", "h1", "r", "h2", "b"]
    assert net.delay("a", "b") == 4 * 25_000


def test_invalid_topologies_rejected():
    with pytest.raises(InvalidTopology):
        TopologySpec([NodeSpec("a", "end_node")], []).validate()  # no hub
    with pytest.raises(InvalidTopology):
        TopologySpec(
            [NodeSpec("a", "end_node"), NodeSpec("h", "heralding_hub", 1)],
            []).validate()  # disconnected
    with pytest.raises(InvalidTopology):
        TopologySpec(
            [NodeSpec("h", "heralding_hub", 0),
             NodeSpec("a", "end_node")],
            [LinkSpec("a", "h")]).validate()  # hub without units
    with pytest.raises(InvalidTopology):
        TopologySpec(
            [NodeSpec("h1", "heralding_hub", 1), NodeSpec("h2", "heralding_hub", 1),
             NodeSpec("a", "end_node"), NodeSpec("b", "end_node")],
            [LinkSpec("a", "h1"), LinkSpec("h1", "h2"),
             LinkSpec("h2", "b")]).validate()  # hub-to-hub fibre


# -- demand ---------------------------------------------------------------------

def test_zero_rate_empty_schedule():
    spec = DemandSpec(rate_per_s=0.0, base_seed=1)
    assert generate_demand(spec, ["a", "b"], 1) == []


def test_same_seed_identical_schedule():
    spec = DemandSpec(rate_per_s=20.0, base_seed=1)
    nodes = [f"n{i}" for i in range(6)]
    assert generate_demand(spec, nodes, 7) == generate_demand(spec, nodes, 7)
    assert generate_demand(spec, nodes, 7) != generate_demand(spec, nodes, 8)


def test_poisson_count_statistics():
    """Empirical mean of the arrival count over 1000 seeds within 3 sigma."""
    rate, duration = 30.0, 2.0
    spec = DemandSpec(rate_per_s=rate, duration_s=duration, base_seed=1)
    nodes = [f"n{i}" for i in range(4)]
    n_seeds = 1000
    counts = [len(generate_demand(spec, nodes, seed)) for seed in range(n_seeds)]
    expected = rate * duration
    sigma_of_mean = math.sqrt(expected / n_seeds)
    assert abs(statistics.mean(counts) - expected) <= 3 * sigma_of_mean


def test_pairs_are_ordered_distinct_uniform():
    spec = DemandSpec(rate_per_s=200.0, duration_s=2.0, base_seed=1)
    nodes = ["a", "b", "c"]
    pulls = []
    for seed in range(40):
        pulls.extend((inj.src, inj.dst) for inj in generate_demand(spec, nodes, seed))
    assert all(s != d for s, d in pulls)
    seen = set(pulls)
    assert len(seen) == 6  # all ordered pairs of 3 nodes appear


def test_demand_validation():
    with pytest.raises(InvalidDemand):
        DemandSpec(rate_per_s=-1.0).validate()
    with pytest.raises(InvalidDemand):
        DemandSpec(rate_per_s=1.0, window_s=(1.5, 1.0)).validate()
    with pytest.raises(InvalidDemand):
        DemandSpec(rate_per_s=1.0, duration_s=1.0, window_s=(0.5, 2.0)).validate()


# -- metrics -----------------------------------------------------------------------

def rec(i, submit, start, complete):
    return RequestRecord(i, "a", "b", 50, submit, start, complete)


def test_throughput_counts_only_requests_inside_window():
    window = (1_000_000_000, 2_000_000_000)
    records = [
        rec(1, 900_000_000, 1_100_000_000, 1_500_000_000),   # inside
        rec(2, 900_000_000, 950_000_000, 1_500_000_000),     # started before window
        rec(3, 1_000_000_000, 1_800_000_000, 2_100_000_000), # completes after window
        rec(4, 1_200_000_000, 1_300_000_000, 1_900_000_000), # inside
        rec(5, 1_200_000_000, None, None),                   # never started
    ]
    m = compute_metrics(records, window)
    assert m.count == 2
    assert m.throughput_per_s == pytest.approx(2.0)
    assert m.mean_latency_ns == pytest.approx((200_000_000 + 100_000_000) / 2)


def test_thirty_completions_in_one_second_window():
    window = (0, 1_000_000_000)
    records = [rec(i, 0, 10, 500) for i in range(30)]
    assert compute_metrics(records, window).throughput_per_s == pytest.approx(30.0)


def test_cdf_right_continuous_includes_own_value():
    pts = dict(cdf_points([10, 20, 20, 40]))
    assert pts[10] == pytest.approx(0.25)
    assert pts[20] == pytest.approx(0.75)  # both 20s included at x=20
    assert pts[40] == pytest.approx(1.0)
    values = sorted([5, 1, 9, 7, 3])
    assert quantile(values, 0.5) == 5  # smallest value with CDF >= 0.5
    assert quantile(values, 0.95) == 9
    assert quantile(values, 0.2) == 1


def test_empty_window_flagged():
    m = compute_metrics([], (0, 10))
    assert m.empty_window and m.count == 0 and m.throughput_per_s == 0.0


# -- determinism / replay ------------------------------------------------------------

def run_once(seed, rate=40.0, units=2):
    cfg = hub_and_spoke_config(6, units=units, rate_per_s=rate,
                               pairs_per_request=5, duration_s=0.3,
                               window_s=(0.1, 0.3), base_seed=seed)
    result, net = run_experiment(cfg.topology, cfg.physics, cfg.demand, seed)
    return result


def test_rerun_reproduces_hashes_and_csv():
    for seed in (1, 2, 3):
        a = run_once(seed)
        b = run_once(seed)
        assert a.trace_hash == b.trace_hash
        assert run_records_csv(a.records) == run_records_csv(b.records)
    assert run_once(1).trace_hash != run_once(9).trace_hash


def test_zero_demand_runs_deterministically_idle():
    cfg = hub_and_spoke_config(4, units=1, rate_per_s=0.0, base_seed=1)
    result, net = run_experiment(cfg.topology, cfg.physics, cfg.demand, 1)
    assert result.records == []
    assert not result.truncated
    assert len(result.trace_hash) == 64


def test_config_round_trip_through_parser():
    doc = {
        "topology": {
            "nodes": [{"name": "a", "role": "end_node"},
                      {"name": "b", "role": "end_node"},
                      {"name": "hub", "role": "heralding_hub", "bsm_units": 2}],
            "links": [{"a": "a", "b": "hub"}, {"a": "b", "b": "hub"}],
        },
        "physics": {"t_prep_ns": 10_000},
        "demand": {"rate_per_s": 5.0, "pairs_per_request": 3,
                   "duration_s": 0.5, "window_s": [0.1, 0.5], "base_seed": 3},
    }
    cfg = parse_config(doc)
    assert cfg.physics.t_prep_ns == 10_000
    assert cfg.demand.pairs_per_request == 3
    result, _ = run_experiment(cfg.topology, cfg.physics, cfg.demand,
                               cfg.demand.base_seed)
    assert not result.truncated
