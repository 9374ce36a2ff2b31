"""Event engine and physical-layer tests (no data plane involved)."""

import pytest

from qnetsim.fabric import (
    Engine,
    Fabric,
    FREE,
    PhysicsParams,
    QubitNotEntangled,
    QubitRef,
    SameQubit,
    UnitUnbound,
    compose_bell,
)


# -- engine -------------------------------------------------------------------

def test_engine_empty_queue():
    eng = Engine()
    assert eng.run_until(1_000_000) == 0
    assert eng.now == 1_000_000


def test_engine_equal_timestamps_run_in_insertion_order():
    eng = Engine()
    order = []
    eng.schedule(100, lambda: order.append("a"))
    eng.schedule(100, lambda: order.append("b"))
    eng.schedule(50, lambda: order.append("first"))
    eng.run_until(200)
    assert order == ["first", "a", "b"]


def test_engine_run_to_quiescence_truncation():
    eng = Engine()

    def reschedule():
        eng.schedule(10, reschedule)

    eng.schedule(0, reschedule)
    count, truncated = eng.run_to_quiescence(max_time_ns=1000)
    assert truncated
    assert count == 101  # t = 0, 10, ..., 1000


# -- generation ---------------------------------------------------------------

def hub_rig(physics=None, seed=7):
    """One hub wired to two nodes over 5 km fibres; handlers record deliveries."""
    eng = Engine(keep_trace_lines=True)
    fabric = Fabric(eng, physics or PhysicsParams(), seed)
    fabric.register_fibre("hub", 1, "alice", 1, 5.0)
    fabric.register_fibre("hub", 2, "bob", 1, 5.0)
    events = {"hub": [], "alice": [], "bob": []}
    for name in events:
        fabric.attach_node(name, lambda ev, n=name: events[n].append((eng.now, ev)))
    return eng, fabric, events


def test_zero_probability_never_heralds_success():
    physics = PhysicsParams(detector_efficiency=0.0)
    eng, fabric, events = hub_rig(physics)
    fabric.start_generation("hub", 9, 1, 2)
    eng.run_until(10_000_000)
    assert fabric.pairs_created == 0
    assert fabric.attempts > 0
    assert all(not ev.success for _, ev in events["alice"])


def test_certain_success_timing_formula():
    """First herald reaches nodes at exactly t_prep + 2 * L/v."""
    physics = PhysicsParams(attenuation_db_per_km=0.0,
                            optical_bsm_success_factor=1.0, t_prep_ns=44_000)
    eng, fabric, events = hub_rig(physics)
    fabric.start_generation("hub", 9, 1, 2)
    delay = physics.fibre_delay_ns(5.0)
    assert delay == 25_000  # exact: 5 km at 2e8 m/s
    eng.run_until(200_000)
    assert fabric.pairs_created >= 1
    t_first_alice = events["alice"][0][0]
    assert t_first_alice == physics.t_prep_ns + 2 * delay
    # hub sees the outcome one fibre delay earlier
    t_first_hub = events["hub"][0][0]
    assert t_first_hub == physics.t_prep_ns + delay


def test_default_attempt_probability_value():
    physics = PhysicsParams()
    eta = physics.fibre_transmission(5.0)
    assert eta == pytest.approx(0.79433, abs=1e-5)
    p = physics.optical_bsm_success_factor * eta * eta
    assert p == pytest.approx(0.31548, abs=1e-5)


def test_empirical_success_rate_matches_p_attempt():
    eng, fabric, events = hub_rig(seed=11)
    fabric.start_generation("hub", 9, 1, 2)
    # Release alice's qubit on every success so generation keeps cycling.
    fabric._handlers["alice"] = lambda ev: (
        fabric.release("alice", 1) if ev.success else None)
    eng.run_until(2_000_000_000)  # 2 s => ~21k cycles
    p_hat = fabric.pairs_created / fabric.attempts
    assert p_hat == pytest.approx(0.31548, abs=0.02)


def test_busy_qubit_skips_cycle():
    physics = PhysicsParams(attenuation_db_per_km=0.0, optical_bsm_success_factor=1.0)
    eng, fabric, events = hub_rig(physics)
    fabric.start_generation("hub", 9, 1, 2)
    eng.run_until(3_000_000)  # many periods, nobody releases
    assert fabric.pairs_created == 1  # first success parks both qubits
    fabric.release("alice", 1)
    eng.run_until(6_000_000)
    assert fabric.pairs_created == 2


def test_stop_generation_halts_attempts():
    physics = PhysicsParams(attenuation_db_per_km=0.0, optical_bsm_success_factor=1.0)
    eng, fabric, events = hub_rig(physics)
    fabric.start_generation("hub", 9, 1, 2)
    eng.run_until(100_000)
    fabric.stop_generation("hub", 9)
    created = fabric.pairs_created
    fabric.release("alice", 1)
    fabric.release("bob", 1)
    eng.run_until(10_000_000)
    assert fabric.pairs_created == created


def test_generation_without_fibre_raises():
    eng = Engine()
    fabric = Fabric(eng, PhysicsParams(), 1)
    fabric.register_fibre("hub", 1, "alice", 1, 5.0)
    with pytest.raises(UnitUnbound):
        fabric.start_generation("hub", 9, 1, 2)


# -- pairs, swaps, release -------------------------------------------------------

def entangled_rig():
    """Two live pairs: (alice.1, router.1) and (router.2, bob.1)."""
    eng = Engine()
    fabric = Fabric(eng, PhysicsParams(), 3)
    for name in ("alice", "bob", "router", "hub"):
        fabric.attach_node(name, lambda ev: None)
    return eng, fabric


def test_swap_composes_partners_and_bell():
    eng, fabric = entangled_rig()
    outcomes = []
    fabric.attach_node("router", lambda ev: outcomes.append(ev))
    fabric.create_pair(QubitRef("alice", 1), QubitRef("router", 1), 1)
    fabric.create_pair(QubitRef("router", 2), QubitRef("bob", 1), 3)
    fabric.swap_bsm("router", 1, 2, bsm_id=77)
    eng.run_until(10_000)
    assert len(outcomes) == 1
    ev = outcomes[0]
    assert ev.kind == "swap_bsm_outcome" and ev.bsm_id == 77 and ev.success
    partner, bell = fabric.ground_truth("alice", 1)
    assert partner == QubitRef("bob", 1)
    assert bell == compose_bell(1, 3, ev.bell_index)
    assert fabric.state_of(QubitRef("router", 1)) == FREE
    assert fabric.state_of(QubitRef("router", 2)) == FREE
    fabric.check_no_double_occupancy()


def test_swap_errors():
    eng, fabric = entangled_rig()
    fabric.create_pair(QubitRef("alice", 1), QubitRef("router", 1), 0)
    with pytest.raises(SameQubit):
        fabric.swap_bsm("router", 1, 1, 5)
    with pytest.raises(QubitNotEntangled):
        fabric.swap_bsm("router", 1, 2, 5)


def test_release_semantics():
    eng, fabric = entangled_rig()
    fabric.release("alice", 1)  # releasing a free qubit is a no-op
    fabric.create_pair(QubitRef("alice", 1), QubitRef("bob", 1), 2)
    assert fabric.ground_truth("bob", 1) == (QubitRef("alice", 1), 2)
    fabric.release("alice", 1)
    assert fabric.ground_truth("bob", 1) is None
    assert fabric.state_of(QubitRef("bob", 1)) == FREE
    assert fabric.pairs_destroyed == 1


def test_pair_conservation_counters():
    eng, fabric = entangled_rig()
    fabric.create_pair(QubitRef("alice", 1), QubitRef("router", 1), 1)
    fabric.create_pair(QubitRef("router", 2), QubitRef("bob", 1), 1)
    fabric.swap_bsm("router", 1, 2, 1)
    eng.run_until(10_000)
    # swap destroyed two, created one
    assert fabric.pairs_created == 3
    assert fabric.pairs_destroyed == 2
    fabric.release("bob", 1)
    assert fabric.pairs_destroyed == 3
    assert fabric.live_pairs() == []


def test_determinism_same_seed_same_trace():
    def run(seed):
        physics = PhysicsParams()
        eng = Engine()
        fabric = Fabric(eng, physics, seed)
        fabric.register_fibre("hub", 1, "alice", 1, 5.0)
        fabric.register_fibre("hub", 2, "bob", 1, 5.0)
        for name in ("hub", "bob"):
            fabric.attach_node(name, lambda ev: None)
        fabric.attach_node("alice", lambda ev: (
            fabric.release("alice", 1) if ev.success else None))
        fabric.start_generation("hub", 4, 1, 2)
        eng.run_until(50_000_000)
        return eng.trace.hexdigest(), fabric.pairs_created

    h1, n1 = run(42)
    h2, n2 = run(42)
    h3, n3 = run(43)
    assert (h1, n1) == (h2, n2)
    assert n1 > 0
    assert h3 != h1
