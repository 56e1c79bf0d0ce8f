import numpy as np
import pytest

from varl.buffers import GuidanceBuffer, ReplayBuffer, Transition
from varl.spaces import Box, Discrete

from oracles import ShadowReplay

# chi-square critical value, df=9, p=0.01
CHI2_CRIT_DF9 = 21.666


def make_transition(i: int, action=0) -> Transition:
    return Transition(
        state=np.array([float(i), 0.0]),
        action=action,
        reward=0.0,
        next_state=np.array([float(i) + 0.5, 0.0]),
        done=False,
    )


def ids(transitions) -> list[int]:
    return [int(t.state[0]) for t in transitions]


def test_ring_eviction_order():
    buf = ReplayBuffer(3, state_dim=2)
    for i in range(1, 5):
        buf.push(make_transition(i))
    assert len(buf) == 3
    assert ids(buf.recent(3)) == [4, 3, 2]


def test_push_then_recent_one():
    buf = ReplayBuffer(8, state_dim=2)
    t = make_transition(7)
    buf.push(t)
    got = buf.recent(1)[0]
    assert np.array_equal(got.state, t.state)
    assert got.action == t.action and got.reward == t.reward
    assert np.array_equal(got.next_state, t.next_state)


def test_no_eviction_at_capacity_boundary():
    buf = ReplayBuffer(10_000, state_dim=2)
    for i in range(10_000):
        buf.push(make_transition(i))
    assert len(buf) == 10_000
    assert ids(buf.recent(2)) == [9_999, 9_998]


def test_recent_ordering_and_saturation():
    buf = ReplayBuffer(100, state_dim=2)
    for i in range(1, 6):
        buf.push(make_transition(i))
    assert ids(buf.recent(3)) == [5, 4, 3]
    assert ids(buf.recent(50)) == [5, 4, 3, 2, 1]


def test_recent_on_empty_buffer_is_empty():
    buf = ReplayBuffer(4, state_dim=2)
    assert buf.recent(3) == []


def test_recent_matches_shadow_list_while_interleaving():
    buf = ReplayBuffer(300, state_dim=2)
    shadow = ShadowReplay(300)
    for i in range(1000):
        buf.push(make_transition(i))
        shadow.push(i)
        if i % 7 == 0:
            assert ids(buf.recent(50)) == shadow.recent(50)


def test_randomized_shadow_property_across_capacities():
    # acceptance-grade property: 10k mixed operations over several capacities,
    # exercising the wrap boundary many times
    rng = np.random.default_rng(123)
    ops = 0
    for capacity in (1, 2, 7, 64, 500):
        buf = ReplayBuffer(capacity, state_dim=2)
        shadow = ShadowReplay(capacity)
        counter = 0
        for _ in range(2000):
            if shadow.items and rng.random() < 0.3:
                k = int(rng.integers(1, 2 * capacity + 2))
                assert ids(buf.recent(k)) == shadow.recent(k)
            else:
                buf.push(make_transition(counter))
                shadow.push(counter)
                counter += 1
            ops += 1
    assert ops == 10_000


def test_sample_single_item_buffer():
    buf = ReplayBuffer(4, state_dim=2)
    buf.push(make_transition(3))
    rng = np.random.default_rng(0)
    batch = buf.sample(5, rng)
    assert len(batch) == 5
    assert all(int(t.state[0]) == 3 for t in batch)


def test_sample_uniformity_chi_square():
    buf = ReplayBuffer(10, state_dim=2)
    for i in range(10):
        buf.push(make_transition(i))
    rng = np.random.default_rng(99)
    counts = np.zeros(10)
    draws = 100_000
    idx = np.array([int(t.state[0]) for t in buf.sample(draws, rng)])
    for i in idx:
        counts[i] += 1
    expected = draws / 10
    stat = float(((counts - expected) ** 2 / expected).sum())
    assert stat < CHI2_CRIT_DF9


def test_sample_deterministic_given_seed():
    buf = ReplayBuffer(50, state_dim=2)
    for i in range(50):
        buf.push(make_transition(i))
    a = ids(buf.sample(20, np.random.default_rng(5)))
    b = ids(buf.sample(20, np.random.default_rng(5)))
    assert a == b


def test_sample_empty_buffer_raises():
    buf = ReplayBuffer(4, state_dim=2)
    with pytest.raises(ValueError):
        buf.sample(1, np.random.default_rng(0))


def test_push_validates_finiteness_and_action_space():
    buf = ReplayBuffer(4, state_dim=2, action_space=Discrete(4))
    with pytest.raises(ValueError):
        buf.push(make_transition(0, action=9))
    with pytest.raises(ValueError):
        buf.push(
            Transition(np.array([np.nan, 0.0]), 0, 0.0, np.zeros(2), False)
        )


def test_stored_transitions_not_mutated_by_callers():
    buf = ReplayBuffer(4, state_dim=2)
    buf.push(make_transition(1))
    got = buf.recent(1)[0]
    got.state[0] = 999.0
    again = buf.recent(1)[0]
    assert again.state[0] == 1.0


def test_sample_columns_terminal_excludes_truncation():
    buf = ReplayBuffer(4, state_dim=2)
    buf.push(Transition(np.zeros(2), 0, 1.0, np.ones(2), done=True, truncated=True))
    buf.push(Transition(np.zeros(2), 0, 1.0, np.ones(2), done=True, truncated=False))
    cols = buf.sample_columns(64, np.random.default_rng(0))
    # timeout rows bootstrap (terminal 0), true endings do not (terminal 1)
    assert set(np.unique(cols.terminal)) <= {0.0, 1.0}
    assert cols.terminal[cols.rewards == 1.0].size == 64


def test_guidance_rejects_out_of_space_actions():
    gbuf = GuidanceBuffer(Discrete(4))
    with pytest.raises(ValueError):
        gbuf.push(np.zeros(2), 7)
    box = GuidanceBuffer(Box(low=np.array([-1.0]), high=np.array([1.0])))
    with pytest.raises(ValueError):
        box.push(np.zeros(2), np.array([1.5]))
    assert len(gbuf) == 0 and len(box) == 0


def test_guidance_push_and_sample_single():
    gbuf = GuidanceBuffer(Discrete(4))
    gbuf.push(np.array([0.5, -0.5]), 2)
    pair = gbuf.sample(1, np.random.default_rng(0))[0]
    assert pair.action == 2
    assert np.array_equal(pair.state, [0.5, -0.5])


def test_guidance_accumulates_trigger_batches():
    gbuf = GuidanceBuffer(Discrete(4))
    for _ in range(3):
        for i in range(500):
            gbuf.push(np.array([float(i), 0.0]), i % 4)
    assert len(gbuf) == 1500


def test_transition_batch_dump(tmp_path):
    buf = ReplayBuffer(4, state_dim=2)
    for i in range(3):
        buf.push(make_transition(i))
    path = tmp_path / "dump.jsonl"
    buf.dump(path)
    lines = path.read_text().splitlines()
    assert len(lines) == 3
    assert '"reward": 0.0' in lines[0]
