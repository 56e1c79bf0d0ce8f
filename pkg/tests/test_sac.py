import numpy as np

from varl.buffers import ReplayBuffer, Transition, TransitionBatch
from varl.nets import flatten_grads
from varl.sac import SacAgent, log1m_tanh_sq, softmax_rows
from varl.spaces import Box, Discrete

from conftest import constant_output_net
from oracles import finite_difference, max_rel_error, tiny_mdp_value_iteration

# chi-square critical value, df=3, p=0.01
CHI2_CRIT_DF3 = 11.345


def discrete_agent(**kw):
    defaults = dict(hidden_sizes=(16,), rng=np.random.default_rng(0))
    defaults.update(kw)
    return SacAgent(3, Discrete(4), **defaults)


def box_agent(**kw):
    space = Box(low=np.array([-1.0, -1.0]), high=np.array([1.0, 1.0]))
    defaults = dict(hidden_sizes=(16,), rng=np.random.default_rng(0))
    defaults.update(kw)
    return SacAgent(3, space, **defaults)


class FrozenNoise:
    def __init__(self, eps):
        self.eps = np.asarray(eps)

    def standard_normal(self, shape):
        assert shape == self.eps.shape
        return self.eps


# -- helpers ------------------------------------------------------------------


def test_softmax_rows_normalised():
    logits = np.array([[1.0, 2.0, 3.0], [-100.0, 0.0, 100.0]])
    p, logp = softmax_rows(logits)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-12)
    assert np.allclose(np.exp(logp), p)


def test_log1m_tanh_sq_stable():
    u = np.array([0.0, 5.0, -5.0, 30.0])
    direct = np.log(1.0 - np.tanh(u[:2]) ** 2)
    assert np.allclose(log1m_tanh_sq(u[:2]), direct, atol=1e-12)
    assert np.all(np.isfinite(log1m_tanh_sq(u)))


# -- min_q -----------------------------------------------------------------------


def test_min_q_identical_critics():
    agent = discrete_agent()
    agent.critic2.load_param_arrays(agent.critic1.param_arrays())
    s = np.array([0.1, -0.2, 0.3])
    assert agent.min_q(s, 1) == agent.critic1.forward(s)[1]


def test_min_q_takes_smaller_constant_critic():
    agent = discrete_agent()
    constant_output_net(agent.critic1, [2.0] * 4)
    constant_output_net(agent.critic2, [5.0] * 4)
    assert agent.min_q(np.zeros(3), 2) == 2.0


def test_min_q_pointwise_below_each_critic():
    rng = np.random.default_rng(8)
    agent = discrete_agent(rng=rng)
    for _ in range(100):
        s = rng.normal(size=3)
        a = int(rng.integers(4))
        m = agent.min_q(s, a)
        assert m <= agent.critic1.forward(s)[a] + 1e-15
        assert m <= agent.critic2.forward(s)[a] + 1e-15


def test_min_q_continuous_pair():
    agent = box_agent()
    s, a = np.zeros(3), np.array([0.3, -0.3])
    x = np.concatenate([s, a])
    expected = min(agent.critic1.forward(x)[0], agent.critic2.forward(x)[0])
    assert agent.min_q(s, a) == expected


# -- critic updates ---------------------------------------------------------------


def batch_from(transitions, agent) -> TransitionBatch:
    buf = ReplayBuffer(len(transitions), transitions[0].state.shape[0], agent.action_space)
    for t in transitions:
        buf.push(t)
    rng = np.random.default_rng(0)
    cols = buf.sample_columns(len(transitions), rng)
    return cols


def test_critic_target_reduces_to_reward_when_gamma_zero():
    agent = discrete_agent(gamma=1e-12)
    rng = np.random.default_rng(1)
    transitions = [
        Transition(rng.normal(size=3), int(rng.integers(4)), float(i % 3) / 2.0,
                   rng.normal(size=3), False)
        for i in range(32)
    ]
    batch = batch_from(transitions, agent)
    out = agent.critic_update(batch)
    assert np.isclose(out["target_mean"], batch.rewards.mean(), atol=1e-9)


def test_terminal_target_ignores_next_state():
    agent = discrete_agent(gamma=0.9)
    rng = np.random.default_rng(2)
    transitions = [
        Transition(rng.normal(size=3), 0, 0.7, rng.normal(size=3) * 100, True)
        for _ in range(16)
    ]
    batch = batch_from(transitions, agent)
    out = agent.critic_update(batch)
    assert np.isclose(out["target_mean"], 0.7, atol=1e-12)


def test_truncated_transitions_bootstrap():
    agent = discrete_agent(gamma=0.9)
    rng = np.random.default_rng(3)
    s2 = rng.normal(size=3)
    tr = [Transition(rng.normal(size=3), 0, 0.0, s2, True, truncated=True) for _ in range(8)]
    batch = batch_from(tr, agent)
    out = agent.critic_update(batch)
    assert abs(out["target_mean"]) > 1e-9  # bootstrapped through the timeout


def test_critic_update_never_touches_actor():
    agent = discrete_agent()
    before = agent.actor.flat_params()
    rng = np.random.default_rng(4)
    tr = [Transition(rng.normal(size=3), 1, 0.5, rng.normal(size=3), False) for _ in range(8)]
    agent.critic_update(batch_from(tr, agent))
    assert np.array_equal(agent.actor.flat_params(), before)


def test_actor_update_never_touches_critics():
    agent = discrete_agent()
    c1, c2 = agent.critic1.flat_params(), agent.critic2.flat_params()
    t1, t2 = agent.target1.flat_params(), agent.target2.flat_params()
    loss, grads, _ = agent.baseline_policy_loss_and_grads(np.random.default_rng(5).normal(size=(8, 3)))
    agent.apply_actor_grads(grads)
    assert np.array_equal(agent.critic1.flat_params(), c1)
    assert np.array_equal(agent.critic2.flat_params(), c2)
    assert np.array_equal(agent.target1.flat_params(), t1)
    assert np.array_equal(agent.target2.flat_params(), t2)


def test_targets_track_polyak_recomputation():
    agent = discrete_agent(tau=0.05)
    rng = np.random.default_rng(6)
    shadow1 = agent.target1.flat_params()
    shadow2 = agent.target2.flat_params()
    for _ in range(10):
        tr = [Transition(rng.normal(size=3), int(rng.integers(4)), float(rng.random()),
                         rng.normal(size=3), False) for _ in range(16)]
        agent.critic_update(batch_from(tr, agent))
        shadow1 = (1 - 0.05) * shadow1 + 0.05 * agent.critic1.flat_params()
        shadow2 = (1 - 0.05) * shadow2 + 0.05 * agent.critic2.flat_params()
    assert np.allclose(agent.target1.flat_params(), shadow1, atol=1e-12)
    assert np.allclose(agent.target2.flat_params(), shadow2, atol=1e-12)


def test_tiny_mdp_critics_converge_to_value_iteration(tmp_path):
    from varl.harness.config import ExperimentConfig
    from varl.harness.runner import run_single_seed
    from varl.envs.tiny import TINY_REWARDS

    gamma = 0.5
    cfg = ExperimentConfig.from_dict({
        "env": "tiny_mdp", "algo": "sac", "seeds": [0],
        "max_steps": 4000, "eval_every": 2000, "eval_episodes": 3, "warmup_steps": 500,
        "agent": {"gamma": gamma, "alpha": 0.01, "batch_size": 64,
                  "hidden_sizes": [32, 32], "lr": 1e-3, "tau": 0.01},
        "out_dir": str(tmp_path),
    })
    res = run_single_seed(cfg, 0, tmp_path / "seed0")
    q_star = tiny_mdp_value_iteration(TINY_REWARDS, gamma)
    learned = res.final_agent.min_q_values(np.eye(2))
    assert np.abs(learned - q_star).max() < 0.05
    greedy = learned.argmax(axis=1)
    assert np.array_equal(greedy, q_star.argmax(axis=1))


# -- discrete actor ----------------------------------------------------------------


def test_policy_converges_to_uniform_under_flat_critics():
    agent = discrete_agent(alpha=0.5, lr=3e-3)
    constant_output_net(agent.critic1, [1.0] * 4)
    constant_output_net(agent.critic2, [1.0] * 4)
    states = np.random.default_rng(7).normal(size=(16, 3))
    for _ in range(400):
        _, grads, _ = agent.baseline_policy_loss_and_grads(states)
        agent.apply_actor_grads(grads)
    probs = agent.action_probs(states)
    assert np.abs(probs - 0.25).max() < 0.05


def test_policy_concentrates_on_dominant_action_when_alpha_small():
    agent = discrete_agent(alpha=1e-3, lr=3e-3)
    constant_output_net(agent.critic1, [0.0, 0.0, 1.0, 0.0])
    constant_output_net(agent.critic2, [0.0, 0.0, 1.0, 0.0])
    states = np.random.default_rng(8).normal(size=(16, 3))
    for _ in range(1500):
        _, grads, _ = agent.baseline_policy_loss_and_grads(states)
        agent.apply_actor_grads(grads)
    probs = agent.action_probs(states)
    assert probs[:, 2].min() > 0.95


def test_policy_matches_soft_optimum_closed_form():
    # two actions, Q = (0, 1), alpha = 1: optimum is softmax(Q) = (0.269, 0.731)
    agent = SacAgent(2, Discrete(2), hidden_sizes=(16,), alpha=1.0, lr=3e-3,
                     rng=np.random.default_rng(9))
    constant_output_net(agent.critic1, [0.0, 1.0])
    constant_output_net(agent.critic2, [0.0, 1.0])
    state = np.array([[0.3, -0.7]])
    for _ in range(1200):
        _, grads, _ = agent.baseline_policy_loss_and_grads(state)
        agent.apply_actor_grads(grads)
    probs = agent.action_probs(state)[0]
    expected = np.exp([0.0, 1.0]) / np.exp([0.0, 1.0]).sum()
    assert np.abs(probs - expected).max() < 0.02


def test_discrete_baseline_gradient_matches_finite_differences():
    rng = np.random.default_rng(10)
    for _ in range(5):
        agent = discrete_agent(rng=np.random.default_rng(int(rng.integers(1e6))))
        states = rng.normal(size=(6, 3))
        _, grads, _ = agent.baseline_policy_loss_and_grads(states)
        theta = agent.actor.flat_params()

        def loss(flat):
            agent.actor.set_flat_params(flat)
            value, _, _ = agent.baseline_policy_loss_and_grads(states)
            return value

        numeric = finite_difference(loss, theta)
        agent.actor.set_flat_params(theta)
        assert max_rel_error(flatten_grads(grads), numeric) < 1e-4


# -- continuous actor -----------------------------------------------------------------


def test_continuous_actor_tracks_frozen_critic_maximum():
    agent = box_agent(alpha=1e-3, lr=3e-3, hidden_sizes=(32, 32), rng=np.random.default_rng(11))
    a_star = np.array([0.3, -0.4])
    # fit both critics to the concave landscape -|a - a*|^2 by regression
    rng = np.random.default_rng(12)
    from varl.nets import Adam
    critic = agent.critic1
    opt = Adam(critic, lr=3e-3)
    for _ in range(3000):
        a = rng.uniform(-1, 1, size=(64, 2))
        s = np.zeros((64, 3))
        x = np.concatenate([s, a], axis=1)
        y = -((a - a_star) ** 2).sum(axis=1, keepdims=True)
        out, cache = critic.forward_cached(x)
        grads, _ = critic.backward(cache, 2.0 * (out - y) / 64)
        opt.step(critic, grads)
    agent.critic2.load_param_arrays(agent.critic1.param_arrays())

    # grid-search oracle: the actual maximiser of the fitted min-critic
    grid = np.stack(np.meshgrid(np.linspace(-1, 1, 201), np.linspace(-1, 1, 201)),
                    axis=-1).reshape(-1, 2)
    xg = np.concatenate([np.zeros((grid.shape[0], 3)), grid], axis=1)
    q_grid = np.minimum(agent.critic1.forward(xg), agent.critic2.forward(xg))[:, 0]
    fitted_max = grid[q_grid.argmax()]
    assert np.abs(fitted_max - a_star).max() < 0.1  # regression landed near the target

    states = np.zeros((16, 3))
    for _ in range(1500):
        _, grads, _ = agent.baseline_policy_loss_and_grads(states)
        agent.apply_actor_grads(grads)
    mu, _ = agent.gaussian_params(np.zeros((1, 3)))
    settled = np.tanh(mu[0])  # env-space deterministic action
    assert np.abs(settled - fitted_max).max() < 0.05


def test_continuous_sigma_settles_at_max_entropy_width():
    # with flat critics and a large temperature the policy should maximise the
    # entropy of the *squashed* action; the optimal width is interior (pushing
    # sigma further collapses the squashed mass onto the bounds), so compare
    # against a numeric scan of the squashed entropy rather than the clamp
    zs = np.random.default_rng(0).standard_normal(100_000)

    def squashed_entropy(sigma):
        u = sigma * zs
        return 0.5 * np.log(2 * np.pi * np.e * sigma**2) + np.mean(
            2 * (np.log(2) - u - np.logaddexp(0.0, -2.0 * u))
        )

    sigmas = np.linspace(0.4, 2.0, 81)
    sigma_star = sigmas[np.argmax([squashed_entropy(s) for s in sigmas])]

    agent = box_agent(alpha=5.0, lr=3e-3, rng=np.random.default_rng(13))
    constant_output_net(agent.critic1, [0.0])
    constant_output_net(agent.critic2, [0.0])
    states = np.random.default_rng(14).normal(size=(16, 3))
    for _ in range(2000):
        _, grads, _ = agent.baseline_policy_loss_and_grads(states)
        agent.apply_actor_grads(grads)
    _, log_std = agent.gaussian_params(states)
    assert abs(log_std.mean() - np.log(sigma_star)) < 0.15


def test_continuous_baseline_gradient_matches_finite_differences():
    agent = box_agent(rng=np.random.default_rng(15))
    states = np.random.default_rng(16).normal(size=(5, 3))
    eps = np.random.default_rng(17).standard_normal((5, 2))

    def loss_and_grads():
        saved = agent._rng
        agent._rng = FrozenNoise(eps)
        out = agent.baseline_policy_loss_and_grads(states)
        agent._rng = saved
        return out

    _, grads, _ = loss_and_grads()
    theta = agent.actor.flat_params()

    def loss(flat):
        agent.actor.set_flat_params(flat)
        value, _, _ = loss_and_grads()
        return value

    numeric = finite_difference(loss, theta)
    agent.actor.set_flat_params(theta)
    assert max_rel_error(flatten_grads(grads), numeric) < 1e-3


def test_sampled_logprob_matches_recomputed_density():
    agent = box_agent(rng=np.random.default_rng(18))
    states = np.random.default_rng(19).normal(size=(10, 3))
    actions, logp = agent.sample_with_logprob(states, np.random.default_rng(20))
    assert np.abs(agent.log_prob(states, actions) - logp).max() < 1e-10


# -- acting ---------------------------------------------------------------------------


def test_act_deterministic_picks_argmax():
    agent = discrete_agent()
    constant_output_net(agent.actor, [0.0, 5.0, 0.0, 0.0])
    assert agent.act(np.zeros(3), deterministic=True) == 1


def test_act_sampling_frequency_matches_policy():
    agent = discrete_agent(rng=np.random.default_rng(21))
    state = np.array([0.5, -0.5, 0.2])
    probs = agent.action_probs(state)[0]
    counts = np.zeros(4)
    for _ in range(50_000):
        counts[agent.act(state)] += 1
    expected = probs * 50_000
    stat = float(((counts - expected) ** 2 / expected).sum())
    assert stat < CHI2_CRIT_DF3


def test_continuous_actions_respect_box_bounds():
    agent = box_agent(rng=np.random.default_rng(22))
    rng = np.random.default_rng(23)
    for _ in range(200):
        s = rng.normal(scale=3.0, size=3)
        a = agent.act(s)
        assert agent.action_space.contains(a)
        a_det = agent.act(s, deterministic=True)
        assert agent.action_space.contains(a_det)


def test_discrete_entropy_bounds():
    agent = discrete_agent(rng=np.random.default_rng(24))
    states = np.random.default_rng(25).normal(size=(64, 3))
    h = agent.entropy(states)
    assert np.all(h >= 0.0) and np.all(h <= np.log(4) + 1e-12)


def test_presquash_clamps_boundary_actions():
    agent = box_agent()
    before = agent.squash_clamp_count
    u = agent.presquash(np.array([[1.0, -1.0]]))
    assert np.all(np.isfinite(u))
    assert agent.squash_clamp_count == before + 2


def test_alpha_autotuning_moves_toward_target():
    agent = discrete_agent(auto_alpha=True, alpha=0.2)
    # entropy far above target -> alpha should shrink
    a0 = agent.alpha
    for _ in range(50):
        agent.maybe_update_alpha({"entropy": float(np.log(4))})
    assert agent.alpha < a0
    # entropy far below target -> alpha should grow
    a1 = agent.alpha
    for _ in range(100):
        agent.maybe_update_alpha({"entropy": 0.0})
    assert agent.alpha > a1


def test_agent_checkpoint_round_trip(tmp_path):
    for make in (discrete_agent, box_agent):
        agent = make(rng=np.random.default_rng(26))
        path = tmp_path / f"{make.__name__}.npz"
        agent.save(path)
        loaded = SacAgent.load(path, rng=np.random.default_rng(0))
        s = np.array([0.1, 0.2, 0.3])
        assert np.array_equal(loaded.actor.forward(s), agent.actor.forward(s))
        assert np.array_equal(loaded.critic1.forward(np.zeros(loaded.critic1.n_inputs)),
                              agent.critic1.forward(np.zeros(agent.critic1.n_inputs)))
        assert loaded.gamma == agent.gamma and loaded.alpha == agent.alpha
