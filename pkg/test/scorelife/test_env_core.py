import numpy as np
import pytest

from back_end.classe.env_core import (
    CartpoleEnv,
    cartpole_step,
    constant_mdp,
    cycle_mdp,
    make_env,
    quadratic_cost,
    reward_cost,
    rollout,
)
from back_end.utils.exceptions import ConfigError, EnvironmentStateError, InvalidActionError


def test_cycle_transitions_and_costs(cycle3):
    assert [cycle3.step(x, 0) for x in range(3)] == [1, 2, 0]
    assert [cycle3.step(x, 1) for x in range(3)] == [2, 0, 1]
    assert [cycle3.cost(x, 1) for x in range(3)] == [0.0, 1.0, 2.0]
    assert cycle3.g_max == 2.0


def test_finite_env_rejects_bad_input(cycle3):
    with pytest.raises(InvalidActionError):
        cycle3.step(0, 2)
    with pytest.raises(EnvironmentStateError):
        cycle3.step(5, 0)


def test_gamma_must_be_inside_unit_interval():
    with pytest.raises(ConfigError):
        cycle_mdp(3, gamma=1.0)


def test_cycle_needs_two_states():
    with pytest.raises(ConfigError):
        cycle_mdp(1)


def test_cartpole_step_from_origin():
    nxt = cartpole_step(np.zeros(4), 1)
    assert nxt[0] == 0.0
    assert nxt[2] == 0.0
    assert nxt[1] == pytest.approx(0.195122, abs=1e-6)
    assert nxt[3] == pytest.approx(-0.292683, abs=1e-6)


def test_cartpole_step_is_antisymmetric():
    left = cartpole_step(np.zeros(4), 0)
    right = cartpole_step(np.zeros(4), 1)
    np.testing.assert_allclose(left, -right)


def test_repeated_push_tilts_pole_backwards():
    traj = rollout(CartpoleEnv(), np.zeros(4), [1] * 10)
    thetas = [s[2] for s in traj.states]
    assert all(b < a for a, b in zip(thetas[1:], thetas[2:]))


def test_cartpole_rejects_non_finite_state():
    with pytest.raises(EnvironmentStateError):
        cartpole_step(np.array([0.0, np.nan, 0.0, 0.0]), 1)
    with pytest.raises(InvalidActionError):
        cartpole_step(np.zeros(4), 2)


def test_quadratic_cost():
    assert quadratic_cost(np.zeros(4)) == 0.0
    assert quadratic_cost(np.array([1.0, 1.0, 1.0, 1.0])) == 12.0
    state = np.array([1.0, 0.0, 1.0, 0.0])
    assert quadratic_cost(state, q_diag=np.array([1.0, 1.0, 1.0, 1.0])) == 2.0
    assert quadratic_cost(state, q_diag=[3.0, 0.0, 0.5, 0.0]) == 3.5


def test_reward_cost_values():
    assert reward_cost(np.zeros(4)) == -1.0
    assert reward_cost(np.array([3.0, 0.0, 0.0, 0.0])) == 0.0


def test_terminal_states_are_absorbing(cartpole):
    terminal = np.array([3.0, 1.0, 0.0, 0.0])
    assert cartpole.is_terminal(terminal)
    np.testing.assert_array_equal(cartpole.step(terminal, 1), terminal)
    assert cartpole.cost(terminal, 0) == cartpole.g_max
    assert cartpole.reward(terminal, 0) == 0.0
    reward_env = CartpoleEnv(cost_kind="reward")
    assert reward_env.cost(terminal, 0) == 0.0
    assert reward_env.cost(np.zeros(4), 0) == -1.0


def test_quadratic_cost_bounded_by_g_max(cartpole, rng):
    states = rng.uniform(-1.0, 1.0, size=(200, 4)) * np.array([2.4, 5.0, 0.2, 5.0])
    costs = cartpole.cost_batch(states, np.zeros(200, dtype=int))
    assert costs.max() <= cartpole.g_max
    assert cartpole.g_max == pytest.approx(33.1209, abs=1e-3)


def test_batch_matches_single_step(cartpole, rng):
    states = rng.uniform(-0.05, 0.05, size=(16, 4))
    actions = rng.integers(0, 2, size=16)
    batch = cartpole.step_batch(states, actions)
    for s, a, b in zip(states, actions, batch):
        np.testing.assert_allclose(cartpole.step(s, int(a)), b)


def test_rollout_on_cycle(cycle3):
    traj = rollout(cycle3, 0, [0, 0])
    assert traj.states == [0, 1, 2]
    assert traj.costs == [0.0, 1.0]
    assert traj.final_state == 2
    assert len(traj) == 2
    assert traj.discounted_cost(0.5) == 0.5


def test_rollout_stops_on_termination():
    traj = rollout(CartpoleEnv(), np.array([2.39, 3.0, 0.0, 0.0]), [1] * 10)
    assert traj.terminated
    assert len(traj) < 10


def test_trajectory_frame(cartpole, origin):
    traj = rollout(cartpole, origin, [1, 0, 1])
    frame = traj.to_frame(cartpole.state_labels)
    assert list(frame.columns) == ["t", "x", "xdot", "theta", "thetadot", "action", "stage_cost", "cum_reward"]
    assert len(frame) == 4
    assert frame["cum_reward"].iloc[-1] == 3.0


def test_make_env():
    assert make_env("cycle", 0.5, n_states=4).n_states == 4
    assert make_env("constant", 0.5).cost(0, 1) == 1.0
    assert make_env("cartpole", 0.8, "reward").cost_kind == "reward"
    with pytest.raises(ConfigError):
        make_env("pendule", 0.5)


def test_constant_mdp_is_a_fixed_point():
    env = constant_mdp(1.0, gamma=0.5)
    assert env.step(0, 0) == 0
    assert env.step(0, 1) == 0


def test_mirrored_rollouts_stay_mirrored(cartpole, rng):
    for _ in range(5):
        x0 = rng.uniform(-0.05, 0.05, size=4)
        actions = rng.integers(0, 2, size=40)
        forward = rollout(cartpole, x0, actions)
        mirrored = rollout(cartpole, -x0, 1 - actions)
        assert len(mirrored) == len(forward)
        assert mirrored.terminated == forward.terminated
        for a, b in zip(forward.states, mirrored.states):
            np.testing.assert_allclose(np.asarray(b, dtype=float), -np.asarray(a, dtype=float), rtol=0, atol=1e-12)
        assert mirrored.costs == pytest.approx(forward.costs, abs=1e-12)


def test_rollouts_are_bit_identical(cartpole, rng):
    x0 = rng.uniform(-0.05, 0.05, size=4)
    actions = rng.integers(0, 2, size=30)
    first = rollout(cartpole, x0, actions)
    second = rollout(cartpole, x0.copy(), list(actions))
    assert np.array_equal(np.asarray(first.states, dtype=float), np.asarray(second.states, dtype=float))
    assert first.costs == second.costs
