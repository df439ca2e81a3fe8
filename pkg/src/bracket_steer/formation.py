"""Leader-following formations.

Each follower is a driftless control-affine agent steered so that its state
tracks the leader's state plus a fixed offset.  Stacking the displacement
variables y_l = x_l - x_L - d_l turns the formation into one partial
stabilization problem whose extension matrix is block-diagonal, so agents
are integrated independently against a single shared leader trajectory.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DivergenceError, InvalidInputError, RankDegeneracyError
from .model import as_state
from .simulate import (DIVERGENCE_NORM_CAP, SampledTrajectory, SimConfig,
                       _Recorder, _rk4_step, interval_grid, resolve_config)
from .synthesis import (check_selection, extension_matrix, held_control,
                        _solve_steering)


@dataclass(frozen=True)
class FollowerAgent:
    """A follower: its own system, bracket selection, gain, and offset.

    The agent's whole state is the stabilized block (n2 = 0); offset d is
    the desired displacement from the leader.
    """

    system: object
    selection: object
    gamma: float
    offset: tuple

    def __post_init__(self):
        if self.system.n2 != 0:
            raise InvalidInputError(
                f"follower systems must have n2 = 0, got n2 = {self.system.n2}")
        if not self.gamma > 0:
            raise InvalidInputError(f"agent gamma must be > 0, got {self.gamma}")
        offset = tuple(float(v) for v in np.atleast_1d(self.offset))
        if len(offset) != self.system.n:
            raise InvalidInputError(
                f"offset has dimension {len(offset)}, expected {self.system.n}")
        object.__setattr__(self, "offset", offset)

    def offset_vec(self):
        return np.array(self.offset, dtype=float)


@dataclass(frozen=True)
class LeaderModel:
    """Leader dynamics dx_L/dt = f(t, x_L) with its initial state.

    name identifies the dynamics in the field registry so scenarios can be
    serialized; dynamics must stay bounded along simulated paths (runs are
    divergence-guarded, not proven safe).
    """

    name: str
    dynamics: Callable[[float, np.ndarray], np.ndarray]
    x0: tuple

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(v) for v in np.atleast_1d(self.x0)))

    def x0_vec(self):
        return np.array(self.x0, dtype=float)


@dataclass(frozen=True, eq=False)
class FormationTrajectory:
    """Shared-grid record of a formation run.

    agent_trajs hold each agent's own states; their y_error series (and
    error_series here) are the displacement norms ||x_l - x_L - d_l|| on the
    dense grid, which are exactly the stacked system's stabilization errors.
    displacement_trajs hold the same runs expressed in displacement
    coordinates, ready for decay_report with target zero.
    """

    epsilon: float
    dense_times: np.ndarray
    leader_states: np.ndarray
    sample_times: np.ndarray
    leader_samples: np.ndarray
    agent_trajs: tuple
    displacement_trajs: tuple
    error_series: tuple


@dataclass(frozen=True)
class GainConditionRow:
    """Empirical check of the gain bound gamma > sup_t ||f(t, x_L)|| / rho."""

    agent_index: int
    gamma: float
    sup_leader_speed: float
    rho: float
    satisfied: bool

    def to_dict(self):
        return {
            "agent_index": self.agent_index,
            "gamma": self.gamma,
            "sup_leader_speed": self.sup_leader_speed,
            "rho": self.rho,
            "satisfied": self.satisfied,
        }


def follower_steering(agent, gains, x_agent, x_leader):
    """a = -gamma_agent * F(x_agent)^{-1} (x_agent - x_leader - d)."""
    p = agent.system.n
    x_agent = as_state(x_agent, p)
    x_leader = as_state(x_leader, p)
    disp = x_agent - x_leader - agent.offset_vec()
    F = extension_matrix(agent.system, agent.selection, x_agent)
    return _solve_steering(F, -agent.gamma * disp, gains.cond_cap, x_agent)


def follower_controller(agent, gains):
    """Controller (t, x_agent, x_leader) -> u for one agent.

    Same control family as the single-system law, with y - y* replaced by
    the displacement from the leader-plus-offset target.
    """
    check_selection(agent.system, agent.selection)
    m = agent.system.m
    eps = gains.epsilon

    def controller(t, x_agent, x_leader):
        a = follower_steering(agent, gains, x_agent, x_leader)
        return held_control(agent.selection, eps, m, a, t)

    return controller


def formation_error(traj, agent_index):
    """Dense ||x_l(t) - x_L(t) - d_l|| series for one agent."""
    if not 0 <= agent_index < len(traj.error_series):
        raise InvalidInputError(
            f"agent_index {agent_index} out of range 0..{len(traj.error_series) - 1}")
    return traj.error_series[agent_index]


def _guard(x, t, what):
    if np.all(np.isfinite(x)) and np.linalg.norm(x) <= DIVERGENCE_NORM_CAP:
        return
    raise DivergenceError(
        f"{what} diverged at t={t:.6g} (non-finite or norm > {DIVERGENCE_NORM_CAP:g})",
        t=t, state=np.array(x, dtype=float))


def simulate_formation(agents, leader, x0s, gains, cfg=None):
    """Integrate the leader once and every agent against it, on one grid.

    Per the sampling semantics, each agent's control over
    [tau_j, tau_j + epsilon) is built from the frozen pair
    (x_l(tau_j), x_L(tau_j)).  Agents never interact, so a joint run is
    state-for-state identical to simulating each agent alone.
    """
    if cfg is None:
        cfg = SimConfig()
    agents = tuple(agents)
    if not agents:
        raise InvalidInputError("at least one agent is required")
    p = agents[0].system.n
    for agent in agents:
        if agent.system.n != p:
            raise InvalidInputError("all agents must share one state dimension")
        check_selection(agent.system, agent.selection)
    x0s = [as_state(x0, p) for x0 in x0s]
    if len(x0s) != len(agents):
        raise InvalidInputError(f"got {len(x0s)} initial states for {len(agents)} agents")

    eps = gains.epsilon
    kappa_max = max(agent.selection.kappa_max for agent in agents)
    t_final, nsub = resolve_config(cfg, gains, kappa_max)
    n_int, tail = interval_grid(t_final, eps)
    n_intervals = n_int + (1 if tail > 0.0 else 0)
    if n_intervals == 0:
        raise InvalidInputError(f"t_final={t_final} is too short for epsilon={eps}")
    total_substeps = n_intervals * nsub
    stride = cfg.record_stride

    zero_target = np.zeros(p)
    recs = [_Recorder(agent.selection, eps, agent.system.m, p, p, zero_target)
            for agent in agents]
    leader_times = []
    leader_states = []

    xL = leader.x0_vec()
    xs = [x0.copy() for x0 in x0s]
    sample_times = [0.0]
    leader_samples = [xL.copy()]
    agent_samples = [[x.copy()] for x in xs]

    def steer_all(t):
        a_list = []
        for idx, agent in enumerate(agents):
            try:
                a_list.append(follower_steering(agent, gains, xs[idx], xL))
            except RankDegeneracyError as exc:
                exc.agent_index = idx
                raise
        return a_list

    def record_all(t, a_list, j):
        leader_times.append(t)
        leader_states.append(xL.copy())
        for idx in range(len(agents)):
            recs[idx].record(t, xs[idx], j, a_list[idx])

    a_list = steer_all(0.0)
    record_all(0.0, a_list, 0)
    g = 0

    leader_rhs = leader.dynamics

    for j in range(n_intervals):
        is_tail = tail > 0.0 and j == n_int
        h = (tail if is_tail else eps) / nsub
        base_t = j * eps

        rhs_list = []
        for idx, agent in enumerate(agents):
            fields = agent.system.control_fields
            m = agent.system.m
            sel = agent.selection

            def rhs(t, state, a=a_list[idx], fields=fields, m=m, sel=sel):
                u = held_control(sel, eps, m, a, t)
                out = np.zeros(p)
                for k in range(m):
                    if u[k] != 0.0:
                        out += u[k] * np.asarray(fields[k](state), dtype=float)
                return out

            rhs_list.append(rhs)

        for i in range(1, nsub + 1):
            t_prev = base_t + (i - 1) * h
            xL = _rk4_step(lambda t, s: np.asarray(leader_rhs(t, s), dtype=float),
                           t_prev, xL, h)
            for idx in range(len(agents)):
                xs[idx] = _rk4_step(rhs_list[idx], t_prev, xs[idx], h)
            g += 1
            if i < nsub:
                t_now = base_t + i * h
                _guard(xL, t_now, "leader")
                for idx in range(len(agents)):
                    _guard(xs[idx], t_now, f"agent {idx}")
                if g % stride == 0:
                    record_all(t_now, a_list, j)
            elif is_tail:
                _guard(xL, t_final, "leader")
                for idx in range(len(agents)):
                    _guard(xs[idx], t_final, f"agent {idx}")
                record_all(t_final, a_list, j)
            else:
                t_b = (j + 1) * eps
                _guard(xL, t_b, "leader")
                for idx in range(len(agents)):
                    _guard(xs[idx], t_b, f"agent {idx}")
                sample_times.append(t_b)
                leader_samples.append(xL.copy())
                for idx in range(len(agents)):
                    agent_samples[idx].append(xs[idx].copy())
                a_list = steer_all(t_b)
                if g % stride == 0 or g == total_substeps:
                    record_all(t_b, a_list, j + 1)

    leader_states = np.array(leader_states)
    leader_samples_arr = np.array(leader_samples)
    sample_times_arr = np.array(sample_times)
    dense_times = np.array(leader_times)

    agent_trajs = []
    displacement_trajs = []
    errors = []
    for idx, agent in enumerate(agents):
        raw = recs[idx].build(sample_times_arr, np.array(agent_samples[idx]))
        d = agent.offset_vec()
        disp_dense = raw.dense_states - leader_states - d
        disp_samples = raw.sample_states - leader_samples_arr - d
        err = np.linalg.norm(disp_dense, axis=1)
        agent_trajs.append(SampledTrajectory(
            epsilon=eps, n1=p,
            sample_times=raw.sample_times, sample_states=raw.sample_states,
            dense_times=raw.dense_times, dense_states=raw.dense_states,
            dense_controls=raw.dense_controls, y_error=err,
            interval_index=raw.interval_index))
        displacement_trajs.append(SampledTrajectory(
            epsilon=eps, n1=p,
            sample_times=raw.sample_times, sample_states=disp_samples,
            dense_times=raw.dense_times, dense_states=disp_dense,
            dense_controls=raw.dense_controls, y_error=err,
            interval_index=raw.interval_index))
        errors.append(err)

    return FormationTrajectory(
        epsilon=eps,
        dense_times=dense_times,
        leader_states=leader_states,
        sample_times=sample_times_arr,
        leader_samples=leader_samples_arr,
        agent_trajs=tuple(agent_trajs),
        displacement_trajs=tuple(displacement_trajs),
        error_series=tuple(errors),
    )


def simulate_leader(leader, gains, cfg=None, kappa_max=1):
    """Integrate the leader alone on the sampling-aligned grid.

    Returns (dense_times, dense_states); used by the scenario validator when
    no full formation run is wanted.
    """
    if cfg is None:
        cfg = SimConfig()
    eps = gains.epsilon
    t_final, nsub = resolve_config(cfg, gains, kappa_max)
    n_int, tail = interval_grid(t_final, eps)
    n_intervals = n_int + (1 if tail > 0.0 else 0)

    def rhs(t, s):
        return np.asarray(leader.dynamics(t, s), dtype=float)

    xL = leader.x0_vec()
    times = [0.0]
    states = [xL.copy()]
    for j in range(n_intervals):
        is_tail = tail > 0.0 and j == n_int
        h = (tail if is_tail else eps) / nsub
        base_t = j * eps
        for i in range(1, nsub + 1):
            xL = _rk4_step(rhs, base_t + (i - 1) * h, xL, h)
            if i == nsub:
                # Boundary instants use the grid expression, not accumulated
                # sub-steps, to match the sampling clock exactly.
                t_now = t_final if is_tail else (j + 1) * eps
            else:
                t_now = base_t + i * h
            _guard(xL, t_now, "leader")
            times.append(t_now)
            states.append(xL.copy())
    return np.array(times), np.array(states)


def gain_condition_report(leader, agents, rho, dense_times, leader_states):
    """Check gamma_l > sup_t ||f(t, x_L(t))|| / rho along a leader path."""
    if not rho > 0:
        raise InvalidInputError(f"rho must be > 0, got {rho}")
    sup = 0.0
    for t, xL in zip(dense_times, leader_states):
        sup = max(sup, float(np.linalg.norm(np.asarray(leader.dynamics(float(t), xL), float))))
    rows = []
    for idx, agent in enumerate(agents):
        rows.append(GainConditionRow(
            agent_index=idx, gamma=agent.gamma, sup_leader_speed=sup,
            rho=float(rho), satisfied=agent.gamma > sup / rho))
    return tuple(rows)
