"""Interference-aware transmit power control as a small MDP.

State: the node power vector plus each node's top-K incoming interference
powers.  Action: pick one node and move its power by -3, 0 or +3 dB
(clamped to ``[p_min, p_max]``).  Reward of a power vector ``P``::

    r = -alpha * sum_{i != j} max(0, I_ij - threshold)
        - beta * sum_i P_i[W]
        - qos_weight * sum_i max(0, floor_i - P_i)

The third term is optional (``qos_weight = 0`` by default) and gives a
node a minimum power it should not drop below; without it the optimum is
always every node at ``p_min``.

Two Q-function representations are available: a table over the 3 dB
power grid for N <= 4, and a one-hidden-layer approximator trained by
semi-gradient TD for larger instances.
"""

from __future__ import annotations

import io
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DivergenceDetected, InvalidAction, TooLarge
from .mesh import (InterferenceMatrix, LinkModel, Topology, interference_from_gains,
                   link_gain_matrix, top_k_features)

DELTAS_DB = (-3.0, 0.0, 3.0)
POLICY_FORMAT = "meshsim-policy v1"


@dataclass(frozen=True)
class RewardConfig:
    alpha: float = 1.0
    beta: float = 1.0
    i_threshold_dbm: float = -70.0
    qos_weight: float = 0.0
    qos_floor_dbm: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.qos_weight < 0:
            raise ValueError("reward weights must be non-negative")
        if self.alpha == 0 and self.beta == 0:
            raise ValueError("alpha and beta cannot both be zero")
        if self.qos_floor_dbm is not None:
            object.__setattr__(self, "qos_floor_dbm", tuple(float(v) for v in self.qos_floor_dbm))


def reward(imat: InterferenceMatrix, powers_dbm, cfg: RewardConfig) -> float:
    p = np.asarray(powers_dbm, dtype=float)
    if p.shape != (imat.n,):
        raise ValueError("power vector and interference matrix disagree on N")
    m = imat.as_array()
    excess = np.nansum(np.maximum(m - cfg.i_threshold_dbm, 0.0))
    watts = np.sum(10.0 ** (p / 10.0)) / 1000.0
    r = -cfg.alpha * excess - cfg.beta * watts
    if cfg.qos_weight and cfg.qos_floor_dbm is not None:
        r -= cfg.qos_weight * np.sum(np.maximum(np.asarray(cfg.qos_floor_dbm) - p, 0.0))
    return float(r)


@dataclass(frozen=True)
class PcState:
    powers_dbm: tuple[float, ...]
    topk_features: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class PcAction:
    node_id: int
    delta_db: float


class PowerControlEnv:
    """Deterministic power-control environment over a fixed topology."""

    def __init__(self, topology: Topology, cfg: RewardConfig, *, p_min_dbm: float = -10.0,
                 p_max_dbm: float = 30.0, k: int = 3, model=LinkModel.FSPL,
                 excess_loss_db: float = 0.0, **link_kw):
        if p_min_dbm > p_max_dbm:
            raise ValueError("p_min_dbm must not exceed p_max_dbm")
        self.topology = topology
        self.cfg = cfg
        self.p_min = float(p_min_dbm)
        self.p_max = float(p_max_dbm)
        self.k = min(int(k), topology.n - 1)
        self.model = LinkModel.parse(model)
        self.gain = link_gain_matrix(topology, self.model, **link_kw) - excess_loss_db
        if cfg.qos_floor_dbm is not None and len(cfg.qos_floor_dbm) != topology.n:
            raise ValueError("qos_floor_dbm length does not match node count")

    @property
    def n(self) -> int:
        return self.topology.n

    @property
    def n_actions(self) -> int:
        return 3 * self.n

    def actions(self) -> list[PcAction]:
        """All actions in (node_id, delta) lexicographic order."""
        return [PcAction(i, d) for i in range(self.n) for d in DELTAS_DB]

    def action_index(self, action: PcAction) -> int:
        return 3 * action.node_id + DELTAS_DB.index(action.delta_db)

    def levels(self) -> tuple[float, ...]:
        """Power grid reachable from p_min in 3 dB steps, plus p_max."""
        steps = int(math.floor((self.p_max - self.p_min) / 3.0 + 1e-9))
        lv = [self.p_min + 3.0 * s for s in range(steps + 1)]
        if self.p_max - lv[-1] > 1e-9:
            lv.append(self.p_max)
        return tuple(lv)

    def matrix(self, powers_dbm) -> InterferenceMatrix:
        return interference_from_gains(self.gain, powers_dbm)

    def make_state(self, powers_dbm: Sequence[float]) -> PcState:
        p = tuple(float(v) for v in powers_dbm)
        if len(p) != self.n:
            raise ValueError("power vector length does not match node count")
        if any(v < self.p_min - 1e-9 or v > self.p_max + 1e-9 for v in p):
            raise ValueError(f"powers must lie in [{self.p_min}, {self.p_max}] dBm")
        feats = top_k_features(self.matrix(p), self.k) if self.k > 0 else np.empty((self.n, 0))
        return PcState(p, tuple(tuple(float(x) for x in row) for row in feats))

    def reward_of(self, state_or_powers) -> float:
        p = state_or_powers.powers_dbm if isinstance(state_or_powers, PcState) else state_or_powers
        return reward(self.matrix(p), p, self.cfg)

    def step(self, state: PcState, action: PcAction) -> tuple[PcState, float]:
        """Apply one action; returns the next state and that state's reward."""
        if not (isinstance(action.node_id, (int, np.integer)) and 0 <= action.node_id < self.n):
            raise InvalidAction(f"node_id {action.node_id} outside [0, {self.n})")
        if action.delta_db not in DELTAS_DB:
            raise InvalidAction(f"delta_db {action.delta_db} not in {DELTAS_DB}")
        p = list(state.powers_dbm)
        i = int(action.node_id)
        p[i] = min(self.p_max, max(self.p_min, p[i] + action.delta_db))
        nxt = state if p[i] == state.powers_dbm[i] else self.make_state(p)
        return nxt, self.reward_of(nxt)

    def features(self, state: PcState) -> np.ndarray:
        """Scaled feature vector for the approximator."""
        span = max(self.p_max - self.p_min, 1e-9)
        pw = (np.asarray(state.powers_dbm) - self.p_min) / span
        tk = (np.asarray(state.topk_features).ravel() - self.cfg.i_threshold_dbm) / 20.0
        return np.concatenate([pw, tk])

    def level_key(self, state: PcState) -> tuple[int, ...]:
        lv = np.asarray(self.levels())
        return tuple(int(np.argmin(np.abs(lv - p))) for p in state.powers_dbm)


def env_step(topology: Topology, state: PcState, action: PcAction, cfg: RewardConfig,
             **env_kw) -> tuple[PcState, float]:
    """Functional form of :meth:`PowerControlEnv.step`."""
    return PowerControlEnv(topology, cfg, **env_kw).step(state, action)


class TabularQ:
    representation = "tabular"

    def __init__(self, env: PowerControlEnv):
        self.n = env.n
        self.k = env.k
        self.p_min, self.p_max = env.p_min, env.p_max
        self.levels = env.levels()
        self._key = env.level_key
        self.table: dict[tuple[int, ...], np.ndarray] = {}

    def values(self, state: PcState) -> np.ndarray:
        key = self._key(state)
        row = self.table.get(key)
        return np.zeros(3 * self.n) if row is None else row.copy()

    def update(self, state: PcState, a: int, target: float, lr: float) -> float:
        key = self._key(state)
        row = self.table.setdefault(key, np.zeros(3 * self.n))
        row[a] += lr * (target - row[a])
        return abs(row[a])


class MlpQ:
    """One hidden layer (tanh) approximator, one output per action."""

    representation = "mlp"

    def __init__(self, env: PowerControlEnv, hidden: int = 32, rng=None):
        rng = np.random.default_rng(0) if rng is None else rng
        self.n = env.n
        self.k = env.k
        self.p_min, self.p_max = env.p_min, env.p_max
        self._feat = env.features
        n_in = env.n + env.n * env.k
        self.W1 = rng.uniform(-1, 1, (hidden, n_in)) / math.sqrt(n_in)
        self.b1 = np.zeros(hidden)
        self.W2 = rng.uniform(-1, 1, (3 * env.n, hidden)) / math.sqrt(hidden)
        self.b2 = np.zeros(3 * env.n)

    def _forward(self, x):
        h = np.tanh(self.W1 @ x + self.b1)
        return h, self.W2 @ h + self.b2

    def values(self, state: PcState) -> np.ndarray:
        return self._forward(self._feat(state))[1]

    def update(self, state: PcState, a: int, target: float, lr: float) -> float:
        x = self._feat(state)
        h, q = self._forward(x)
        err = q[a] - target
        dh = err * self.W2[a] * (1.0 - h * h)
        self.W2[a] -= lr * err * h
        self.b2[a] -= lr * err
        self.W1 -= lr * np.outer(dh, x)
        self.b1 -= lr * dh
        return float(np.max(np.abs(self.values(state))))


def select_action(q, state: PcState, epsilon: float, rng: np.random.Generator) -> PcAction:
    """Epsilon-greedy; greedy ties go to the smallest (node_id, delta)."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    n_actions = 3 * q.n
    if epsilon > 0.0 and rng.random() < epsilon:
        a = int(rng.integers(n_actions))
    else:
        a = int(np.argmax(q.values(state)))
    return PcAction(a // 3, DELTAS_DB[a % 3])


@dataclass(frozen=True)
class TrainHyper:
    episodes: int = 200
    steps_per_episode: int = 50
    gamma: float = 0.95
    lr: float = 0.01
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    replay: bool = False
    replay_size: int = 2000
    replay_batch: int = 8
    hidden: int = 32
    representation: str = "auto"
    q_bound: float = 1e6

    def __post_init__(self):
        if self.episodes <= 0 or self.steps_per_episode <= 0 or self.lr <= 0:
            raise ValueError("episodes, steps_per_episode and lr must be positive")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")

    def epsilon(self, episode: int) -> float:
        """Linear decay from start to end over the first 80% of episodes."""
        span = max(1, int(0.8 * self.episodes))
        frac = min(1.0, episode / span)
        return self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)


@dataclass
class LearningCurve:
    returns: list[float] = field(default_factory=list)
    epsilons: list[float] = field(default_factory=list)

    def __len__(self):
        return len(self.returns)

    def to_csv(self) -> str:
        lines = ["episode,return,epsilon"]
        lines += [f"{i},{r!r},{e!r}" for i, (r, e) in enumerate(zip(self.returns, self.epsilons))]
        return "\n".join(lines) + "\n"


def make_q(env: PowerControlEnv, hyper: TrainHyper, rng=None):
    rep = hyper.representation
    if rep == "auto":
        rep = "tabular" if env.n <= 4 else "mlp"
    if rep == "tabular":
        return TabularQ(env)
    if rep == "mlp":
        return MlpQ(env, hidden=hyper.hidden, rng=rng)
    raise ValueError(f"unknown representation {rep!r}")


def train_policy(env: PowerControlEnv, hyper: TrainHyper = TrainHyper(), seed: int = 0):
    """Q-learning (tabular) or semi-gradient TD(0) (approximator).

    Each episode starts from a random power vector on the 3 dB grid.
    Returns ``(q, curve)``; a fixed seed reproduces the curve exactly.
    """
    rng = np.random.default_rng(seed)
    q = make_q(env, hyper, rng=np.random.default_rng(seed + 1))
    levels = np.asarray(env.levels())
    curve = LearningCurve()
    buffer: deque = deque(maxlen=hyper.replay_size)

    def learn(s, a, r, s2):
        target = r + hyper.gamma * float(np.max(q.values(s2)))
        mag = q.update(s, a, target, hyper.lr)
        if not math.isfinite(mag) or mag > hyper.q_bound:
            raise DivergenceDetected(f"|Q| reached {mag:.3g} (bound {hyper.q_bound:g}); lower lr")

    for ep in range(hyper.episodes):
        eps = hyper.epsilon(ep)
        state = env.make_state(rng.choice(levels, size=env.n))
        total = 0.0
        for _ in range(hyper.steps_per_episode):
            action = select_action(q, state, eps, rng)
            nxt, r = env.step(state, action)
            a = env.action_index(action)
            learn(state, a, r, nxt)
            if hyper.replay:
                buffer.append((state, a, r, nxt))
                for j in rng.integers(len(buffer), size=min(hyper.replay_batch, len(buffer))):
                    learn(*buffer[int(j)])
            total += r
            state = nxt
        curve.returns.append(float(total))
        curve.epsilons.append(eps)
    return q, curve


def greedy_rollout(env: PowerControlEnv, q, start: PcState, max_steps: int = 200,
                   floor_dbm: Sequence[float] | None = None) -> tuple[PcState, float, int]:
    """Follow the greedy policy until the state stops changing.

    Returns ``(final_state, reward, steps)``.  A revisited state (cycle)
    also ends the rollout.  With ``floor_dbm``, actions that would take a
    node below its floor are treated as no-ops.
    """
    state = start
    seen = {state.powers_dbm}
    for step in range(max_steps):
        action = select_action(q, state, 0.0, None)
        if floor_dbm is not None and action.delta_db < 0:
            i = action.node_id
            if state.powers_dbm[i] + action.delta_db < floor_dbm[i] - 1e-9:
                return state, env.reward_of(state), step
        nxt, _ = env.step(state, action)
        if nxt.powers_dbm == state.powers_dbm or nxt.powers_dbm in seen:
            return nxt, env.reward_of(nxt), step
        seen.add(nxt.powers_dbm)
        state = nxt
    return state, env.reward_of(state), max_steps


def brute_force_optimal(env: PowerControlEnv, power_levels: Sequence[float],
                        limit: int = 10**6) -> tuple[tuple[float, ...], float]:
    """Exhaustive search over ``power_levels ** N``.

    Ties resolve to the lexicographically smallest power vector.
    """
    levels = sorted(float(v) for v in power_levels)
    if len(levels) ** env.n > limit:
        raise TooLarge(f"{len(levels)}^{env.n} candidates exceed the limit of {limit}")
    best, best_r = None, -math.inf
    for combo in itertools.product(levels, repeat=env.n):
        r = reward(env.matrix(combo), combo, env.cfg)
        if r > best_r:
            best, best_r = combo, r
    return best, best_r


def save_policy(q) -> str:
    """Serialise a Q-function to the versioned flat text format."""
    buf = io.StringIO()
    buf.write(f"{POLICY_FORMAT}\n")
    buf.write(f"representation={q.representation}\nn={q.n}\nk={q.k}\n")
    buf.write(f"p_min={q.p_min!r}\np_max={q.p_max!r}\n")
    if q.representation == "tabular":
        buf.write("levels=" + ",".join(repr(v) for v in q.levels) + "\n")
        buf.write(f"rows={len(q.table)}\n")
        for key in sorted(q.table):
            buf.write(",".join(map(str, key)) + ":" + ",".join(repr(float(v)) for v in q.table[key]) + "\n")
    else:
        for name in ("W1", "b1", "W2", "b2"):
            arr = np.atleast_2d(getattr(q, name))
            buf.write(f"block={name} shape={'x'.join(map(str, getattr(q, name).shape))}\n")
            for row in arr:
                buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def load_policy(text: str, env: PowerControlEnv):
    """Inverse of :func:`save_policy`; the header must match ``env``."""
    lines = text.splitlines()
    if not lines or lines[0] != POLICY_FORMAT:
        raise ValueError("not a meshsim policy file (bad header)")
    head = {}
    i = 1
    # tabular headers end with rows=, approximator headers with the first block
    while i < len(lines) and not lines[i].startswith("block="):
        key, _, val = lines[i].partition("=")
        head[key] = val
        i += 1
        if key == "rows":
            break
    if int(head["n"]) != env.n or int(head["k"]) != env.k:
        raise ValueError(f"policy is for n={head['n']}, k={head['k']}; env has n={env.n}, k={env.k}")
    if float(head["p_min"]) != env.p_min or float(head["p_max"]) != env.p_max:
        raise ValueError("policy power bounds do not match the environment")
    if head["representation"] == "tabular":
        q = TabularQ(env)
        for line in lines[i:i + int(head["rows"])]:
            key, _, vals = line.partition(":")
            q.table[tuple(int(v) for v in key.split(","))] = np.array([float(v) for v in vals.split(",")])
        return q
    q = MlpQ(env, hidden=1)
    while i < len(lines):
        meta = dict(tok.split("=") for tok in lines[i].split())
        shape = tuple(int(s) for s in meta["shape"].split("x"))
        rows = 1 if len(shape) == 1 else shape[0]
        data = np.array([[float(v) for v in ln.split(",")] for ln in lines[i + 1:i + 1 + rows]])
        setattr(q, meta["block"], data.reshape(shape))
        i += 1 + rows
    return q
