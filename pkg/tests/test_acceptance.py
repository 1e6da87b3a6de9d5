"""Release gate: one test per headline guarantee, each a single pass/fail
line under pytest -v. Heavier behavioural checks carry the slow marker.
"""

import math
import struct

import numpy as np
import pytest

from sandtable.agents import (
    Agent,
    AgentSpec,
    CURL,
    Hyperparams,
    ICM,
    Phase,
    RND,
    Transition,
    contrastive_loss,
)
from sandtable.agents.policy import ActorCritic
from sandtable.agents.ppo import ppo_losses
from sandtable.constants import AGENT_RADIUS, GOAL_RADIUS, TABLE_HALF_EXTENT
from sandtable.curriculum import CurriculumState, explore
from sandtable.env import Env, EnvConfig, N_ACTIONS
from sandtable.evaluate import UniformRandomPolicy, a_success, run_puzzles
from sandtable.gateway import Gateway, GatewayClient
from sandtable.gateway.protocol import read_frame_bytes
from sandtable.nn import (
    Encoder,
    EncoderSpec,
    Tensor,
    dump_checkpoint_bytes,
    load_checkpoint,
    parse_checkpoint_bytes,
    save_checkpoint,
)
from sandtable.sim import (
    Body,
    BodyKind,
    ForceCommand,
    WorldState,
    macro_step,
    momentum,
    substep,
)
from sandtable.worldgen import (
    Mode,
    PuzzleConfig,
    Task,
    generate,
    make_puzzles,
    sample_sandbox_pool,
)

from pathlib import Path

DATA = Path(__file__).parent / "data"

TINY = EncoderSpec(conv=((4, 3, 2), (4, 3, 1), (4, 3, 1)),
                   latent_dim=8, input_hw=12)


# -- 1: success metric vs direct summation -----------------------------------

def naive_a_success(s):
    n = len(s)
    total = 0.0
    for i in range(1, n + 1):
        total += (math.log(i + 1) - math.log(i)) * s[i - 1]
    return total / math.log(n + 1)


def test_metric_matches_direct_summation_oracle():
    rng = np.random.default_rng(0)
    for n in (100, 200):
        for _ in range(1000):
            s = rng.uniform(0.0, 1.0, n)
            assert abs(a_success(s) - naive_a_success(s)) < 1e-12
    hand = np.ones(100)
    hand[0] = 0.0
    assert a_success(hand) == pytest.approx(0.84981, abs=1e-4)


# -- 2: deterministic, conservative, contained physics ------------------------

def _scripted_digest(n_macro=10_000):
    world = generate(make_puzzles(Task.TOOL_USE, 0, 1)[0])
    rng = np.random.default_rng(42)
    for _ in range(n_macro):
        ang = float(rng.uniform(0.0, 2.0 * math.pi))
        macro_step(world, ForceCommand(world.agent_idx,
                                       (math.cos(ang), math.sin(ang)), 6.0))
    return world.digest()


def test_simulation_determinism_momentum_containment():
    # same seed, same actions: bitwise-equal state after 10k macro-steps
    assert _scripted_digest() == _scripted_digest()

    # elastic, drag-free collisions preserve planar momentum
    def ball(kind, x, y, vx, vy, mass):
        return Body(kind=kind, x=x, y=y, vx=vx, vy=vy, radius=0.15,
                    mass=mass, restitution=1.0, drag=0.0)

    s = WorldState.from_bodies([
        ball(BodyKind.AGENT, -1.0, 0.0, 2.0, 0.1, 1.0),
        ball(BodyKind.GOAL_SPHERE_LOW, 1.0, 0.05, -1.5, 0.0, 2.0),
        ball(BodyKind.GOAL_SPHERE_HIGH, 0.0, 1.0, 0.2, -2.5, 0.5),
        ball(BodyKind.CUBE_LIGHT, 0.0, -1.0, -0.3, 1.8, 3.0),
    ])
    before = momentum(s)
    for _ in range(5000):
        substep(s, None)
    after = momentum(s)
    scale = max(1.0, abs(before[0]), abs(before[1]))
    assert abs(after[0] - before[0]) / scale < 1e-9
    assert abs(after[1] - before[1]) / scale < 1e-9

    # a million random substeps never push a body through the walls
    world = generate(make_puzzles(Task.GOAL_SEEKING, 2, 1)[0])
    he = TABLE_HALF_EXTENT
    dyn = world.inv_mass > 0.0
    rng = np.random.default_rng(7)
    angles = rng.uniform(0.0, 2.0 * math.pi, 250_000)
    for ang in angles:
        macro_step(world, ForceCommand(world.agent_idx,
                                       (math.cos(ang), math.sin(ang)), 6.0))
        assert abs(world.px[dyn]).max() <= he
        assert abs(world.py[dyn]).max() <= he


# -- 3: analytic gradients vs finite differences ------------------------------

def fd_gradcheck(params, loss_fn, rng, n_coords=100, h=1e-5, tol=1e-4):
    for p in params:
        p.grad = None
    loss_fn().backward()
    grads = [p.grad.copy() if p.grad is not None else None for p in params]
    coords = [(pi, idx) for pi, p in enumerate(params)
              for idx in range(p.data.size)]
    picks = rng.choice(len(coords), size=min(n_coords, len(coords)),
                       replace=False)
    for c in picks:
        pi, idx = coords[c]
        p = params[pi]
        orig = p.data.flat[idx]
        p.data.flat[idx] = orig + h
        up = loss_fn().item()
        p.data.flat[idx] = orig - h
        down = loss_fn().item()
        p.data.flat[idx] = orig
        numeric = (up - down) / (2.0 * h)
        analytic = 0.0 if grads[pi] is None else grads[pi].flat[idx]
        denom = max(abs(numeric), abs(analytic), 1e-8)
        assert abs(numeric - analytic) / denom < tol


def rand_obs(rng, n, hw=12):
    return rng.integers(0, 256, size=(n, hw, hw, 3), dtype=np.uint8)


def jitter(params, rng, scale=0.05):
    # fresh nets have exact zeros (biases, dead ReLU stacks) that park the
    # loss on a kink, where finite differences are meaningless; nudge away
    for p in params:
        p.data += rng.uniform(-scale, scale, p.data.shape)


def test_all_loss_gradients_match_finite_differences():
    rng = np.random.default_rng(300)

    # clipped surrogate + value + entropy, jointly through the encoder
    ac = ActorCritic(Encoder(TINY, rng), rng)
    jitter(ac.parameters(), rng)
    obs = rand_obs(rng, 4)
    actions = np.array([0, 3, 7, 1])
    old = np.full(4, math.log(1 / 8))
    adv = rng.standard_normal(4)
    ret = rng.standard_normal(4)
    fd_gradcheck(ac.parameters(),
                 lambda: ppo_losses(ac, obs, actions, old, adv, ret,
                                    Hyperparams())["loss"],
                 rng)

    # forward + inverse dynamics composite, heads then encoder branch
    enc = Encoder(TINY, rng)
    icm = ICM(enc, 8, 1.0, 0.2, rng)
    jitter(icm.trainable_parameters() + enc.parameters(), rng)
    obs3, nxt3 = rand_obs(rng, 3), rand_obs(rng, 3)
    acts3 = np.array([1, 5, 2])
    fd_gradcheck(icm.trainable_parameters(),
                 lambda: icm.loss(obs3, acts3, nxt3)[0], rng)

    def icm_encoder_branch():
        logits = icm.inverse_logits(enc(obs3), enc(nxt3))
        ce = -logits.log_softmax(axis=-1).gather(acts3).mean()
        return (1.0 - icm.beta) * ce

    fd_gradcheck(enc.parameters(), icm_encoder_branch, rng)

    # predictor-vs-frozen-target regression
    enc_r = Encoder(TINY, rng)
    rnd = RND(enc_r, rng)
    jitter(enc_r.parameters(), rng)
    batch = rand_obs(rng, 3)
    fd_gradcheck(enc_r.parameters(), lambda: rnd.loss(batch)[0], rng)

    # contrastive instance discrimination with momentum keys
    enc_c = Encoder(TINY, rng)
    curl = CURL(enc_c, 0.005, crop=8, rng=rng)
    jitter(enc_c.parameters() + [curl.w], rng)
    batch4 = rand_obs(rng, 4)
    crop_a = curl.random_crop(batch4, np.random.default_rng(34))
    crop_b = curl.random_crop(batch4, np.random.default_rng(35))

    def curl_loss():
        q = enc_c(crop_a)
        k = Tensor(curl.momentum(crop_b).data)
        return contrastive_loss(curl.logits(q, k))

    fd_gradcheck(enc_c.parameters() + [curl.w], curl_loss, rng)


# -- 4: task payoffs exactly as specified -------------------------------------

def hand_world(extra):
    bodies = [Body(kind=BodyKind.AGENT, x=0.0, y=0.0, radius=AGENT_RADIUS)]
    bodies.extend(extra)
    return WorldState.from_bodies(bodies)


def sphere(kind, x, y):
    return Body(kind=kind, x=x, y=y, radius=GOAL_RADIUS)


def run_to_done(env, actions, limit=60):
    for k in range(limit):
        res = env.step(actions[k] if k < len(actions) else actions[-1])
        if res.done:
            return res
    raise AssertionError("episode never terminated")


def test_reward_payoffs_and_death_semantics_exact():
    yellow = lambda x, y: sphere(BodyKind.GOAL_SPHERE_LOW, x, y)
    green = lambda x, y: sphere(BodyKind.GOAL_SPHERE_HIGH, x, y)

    def prefs(bodies, budget, actions):
        env = Env(EnvConfig.for_task(Task.PREFERENCES,
                                     max_episode_actions=budget))
        env.reset(world=hand_world(bodies))
        return run_to_done(env, actions, limit=budget)

    # east toward yellow only: 0.2 at budget exhaustion
    r = prefs([yellow(0.5, 0.0), green(-1.8, 1.8)], 8, [2])
    assert (r.reward, r.info["termination"]) == (0.2, "budget")
    # west toward green only: 0.8
    r = prefs([yellow(1.8, 1.8), green(-0.5, 0.0)], 8, [6])
    assert (r.reward, r.info["termination"]) == (0.8, "budget")
    # both spheres: 1.0, episode closes on the second touch
    r = prefs([yellow(0.5, 0.0), green(-0.5, 0.0)], 60, [2] * 10 + [6])
    assert (r.reward, r.info["termination"]) == (1.0, "solved")
    # neither: 0.0
    r = prefs([yellow(1.8, 1.8), green(-1.8, 1.8)], 3, [4])
    assert (r.reward, r.info["termination"]) == (0.0, "budget")

    def avoid(bodies, actions):
        env = Env(EnvConfig.for_task(Task.AVOIDANCE))
        env.reset(world=hand_world(bodies))
        return run_to_done(env, actions)

    region = lambda x, y, hx, hy: Body(kind=BodyKind.DANGER_REGION,
                                       x=x, y=y, half_x=hx, half_y=hy)
    # crossing the region kills and zeroes the episode
    r = avoid([yellow(1.8, 1.8), region(0.6, 0.0, 0.3, 0.3)], [2])
    assert (r.reward, r.info["termination"]) == (0.0, "died")
    # goal reached on a clean path pays 1
    r = avoid([yellow(0.5, 0.0), region(0.0, 1.5, 0.3, 0.3)], [2])
    assert (r.reward, r.info["termination"]) == (1.0, "solved")
    # goal buried inside the region: the touch cannot precede death
    r = avoid([yellow(0.8, 0.0), region(0.8, 0.0, 0.45, 0.45)], [2])
    assert (r.reward, r.info["termination"]) == (0.0, "died")

    # goal-seeking pays 1.0 exactly once, on the touching step
    env = Env(EnvConfig.for_task(Task.GOAL_SEEKING))
    env.reset(world=hand_world([yellow(0.5, 0.0)]))
    rewards = []
    while True:
        res = env.step(2)
        rewards.append(res.reward)
        if res.done:
            break
    assert rewards[-1] == 1.0 and sum(rewards) == 1.0
    assert res.info["termination"] == "solved"


# -- 5: exploration scheduling vs a hand-computed trace ------------------------

class ScriptedAgent:
    """Uniform actions; model loss follows a fixed script, one per update."""

    class _Spec:
        class _HP:
            rollout = 4
        hyperparams = _HP()
        name = "scripted"

    class _Enc:
        class spec:
            input_hw = 12

            @staticmethod
            def to_dict():
                return {"scripted": True}

        @staticmethod
        def state_arrays():
            return [("w", np.zeros(2))]

    def __init__(self, losses):
        self.losses = list(losses)
        self.pending = 0
        self.total_steps = 0
        self.rng = np.random.default_rng(0)
        self.encoder = self._Enc()
        self.spec = self._Spec()

    def act(self, obs):
        return int(self.rng.integers(0, 8)), math.log(1 / 8), 0.0

    def intrinsic(self, obs, action, next_obs):
        return 0.0

    def observe(self, tr):
        self.pending += 1
        self.total_steps += 1

    def ready_to_update(self):
        return self.pending >= 4

    def update(self):
        self.pending = 0
        loss = self.losses.pop(0) if self.losses else 0.0
        return {"model_loss": loss}

    def checkpoint_bytes(self, source=""):
        return b"scripted"


def test_curriculum_decisions_match_hand_schedule():
    # theta 0.001, alpha 0.5; every EMA below mirrors pencil-and-paper:
    #   env0: 0.004 -> 0.0021 -> 0.00115 -> 0.000675 (drops below, switch)
    #   env1: 0.002 -> 0.001 (equal to theta: stays) -> 0.0005 (switch)
    #   env2: 0.0016 -> 0.0008 (below; no env at/above theta: terminate)
    script = [0.004, 0.0002, 0.0002, 0.0002,
              0.002, 0.0, 0.0,
              0.0016, 0.0]
    pool = [PuzzleConfig(mode=Mode.SANDBOX, task=Task.NONE,
                         counts={"agent": 1, "cube_light": 1}, seed=2 * i + 1)
            for i in range(3)]
    agent = ScriptedAgent(script)
    state = CurriculumState(pool, theta=0.001, alpha=0.5)
    _, decisions = explore(agent, state)

    moves = [d for d in decisions
             if d.get("action") in ("continue", "switch", "terminate")]
    got = [(d["action"], d["env"], d.get("to")) for d in moves]
    assert got == [
        ("continue", 0, None), ("continue", 0, None), ("continue", 0, None),
        ("switch", 0, 1),
        ("continue", 1, None), ("continue", 1, None),
        ("switch", 1, 2),
        ("continue", 2, None),
        ("terminate", 2, None),
    ]
    emas = [d["ema"] for d in moves]
    hand = [0.004, 0.0021, 0.00115, 0.000675,
            0.002, 0.001, 0.0005,
            0.0016, 0.0008]
    for got_ema, want in zip(emas, hand):
        assert got_ema == pytest.approx(want, rel=1e-12)


# -- 6: PPO learns goal-seeking on a small table -------------------------------

SMOKE_SPEC = EncoderSpec(conv=((8, 4, 2), (16, 3, 2), (16, 3, 1)),
                         latent_dim=32, input_hw=24)
# 8 epochs per batch and a light entropy bonus: at the training defaults the
# policy is still near-uniform after 200k steps on this net
SMOKE_HP = Hyperparams(lr=1e-3, rollout=2048, minibatch=256, epochs=8,
                       ent_coef=0.003)
SMOKE_BUDGET = 50


def small_table_suite():
    out = []
    for s in range(0, 40, 2):
        cfg = PuzzleConfig(mode=Mode.TASK, task=Task.GOAL_SEEKING,
                           counts={"agent": 1, "goal_sphere_low": 1},
                           seed=s, table_half_extent=1.0)
        cfg.validate()
        out.append(cfg)
    return out


def suite_return(policy, suite, eval_seed=0):
    acc = run_puzzles(policy, suite, Task.GOAL_SEEKING, n=SMOKE_BUDGET,
                      eval_seed=eval_seed, obs_size=SMOKE_SPEC.input_hw)
    return float(acc.s_vector()[-1])


def train_smoke_seed(seed, suite, max_steps=200_000, eval_every=8192):
    agent = Agent(AgentSpec(phase=Phase.FINETUNE, hyperparams=SMOKE_HP),
                  seed=seed, encoder_spec=SMOKE_SPEC)
    env = Env(EnvConfig.for_task(Task.GOAL_SEEKING,
                                 obs_size=SMOKE_SPEC.input_hw,
                                 max_episode_actions=SMOKE_BUDGET))
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                       spawn_key=(3,)))
    obs = None
    for step in range(max_steps):
        if obs is None:
            obs = env.reset(puzzle=suite[int(rng.integers(len(suite)))])
        action, logp, value = agent.act(obs)
        res = env.step(action)
        agent.observe(Transition(obs, action, logp, value, res.reward,
                                 0.0, res.done, res.observation))
        obs = None if res.done else res.observation
        if agent.ready_to_update():
            agent.update()
        if (step + 1) % eval_every == 0:
            if suite_return(agent.ac, suite) >= 0.9:
                return True
    return suite_return(agent.ac, suite) >= 0.9


@pytest.mark.slow
def test_ppo_reaches_target_return_on_small_table():
    suite = small_table_suite()
    for seed in (0, 1, 2):
        baseline = suite_return(UniformRandomPolicy(), suite, eval_seed=seed)
        assert baseline <= 0.4
    passes = 0
    for seed in (0, 1, 2):
        passes += train_smoke_seed(seed, suite)
        if passes >= 2:
            break
    assert passes >= 2


# -- 7: intrinsic-reward exploration coverage vs random actions ----------------

STACK_SPEC = EncoderSpec(conv=((8, 4, 2), (16, 3, 2), (16, 3, 2)),
                         latent_dim=32, input_hw=48, input_channels=6)
# Most favorable recipe measured: motion made visible through a strided
# two-frame stack, no entropy bonus, short credit horizon, large minibatch.
RIDE_HP = Hyperparams(ride_count_norm=True, ent_coef=0.0, rollout=1024,
                      minibatch=256, epochs=8, lr=1e-3, gamma=0.9)
COVERAGE_STEPS = 50_000
COVERAGE_POOL = 100
COVERAGE_CELL = 0.25


def visited_cell(env):
    w = env.world
    he = w.table_half_extent
    side = int(2.0 * he / COVERAGE_CELL)
    i = int((w.px[w.agent_idx] + he) / COVERAGE_CELL)
    j = int((w.py[w.agent_idx] + he) / COVERAGE_CELL)
    return max(0, min(side - 1, i)), max(0, min(side - 1, j))


def pool_coverage(agent, pool, seed):
    """Distinct (env, cell) pairs the agent's body touches across the pool.

    agent=None walks with uniform random actions; otherwise the agent trains
    online on its own intrinsic reward while being counted.
    """
    per_env = COVERAGE_STEPS // len(pool)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                       spawn_key=(5,)))
    visited = set()
    for env_id, cfg in enumerate(pool):
        if agent is None:
            env = Env(EnvConfig.for_sandbox(obs_size=24))
        else:
            env = Env(EnvConfig.for_sandbox(obs_size=STACK_SPEC.input_hw,
                                            frame_stack=2, frame_stride=8))
        obs = env.reset(puzzle=cfg)
        visited.add((env_id,) + visited_cell(env))
        for t in range(per_env):
            if agent is None:
                env.step(int(rng.integers(N_ACTIONS)))
            else:
                action, logp, value = agent.act(obs)
                res = env.step(action)
                r_int = agent.intrinsic(obs, action, res.observation)
                agent.observe(Transition(obs, action, logp, value,
                                         res.reward, r_int,
                                         t == per_env - 1, res.observation))
                if agent.ready_to_update():
                    agent.update()
                obs = res.observation
            visited.add((env_id,) + visited_cell(env))
    return len(visited)


@pytest.mark.slow
def test_impact_driven_agent_out_covers_random_walk():
    passes = failures = 0
    for seed in (0, 1, 2):
        pool = sample_sandbox_pool(COVERAGE_POOL, pool_seed=seed)
        baseline = pool_coverage(None, pool, seed)
        agent = Agent(AgentSpec.from_name("icm+ride", hyperparams=RIDE_HP),
                      seed=seed, encoder_spec=STACK_SPEC)
        if pool_coverage(agent, pool, seed) >= 1.5 * baseline:
            passes += 1
        else:
            failures += 1
        if passes >= 2 or failures >= 2:
            break
    assert passes >= 2


# -- 8: byte-stable persistence and wire protocol ------------------------------

def test_checkpoint_and_wire_transcript_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    agent = Agent(AgentSpec.from_name("icm+ride"), seed=3, encoder_spec=TINY)
    blob = agent.checkpoint_bytes(source="explore")
    ck = parse_checkpoint_bytes(blob)
    again = dump_checkpoint_bytes(ck.spec, list(ck.params.items()),
                                  step=ck.step, source=ck.source,
                                  extra=ck.extra)
    assert again == blob

    path = tmp_path / "enc.ckpt"
    save_checkpoint(path, ck.spec, list(ck.params.items()), step=ck.step,
                    source=ck.source, extra=ck.extra)
    ck2 = load_checkpoint(path)
    assert path.read_bytes() == blob
    assert ck2.spec == ck.spec
    for name, arr in ck.params.items():
        assert arr.tobytes() == ck2.params[name].tobytes()

    req_file = DATA / "golden_requests.bin"
    rep_file = DATA / "golden_replies.bin"
    assert req_file.exists() and rep_file.exists(), "golden fixtures missing"
    raw = req_file.read_bytes()
    frames = []
    off = 0
    while off < len(raw):
        (length,) = struct.unpack(">I", raw[off:off + 4])
        frames.append(raw[off:off + 4 + length])
        off += 4 + length

    gw = Gateway(port=0)
    gw.start()
    try:
        replies = []
        with GatewayClient(*gw.address) as c:
            for f in frames:
                c.sock.sendall(f)
                body = read_frame_bytes(c.sock)
                assert body is not None
                replies.append(struct.pack(">I", len(body)) + body)
    finally:
        gw.shutdown()
    assert b"".join(replies) == rep_file.read_bytes()
