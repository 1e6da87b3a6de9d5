"""Agent math: combination validation, sampling, GAE, the clipped surrogate,
and each intrinsic module's reward arithmetic and training behaviour.

Encoders here are deliberately tiny (small inputs, narrow latents) so the
finite-difference and training-loop tests stay fast.
"""

import math

import numpy as np
import pytest

from sandtable.agents import (
    Agent,
    AgentSpec,
    CURL,
    Exploration,
    Hyperparams,
    ICM,
    Model,
    Phase,
    RIDE,
    RND,
    RunningStd,
    Transition,
    categorical_sample,
    compute_gae,
    contrastive_loss,
    ppo_update,
    surrogate_objective,
    total_reward,
)
from sandtable.agents.policy import ActorCritic
from sandtable.agents.ppo import ppo_losses
from sandtable.nn import Adam, Encoder, EncoderSpec, Tensor, parse_checkpoint_bytes

TINY = EncoderSpec(conv=((4, 3, 2), (4, 3, 1), (4, 3, 1)),
                   latent_dim=8, input_hw=12)


def tiny_hp(**kw):
    base = dict(rollout=8, minibatch=4, epochs=1, lr=1e-3, crop=8)
    base.update(kw)
    return Hyperparams(**base)


def rand_obs(rng, n=1, hw=12):
    arr = rng.integers(0, 256, size=(n, hw, hw, 3), dtype=np.uint8)
    return arr if n > 1 else arr[0]


def fd_gradcheck(params, loss_fn, rng, n_coords=20, h=1e-5, tol=1e-4):
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


class TestSpec:
    def test_all_named_combos_valid(self):
        for name in ("ppo", "icm", "rnd", "icm+ride", "rnd+ride",
                     "curl+ride", "curl+random"):
            spec = AgentSpec.from_name(name)
            assert spec.name == name

    def test_invalid_combo_rejected(self):
        with pytest.raises(ValueError, match="invalid model/exploration"):
            AgentSpec(model=Model.CURL, exploration=Exploration.FORWARD_ERROR)
        with pytest.raises(ValueError, match="invalid model/exploration"):
            AgentSpec(model=Model.NONE, exploration=Exploration.RIDE)

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown agent name"):
            AgentSpec.from_name("dreamer")

    def test_exploration_needs_shared_encoder(self):
        with pytest.raises(ValueError, match="shared encoder"):
            AgentSpec.from_name("icm", share_encoder=False)

    def test_phase_rule(self):
        icm = AgentSpec.from_name("icm")
        assert total_reward(1.0, 0.3, icm) == 0.3   # explore: intrinsic only
        icm_ft = AgentSpec.from_name("icm", phase=Phase.FINETUNE)
        assert total_reward(1.0, 5.0, icm_ft) == 1.0
        ppo = AgentSpec.from_name("ppo")
        assert total_reward(1.0, 5.0, ppo) == 1.0   # extrinsic in all phases
        ppo_ft = AgentSpec.from_name("ppo", phase=Phase.FINETUNE)
        assert total_reward(0.2, 5.0, ppo_ft) == 0.2


class TestSampling:
    def test_inverse_cdf_boundaries(self):
        probs = np.array([0.5, 0.5])
        assert categorical_sample(probs, 0.25) == 0
        assert categorical_sample(probs, 0.75) == 1
        assert categorical_sample(probs, 0.999999) == 1
        assert categorical_sample(probs, 1.0) == 1  # clamped to the last class

    def test_uniform_frequencies_within_3_sigma(self):
        n = 100_000
        k = 8
        rng = np.random.default_rng(123)
        probs = np.full(k, 1.0 / k)
        cdf = np.cumsum(probs)
        draws = np.searchsorted(cdf, rng.random(n), side="right")
        counts = np.bincount(np.minimum(draws, k - 1), minlength=k)
        sigma = math.sqrt(n * (1 / k) * (1 - 1 / k))
        assert np.all(np.abs(counts - n / k) <= 3 * sigma)

    def test_act_deterministic_under_rng_state(self):
        ac = ActorCritic(Encoder(TINY, np.random.default_rng(0)),
                         np.random.default_rng(1))
        obs = rand_obs(np.random.default_rng(2))
        a1 = ac.act(obs, np.random.default_rng(77))
        a2 = ac.act(obs, np.random.default_rng(77))
        assert a1 == a2

    def test_log_prob_is_log_softmax_of_sampled_class(self):
        ac = ActorCritic(Encoder(TINY, np.random.default_rng(3)),
                         np.random.default_rng(4))
        obs = rand_obs(np.random.default_rng(5))
        action, logp, _ = ac.act(obs, np.random.default_rng(6))
        ref, _ = ac.evaluate(obs[None])
        assert logp == pytest.approx(float(ref.data[0, action]), abs=1e-15)
        assert logp <= 0.0

    def test_zeroed_head_gives_uniform(self):
        ac = ActorCritic(Encoder(TINY, np.random.default_rng(7)),
                         np.random.default_rng(8))
        ac.policy.w.data[:] = 0.0
        logp, _ = ac.evaluate(rand_obs(np.random.default_rng(9))[None])
        assert np.allclose(np.exp(logp.data), 1.0 / 8, atol=1e-15)


class TestGAE:
    def test_hand_computed_two_steps(self):
        adv, ret = compute_gae(
            rewards=np.array([1.0, 0.0]), values=np.array([0.5, 0.25]),
            dones=np.array([0.0, 0.0]), last_value=0.1, gamma=0.5, lam=0.5)
        # t=1: delta = 0 + 0.5*0.1 - 0.25 = -0.2
        # t=0: delta = 1 + 0.5*0.25 - 0.5 = 0.625; adv = 0.625 + 0.25*(-0.2)
        assert adv == pytest.approx([0.575, -0.2], abs=1e-12)
        assert ret == pytest.approx([1.075, 0.05], abs=1e-12)

    def test_done_cuts_the_bootstrap(self):
        adv, _ = compute_gae(
            rewards=np.array([1.0, 0.0]), values=np.array([0.5, 0.25]),
            dones=np.array([1.0, 0.0]), last_value=0.1, gamma=0.5, lam=0.5)
        assert adv[0] == pytest.approx(0.5, abs=1e-12)

    def test_zero_gamma_is_td_error(self):
        r = np.array([1.0, 2.0, 3.0])
        v = np.array([0.5, 0.5, 0.5])
        adv, _ = compute_gae(r, v, np.zeros(3), 0.0, gamma=0.0, lam=0.95)
        assert adv == pytest.approx(r - v, abs=1e-12)


class TestPPO:
    def setup_policy(self, seed=0):
        enc = Encoder(TINY, np.random.default_rng(seed))
        return ActorCritic(enc, np.random.default_rng(seed + 1))

    def contribution(self, ratio_log, adv):
        """Run one observation through the real loss path with a crafted
        old log-prob so the ratio is exp(ratio_log)."""
        ac = self.setup_policy()
        obs = rand_obs(np.random.default_rng(11), n=1)[None]
        logp_now, _ = ac.evaluate(obs)
        action = np.array([3])
        old = np.array([float(logp_now.data[0, 3]) - ratio_log])
        parts = ppo_losses(ac, obs, action, old, np.array([adv]),
                           np.array([0.0]), Hyperparams())
        return parts["surrogate"]

    def test_ratio_one_contribution_is_advantage(self):
        assert self.contribution(0.0, 0.7) == pytest.approx(0.7, abs=1e-9)

    def test_ratio_two_clips_to_1_2(self):
        assert self.contribution(math.log(2.0), 1.0) == \
            pytest.approx(1.2, abs=1e-9)

    def test_negative_advantage_takes_unclipped_branch(self):
        # min(2*(-1), 1.2*(-1)) = -2: clipping never hides a bad ratio
        assert self.contribution(math.log(2.0), -1.0) == \
            pytest.approx(-2.0, abs=1e-9)

    def make_batch(self, ac, rng, n=8):
        batch = []
        for _ in range(n):
            obs = rand_obs(rng)
            action, logp, value = ac.act(obs, rng)
            batch.append(Transition(
                obs=obs, action=action, log_prob=logp, value=value,
                reward_ext=float(rng.random()), reward_int=0.0,
                done=False, next_obs=rand_obs(rng)))
        return batch

    def test_surrogate_does_not_decrease_after_one_step(self):
        ac = self.setup_policy(seed=20)
        rng = np.random.default_rng(21)
        spec = AgentSpec.from_name(
            "ppo", hyperparams=tiny_hp(epochs=1, minibatch=8, lr=1e-4))
        batch = self.make_batch(ac, rng)
        before = surrogate_objective(ac, batch, spec)
        opt = Adam(ac.parameters(), lr=spec.hyperparams.lr)
        ppo_update(ac, opt, batch, spec, np.random.default_rng(22))
        after = surrogate_objective(ac, batch, spec)
        assert after >= before - 1e-6

    def test_empty_batch_rejected(self):
        ac = self.setup_policy(seed=23)
        spec = AgentSpec.from_name("ppo")
        with pytest.raises(ValueError, match="empty batch"):
            ppo_update(ac, Adam(ac.parameters(), lr=1e-3), [], spec,
                       np.random.default_rng(0))

    def test_transition_validation(self):
        obs = np.zeros((2, 2, 3), dtype=np.uint8)
        with pytest.raises(ValueError, match="log_prob"):
            Transition(obs, 0, 0.5, 0.0, 0.0, 0.0, False, obs)
        with pytest.raises(ValueError, match="finite"):
            Transition(obs, 0, -0.5, 0.0, float("nan"), 0.0, False, obs)


class TestICM:
    def make(self, seed=0, eta=1.0, beta=0.2):
        enc = Encoder(TINY, np.random.default_rng(seed))
        return enc, ICM(enc, 8, eta, beta, np.random.default_rng(seed + 1))

    def test_perfect_prediction_zero_reward(self):
        _, icm = self.make()
        z_s = np.random.default_rng(2).standard_normal(8)
        pred = icm.forward_predict(Tensor(z_s[None]), np.array([3])).data[0]
        assert icm.forward_error(z_s, 3, pred) == 0.0

    def test_unit_error_gives_half_eta(self):
        for eta, want in ((1.0, 0.5), (2.0, 1.0)):
            _, icm = self.make(eta=eta)
            z_s = np.random.default_rng(3).standard_normal(8)
            pred = icm.forward_predict(Tensor(z_s[None]), np.array([0])).data[0]
            z_n = pred.copy()
            z_n[0] -= 1.0  # unit basis miss
            assert icm.forward_error(z_s, 0, z_n) == pytest.approx(want, abs=1e-12)

    def test_inverse_head_learns_separable_toy(self):
        enc = Encoder(TINY, np.random.default_rng(4))
        icm = ICM(enc, 2, 1.0, 0.2, np.random.default_rng(5))
        rng = np.random.default_rng(6)
        direction = rng.standard_normal(8)
        direction /= np.linalg.norm(direction)

        def sample(n):
            z_s = rng.standard_normal((n, 8))
            acts = rng.integers(0, 2, size=n)
            signs = np.where(acts == 0, 1.0, -1.0)[:, None]
            z_n = z_s + signs * direction + 0.05 * rng.standard_normal((n, 8))
            return z_s, acts, z_n

        opt = Adam(icm.inv_s.parameters() + icm.inv_n.parameters(), lr=0.01)
        for _ in range(200):
            z_s, acts, z_n = sample(64)
            logits = icm.inverse_logits(Tensor(z_s), Tensor(z_n))
            loss = -logits.log_softmax(axis=-1).gather(acts).mean()
            loss.backward()
            opt.step()
        z_s, acts, z_n = sample(500)
        logits = icm.inverse_logits(Tensor(z_s), Tensor(z_n))
        accuracy = (logits.data.argmax(axis=1) == acts).mean()
        assert accuracy > 0.95

    def test_pure_forward_loss_never_touches_encoder(self):
        enc, icm = self.make(seed=7, beta=1.0)
        rng = np.random.default_rng(8)
        loss, _ = icm.loss(rand_obs(rng, 3), np.array([0, 1, 2]),
                           rand_obs(rng, 3))
        loss.backward()
        assert all(p.grad is None or not p.grad.any()
                   for p in enc.parameters())

    def test_inverse_path_trains_encoder(self):
        enc, icm = self.make(seed=9, beta=0.2)
        rng = np.random.default_rng(10)
        loss, _ = icm.loss(rand_obs(rng, 3), np.array([0, 1, 2]),
                           rand_obs(rng, 3))
        loss.backward()
        assert any(p.grad is not None and p.grad.any()
                   for p in enc.parameters())


class TestRND:
    def make(self, seed=0):
        enc = Encoder(TINY, np.random.default_rng(seed))
        return enc, RND(enc, np.random.default_rng(seed + 1))

    def test_predictor_copy_of_target_gives_zero(self):
        enc, rnd = self.make()
        enc.load_state(dict(rnd.target.state_arrays()))
        rnd.predictor_head.w.data = rnd.target_head.w.data.copy()
        rnd.predictor_head.b.data = rnd.target_head.b.data.copy()
        obs = rand_obs(np.random.default_rng(2))
        # equal weights in distinct buffers: BLAS kernel selection can vary
        # with alignment, so "zero" means below any representable reward
        assert rnd.intrinsic(obs) < 1e-24

    def test_reward_is_mean_squared_miss(self):
        enc, rnd = self.make(seed=3)
        obs = rand_obs(np.random.default_rng(4))
        pred = rnd.predict(obs[None]).data[0]
        tgt = rnd.target_out(obs[None])[0]
        assert rnd.intrinsic(obs) == pytest.approx(
            np.mean((pred - tgt) ** 2), abs=1e-15)

    def test_training_shrinks_familiar_keeps_novel(self):
        enc, rnd = self.make(seed=5)
        rng = np.random.default_rng(6)
        seen = rand_obs(rng)
        novel = rand_obs(rng)
        r_seen_0 = rnd.intrinsic(seen)
        r_novel_0 = rnd.intrinsic(novel)
        opt = Adam(enc.parameters() + rnd.trainable_parameters(), lr=1e-3)
        batch = seen[None]
        for _ in range(400):
            loss, _ = rnd.loss(batch)
            loss.backward()
            opt.step()
        assert rnd.intrinsic(seen) < 0.01 * r_seen_0
        assert rnd.intrinsic(novel) > 0.5 * r_novel_0

    def test_target_immutable_under_training(self):
        enc, rnd = self.make(seed=7)
        frozen = rnd.target.state_arrays() + [
            ("head.w", rnd.target_head.w.data), ("head.b", rnd.target_head.b.data)]
        before = b"".join(arr.tobytes() for _, arr in frozen)
        opt = Adam(enc.parameters() + rnd.trainable_parameters(), lr=1e-3)
        batch = rand_obs(np.random.default_rng(8), 4)
        for _ in range(5):
            loss, _ = rnd.loss(batch)
            loss.backward()
            opt.step()
        after = b"".join(arr.tobytes() for _, arr in rnd.target.state_arrays()
                         + [("head.w", rnd.target_head.w.data),
                            ("head.b", rnd.target_head.b.data)])
        assert before == after


class FlatEncoder:
    """Test stub: embeds a float image as its own flattened vector."""

    def __call__(self, batch):
        return Tensor(np.asarray(batch, dtype=np.float64).reshape(len(batch), -1))


class TestRIDE:
    def test_no_change_no_reward(self):
        ride = RIDE(FlatEncoder())
        obs = np.ones(4)
        assert ride.intrinsic(obs, obs.copy()) == 0.0

    def test_unit_delta_gives_one(self):
        ride = RIDE(FlatEncoder())
        a = np.zeros(4)
        b = np.array([1.0, 0.0, 0.0, 0.0])
        assert ride.intrinsic(a, b) == 1.0

    def test_homogeneity(self):
        ride = RIDE(FlatEncoder())
        a = np.zeros(4)
        delta = np.array([0.3, -0.4, 0.0, 0.0])
        r1 = ride.intrinsic(a, a + delta)
        r2 = ride.intrinsic(a, a + 2.0 * delta)
        assert r2 == pytest.approx(2.0 * r1, abs=1e-12)

    def test_count_normalization_discounts_revisits(self):
        ride = RIDE(FlatEncoder(), count_norm=True, count_window=512)
        a = np.zeros(4)
        b = np.array([1.0, 0.0, 0.0, 0.0])
        first = ride.intrinsic(a, b)
        second = ride.intrinsic(a, b)
        assert first == 1.0
        assert second == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-12)

    def test_counts_reset_each_pseudo_episode(self):
        ride = RIDE(FlatEncoder(), count_norm=True, count_window=2)
        a = np.zeros(4)
        b = np.array([1.0, 0.0, 0.0, 0.0])
        ride.intrinsic(a, b)
        ride.intrinsic(a, b)
        assert ride.intrinsic(a, b) == 1.0  # third call starts a new window


class TestCURL:
    def make(self, seed=0, tau=0.005):
        enc = Encoder(TINY, np.random.default_rng(seed))
        return enc, CURL(enc, tau, crop=8, rng=np.random.default_rng(seed + 1))

    def test_uniform_logits_loss_is_log_b(self):
        loss = contrastive_loss(Tensor(np.zeros((8, 8))))
        assert loss.item() == pytest.approx(math.log(8.0), abs=1e-12)

    def test_sharp_diagonal_loss_vanishes(self):
        logits = np.full((8, 8), -10.0)
        np.fill_diagonal(logits, 10.0)
        assert contrastive_loss(Tensor(logits)).item() < 1e-6

    def test_tau_one_freezes_momentum(self):
        enc, curl = self.make(tau=1.0)
        before = [arr.copy() for _, arr in curl.momentum.state_arrays()]
        for p in enc.parameters():
            p.data += 1.0
        curl.momentum_update()
        for (_, arr), old in zip(curl.momentum.state_arrays(), before):
            assert np.array_equal(arr, old)

    def test_tau_zero_tracks_online_exactly(self):
        enc, curl = self.make(seed=2, tau=0.0)
        for p in enc.parameters():
            p.data += 0.5
        curl.momentum_update()
        for (_, a), (_, b) in zip(curl.momentum.state_arrays(),
                                  enc.state_arrays()):
            assert np.array_equal(a, b)

    def test_small_batch_rejected(self):
        _, curl = self.make(seed=3)
        with pytest.raises(ValueError, match="at least 2"):
            curl.loss(rand_obs(np.random.default_rng(4), 1)[None][0][None],
                      np.random.default_rng(5))

    def test_crop_preserves_shape_and_is_seed_deterministic(self):
        _, curl = self.make(seed=6)
        batch = rand_obs(np.random.default_rng(7), 3)
        a = curl.random_crop(batch, np.random.default_rng(8))
        b = curl.random_crop(batch, np.random.default_rng(8))
        assert a.shape == batch.shape
        assert np.array_equal(a, b)

    def test_gradients_never_reach_momentum(self):
        enc, curl = self.make(seed=9)
        loss, _ = curl.loss(rand_obs(np.random.default_rng(10), 4),
                            np.random.default_rng(11))
        loss.backward()
        assert all(p.grad is None for p in curl.momentum.parameters())
        assert curl.w.grad is not None


class TestCompositeGradients:
    def test_ppo_loss_gradcheck(self):
        rng = np.random.default_rng(30)
        ac = ActorCritic(Encoder(TINY, rng), rng)
        obs = rand_obs(rng, 4)
        actions = np.array([0, 3, 7, 1])
        old = np.full(4, math.log(1 / 8))
        adv = rng.standard_normal(4)
        ret = rng.standard_normal(4)

        def loss():
            return ppo_losses(ac, obs, actions, old, adv, ret,
                              Hyperparams())["loss"]

        fd_gradcheck(ac.parameters(), loss, rng, n_coords=25)

    def test_icm_loss_gradcheck_heads(self):
        # full composite loss; heads see detached latents as constants, so
        # finite differences agree directly
        rng = np.random.default_rng(31)
        enc = Encoder(TINY, rng)
        icm = ICM(enc, 8, 1.0, 0.2, rng)
        obs, nxt = rand_obs(rng, 3), rand_obs(rng, 3)
        actions = np.array([1, 5, 2])

        def loss():
            return icm.loss(obs, actions, nxt)[0]

        fd_gradcheck(icm.trainable_parameters(), loss, rng, n_coords=25)

    def test_icm_loss_gradcheck_encoder(self):
        # encoder gradients flow only through the inverse cross-entropy
        # (the forward branch is stop-gradient by design), so the encoder
        # check uses that branch alone
        rng = np.random.default_rng(36)
        enc = Encoder(TINY, rng)
        icm = ICM(enc, 8, 1.0, 0.2, rng)
        obs, nxt = rand_obs(rng, 3), rand_obs(rng, 3)
        actions = np.array([1, 5, 2])

        def loss():
            logits = icm.inverse_logits(enc(obs), enc(nxt))
            ce = -logits.log_softmax(axis=-1).gather(actions).mean()
            return (1.0 - icm.beta) * ce

        fd_gradcheck(enc.parameters(), loss, rng, n_coords=25)

    def test_rnd_loss_gradcheck(self):
        rng = np.random.default_rng(32)
        enc = Encoder(TINY, rng)
        rnd = RND(enc, rng)
        batch = rand_obs(rng, 3)

        def loss():
            return rnd.loss(batch)[0]

        fd_gradcheck(enc.parameters(), loss, rng, n_coords=25)

    def test_curl_loss_gradcheck(self):
        rng = np.random.default_rng(33)
        enc = Encoder(TINY, rng)
        curl = CURL(enc, 0.005, crop=8, rng=rng)
        batch = rand_obs(rng, 4)
        crop_a = curl.random_crop(batch, np.random.default_rng(34))
        crop_b = curl.random_crop(batch, np.random.default_rng(35))

        def loss():
            q = enc(crop_a)
            k = Tensor(curl.momentum(crop_b).data)
            return contrastive_loss(curl.logits(q, k))

        fd_gradcheck(enc.parameters() + [curl.w], loss, rng, n_coords=25)


class TestRunningStd:
    def test_matches_population_std(self):
        rs = RunningStd()
        xs = [1.0, 2.0, 3.0, 4.0]
        for x in xs:
            rs.update(x)
        assert rs.std == pytest.approx(np.std(xs), abs=1e-12)

    def test_first_sample_passes_through(self):
        rs = RunningStd()
        assert rs.normalize(7.0) == 7.0

    def test_normalizes_by_running_std(self):
        rs = RunningStd()
        rs.update(1.0)
        rs.update(3.0)
        got = rs.normalize(2.0)  # std of {1,3,2} is sqrt(2/3)
        assert got == pytest.approx(2.0 / (np.std([1.0, 3.0, 2.0]) + 1e-8),
                                    abs=1e-9)


class TestAgentComposition:
    def make_agent(self, name, seed=0, **hp_kw):
        spec = AgentSpec.from_name(name, hyperparams=tiny_hp(**hp_kw))
        return Agent(spec, seed=seed, encoder_spec=TINY)

    def synthetic_rollout(self, agent, rng, n=8):
        obs = rand_obs(rng)
        for _ in range(n):
            action, logp, value = agent.act(obs)
            nxt = rand_obs(rng)
            r_int = agent.intrinsic(obs, action, nxt)
            agent.observe(Transition(obs, action, logp, value, 0.0, r_int,
                                     False, nxt))
            obs = nxt

    def test_single_encoder_everywhere(self):
        agent = self.make_agent("icm+ride")
        assert agent.ac.encoder is agent.encoder
        assert agent.icm.encoder is agent.encoder
        assert agent.ride.encoder is agent.encoder

    def test_checkpoint_identity_across_consumers(self):
        agent = self.make_agent("rnd+ride", seed=4)
        ck = parse_checkpoint_bytes(agent.checkpoint_bytes())
        for name, arr in agent.encoder.state_arrays():
            assert np.array_equal(ck.params[name], arr)
        assert ck.extra["agent"] == "rnd+ride"

    def test_checkpoint_spec_mismatch_rejected(self):
        agent = self.make_agent("icm", seed=5)
        other = EncoderSpec(conv=((2, 3, 2), (2, 3, 1), (2, 3, 1)),
                            latent_dim=4, input_hw=11)
        blob = Agent(AgentSpec.from_name("icm", hyperparams=tiny_hp()),
                     seed=6, encoder_spec=other).checkpoint_bytes()
        with pytest.raises(ValueError, match="spec mismatch"):
            agent.load_encoder(parse_checkpoint_bytes(blob))

    def test_random_policy_never_updates_heads(self):
        agent = self.make_agent("curl+random", seed=7)
        head_before = [p.data.copy() for p in agent.ac.head_parameters()]
        enc_before = [p.data.copy() for p in agent.encoder.parameters()]
        rng = np.random.default_rng(8)
        self.synthetic_rollout(agent, rng)
        stats = agent.update()
        assert stats["model_loss"] > 0.0
        for p, old in zip(agent.ac.head_parameters(), head_before):
            assert np.array_equal(p.data, old)
        assert any(not np.array_equal(p.data, old)
                   for p, old in zip(agent.encoder.parameters(), enc_before))

    def test_icm_agent_update_cycle(self):
        agent = self.make_agent("icm", seed=9)
        rng = np.random.default_rng(10)
        self.synthetic_rollout(agent, rng)
        assert agent.ready_to_update()
        stats = agent.update()
        assert stats["model_loss"] > 0.0
        assert agent.rollout == []
        assert agent.optimizer.t > 0

    def test_intrinsic_rewards_nonnegative_and_finite(self):
        for name in ("icm", "rnd", "icm+ride", "curl+ride"):
            agent = self.make_agent(name, seed=11)
            rng = np.random.default_rng(12)
            obs, nxt = rand_obs(rng), rand_obs(rng)
            r = agent.intrinsic(obs, 3, nxt)
            assert r >= 0.0 and math.isfinite(r)

    def test_same_seed_same_trajectory(self):
        runs = []
        for _ in range(2):
            agent = self.make_agent("rnd", seed=13)
            rng = np.random.default_rng(14)
            self.synthetic_rollout(agent, rng)
            agent.update()
            runs.append(b"".join(arr.tobytes()
                                 for _, arr in agent.encoder.state_arrays()))
        assert runs[0] == runs[1]
