import numpy as np
import pytest

from fopa.autodiff import DimensionError, Tensor, ops
from fopa.config import DESK, FULL, ConfigError, EncoderConfig, ModelConfig
from fopa.models import (
    CheckpointError,
    FopaModel,
    KernelGenerator,
    SopaModel,
    TransferError,
    decoder_plan,
    fuse_dynamic,
    load_model,
    save_model,
    transfer_background_prior,
)

from oracles import depthwise_loops

TINY = ModelConfig(size=16, encoder=EncoderConfig(stages=2, base_channels=4), d=4, d_hat=8)


def rand_inputs(cfg, n=2, seed=0):
    rng = np.random.default_rng(seed)
    return Tensor(rng.uniform(0, 1, (n, 4, cfg.size, cfg.size))), Tensor(rng.uniform(0, 1, (n, 4, cfg.size, cfg.size)))


class TestKernelGenerator:
    def test_shape(self):
        kgu = KernelGenerator(6, 3, 5, np.random.default_rng(0))
        assert kgu(Tensor(np.ones((2, 6)))).shape == (2, 5, 3, 3)

    def test_hidden_width(self):
        kgu = KernelGenerator(6, 3, 5, np.random.default_rng(0))
        assert kgu.fc1.weight.shape == (2 * 9 * 5, 6)

    def test_wrong_input_dim(self):
        kgu = KernelGenerator(6, 3, 5, np.random.default_rng(0))
        with pytest.raises(DimensionError):
            kgu(Tensor(np.ones((2, 7))))


class TestFusion:
    def test_single_scale_is_depthwise(self):
        rng = np.random.default_rng(1)
        f1 = rng.normal(size=(2, 3, 6, 6))
        k = rng.normal(size=(2, 3, 3, 3))
        out = fuse_dynamic([Tensor(f1)], [Tensor(k)], 1)
        np.testing.assert_allclose(out.data, depthwise_loops(f1, k), atol=1e-12)

    def test_two_scales_adds_upsampled(self):
        rng = np.random.default_rng(2)
        f1, f2 = rng.normal(size=(1, 2, 4, 4)), rng.normal(size=(1, 2, 2, 2))
        k1, k2 = rng.normal(size=(1, 2, 3, 3)), rng.normal(size=(1, 2, 3, 3))
        out = fuse_dynamic([Tensor(f1), Tensor(f2)], [Tensor(k1), Tensor(k2)], 2)
        coarse = depthwise_loops(f2, k2).repeat(2, axis=2).repeat(2, axis=3)
        np.testing.assert_allclose(out.data, depthwise_loops(f1, k1) + coarse, atol=1e-12)


class TestAssessors:
    @pytest.mark.parametrize("fusion,scales", [("dynamic", 1), ("dynamic", 2), ("concat", 1), ("concat", 2)])
    def test_score_map_shape(self, fusion, scales):
        cfg = TINY.with_(fusion_mode=fusion, n_scales=scales)
        m = FopaModel(cfg, np.random.default_rng(0))
        out = m(*rand_inputs(cfg))
        assert out.scores.shape == (2, 16, 16) and out.features.shape == (2, 4, 16, 16)
        assert m.passes == 1

    def test_pixel_head_consistency(self):
        m = FopaModel(TINY, np.random.default_rng(0))
        out = m(*rand_inputs(TINY))
        for n, y, x in [(0, 0, 0), (1, 15, 3), (0, 7, 9)]:
            assert abs(m.pixel_head(out.features.data[n, :, y, x]) - out.scores.data[n, y, x]) <= 1e-12

    def test_sopa_outputs(self):
        s = SopaModel(TINY, np.random.default_rng(0))
        logits, pooled = s(rand_inputs(TINY, 3)[0])
        assert logits.shape == (3,) and pooled.shape == (3, TINY.d_hat)
        assert s.passes == 3

    def test_sopa_rejects_rgb_only(self):
        s = SopaModel(TINY, np.random.default_rng(0))
        with pytest.raises(ConfigError):
            s(Tensor(np.zeros((1, 3, 16, 16))))

    def test_onehot_mismatch(self):
        m = FopaModel(TINY.with_(onehot_bins=8), np.random.default_rng(0))
        with pytest.raises(ConfigError, match="one-hot"):
            m(*rand_inputs(TINY))

    def test_onehot_forward(self):
        cfg = TINY.with_(onehot_bins=8)
        m = FopaModel(cfg, np.random.default_rng(0))
        hot = np.eye(8)[[1, 5]]
        assert m(*rand_inputs(cfg), hot).scores.shape == (2, 16, 16)


class TestTransfer:
    def test_copies_and_freezes(self):
        sopa = SopaModel(TINY, np.random.default_rng(1))
        fopa = transfer_background_prior(sopa, FopaModel(TINY, np.random.default_rng(2)))
        assert fopa.bg_encoder.checksum() == sopa.encoder.checksum()
        assert fopa.frozen_bg_encoder
        frozen = {id(p) for p in fopa.bg_encoder.parameters()}
        assert not frozen & {id(p) for p in fopa.trainable_parameters()}

    def test_frozen_encoder_gets_no_grad(self):
        sopa = SopaModel(TINY, np.random.default_rng(1))
        fopa = transfer_background_prior(sopa, FopaModel(TINY, np.random.default_rng(2)))
        ops.sum(fopa(*rand_inputs(TINY)).scores).backward()
        assert all(p.grad is None for p in fopa.bg_encoder.parameters())

    def test_unfrozen_encoder_gets_grad(self):
        sopa = SopaModel(TINY, np.random.default_rng(1))
        fopa = transfer_background_prior(sopa, FopaModel(TINY, np.random.default_rng(2)), freeze=False)
        ops.sum(fopa(*rand_inputs(TINY)).scores).backward()
        assert any(p.grad is not None and np.any(p.grad) for p in fopa.bg_encoder.parameters())

    def test_architecture_mismatch(self):
        other = TINY.with_(encoder=EncoderConfig(stages=2, base_channels=8), d_hat=16)
        with pytest.raises(TransferError):
            transfer_background_prior(SopaModel(other, np.random.default_rng(0)), FopaModel(TINY, np.random.default_rng(0)))


class TestCheckpoint:
    def test_roundtrip(self, tmp_path):
        m = FopaModel(TINY.with_(fusion_mode="concat"), np.random.default_rng(4))
        m.frozen_bg_encoder = True
        save_model(m, tmp_path / "m.ckpt")
        back = load_model(tmp_path / "m.ckpt")
        assert back.checksum() == m.checksum() and back.cfg == m.cfg and back.frozen_bg_encoder

    def test_deterministic_bytes(self, tmp_path):
        m = SopaModel(TINY, np.random.default_rng(4))
        save_model(m, tmp_path / "a")
        save_model(m, tmp_path / "b")
        assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()

    def test_corruption_detected(self, tmp_path):
        save_model(SopaModel(TINY, np.random.default_rng(4)), tmp_path / "a")
        raw = bytearray((tmp_path / "a").read_bytes())
        raw[-3] ^= 0xFF
        (tmp_path / "a").write_bytes(bytes(raw))
        with pytest.raises(CheckpointError):
            load_model(tmp_path / "a")

    def test_bad_magic(self, tmp_path):
        (tmp_path / "a").write_bytes(b"nope")
        with pytest.raises(CheckpointError, match="magic"):
            load_model(tmp_path / "a")


class TestConfig:
    def test_desk_defaults(self):
        assert (DESK.size, DESK.d, DESK.k) == (64, 16, 3)

    def test_full_scale_geometry(self):
        assert (FULL.size, FULL.d, FULL.d_hat) == (256, 64, 512)

    def test_decoder_ends_at_full_resolution(self):
        plan = decoder_plan(DESK)
        assert plan[-1][0] == 1

    def test_bad_fusion(self):
        with pytest.raises(ConfigError):
            DESK.with_(fusion_mode="sum")

    def test_d_hat_must_match(self):
        with pytest.raises(ConfigError):
            DESK.with_(d_hat=64)
