import numpy as np
import pytest

from fopa.autodiff import ContractError, DimensionError, Tensor, backward, no_grad, ops

from oracles import GRAD_CASES, conv2d_loops, depthwise_loops, grad_case_error, upsample_blocks

# cheap ops get the full 100 seeds here; the acceptance suite sweeps every op
FAST = [n for n in GRAD_CASES if n not in ("kgu_dynamic_fusion", "small_network", "dynamic_depthwise_conv2d")]


class TestGradients:
    @pytest.mark.parametrize("name", FAST)
    def test_finite_difference(self, name):
        worst = max(grad_case_error(name, seed) for seed in range(100))
        assert worst <= 1e-4

    @pytest.mark.parametrize("name", ["kgu_dynamic_fusion", "small_network", "dynamic_depthwise_conv2d"])
    def test_composite_finite_difference(self, name):
        worst = max(grad_case_error(name, seed) for seed in range(10))
        assert worst <= 1e-4

    def test_shared_input_accumulates(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        backward(ops.sum(ops.mul(x, x)))
        np.testing.assert_array_equal(x.grad, [2.0, 4.0])

    def test_no_grad_records_nothing(self):
        x = Tensor([1.0], requires_grad=True)
        with no_grad():
            y = ops.mul(x, x)
        assert y.node is None and not y.requires_grad


class TestConvolutionOracles:
    @pytest.mark.parametrize("seed", range(6))
    def test_conv2d_matches_loops(self, seed):
        rng = np.random.default_rng(seed)
        stride, padding = [(1, 1), (2, 1), (1, 0)][seed % 3]
        x = rng.normal(size=(2, 3, 7, 7))
        w = rng.normal(size=(4, 3, 3, 3))
        b = rng.normal(size=4) if seed % 2 else None
        out = ops.conv2d(Tensor(x), Tensor(w), None if b is None else Tensor(b), stride=stride, padding=padding)
        np.testing.assert_allclose(out.data, conv2d_loops(x, w, b, stride, padding), rtol=0, atol=1e-10)

    @pytest.mark.parametrize("k", [1, 3, 5])
    def test_depthwise_matches_loops(self, k):
        rng = np.random.default_rng(k)
        x = rng.normal(size=(3, 2, 6, 5))
        kern = rng.normal(size=(3, 2, k, k))
        out = ops.dynamic_depthwise_conv2d(Tensor(x), Tensor(kern))
        np.testing.assert_allclose(out.data, depthwise_loops(x, kern), rtol=0, atol=1e-10)

    def test_identity_kernels_exact(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(2, 3, 5, 5))
        ident = np.zeros((3, 3, 3, 3))
        ident[np.arange(3), np.arange(3), 1, 1] = 1.0
        np.testing.assert_array_equal(ops.conv2d(Tensor(x), Tensor(ident), padding=1).data, x)
        dw = np.zeros((2, 3, 3, 3))
        dw[:, :, 1, 1] = 1.0
        np.testing.assert_array_equal(ops.dynamic_depthwise_conv2d(Tensor(x), Tensor(dw)).data, x)

    def test_upsample_is_block_copy(self):
        x = np.arange(12.0).reshape(1, 1, 3, 4)
        np.testing.assert_array_equal(ops.upsample_nearest_2x(Tensor(x)).data, upsample_blocks(x))

    def test_per_sample_kernels_stay_separate(self):
        x = np.ones((2, 1, 3, 3))
        kern = np.zeros((2, 1, 1, 1))
        kern[0], kern[1] = 2.0, -1.0
        out = ops.dynamic_depthwise_conv2d(Tensor(x), Tensor(kern)).data
        assert (out[0] == 2).all() and (out[1] == -1).all()


class TestContracts:
    def test_backward_needs_scalar(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(ContractError, match="scalar"):
            backward(ops.mul(x, x))

    def test_second_backward_raises(self):
        x = Tensor(np.ones(3), requires_grad=True)
        loss = ops.sum(ops.square(x))
        backward(loss)
        with pytest.raises(ContractError, match="consumed"):
            backward(loss)

    def test_backward_without_grad_inputs(self):
        with pytest.raises(ContractError):
            backward(ops.sum(Tensor(np.ones(2))))

    def test_conv_channel_mismatch_names_axis(self):
        with pytest.raises(DimensionError, match="input-channel"):
            ops.conv2d(Tensor(np.ones((1, 2, 4, 4))), Tensor(np.ones((1, 3, 3, 3))))

    def test_depthwise_batch_mismatch(self):
        with pytest.raises(DimensionError, match="batch"):
            ops.dynamic_depthwise_conv2d(Tensor(np.ones((2, 1, 4, 4))), Tensor(np.ones((1, 1, 3, 3))))

    def test_even_kernel_rejected(self):
        with pytest.raises(DimensionError):
            ops.conv2d(Tensor(np.ones((1, 1, 4, 4))), Tensor(np.ones((1, 1, 2, 2))))

    def test_data_is_float64(self):
        assert Tensor(np.ones(2, dtype=np.float32)).data.dtype == np.float64


class TestDeterminism:
    def test_repeat_backward_bitwise(self):
        def run():
            rng = np.random.default_rng(3)
            x = Tensor(rng.normal(size=(2, 3, 6, 6)), requires_grad=True)
            w = Tensor(rng.normal(size=(4, 3, 3, 3)), requires_grad=True)
            backward(ops.sum(ops.sigmoid(ops.conv2d(x, w, padding=1))))
            return x.grad.tobytes() + w.grad.tobytes()

        assert run() == run()
