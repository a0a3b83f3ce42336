"""Graph mechanics: accumulation, tape lifecycle, error contracts."""

import numpy as np
import pytest

from patchiq.errors import GraphError
from patchiq.gradcheck import grad_check
from patchiq.tensor import Tensor, add, gelu, matmul, mul, tsum


def test_sum_gradient_is_ones():
    x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
    tsum(x).backward()
    assert np.array_equal(x.grad, np.ones((2, 3)))


def test_inner_product_gradient_is_2x():
    x = Tensor([1.0, -2.0, 3.0], requires_grad=True)
    tsum(mul(x, x)).backward()
    assert np.allclose(x.grad, 2 * x.data, atol=1e-12)


def test_shared_subgraph_accumulates_both_paths():
    # y = sum(x*x) + sum(x) uses x twice; grad must be the sum of both paths
    x = Tensor([0.5, -1.5, 2.0], requires_grad=True)
    loss = add(tsum(mul(x, x)), tsum(x))
    loss.backward()
    assert np.allclose(x.grad, 2 * x.data + 1.0, atol=1e-12)

    # manually summed two-graph computation
    x1 = Tensor(x.data.copy(), requires_grad=True)
    tsum(mul(x1, x1)).backward()
    x2 = Tensor(x.data.copy(), requires_grad=True)
    tsum(x2).backward()
    assert np.allclose(x.grad, x1.grad + x2.grad, atol=1e-12)


def test_non_scalar_loss_rejected():
    x = Tensor(np.ones((2, 2)), requires_grad=True)
    with pytest.raises(GraphError):
        mul(x, x).backward()


def test_tape_cleared_after_backward():
    x = Tensor([1.0, 2.0], requires_grad=True)
    y = tsum(mul(x, x))
    assert y._backward is not None
    y.backward()
    assert y._backward is None and y._parents == ()


def test_backward_twice_requires_fresh_graph():
    x = Tensor([1.0, 2.0], requires_grad=True)
    y = tsum(mul(x, x))
    y.backward()
    first = x.grad.copy()
    # the freed graph no longer propagates; grads stay as they were
    y.backward()
    assert np.allclose(x.grad, first)


def test_constant_operands_get_no_grad():
    x = Tensor([1.0, 2.0], requires_grad=True)
    c = Tensor([3.0, 4.0])
    tsum(mul(x, c)).backward()
    assert c.grad is None
    assert np.allclose(x.grad, c.data)


def test_three_op_composite_matches_finite_differences():
    rng = np.random.default_rng(9)

    def fn(a, b):
        return gelu(matmul(a, b))

    report = grad_check(
        "composite",
        fn,
        {
            "a": Tensor(rng.uniform(-1, 1, (3, 4)), requires_grad=True),
            "b": Tensor(rng.uniform(-1, 1, (4, 2)), requires_grad=True),
        },
    )
    assert report.passed, report.summary()


def test_broadcast_bias_gradient_sums():
    x = Tensor(np.ones((4, 3)), requires_grad=True)
    b = Tensor(np.zeros(3), requires_grad=True)
    tsum(add(x, b)).backward()
    assert np.array_equal(b.grad, np.full(3, 4.0))
