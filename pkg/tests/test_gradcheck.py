"""The checker itself: pass cases, the corrupted-gradient negative control,
and the report format."""

import numpy as np
import pytest

from patchiq.errors import GradientCheckError
from patchiq.gradcheck import grad_check
from patchiq.tensor import Tensor, _make, linear, softmax
from patchiq.checks import run_all_checks


def test_linear_passes_at_1e4():
    rng = np.random.default_rng(20)
    report = grad_check(
        "linear",
        linear,
        {
            "x": Tensor(rng.uniform(-1, 1, (3, 4)), requires_grad=True),
            "w": Tensor(rng.uniform(-1, 1, (4, 2)), requires_grad=True),
            "b": Tensor(rng.uniform(-1, 1, 2), requires_grad=True),
        },
        tolerance=1e-4,
    )
    assert report.passed


def test_softmax_passes_at_1e4():
    rng = np.random.default_rng(21)
    report = grad_check(
        "softmax",
        lambda x: softmax(x, axis=0),
        {"x": Tensor(rng.uniform(-1, 1, 6), requires_grad=True)},
        tolerance=1e-4,
    )
    assert report.passed


def _scaled_identity(a: Tensor) -> Tensor:
    """Identity forward whose recorded gradient is deliberately 1% off."""

    def backward(g):
        a._accumulate(g * 1.01)

    return _make(a.data.copy(), (a,), backward, "corrupted")


def test_corrupted_gradient_fails():
    rng = np.random.default_rng(22)
    report = grad_check(
        "corrupted",
        _scaled_identity,
        {"x": Tensor(rng.uniform(0.5, 1.5, 5), requires_grad=True)},
        tolerance=1e-4,
    )
    assert not report.passed
    with pytest.raises(GradientCheckError, match="corrupted"):
        report.raise_if_failed()


def test_failure_report_names_op_and_coordinate():
    rng = np.random.default_rng(23)
    report = grad_check(
        "corrupted",
        _scaled_identity,
        {"x": Tensor(rng.uniform(0.5, 1.5, (2, 3)), requires_grad=True)},
    )
    worst = report.worst()
    assert worst.input_name == "x"
    assert len(worst.worst_index) == 2
    assert worst.max_rel_error > 1e-4


def test_report_lists_one_line_per_op():
    reports = run_all_checks()
    lines = [r.summary() for r in reports]
    assert len(lines) == len(reports)
    for line in lines:
        assert "max_rel_err=" in line


def test_max_coords_subsamples():
    rng = np.random.default_rng(24)
    report = grad_check(
        "linear",
        linear,
        {
            "x": Tensor(rng.uniform(-1, 1, (6, 5)), requires_grad=True),
            "w": Tensor(rng.uniform(-1, 1, (5, 4)), requires_grad=True),
            "b": Tensor(rng.uniform(-1, 1, 4), requires_grad=True),
        },
        max_coords=3,
    )
    assert all(e.coords_checked <= 3 for e in report.entries)
    assert report.passed
