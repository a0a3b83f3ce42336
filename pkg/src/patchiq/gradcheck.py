"""Central finite-difference verification of recorded gradients.

The checker evaluates the op under test on fresh float64 inputs, reduces the
output to a scalar through a fixed random projection, records gradients via
the tape, and compares them coordinate by coordinate against central
differences with step 1e-5. Relative error uses a unit floor in the
denominator so near-zero gradients do not blow the ratio up.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import GradientCheckError
from .tensor import Tensor, mul, tsum

DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-4


@dataclass
class GradCheckEntry:
    input_name: str
    max_rel_error: float
    worst_index: tuple[int, ...]
    coords_checked: int


@dataclass
class GradCheckReport:
    op: str
    tolerance: float
    entries: list[GradCheckEntry]

    @property
    def max_rel_error(self) -> float:
        return max((e.max_rel_error for e in self.entries), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def worst(self) -> GradCheckEntry:
        return max(self.entries, key=lambda e: e.max_rel_error)

    def summary(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return f"{status}  {self.op:<28} max_rel_err={self.max_rel_error:.3e}"

    def raise_if_failed(self) -> None:
        if not self.passed:
            w = self.worst()
            raise GradientCheckError(
                f"gradient check failed for op {self.op!r}: input {w.input_name!r} "
                f"coordinate {w.worst_index} has relative error {w.max_rel_error:.3e} "
                f"(tolerance {self.tolerance:.1e})"
            )


def _rel_error(a: float, n: float) -> float:
    return abs(a - n) / max(abs(a), abs(n), 1.0)


def grad_check(
    op: str,
    fn: Callable[..., Tensor],
    inputs: dict[str, Tensor] | Sequence[Tensor],
    tolerance: float = DEFAULT_TOLERANCE,
    step: float = DEFAULT_STEP,
    max_coords: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """Compare recorded gradients of ``fn`` against central finite differences.

    ``fn`` maps the input tensors to an output tensor of any shape. When
    ``max_coords`` is given, at most that many coordinates per input are
    perturbed (sampled deterministically from ``seed``), which keeps whole-
    model checks tractable.
    """
    if isinstance(inputs, dict):
        named = list(inputs.items())
    else:
        named = [(f"input{i}", t) for i, t in enumerate(inputs)]
    for _, t in named:
        t.requires_grad = True
        t.grad = None

    tensors = [t for _, t in named]
    out = fn(*tensors)
    rng = np.random.default_rng(seed)
    projection = rng.standard_normal(out.shape) if out.size > 1 else np.ones(out.shape)

    def projected(o: Tensor) -> float:
        return float((o.data * projection).sum())

    scalar = tsum(mul(out, Tensor(projection)))
    scalar.backward()
    analytic = {name: (t.grad.copy() if t.grad is not None else np.zeros(t.shape)) for name, t in named}

    entries: list[GradCheckEntry] = []
    for name, t in named:
        flat = t.data.reshape(-1)
        size = flat.size
        if max_coords is not None and size > max_coords:
            coords = np.sort(rng.choice(size, size=max_coords, replace=False))
        else:
            coords = np.arange(size)
        worst_err = 0.0
        worst_idx: tuple[int, ...] = ()
        for c in coords:
            orig = flat[c]
            flat[c] = orig + step
            f_plus = projected(fn(*tensors))
            flat[c] = orig - step
            f_minus = projected(fn(*tensors))
            flat[c] = orig
            numeric = (f_plus - f_minus) / (2.0 * step)
            err = _rel_error(float(analytic[name].reshape(-1)[c]), numeric)
            if err > worst_err:
                worst_err = err
                worst_idx = np.unravel_index(int(c), t.shape)
        entries.append(GradCheckEntry(name, worst_err, worst_idx, len(coords)))

    return GradCheckReport(op=op, tolerance=tolerance, entries=entries)
