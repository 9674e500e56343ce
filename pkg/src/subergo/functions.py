"""Test functions V with the derivatives a generator needs."""

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class TestFunction:
    """A Lyapunov-type function.

    ``grad`` is the derivative for scalar state spaces and the gradient
    (trailing axis of length n) for diffusions; ``laplacian`` is only needed
    by the elliptic operator.  ``log_growth`` q declares V(x) = O(log(x)^q),
    which lets the storage model decide whether its jump integral converges.
    """

    __test__ = False  # keep pytest from collecting this class

    value: Callable
    grad: Optional[Callable] = None
    laplacian: Optional[Callable] = None
    log_growth: Optional[float] = None
    name: str = "V"

    def __call__(self, x):
        return self.value(x)

    def power(self, eta):
        """V**eta with chain-rule derivatives."""
        if eta == 1:
            return self
        v, g, lap = self.value, self.grad, self.laplacian

        def value(x):
            return v(x) ** eta

        grad = None
        if g is not None:

            def grad(x):
                vx = np.asarray(v(x), dtype=float)
                gx = np.asarray(g(x), dtype=float)
                scale = eta * vx ** (eta - 1)
                if gx.ndim > vx.ndim:
                    scale = scale[..., None]
                return scale * gx

        laplacian = None
        if g is not None and lap is not None:

            def laplacian(x):
                vx = np.asarray(v(x), dtype=float)
                gx = np.asarray(g(x), dtype=float)
                sq = np.sum(gx**2, axis=-1) if gx.ndim > vx.ndim else gx**2
                return eta * vx ** (eta - 1) * lap(x) + eta * (eta - 1) * vx ** (eta - 2) * sq

        growth = None if self.log_growth is None else self.log_growth * eta
        return TestFunction(value, grad, laplacian, growth, f"({self.name})^{eta:g}")

    def scaled(self, a, shift=0.0):
        """a*V + shift."""
        v, g, lap = self.value, self.grad, self.laplacian
        return replace(
            self,
            value=lambda x: a * np.asarray(v(x), dtype=float) + shift,
            grad=None if g is None else (lambda x: a * np.asarray(g(x), dtype=float)),
            laplacian=None if lap is None else (lambda x: a * np.asarray(lap(x), dtype=float)),
            name=f"{a:g}*{self.name}+{shift:g}",
        )


def add(f, g, a=1.0):
    """a*f + g."""

    def combine(p, q):
        if p is None or q is None:
            return None
        return lambda x: a * np.asarray(p(x), dtype=float) + np.asarray(q(x), dtype=float)

    growth = None
    if f.log_growth is not None and g.log_growth is not None:
        growth = max(f.log_growth, g.log_growth)
    return TestFunction(
        combine(f.value, g.value),
        combine(f.grad, g.grad),
        combine(f.laplacian, g.laplacian),
        growth,
        f"{a:g}*{f.name}+{g.name}",
    )


def constant(c=1.0):
    return TestFunction(
        lambda x: np.full(np.shape(x), float(c)),
        lambda x: np.zeros(np.shape(x)),
        lambda x: np.zeros(np.shape(x)),
        0.0,
        f"{c:g}",
    )
