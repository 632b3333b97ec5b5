"""Cost families and their x-gradients.

Families:
  - "power":     c(x, y) = |x - y|^p with p > 1 (strictly convex for p > 1)
  - "quadratic": c(x, y) = |x - y|^2
  - "logcosh":   c(x, y) = sum_i log(cosh(x_i - y_i)), smooth strictly convex
  - "surplus3":  c(x, y, z) = <x,y> + <x,z> + <y,z>, a maximization surplus
  - "custom":    user-supplied callables (cost_fn, grad_x_fn), arity 2
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import ConfigurationError, DomainError, UsageError

_TWO_MARGINAL = ("power", "quadratic", "logcosh", "custom")


@dataclass(frozen=True)
class CostModel:
    family: str
    p: float = 2.0
    cost_fn: Optional[Callable] = None
    grad_x_fn: Optional[Callable] = None

    def __post_init__(self):
        if self.family not in _TWO_MARGINAL + ("surplus3",):
            raise ConfigurationError(f"unknown cost family {self.family!r}")
        if self.family == "power" and not self.p > 1.0:
            raise ConfigurationError("power family requires p > 1")
        if self.family == "custom" and (self.cost_fn is None or self.grad_x_fn is None):
            raise ConfigurationError("custom family needs cost_fn and grad_x_fn")

    @property
    def arity(self):
        return 3 if self.family == "surplus3" else 2

    @property
    def sense(self):
        """Natural optimization sense of the family."""
        return "max" if self.family == "surplus3" else "min"


@dataclass(frozen=True)
class GradientSample:
    base: tuple
    grad_x: np.ndarray


def _check_arity(model, pts):
    if len(pts) != model.arity:
        raise UsageError(f"family {model.family!r} takes {model.arity} points, got {len(pts)}")


def eval_cost(model, *pts):
    """Cost value at a tuple of points."""
    _check_arity(model, pts)
    pts = [np.asarray(p, dtype=float) for p in pts]
    if model.family == "quadratic":
        d = pts[0] - pts[1]
        return float(d @ d)
    if model.family == "power":
        return float(np.linalg.norm(pts[0] - pts[1]) ** model.p)
    if model.family == "logcosh":
        return float(np.sum(np.log(np.cosh(pts[0] - pts[1]))))
    if model.family == "surplus3":
        x, y, z = pts
        return float(x @ y + x @ z + y @ z)
    return float(model.cost_fn(*pts))


def grad_x_cost(model, *pts):
    """Analytic gradient of the cost with respect to the first argument."""
    _check_arity(model, pts)
    pts = [np.asarray(p, dtype=float) for p in pts]
    if model.family == "quadratic":
        g = 2.0 * (pts[0] - pts[1])
    elif model.family == "power":
        u = pts[0] - pts[1]
        r = np.linalg.norm(u)
        if r == 0.0:
            if model.p < 2.0:
                raise DomainError(f"|u|^p with p={model.p} not differentiable at u=0")
            g = np.zeros_like(u)
        else:
            g = model.p * r ** (model.p - 2.0) * u
    elif model.family == "logcosh":
        g = np.tanh(pts[0] - pts[1])
    elif model.family == "surplus3":
        g = pts[1] + pts[2]
    else:
        g = np.asarray(model.grad_x_fn(*pts), dtype=float)
    if not np.all(np.isfinite(g)):
        raise DomainError("gradient is not finite at the requested tuple")
    return GradientSample(base=tuple(map(tuple, pts)), grad_x=g)


def grad_x_fd(model, *pts, step=1e-6):
    """Central finite-difference gradient in x; test oracle for grad_x_cost."""
    _check_arity(model, pts)
    pts = [np.asarray(p, dtype=float) for p in pts]
    x = pts[0]
    g = np.zeros_like(x)
    for k in range(x.shape[0]):
        e = np.zeros_like(x)
        e[k] = step
        g[k] = (eval_cost(model, x + e, *pts[1:]) - eval_cost(model, x - e, *pts[1:])) / (2 * step)
    return g


def cost_table(model, *measures):
    """Dense cost table over the product of measure supports."""
    if len(measures) != model.arity:
        raise UsageError(f"family {model.family!r} couples {model.arity} marginals")
    if model.family == "quadratic":
        a, b = measures[0].points, measures[1].points
        diff = a[:, None, :] - b[None, :, :]
        return np.einsum("ijk,ijk->ij", diff, diff)
    if model.family == "power":
        a, b = measures[0].points, measures[1].points
        diff = a[:, None, :] - b[None, :, :]
        return np.linalg.norm(diff, axis=2) ** model.p
    if model.family == "logcosh":
        a, b = measures[0].points, measures[1].points
        return np.sum(np.log(np.cosh(a[:, None, :] - b[None, :, :])), axis=2)
    if model.family == "surplus3":
        x, y, z = (m.points for m in measures)
        xy = x @ y.T
        xz = x @ z.T
        yz = y @ z.T
        return xy[:, :, None] + xz[:, None, :] + yz[None, :, :]
    a, b = measures[0].points, measures[1].points
    out = np.empty((a.shape[0], b.shape[0]))
    for i in range(a.shape[0]):
        for j in range(b.shape[0]):
            out[i, j] = float(model.cost_fn(a[i], b[j]))
    return out


@dataclass(frozen=True)
class GapProfile:
    """Values and manifold-gradient residuals of x -> c(x,y1) - c(x,y2) on a chart."""

    values: np.ndarray
    tangential: np.ndarray
    chart: object
    y1: np.ndarray = field(repr=False, default=None)
    y2: np.ndarray = field(repr=False, default=None)


def subtwist_gap(model, y1, y2, chart):
    """Gap profile of the cost difference for two distinct targets on a chart.

    The tangential component of grad_x [c(x,y1) - c(x,y2)] vanishes exactly at
    the manifold critical points of the gap (the gradient is then parallel to
    the chart normal), so the returned residuals drive critical-point counts.
    """
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    if np.max(np.abs(y1 - y2)) <= 1e-15:
        raise UsageError("sub-twist gap needs two distinct targets")
    if model.arity != 2:
        raise UsageError("sub-twist gap is a two-marginal notion")
    n = chart.size
    values = np.empty(n)
    tangential = np.empty(n)
    for i in range(n):
        x = chart.positions[i]
        values[i] = eval_cost(model, x, y1) - eval_cost(model, x, y2)
        d = grad_x_cost(model, x, y1).grad_x - grad_x_cost(model, x, y2).grad_x
        tangential[i] = float(d @ chart.tangents[i])
    return GapProfile(values=values, tangential=tangential, chart=chart, y1=y1, y2=y2)
