"""Truncated Taylor (jet) arithmetic through third order.

A ``Jet`` carries a function value together with its partial derivatives up
to a chosen order (at most 3) with respect to ``n`` chart coordinates.
Arithmetic propagates derivatives exactly via the product, quotient and chain
rules on the truncated algebra, so no finite differencing is ever involved.

Jets broadcast over an arbitrary leading batch shape: evaluating a field at
``B`` sample points at once yields ``value`` of shape ``(B,)``, ``grad`` of
shape ``(B, n)``, ``hess`` of shape ``(B, n, n)`` and ``third`` of shape
``(B, n, n, n)``. Derivative arrays above ``order`` are ``None``.

Third-order truncation is enough for everything downstream: curvature needs
two derivatives of the metric, and the bitension oracle differentiates
Christoffel symbols once more.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["Jet", "JET_FUNCTIONS", "JetDomainError"]


class JetDomainError(ValueError):
    """Evaluation left the domain of a primitive (log, sqrt, division, ...)."""


def _outer_sym(g: np.ndarray, h: np.ndarray) -> np.ndarray:
    # sum over the three placements of the gradient index on a symmetric hess
    return (
        g[..., :, None, None] * h[..., None, :, :]
        + g[..., None, :, None] * h[..., :, None, :]
        + g[..., None, None, :] * h[..., :, :, None]
    )


class Jet:
    """Value plus exact partial derivatives through ``order`` (0..3)."""

    __slots__ = ("value", "grad", "hess", "third", "order", "n")

    def __init__(self, value, grad, hess, third, order: int, n: int):
        self.value = value
        self.grad = grad
        self.hess = hess
        self.third = third
        self.order = order
        self.n = n

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, value, n: int, batch_shape=(), order: int = 3) -> "Jet":
        v = np.full(batch_shape, float(value))
        g = np.zeros(batch_shape + (n,)) if order >= 1 else None
        h = np.zeros(batch_shape + (n, n)) if order >= 2 else None
        t = np.zeros(batch_shape + (n, n, n)) if order >= 3 else None
        return cls(v, g, h, t, order, n)

    @classmethod
    def coordinate(cls, points: np.ndarray, index: int, order: int = 3) -> "Jet":
        """Jet of the coordinate function x_index at the given points (..., n)."""
        points = np.asarray(points, dtype=float)
        n = points.shape[-1]
        batch = points.shape[:-1]
        v = points[..., index].copy()
        g = None
        if order >= 1:
            g = np.zeros(batch + (n,))
            g[..., index] = 1.0
        h = np.zeros(batch + (n, n)) if order >= 2 else None
        t = np.zeros(batch + (n, n, n)) if order >= 3 else None
        return cls(v, g, h, t, order, n)

    def _const_like(self, value) -> "Jet":
        return Jet.constant(value, self.n, np.shape(self.value), self.order)

    def _lift(self, other):
        if isinstance(other, Jet):
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self._const_like(other)
        return NotImplemented

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        b = self._lift(other)
        if b is NotImplemented:
            return NotImplemented
        k = min(self.order, b.order)
        return Jet(
            self.value + b.value,
            self.grad + b.grad if k >= 1 else None,
            self.hess + b.hess if k >= 2 else None,
            self.third + b.third if k >= 3 else None,
            k,
            self.n,
        )

    __radd__ = __add__

    def __neg__(self):
        k = self.order
        return Jet(
            -self.value,
            -self.grad if k >= 1 else None,
            -self.hess if k >= 2 else None,
            -self.third if k >= 3 else None,
            k,
            self.n,
        )

    def __sub__(self, other):
        b = self._lift(other)
        if b is NotImplemented:
            return NotImplemented
        k = min(self.order, b.order)
        return Jet(
            self.value - b.value,
            self.grad - b.grad if k >= 1 else None,
            self.hess - b.hess if k >= 2 else None,
            self.third - b.third if k >= 3 else None,
            k,
            self.n,
        )

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        b = self._lift(other)
        if b is NotImplemented:
            return NotImplemented
        a = self
        k = min(a.order, b.order)
        v = a.value * b.value
        g = h = t = None
        if k >= 1:
            g = a.value[..., None] * b.grad + b.value[..., None] * a.grad
        if k >= 2:
            h = (
                a.value[..., None, None] * b.hess
                + b.value[..., None, None] * a.hess
                + a.grad[..., :, None] * b.grad[..., None, :]
                + b.grad[..., :, None] * a.grad[..., None, :]
            )
        if k >= 3:
            t = (
                a.value[..., None, None, None] * b.third
                + b.value[..., None, None, None] * a.third
                + _outer_sym(a.grad, b.hess)
                + _outer_sym(b.grad, a.hess)
            )
        return Jet(v, g, h, t, k, self.n)

    __rmul__ = __mul__

    def __truediv__(self, other):
        b = self._lift(other)
        if b is NotImplemented:
            return NotImplemented
        if np.any(b.value == 0.0):
            raise JetDomainError("division by zero")
        return self * b._reciprocal()

    def __rtruediv__(self, other):
        if np.any(self.value == 0.0):
            raise JetDomainError("division by zero")
        return self._lift(other) * self._reciprocal()

    def _reciprocal(self) -> "Jet":
        u = self.value
        return self._compose(1.0 / u, -1.0 / u**2, 2.0 / u**3, -6.0 / u**4)

    def __pow__(self, p):
        """Power with a numeric exponent; exact for integer exponents."""
        if isinstance(p, Jet):
            return NotImplemented
        p = float(p)
        u = self.value
        if p == int(p):
            if p < 0 and np.any(u == 0.0):
                raise JetDomainError("zero raised to a negative power")
        else:
            if np.any(u <= 0.0):
                raise JetDomainError("non-integer power of a non-positive base")
        derivs = [np.power(u, p)]
        coeff = 1.0
        for k in range(1, self.order + 1):
            coeff *= p - (k - 1)
            if coeff == 0.0:
                derivs.append(np.zeros_like(u))
            else:
                derivs.append(coeff * np.power(u, p - k))
        derivs += [None] * (3 - self.order)
        return self._compose(*derivs)

    # -- chain rule --------------------------------------------------------

    def _compose(self, d0, d1=None, d2=None, d3=None) -> "Jet":
        """Jet of h(self) given derivatives d_k = h^(k)(self.value)."""
        k = self.order
        v = d0
        g = h = t = None
        if k >= 1:
            g = d1[..., None] * self.grad
        if k >= 2:
            gg = self.grad[..., :, None] * self.grad[..., None, :]
            h = d2[..., None, None] * gg + d1[..., None, None] * self.hess
        if k >= 3:
            ggg = gg[..., :, :, None] * self.grad[..., None, None, :]
            t = (
                d3[..., None, None, None] * ggg
                + d2[..., None, None, None] * _outer_sym(self.grad, self.hess)
                + d1[..., None, None, None] * self.third
            )
        return Jet(v, g, h, t, k, self.n)

    # -- derivative extraction ---------------------------------------------

    def partial(self, i: int) -> "Jet":
        """Jet of the i-th partial derivative; one order lower."""
        if self.order < 1:
            raise ValueError("cannot take a partial of an order-0 jet")
        k = self.order - 1
        return Jet(
            self.grad[..., i].copy(),
            self.hess[..., i, :].copy() if k >= 1 else None,
            self.third[..., i, :, :].copy() if k >= 2 else None,
            None,
            k,
            self.n,
        )

    def __repr__(self):
        return f"Jet(order={self.order}, n={self.n}, value={self.value!r})"


# -- elementary functions ----------------------------------------------------


def _sin(u: Jet) -> Jet:
    s, c = np.sin(u.value), np.cos(u.value)
    return u._compose(s, c, -s, -c)


def _cos(u: Jet) -> Jet:
    s, c = np.sin(u.value), np.cos(u.value)
    return u._compose(c, -s, -c, s)


def _tan(u: Jet) -> Jet:
    t = np.tan(u.value)
    s = 1.0 + t * t
    return u._compose(t, s, 2.0 * s * t, 2.0 * s * (s + 2.0 * t * t))


def _sinh(u: Jet) -> Jet:
    s, c = np.sinh(u.value), np.cosh(u.value)
    return u._compose(s, c, s, c)


def _cosh(u: Jet) -> Jet:
    s, c = np.sinh(u.value), np.cosh(u.value)
    return u._compose(c, s, c, s)


def _tanh(u: Jet) -> Jet:
    t = np.tanh(u.value)
    s = 1.0 - t * t
    return u._compose(t, s, -2.0 * t * s, s * (6.0 * t * t - 2.0))


def _exp(u: Jet) -> Jet:
    e = np.exp(u.value)
    return u._compose(e, e, e, e)


def _log(u: Jet) -> Jet:
    v = u.value
    if np.any(v <= 0.0):
        raise JetDomainError("log of a non-positive value")
    return u._compose(np.log(v), 1.0 / v, -1.0 / v**2, 2.0 / v**3)


def _sqrt(u: Jet) -> Jet:
    v = u.value
    if np.any(v < 0.0):
        raise JetDomainError("sqrt of a negative value")
    r = np.sqrt(v)
    return u._compose(r, 0.5 / r, -0.25 / v / r, 0.375 / v**2 / r)


JET_FUNCTIONS = {
    "sin": _sin,
    "cos": _cos,
    "tan": _tan,
    "sinh": _sinh,
    "cosh": _cosh,
    "tanh": _tanh,
    "exp": _exp,
    "log": _log,
    "sqrt": _sqrt,
}

CONSTANTS = {"pi": math.pi, "e": math.e}
