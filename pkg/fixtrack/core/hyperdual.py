"""
Second-order forward-mode differentiation with multivariate hyper-dual numbers.

A HyperDual carries the value of an expression together with its gradient
and Hessian with respect to k seeded variables. Arithmetic propagates all
three by the first- and second-order chain rule, so one evaluation of a
scalar function of k variables yields every first and second partial,
exact to rounding.

Usage:
    u = seed_variables([1.0, 2.0])
    y = u[0] * u[0] * u[1] + exp(u[1])
    y.real, y.grad, y.hess
"""

import math
from typing import Sequence, Union

import numpy as np

from .exceptions import DomainError

Number = Union[float, int]


class HyperDual:
    """Value, gradient (k,) and Hessian (k, k) of an expression."""

    __slots__ = ("real", "grad", "hess")

    # Keep numpy from broadcasting over a HyperDual when it is the right operand.
    __array_ufunc__ = None

    def __init__(self, real: float, grad: np.ndarray, hess: np.ndarray):
        self.real = float(real)
        self.grad = grad
        self.hess = hess

    @classmethod
    def variable(cls, value: float, index: int, k: int) -> "HyperDual":
        grad = np.zeros(k)
        grad[index] = 1.0
        return cls(value, grad, np.zeros((k, k)))

    @classmethod
    def constant(cls, value: float, k: int) -> "HyperDual":
        return cls(value, np.zeros(k), np.zeros((k, k)))

    @property
    def size(self) -> int:
        return self.grad.shape[0]

    def _chain(self, f: float, d1: float, d2: float) -> "HyperDual":
        """Compose a scalar function with value f and derivatives d1, d2 at self.real."""
        return HyperDual(f, d1 * self.grad,
                         d1 * self.hess + d2 * np.outer(self.grad, self.grad))

    def __repr__(self):
        return f"HyperDual(real={self.real!r}, grad={self.grad!r})"

    # Arithmetic

    def __neg__(self):
        return HyperDual(-self.real, -self.grad, -self.hess)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, HyperDual):
            return HyperDual(self.real + other.real, self.grad + other.grad, self.hess + other.hess)
        return HyperDual(self.real + other, self.grad, self.hess)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, HyperDual):
            return HyperDual(self.real - other.real, self.grad - other.grad, self.hess - other.hess)
        return HyperDual(self.real - other, self.grad, self.hess)

    def __rsub__(self, other):
        return HyperDual(other - self.real, -self.grad, -self.hess)

    def __mul__(self, other):
        if isinstance(other, HyperDual):
            cross = np.outer(self.grad, other.grad)
            return HyperDual(
                self.real * other.real,
                self.real * other.grad + other.real * self.grad,
                self.real * other.hess + other.real * self.hess + cross + cross.T,
            )
        return HyperDual(self.real * other, self.grad * other, self.hess * other)

    __rmul__ = __mul__

    def reciprocal(self) -> "HyperDual":
        a = self.real
        if a == 0.0:
            raise ZeroDivisionError("HyperDual division by zero real part")
        return self._chain(1.0 / a, -1.0 / (a * a), 2.0 / (a * a * a))

    def __truediv__(self, other):
        if isinstance(other, HyperDual):
            return self * other.reciprocal()
        return HyperDual(self.real / other, self.grad / other, self.hess / other)

    def __rtruediv__(self, other):
        return other * self.reciprocal()

    def __pow__(self, power):
        if isinstance(power, HyperDual):
            return exp(power * log(self))
        a = self.real
        p = float(power)
        if p == 0.0:
            return HyperDual.constant(1.0, self.size)
        if p.is_integer():
            n = int(p)
            if n < 0 and a == 0.0:
                raise DomainError(f"negative power {n} of zero")
            d2 = 0.0 if n == 1 else n * (n - 1) * a ** (n - 2)
            return self._chain(a ** n, n * a ** (n - 1), d2)
        if a < 0:
            raise DomainError(f"fractional power {p} of negative value {a}")
        if a == 0.0:
            # second derivative of a**p is finite at 0 only for p > 2
            if p < 2.0:
                raise DomainError(f"fractional power {p} is not twice differentiable at 0")
            return self._chain(0.0, 0.0, 0.0)
        return self._chain(a ** p, p * a ** (p - 1), p * (p - 1) * a ** (p - 2))

    def __rpow__(self, base):
        return exp(self * math.log(base))

    def __abs__(self):
        return -self if self.real < 0 else self

    # Comparisons act on the value only.

    def __lt__(self, other):
        return self.real < _real(other)

    def __le__(self, other):
        return self.real <= _real(other)

    def __gt__(self, other):
        return self.real > _real(other)

    def __ge__(self, other):
        return self.real >= _real(other)

    def __float__(self):
        return self.real

    # Elementary functions, also reached through numpy object arrays

    def exp(self):
        e = math.exp(self.real)
        return self._chain(e, e, e)

    def log(self):
        a = self.real
        return self._chain(math.log(a), 1.0 / a, -1.0 / (a * a))

    def sqrt(self):
        s = math.sqrt(self.real)
        return self._chain(s, 0.5 / s, -0.25 / (s * self.real))

    def sin(self):
        s, c = math.sin(self.real), math.cos(self.real)
        return self._chain(s, c, -s)

    def cos(self):
        s, c = math.sin(self.real), math.cos(self.real)
        return self._chain(c, -s, -c)


def _real(value) -> float:
    return value.real if isinstance(value, HyperDual) else value


def exp(value):
    """exp for floats, arrays and HyperDuals."""
    if isinstance(value, HyperDual):
        return value.exp()
    if isinstance(value, np.ndarray) and value.dtype == object:
        return np.array([exp(v) for v in value.ravel()], dtype=object).reshape(value.shape)
    return np.exp(value)


def log(value):
    """log for floats, arrays and HyperDuals."""
    if isinstance(value, HyperDual):
        return value.log()
    if isinstance(value, np.ndarray) and value.dtype == object:
        return np.array([log(v) for v in value.ravel()], dtype=object).reshape(value.shape)
    return np.log(value)


def sqrt(value):
    """sqrt for floats, arrays and HyperDuals."""
    if isinstance(value, HyperDual):
        return value.sqrt()
    if isinstance(value, np.ndarray) and value.dtype == object:
        return np.array([sqrt(v) for v in value.ravel()], dtype=object).reshape(value.shape)
    return np.sqrt(value)


def real_part(value) -> float:
    """Value of a HyperDual, or the number itself."""
    return float(_real(value))


def seed_variables(values: Sequence[Number], offset: int = 0, k: int = None) -> np.ndarray:
    """
    Object array of HyperDual variables for values, seeded at positions
    offset .. offset+len(values)-1 of a k-dimensional derivative space.
    """
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if k is None:
        k = offset + values.size
    out = np.empty(values.size, dtype=object)
    for i, v in enumerate(values):
        out[i] = HyperDual.variable(v, offset + i, k)
    return out


def dot(a, b):
    """Inner product that works for float and object arrays alike."""
    total = 0.0
    for ai, bi in zip(a, b):
        total = total + ai * bi
    return total


def matvec(matrix, vector) -> np.ndarray:
    """Matrix-vector product for float or object entries."""
    matrix = np.asarray(matrix)
    out = np.empty(matrix.shape[0], dtype=object)
    for i in range(matrix.shape[0]):
        out[i] = dot(matrix[i], vector)
    return out
