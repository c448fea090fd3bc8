"""Reverse-mode tape plus forward Taylor jets.

Every arithmetic step goes through a registered primitive.  A primitive is a
forward function and a vector-Jacobian product; the tape stores the operands
and result of each call so the backward sweep can replay the partials.

Jets carry raw derivatives ``[f, f', f'', f''']`` along one input axis.  Their
coefficients may themselves be tape variables, which is how parameter
gradients of derivative-based residuals are obtained (reverse mode over the
forward jet propagation).  A coefficient of ``None`` is an exact zero and is
skipped by the propagation rules.

Node values are numpy arrays, so one tape node covers a whole batch of
collocation points or a whole weight matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonFiniteValue, OrderTooHigh, UnregisteredOp

MAX_ORDER = 3


# ---------------------------------------------------------------------------
# primitive registry


@dataclass(frozen=True)
class Primitive:
    name: str
    fn: Callable
    # vjp(g, out, args, wrt, **kw) -> tuple with one entry per positional arg
    vjp: Callable


PRIMITIVES: dict[str, Primitive] = {}


def register(name: str, fn: Callable, vjp: Callable) -> None:
    PRIMITIVES[name] = Primitive(name, fn, vjp)


def _unbroadcast(g, shape):
    g = np.asarray(g)
    if g.shape == tuple(shape):
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def _shape(a):
    return np.shape(a)


def _vjp_add(g, out, args, wrt):
    a, b = args
    return (_unbroadcast(g, _shape(a)) if wrt[0] else None,
            _unbroadcast(g, _shape(b)) if wrt[1] else None)


def _vjp_sub(g, out, args, wrt):
    a, b = args
    return (_unbroadcast(g, _shape(a)) if wrt[0] else None,
            _unbroadcast(-g, _shape(b)) if wrt[1] else None)


def _vjp_mul(g, out, args, wrt):
    a, b = args
    return (_unbroadcast(g * b, _shape(a)) if wrt[0] else None,
            _unbroadcast(g * a, _shape(b)) if wrt[1] else None)


def _vjp_div(g, out, args, wrt):
    a, b = args
    return (_unbroadcast(g / b, _shape(a)) if wrt[0] else None,
            _unbroadcast(-g * out / b, _shape(b)) if wrt[1] else None)


def _vjp_matmul(g, out, args, wrt):
    a, b = args
    a = np.asarray(a)
    b = np.asarray(b)
    ga = gb = None
    if a.ndim == 2 and b.ndim == 2:
        if wrt[0]:
            ga = g @ b.T
        if wrt[1]:
            gb = a.T @ g
    elif a.ndim == 1 and b.ndim == 2:
        if wrt[0]:
            ga = b @ g
        if wrt[1]:
            gb = np.outer(a, g)
    elif a.ndim == 2 and b.ndim == 1:
        if wrt[0]:
            ga = np.outer(g, b)
        if wrt[1]:
            gb = a.T @ g
    elif a.ndim == 1 and b.ndim == 1:
        if wrt[0]:
            ga = g * b
        if wrt[1]:
            gb = g * a
    else:
        raise UnregisteredOp("matmul is registered for 1-D and 2-D operands only")
    return ga, gb


def _sum(a, axis=None, keepdims=False):
    return np.sum(a, axis=axis, keepdims=keepdims)


def _vjp_sum(g, out, args, wrt, axis=None, keepdims=False):
    shape = _shape(args[0])
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return (np.broadcast_to(g, shape),)


def _getitem(a, idx):
    return np.asarray(a)[idx]


def _vjp_getitem(g, out, args, wrt, idx):
    z = np.zeros(_shape(args[0]))
    np.add.at(z, idx, g)
    return (z,)


def _reshape(a, shape):
    return np.reshape(a, shape)


def _vjp_reshape(g, out, args, wrt, shape):
    return (np.reshape(g, _shape(args[0])),)


def _stack(*args, axis=0):
    return np.stack(args, axis=axis)


def _vjp_stack(g, out, args, wrt, axis=0):
    return tuple(np.take(g, i, axis=axis) if w else None
                 for i, w in enumerate(wrt))


def _concat(*args, axis=0):
    return np.concatenate([np.atleast_1d(a) for a in args], axis=axis)


def _vjp_concat(g, out, args, wrt, axis=0):
    sizes = [np.atleast_1d(a).shape[axis] for a in args]
    parts = np.split(g, np.cumsum(sizes)[:-1], axis=axis)
    return tuple(p.reshape(_shape(a)) if w else None
                 for p, a, w in zip(parts, args, wrt))


def _pow(a, n):
    return np.power(a, n)


def _vjp_pow(g, out, args, wrt, n):
    if n == 0:
        return (np.zeros(_shape(args[0])),)
    return (g * n * np.power(args[0], n - 1),)


def _softplus(a):
    return np.logaddexp(0.0, a)


def _sigmoid(a):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(a)))


def _unary_vjp(deriv):
    def vjp(g, out, args, wrt):
        return (g * deriv(args[0], out),)
    return vjp


register("add", np.add, _vjp_add)
register("sub", np.subtract, _vjp_sub)
register("mul", np.multiply, _vjp_mul)
register("div", np.divide, _vjp_div)
register("neg", np.negative, lambda g, out, args, wrt: (-g,))
register("pow", _pow, _vjp_pow)
register("tanh", np.tanh, _unary_vjp(lambda a, out: 1.0 - out * out))
register("sin", np.sin, _unary_vjp(lambda a, out: np.cos(a)))
register("cos", np.cos, _unary_vjp(lambda a, out: -np.sin(a)))
register("exp", np.exp, _unary_vjp(lambda a, out: out))
register("log", np.log, _unary_vjp(lambda a, out: 1.0 / a))
register("sqrt", np.sqrt, _unary_vjp(lambda a, out: 0.5 / out))
register("softplus", _softplus, _unary_vjp(lambda a, out: _sigmoid(a)))
register("relu", lambda a: np.maximum(a, 0.0),
         _unary_vjp(lambda a, out: (np.asarray(a) > 0).astype(float)))
register("matmul", np.matmul, _vjp_matmul)
register("sum", _sum, _vjp_sum)
register("getitem", _getitem, _vjp_getitem)
register("reshape", _reshape, _vjp_reshape)
register("transpose", np.transpose, lambda g, out, args, wrt: (np.transpose(g),))
register("stack", _stack, _vjp_stack)
register("concat", _concat, _vjp_concat)


# ---------------------------------------------------------------------------
# tape


class Tape:
    """Append-only record of primitive calls for one evaluation."""

    def __init__(self):
        self.nodes = []

    def variable(self, value) -> Var:
        value = np.array(value, dtype=float)
        if not np.isfinite(value).all():
            raise NonFiniteValue("input contains NaN or Inf")
        self.nodes.append(("input", (), (), value, {}, ()))
        return Var(value, self, len(self.nodes) - 1)

    def record(self, opcode, out, args, kw) -> Var:
        parents = tuple((pos, a.index) for pos, a in enumerate(args)
                        if isinstance(a, Var))
        wrt = tuple(isinstance(a, Var) for a in args)
        vals = tuple(a.value if isinstance(a, Var) else a for a in args)
        self.nodes.append((opcode, parents, vals, out, kw, wrt))
        return Var(out, self, len(self.nodes) - 1)

    def backward(self, out: Var, seed=None) -> list:
        """Adjoints of ``out`` (seeded with ``seed``) for every node."""
        if out.tape is not self:
            raise ValueError("output does not belong to this tape")
        adj = [None] * (out.index + 1)
        adj[out.index] = np.ones_like(out.value) if seed is None else np.asarray(seed, float)
        for i in range(out.index, -1, -1):
            g = adj[i]
            if g is None:
                continue
            opcode, parents, vals, res, kw, wrt = self.nodes[i]
            if not parents:
                continue
            grads = PRIMITIVES[opcode].vjp(g, res, vals, wrt, **kw)
            for pos, idx in parents:
                gi = grads[pos]
                adj[idx] = gi if adj[idx] is None else adj[idx] + gi
        return adj


def apply(opcode: str, *args, **kw):
    """Run primitive ``opcode``; records a node when any operand is a Var."""
    prim = PRIMITIVES.get(opcode)
    if prim is None:
        raise UnregisteredOp(f"unregistered primitive {opcode!r}")
    tape = None
    for a in args:
        if isinstance(a, Var):
            if tape is None:
                tape = a.tape
            elif a.tape is not tape:
                raise ValueError("operands belong to different tapes")
    vals = tuple(a.value if isinstance(a, Var) else a for a in args)
    with np.errstate(all="ignore"):
        out = np.asarray(prim.fn(*vals, **kw), dtype=float)
    if not np.isfinite(out).all():
        raise NonFiniteValue(f"{opcode} produced a non-finite value")
    if tape is None:
        return out
    return tape.record(opcode, out, args, kw)


_UFUNCS = {
    np.add: "add", np.subtract: "sub", np.multiply: "mul",
    np.true_divide: "div", np.negative: "neg", np.tanh: "tanh",
    np.sin: "sin", np.cos: "cos", np.exp: "exp", np.log: "log",
    np.sqrt: "sqrt", np.matmul: "matmul",
}


def _int_exponent(n):
    if isinstance(n, (Var, Jet)):
        raise UnregisteredOp("pow is registered for constant integer exponents only")
    if float(n) != int(n):
        raise UnregisteredOp(f"non-integer exponent {n!r}")
    return int(n)


class Var:
    """Array value recorded on a tape."""

    __slots__ = ("value", "tape", "index")
    __array_priority__ = 100.0

    def __init__(self, value, tape, index):
        self.value = value
        self.tape = tape
        self.index = index

    shape = property(lambda self: self.value.shape)
    ndim = property(lambda self: self.value.ndim)
    size = property(lambda self: self.value.size)
    T = property(lambda self: apply("transpose", self))

    def __len__(self):
        return len(self.value)

    def __repr__(self):
        return f"Var({self.value!r})"

    def __float__(self):
        return float(self.value)

    def __add__(self, o): return _binary("add", self, o)
    def __radd__(self, o): return _binary("add", o, self)
    def __sub__(self, o): return _binary("sub", self, o)
    def __rsub__(self, o): return _binary("sub", o, self)
    def __mul__(self, o): return _binary("mul", self, o)
    def __rmul__(self, o): return _binary("mul", o, self)
    def __truediv__(self, o): return _binary("div", self, o)
    def __rtruediv__(self, o): return _binary("div", o, self)
    def __matmul__(self, o): return matmul(self, o)
    def __rmatmul__(self, o): return matmul(o, self)
    def __neg__(self): return apply("neg", self)
    def __pos__(self): return self

    def __pow__(self, n):
        return apply("pow", self, n=_int_exponent(n))

    def __getitem__(self, idx):
        return apply("getitem", self, idx=idx)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return apply("reshape", self, shape=shape)

    def sum(self, axis=None, keepdims=False):
        return apply("sum", self, axis=axis, keepdims=keepdims)

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs:
            raise UnregisteredOp(f"{ufunc.__name__}.{method} is not registered")
        if ufunc is np.power:
            return power(inputs[0], inputs[1])
        opcode = _UFUNCS.get(ufunc)
        if opcode is None:
            raise UnregisteredOp(f"ufunc {ufunc.__name__} is not registered")
        if opcode == "matmul":
            return matmul(*inputs)
        if len(inputs) == 2:
            return _binary(opcode, *inputs)
        return _unary(opcode, inputs[0])


def _binary(opcode, a, b):
    if isinstance(a, Jet) or isinstance(b, Jet):
        return NotImplemented
    return apply(opcode, a, b)


# ---------------------------------------------------------------------------
# jets


def _zadd(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def _zmul(a, b):
    if a is None or b is None:
        return None
    return a * b


def _zscale(c, a):
    return None if a is None else c * a


def _zmap(fn, a):
    return None if a is None else fn(a)


def _leibniz(f, g, op):
    """Coefficients of ``op(f, g)`` for a bilinear ``op``."""
    order = min(f.order, g.order)

    def b(x, y):
        if x is None or y is None:
            return None
        return op(x, y)

    fc, gc = f.coeffs, g.coeffs
    out = [b(fc[0], gc[0])]
    if order >= 1:
        out.append(_zadd(b(fc[1], gc[0]), b(fc[0], gc[1])))
    if order >= 2:
        out.append(_zadd(_zadd(b(fc[2], gc[0]), _zscale(2.0, b(fc[1], gc[1]))),
                         b(fc[0], gc[2])))
    if order >= 3:
        t = _zadd(b(fc[3], gc[0]), _zscale(3.0, b(fc[2], gc[1])))
        t = _zadd(t, _zscale(3.0, b(fc[1], gc[2])))
        out.append(_zadd(t, b(fc[0], gc[3])))
    return Jet(out)


def _compose(f, value, derivs):
    """Faa di Bruno up to third order: ``derivs[k]`` is phi^(k+1)(f0)."""
    out = [value]
    c = f.coeffs
    if f.order >= 1:
        out.append(_zmul(derivs[0], c[1]))
    if f.order >= 2:
        out.append(_zadd(_zmul(derivs[1], _zmul(c[1], c[1])), _zmul(derivs[0], c[2])))
    if f.order >= 3:
        f1sq = _zmul(c[1], c[1])
        t = _zmul(derivs[2], _zmul(f1sq, c[1]))
        t = _zadd(t, _zscale(3.0, _zmul(derivs[1], _zmul(c[1], c[2]))))
        out.append(_zadd(t, _zmul(derivs[0], c[3])))
    return Jet(out)


def _rule_tanh(x, v, order):
    d1 = 1.0 - v * v
    ds = [d1]
    if order >= 2:
        ds.append(-2.0 * v * d1)
    if order >= 3:
        ds.append(d1 * (6.0 * v * v - 2.0))
    return ds


def _rule_sin(x, v, order):
    c = apply("cos", x)
    return [c, -v, -c][:order]


def _rule_cos(x, v, order):
    s = apply("sin", x)
    return [-s, -v, s][:order]


def _rule_exp(x, v, order):
    return [v] * order


def _rule_log(x, v, order):
    r = 1.0 / x
    ds = [r]
    if order >= 2:
        ds.append(-(r * r))
    if order >= 3:
        ds.append(2.0 * r * r * r)
    return ds


def _rule_sqrt(x, v, order):
    r = 1.0 / v
    ds = [0.5 * r]
    if order >= 2:
        ds.append(-0.25 * r * r * r)
    if order >= 3:
        ds.append(0.375 * r * r * r * r * r)
    return ds


def _rule_softplus(x, v, order):
    s = 0.5 * (1.0 + apply("tanh", 0.5 * x))
    ds = [s]
    if order >= 2:
        ds.append(s * (1.0 - s))
    if order >= 3:
        ds.append(ds[1] * (1.0 - 2.0 * s))
    return ds


def _rule_relu(x, v, order):
    step = (np.asarray(x.value if isinstance(x, Var) else x) > 0).astype(float)
    return [step] + [None] * (order - 1)


def _rule_pow(x, v, order, n):
    ds = []
    coef = float(n)
    for k in range(1, order + 1):
        if n - k < 0 and n >= 0:
            ds.append(None)
        elif n - k == 0:
            ds.append(coef)
        else:
            ds.append(coef * apply("pow", x, n=n - k))
        coef *= n - k
    return ds


def _rule_recip(x, v, order):
    ds = [-(v * v)]
    if order >= 2:
        ds.append(2.0 * v * v * v)
    if order >= 3:
        ds.append(-6.0 * v * v * v * v)
    return ds


_JET_RULES = {
    "tanh": _rule_tanh, "sin": _rule_sin, "cos": _rule_cos, "exp": _rule_exp,
    "log": _rule_log, "sqrt": _rule_sqrt, "softplus": _rule_softplus,
    "relu": _rule_relu,
}


class Jet:
    """Value plus raw derivatives along one input axis, up to third order."""

    __slots__ = ("coeffs",)
    __array_priority__ = 200.0

    def __init__(self, coeffs):
        coeffs = list(coeffs)
        if not 1 <= len(coeffs) <= MAX_ORDER + 1:
            raise OrderTooHigh(f"jets carry at most {MAX_ORDER} derivatives")
        self.coeffs = coeffs

    @classmethod
    def seed(cls, x, direction, order: int) -> Jet:
        _check_order(order)
        x = np.asarray(x, dtype=float)
        d = np.broadcast_to(np.asarray(direction, dtype=float), x.shape)
        return cls([x, d] + [None] * (order - 1))

    @classmethod
    def constant(cls, value, order: int) -> Jet:
        return cls([value] + [None] * order)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def value(self):
        return self.coeffs[0]

    @property
    def shape(self):
        return np.shape(_raw(self.coeffs[0]))

    def derivative(self, k: int):
        """k-th derivative, with implicit zeros materialized."""
        c = self.coeffs[k]
        if c is None:
            return np.zeros(self.shape)
        return c

    def materialize(self) -> list:
        return [self.derivative(k) for k in range(self.order + 1)]

    def __repr__(self):
        return f"Jet({self.materialize()!r})"

    def _promote(self, other):
        return other if isinstance(other, Jet) else Jet.constant(other, self.order)

    def __add__(self, o):
        o = self._promote(o)
        return Jet([_zadd(a, b) for a, b in zip(self.coeffs, o.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return Jet([_zmap(lambda a: -a, c) for c in self.coeffs])

    def __sub__(self, o):
        return self + (-self._promote(o))

    def __rsub__(self, o):
        return self._promote(o) + (-self)

    def __mul__(self, o):
        if isinstance(o, Jet):
            return _leibniz(self, o, lambda a, b: a * b)
        return Jet([_zmul(c, o) for c in self.coeffs])

    def __rmul__(self, o):
        return Jet([_zmul(o, c) for c in self.coeffs])

    def __truediv__(self, o):
        if isinstance(o, Jet):
            return self * o._reciprocal()
        return Jet([_zmap(lambda a: a / o, c) for c in self.coeffs])

    def __rtruediv__(self, o):
        return self._reciprocal() * o

    def _reciprocal(self):
        v = 1.0 / self.value
        return _compose(self, v, _rule_recip(self.value, v, self.order))

    def __pow__(self, n):
        n = _int_exponent(n)
        v = apply("pow", self.value, n=n)
        return _compose(self, v, _rule_pow(self.value, v, self.order, n))

    def __matmul__(self, o):
        if isinstance(o, Jet):
            return _leibniz(self, o, matmul)
        return Jet([_zmap(lambda a: matmul(a, o), c) for c in self.coeffs])

    def __rmatmul__(self, o):
        return Jet([_zmap(lambda a: matmul(o, a), c) for c in self.coeffs])

    def __getitem__(self, idx):
        return Jet([_zmap(lambda a: a[idx], c) for c in self.coeffs])

    @property
    def T(self):
        return Jet([_zmap(transpose, c) for c in self.coeffs])

    def reshape(self, *shape):
        return Jet([_zmap(lambda a: a.reshape(*shape), c) for c in self.coeffs])

    def sum(self, axis=None, keepdims=False):
        return Jet([_zmap(lambda a: asum(a, axis=axis, keepdims=keepdims), c)
                    for c in self.coeffs])

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs:
            raise UnregisteredOp(f"{ufunc.__name__}.{method} is not registered")
        if ufunc is np.power:
            return power(*inputs)
        opcode = _UFUNCS.get(ufunc)
        if opcode is None:
            raise UnregisteredOp(f"ufunc {ufunc.__name__} is not registered")
        if opcode == "matmul":
            return matmul(*inputs)
        if len(inputs) == 2:
            a, b = inputs
            a = a if isinstance(a, Jet) else b._promote(a)
            return {"add": Jet.__add__, "sub": Jet.__sub__, "mul": Jet.__mul__,
                    "div": Jet.__truediv__}[opcode](a, b)
        return _unary(opcode, inputs[0])


def _raw(a):
    return a.value if isinstance(a, Var) else a


def _check_order(order):
    if order > MAX_ORDER:
        raise OrderTooHigh(f"order {order} exceeds {MAX_ORDER}")
    if order < 0:
        raise ValueError("order must be non-negative")


def _unary(opcode, x):
    if isinstance(x, Jet):
        v = apply(opcode, x.value)
        if x.order == 0:
            return Jet([v])
        return _compose(x, v, _JET_RULES[opcode](x.value, v, x.order))
    return apply(opcode, x)


# ---------------------------------------------------------------------------
# public elementwise and structural functions (accept arrays, Vars and Jets)


def tanh(x): return _unary("tanh", x)
def sin(x): return _unary("sin", x)
def cos(x): return _unary("cos", x)
def exp(x): return _unary("exp", x)
def log(x): return _unary("log", x)
def sqrt(x): return _unary("sqrt", x)
def softplus(x): return _unary("softplus", x)
def relu(x): return _unary("relu", x)


def sigmoid(x):
    return 0.5 * (1.0 + tanh(0.5 * x))


def power(x, n):
    if isinstance(x, Jet):
        return x ** n
    return apply("pow", x, n=_int_exponent(n))


def matmul(a, b):
    if isinstance(a, Jet) or isinstance(b, Jet):
        if isinstance(a, Jet):
            return a @ b
        return b.__rmatmul__(a)
    return apply("matmul", a, b)


def transpose(a):
    if isinstance(a, Jet):
        return a.T
    return apply("transpose", a)


def asum(a, axis=None, keepdims=False):
    if isinstance(a, Jet):
        return a.sum(axis=axis, keepdims=keepdims)
    return apply("sum", a, axis=axis, keepdims=keepdims)


def stack(items, axis=0):
    items = list(items)
    if any(isinstance(i, Jet) for i in items):
        raise UnregisteredOp("stack of jets: stack their coefficients instead")
    return apply("stack", *items, axis=axis)


def concat(items, axis=0):
    return apply("concat", *items, axis=axis)


# ---------------------------------------------------------------------------
# drivers


def _as_params(at):
    at = np.array(at, dtype=float)
    if not np.isfinite(at).all():
        raise NonFiniteValue("evaluation point contains NaN or Inf")
    return at


def grad(scalar_fn: Callable, at) -> tuple[float, np.ndarray]:
    """Value and gradient of ``scalar_fn`` at ``at`` by one reverse sweep."""
    at = _as_params(at)
    tape = Tape()
    theta = tape.variable(at)
    out = scalar_fn(theta)
    if not isinstance(out, Var):
        value = np.asarray(out, dtype=float)
        if value.size != 1:
            raise ValueError("scalar_fn must return a scalar")
        return float(value.reshape(())), np.zeros_like(at)
    if out.size != 1:
        raise ValueError(f"scalar_fn returned shape {out.shape}, expected a scalar")
    adj = tape.backward(out)
    g = adj[theta.index] if theta.index < len(adj) else None
    g = np.zeros_like(at) if g is None else np.array(g, dtype=float).reshape(at.shape)
    return float(out.value.reshape(())), g


def grad_through_jets(scalar_fn: Callable, at) -> tuple[float, np.ndarray]:
    """Same as :func:`grad`; ``scalar_fn`` may build jets of its own.

    Jet coefficients built from the parameter variable are ordinary tape
    nodes, so no separate machinery is needed.
    """
    return grad(scalar_fn, at)


def jacobian(vector_fn: Callable, at) -> tuple[np.ndarray, np.ndarray]:
    """Output vector and its Jacobian (one backward sweep per output)."""
    at = _as_params(at)
    tape = Tape()
    theta = tape.variable(at)
    out = vector_fn(theta)
    if not isinstance(out, Var):
        out_val = np.asarray(out, dtype=float).ravel()
        return out_val, np.zeros((out_val.size, at.size))
    flat = out.reshape(-1)
    jac = np.zeros((flat.size, at.size))
    for i in range(flat.size):
        seed = np.zeros(flat.size)
        seed[i] = 1.0
        g = tape.backward(flat, seed)[theta.index]
        if g is not None:
            jac[i] = np.ravel(g)
    return flat.value.copy(), jac


def jet_eval(fn: Callable, at, direction, order: int) -> Jet:
    """Derivatives of ``fn`` at ``at`` along a coordinate axis.

    ``direction`` is either an axis index or a unit basis vector.
    """
    _check_order(order)
    if order < 1:
        raise ValueError("order must be at least 1")
    x = np.array(at, dtype=float)
    if isinstance(direction, (int, np.integer)):
        d = np.zeros_like(x)
        if x.ndim == 0:
            if direction != 0:
                raise ValueError("a scalar point only has axis 0")
            d = np.float64(1.0)
        else:
            d[int(direction)] = 1.0
    else:
        d = np.asarray(direction, dtype=float)
        if d.shape != x.shape or np.sort(np.abs(d.ravel()))[-1] != 1.0 or np.abs(d).sum() != 1.0:
            raise ValueError("direction must be a unit basis vector")
    out = fn(Jet.seed(x, d, order))
    if not isinstance(out, Jet):
        out = Jet.constant(out, order)
    return Jet([np.asarray(_raw(c), dtype=float) for c in out.materialize()])


def grad_check(fn: Callable, at, eps: float = 1e-5, coords=None) -> float:
    """Max over coordinates of ``|AD - FD| / max(1, |FD|)`` (central differences).

    ``coords`` restricts the check to the given flat indices.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    at = _as_params(at)
    _, g = grad(fn, at)
    flat = at.ravel()
    worst = 0.0
    for i in (range(flat.size) if coords is None else coords):
        up = flat.copy()
        dn = flat.copy()
        up[i] += eps
        dn[i] -= eps
        f_up = float(np.asarray(fn(up.reshape(at.shape))))
        f_dn = float(np.asarray(fn(dn.reshape(at.shape))))
        fd = (f_up - f_dn) / (2.0 * eps)
        err = abs(g.ravel()[i] - fd) / max(1.0, abs(fd))
        worst = max(worst, err)
    return worst
