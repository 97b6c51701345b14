"""
Reverse-mode differentiation on float64 numpy arrays.

Every op is a Function subclass with static forward/backward; apply() records
the inputs on the result when any of them requires a gradient. backward()
walks the recorded graph in reverse topological order.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from kiro_leno.operator_learning.errors import ValidationError


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_ctx", "name")
    # numpy defers mixed arithmetic to the reflected Tensor operators
    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data: np.ndarray = np.asarray(data.data if isinstance(data, Tensor) else data, dtype=float)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._ctx: Context | None = None
        self.name = name

    def __repr__(self) -> str:
        op = f" op={self._ctx.op.__name__}" if self._ctx else ""
        return f"Tensor(shape={self.shape}{op}, requires_grad={self.requires_grad})"

    @staticmethod
    def ensure(value) -> Tensor:
        return value if isinstance(value, Tensor) else Tensor(value)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        return self.data

    def __add__(self, other) -> Tensor:
        return Add.apply(self, Tensor.ensure(other))

    def __radd__(self, other) -> Tensor:
        return Add.apply(Tensor.ensure(other), self)

    def __sub__(self, other) -> Tensor:
        return Sub.apply(self, Tensor.ensure(other))

    def __rsub__(self, other) -> Tensor:
        return Sub.apply(Tensor.ensure(other), self)

    def __mul__(self, other) -> Tensor:
        return Mul.apply(self, Tensor.ensure(other))

    def __rmul__(self, other) -> Tensor:
        return Mul.apply(Tensor.ensure(other), self)

    def __truediv__(self, other) -> Tensor:
        return Div.apply(self, Tensor.ensure(other))

    def __rtruediv__(self, other) -> Tensor:
        return Div.apply(Tensor.ensure(other), self)

    def __neg__(self) -> Tensor:
        return Mul.apply(self, Tensor(-1.0))

    def __matmul__(self, other) -> Tensor:
        return MatMul.apply(self, Tensor.ensure(other))

    def __rmatmul__(self, other) -> Tensor:
        return MatMul.apply(Tensor.ensure(other), self)

    def __getitem__(self, index) -> Tensor:
        return Index.apply(self, index=index)

    def reshape(self, *shape: int) -> Tensor:
        return Reshape.apply(self, shape=shape)

    def relu(self) -> Tensor:
        return Relu.apply(self)

    def exp(self) -> Tensor:
        return Exp.apply(self)

    def sum(self, axis: int | None = None) -> Tensor:
        return Sum.apply(self, axis=axis)

    def mean(self, axis: int | None = None) -> Tensor:
        count = self.size if axis is None else self.shape[axis]
        return Sum.apply(self, axis=axis) * (1.0 / count)

    def row_norm(self) -> Tensor:
        """Euclidean norm over the last axis."""
        return RowNorm.apply(self)

    def maximum(self, floor: float) -> Tensor:
        return Maximum.apply(self, floor=floor)

    def backward(self) -> None:
        if self.size != 1:
            raise ValidationError(f"backward needs a scalar loss, got shape {self.shape}")
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            if node._ctx is not None:
                stack.extend((parent, False) for parent in node._ctx.inputs if id(parent) not in visited)

        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            ctx = node._ctx
            if ctx is None or node.grad is None:
                continue
            grads = ctx.op.backward(ctx, node.grad)
            for parent, grad in zip(ctx.inputs, grads, strict=True):
                if grad is None or not parent.requires_grad:
                    continue
                grad = _unbroadcast(np.asarray(grad, dtype=float), parent.shape)
                parent.grad = grad if parent.grad is None else parent.grad + grad


class Context:
    __slots__ = ("op", "inputs", "kwargs", "saved")

    def __init__(self, op: type[Function], inputs: Sequence[Tensor], kwargs: dict):
        self.op = op
        self.inputs = inputs
        self.kwargs = kwargs
        self.saved: tuple = ()


class Function:
    @classmethod
    def apply(cls, *inputs: Tensor, **kwargs) -> Tensor:
        ctx = Context(cls, inputs, kwargs)
        out = Tensor(cls.forward(ctx, *(t.data for t in inputs)))
        if any(t.requires_grad for t in inputs):
            out.requires_grad = True
            out._ctx = ctx
        return out

    @staticmethod
    def forward(ctx: Context, *args: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple:
        raise NotImplementedError


class Add(Function):
    @staticmethod
    def forward(ctx, x, y):
        return x + y

    @staticmethod
    def backward(ctx, grad):
        return grad, grad


class Sub(Function):
    @staticmethod
    def forward(ctx, x, y):
        return x - y

    @staticmethod
    def backward(ctx, grad):
        return grad, -grad


class Mul(Function):
    @staticmethod
    def forward(ctx, x, y):
        ctx.saved = (x, y)
        return x * y

    @staticmethod
    def backward(ctx, grad):
        x, y = ctx.saved
        return grad * y, grad * x


class Div(Function):
    @staticmethod
    def forward(ctx, x, y):
        ctx.saved = (x, y)
        return x / y

    @staticmethod
    def backward(ctx, grad):
        x, y = ctx.saved
        return grad / y, -grad * x / (y * y)


class MatMul(Function):
    @staticmethod
    def forward(ctx, x, y):
        ctx.saved = (x, y)
        return x @ y

    @staticmethod
    def backward(ctx, grad):
        x, y = ctx.saved
        return grad @ y.T, x.T @ grad


class Relu(Function):
    @staticmethod
    def forward(ctx, x):
        ctx.saved = (x > 0,)
        return np.where(ctx.saved[0], x, 0.0)

    @staticmethod
    def backward(ctx, grad):
        # subgradient 0 at x == 0
        return (grad * ctx.saved[0],)


class Exp(Function):
    @staticmethod
    def forward(ctx, x):
        out = np.exp(x)
        ctx.saved = (out,)
        return out

    @staticmethod
    def backward(ctx, grad):
        return (grad * ctx.saved[0],)


class Sum(Function):
    @staticmethod
    def forward(ctx, x):
        ctx.saved = (x.shape,)
        return np.sum(x, axis=ctx.kwargs["axis"])

    @staticmethod
    def backward(ctx, grad):
        (shape,) = ctx.saved
        axis = ctx.kwargs["axis"]
        if axis is not None:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad, shape),)


class RowNorm(Function):
    @staticmethod
    def forward(ctx, x):
        norm = np.sqrt(np.sum(x * x, axis=-1))
        ctx.saved = (x, norm)
        return norm

    @staticmethod
    def backward(ctx, grad):
        x, norm = ctx.saved
        safe = np.where(norm > 0, norm, 1.0)
        return (np.where(norm[..., None] > 0, grad[..., None] * x / safe[..., None], 0.0),)


class Maximum(Function):
    @staticmethod
    def forward(ctx, x):
        ctx.saved = (x >= ctx.kwargs["floor"],)
        return np.maximum(x, ctx.kwargs["floor"])

    @staticmethod
    def backward(ctx, grad):
        return (grad * ctx.saved[0],)


class Index(Function):
    @staticmethod
    def forward(ctx, x):
        ctx.saved = (x.shape,)
        return x[ctx.kwargs["index"]]

    @staticmethod
    def backward(ctx, grad):
        out = np.zeros(ctx.saved[0])
        np.add.at(out, ctx.kwargs["index"], grad)
        return (out,)


class Reshape(Function):
    @staticmethod
    def forward(ctx, x):
        ctx.saved = (x.shape,)
        return x.reshape(ctx.kwargs["shape"])

    @staticmethod
    def backward(ctx, grad):
        return (grad.reshape(ctx.saved[0]),)


class Stack(Function):
    @staticmethod
    def forward(ctx, *xs):
        return np.stack(xs, axis=ctx.kwargs["axis"])

    @staticmethod
    def backward(ctx, grad):
        axis = ctx.kwargs["axis"]
        return tuple(np.take(grad, i, axis=axis) for i in range(grad.shape[axis]))


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    return Stack.apply(*[Tensor.ensure(t) for t in tensors], axis=axis)
