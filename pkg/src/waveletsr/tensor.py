"""Dense float64 tensors with reverse-mode gradients.

Images and feature maps are stored as rank-4 arrays laid out
(batch, channel, height, width); intermediate attention math is free to
reshape to other ranks.  Every differentiable operation records a pullback
(a linear map from an output cotangent to input cotangents), so a scalar
training loss can be backpropagated through any composition of ops built
here.  This is deliberately not a general autodiff framework: only the
operations the toolkit needs exist, each with a hand-written pullback.

Convolution follows cross-correlation semantics (no kernel flip) with
same-size output for stride 1; the wavelet module flips kernels itself
where true convolution is required.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError


def _asarray(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    return arr


class Tensor:
    """A float64 array plus an optional gradient tape node.

    Operations on tensors where no operand has ``requires_grad`` set skip
    the tape entirely; they behave like plain numpy at double precision.
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_vjp")

    def __init__(self, data, requires_grad: bool = False, _parents=(), _vjp=None):
        self.data = _asarray(data)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = _parents
        self._vjp = _vjp

    # ---- basic introspection -------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        flag = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    # ---- tape -----------------------------------------------------------

    def _tracked(self) -> bool:
        return self.requires_grad or self._parents

    def backward(self, grad=None) -> None:
        """Accumulate gradients into every reachable ``requires_grad`` leaf.

        ``grad`` seeds the output cotangent; it defaults to 1.0 for scalar
        outputs and is mandatory otherwise.
        """
        if grad is None:
            if self.data.size != 1:
                raise ShapeError("backward() on a non-scalar tensor needs an explicit cotangent")
            grad = np.ones_like(self.data)
        grad = _asarray(grad)
        if grad.shape != self.data.shape:
            raise ShapeError(f"cotangent shape {grad.shape} != value shape {self.data.shape}")

        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))

        cotangents: dict[int, np.ndarray] = {id(self): grad}
        for node in reversed(order):
            g = cotangents.pop(id(node), None)
            if g is None:
                continue
            if node.requires_grad:
                node.grad = g if node.grad is None else node.grad + g
            if node._vjp is not None:
                for parent, pg in zip(node._parents, node._vjp(g)):
                    if pg is None:
                        continue
                    key = id(parent)
                    if key in cotangents:
                        cotangents[key] = cotangents[key] + pg
                    else:
                        cotangents[key] = pg

    # ---- operator sugar ---------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            return mul(self, power(other, -1.0))
        return mul(self, 1.0 / float(other))

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def transpose(self, *axes):
        return transpose(self, axes if len(axes) > 1 else axes[0])

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, vjp) -> Tensor:
    if any(p._tracked() for p in parents):
        return Tensor(data, _parents=tuple(parents), _vjp=vjp)
    return Tensor(data)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


# ---- elementwise arithmetic ------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data + b.data

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make(out, (a, b), vjp)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data * b.data

    def vjp(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _make(out, (a, b), vjp)


def power(a, exponent: float) -> Tensor:
    a = as_tensor(a)
    out = a.data ** exponent

    def vjp(g):
        return (g * exponent * a.data ** (exponent - 1.0),)

    return _make(out, (a,), vjp)


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)

    def vjp(g):
        return (g * out,)

    return _make(out, (a,), vjp)


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)

    def vjp(g):
        return (g * (1.0 - out * out),)

    return _make(out, (a,), vjp)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    z = np.clip(a.data, -60.0, 60.0)
    out = 1.0 / (1.0 + np.exp(-z))

    def vjp(g):
        return (g * out * (1.0 - out),)

    return _make(out, (a,), vjp)


_GELU_C = np.sqrt(2.0 / np.pi)


def gelu(a) -> Tensor:
    """Gaussian error linear unit, tanh form (smooth, kink-free)."""
    a = as_tensor(a)
    x = a.data
    inner = _GELU_C * (x + 0.044715 * x**3)
    t = np.tanh(inner)
    out = 0.5 * x * (1.0 + t)

    def vjp(g):
        d_inner = _GELU_C * (1.0 + 3 * 0.044715 * x**2)
        d = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner
        return (g * d,)

    return _make(out, (a,), vjp)


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    out = a.data * mask

    def vjp(g):
        return (g * mask,)

    return _make(out, (a,), vjp)


def sqrt(a) -> Tensor:
    return power(a, 0.5)


# ---- shape manipulation ------------------------------------------------------


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    out = a.data.reshape(shape)

    def vjp(g):
        return (g.reshape(a.shape),)

    return _make(out, (a,), vjp)


def transpose(a, axes) -> Tensor:
    a = as_tensor(a)
    axes = tuple(axes)
    out = a.data.transpose(axes)
    inv = tuple(np.argsort(axes))

    def vjp(g):
        return (g.transpose(inv),)

    return _make(out, (a,), vjp)


def roll(a, shift, axis) -> Tensor:
    """Circular shift; the pullback rolls the cotangent back."""
    a = as_tensor(a)
    out = np.roll(a.data, shift, axis=axis)
    neg = tuple(-s for s in shift) if isinstance(shift, tuple) else -shift

    def vjp(g):
        return (np.roll(g, neg, axis=axis),)

    return _make(out, (a,), vjp)


def take(a, indices: np.ndarray) -> Tensor:
    """Gather along the leading axis; pullback scatter-adds into the source.

    ``indices`` may have any shape; the result has shape
    ``indices.shape + a.shape[1:]``.
    """
    a = as_tensor(a)
    indices = np.asarray(indices)
    out = a.data[indices]

    def vjp(g):
        da = np.zeros_like(a.data)
        np.add.at(da, indices, g)
        return (da,)

    return _make(out, (a,), vjp)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return _make(out, tuple(tensors), vjp)


# ---- reductions ------------------------------------------------------------


def tsum(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _make(out, (a,), vjp)


def tmean(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    if axis is None:
        count = a.size
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        count = int(np.prod([a.shape[ax] for ax in axes]))
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / count)


# ---- linear algebra ----------------------------------------------------------


def matmul(a, b) -> Tensor:
    """Batched matrix product over the last two axes."""
    a, b = as_tensor(a), as_tensor(b)
    out = a.data @ b.data

    def vjp(g):
        da = g @ np.swapaxes(b.data, -1, -2)
        db = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(da, a.shape), _unbroadcast(db, b.shape)

    return _make(out, (a, b), vjp)


def softmax(a, axis: int = -1) -> Tensor:
    """Rows along ``axis`` become probability vectors (max-shift stable)."""
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        inner = (g * out).sum(axis=axis, keepdims=True)
        return (out * (g - inner),)

    return _make(out, (a,), vjp)


def layer_norm(x, gamma, beta, axis: int = 1, eps: float = 1e-6) -> Tensor:
    """Normalize along ``axis`` (channels for (b,c,h,w) maps), then affine.

    ``gamma``/``beta`` are 1-D of the normalized axis length; they broadcast
    against the remaining axes.
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    c = x.shape[axis]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ShapeError(f"layer_norm affine params must have shape ({c},)")
    bshape = [1] * x.ndim
    bshape[axis] = c
    mu = tmean(x, axis=axis, keepdims=True)
    centered = x - mu
    var = tmean(mul(centered, centered), axis=axis, keepdims=True)
    inv = power(add(var, eps), -0.5)
    normed = mul(centered, inv)
    return add(mul(normed, reshape(gamma, bshape)), reshape(beta, bshape))


# ---- image ops ----------------------------------------------------------------


def _conv_geometry(h, w, kh, kw, stride, boundary):
    pt, pl = (kh - 1) // 2, (kw - 1) // 2
    oh = (h - 1) // stride + 1
    ow = (w - 1) // stride + 1
    ii = stride * np.arange(oh)[:, None] + np.arange(kh)[None, :] - pt  # (oh, kh)
    jj = stride * np.arange(ow)[:, None] + np.arange(kw)[None, :] - pl  # (ow, kw)
    if boundary == "periodic":
        ii, jj = ii % h, jj % w
        valid = None
    elif boundary == "zero":
        vi = (ii >= 0) & (ii < h)
        vj = (jj >= 0) & (jj < w)
        valid = vi[:, None, :, None] & vj[None, :, None, :]  # (oh, ow, kh, kw)
        ii, jj = ii.clip(0, h - 1), jj.clip(0, w - 1)
    else:
        raise ValueError(f"unknown boundary {boundary!r}; use 'periodic' or 'zero'")
    big_i = np.broadcast_to(ii[:, None, :, None], (oh, ow, kh, kw))
    big_j = np.broadcast_to(jj[None, :, None, :], (oh, ow, kh, kw))
    return big_i, big_j, valid, oh, ow


def conv2d(x, kernel, stride: int = 1, boundary: str = "zero") -> Tensor:
    """2-D cross-correlation with same-size padding.

    ``x`` is (b, in_c, h, w), ``kernel`` is (out_c, in_c, kh, kw).  Stride 1
    preserves the spatial size; boundary handling is either zero padding or
    periodic wrap (the latter makes the op exactly shift-equivariant).
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    if x.ndim != 4 or kernel.ndim != 4:
        raise ShapeError(f"conv2d expects rank-4 input and kernel, got {x.shape} and {kernel.shape}")
    b, cin, h, w = x.shape
    cout, kin, kh, kw = kernel.shape
    if kin != cin:
        raise ShapeError(f"kernel expects {kin} input channels, tensor has {cin}")
    if stride < 1:
        raise ShapeError("stride must be >= 1")

    big_i, big_j, valid, oh, ow = _conv_geometry(h, w, kh, kw, stride, boundary)
    patches = x.data[:, :, big_i, big_j]  # (b, cin, oh, ow, kh, kw)
    if valid is not None:
        patches = patches * valid
    out = np.einsum("bcijuv,ocuv->boij", patches, kernel.data, optimize=True)

    lin = (big_i * w + big_j).ravel()

    def vjp(g):
        dpatches = np.einsum("boij,ocuv->bcijuv", g, kernel.data, optimize=True)
        if valid is not None:
            dpatches = dpatches * valid
        dx = np.zeros((b, cin, h * w))
        np.add.at(dx, (slice(None), slice(None), lin), dpatches.reshape(b, cin, -1))
        dk = np.einsum("bcijuv,boij->ocuv", patches, g, optimize=True)
        return dx.reshape(b, cin, h, w), dk

    return _make(out, (x, kernel), vjp)


def pixel_shuffle(x, r: int) -> Tensor:
    """Rearrange r*r channel groups into an r-times larger spatial grid."""
    x = as_tensor(x)
    if x.ndim != 4:
        raise ShapeError(f"pixel_shuffle expects rank-4 input, got {x.shape}")
    b, c, h, w = x.shape
    if c % (r * r) != 0:
        raise ShapeError(f"channel count {c} not divisible by r^2 = {r * r}")
    oc = c // (r * r)
    out = (
        x.data.reshape(b, oc, r, r, h, w)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(b, oc, h * r, w * r)
    )

    def vjp(g):
        dx = (
            g.reshape(b, oc, h, r, w, r)
            .transpose(0, 1, 3, 5, 2, 4)
            .reshape(b, c, h, w)
        )
        return (dx,)

    return _make(out, (x,), vjp)


def pixel_unshuffle(x, r: int) -> Tensor:
    """Inverse of :func:`pixel_shuffle`."""
    x = as_tensor(x)
    if x.ndim != 4:
        raise ShapeError(f"pixel_unshuffle expects rank-4 input, got {x.shape}")
    b, c, h, w = x.shape
    if h % r != 0 or w % r != 0:
        raise ShapeError(f"spatial dims {(h, w)} not divisible by r = {r}")
    oh, ow = h // r, w // r
    out = (
        x.data.reshape(b, c, oh, r, ow, r)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(b, c * r * r, oh, ow)
    )

    def vjp(g):
        dx = (
            g.reshape(b, c, r, r, oh, ow)
            .transpose(0, 1, 4, 2, 5, 3)
            .reshape(b, c, h, w)
        )
        return (dx,)

    return _make(out, (x,), vjp)


# ---- verification helpers -----------------------------------------------------


def grad_check(fn, x: np.ndarray, eps: float = 1e-5) -> float:
    """Compare an analytic gradient against central finite differences.

    ``fn`` maps an ndarray to ``(value, gradient)``.  Returns the maximum
    over coordinates of ``|analytic - fd| / max(1, |fd|)``.  The caller is
    responsible for keeping ``x`` away from kinks of ``fn`` by more than
    ``10 * eps`` so the difference quotient is meaningful.
    """
    x = np.asarray(x, dtype=np.float64)
    _, analytic = fn(x)
    analytic = np.asarray(analytic, dtype=np.float64)
    if analytic.shape != x.shape:
        raise ShapeError(f"gradient shape {analytic.shape} != input shape {x.shape}")
    worst = 0.0
    flat = x.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp, _ = fn(x)
        flat[i] = orig - eps
        fm, _ = fn(x)
        flat[i] = orig
        fd = (fp - fm) / (2.0 * eps)
        err = abs(analytic.ravel()[i] - fd) / max(1.0, abs(fd))
        worst = max(worst, err)
    return worst
