"""Dense feed-forward networks with hand-written backprop.

Everything the agent differentiates goes through this module: the actor and
critic networks are plain fully-connected stacks over float64 numpy arrays,
gradients are computed analytically layer by layer, and parameter updates use
adaptive-moment SGD. Keeping the whole chain explicit makes training
bit-for-bit reproducible from a seed and lets tests check every gradient
against central finite differences.
"""

from __future__ import annotations

import numpy as np

_ACTIVATIONS = ("tanh", "relu")

# grads are stored as one (dW, db) pair per layer, shapes matching the layer
Grads = list[tuple[np.ndarray, np.ndarray]]


def _as_batch(x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, :], True
    if x.ndim == 2:
        return x, False
    raise ValueError(f"expected 1-D or 2-D input, got shape {x.shape}")


class DenseNet:
    """Fully-connected network: linear layers, tanh/relu hidden activations,
    identity output.

    Weights are (fan_out, fan_in) matrices initialised uniformly at
    +-1/sqrt(fan_in); all arithmetic is float64.
    """

    def __init__(
        self,
        layer_sizes: list[int] | tuple[int, ...],
        hidden_activation: str = "tanh",
        rng: np.random.Generator | None = None,
    ):
        sizes = [int(s) for s in layer_sizes]
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ValueError(f"layer_sizes must be >=2 positive ints, got {layer_sizes}")
        if hidden_activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {hidden_activation!r}")
        if rng is None:
            rng = np.random.default_rng()
        self.layer_sizes = sizes
        self.hidden_activation = hidden_activation
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            self.biases.append(rng.uniform(-bound, bound, size=(fan_out,)))

    # -- shape helpers ------------------------------------------------------

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def same_architecture(self, other: "DenseNet") -> bool:
        return (
            self.layer_sizes == other.layer_sizes
            and self.hidden_activation == other.hidden_activation
        )

    # -- forward / backward -------------------------------------------------

    def _act(self, z: np.ndarray) -> np.ndarray:
        if self.hidden_activation == "tanh":
            return np.tanh(z)
        return np.maximum(z, 0.0)

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the network; accepts a single vector or a (B, d) batch."""
        xb, squeeze = _as_batch(x)
        if xb.shape[1] != self.n_inputs:
            raise ValueError(f"input dim {xb.shape[1]} != expected {self.n_inputs}")
        if not np.all(np.isfinite(xb)):
            raise ValueError("non-finite network input")
        h = xb
        last = self.n_layers - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w.T + b
            h = z if i == last else self._act(z)
        return h[0] if squeeze else h

    def forward_cached(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Forward over a (B, d) batch, returning the per-layer activations
        needed by :meth:`backward`."""
        xb = np.asarray(x, dtype=np.float64)
        if xb.ndim != 2 or xb.shape[1] != self.n_inputs:
            raise ValueError(f"expected (B, {self.n_inputs}) input, got {xb.shape}")
        cache = [xb]
        h = xb
        last = self.n_layers - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w.T + b
            h = z if i == last else self._act(z)
            cache.append(h)
        return h, cache

    def backward(
        self, cache: list[np.ndarray], upstream: np.ndarray
    ) -> tuple[Grads, np.ndarray]:
        """Backprop an upstream gradient dL/d(output) through the network.

        Returns per-layer (dW, db) plus the gradient with respect to the
        input batch. The hidden-activation derivative is recovered from the
        stored post-activation values (1 - h^2 for tanh, h > 0 for relu).
        """
        if len(cache) != self.n_layers + 1:
            raise ValueError("cache does not match network depth")
        g = np.asarray(upstream, dtype=np.float64)
        if g.shape != (cache[0].shape[0], self.n_outputs):
            raise ValueError(
                f"upstream shape {g.shape} != {(cache[0].shape[0], self.n_outputs)}"
            )
        grads: Grads = [None] * self.n_layers  # type: ignore[list-item]
        dz = g
        for i in range(self.n_layers - 1, -1, -1):
            h_in = cache[i]
            grads[i] = (dz.T @ h_in, dz.sum(axis=0))
            dh = dz @ self.weights[i]
            if i > 0:
                h_prev = cache[i]
                if self.hidden_activation == "tanh":
                    dz = dh * (1.0 - h_prev * h_prev)
                else:
                    dz = dh * (h_prev > 0.0)
        return grads, dh

    # -- parameter plumbing --------------------------------------------------

    def copy(self) -> "DenseNet":
        dup = DenseNet.__new__(DenseNet)
        dup.layer_sizes = list(self.layer_sizes)
        dup.hidden_activation = self.hidden_activation
        dup.weights = [w.copy() for w in self.weights]
        dup.biases = [b.copy() for b in self.biases]
        return dup

    def zero_grads(self) -> Grads:
        return [(np.zeros_like(w), np.zeros_like(b)) for w, b in zip(self.weights, self.biases)]

    def flat_params(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)

    def set_flat_params(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        i = 0
        for w, b in zip(self.weights, self.biases):
            w[...] = flat[i : i + w.size].reshape(w.shape)
            i += w.size
            b[...] = flat[i : i + b.size]
            i += b.size
        if i != flat.size:
            raise ValueError(f"flat vector has {flat.size} entries, expected {i}")

    def param_arrays(self, prefix: str = "") -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"{prefix}w{i}"] = w
            out[f"{prefix}b{i}"] = b
        return out

    def load_param_arrays(self, arrays: dict[str, np.ndarray], prefix: str = "") -> None:
        for i in range(self.n_layers):
            w = arrays[f"{prefix}w{i}"]
            b = arrays[f"{prefix}b{i}"]
            if w.shape != self.weights[i].shape or b.shape != self.biases[i].shape:
                raise ValueError(f"checkpoint shape mismatch at layer {i}")
            self.weights[i][...] = w
            self.biases[i][...] = b


def flatten_grads(grads: Grads) -> np.ndarray:
    parts = []
    for dw, db in grads:
        parts.append(dw.ravel())
        parts.append(db.ravel())
    return np.concatenate(parts)


def add_grads(a: Grads, b: Grads) -> Grads:
    if len(a) != len(b):
        raise ValueError("gradient structures differ")
    return [(dw1 + dw2, db1 + db2) for (dw1, db1), (dw2, db2) in zip(a, b)]


def scale_grads(grads: Grads, c: float) -> Grads:
    return [(dw * c, db * c) for dw, db in grads]


def polyak_update(target: DenseNet, online: DenseNet, tau: float) -> None:
    """Blend target parameters toward the online network:
    target <- (1 - tau) * target + tau * online, elementwise."""
    if not target.same_architecture(online):
        raise ValueError("polyak_update requires identical architectures")
    if not (0.0 < tau <= 1.0):
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    keep = 1.0 - tau
    for tw, ow in zip(target.weights, online.weights):
        tw *= keep
        tw += tau * ow
    for tb, ob in zip(target.biases, online.biases):
        tb *= keep
        tb += tau * ob


class Adam:
    """Adaptive-moment SGD state for one DenseNet (decay 0.9/0.999, eps 1e-8)."""

    def __init__(
        self,
        net: DenseNet,
        lr: float = 3e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m: Grads = net.zero_grads()
        self.v: Grads = net.zero_grads()

    def step(self, net: DenseNet, grads: Grads) -> None:
        """Apply one update in place. Raises on non-finite gradients or if an
        update would produce a non-finite parameter."""
        if len(grads) != net.n_layers:
            raise ValueError("gradient structure does not match network")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        params = list(zip(net.weights, net.biases))
        for i, (dw, db) in enumerate(grads):
            w, b = params[i]
            if dw.shape != w.shape or db.shape != b.shape:
                raise ValueError(f"gradient shape mismatch at layer {i}")
            if not (np.all(np.isfinite(dw)) and np.all(np.isfinite(db))):
                raise FloatingPointError(f"non-finite gradient at layer {i}")
            for p, g, m, v in ((w, dw, self.m[i][0], self.v[i][0]),
                               (b, db, self.m[i][1], self.v[i][1])):
                m *= b1
                m += (1.0 - b1) * g
                v *= b2
                v += (1.0 - b2) * g * g
                p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
                if not np.all(np.isfinite(p)):
                    raise FloatingPointError(f"non-finite parameter after update at layer {i}")

    def state_arrays(self, prefix: str = "") -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {f"{prefix}t": np.array(self.t, dtype=np.int64)}
        for i, ((mw, mb), (vw, vb)) in enumerate(zip(self.m, self.v)):
            out[f"{prefix}mw{i}"] = mw
            out[f"{prefix}mb{i}"] = mb
            out[f"{prefix}vw{i}"] = vw
            out[f"{prefix}vb{i}"] = vb
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray], prefix: str = "") -> None:
        self.t = int(arrays[f"{prefix}t"])
        for i in range(len(self.m)):
            self.m[i][0][...] = arrays[f"{prefix}mw{i}"]
            self.m[i][1][...] = arrays[f"{prefix}mb{i}"]
            self.v[i][0][...] = arrays[f"{prefix}vw{i}"]
            self.v[i][1][...] = arrays[f"{prefix}vb{i}"]
