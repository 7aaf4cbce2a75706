"""Small MLPs with hand-rolled reverse-mode gradients and an Adam optimizer.

Everything downstream (representation function, goal-conditioned value
function, action-value heads) is a plain feedforward net over float64
numpy arrays. Inference uses ``apply`` (no bookkeeping); training uses
``forward``/``backward`` or the explicit-cache pair ``forward_cached``/
``backward_from`` when a loss touches the same net several times.
"""

from __future__ import annotations

import numpy as np

ACTIVATIONS = ("tanh", "relu", "linear")

_PARAM_FORMAT = "mlp-params-v1"


class NetError(Exception):
    """Base class for network errors."""


class DimensionMismatch(NetError):
    """Input or gradient shape does not match the network."""


class BackwardStateError(NetError):
    """backward() called without a recorded forward pass."""


class NonFiniteGradients(NetError):
    """Optimizer step rejected because gradients contain NaN/inf."""


class CheckpointFormatError(Exception):
    """Parameter file missing or carrying an unsupported version header."""


def _activate(name: str, x: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(x)
    if name == "relu":
        return np.maximum(x, 0.0)
    return x


def _activate_grad(name: str, pre: np.ndarray, post: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return 1.0 - post * post
    if name == "relu":
        return (pre > 0.0).astype(pre.dtype)
    return np.ones_like(pre)


class Mlp:
    """Fully connected net: layer_dims[0] -> ... -> layer_dims[-1].

    Hidden layers use `activation` (tanh or relu); the output layer is
    linear unless an explicit per-layer list is given. Weights are
    uniform in +-1/sqrt(fan_in) from the supplied generator, biases zero.
    """

    def __init__(self, layer_dims, activation="tanh", rng: np.random.Generator | None = None):
        dims = [int(d) for d in layer_dims]
        if len(dims) < 2 or any(d <= 0 for d in dims):
            raise ValueError(f"layer_dims needs >=2 positive entries, got {layer_dims}")
        n_layers = len(dims) - 1
        if isinstance(activation, str):
            acts = [activation] * (n_layers - 1) + ["linear"]
        else:
            acts = list(activation)
            if len(acts) != n_layers:
                raise ValueError(f"need {n_layers} activations, got {len(acts)}")
        for a in acts:
            if a not in ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")
        self.layer_dims = tuple(dims)
        self.activations = tuple(acts)
        if rng is None:
            rng = np.random.default_rng()
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        self._cache: list[tuple[np.ndarray, np.ndarray, np.ndarray]] | None = None

    # -- parameter access ------------------------------------------------

    @property
    def in_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def out_dim(self) -> int:
        return self.layer_dims[-1]

    @property
    def parameter_count(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def params(self) -> list[np.ndarray]:
        """Live parameter arrays, weights and biases interleaved per layer."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def zero_grads(self) -> list[np.ndarray]:
        return [np.zeros_like(p) for p in self.params()]

    def copy_from(self, other: "Mlp") -> None:
        if other.layer_dims != self.layer_dims:
            raise DimensionMismatch("cannot copy between differently shaped nets")
        for dst, src in zip(self.params(), other.params()):
            dst[...] = src

    def clone(self) -> "Mlp":
        twin = Mlp(self.layer_dims, list(self.activations), rng=np.random.default_rng(0))
        twin.copy_from(self)
        return twin

    # -- forward / backward ----------------------------------------------

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise DimensionMismatch(
                f"expected input of dim {self.in_dim}, got shape {np.shape(x)}"
            )
        return x

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Pure inference pass; no cache is recorded."""
        arr = self._check_input(x)
        h = arr
        for w, b, act in zip(self.weights, self.biases, self.activations):
            h = _activate(act, h @ w + b)
        return h[0] if np.asarray(x).ndim == 1 else h

    def forward_cached(self, x: np.ndarray):
        """Run a batch through the net, returning (output, cache)."""
        h = self._check_input(x)
        cache = []
        for w, b, act in zip(self.weights, self.biases, self.activations):
            pre = h @ w + b
            post = _activate(act, pre)
            cache.append((h, pre, post))
            h = post
        return h, cache

    def forward(self, x: np.ndarray) -> np.ndarray:
        out, cache = self.forward_cached(x)
        self._cache = cache
        return out

    def backward_from(self, cache, grad_output: np.ndarray):
        """Gradients of a scalar loss w.r.t. all parameters.

        `grad_output` is dLoss/dOutput for the batch the cache came from.
        Returns (param_grads, grad_input) with param_grads aligned to
        ``params()``.
        """
        g = np.asarray(grad_output, dtype=np.float64)
        if g.ndim == 1:
            g = g[None, :]
        last_post = cache[-1][2]
        if g.shape != last_post.shape:
            raise DimensionMismatch(
                f"upstream gradient shape {g.shape} != output shape {last_post.shape}"
            )
        w_grads: list[np.ndarray] = [None] * len(self.weights)  # type: ignore[list-item]
        b_grads: list[np.ndarray] = [None] * len(self.biases)  # type: ignore[list-item]
        for layer in range(len(self.weights) - 1, -1, -1):
            inp, pre, post = cache[layer]
            g = g * _activate_grad(self.activations[layer], pre, post)
            w_grads[layer] = inp.T @ g
            b_grads[layer] = g.sum(axis=0)
            if layer > 0:
                g = g @ self.weights[layer].T
        grad_input = g @ self.weights[0].T
        grads = []
        for wg, bg in zip(w_grads, b_grads):
            grads.append(wg)
            grads.append(bg)
        return grads, grad_input

    def backward(self, grad_output: np.ndarray):
        """Backprop through the most recent ``forward`` call."""
        if self._cache is None:
            raise BackwardStateError("backward() without a recorded forward pass")
        cache, self._cache = self._cache, None
        grads, _ = self.backward_from(cache, grad_output)
        return grads

    # -- serialization ----------------------------------------------------

    def to_state(self, prefix: str = "") -> dict[str, np.ndarray]:
        state = {
            f"{prefix}dims": np.asarray(self.layer_dims, dtype=np.int64),
            f"{prefix}acts": np.asarray(self.activations),
        }
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            state[f"{prefix}W{i}"] = w
            state[f"{prefix}b{i}"] = b
        return state

    @classmethod
    def from_state(cls, state, prefix: str = "") -> "Mlp":
        dims = [int(d) for d in np.asarray(state[f"{prefix}dims"])]
        acts = [str(a) for a in np.asarray(state[f"{prefix}acts"])]
        net = cls(dims, acts, rng=np.random.default_rng(0))
        for i in range(len(dims) - 1):
            net.weights[i][...] = np.asarray(state[f"{prefix}W{i}"], dtype=np.float64)
            net.biases[i][...] = np.asarray(state[f"{prefix}b{i}"], dtype=np.float64)
        return net

    def save(self, path) -> None:
        state = self.to_state()
        np.savez(path, __format__=np.asarray([_PARAM_FORMAT]), **state)

    @classmethod
    def load(cls, path) -> "Mlp":
        try:
            with np.load(path, allow_pickle=False) as data:
                fmt = str(np.asarray(data["__format__"])[0]) if "__format__" in data else "?"
                if fmt != _PARAM_FORMAT:
                    raise CheckpointFormatError(
                        f"unsupported parameter file version {fmt!r} (want {_PARAM_FORMAT!r})"
                    )
                return cls.from_state(data)
        except (OSError, ValueError, KeyError) as exc:
            raise CheckpointFormatError(f"cannot read parameter file {path}: {exc}") from exc


class Adam:
    """Adaptive-moment optimizer over a fixed parameter list."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads) -> None:
        if len(params) != len(self.m) or len(grads) != len(self.m):
            raise DimensionMismatch("optimizer state does not match parameter list")
        for i, g in enumerate(grads):
            if g.shape != self.m[i].shape:
                raise DimensionMismatch(
                    f"gradient {i} has shape {g.shape}, expected {self.m[i].shape}"
                )
            if not np.all(np.isfinite(g)):
                bad = int(np.size(g) - np.count_nonzero(np.isfinite(g)))
                raise NonFiniteGradients(
                    f"rejected step {self.t + 1}: gradient {i} has {bad} non-finite entries"
                )
        self.t += 1
        b1t = 1.0 - self.beta1**self.t
        b2t = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)

    def to_state(self, prefix: str = "") -> dict[str, np.ndarray]:
        state = {
            f"{prefix}meta": np.asarray([self.lr, self.beta1, self.beta2, self.eps, self.t])
        }
        for i, (m, v) in enumerate(zip(self.m, self.v)):
            state[f"{prefix}m{i}"] = m
            state[f"{prefix}v{i}"] = v
        return state

    def load_state(self, state, prefix: str = "") -> None:
        meta = np.asarray(state[f"{prefix}meta"])
        self.lr, self.beta1, self.beta2, self.eps = (float(x) for x in meta[:4])
        self.t = int(meta[4])
        for i in range(len(self.m)):
            self.m[i][...] = np.asarray(state[f"{prefix}m{i}"])
            self.v[i][...] = np.asarray(state[f"{prefix}v{i}"])


def add_scaled(acc: list[np.ndarray], grads: list[np.ndarray], scale: float = 1.0) -> None:
    """acc += scale * grads, elementwise over aligned parameter lists."""
    for a, g in zip(acc, grads):
        a += scale * g


def numerical_gradients(loss_fn, params, h: float = 1e-5) -> list[np.ndarray]:
    """Central finite differences of a scalar loss over live parameter arrays.

    Perturbs entries in place and restores them; the reference oracle for
    every analytic gradient in the test suite.
    """
    grads = []
    for p in params:
        g = np.zeros_like(p)
        flat_p = p.ravel()
        flat_g = g.ravel()
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + h
            hi = loss_fn()
            flat_p[i] = orig - h
            lo = loss_fn()
            flat_p[i] = orig
            flat_g[i] = (hi - lo) / (2.0 * h)
        grads.append(g)
    return grads
