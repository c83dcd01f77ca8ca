"""Declarative layer graphs and the forward/backward executor.

A NetworkSpec is an ordered DAG of LayerSpec nodes referencing either input
slots or earlier layers by name. Network binds a spec to parameter tensors
and runs reverse-mode differentiation over the recorded forward pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import layers as L
from .tensor import Tensor

LAYER_KINDS = (
    "conv2d",
    "batchnorm",
    "leaky_relu",
    "maxpool2",
    "upsample2",
    "concat",
    "conv1x1_head",
    "sigmoid",
    "softmax",
    "add",
)

BATCHNORM_MOMENTUM = 0.99


class ShapeError(ValueError):
    """Shape or graph inconsistency, naming the offending layer."""


class ExecutionError(RuntimeError):
    """Misuse of the executor, e.g. backward before forward."""


@dataclass(frozen=True)
class LayerSpec:
    name: str
    kind: str
    inputs: tuple[str, ...]
    out_channels: int | None = None
    kernel_size: int | None = None
    slope: float = 0.1
    eps: float = 1e-5

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind, "inputs": list(self.inputs)}
        if self.out_channels is not None:
            d["out_channels"] = self.out_channels
        if self.kernel_size is not None:
            d["kernel_size"] = self.kernel_size
        if self.kind == "leaky_relu":
            d["slope"] = self.slope
        if self.kind == "batchnorm":
            d["eps"] = self.eps
        return d

    @staticmethod
    def from_dict(d: dict) -> "LayerSpec":
        return LayerSpec(
            name=d["name"],
            kind=d["kind"],
            inputs=tuple(d["inputs"]),
            out_channels=d.get("out_channels"),
            kernel_size=d.get("kernel_size"),
            slope=d.get("slope", 0.1),
            eps=d.get("eps", 1e-5),
        )


@dataclass
class NetworkSpec:
    """Layer graph with named input slots, outputs and a class count."""

    kind: str
    inputs: dict[str, tuple[int, int, int]]  # name -> (C, H, W)
    layers: tuple[LayerSpec, ...]
    outputs: tuple[str, ...]
    num_classes: int
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "inputs": {k: list(v) for k, v in self.inputs.items()},
            "layers": [l.to_dict() for l in self.layers],
            "outputs": list(self.outputs),
            "num_classes": self.num_classes,
            "meta": self.meta,
        }

    @staticmethod
    def from_dict(d: dict) -> "NetworkSpec":
        return NetworkSpec(
            kind=d["kind"],
            inputs={k: tuple(v) for k, v in d["inputs"].items()},
            layers=tuple(LayerSpec.from_dict(l) for l in d["layers"]),
            outputs=tuple(d["outputs"]),
            num_classes=d["num_classes"],
            meta=d.get("meta", {}),
        )


def infer_shapes(spec: NetworkSpec) -> dict[str, tuple[int, int, int]]:
    """Propagate (C, H, W) through the graph, validating every layer."""
    shapes: dict[str, tuple[int, int, int]] = dict(spec.inputs)
    for layer in spec.layers:
        if layer.kind not in LAYER_KINDS:
            raise ShapeError(f"layer {layer.name!r}: unknown kind {layer.kind!r}")
        if layer.name in shapes:
            raise ShapeError(f"layer {layer.name!r}: duplicate node name")
        try:
            in_shapes = [shapes[n] for n in layer.inputs]
        except KeyError as e:
            raise ShapeError(f"layer {layer.name!r}: unknown input {e}") from None
        c, h, w = in_shapes[0]
        if layer.kind in ("conv2d", "conv1x1_head"):
            k = 1 if layer.kind == "conv1x1_head" else (layer.kernel_size or 3)
            if k % 2 == 0:
                raise ShapeError(f"layer {layer.name!r}: even kernel size {k}")
            if layer.out_channels is None:
                raise ShapeError(f"layer {layer.name!r}: out_channels required")
            shapes[layer.name] = (layer.out_channels, h, w)
        elif layer.kind == "maxpool2":
            if h % 2 or w % 2:
                raise ShapeError(
                    f"layer {layer.name!r}: maxpool2 needs even spatial dims, got {h}x{w}"
                )
            shapes[layer.name] = (c, h // 2, w // 2)
        elif layer.kind == "upsample2":
            shapes[layer.name] = (c, h * 2, w * 2)
        elif layer.kind in ("concat", "add"):
            if len(in_shapes) < 2:
                raise ShapeError(f"layer {layer.name!r}: needs >= 2 inputs")
            if any(s[1:] != (h, w) for s in in_shapes):
                raise ShapeError(f"layer {layer.name!r}: spatial sizes differ")
            if layer.kind == "concat":
                shapes[layer.name] = (sum(s[0] for s in in_shapes), h, w)
            else:
                if any(s[0] != c for s in in_shapes):
                    raise ShapeError(f"layer {layer.name!r}: channel counts differ")
                shapes[layer.name] = (c, h, w)
        else:  # elementwise: batchnorm, leaky_relu, sigmoid, softmax
            shapes[layer.name] = (c, h, w)
    for out in spec.outputs:
        if out not in shapes:
            raise ShapeError(f"declared output {out!r} is not a graph node")
    return shapes


def param_shapes(spec: NetworkSpec) -> dict[str, tuple]:
    """Trainable parameter name -> shape, in deterministic layer order."""
    shapes = infer_shapes(spec)
    node_in = {l.name: shapes[l.inputs[0]] for l in spec.layers}
    out: dict[str, tuple] = {}
    for layer in spec.layers:
        cin = node_in[layer.name][0]
        if layer.kind in ("conv2d", "conv1x1_head"):
            k = 1 if layer.kind == "conv1x1_head" else (layer.kernel_size or 3)
            out[f"{layer.name}.weight"] = (layer.out_channels, cin, k, k)
            out[f"{layer.name}.bias"] = (layer.out_channels,)
        elif layer.kind == "batchnorm":
            out[f"{layer.name}.gamma"] = (cin,)
            out[f"{layer.name}.beta"] = (cin,)
    return out


def buffer_shapes(spec: NetworkSpec) -> dict[str, tuple]:
    """Non-trainable state (batchnorm running statistics)."""
    shapes = infer_shapes(spec)
    out: dict[str, tuple] = {}
    for layer in spec.layers:
        if layer.kind == "batchnorm":
            c = shapes[layer.inputs[0]][0]
            out[f"{layer.name}.running_mean"] = (c,)
            out[f"{layer.name}.running_var"] = (c,)
    return out


def count_parameters(spec: NetworkSpec) -> int:
    return sum(int(np.prod(s)) for s in param_shapes(spec).values())


class Network:
    """Executable network: spec + parameters + running buffers.

    forward records what backward needs; backward accumulates gradients into
    each parameter tensor's .grad (sum over multiple consumers of a node).
    """

    def __init__(self, spec: NetworkSpec, seed: int = 0,
                 dtype: np.dtype = np.float32):
        self.spec = spec
        self.dtype = np.dtype(dtype)
        self.shapes = infer_shapes(spec)
        self.params: dict[str, Tensor] = {}
        self.buffers: dict[str, np.ndarray] = {}
        rng = np.random.default_rng(seed)
        for name, shape in param_shapes(spec).items():
            if name.endswith(".weight"):
                fan_in = int(np.prod(shape[1:]))
                limit = float(np.sqrt(1.0 / fan_in))
                data = rng.uniform(-limit, limit, size=shape)
            elif name.endswith(".gamma"):
                data = np.ones(shape)
            else:  # bias, beta
                data = np.zeros(shape)
            self.params[name] = Tensor(data.astype(self.dtype))
        for name, shape in buffer_shapes(spec).items():
            init = np.ones if name.endswith(".running_var") else np.zeros
            self.buffers[name] = init(shape, dtype=self.dtype)
        self._cache: list | None = None
        self._out_shapes: dict[str, tuple] | None = None

    # ------------------------------------------------------------ forward

    def forward(self, inputs: dict[str, np.ndarray],
                training: bool = False) -> dict[str, np.ndarray]:
        values: dict[str, np.ndarray] = {}
        for name, (c, h, w) in self.spec.inputs.items():
            if name not in inputs:
                raise ShapeError(f"input {name!r}: missing")
            x = np.asarray(inputs[name], dtype=self.dtype)
            if x.ndim == 3:
                x = x[None]
            if x.shape[1:] != (c, h, w):
                raise ShapeError(
                    f"input {name!r}: expected (C,H,W)=({c},{h},{w}), "
                    f"got {x.shape[1:]}"
                )
            values[name] = np.ascontiguousarray(x)
        cache = []
        for layer in self.spec.layers:
            xs = [values[n] for n in layer.inputs]
            y, saved = self._run_layer(layer, xs, training)
            values[layer.name] = y
            cache.append((layer, saved))
        self._cache = cache
        self._out_shapes = {n: values[n].shape for n in self.spec.outputs}
        return {n: values[n] for n in self.spec.outputs}

    def _run_layer(self, layer: LayerSpec, xs: list, training: bool):
        kind = layer.kind
        if kind in ("conv2d", "conv1x1_head"):
            w = self.params[f"{layer.name}.weight"].data
            b = self.params[f"{layer.name}.bias"].data
            return L.conv2d_forward(xs[0], w, b)
        if kind == "batchnorm":
            return L.batchnorm_forward(
                xs[0],
                self.params[f"{layer.name}.gamma"].data,
                self.params[f"{layer.name}.beta"].data,
                self.buffers[f"{layer.name}.running_mean"],
                self.buffers[f"{layer.name}.running_var"],
                layer.eps,
                BATCHNORM_MOMENTUM,
                training,
            )
        if kind == "leaky_relu":
            return L.leaky_relu_forward(xs[0], layer.slope)
        if kind == "maxpool2":
            return L.maxpool2_forward(xs[0])
        if kind == "upsample2":
            return L.upsample2_forward(xs[0])
        if kind == "concat":
            return L.concat_forward(xs)
        if kind == "add":
            return L.add_forward(xs)
        if kind == "sigmoid":
            return L.sigmoid_forward(xs[0])
        if kind == "softmax":
            return L.softmax_forward(xs[0])
        raise ShapeError(f"layer {layer.name!r}: unknown kind {kind!r}")

    # ----------------------------------------------------------- backward

    def backward(self, output_grads: dict[str, np.ndarray]) -> None:
        if self._cache is None:
            raise ExecutionError("backward called before forward")
        grads: dict[str, np.ndarray] = {}
        for name, g in output_grads.items():
            if name not in self._out_shapes:
                raise ShapeError(f"gradient for unknown output {name!r}")
            g = np.asarray(g, dtype=self.dtype)
            if g.shape != self._out_shapes[name]:
                raise ShapeError(
                    f"output {name!r}: gradient shape {g.shape} != "
                    f"forward shape {self._out_shapes[name]}"
                )
            grads[name] = g.copy()
        for layer, saved in reversed(self._cache):
            g = grads.pop(layer.name, None)
            if g is None:
                continue  # nothing downstream consumed this node
            in_grads, p_grads = self._run_backward(layer, g, saved)
            for in_name, ig in zip(layer.inputs, in_grads):
                if in_name in grads:
                    grads[in_name] = grads[in_name] + ig
                else:
                    grads[in_name] = ig
            for p_name, pg in p_grads.items():
                self.params[f"{layer.name}.{p_name}"].add_grad(pg)
        self.input_grads = {n: grads.get(n) for n in self.spec.inputs}

    def _run_backward(self, layer: LayerSpec, g, saved):
        kind = layer.kind
        if kind in ("conv2d", "conv1x1_head"):
            return L.conv2d_backward(
                g, saved,
                self.params[f"{layer.name}.weight"].data,
                self.params[f"{layer.name}.bias"].data,
            )
        if kind == "batchnorm":
            return L.batchnorm_backward(g, saved,
                                        self.params[f"{layer.name}.gamma"].data)
        if kind == "leaky_relu":
            return L.leaky_relu_backward(g, saved)
        if kind == "maxpool2":
            return L.maxpool2_backward(g, saved)
        if kind == "upsample2":
            return L.upsample2_backward(g, saved)
        if kind == "concat":
            return L.concat_backward(g, saved)
        if kind == "add":
            return L.add_backward(g, saved)
        if kind == "sigmoid":
            return L.sigmoid_backward(g, saved)
        if kind == "softmax":
            return L.softmax_backward(g, saved)
        raise ShapeError(f"layer {layer.name!r}: unknown kind {kind!r}")

    # -------------------------------------------------------------- state

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def state(self) -> dict[str, np.ndarray]:
        """All weights and buffers, insertion-ordered, as float arrays."""
        out = {k: v.data.copy() for k, v in self.params.items()}
        out.update({k: v.copy() for k, v in self.buffers.items()})
        return out

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for name, p in self.params.items():
            if name not in state:
                raise KeyError(f"missing parameter {name!r}")
            a = np.asarray(state[name], dtype=self.dtype)
            if a.shape != p.data.shape:
                raise ShapeError(
                    f"parameter {name!r}: shape {a.shape} != {p.data.shape}"
                )
            p.data = a.copy()
        for name in self.buffers:
            if name not in state:
                raise KeyError(f"missing buffer {name!r}")
            a = np.asarray(state[name], dtype=self.dtype)
            if a.shape != self.buffers[name].shape:
                raise ShapeError(
                    f"buffer {name!r}: shape {a.shape} != "
                    f"{self.buffers[name].shape}"
                )
            self.buffers[name] = a.copy()
