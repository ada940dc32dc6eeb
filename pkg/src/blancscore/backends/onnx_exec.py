"""Numpy executor for the masked-LM op subset of ONNX graphs.

Covers the operators emitted by the companion export utility for
BERT-style encoders (plus a few common equivalents), evaluated in graph
order. Unknown operators fail loudly with the op name so unsupported
graphs are rejected instead of silently mis-executed.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

from ..errors import ModelLoadError
from .onnx_io import OnnxGraph, dtype_for


def _attr(node, name, default=None):
    val = node.attrs.get(name)
    return default if val is None else val


def _axes_arg(node, tensors, default=None):
    """Axes may arrive as an attribute (older opsets) or a second input."""
    if "axes" in node.attrs:
        return [int(a) for a in node.attrs["axes"]]
    if len(node.inputs) > 1 and node.inputs[1]:
        return [int(a) for a in tensors[node.inputs[1]].ravel()]
    return default


def _softmax(x: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(x, axis=axis, keepdims=True)
    e = np.exp(x - m)
    return e / np.sum(e, axis=axis, keepdims=True)


def _reshape(data: np.ndarray, shape: np.ndarray) -> np.ndarray:
    target = [int(s) for s in shape.ravel()]
    resolved = []
    for i, s in enumerate(target):
        if s == 0:
            resolved.append(data.shape[i])
        else:
            resolved.append(s)
    return data.reshape(resolved)


def _slice(node, tensors):
    data = tensors[node.inputs[0]]
    if len(node.inputs) > 1:
        starts = [int(v) for v in tensors[node.inputs[1]].ravel()]
        ends = [int(v) for v in tensors[node.inputs[2]].ravel()]
        axes = (
            [int(v) for v in tensors[node.inputs[3]].ravel()]
            if len(node.inputs) > 3 and node.inputs[3]
            else list(range(len(starts)))
        )
        steps = (
            [int(v) for v in tensors[node.inputs[4]].ravel()]
            if len(node.inputs) > 4 and node.inputs[4]
            else [1] * len(starts)
        )
    else:  # opset <10 attribute form
        starts = [int(v) for v in node.attrs["starts"]]
        ends = [int(v) for v in node.attrs["ends"]]
        axes = [int(v) for v in node.attrs.get("axes", range(len(starts)))]
        steps = [1] * len(starts)
    slicer = [slice(None)] * data.ndim
    for st, en, ax, sp in zip(starts, ends, axes, steps):
        slicer[ax] = slice(st, en, sp)
    return data[tuple(slicer)]


def _layer_norm(node, tensors):
    x = tensors[node.inputs[0]].astype(np.float32)
    scale = tensors[node.inputs[1]]
    bias = tensors[node.inputs[2]] if len(node.inputs) > 2 and node.inputs[2] else None
    axis = int(_attr(node, "axis", -1))
    eps = float(_attr(node, "epsilon", 1e-5))
    axes = tuple(range(axis % x.ndim, x.ndim))
    mean = x.mean(axis=axes, keepdims=True)
    var = ((x - mean) ** 2).mean(axis=axes, keepdims=True)
    y = (x - mean) / np.sqrt(var + eps) * scale
    if bias is not None:
        y = y + bias
    return y.astype(np.float32)


def _gemm(node, tensors):
    a = tensors[node.inputs[0]]
    b = tensors[node.inputs[1]]
    alpha = float(_attr(node, "alpha", 1.0))
    beta = float(_attr(node, "beta", 1.0))
    if int(_attr(node, "transA", 0)):
        a = a.T
    if int(_attr(node, "transB", 0)):
        b = b.T
    y = alpha * (a @ b)
    if len(node.inputs) > 2 and node.inputs[2]:
        y = y + beta * tensors[node.inputs[2]]
    return y.astype(np.float32)


def run_graph(
    graph: OnnxGraph,
    feeds: dict[str, np.ndarray],
    outputs: list[str] | None = None,
) -> dict[str, np.ndarray]:
    """Execute the graph on the given feeds; returns requested outputs."""
    wanted = outputs if outputs is not None else graph.output_names
    missing = [n for n in graph.input_names if n not in feeds]
    if missing:
        raise ModelLoadError("graph", f"missing graph inputs: {missing}")
    tensors: dict[str, np.ndarray] = dict(graph.initializers)
    tensors.update({k: np.asarray(v) for k, v in feeds.items()})

    for node in graph.nodes:
        op = node.op_type
        try:
            if op == "Gather":
                data = tensors[node.inputs[0]]
                idx = tensors[node.inputs[1]].astype(np.int64)
                out = np.take(data, idx, axis=int(_attr(node, "axis", 0)))
            elif op == "Add":
                out = tensors[node.inputs[0]] + tensors[node.inputs[1]]
            elif op == "Sub":
                out = tensors[node.inputs[0]] - tensors[node.inputs[1]]
            elif op == "Mul":
                out = tensors[node.inputs[0]] * tensors[node.inputs[1]]
            elif op == "Div":
                out = tensors[node.inputs[0]] / tensors[node.inputs[1]]
            elif op == "MatMul":
                out = np.matmul(tensors[node.inputs[0]], tensors[node.inputs[1]]).astype(np.float32)
            elif op == "Gemm":
                out = _gemm(node, tensors)
            elif op == "Transpose":
                perm = _attr(node, "perm")
                out = np.transpose(tensors[node.inputs[0]], axes=[int(p) for p in perm] if perm else None)
            elif op == "Reshape":
                out = _reshape(tensors[node.inputs[0]], tensors[node.inputs[1]])
            elif op == "Softmax":
                x = tensors[node.inputs[0]]
                out = _softmax(x, int(_attr(node, "axis", -1))).astype(x.dtype)
            elif op == "Erf":
                out = erf(tensors[node.inputs[0]].astype(np.float32)).astype(np.float32)
            elif op == "Sqrt":
                out = np.sqrt(tensors[node.inputs[0]])
            elif op == "Pow":
                out = np.power(tensors[node.inputs[0]], tensors[node.inputs[1]])
            elif op == "Tanh":
                out = np.tanh(tensors[node.inputs[0]])
            elif op == "Cast":
                out = tensors[node.inputs[0]].astype(dtype_for(int(_attr(node, "to"))))
            elif op == "Shape":
                out = np.asarray(tensors[node.inputs[0]].shape, dtype=np.int64)
            elif op == "Slice":
                out = _slice(node, tensors)
            elif op == "Concat":
                out = np.concatenate([tensors[i] for i in node.inputs], axis=int(_attr(node, "axis", 0)))
            elif op == "Unsqueeze":
                axes = _axes_arg(node, tensors)
                out = tensors[node.inputs[0]]
                for ax in sorted(axes):
                    out = np.expand_dims(out, ax)
            elif op == "Squeeze":
                axes = _axes_arg(node, tensors)
                out = np.squeeze(tensors[node.inputs[0]], axis=tuple(axes) if axes else None)
            elif op == "ReduceMean":
                axes = _axes_arg(node, tensors)
                keep = bool(_attr(node, "keepdims", 1))
                out = tensors[node.inputs[0]].mean(axis=tuple(axes) if axes else None, keepdims=keep)
            elif op == "LayerNormalization":
                out = _layer_norm(node, tensors)
            elif op == "Equal":
                out = tensors[node.inputs[0]] == tensors[node.inputs[1]]
            elif op == "Where":
                out = np.where(tensors[node.inputs[0]], tensors[node.inputs[1]], tensors[node.inputs[2]])
            elif op == "Expand":
                shape = [int(s) for s in tensors[node.inputs[1]].ravel()]
                out = np.broadcast_to(tensors[node.inputs[0]], np.broadcast_shapes(tensors[node.inputs[0]].shape, tuple(shape)))
            elif op == "Identity":
                out = tensors[node.inputs[0]]
            elif op == "Constant":
                out = node.attrs.get("value")
                if out is None:
                    raise KeyError("value")
            else:
                raise ModelLoadError("graph", f"unsupported op {op!r} (node {node.name!r})")
        except ModelLoadError:
            raise
        except KeyError as exc:
            raise ModelLoadError("graph", f"node {node.name!r} ({op}): missing tensor/attr {exc}") from None
        tensors[node.outputs[0]] = np.asarray(out)
        for extra in node.outputs[1:]:
            if extra:
                raise ModelLoadError("graph", f"multi-output op {op!r} not supported")

    try:
        return {name: tensors[name] for name in wanted}
    except KeyError as exc:
        raise ModelLoadError("graph", f"graph output {exc} was never produced") from None
