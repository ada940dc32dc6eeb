"""Serialize BERT-style masked-LM weights into an ONNX compute graph.

The emitted graph has the bundle's fixed signature: int64 ``input_ids``
and ``attention_mask`` of shape (batch, seq) in, float32 per-position
vocabulary ``logits`` out. Operator vocabulary is deliberately small
(embedding gathers, dense layers, scaled-dot-product attention with
softmax, erf-based gelu, layer normalization) so lightweight runtimes can
execute it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import protowire as pw


class UnsupportedArchitecture(Exception):
    """The source model is not a BERT-style masked LM we can serialize."""


@dataclass
class EncoderShape:
    vocab_size: int
    hidden: int
    layers: int
    heads: int
    layer_norm_eps: float
    tied_decoder: bool


class _Emitter:
    def __init__(self) -> None:
        self.nodes: list[pw.Message] = []
        self.initializers: list[pw.Message] = []
        self._n = 0

    def _name(self, hint: str) -> str:
        self._n += 1
        return f"{hint}_{self._n}"

    def init(self, name: str, array: np.ndarray) -> str:
        self.initializers.append(pw.tensor(name, array))
        return name

    def const_i64(self, values: list[int], hint: str) -> str:
        return self.init(self._name(hint), np.asarray(values, dtype=np.int64))

    def scalar(self, value: float, hint: str) -> str:
        return self.init(self._name(hint), np.float32(value))

    def op(self, op_type: str, inputs: list[str], out: str | None = None, **attrs) -> str:
        out = out or self._name(op_type.lower())
        self.nodes.append(pw.node(op_type, inputs, [out], name=self._name(f"n_{op_type}"), **attrs))
        return out


def _w(weights: dict[str, np.ndarray], key: str) -> np.ndarray:
    try:
        return weights[key]
    except KeyError:
        raise UnsupportedArchitecture(f"missing weight {key!r}") from None


def emit_masked_lm_graph(weights: dict[str, np.ndarray], shape: EncoderShape) -> bytes:
    """Build the serialized model from a classic BERT state dict."""
    if shape.hidden % shape.heads != 0:
        raise UnsupportedArchitecture(f"hidden {shape.hidden} not divisible by heads {shape.heads}")
    dh = shape.hidden // shape.heads
    e = _Emitter()
    eps = float(shape.layer_norm_eps)

    def dense(x: str, prefix: str) -> str:
        # torch Linear stores (out, in); emit the transpose once
        wt = e.init(f"{prefix}.weight_t", _w(weights, f"{prefix}.weight").T.astype(np.float32))
        b = e.init(f"{prefix}.bias", _w(weights, f"{prefix}.bias").astype(np.float32))
        return e.op("Add", [e.op("MatMul", [x, wt]), b])

    def layer_norm(x: str, prefix: str) -> str:
        g = e.init(f"{prefix}.weight", _w(weights, f"{prefix}.weight").astype(np.float32))
        b = e.init(f"{prefix}.bias", _w(weights, f"{prefix}.bias").astype(np.float32))
        return e.op("LayerNormalization", [x, g, b], axis=2, epsilon=eps)

    def gelu(x: str) -> str:
        erf = e.op("Erf", [e.op("Div", [x, e.scalar(float(np.sqrt(2.0)), "sqrt2")])])
        half = e.op("Mul", [x, e.scalar(0.5, "half")])
        return e.op("Mul", [half, e.op("Add", [erf, e.scalar(1.0, "one")])])

    word_emb = e.init("word_embeddings", _w(weights, "bert.embeddings.word_embeddings.weight").astype(np.float32))
    pos_emb = e.init("position_embeddings", _w(weights, "bert.embeddings.position_embeddings.weight").astype(np.float32))
    # segment ids are always zero in cloze scoring; fold row 0 into a bias
    tt_row = e.init("token_type_row0", _w(weights, "bert.embeddings.token_type_embeddings.weight")[0].astype(np.float32))

    emb = e.op("Gather", [word_emb, "input_ids"], axis=0)
    seq = e.op("Gather", [e.op("Shape", ["input_ids"]), e.const_i64([1], "one_idx")], axis=0)
    pos = e.op("Slice", [pos_emb, e.const_i64([0], "zero"), seq, e.const_i64([0], "axis0")])
    hidden = e.op("Add", [e.op("Add", [emb, pos]), tt_row])
    hidden = layer_norm(hidden, "bert.embeddings.LayerNorm")

    # additive attention bias from the padding mask: (1 - m) * -10000
    mask_f = e.op("Cast", ["attention_mask"], to=pw.FLOAT)
    inv = e.op("Sub", [e.scalar(1.0, "one"), mask_f])
    bias = e.op(
        "Reshape",
        [e.op("Mul", [inv, e.scalar(-10000.0, "neg")]), e.const_i64([0, 1, 1, -1], "mask_shape")],
    )

    split_shape = e.const_i64([0, 0, shape.heads, dh], "head_split")
    merge_shape = e.const_i64([0, 0, shape.hidden], "head_merge")
    scale = e.scalar(float(np.sqrt(dh)), "attn_scale")

    for i in range(shape.layers):
        p = f"bert.encoder.layer.{i}"

        def heads_view(x: str, perm: list[int]) -> str:
            return e.op("Transpose", [e.op("Reshape", [x, split_shape])], perm=perm)

        q = heads_view(dense(hidden, f"{p}.attention.self.query"), [0, 2, 1, 3])
        k = heads_view(dense(hidden, f"{p}.attention.self.key"), [0, 2, 3, 1])
        v = heads_view(dense(hidden, f"{p}.attention.self.value"), [0, 2, 1, 3])
        scores = e.op("Add", [e.op("Div", [e.op("MatMul", [q, k]), scale]), bias])
        probs = e.op("Softmax", [scores], axis=3)
        ctx = e.op("Transpose", [e.op("MatMul", [probs, v])], perm=[0, 2, 1, 3])
        ctx = e.op("Reshape", [ctx, merge_shape])
        attn = dense(ctx, f"{p}.attention.output.dense")
        hidden = layer_norm(e.op("Add", [attn, hidden]), f"{p}.attention.output.LayerNorm")

        inter = gelu(dense(hidden, f"{p}.intermediate.dense"))
        out = dense(inter, f"{p}.output.dense")
        hidden = layer_norm(e.op("Add", [out, hidden]), f"{p}.output.LayerNorm")

    transformed = layer_norm(
        gelu(dense(hidden, "cls.predictions.transform.dense")),
        "cls.predictions.transform.LayerNorm",
    )
    if shape.tied_decoder:
        dec = e.op("Transpose", [word_emb], perm=[1, 0])
    else:
        dec = e.init("decoder_weight_t", _w(weights, "cls.predictions.decoder.weight").T.astype(np.float32))
    dec_bias = e.init("decoder_bias", _w(weights, "cls.predictions.decoder.bias").astype(np.float32))
    e.op("Add", [e.op("MatMul", [transformed, dec]), dec_bias], out="logits")

    inputs = [
        pw.tensor_value_info("input_ids", pw.INT64, ["batch", "seq"]),
        pw.tensor_value_info("attention_mask", pw.INT64, ["batch", "seq"]),
    ]
    outputs = [pw.tensor_value_info("logits", pw.FLOAT, ["batch", "seq", shape.vocab_size])]
    return pw.model(pw.graph(e.nodes, e.initializers, inputs, outputs))
