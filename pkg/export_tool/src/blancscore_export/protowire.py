"""Protobuf wire-format serialization for the ONNX schema subset we emit.

Implements the writer side only, directly against the official onnx.proto
field numbers (stable by protobuf compatibility rules). Kept dependency
free on purpose: the consuming scorer ships its own reader, and the two
independent codecs cross-check each other at bundle load time.
"""

from __future__ import annotations

import struct

import numpy as np

# TensorProto.DataType
FLOAT = 1
INT32 = 6
INT64 = 7

_NP_TO_ONNX = {
    np.dtype(np.float32): FLOAT,
    np.dtype(np.int32): INT32,
    np.dtype(np.int64): INT64,
}

# AttributeProto.AttributeType
_AT_FLOAT, _AT_INT, _AT_STRING, _AT_TENSOR, _AT_FLOATS, _AT_INTS = 1, 2, 3, 4, 6, 7


class Message:
    """Accumulates encoded protobuf fields for one message."""

    def __init__(self) -> None:
        self._chunks: list[bytes] = []

    @staticmethod
    def _varint(value: int) -> bytes:
        if value < 0:
            value &= (1 << 64) - 1
        out = bytearray()
        while True:
            byte = value & 0x7F
            value >>= 7
            out.append(byte | (0x80 if value else 0))
            if not value:
                return bytes(out)

    def varint(self, field: int, value: int) -> "Message":
        self._chunks.append(self._varint(field << 3 | 0) + self._varint(value))
        return self

    def fixed32(self, field: int, value: float) -> "Message":
        self._chunks.append(self._varint(field << 3 | 5) + struct.pack("<f", value))
        return self

    def bytes_field(self, field: int, payload: bytes) -> "Message":
        self._chunks.append(self._varint(field << 3 | 2) + self._varint(len(payload)) + payload)
        return self

    def string(self, field: int, text: str) -> "Message":
        return self.bytes_field(field, text.encode("utf-8"))

    def message(self, field: int, msg: "Message") -> "Message":
        return self.bytes_field(field, msg.encode())

    def encode(self) -> bytes:
        return b"".join(self._chunks)


def tensor(name: str, array: np.ndarray) -> Message:
    arr = np.ascontiguousarray(array)
    if arr.dtype not in _NP_TO_ONNX:
        raise TypeError(f"cannot serialize dtype {arr.dtype}")
    msg = Message()
    for dim in arr.shape:
        msg.varint(1, dim)
    msg.varint(2, _NP_TO_ONNX[arr.dtype])
    msg.string(8, name)
    msg.bytes_field(9, arr.astype(arr.dtype.newbyteorder("<")).tobytes())
    return msg


def _attribute(name: str, value) -> Message:
    msg = Message().string(1, name)
    if isinstance(value, bool) or isinstance(value, (int, np.integer)):
        msg.varint(3, int(value)).varint(20, _AT_INT)
    elif isinstance(value, float):
        msg.fixed32(2, value).varint(20, _AT_FLOAT)
    elif isinstance(value, str):
        msg.string(4, value).varint(20, _AT_STRING)
    elif isinstance(value, np.ndarray):
        msg.message(5, tensor("", value)).varint(20, _AT_TENSOR)
    elif isinstance(value, (list, tuple)):
        if all(isinstance(v, (int, np.integer)) for v in value):
            for v in value:
                msg.varint(8, int(v))
            msg.varint(20, _AT_INTS)
        else:
            for v in value:
                msg.fixed32(7, float(v))
            msg.varint(20, _AT_FLOATS)
    else:
        raise TypeError(f"unsupported attribute {name}={value!r}")
    return msg


def node(op_type: str, inputs: list[str], outputs: list[str], name: str = "", **attrs) -> Message:
    msg = Message()
    for i in inputs:
        msg.string(1, i)
    for o in outputs:
        msg.string(2, o)
    if name:
        msg.string(3, name)
    msg.string(4, op_type)
    for aname, aval in attrs.items():
        msg.message(5, _attribute(aname, aval))
    return msg


def tensor_value_info(name: str, elem_type: int, dims: list[int | str]) -> Message:
    shape = Message()
    for d in dims:
        dim = Message()
        if isinstance(d, str):
            dim.string(2, d)
        else:
            dim.varint(1, d)
        shape.message(1, dim)
    tensor_type = Message().varint(1, elem_type).message(2, shape)
    return Message().string(1, name).message(2, Message().message(1, tensor_type))


def graph(
    nodes: list[Message],
    initializers: list[Message],
    inputs: list[Message],
    outputs: list[Message],
    name: str = "masked_lm",
) -> Message:
    msg = Message()
    for n in nodes:
        msg.message(1, n)
    msg.string(2, name)
    for t in initializers:
        msg.message(5, t)
    for vi in inputs:
        msg.message(11, vi)
    for vo in outputs:
        msg.message(12, vo)
    return msg


def model(graph_msg: Message, opset_version: int = 17, producer: str = "blancscore-export") -> bytes:
    opset = Message().string(1, "").varint(2, opset_version)
    return (
        Message()
        .varint(1, 8)  # ir_version
        .string(2, producer)
        .message(7, graph_msg)
        .message(8, opset)
        .encode()
    )
