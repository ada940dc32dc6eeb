"""Minimal ONNX model deserialization (protobuf wire format, no deps).

Reads the subset of the ONNX schema needed to execute masked-LM graphs:
ModelProto / GraphProto / NodeProto / TensorProto / AttributeProto with
dense initializers. Field numbers follow the official onnx.proto, which is
frozen for backward compatibility. Anything outside the supported subset
raises ModelLoadError naming the offending construct.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ModelLoadError

# TensorProto.DataType values
DT_FLOAT = 1
DT_UINT8 = 2
DT_INT8 = 3
DT_INT32 = 6
DT_INT64 = 7
DT_BOOL = 9
DT_FLOAT16 = 10
DT_DOUBLE = 11

_NUMPY_DTYPES = {
    DT_FLOAT: np.float32,
    DT_UINT8: np.uint8,
    DT_INT8: np.int8,
    DT_INT32: np.int32,
    DT_INT64: np.int64,
    DT_BOOL: np.bool_,
    DT_FLOAT16: np.float16,
    DT_DOUBLE: np.float64,
}


def dtype_for(elem_type: int) -> np.dtype:
    try:
        return np.dtype(_NUMPY_DTYPES[elem_type])
    except KeyError:
        raise ModelLoadError("graph", f"unsupported tensor element type {elem_type}") from None


def _read_varint(buf: memoryview, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise ModelLoadError("graph", "truncated varint")
        byte = buf[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7
        if shift > 70:
            raise ModelLoadError("graph", "varint too long")


def _signed(value: int) -> int:
    return value - (1 << 64) if value >= (1 << 63) else value


def _fields(buf: memoryview):
    """Yield (field_number, wire_type, value) triples of one message."""
    pos = 0
    n = len(buf)
    while pos < n:
        key, pos = _read_varint(buf, pos)
        fnum, wire = key >> 3, key & 7
        if wire == 0:
            val, pos = _read_varint(buf, pos)
        elif wire == 1:
            val = bytes(buf[pos : pos + 8])
            pos += 8
        elif wire == 2:
            ln, pos = _read_varint(buf, pos)
            val = buf[pos : pos + ln]
            pos += ln
        elif wire == 5:
            val = bytes(buf[pos : pos + 4])
            pos += 4
        else:
            raise ModelLoadError("graph", f"unsupported protobuf wire type {wire}")
        if pos > n:
            raise ModelLoadError("graph", "truncated protobuf field")
        yield fnum, wire, val


def _varints(buf: memoryview) -> list[int]:
    out = []
    pos = 0
    while pos < len(buf):
        v, pos = _read_varint(buf, pos)
        out.append(v)
    return out


@dataclass
class OnnxNode:
    op_type: str
    name: str
    inputs: list[str]
    outputs: list[str]
    attrs: dict[str, object]


@dataclass
class OnnxGraph:
    name: str
    nodes: list[OnnxNode]
    initializers: dict[str, np.ndarray]
    input_names: list[str]
    output_names: list[str]


@dataclass
class OnnxModel:
    graph: OnnxGraph
    ir_version: int = 0
    opset_version: int = 0
    producer: str = ""


def _parse_tensor(buf: memoryview) -> tuple[str, np.ndarray]:
    dims: list[int] = []
    elem_type = DT_FLOAT
    name = ""
    raw: bytes | None = None
    float_data: list[float] = []
    int_data: list[int] = []
    for fnum, wire, val in _fields(buf):
        if fnum == 1:  # dims
            if wire == 2:
                dims.extend(_signed(v) for v in _varints(val))
            else:
                dims.append(_signed(val))
        elif fnum == 2:
            elem_type = val
        elif fnum == 4:  # float_data, packed fixed32
            float_data.extend(np.frombuffer(bytes(val), dtype="<f4").tolist() if wire == 2 else np.frombuffer(val, dtype="<f4").tolist())
        elif fnum == 5:  # int32_data
            if wire == 2:
                int_data.extend(_signed(v) for v in _varints(val))
            else:
                int_data.append(_signed(val))
        elif fnum == 7:  # int64_data
            if wire == 2:
                int_data.extend(_signed(v) for v in _varints(val))
            else:
                int_data.append(_signed(val))
        elif fnum == 8:
            name = bytes(val).decode("utf-8")
        elif fnum == 9:
            raw = bytes(val)
        elif fnum == 14 and val not in (0, b"\x00"):  # data_location
            raise ModelLoadError("graph", f"external tensor data not supported ({name!r})")
    dtype = dtype_for(elem_type)
    if raw is not None:
        arr = np.frombuffer(raw, dtype=dtype.newbyteorder("<")).astype(dtype, copy=False)
    elif float_data:
        arr = np.asarray(float_data, dtype=dtype)
    elif int_data:
        arr = np.asarray(int_data, dtype=dtype)
    else:
        arr = np.zeros(0, dtype=dtype)
    try:
        arr = arr.reshape(dims) if dims else arr.reshape(())
    except ValueError as exc:
        raise ModelLoadError("graph", f"tensor {name!r}: {exc}") from None
    return name, arr


# AttributeProto.AttributeType
_ATTR_FLOAT, _ATTR_INT, _ATTR_STRING, _ATTR_TENSOR = 1, 2, 3, 4
_ATTR_FLOATS, _ATTR_INTS, _ATTR_STRINGS = 6, 7, 8


def _parse_attribute(buf: memoryview) -> tuple[str, object]:
    name = ""
    atype = None
    f_val = None
    i_val = None
    s_val = None
    t_val = None
    floats: list[float] = []
    ints: list[int] = []
    strings: list[bytes] = []
    for fnum, wire, val in _fields(buf):
        if fnum == 1:
            name = bytes(val).decode("utf-8")
        elif fnum == 2:
            f_val = float(np.frombuffer(val, dtype="<f4")[0])
        elif fnum == 3:
            i_val = _signed(val)
        elif fnum == 4:
            s_val = bytes(val)
        elif fnum == 5:
            t_val = _parse_tensor(val)[1]
        elif fnum == 7:
            floats.extend(np.frombuffer(bytes(val), dtype="<f4").tolist() if wire == 2 else [float(np.frombuffer(val, dtype="<f4")[0])])
        elif fnum == 8:
            if wire == 2:
                ints.extend(_signed(v) for v in _varints(val))
            else:
                ints.append(_signed(val))
        elif fnum == 9:
            strings.append(bytes(val))
        elif fnum == 20:
            atype = val
    if atype == _ATTR_FLOAT or (atype is None and f_val is not None):
        return name, f_val
    if atype == _ATTR_INT or (atype is None and i_val is not None):
        return name, i_val
    if atype == _ATTR_STRING or (atype is None and s_val is not None):
        return name, s_val.decode("utf-8") if s_val is not None else ""
    if atype == _ATTR_TENSOR or (atype is None and t_val is not None):
        return name, t_val
    if atype == _ATTR_FLOATS or (atype is None and floats):
        return name, floats
    if atype == _ATTR_INTS or (atype is None and ints):
        return name, ints
    if atype == _ATTR_STRINGS or (atype is None and strings):
        return name, [s.decode("utf-8") for s in strings]
    return name, None


def _parse_node(buf: memoryview) -> OnnxNode:
    inputs: list[str] = []
    outputs: list[str] = []
    name = ""
    op_type = ""
    attrs: dict[str, object] = {}
    for fnum, wire, val in _fields(buf):
        if fnum == 1:
            inputs.append(bytes(val).decode("utf-8"))
        elif fnum == 2:
            outputs.append(bytes(val).decode("utf-8"))
        elif fnum == 3:
            name = bytes(val).decode("utf-8")
        elif fnum == 4:
            op_type = bytes(val).decode("utf-8")
        elif fnum == 5:
            aname, aval = _parse_attribute(val)
            attrs[aname] = aval
    return OnnxNode(op_type=op_type, name=name, inputs=inputs, outputs=outputs, attrs=attrs)


def _value_info_name(buf: memoryview) -> str:
    for fnum, wire, val in _fields(buf):
        if fnum == 1:
            return bytes(val).decode("utf-8")
    return ""


def _parse_graph(buf: memoryview) -> OnnxGraph:
    nodes: list[OnnxNode] = []
    initializers: dict[str, np.ndarray] = {}
    inputs: list[str] = []
    outputs: list[str] = []
    name = ""
    for fnum, wire, val in _fields(buf):
        if fnum == 1:
            nodes.append(_parse_node(val))
        elif fnum == 2:
            name = bytes(val).decode("utf-8")
        elif fnum == 5:
            tname, arr = _parse_tensor(val)
            initializers[tname] = arr
        elif fnum == 11:
            inputs.append(_value_info_name(val))
        elif fnum == 12:
            outputs.append(_value_info_name(val))
        elif fnum == 15:
            raise ModelLoadError("graph", "sparse initializers not supported")
    # initializers may be listed among graph inputs; real feeds are the rest
    feeds = [n for n in inputs if n not in initializers]
    return OnnxGraph(name=name, nodes=nodes, initializers=initializers, input_names=feeds, output_names=outputs)


def parse_model(data: bytes) -> OnnxModel:
    """Parse serialized ModelProto bytes."""
    buf = memoryview(data)
    graph: OnnxGraph | None = None
    ir_version = 0
    opset = 0
    producer = ""
    for fnum, wire, val in _fields(buf):
        if fnum == 1:
            ir_version = _signed(val)
        elif fnum == 2:
            producer = bytes(val).decode("utf-8")
        elif fnum == 7:
            graph = _parse_graph(val)
        elif fnum == 8:
            for sf, sw, sv in _fields(val):
                if sf == 2:
                    opset = max(opset, _signed(sv))
    if graph is None:
        raise ModelLoadError("graph", "model has no graph")
    return OnnxModel(graph=graph, ir_version=ir_version, opset_version=opset, producer=producer)


def load_model(path: str) -> OnnxModel:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as exc:
        raise ModelLoadError("graph", str(exc)) from None
    return parse_model(data)
