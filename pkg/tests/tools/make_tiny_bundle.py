"""Build the committed tiny model bundle under tests/data/tiny_bundle.

A one-layer transformer masked LM with seeded random weights, emitted as
an ONNX graph through the test-local writer. The selftest prediction
values are computed by the direct numpy forward pass below, NOT by the
package's graph executor, so loading the bundle cross-checks the protobuf
writer, the reader, and the executor against straight-line arithmetic.

Run from the repo root to regenerate:  python3 tests/tools/make_tiny_bundle.py
"""

from __future__ import annotations

import json
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(__file__))
from onnx_writer import DT_FLOAT, DT_INT64, GraphBuilder, value_info  # noqa: E402

HIDDEN = 16
HEADS = 2
FFN = 32
MAX_LEN = 64
SEED = 20240817

WORDS = [
    "the", "a", "and", "of", "to", "in", "on", "was", "were", "said",
    "city", "council", "storm", "river", "mayor", "budget", "school",
    "bridge", "water", "people", "new", "old", "day", "night", "home",
    "road", "team", "game", "year", "time",
]


def build_vocab() -> list[str]:
    import string

    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", ".", ","]
    vocab += WORDS
    vocab += [c for c in string.ascii_lowercase if c not in vocab]
    vocab += [f"##{c}" for c in string.ascii_lowercase]
    vocab += ["##s", "##ed", "##ing"]
    seen = set()
    out = []
    for tok in vocab:
        if tok not in seen:
            seen.add(tok)
            out.append(tok)
    return out


def make_weights(vocab_size: int) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(SEED)
    s = 0.4

    def mat(*shape):
        return (rng.standard_normal(shape) * s).astype(np.float32)

    return {
        "word_emb": mat(vocab_size, HIDDEN),
        "pos_emb": mat(MAX_LEN, HIDDEN),
        "tt_row": mat(HIDDEN),
        "ln0_g": np.ones(HIDDEN, np.float32),
        "ln0_b": np.zeros(HIDDEN, np.float32),
        "wq": mat(HIDDEN, HIDDEN), "bq": mat(HIDDEN),
        "wk": mat(HIDDEN, HIDDEN), "bk": mat(HIDDEN),
        "wv": mat(HIDDEN, HIDDEN), "bv": mat(HIDDEN),
        "wo": mat(HIDDEN, HIDDEN), "bo": mat(HIDDEN),
        "ln1_g": np.ones(HIDDEN, np.float32), "ln1_b": np.zeros(HIDDEN, np.float32),
        "w1": mat(HIDDEN, FFN), "b1": mat(FFN),
        "w2": mat(FFN, HIDDEN), "b2": mat(HIDDEN),
        "ln2_g": np.ones(HIDDEN, np.float32), "ln2_b": np.zeros(HIDDEN, np.float32),
        "wt": mat(HIDDEN, HIDDEN), "bt": mat(HIDDEN),
        "ln3_g": np.ones(HIDDEN, np.float32), "ln3_b": np.zeros(HIDDEN, np.float32),
        "dec_bias": mat(vocab_size),
    }


# ---------------------------------------------------------------------
# direct numpy forward: the selftest oracle
# ---------------------------------------------------------------------


def _ln(x, g, b, eps=1e-5):
    mean = x.mean(-1, keepdims=True)
    var = ((x - mean) ** 2).mean(-1, keepdims=True)
    return (x - mean) / np.sqrt(var + eps) * g + b


def _gelu(x):
    from scipy.special import erf

    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


def forward(weights: dict[str, np.ndarray], ids: np.ndarray) -> np.ndarray:
    w = weights
    b, s = ids.shape
    dh = HIDDEN // HEADS
    h = w["word_emb"][ids] + w["pos_emb"][:s] + w["tt_row"]
    h = _ln(h, w["ln0_g"], w["ln0_b"])
    q = (h @ w["wq"] + w["bq"]).reshape(b, s, HEADS, dh).transpose(0, 2, 1, 3)
    k = (h @ w["wk"] + w["bk"]).reshape(b, s, HEADS, dh).transpose(0, 2, 1, 3)
    v = (h @ w["wv"] + w["bv"]).reshape(b, s, HEADS, dh).transpose(0, 2, 1, 3)
    scores = q @ k.transpose(0, 1, 3, 2) / np.sqrt(dh)
    scores = scores - scores.max(-1, keepdims=True)
    probs = np.exp(scores)
    probs = probs / probs.sum(-1, keepdims=True)
    ctx = (probs @ v).transpose(0, 2, 1, 3).reshape(b, s, HIDDEN)
    h = _ln(ctx @ w["wo"] + w["bo"] + h, w["ln1_g"], w["ln1_b"])
    f = _gelu(h @ w["w1"] + w["b1"])
    h = _ln(f @ w["w2"] + w["b2"] + h, w["ln2_g"], w["ln2_b"])
    t = _gelu(h @ w["wt"] + w["bt"])
    t = _ln(t, w["ln3_g"], w["ln3_b"])
    return t @ w["word_emb"].T + w["dec_bias"]


# ---------------------------------------------------------------------
# graph emission
# ---------------------------------------------------------------------


def emit_graph(weights: dict[str, np.ndarray], vocab_size: int) -> bytes:
    g = GraphBuilder()
    w = {name: g.init(name, arr) for name, arr in weights.items()}
    dh = HIDDEN // HEADS

    def dense(x, wname, bname, out=None):
        return g.op("Add", [g.op("MatMul", [x, w[wname]]), w[bname]], out)

    ids = "input_ids"
    emb = g.op("Gather", [w["word_emb"], ids], axis=0)
    shape = g.op("Shape", [ids])
    seq = g.op("Gather", [shape, g.const(np.array([1], np.int64), "idx_one")], axis=0)
    pos = g.op("Slice", [w["pos_emb"], g.const(np.array([0], np.int64), "zero64"), seq,
                         g.const(np.array([0], np.int64), "axis0")])
    h = g.op("Add", [g.op("Add", [emb, pos]), w["tt_row"]])
    h = g.op("LayerNormalization", [h, w["ln0_g"], w["ln0_b"]], axis=2, epsilon=1e-5)

    maskf = g.op("Cast", ["attention_mask"], to=DT_FLOAT)
    inv = g.op("Sub", [g.const(np.float32(1.0), "onef"), maskf])
    neg = g.op("Mul", [inv, g.const(np.float32(-10000.0), "neg10k")])
    bias = g.op("Reshape", [neg, g.const(np.array([0, 1, 1, -1], np.int64), "bias_shape")])

    def heads(x, perm):
        r = g.op("Reshape", [x, g.const(np.array([0, 0, HEADS, dh], np.int64))])
        return g.op("Transpose", [r], perm=perm)

    q = heads(dense(h, "wq", "bq"), [0, 2, 1, 3])
    k = heads(dense(h, "wk", "bk"), [0, 2, 3, 1])
    v = heads(dense(h, "wv", "bv"), [0, 2, 1, 3])
    scores = g.op("Div", [g.op("MatMul", [q, k]), g.const(np.float32(np.sqrt(dh)), "sqrt_dh")])
    probs = g.op("Softmax", [g.op("Add", [scores, bias])], axis=3)
    ctx = g.op("Transpose", [g.op("MatMul", [probs, v])], perm=[0, 2, 1, 3])
    ctx = g.op("Reshape", [ctx, g.const(np.array([0, 0, HIDDEN], np.int64), "merge_shape")])
    h = g.op("LayerNormalization", [g.op("Add", [dense(ctx, "wo", "bo"), h]), w["ln1_g"], w["ln1_b"]],
             axis=2, epsilon=1e-5)

    def gelu(x):
        e = g.op("Erf", [g.op("Div", [x, g.const(np.float32(np.sqrt(2.0)))])])
        return g.op("Mul", [g.op("Mul", [x, g.const(np.float32(0.5))]),
                            g.op("Add", [e, g.const(np.float32(1.0))])])

    f = gelu(dense(h, "w1", "b1"))
    h = g.op("LayerNormalization", [g.op("Add", [dense(f, "w2", "b2"), h]), w["ln2_g"], w["ln2_b"]],
             axis=2, epsilon=1e-5)
    t = gelu(dense(h, "wt", "bt"))
    t = g.op("LayerNormalization", [t, w["ln3_g"], w["ln3_b"]], axis=2, epsilon=1e-5)
    dec = g.op("Transpose", [w["word_emb"]], perm=[1, 0])
    g.op("Add", [g.op("MatMul", [t, dec]), w["dec_bias"]], output="logits")

    inputs = [
        value_info("input_ids", DT_INT64, ["batch", "seq"]),
        value_info("attention_mask", DT_INT64, ["batch", "seq"]),
    ]
    outputs = [value_info("logits", DT_FLOAT, ["batch", "seq", vocab_size])]
    return g.model(inputs, outputs)


# ---------------------------------------------------------------------
# selftest fixture
# ---------------------------------------------------------------------


def make_selftest(weights: dict[str, np.ndarray], vocab: list[str]) -> dict:
    table = {t: i for i, t in enumerate(vocab)}
    cls, sep, mask = table["[CLS]"], table["[SEP]"], table["[MASK]"]
    rng = np.random.default_rng(SEED + 1)
    word_ids = [table[t] for t in WORDS + [".", ","]]

    cases = []
    for _ in range(5):
        body = rng.choice(word_ids, size=22).tolist()
        ids = [cls] + body + [sep]
        positions = sorted(rng.choice(range(1, len(ids) - 1), size=11, replace=False).tolist())
        masked = list(ids)
        for p in positions:
            masked[p] = mask
        logits = forward(weights, np.asarray([masked], np.int64))[0]
        expected = [int(np.argmax(logits[p])) for p in positions]
        cases.append(
            {"input_ids": masked, "masked_positions": positions, "expected_top_ids": expected}
        )

    # expected ids written from direct table lookup, not the tokenizer
    tok_cases = [
        {"text": "The city council said.", "expected_ids": [table[t] for t in ["the", "city", "council", "said", "."]]},
        {"text": "A storm was on the river.", "expected_ids": [table[t] for t in ["a", "storm", "was", "on", "the", "river", "."]]},
        {"text": "storms", "expected_ids": [table["storm"], table["##s"]]},
        {"text": "The mayor, the budget.", "expected_ids": [table[t] for t in ["the", "mayor", ",", "the", "budget", "."]]},
    ]
    return {
        "min_top1_agreement": 0.98,
        "prediction_cases": cases,
        "tokenization_cases": tok_cases,
    }


def main(out_dir: str) -> None:
    vocab = build_vocab()
    table = {t: i for i, t in enumerate(vocab)}
    weights = make_weights(len(vocab))

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "vocab.txt"), "w", encoding="utf-8") as f:
        f.write("\n".join(vocab) + "\n")
    config = {
        "lowercase": True,
        "max_len": MAX_LEN,
        "special_tokens": {
            "padding": table["[PAD]"],
            "unknown": table["[UNK]"],
            "sequence_start": table["[CLS]"],
            "sequence_end": table["[SEP]"],
            "mask": table["[MASK]"],
            "filler": table["."],
        },
    }
    with open(os.path.join(out_dir, "tokenizer.json"), "w", encoding="utf-8") as f:
        json.dump(config, f, indent=2)
    with open(os.path.join(out_dir, "model.onnx"), "wb") as f:
        f.write(emit_graph(weights, len(vocab)))
    with open(os.path.join(out_dir, "selftest.json"), "w", encoding="utf-8") as f:
        json.dump(make_selftest(weights, vocab), f, indent=1)
    print(f"bundle written to {out_dir} (vocab {len(vocab)})")


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(__file__), "..", "data", "tiny_bundle"
    )
    main(os.path.normpath(target))
