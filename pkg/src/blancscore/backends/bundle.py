"""Model bundle loading and the serialized-graph inference backend.

Bundle directory layout:
    model.onnx      serialized compute graph; inputs ``input_ids`` and
                    ``attention_mask`` (int64, batch x seq), first output
                    is per-position vocabulary logits (float, batch x seq
                    x vocab)
    vocab.txt       one token per line, line number = id
    tokenizer.json  {"lowercase": bool, "max_len": int,
                     "special_tokens": {"mask": id, "unknown": id,
                      "padding": id, "filler": id, "sequence_start": id,
                      "sequence_end": id}}
    selftest.json   optional; prediction cases (input ids + masked
                    positions + expected top-1 ids, >=98% agreement
                    required) and tokenization cases (text + expected ids,
                    exact match required), validated on every load
"""

from __future__ import annotations

import json
import os

import numpy as np

from ..errors import ModelLoadError
from ..masking import ClozeInput
from ..textprep import tokenize
from ..vocabulary import Vocabulary
from .base import MaskedLMBackend, PredictionOutcome, outcomes_from_logits
from .onnx_exec import run_graph
from .onnx_io import OnnxModel, load_model

_REQUIRED_SPECIALS = ("mask", "unknown", "padding", "filler", "sequence_start", "sequence_end")
DEFAULT_MIN_AGREEMENT = 0.98


def _load_vocab_file(path: str, lowercase: bool, max_len: int, specials: dict[str, int]) -> Vocabulary:
    try:
        with open(path, encoding="utf-8") as f:
            surfaces = [line.rstrip("\n") for line in f]
    except OSError as exc:
        raise ModelLoadError("vocabulary", str(exc)) from None
    while surfaces and surfaces[-1] == "":
        surfaces.pop()
    if not surfaces:
        raise ModelLoadError("vocabulary", "empty vocab file")
    return Vocabulary(
        surfaces=surfaces,
        mask_id=specials["mask"],
        unknown_id=specials["unknown"],
        filler_id=specials["filler"],
        padding_id=specials["padding"],
        sequence_start_id=specials["sequence_start"],
        sequence_end_id=specials["sequence_end"],
        max_len=max_len,
        lowercase=lowercase,
    )


def _load_tokenizer_config(path: str) -> tuple[bool, int, dict[str, int]]:
    try:
        with open(path, encoding="utf-8") as f:
            cfg = json.load(f)
    except OSError as exc:
        raise ModelLoadError("tokenizer-config", str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ModelLoadError("tokenizer-config", f"invalid JSON: {exc}") from None
    try:
        lowercase = bool(cfg["lowercase"])
        max_len = int(cfg["max_len"])
        specials = {k: int(cfg["special_tokens"][k]) for k in _REQUIRED_SPECIALS}
    except KeyError as exc:
        raise ModelLoadError("tokenizer-config", f"missing key {exc}") from None
    return lowercase, max_len, specials


class OnnxBackend(MaskedLMBackend):
    """Masked-LM inference over a deserialized ONNX graph.

    Consecutive equal-length inputs are executed as one batch (the cloze
    pipeline produces runs of same-length inputs, so no padding is ever
    introduced and results cannot depend on batch composition);
    mixed-length inputs fall back to singleton batches.
    """

    def __init__(self, model: OnnxModel, vocabulary: Vocabulary, batch_size: int = 8):
        graph_inputs = set(model.graph.input_names)
        if graph_inputs != {"input_ids", "attention_mask"}:
            raise ModelLoadError(
                "graph", f"expected inputs input_ids/attention_mask, found {sorted(graph_inputs)}"
            )
        if not model.graph.output_names:
            raise ModelLoadError("graph", "graph has no outputs")
        self._model = model
        self._vocab = vocabulary
        self.batch_size = max(1, int(batch_size))
        self._logits_name = model.graph.output_names[0]

    @property
    def vocabulary(self) -> Vocabulary:
        return self._vocab

    def raw_logits(self, batch_ids: np.ndarray) -> np.ndarray:
        """Run the graph on an int64 (batch, seq) array of token ids."""
        ids = np.asarray(batch_ids, dtype=np.int64)
        feeds = {"input_ids": ids, "attention_mask": np.ones_like(ids)}
        out = run_graph(self._model.graph, feeds, [self._logits_name])[self._logits_name]
        if out.ndim != 3:
            raise ModelLoadError("graph", f"logits output has rank {out.ndim}, expected 3")
        return out

    def _predict_impl(self, inputs: list[ClozeInput]) -> list[list[PredictionOutcome]]:
        framed = [self.frame(inp) for inp in inputs]
        results: list[list[PredictionOutcome]] = [[] for _ in inputs]
        start = 0
        while start < len(framed):
            length = len(framed[start][0])
            end = start + 1
            while (
                end < len(framed)
                and end - start < self.batch_size
                and len(framed[end][0]) == length
            ):
                end += 1
            batch = np.asarray([framed[i][0] for i in range(start, end)], dtype=np.int64)
            logits = self.raw_logits(batch)
            for row, i in enumerate(range(start, end)):
                positions = framed[i][1]
                rows = logits[row, positions, :]
                results[i] = outcomes_from_logits(rows, inputs[i].gold_ids)
            start = end
        return results


def _run_selftest(backend: OnnxBackend, path: str) -> None:
    try:
        with open(path, encoding="utf-8") as f:
            fixture = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelLoadError("self-test", str(exc)) from None

    min_agreement = float(fixture.get("min_top1_agreement", DEFAULT_MIN_AGREEMENT))
    total = 0
    agree = 0
    for case in fixture.get("prediction_cases", []):
        ids = np.asarray([case["input_ids"]], dtype=np.int64)
        logits = backend.raw_logits(ids)[0]
        for pos, expected in zip(case["masked_positions"], case["expected_top_ids"]):
            total += 1
            if int(np.argmax(logits[pos])) == int(expected):
                agree += 1
    if total and agree / total < min_agreement:
        raise ModelLoadError(
            "self-test", f"top-1 agreement {agree}/{total} below required {min_agreement:.2f}"
        )

    for case in fixture.get("tokenization_cases", []):
        got = [t.vocab_id for t in tokenize(case["text"], backend.vocabulary)]
        if got != list(case["expected_ids"]):
            raise ModelLoadError("self-test", f"tokenization mismatch on {case['text']!r}")


def load_bundle(path: str, batch_size: int = 8) -> OnnxBackend:
    """Load a model bundle directory and validate its self-test fixture."""
    if not os.path.isdir(path):
        raise ModelLoadError("bundle", f"not a directory: {path}")
    vocab_path = os.path.join(path, "vocab.txt")
    cfg_path = os.path.join(path, "tokenizer.json")
    model_path = os.path.join(path, "model.onnx")
    for fpath, component in ((vocab_path, "vocabulary"), (cfg_path, "tokenizer-config"), (model_path, "graph")):
        if not os.path.isfile(fpath):
            raise ModelLoadError(component, f"missing file {os.path.basename(fpath)}")
    lowercase, max_len, specials = _load_tokenizer_config(cfg_path)
    vocab = _load_vocab_file(vocab_path, lowercase, max_len, specials)
    model = load_model(model_path)
    backend = OnnxBackend(model, vocab, batch_size=batch_size)
    selftest = os.path.join(path, "selftest.json")
    if os.path.isfile(selftest):
        _run_selftest(backend, selftest)
    return backend
