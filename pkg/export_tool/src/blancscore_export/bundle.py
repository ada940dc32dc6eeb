"""One-shot conversion of a pretrained masked LM into a scoring bundle.

Produces the directory layout the scorer consumes: model.onnx, vocab.txt,
tokenizer.json, selftest.json, plus a manifest.json recording provenance.
The self-test fixture is generated from the source framework's own
predictions and tokenization, so every downstream load of the bundle
re-checks the exported graph against the source model's behavior.
"""

from __future__ import annotations

import json
import os
import shutil
import subprocess
from dataclasses import asdict, dataclass
from importlib import resources

import numpy as np

from .graph_emit import EncoderShape, UnsupportedArchitecture, emit_masked_lm_graph

MIN_TOP1_AGREEMENT = 0.98
MIN_MASKED_POSITIONS = 50
MASK_FRACTION = 0.15
PREDICTION_SENTENCES = 12
SELFTEST_SEED = 1234


class ModelSourceError(Exception):
    """The source model/tokenizer could not be loaded."""


class ExportVerificationFailed(Exception):
    """The exported bundle fails validation against the source fixture."""


@dataclass
class BundleManifest:
    model_file: str
    vocab_file: str
    tokenizer_config_file: str
    selftest_file: str
    source_model: str
    vocab_size: int
    max_len: int
    lowercase: bool


def _load_source(model_identifier: str):
    import torch
    from transformers import AutoConfig, BertForMaskedLM, BertTokenizer

    try:
        config = AutoConfig.from_pretrained(model_identifier)
    except Exception as exc:
        raise ModelSourceError(f"cannot load model config from {model_identifier!r}: {exc}") from None
    if getattr(config, "model_type", None) != "bert":
        raise UnsupportedArchitecture(
            f"model type {getattr(config, 'model_type', None)!r} is not a BERT-style masked LM"
        )
    if config.hidden_act != "gelu":
        raise UnsupportedArchitecture(f"activation {config.hidden_act!r} not supported (need erf gelu)")
    try:
        model = BertForMaskedLM.from_pretrained(model_identifier)
        tokenizer = BertTokenizer.from_pretrained(model_identifier)
    except Exception as exc:
        raise ModelSourceError(f"cannot load model/tokenizer from {model_identifier!r}: {exc}") from None
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return torch.no_grad, model, tokenizer, config


def _vocab_in_id_order(tokenizer) -> list[str]:
    table = tokenizer.get_vocab()
    surfaces = [""] * len(table)
    for surface, idx in table.items():
        surfaces[idx] = surface
    return surfaces


def _selftest_fixture(model, tokenizer, max_len: int) -> dict:
    """Prediction + tokenization cases computed entirely by the source stack."""
    import torch

    text = resources.files("blancscore_export.data").joinpath("selftest_sentences.txt").read_text("utf-8")
    sentences = [line for line in text.splitlines() if line.strip()]
    rng = np.random.default_rng(SELFTEST_SEED)
    mask_id = tokenizer.mask_token_id
    cls_id = tokenizer.cls_token_id
    sep_id = tokenizer.sep_token_id

    prediction_cases = []
    total_positions = 0
    pool = list(sentences)
    while total_positions < MIN_MASKED_POSITIONS and pool:
        batch, pool = pool[:PREDICTION_SENTENCES], pool[PREDICTION_SENTENCES:]
        for sentence in batch:
            ids = tokenizer.convert_tokens_to_ids(tokenizer.tokenize(sentence))
            ids = [cls_id] + ids[: max_len - 2] + [sep_id]
            maskable = list(range(1, len(ids) - 1))
            if not maskable:
                continue
            k = max(1, int(len(maskable) * MASK_FRACTION))
            positions = sorted(rng.choice(maskable, size=min(k, len(maskable)), replace=False).tolist())
            masked = list(ids)
            for p in positions:
                masked[p] = mask_id
            with torch.no_grad():
                logits = model(input_ids=torch.tensor([masked]), attention_mask=torch.ones(1, len(masked), dtype=torch.long)).logits[0]
            expected = [int(logits[p].argmax()) for p in positions]
            prediction_cases.append(
                {"input_ids": masked, "masked_positions": positions, "expected_top_ids": expected}
            )
            total_positions += len(positions)

    tokenization_cases = [
        {"text": s, "expected_ids": tokenizer.convert_tokens_to_ids(tokenizer.tokenize(s))}
        for s in sentences
    ]
    return {
        "min_top1_agreement": MIN_TOP1_AGREEMENT,
        "prediction_cases": prediction_cases,
        "tokenization_cases": tokenization_cases,
    }


def export_bundle(
    model_identifier: str,
    output_dir: str,
    max_len: int = 512,
    verify: bool = True,
    scorer_cli: str = "blancscore",
) -> BundleManifest:
    """Export the model and tokenizer into ``output_dir``.

    With ``verify`` enabled (default) the freshly written bundle is loaded
    through the scorer CLI, which replays the self-test fixture against the
    exported graph; disagreement raises ExportVerificationFailed.
    """
    _, model, tokenizer, config = _load_source(model_identifier)
    max_len = min(int(max_len), int(config.max_position_embeddings))

    surfaces = _vocab_in_id_order(tokenizer)
    table = {s: i for i, s in enumerate(surfaces)}
    if "." not in table:
        raise UnsupportedArchitecture("vocabulary lacks a period token for the filler prefix")

    weights = {k: v.detach().cpu().numpy() for k, v in model.state_dict().items()}
    tied = np.shares_memory(
        model.state_dict()["cls.predictions.decoder.weight"].numpy(),
        model.state_dict()["bert.embeddings.word_embeddings.weight"].numpy(),
    ) or np.array_equal(
        weights["cls.predictions.decoder.weight"], weights["bert.embeddings.word_embeddings.weight"]
    )
    shape = EncoderShape(
        vocab_size=config.vocab_size,
        hidden=config.hidden_size,
        layers=config.num_hidden_layers,
        heads=config.num_attention_heads,
        layer_norm_eps=config.layer_norm_eps,
        tied_decoder=bool(tied),
    )
    graph_bytes = emit_masked_lm_graph(weights, shape)

    os.makedirs(output_dir, exist_ok=True)
    with open(os.path.join(output_dir, "model.onnx"), "wb") as f:
        f.write(graph_bytes)
    with open(os.path.join(output_dir, "vocab.txt"), "w", encoding="utf-8") as f:
        f.write("\n".join(surfaces) + "\n")

    tokenizer_config = {
        "lowercase": bool(getattr(tokenizer, "do_lower_case", True)),
        "max_len": max_len,
        "special_tokens": {
            "padding": tokenizer.pad_token_id,
            "unknown": tokenizer.unk_token_id,
            "sequence_start": tokenizer.cls_token_id,
            "sequence_end": tokenizer.sep_token_id,
            "mask": tokenizer.mask_token_id,
            "filler": table["."],
        },
    }
    with open(os.path.join(output_dir, "tokenizer.json"), "w", encoding="utf-8") as f:
        json.dump(tokenizer_config, f, indent=2)

    fixture = _selftest_fixture(model, tokenizer, max_len)
    with open(os.path.join(output_dir, "selftest.json"), "w", encoding="utf-8") as f:
        json.dump(fixture, f)

    manifest = BundleManifest(
        model_file="model.onnx",
        vocab_file="vocab.txt",
        tokenizer_config_file="tokenizer.json",
        selftest_file="selftest.json",
        source_model=str(model_identifier),
        vocab_size=len(surfaces),
        max_len=max_len,
        lowercase=tokenizer_config["lowercase"],
    )
    with open(os.path.join(output_dir, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump(asdict(manifest), f, indent=2)

    if verify:
        verify_bundle(output_dir, scorer_cli=scorer_cli)
    return manifest


_PROBE_PAIR = {
    "id": "export-verify",
    "document": "Quiet rivers carry autumn leaves past the wooden landing. Children watch herons wade through shallow water.",
    "summary": "Rivers carry leaves past the landing.",
}


def verify_bundle(bundle_dir: str, scorer_cli: str = "blancscore") -> None:
    """Load the bundle through the scorer CLI, replaying its self-test.

    The scorer refuses to load a bundle whose graph or tokenizer disagrees
    with the fixture, which is exactly the verification we need.
    """
    if shutil.which(scorer_cli) is None:
        raise ExportVerificationFailed(
            f"scorer CLI {scorer_cli!r} not found on PATH; install the scorer or pass verify=False"
        )
    probe = json.dumps(_PROBE_PAIR)
    proc = subprocess.run(
        [scorer_cli, "score", "--backend", bundle_dir, "--input", "/dev/stdin", "--no-plots"],
        input=probe + "\n",
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise ExportVerificationFailed(
            f"scorer rejected the bundle (exit {proc.returncode}): {proc.stderr.strip()[:500]}"
        )
