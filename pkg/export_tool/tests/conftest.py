import os
import string

import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

WORDS = [
    "the", "a", "and", "of", "to", "in", "on", "was", "were", "said", "city",
    "council", "storm", "river", "mayor", "budget", "school", "bridge", "water",
    "people", "new", "old", "day", "night", "quiet", "rivers", "carry", "autumn",
    "leaves", "past", "wooden", "landing", "children", "watch", "through", "shallow",
]


def tiny_vocab() -> list[str]:
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", ".", ","] + WORDS
    vocab += list(string.ascii_lowercase)
    vocab += [f"##{c}" for c in string.ascii_lowercase]
    vocab += ["##s", "##ed", "##ing"]
    seen, out = set(), []
    for tok in vocab:
        if tok not in seen:
            seen.add(tok)
            out.append(tok)
    return out


def build_tiny_source(path: str, seed: int = 7, tie_word_embeddings: bool = True) -> str:
    """Construct and save a small random masked LM + tokenizer locally."""
    import torch
    from transformers import BertConfig, BertForMaskedLM, BertTokenizer

    vocab = tiny_vocab()
    os.makedirs(path, exist_ok=True)
    vocab_file = os.path.join(path, "vocab.txt")
    with open(vocab_file, "w", encoding="utf-8") as f:
        f.write("\n".join(vocab) + "\n")
    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=64,
        max_position_embeddings=128,
        tie_word_embeddings=tie_word_embeddings,
    )
    model = BertForMaskedLM(config)
    model.eval()
    model.save_pretrained(path)
    tokenizer = BertTokenizer(vocab=vocab_file, do_lower_case=True)
    tokenizer.save_pretrained(path)
    return path


@pytest.fixture(scope="session")
def tiny_source(tmp_path_factory):
    return build_tiny_source(str(tmp_path_factory.mktemp("tiny_src")))
