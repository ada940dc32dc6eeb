import json
import os

from hypothesis import given, settings
from hypothesis import strategies as st

from blancscore.textprep import (
    WordRole,
    basic_tokenize,
    prepare_document,
    split_sentences,
    tokenize,
)

DATA = os.path.join(os.path.dirname(__file__), "data")


class TestSplitSentences:
    def test_empty_document(self):
        assert split_sentences("") == []
        assert split_sentences("   \n\t ") == []

    def test_single_terminal(self):
        assert split_sentences("One sentence.") == [("One sentence.", (0, 13))]

    def test_abbreviation_not_a_boundary(self):
        out = [s for s, _ in split_sentences("Dr. Smith left. He returned.")]
        assert out == ["Dr. Smith left.", "He returned."]

    def test_hand_labeled_fixture(self):
        with open(os.path.join(DATA, "sentence_fixture.json")) as f:
            fixture = json.load(f)
        total = 0
        for case in fixture:
            got = [s for s, _ in split_sentences(case["document"])]
            assert got == case["sentences"], case["document"]
            total += len(case["sentences"])
        assert total >= 50

    def test_spans_point_into_document(self):
        with open(os.path.join(DATA, "sentence_fixture.json")) as f:
            fixture = json.load(f)
        for case in fixture:
            doc = case["document"]
            pieces = split_sentences(doc)
            for text, (start, end) in pieces:
                assert doc[start:end] == text
            # spans ordered and non-overlapping
            for (_, (s1, e1)), (_, (s2, e2)) in zip(pieces, pieces[1:]):
                assert e1 <= s2

    def test_all_non_whitespace_covered(self):
        doc = "First bit here. Second bit there!  Tail without terminal"
        pieces = split_sentences(doc)
        covered = set()
        for _, (start, end) in pieces:
            covered.update(range(start, end))
        for i, ch in enumerate(doc):
            if not ch.isspace():
                assert i in covered, f"char {i} ({ch!r}) not covered"

    def test_no_terminal_at_all(self):
        assert split_sentences("no punctuation here") == [("no punctuation here", (0, 19))]

    def test_decimal_numbers_not_boundaries(self):
        out = [s for s, _ in split_sentences("It costs 3.14 dollars. Cheap.")]
        assert out == ["It costs 3.14 dollars.", "Cheap."]


class TestTokenize:
    def test_in_vocabulary_word(self, reference_backend):
        toks = tokenize("the", reference_backend.vocabulary)
        assert len(toks) == 1
        assert toks[0].surface == "the"
        assert toks[0].char_length == 3
        assert toks[0].word_role is WordRole.WHOLE_WORD

    def test_out_of_vocabulary_word_is_split(self, reference_backend):
        toks = tokenize("blancify", reference_backend.vocabulary)
        assert toks[0].word_role is WordRole.WORD_START
        assert len(toks) >= 2
        assert all(t.word_role is WordRole.WORD_CONTINUATION for t in toks[1:])

    def test_continuation_char_length_strips_marker(self, reference_backend):
        toks = tokenize("storms", reference_backend.vocabulary)
        # "storm" + "##s": lengths count surface characters only
        assert [t.char_length for t in toks] == [5, 1]
        assert toks[1].surface == "s"

    def test_lowercasing_follows_config(self, reference_backend):
        a = tokenize("The Storm", reference_backend.vocabulary)
        b = tokenize("the storm", reference_backend.vocabulary)
        assert [t.vocab_id for t in a] == [t.vocab_id for t in b]

    def test_punctuation_split(self, reference_backend):
        toks = tokenize("then, there.", reference_backend.vocabulary)
        assert [t.surface for t in toks] == ["then", ",", "there", "."]

    def test_unknown_character_maps_to_unk_whole_word(self, reference_backend):
        vocab = reference_backend.vocabulary
        toks = tokenize("☃", vocab)  # snowman, not in any piece
        assert len(toks) == 1
        assert toks[0].vocab_id == vocab.unknown_id
        assert toks[0].word_role is WordRole.WHOLE_WORD

    def test_determinism(self, reference_backend):
        text = "The council said 1,500 people came to the Avon fair."
        a = tokenize(text, reference_backend.vocabulary)
        b = tokenize(text, reference_backend.vocabulary)
        assert a == b

    @given(st.text(alphabet=st.characters(codec="ascii"), max_size=80))
    @settings(max_examples=150, deadline=None)
    def test_role_consistency(self, text):
        from blancscore.backends import UnigramBackend

        vocab = UnigramBackend().vocabulary
        toks = tokenize(text, vocab)
        for i, tok in enumerate(toks):
            if tok.word_role is WordRole.WORD_START:
                assert i + 1 < len(toks)
                assert toks[i + 1].word_role is WordRole.WORD_CONTINUATION
            if tok.word_role is WordRole.WHOLE_WORD and i + 1 < len(toks):
                assert toks[i + 1].word_role in (WordRole.WHOLE_WORD, WordRole.WORD_START)
            # a continuation never begins the stream
            if i == 0:
                assert tok.word_role is not WordRole.WORD_CONTINUATION

    @given(words=st.lists(st.sampled_from("the storm city a council of water said bridge".split()), min_size=1, max_size=12))
    @settings(max_examples=80, deadline=None)
    def test_round_trip_modulo_whitespace(self, reference_backend, words):
        text = " ".join(words)
        toks = tokenize(text, reference_backend.vocabulary)
        rebuilt = []
        for tok in toks:
            if tok.word_role is WordRole.WORD_CONTINUATION:
                rebuilt[-1] += tok.surface
            else:
                rebuilt.append(tok.surface)
        assert " ".join(rebuilt) == text

    def test_char_length_matches_surface(self, reference_backend):
        toks = tokenize("The blancify storms hit Avon on March 5, 2019.", reference_backend.vocabulary)
        for tok in toks:
            assert tok.char_length == len(tok.surface)

    def test_basic_tokenize_cjk_spacing(self):
        assert basic_tokenize("ab中cd", lowercase=True) == ["ab", "中", "cd"]


class TestPrepareDocument:
    def test_sentences_nonempty_and_spans_ordered(self, reference_backend):
        doc = "The storm came. The river rose! Was the town safe?"
        sentences = prepare_document(doc, reference_backend.vocabulary)
        assert len(sentences) == 3
        for s in sentences:
            assert len(s.tokens) > 0
        spans = [s.source_span for s in sentences]
        assert spans == sorted(spans)

    def test_empty_document(self, reference_backend):
        assert prepare_document("", reference_backend.vocabulary) == []
