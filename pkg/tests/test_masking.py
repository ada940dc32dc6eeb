import random

import pytest

from blancscore.errors import SentenceTooLong
from blancscore.masking import MaskingPolicy, build_cloze_pair, is_eligible, mask_positions
from blancscore.textprep import WordRole

from conftest import make_sentence, make_token

ROLES = (WordRole.WHOLE_WORD, WordRole.WORD_START, WordRole.WORD_CONTINUATION)


def brute_force_positions(sentence, policy, offset):
    """Independent reference enumerator: walk every 1-based index and apply
    the guard literally; then widen eligible neighbors for mask_width."""
    def guard_allows(tok):
        if tok.word_role is WordRole.WHOLE_WORD and tok.char_length < policy.min_word_len:
            return False
        if tok.word_role is WordRole.WORD_START and tok.char_length < policy.min_start_len:
            return False
        if tok.word_role is WordRole.WORD_CONTINUATION and tok.char_length < policy.min_cont_len:
            return False
        return True

    base = []
    for i in range(1, len(sentence.tokens) + 1):
        if guard_allows(sentence.tokens[i - 1]) and (i - offset) % policy.gap == 0:
            base.append(i - 1)
    widened = set(base)
    for p in base:
        for q in range(p + 1, min(p + policy.mask_width, len(sentence.tokens))):
            if guard_allows(sentence.tokens[q]):
                widened.add(q)
    return sorted(widened)


def random_sentence(rng, max_tokens=60):
    n = rng.randint(1, max_tokens)
    specs = []
    for i in range(n):
        role = rng.choice(ROLES)
        if i == 0 and role is WordRole.WORD_CONTINUATION:
            role = WordRole.WORD_START
        specs.append((role, rng.randint(1, 12)))
    return make_sentence(specs)


class TestEligibility:
    # guard truth table at defaults: whole words need >=4 chars, starts are
    # always maskable, continuations never are
    @pytest.mark.parametrize(
        "role,length,expected",
        [
            (WordRole.WHOLE_WORD, 1, False),
            (WordRole.WHOLE_WORD, 3, False),
            (WordRole.WHOLE_WORD, 4, True),
            (WordRole.WHOLE_WORD, 5, True),
            (WordRole.WHOLE_WORD, 1000, True),
            (WordRole.WORD_START, 1, True),
            (WordRole.WORD_START, 3, True),
            (WordRole.WORD_START, 4, True),
            (WordRole.WORD_START, 5, True),
            (WordRole.WORD_START, 1000, True),
            (WordRole.WORD_CONTINUATION, 1, False),
            (WordRole.WORD_CONTINUATION, 3, False),
            (WordRole.WORD_CONTINUATION, 4, False),
            (WordRole.WORD_CONTINUATION, 5, False),
            (WordRole.WORD_CONTINUATION, 1000, True),
        ],
    )
    def test_default_guard_truth_table(self, role, length, expected):
        tok = make_token("x" * length, role)
        assert is_eligible(tok, MaskingPolicy()) is expected

    def test_thresholds_are_inclusive(self):
        policy = MaskingPolicy(min_word_len=4, min_start_len=2, min_cont_len=3)
        assert is_eligible(make_token("abcd"), policy)
        assert not is_eligible(make_token("abc"), policy)
        assert is_eligible(make_token("ab", WordRole.WORD_START), policy)
        assert not is_eligible(make_token("a", WordRole.WORD_START), policy)
        assert is_eligible(make_token("abc", WordRole.WORD_CONTINUATION), policy)
        assert not is_eligible(make_token("ab", WordRole.WORD_CONTINUATION), policy)


class TestMaskPositions:
    def test_twelve_eligible_gap6(self):
        # 12 eligible tokens, gap 6, offset 1: 1-based {1, 7} = 0-based [0, 6]
        sentence = make_sentence([(WordRole.WHOLE_WORD, 6)] * 12)
        policy = MaskingPolicy(gap=6)
        assert mask_positions(sentence, policy, 1) == [0, 6]
        assert mask_positions(sentence, policy, 1) == brute_force_positions(sentence, policy, 1)

    def test_gap2_offsets_partition(self):
        sentence = make_sentence([(WordRole.WHOLE_WORD, 5)] * 11)
        policy = MaskingPolicy(gap=2)
        one = set(mask_positions(sentence, policy, 1))
        two = set(mask_positions(sentence, policy, 2))
        assert one | two == set(range(11))
        assert one & two == set()

    def test_gap1_selects_every_eligible(self):
        sentence = make_sentence(
            [(WordRole.WHOLE_WORD, 8), (WordRole.WHOLE_WORD, 2), (WordRole.WORD_START, 1)]
        )
        assert mask_positions(sentence, MaskingPolicy(gap=1), 1) == [0, 2]

    def test_offset_out_of_range(self):
        sentence = make_sentence([(WordRole.WHOLE_WORD, 5)])
        with pytest.raises(ValueError):
            mask_positions(sentence, MaskingPolicy(gap=2), 3)
        with pytest.raises(ValueError):
            mask_positions(sentence, MaskingPolicy(gap=2), 0)

    def test_matches_brute_force_on_random_sentences(self):
        rng = random.Random(1234)
        for _ in range(300):
            sentence = random_sentence(rng)
            policy = MaskingPolicy(
                gap=rng.randint(1, 8),
                min_word_len=rng.choice([0, 2, 4, 6]),
                min_start_len=rng.choice([0, 2]),
                min_cont_len=rng.choice([0, 3, 1000]),
                mask_width=rng.randint(1, 3),
            )
            offset = rng.randint(1, policy.gap)
            assert mask_positions(sentence, policy, offset) == brute_force_positions(
                sentence, policy, offset
            ), (sentence, policy, offset)

    def test_partition_property_random(self):
        # union over offsets == eligible set, disjointly (mask_width 1)
        rng = random.Random(99)
        policy_fields = dict(min_word_len=4, min_start_len=0, min_cont_len=1000)
        for _ in range(200):
            sentence = random_sentence(rng)
            for gap in range(1, 9):
                policy = MaskingPolicy(gap=gap, **policy_fields)
                eligible = {
                    i for i, t in enumerate(sentence.tokens) if is_eligible(t, policy)
                }
                seen: list[int] = []
                for offset in range(1, gap + 1):
                    seen.extend(mask_positions(sentence, policy, offset))
                assert sorted(seen) == sorted(set(seen)), "offsets overlap"
                assert set(seen) == eligible

    def test_mask_width_skips_ineligible_neighbors(self):
        # eligible, short(ineligible), eligible: width 3 from position 0
        # takes 0 and 2, never the ineligible 1
        sentence = make_sentence(
            [(WordRole.WHOLE_WORD, 6), (WordRole.WHOLE_WORD, 2), (WordRole.WHOLE_WORD, 6)]
        )
        policy = MaskingPolicy(gap=3, mask_width=3)
        assert mask_positions(sentence, policy, 1) == [0, 2]

    def test_mask_width_no_duplicates(self):
        sentence = make_sentence([(WordRole.WHOLE_WORD, 6)] * 8)
        policy = MaskingPolicy(gap=2, mask_width=2)
        positions = mask_positions(sentence, policy, 1)
        assert positions == sorted(set(positions))


class TestPolicyValidation:
    def test_invalid_gap(self):
        with pytest.raises(ValueError):
            MaskingPolicy(gap=0)

    def test_invalid_mask_width(self):
        with pytest.raises(ValueError):
            MaskingPolicy(mask_width=0)

    def test_negative_threshold(self):
        with pytest.raises(ValueError):
            MaskingPolicy(min_word_len=-1)


class TestBuildClozePair:
    def _sentence(self, n=10):
        return make_sentence([(WordRole.WHOLE_WORD, 5)] * n, start_id=40)

    def test_base_prefix_matches_summary_token_count(self):
        summary = [make_token("word", vocab_id=7)] * 10
        pair = build_cloze_pair(summary, self._sentence(), [0, 4], mask_id=4, filler_id=5, max_len=64)
        assert len(pair.base_prefix) == 10
        assert pair.base_prefix == (5,) * 10
        assert len(pair.help_prefix) == 10

    def test_empty_summary_sides_identical(self):
        pair = build_cloze_pair([], self._sentence(), [2], mask_id=4, filler_id=5, max_len=64)
        assert pair.base_prefix == pair.help_prefix == ()
        assert pair.sides_identical
        assert pair.base_input() == pair.help_input()

    def test_masked_positions_and_gold_ids(self):
        pair = build_cloze_pair([], self._sentence(), [4, 1], mask_id=4, filler_id=5, max_len=64)
        assert pair.masked_positions == (1, 4)
        assert pair.gold_ids == (41, 44)
        assert pair.sentence_tokens[1] == 4
        assert pair.sentence_tokens[4] == 4
        assert pair.sentence_tokens[0] == 40

    def test_prefix_truncated_from_its_end(self):
        summary = [make_token("word", vocab_id=100 + i) for i in range(500)]
        sentence = self._sentence(100)
        pair = build_cloze_pair(summary, sentence, [0], mask_id=4, filler_id=5, max_len=512)
        # 512 - 100 sentence tokens - 2 specials = 410
        assert len(pair.help_prefix) == 410
        assert pair.help_prefix == tuple(100 + i for i in range(410))
        assert len(pair.base_prefix) == 410

    def test_sentence_never_truncated(self):
        sentence = self._sentence(62)
        pair = build_cloze_pair(
            [make_token("word", vocab_id=9)] * 30, sentence, [5], mask_id=4, filler_id=5, max_len=64
        )
        assert len(pair.sentence_tokens) == 62
        assert pair.help_prefix == ()

    def test_sentence_too_long(self):
        with pytest.raises(SentenceTooLong):
            build_cloze_pair([], self._sentence(63), [0], mask_id=4, filler_id=5, max_len=64)

    def test_alignment_invariant(self):
        summary = [make_token("word", vocab_id=7)] * 3
        pair = build_cloze_pair(summary, self._sentence(), [1, 5], mask_id=4, filler_id=5, max_len=64)
        assert pair.base_input().masked_positions == pair.help_input().masked_positions
        assert pair.base_input().sentence_ids == pair.help_input().sentence_ids
