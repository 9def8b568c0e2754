import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pathkeep import (
    LOG_FLOOR,
    FrequencyTable,
    OracleScorer,
    ScoreRequest,
    make_scorer,
    oracle_from_corpus,
    score_answer_sentence,
    tokenize,
)


class TestTokenize:
    def test_words_and_punctuation_split(self):
        assert tokenize("Hello, world!") == ["hello", ",", "world", "!"]

    def test_apostrophes_stay_inside_words(self):
        assert tokenize("It's Bob's book.") == ["it's", "bob's", "book", "."]

    def test_lowercasing(self):
        assert tokenize("The SKY") == ["the", "sky"]

    def test_question_prompt_token_count(self):
        text = (
            "What do people aim to do at work? finish jobs, because "
            "People is at location of office, office is used for finish jobs"
        )
        assert tokenize(text)[:9] == [
            "what", "do", "people", "aim", "to", "do", "at", "work", "?",
        ]
        assert len(tokenize(text)) == 26


class TestScoreRequest:
    def test_rejects_empty_batch(self):
        with pytest.raises(ValueError):
            ScoreRequest(())

    def test_rejects_blank_sentence(self):
        with pytest.raises(ValueError):
            ScoreRequest(("fine", "   "))

    def test_rejects_non_string(self):
        with pytest.raises(ValueError):
            ScoreRequest(("fine", 3))

    def test_auto_ids_are_unique(self):
        a = ScoreRequest(("x",))
        b = ScoreRequest(("x",))
        assert a.batch_id.startswith("batch-")
        assert a.batch_id != b.batch_id

    def test_explicit_id_kept(self):
        assert ScoreRequest(("x",), batch_id="mine").batch_id == "mine"


class TestFrequencyTable:
    def test_prob_lookup_and_default(self):
        table = FrequencyTable({"sky": 0.5}, default_prob=0.001)
        assert table.prob("sky") == 0.5
        assert table.prob("unseen") == 0.001

    def test_rejects_zero_probability(self):
        with pytest.raises(ValueError):
            FrequencyTable({"sky": 0.0})

    def test_rejects_probability_above_one(self):
        with pytest.raises(ValueError):
            FrequencyTable({"sky": 1.5})

    def test_rejects_bad_default(self):
        with pytest.raises(ValueError):
            FrequencyTable({"sky": 0.5}, default_prob=0.0)

    def test_from_file(self, tmp_path):
        p = tmp_path / "table.tsv"
        p.write_text("sky\t0.5\n\nblue\t0.25\n", encoding="utf-8")
        table = FrequencyTable.from_file(p, default_prob=0.125)
        assert table.prob("sky") == 0.5
        assert table.prob("blue") == 0.25
        assert table.prob("???") == 0.125

    def test_from_file_bad_row_names_line(self, tmp_path):
        p = tmp_path / "table.tsv"
        p.write_text("sky\t0.5\nbroken row\n", encoding="utf-8")
        with pytest.raises(ValueError, match="line 2"):
            FrequencyTable.from_file(p)


class TestOracleFromCorpus:
    def test_add_one_smoothing(self):
        table = oracle_from_corpus(["a a b"])
        # counts: a=2, b=1; total=3, vocab=2 -> denom 5
        assert table.prob("a") == pytest.approx(3 / 5)
        assert table.prob("b") == pytest.approx(2 / 5)
        assert table.prob("zzz") == pytest.approx(1 / 6)

    def test_single_token_corpus_reaches_certainty(self):
        table = oracle_from_corpus(["x"])
        assert table.prob("x") == 1.0
        assert table.prob("other") == pytest.approx(1 / 3)

    def test_stream_of_chunks_equals_one_chunk(self):
        split = oracle_from_corpus(["the sky", "is blue"])
        joined = oracle_from_corpus(["the sky is blue"])
        assert split == joined

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            oracle_from_corpus([])

    @given(st.lists(st.sampled_from(["red", "sky", "blue", "sun"]), min_size=1, max_size=30))
    def test_probabilities_form_a_proper_table(self, tokens):
        table = oracle_from_corpus([" ".join(tokens)])
        mass = sum(table.probabilities.values())
        assert mass < 1.0 or math.isclose(mass, 1.0)
        assert 0.0 < table.default_prob < min(table.probabilities.values())


class TestOracleScorer:
    def test_mean_log_probability(self):
        scorer = OracleScorer(FrequencyTable({"the": 0.5, "sky": 0.25}, default_prob=0.1))
        [result] = scorer.score(ScoreRequest(("The sky",)))
        assert result.value == pytest.approx((math.log(0.5) + math.log(0.25)) / 2)
        assert result.tokens_scored == 2

    def test_floor_applies_per_token(self):
        scorer = OracleScorer(FrequencyTable({"the": 0.5}, default_prob=1e-300))
        [result] = scorer.score(ScoreRequest(("the gloxinia",)))
        assert result.value == pytest.approx((math.log(0.5) + LOG_FLOOR) / 2)

    def test_batch_preserves_order(self):
        scorer = OracleScorer(FrequencyTable({"a": 0.5, "b": 0.25}, default_prob=0.1))
        results = scorer.score(ScoreRequest(("a", "b", "a")))
        assert [r.value for r in results] == pytest.approx(
            [math.log(0.5), math.log(0.25), math.log(0.5)]
        )

    def test_demo_oracle_scores_known_sentence(self, demo_scorer):
        [result] = demo_scorer.score(ScoreRequest(("finish jobs",)))
        assert result.value == pytest.approx(0.0)
        assert result.tokens_scored == 2

    def test_score_answer_sentence_concatenates(self, demo_scorer):
        direct = demo_scorer.score(ScoreRequest(("what is work? office",)))[0]
        helper = score_answer_sentence(demo_scorer, "what is work?", "office")
        assert helper == direct

    def test_score_answer_sentence_validates(self, demo_scorer):
        with pytest.raises(ValueError):
            score_answer_sentence(demo_scorer, "", "office")
        with pytest.raises(ValueError):
            score_answer_sentence(demo_scorer, "what?", "  ")

    @given(
        st.lists(
            st.text(alphabet="abcdefg ", min_size=1, max_size=20).filter(str.strip),
            min_size=1,
            max_size=6,
        )
    )
    def test_scores_never_positive_and_never_below_floor(self, sentences):
        scorer = OracleScorer(FrequencyTable({"a": 1.0, "b": 0.5}, default_prob=0.01))
        results = scorer.score(ScoreRequest(tuple(sentences)))
        for r in results:
            assert LOG_FLOOR <= r.value <= 0.0
            assert r.tokens_scored >= 1


class TestMakeScorer:
    def test_oracle_selector(self, tmp_path):
        p = tmp_path / "t.tsv"
        p.write_text("sky\t0.5\n", encoding="utf-8")
        scorer = make_scorer(f"oracle:{p}")
        assert isinstance(scorer, OracleScorer)

    def test_remote_selector(self):
        scorer = make_scorer("remote:http://127.0.0.1:9")
        assert scorer.base_url == "http://127.0.0.1:9"
        scorer.close()

    @pytest.mark.parametrize("spec", ["", "oracle", "oracle:", "magic:beans"])
    def test_bad_selectors(self, spec):
        with pytest.raises(ValueError):
            make_scorer(spec)
