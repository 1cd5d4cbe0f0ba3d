from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xlt.align import (
    AlignmentLinks,
    OracleAligner,
    ProjectionReport,
    parse_pharaoh,
    project_dataset,
    project_labels,
    projection_rate_rows,
    roundtrip_and_project,
    translate_and_project,
)
from xlt.corpus import Provenance, is_valid_bio
from xlt.errors import IndexOutOfRange, LengthMismatch, MalformedPair
from xlt.synthdata import sample_ner_dataset
from xlt.translate import DecodingConfig, PermutationTranslator, identity_translator, permutation_translator

from bruteforce import brute_project, valid_bio_sequences
from conftest import DEU

GREEDY = DecodingConfig.greedy()


class TestPharaoh:
    def test_basic(self):
        links = parse_pharaoh("0-0 1-2", 2, 3)
        assert links.links == {(0, 0), (1, 2)}

    def test_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            parse_pharaoh("0-5", 2, 3)

    def test_malformed(self):
        for bad in ("0:1", "a-b", "1-", "-1-2"):
            with pytest.raises(MalformedPair):
                parse_pharaoh(bad, 3, 3)

    def test_serialize_parse_roundtrip(self):
        aligner = OracleAligner(permutation=PermutationTranslator.permutation)
        links = aligner.align(["a", "b", "c"], ["c", "b", "a"])
        assert parse_pharaoh(links.to_pharaoh(), 3, 3) == links

    def test_duplicate_pairs_collapse(self):
        assert parse_pharaoh("0-0 0-0", 1, 1).links == {(0, 0)}


def identity_links(n):
    return AlignmentLinks(frozenset((i, i) for i in range(n)), n, n)


class TestProjectLabels:
    def test_identity_alignment_returns_tags_unchanged(self):
        tags = ("B-PER", "I-PER", "O", "B-LOC")
        out = project_labels(list("abcd"), tags, list("wxyz"), identity_links(4))
        assert out.tags == tags
        assert out.absorbed == 0

    def test_unlinked_labeled_token_discards(self):
        # the labeled token 0 has no link -> instance dropped
        links = AlignmentLinks(frozenset({(1, 0)}), 2, 2)
        out = project_labels(["a", "b"], ["B-PER", "O"], ["x", "y"], links)
        assert out.tags is None
        assert out.reason == "no_link"

    def test_unlinked_o_token_never_discards(self):
        links = AlignmentLinks(frozenset({(0, 0)}), 2, 2)
        out = project_labels(["a", "b"], ["B-PER", "O"], ["x", "y"], links)
        assert out.tags == ("B-PER", "O")

    def test_reversal_case(self):
        links = AlignmentLinks(frozenset({(0, 2), (1, 1), (2, 0)}), 3, 3)
        out = project_labels(["a", "b", "c"], ["B-LOC", "I-LOC", "O"],
                             ["x", "y", "z"], links)
        assert out.tags == ("O", "B-LOC", "I-LOC")

    def test_span_conflict_discards(self):
        # two entities projected onto overlapping ranges
        links = AlignmentLinks(frozenset({(0, 0), (0, 2), (1, 1)}), 2, 3)
        out = project_labels(["a", "b"], ["B-PER", "B-LOC"], ["x", "y", "z"], links)
        assert out.tags is None
        assert out.reason == "span_conflict"

    def test_range_closure_absorbs_gap(self):
        # entity links to targets 0 and 2; position 1 is absorbed as I-X
        links = AlignmentLinks(frozenset({(0, 0), (0, 2)}), 1, 3)
        out = project_labels(["a"], ["B-X"], ["x", "y", "z"], links)
        assert out.tags == ("B-X", "I-X", "I-X")
        assert out.absorbed == 1

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            project_labels(["a"], ["O", "O"], ["x"], identity_links(1))
        with pytest.raises(LengthMismatch):
            project_labels(["a"], ["O"], ["x", "y"], identity_links(1))

    def test_exhaustive_small_grids_match_bruteforce(self):
        # every tagging and every link set (O rows included) on 3x3 grids
        for src_len in range(1, 4):
            for tags in valid_bio_sequences(src_len, ("X", "Y"), max_entities=2):
                cells = [(i, j) for i in range(src_len) for j in range(3)]
                for k in range(len(cells) + 1):
                    for subset in combinations(cells, k):
                        links = AlignmentLinks(frozenset(subset), src_len, 3)
                        out = project_labels(["t"] * src_len, tags, ["u"] * 3, links)
                        expected = brute_project(tags, set(subset), 3)
                        got = list(out.tags) if out.retained else None
                        assert got == expected, (tags, subset)


@st.composite
def random_projection_cases(draw):
    src_len = draw(st.integers(1, 7))
    tgt_len = draw(st.integers(1, 7))
    tags = draw(st.sampled_from(valid_bio_sequences(src_len, ("X", "Y", "Z"))))
    cells = [(i, j) for i in range(src_len) for j in range(tgt_len)]
    links = draw(st.sets(st.sampled_from(cells)) if cells else st.just(set()))
    return src_len, tgt_len, tags, links


@given(random_projection_cases())
@settings(max_examples=300, deadline=None)
def test_projection_matches_bruteforce_random(case):
    src_len, tgt_len, tags, links = case
    out = project_labels(["t"] * src_len, tags, ["u"] * tgt_len,
                         AlignmentLinks(frozenset(links), src_len, tgt_len))
    assert (list(out.tags) if out.retained else None) == \
        brute_project(tags, links, tgt_len)
    if out.retained:
        assert len(out.tags) == tgt_len
        assert is_valid_bio(out.tags)


@given(st.integers(1, 8),
       st.data())
@settings(max_examples=120, deadline=None)
def test_monotone_bijective_never_conflicts(n, data):
    tags = data.draw(st.sampled_from(valid_bio_sequences(n, ("X", "Y"))))
    # monotone bijection: target order preserves source order
    out = project_labels(["t"] * n, tags, ["u"] * n, identity_links(n))
    assert out.retained
    assert out.reason is None


class TestPharaohFileAligner:
    def test_consumes_lines_in_order(self):
        from xlt.align import PharaohFileAligner

        dataset = sample_ner_dataset(5, seed=8)
        tokens = [list(inst.tokens) for inst in dataset]
        lines = "\n".join(
            OracleAligner().align(inst.tokens, toks).to_pharaoh()
            for inst, toks in zip(dataset, tokens))
        aligner = PharaohFileAligner(lines)
        projected, report = project_dataset(dataset, tokens, aligner, language=DEU)
        assert report.projection_rate == 100.0
        assert [inst.tags for inst in projected] == [inst.tags for inst in dataset]
        assert aligner.remaining == 0

    def test_exhaustion_raises(self):
        from xlt.align import PharaohFileAligner

        aligner = PharaohFileAligner("0-0")
        aligner.align(["a"], ["b"])
        with pytest.raises(LengthMismatch):
            aligner.align(["a"], ["b"])


class TestOracleAligner:
    def test_identity_default(self):
        links = OracleAligner().align(["a", "b"], ["x", "y"])
        assert links.links == {(0, 0), (1, 1)}

    def test_reversal(self):
        links = OracleAligner(permutation=PermutationTranslator.permutation)
        assert links.align(["a", "b", "c"], ["x", "y", "z"]).links == \
            {(0, 2), (1, 1), (2, 0)}

    def test_drop_prob_deterministic_and_order_free(self):
        aligner = OracleAligner(drop_prob=0.5, seed=3)
        first = aligner.align(["w1", "w2", "w3"], ["w1", "w2", "w3"])
        aligner.align(["other"], ["other"])  # interleaved call must not matter
        second = aligner.align(["w1", "w2", "w3"], ["w1", "w2", "w3"])
        assert first == second

    def test_length_mismatch_links_min(self):
        links = OracleAligner().align(["a", "b", "c"], ["x"])
        assert links.links == {(0, 0)}


class TestProjectionReport:
    def test_arithmetic_identity(self):
        report = ProjectionReport(total=10, retained=7, discarded_no_link=2,
                                  discarded_span_conflict=1)
        report.check()
        assert report.projection_rate == 70.0

    def test_empty_is_vacuously_full(self):
        assert ProjectionReport().projection_rate == 100.0

    def test_chained(self):
        first = ProjectionReport(total=10, retained=8, discarded_no_link=2)
        second = ProjectionReport(total=8, retained=6, discarded_span_conflict=2)
        combined = first.chained(second)
        combined.check()
        assert combined.total == 10
        assert combined.retained == 6
        assert combined.discarded_no_link == 2
        assert combined.discarded_span_conflict == 2

    def test_rate_rows_average(self):
        rows = projection_rate_rows({
            "a": ProjectionReport(total=10, retained=9, discarded_no_link=1),
            "b": ProjectionReport(total=10, retained=7, discarded_no_link=3)})
        assert rows[-1] == ("Avg", 80.0)


class TestProjectDataset:
    def test_oracle_full_rate(self):
        dataset = sample_ner_dataset(100, seed=1)
        tokens = [list(inst.tokens) for inst in dataset]
        projected, report = project_dataset(dataset, tokens, OracleAligner(),
                                            language=DEU)
        assert report.projection_rate == 100.0
        assert len(projected) == 100
        assert all(inst.language == DEU for inst in projected)
        assert [inst.tags for inst in projected] == [inst.tags for inst in dataset]

    def test_length_mismatch(self):
        dataset = sample_ner_dataset(3, seed=1)
        with pytest.raises(LengthMismatch):
            project_dataset(dataset, [["a"]], OracleAligner(), language=DEU)

    def test_report_tallies(self):
        dataset = sample_ner_dataset(500, seed=2, single_token_entities=True)
        tokens = [list(inst.tokens) for inst in dataset]
        aligner = OracleAligner(drop_prob=0.5, seed=11)
        projected, report = project_dataset(dataset, tokens, aligner, language=DEU)
        report.check()
        assert report.total == 500
        assert report.retained == len(projected)
        assert 0 < report.retained < 500

    def test_translate_and_project_reversal(self):
        dataset = sample_ner_dataset(30, seed=3)
        projected, report = translate_and_project(
            permutation_translator(), OracleAligner(PermutationTranslator.permutation),
            dataset, dataset.instances[0].language, DEU, GREEDY)
        assert report.projection_rate == 100.0
        for before, after in zip(dataset, projected):
            assert after.tokens == tuple(reversed(before.tokens))
            assert after.provenance is Provenance.TRANSLATED

    def test_roundtrip_and_project_identity(self):
        dataset = sample_ner_dataset(30, seed=4)
        src = dataset.instances[0].language
        projected, report = roundtrip_and_project(
            identity_translator(), OracleAligner(), dataset, src, DEU, src, GREEDY)
        assert report.total == 30
        assert report.retained == 30
        for before, after in zip(dataset, projected):
            assert after.tokens == before.tokens
            assert after.tags == before.tags
            assert after.provenance is Provenance.ROUNDTRIP
            assert after.pivot == DEU
