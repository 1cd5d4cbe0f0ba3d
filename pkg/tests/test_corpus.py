import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xlt.corpus import (
    Dataset,
    LanguageTag,
    Provenance,
    SequenceInstance,
    Split,
    TaskKind,
    TokenInstance,
    TsvSchema,
    check_bio,
    dataset_from_json,
    dataset_to_json,
    is_valid_bio,
    parse_conll,
    parse_sequence_tsv,
    read_jsonl,
    repair_iob1,
    write_conll,
    write_jsonl,
    write_sequence_tsv,
)
from xlt.errors import (
    EmptyInput,
    InvalidTag,
    LabelOutsideSet,
    MalformedLine,
    MissingColumn,
    RaggedLine,
)
from xlt.synthdata import sample_ner_dataset, build_sentiment_world, sample_sentiment_dataset

ENG = LanguageTag("eng")
DEU = LanguageTag("deu")


class TestLanguageTag:
    def test_render(self):
        assert LanguageTag("eng", "Latn").render() == "eng_Latn"
        assert LanguageTag("gn").render() == "gn"

    def test_parse_roundtrip(self):
        for text in ("eng_Latn", "zho_Hans", "aym", "gn"):
            assert LanguageTag.parse(text).render() == text

    def test_script_case_normalized(self):
        assert LanguageTag("rus", "cyrl").script == "Cyrl"

    @pytest.mark.parametrize("code,script", [
        ("e", None), ("engl", None), ("ENG", None), ("eng", "La"),
        ("eng", "Latin"), ("e1g", None),
    ])
    def test_invalid(self, code, script):
        with pytest.raises(ValueError):
            LanguageTag(code, script)


class TestBio:
    def test_repair_iob1(self):
        assert repair_iob1(["I-ORG", "I-ORG", "O", "I-PER"]) == \
            ("B-ORG", "I-ORG", "O", "B-PER")
        assert repair_iob1(["B-ORG", "I-ORG"]) == ("B-ORG", "I-ORG")
        assert repair_iob1(["I-ORG", "I-PER"]) == ("B-ORG", "B-PER")

    def test_check_bio_rejects_dangling_inside(self):
        with pytest.raises(InvalidTag):
            check_bio(["O", "I-PER"])
        with pytest.raises(InvalidTag):
            check_bio(["B-LOC", "I-PER"])

    def test_token_instance_validates(self):
        with pytest.raises(InvalidTag):
            TokenInstance("0", ("a",), ("I-PER",), ENG)
        with pytest.raises(ValueError):
            TokenInstance("0", ("a", "b"), ("O",), ENG)


class TestParseConll:
    def test_two_token_sentence(self):
        dataset = parse_conll("EU NNP B-ORG\nrejects VB O\n\n", column=2)
        assert len(dataset) == 1
        inst = dataset.instances[0]
        assert inst.tokens == ("EU", "rejects")
        assert inst.tags == ("B-ORG", "O")
        assert dataset.label_set == ("ORG",)

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            parse_conll("", column=1)

    def test_ragged_line(self):
        with pytest.raises(RaggedLine):
            parse_conll("EU B-ORG\nrejects\n", column=1)

    def test_invalid_tag(self):
        with pytest.raises(InvalidTag):
            parse_conll("EU ORG\n", column=1)

    def test_docstart_skipped(self):
        text = "-DOCSTART- -X- O\n\nEU NNP B-ORG\n\n"
        dataset = parse_conll(text, column=2)
        assert [inst.tokens for inst in dataset] == [("EU",)]

    def test_iob1_repaired(self):
        dataset = parse_conll("EU I-ORG\ntoday I-ORG\n", column=1)
        assert dataset.instances[0].tags == ("B-ORG", "I-ORG")

    def test_label_set_file_order(self):
        text = "a B-LOC\n\nb B-PER\nc B-LOC\n"
        assert parse_conll(text, column=1).label_set == ("LOC", "PER")

    def test_writer_roundtrip_1000_sentences(self):
        # ids and label order are not representable in CoNLL text, so the
        # identity law holds on the parser's canonical form.
        sampled = sample_ner_dataset(1000, seed=5)
        language = sampled.instances[0].language
        canonical = parse_conll(write_conll(sampled), column=1, language=language)
        assert [i.tokens for i in canonical] == [i.tokens for i in sampled]
        assert [i.tags for i in canonical] == [i.tags for i in sampled]
        again = parse_conll(write_conll(canonical), column=1, language=language)
        assert again == canonical

    def test_deterministic(self):
        text = write_conll(sample_ner_dataset(50, seed=9))
        assert parse_conll(text, column=1) == parse_conll(text, column=1)


@st.composite
def conll_texts(draw):
    n_sentences = draw(st.integers(1, 6))
    lines = []
    for _ in range(n_sentences):
        length = draw(st.integers(1, 6))
        prev = None
        for _ in range(length):
            token = draw(st.text(alphabet="abcxyz", min_size=1, max_size=4))
            choices = ["O", "B-PER", "B-LOC"]
            if prev is not None:
                choices.append(f"I-{prev}")
            tag = draw(st.sampled_from(choices))
            prev = tag.split("-", 1)[1] if tag != "O" else None
            lines.append(f"{token} {tag}")
        lines.append("")
    return "\n".join(lines)


@given(conll_texts())
@settings(max_examples=60, deadline=None)
def test_parse_conll_output_satisfies_bio(text):
    dataset = parse_conll(text, column=1)
    for inst in dataset:
        assert len(inst.tokens) == len(inst.tags) >= 1
        assert is_valid_bio(inst.tags)


class TestParseTsv:
    NLI_SCHEMA = TsvSchema(text_a_col=0, text_b_col=1, label_col=2)

    def test_two_rows_nli(self):
        text = "a premise\ta hypothesis\tentailment\nanother\tone\tneutral\n"
        dataset = parse_sequence_tsv(text, self.NLI_SCHEMA, TaskKind.NLI)
        assert len(dataset) == 2
        assert dataset.task is TaskKind.NLI
        assert dataset.instances[0].text_b == "a hypothesis"
        assert dataset.label_set == ("entailment", "neutral")

    def test_missing_column(self):
        with pytest.raises(MissingColumn):
            parse_sequence_tsv("only text\tno label\n", self.NLI_SCHEMA, TaskKind.NLI)

    def test_label_outside_set(self):
        schema = TsvSchema(text_a_col=0, label_col=1)
        with pytest.raises(LabelOutsideSet):
            parse_sequence_tsv("hello\tweird\n", schema, TaskKind.TC,
                               label_set=("pos", "neg"))

    def test_header_skipped(self):
        schema = TsvSchema(text_a_col=0, label_col=1, has_header=True)
        dataset = parse_sequence_tsv("text\tlabel\nhello\tpos\n", schema, TaskKind.TC)
        assert len(dataset) == 1

    def test_empty(self):
        with pytest.raises(EmptyInput):
            parse_sequence_tsv("", TsvSchema(text_a_col=0, label_col=1), TaskKind.TC)

    def test_writer_roundtrip_500_rows(self):
        world = build_sentiment_world(ENG, DEU, seed=3)
        dataset = sample_sentiment_dataset(world, 500, seed=4)
        schema = TsvSchema(text_a_col=1, label_col=2, id_col=0, has_header=True)
        text = write_sequence_tsv(dataset, schema)
        parsed = parse_sequence_tsv(text, schema, TaskKind.TC, language=ENG)
        assert parsed == dataset


def _jsonl_roundtrip(dataset):
    return read_jsonl(write_jsonl(dataset), task=dataset.task,
                      label_set=dataset.label_set, split=dataset.split)


class TestJsonl:
    def test_empty_dataset(self):
        empty = Dataset(TaskKind.TC, (), (), Split.TRAIN)
        assert write_jsonl(empty) == ""
        assert read_jsonl("", task=TaskKind.TC) == empty

    def test_identity_law_ner(self):
        dataset = sample_ner_dataset(50, seed=1)
        assert _jsonl_roundtrip(dataset) == dataset

    def test_identity_law_sequence_with_provenance(self):
        inst = SequenceInstance("0", "hello", "pos", DEU, text_b=None,
                                provenance=Provenance.ROUNDTRIP, pivot=LanguageTag("tur"))
        dataset = Dataset(TaskKind.TC, ("pos",), (inst,), Split.TEST)
        assert _jsonl_roundtrip(dataset) == dataset

    def test_truncated_final_line(self):
        world = build_sentiment_world(ENG, DEU, seed=3)
        text = write_jsonl(sample_sentiment_dataset(world, 3, seed=1))
        truncated = text[:-10]
        with pytest.raises(MalformedLine) as excinfo:
            read_jsonl(truncated)
        assert excinfo.value.line_number == 3

    def test_missing_field_reports_line(self):
        line = json.dumps({"id": "0", "task": "TC", "language": "eng"})
        with pytest.raises(MalformedLine):
            read_jsonl(line)

    def test_label_set_first_seen_when_unspecified(self):
        world = build_sentiment_world(ENG, DEU, seed=3)
        dataset = sample_sentiment_dataset(world, 6, seed=2)
        parsed = read_jsonl(write_jsonl(dataset))
        assert parsed.label_set == ("pos", "neg")

    def test_dataset_json_roundtrip(self):
        dataset = sample_ner_dataset(20, seed=2, split=Split.VALIDATION)
        assert dataset_from_json(json.loads(json.dumps(dataset_to_json(dataset)))) == dataset


@st.composite
def sequence_datasets(draw):
    task = draw(st.sampled_from([TaskKind.TC, TaskKind.NLI]))
    labels = ("yes", "no", "maybe")
    n = draw(st.integers(0, 6))
    instances = []
    used = []
    for i in range(n):
        label = draw(st.sampled_from(labels))
        if label not in used:
            used.append(label)
        provenance = draw(st.sampled_from(list(Provenance)))
        pivot = draw(st.sampled_from([None, LanguageTag("tur"), LanguageTag("zho", "Hans")]))
        text = draw(st.text(alphabet="aåb •\t知", max_size=8).map(lambda s: s.replace("\n", " ")))
        instances.append(SequenceInstance(
            id=str(i), text_a=text,
            text_b="h" if task is TaskKind.NLI else None,
            label=label, language=draw(st.sampled_from([ENG, DEU])),
            provenance=provenance, pivot=pivot))
    return Dataset(task, tuple(used), tuple(instances),
                   draw(st.sampled_from(list(Split))))


@given(sequence_datasets())
@settings(max_examples=60, deadline=None)
def test_jsonl_roundtrip_property(dataset):
    assert _jsonl_roundtrip(dataset) == dataset


class TestDatasetInvariants:
    def test_duplicate_ids_rejected(self):
        inst = SequenceInstance("0", "x", "pos", ENG)
        with pytest.raises(ValueError):
            Dataset(TaskKind.TC, ("pos",), (inst, inst))

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError):
            Dataset(TaskKind.TC, ("pos", "pos"), ())

    def test_label_outside_set_rejected(self):
        inst = SequenceInstance("0", "x", "odd", ENG)
        with pytest.raises(ValueError):
            Dataset(TaskKind.TC, ("pos",), (inst,))

    def test_nli_needs_text_b(self):
        inst = SequenceInstance("0", "x", "pos", ENG)
        with pytest.raises(ValueError):
            Dataset(TaskKind.NLI, ("pos",), (inst,))

    def test_tc_rejects_text_b(self):
        inst = SequenceInstance("0", "x", "pos", ENG, text_b="y")
        with pytest.raises(ValueError):
            Dataset(TaskKind.TC, ("pos",), (inst,))
