"""Data model and parsers/serializers for sequence- and token-level datasets.

All values are immutable after construction and safe to share across
threads; parsers are pure functions of their input text.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

from .errors import (
    EmptyInput,
    InvalidTag,
    LabelOutsideSet,
    MalformedLine,
    MissingColumn,
    RaggedLine,
)

_CODE_RE = re.compile(r"^[a-z]{2,3}$")
_SCRIPT_RE = re.compile(r"^[A-Za-z]{4}$")
_TAG_RE = re.compile(r"^(O|[BI]-\S+)$")


@dataclass(frozen=True, order=True)
class LanguageTag:
    """A language identifier: ISO-639 code plus optional 4-letter script.

    Rendered as ``code_Script`` (e.g. ``eng_Latn``) or bare ``code``.
    """

    code: str
    script: Optional[str] = None

    def __post_init__(self):
        if not _CODE_RE.match(self.code):
            raise ValueError(f"language code must be 2-3 lowercase ASCII letters: {self.code!r}")
        if self.script is not None:
            if not _SCRIPT_RE.match(self.script):
                raise ValueError(f"script must be 4 ASCII letters: {self.script!r}")
            # normalize to initial-capital rendering (Latn, Cyrl, ...)
            object.__setattr__(self, "script", self.script.capitalize())

    @classmethod
    def parse(cls, text: str) -> "LanguageTag":
        text = text.strip()
        if "_" in text:
            code, script = text.split("_", 1)
            return cls(code.lower(), script)
        return cls(text.lower())

    def render(self) -> str:
        return f"{self.code}_{self.script}" if self.script else self.code

    def __str__(self) -> str:
        return self.render()


class TaskKind(Enum):
    NLI = "NLI"
    TC = "TC"
    NER = "NER"

    @property
    def token_level(self) -> bool:
        return self is TaskKind.NER


class Provenance(Enum):
    CLEAN = "clean"
    TRANSLATED = "translated"
    ROUNDTRIP = "roundtrip"


class Split(Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


@dataclass(frozen=True)
class SequenceInstance:
    """One sequence-classification example (one or two texts plus a label)."""

    id: str
    text_a: str
    label: str
    language: LanguageTag
    text_b: Optional[str] = None
    provenance: Provenance = Provenance.CLEAN
    pivot: Optional[LanguageTag] = None


def check_bio(tags: Sequence[str]) -> None:
    """Raise InvalidTag unless ``tags`` is a well-formed BIO sequence."""
    prev_type: Optional[str] = None
    for i, tag in enumerate(tags):
        if not _TAG_RE.match(tag):
            raise InvalidTag(f"position {i}: not O/B-X/I-X: {tag!r}")
        if tag == "O":
            prev_type = None
        else:
            marker, etype = tag.split("-", 1)
            if marker == "I" and prev_type != etype:
                raise InvalidTag(f"position {i}: I-{etype} not preceded by B-{etype}/I-{etype}")
            prev_type = etype


def is_valid_bio(tags: Sequence[str]) -> bool:
    try:
        check_bio(tags)
    except InvalidTag:
        return False
    return True


def repair_iob1(tags: Sequence[str]) -> tuple[str, ...]:
    """Normalize an IOB1 sequence to BIO (entity-initial I-X becomes B-X)."""
    out: list[str] = []
    prev_type: Optional[str] = None
    for tag in tags:
        if tag == "O":
            out.append(tag)
            prev_type = None
            continue
        marker, etype = tag.split("-", 1)
        if marker == "I" and prev_type != etype:
            out.append(f"B-{etype}")
        else:
            out.append(tag)
        prev_type = etype
    return tuple(out)


@dataclass(frozen=True)
class TokenInstance:
    """One token-level example: pre-tokenized tokens with BIO tags."""

    id: str
    tokens: tuple[str, ...]
    tags: tuple[str, ...]
    language: LanguageTag
    provenance: Provenance = Provenance.CLEAN
    pivot: Optional[LanguageTag] = None

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tags", tuple(self.tags))
        if len(self.tokens) != len(self.tags) or len(self.tokens) < 1:
            raise ValueError(
                f"instance {self.id}: need equal, nonzero token/tag counts "
                f"({len(self.tokens)} vs {len(self.tags)})"
            )
        check_bio(self.tags)

    @property
    def entity_types(self) -> set[str]:
        return {t.split("-", 1)[1] for t in self.tags if t != "O"}


Instance = Union[SequenceInstance, TokenInstance]


@dataclass(frozen=True)
class Dataset:
    """An ordered, immutable collection of instances sharing one task."""

    task: TaskKind
    label_set: tuple[str, ...]
    instances: tuple[Instance, ...]
    split: Split = Split.TRAIN

    def __post_init__(self):
        object.__setattr__(self, "label_set", tuple(self.label_set))
        object.__setattr__(self, "instances", tuple(self.instances))
        if len(set(self.label_set)) != len(self.label_set):
            raise ValueError("label_set contains duplicates")
        ids = [inst.id for inst in self.instances]
        if len(set(ids)) != len(ids):
            raise ValueError("instance ids are not unique within the split")
        labels = set(self.label_set)
        for inst in self.instances:
            if self.task is TaskKind.NER:
                if not isinstance(inst, TokenInstance):
                    raise ValueError(f"instance {inst.id}: NER dataset needs TokenInstance")
                extra = inst.entity_types - labels
                if extra:
                    raise ValueError(f"instance {inst.id}: entity types outside label_set: {extra}")
            else:
                if not isinstance(inst, SequenceInstance):
                    raise ValueError(f"instance {inst.id}: sequence dataset needs SequenceInstance")
                if inst.label not in labels:
                    raise ValueError(f"instance {inst.id}: label {inst.label!r} outside label_set")
                has_b = inst.text_b is not None
                if self.task is TaskKind.NLI and not has_b:
                    raise ValueError(f"instance {inst.id}: NLI needs text_b")
                if self.task is TaskKind.TC and has_b:
                    raise ValueError(f"instance {inst.id}: TC must not carry text_b")

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self) -> Iterator[Instance]:
        return iter(self.instances)

    def with_instances(self, instances: Iterable[Instance]) -> "Dataset":
        return replace(self, instances=tuple(instances))

    def with_split(self, split: Split) -> "Dataset":
        return replace(self, split=split)


def pretend_language(dataset: Dataset, language: LanguageTag) -> Dataset:
    """Relabel every instance's language (MT proxying for unsupported
    languages submits text under the closest supported language's tag)."""
    return dataset.with_instances(
        replace(inst, language=language) for inst in dataset.instances)


# --- CoNLL ------------------------------------------------------------------

def parse_conll(text: str, column: int, *,
                language: LanguageTag = LanguageTag("eng", "Latn"),
                split: Split = Split.TRAIN) -> Dataset:
    """Parse CoNLL column format into a token-level dataset.

    Sentences are blank-line separated; tokens come from column 0 and tags
    from ``column``. IOB1 input is repaired to BIO. ``-DOCSTART-`` blocks
    are skipped. The label set is the distinct entity types in file order.
    """
    sentences: list[tuple[tuple[str, ...], tuple[str, ...]]] = []
    tokens: list[str] = []
    tags: list[str] = []

    def flush():
        if tokens:
            if tokens[0] == "-DOCSTART-":
                tokens.clear()
                tags.clear()
                return
            sentences.append((tuple(tokens), repair_iob1(tags)))
            tokens.clear()
            tags.clear()

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line:
            flush()
            continue
        cols = line.split()
        if len(cols) <= column:
            raise RaggedLine(lineno, raw, column + 1)
        tag = cols[column]
        if not _TAG_RE.match(tag):
            raise InvalidTag(f"line {lineno}: not O/B-X/I-X: {tag!r}")
        tokens.append(cols[0])
        tags.append(tag)
    flush()

    if not sentences:
        raise EmptyInput("no sentences found")

    label_set: list[str] = []
    for _, sent_tags in sentences:
        for tag in sent_tags:
            if tag != "O":
                etype = tag.split("-", 1)[1]
                if etype not in label_set:
                    label_set.append(etype)

    instances = tuple(
        TokenInstance(id=str(i), tokens=toks, tags=tgs, language=language)
        for i, (toks, tgs) in enumerate(sentences)
    )
    return Dataset(TaskKind.NER, tuple(label_set), instances, split)


def write_conll(dataset: Dataset) -> str:
    """Serialize a token-level dataset as two-column CoNLL (token, tag).

    ``parse_conll(write_conll(d), column=1)`` reproduces ``d`` when ids are
    the default sequential ones.
    """
    if dataset.task is not TaskKind.NER:
        raise ValueError("write_conll needs a NER dataset")
    blocks = []
    for inst in dataset.instances:
        blocks.append("\n".join(f"{tok} {tag}" for tok, tag in zip(inst.tokens, inst.tags)))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


# --- TSV --------------------------------------------------------------------

@dataclass(frozen=True)
class TsvSchema:
    """Column mapping for sequence-task TSV files.

    ``id_col`` may be None (sequential ids are generated). ``text_b_col``
    must be set for NLI and unset for TC.
    """

    text_a_col: int
    label_col: int
    text_b_col: Optional[int] = None
    id_col: Optional[int] = None
    has_header: bool = False


def parse_sequence_tsv(text: str, schema: TsvSchema, task: TaskKind, *,
                       label_set: Optional[Sequence[str]] = None,
                       language: LanguageTag = LanguageTag("eng", "Latn"),
                       split: Split = Split.TRAIN) -> Dataset:
    """Parse a TSV file into a sequence-task dataset.

    With ``label_set`` given, rows whose label falls outside it raise
    LabelOutsideSet; otherwise the label set is distinct labels in
    first-seen order.
    """
    if task is TaskKind.NER:
        raise ValueError("parse_sequence_tsv handles sequence tasks only")
    if (task is TaskKind.NLI) != (schema.text_b_col is not None):
        raise MissingColumn("NLI needs text_b_col; TC must not set it")

    rows = [r for r in text.split("\n") if r.strip() != ""]
    if schema.has_header and rows:
        rows = rows[1:]
    if not rows:
        raise EmptyInput("no data rows found")

    closed = tuple(label_set) if label_set is not None else None
    seen: list[str] = []
    instances: list[SequenceInstance] = []
    for i, row in enumerate(rows):
        cols = row.split("\t")

        def cell(idx: Optional[int], name: str) -> Optional[str]:
            if idx is None:
                return None
            if idx >= len(cols):
                raise MissingColumn(f"row {i}: no column {idx} for {name!r}")
            return cols[idx]

        label = cell(schema.label_col, "label")
        assert label is not None
        if closed is not None and label not in closed:
            raise LabelOutsideSet(f"row {i}: label {label!r} not in {closed}")
        if label not in seen:
            seen.append(label)
        rid = cell(schema.id_col, "id") or str(i)
        instances.append(SequenceInstance(
            id=rid,
            text_a=cell(schema.text_a_col, "text_a") or "",
            text_b=cell(schema.text_b_col, "text_b"),
            label=label,
            language=language,
        ))
    return Dataset(task, closed if closed is not None else tuple(seen),
                   tuple(instances), split)


def write_sequence_tsv(dataset: Dataset, schema: TsvSchema) -> str:
    """Serialize a sequence dataset to TSV following ``schema``'s columns."""
    if dataset.task is TaskKind.NER:
        raise ValueError("write_sequence_tsv handles sequence tasks only")
    width = 1 + max(c for c in (schema.text_a_col, schema.label_col,
                                schema.text_b_col or 0, schema.id_col or 0))
    lines = []
    if schema.has_header:
        header = [""] * width
        header[schema.text_a_col] = "text_a"
        header[schema.label_col] = "label"
        if schema.text_b_col is not None:
            header[schema.text_b_col] = "text_b"
        if schema.id_col is not None:
            header[schema.id_col] = "id"
        lines.append("\t".join(header))
    for inst in dataset.instances:
        assert isinstance(inst, SequenceInstance)
        row = [""] * width
        row[schema.text_a_col] = inst.text_a
        row[schema.label_col] = inst.label
        if schema.text_b_col is not None:
            row[schema.text_b_col] = inst.text_b or ""
        if schema.id_col is not None:
            row[schema.id_col] = inst.id
        lines.append("\t".join(row))
    return "\n".join(lines) + ("\n" if lines else "")


# --- JSONL ------------------------------------------------------------------

_SEQ_FIELDS = ("id", "task", "language", "script", "provenance", "pivot",
               "text_a", "text_b", "label")
_NER_FIELDS = ("id", "task", "language", "script", "provenance", "pivot",
               "tokens", "tags")


def _instance_to_obj(task: TaskKind, inst: Instance) -> dict:
    obj: dict = {
        "id": inst.id,
        "task": task.value,
        "language": inst.language.code,
        "script": inst.language.script,
        "provenance": inst.provenance.value,
        "pivot": inst.pivot.render() if inst.pivot else None,
    }
    if isinstance(inst, TokenInstance):
        obj["tokens"] = list(inst.tokens)
        obj["tags"] = list(inst.tags)
    else:
        obj["text_a"] = inst.text_a
        obj["text_b"] = inst.text_b
        obj["label"] = inst.label
    return obj


def write_jsonl(dataset: Dataset) -> str:
    """Serialize a dataset as one UTF-8 JSON object per LF-terminated line."""
    lines = [json.dumps(_instance_to_obj(dataset.task, inst), ensure_ascii=False,
                        sort_keys=True)
             for inst in dataset.instances]
    return "".join(line + "\n" for line in lines)


def _instance_from_obj(obj: Mapping, lineno: int) -> tuple[TaskKind, Instance]:
    try:
        task = TaskKind(obj["task"])
        language = LanguageTag(obj["language"], obj.get("script"))
        provenance = Provenance(obj["provenance"])
        pivot = LanguageTag.parse(obj["pivot"]) if obj.get("pivot") else None
        if task is TaskKind.NER:
            for key in _NER_FIELDS:
                if key not in obj:
                    raise KeyError(key)
            inst: Instance = TokenInstance(
                id=obj["id"], tokens=tuple(obj["tokens"]), tags=tuple(obj["tags"]),
                language=language, provenance=provenance, pivot=pivot)
        else:
            for key in _SEQ_FIELDS:
                if key not in obj:
                    raise KeyError(key)
            inst = SequenceInstance(
                id=obj["id"], text_a=obj["text_a"], text_b=obj["text_b"],
                label=obj["label"], language=language, provenance=provenance,
                pivot=pivot)
    except (KeyError, TypeError, ValueError, InvalidTag) as exc:
        raise MalformedLine(lineno, f"{type(exc).__name__}: {exc}") from exc
    return task, inst


def dataset_to_json(dataset: Dataset) -> dict:
    """Whole-dataset JSON object (task, label set, split, instances)."""
    return {
        "task": dataset.task.value,
        "label_set": list(dataset.label_set),
        "split": dataset.split.value,
        "instances": [_instance_to_obj(dataset.task, inst) for inst in dataset.instances],
    }


def dataset_from_json(obj: Mapping) -> Dataset:
    task = TaskKind(obj["task"])
    instances = []
    for lineno, inst_obj in enumerate(obj["instances"], start=1):
        line_task, inst = _instance_from_obj(inst_obj, lineno)
        if line_task is not task:
            raise MalformedLine(lineno, f"task {line_task.value} conflicts with {task.value}")
        instances.append(inst)
    return Dataset(task, tuple(obj["label_set"]), tuple(instances),
                   Split(obj.get("split", "train")))


def read_jsonl(text: str, *, task: Optional[TaskKind] = None,
               label_set: Optional[Sequence[str]] = None,
               split: Split = Split.TRAIN) -> Dataset:
    """Parse JSONL produced by :func:`write_jsonl`.

    ``task``/``label_set``/``split`` travel out of band (the run manifest
    records them); when omitted the task is inferred from the lines and the
    label set is rebuilt in first-seen order.
    """
    instances: list[Instance] = []
    inferred: Optional[TaskKind] = task
    for lineno, raw in enumerate(text.split("\n"), start=1):
        if raw.strip() == "":
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise MalformedLine(lineno, f"bad JSON: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise MalformedLine(lineno, "line is not a JSON object")
        line_task, inst = _instance_from_obj(obj, lineno)
        if inferred is None:
            inferred = line_task
        elif line_task is not inferred:
            raise MalformedLine(lineno, f"task {line_task.value} conflicts with {inferred.value}")
        instances.append(inst)

    if inferred is None:
        inferred = TaskKind.TC
    if label_set is None:
        seen: list[str] = []
        for inst in instances:
            if isinstance(inst, TokenInstance):
                for tag in inst.tags:
                    if tag != "O":
                        etype = tag.split("-", 1)[1]
                        if etype not in seen:
                            seen.append(etype)
            else:
                if inst.label not in seen:
                    seen.append(inst.label)
        label_set = tuple(seen)
    return Dataset(inferred, tuple(label_set), tuple(instances), split)
