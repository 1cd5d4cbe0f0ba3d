"""Deterministic synthetic corpora for desk-scale experiments.

Two pseudo-languages with disjoint alphabets and an exact word-for-word
lexicon between them: character-n-gram models share no features across the
pair, so zero-shot transfer is chance-level while translation-based
strategies can actually help. Everything is seeded and reproducible.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .corpus import (
    Dataset,
    LanguageTag,
    SequenceInstance,
    Split,
    TaskKind,
    TokenInstance,
)
from .translate import DictionaryTranslator

# Disjoint letter inventories keep char n-grams from leaking across the pair.
_SRC_CONSONANTS = "bcdfg"
_SRC_VOWELS = "aei"
_TGT_CONSONANTS = "klmnp"
_TGT_VOWELS = "ouy"


def _make_word(rng: random.Random, consonants: str, vowels: str,
               syllables: int) -> str:
    return "".join(rng.choice(consonants) + rng.choice(vowels)
                   for _ in range(syllables))


def _make_vocabulary(rng: random.Random, size: int, consonants: str,
                     vowels: str) -> list[str]:
    words: list[str] = []
    seen = set()
    while len(words) < size:
        word = _make_word(rng, consonants, vowels, rng.randint(2, 4))
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


@dataclass(frozen=True)
class SentimentWorld:
    """A two-language sentiment task with an exact bilingual lexicon."""

    source: LanguageTag
    target: LanguageTag
    lexicon: Mapping[str, str]  # source word -> target word
    positive: tuple[str, ...]
    negative: tuple[str, ...]
    neutral: tuple[str, ...]

    def reverse_lexicon(self) -> dict[str, str]:
        return {tgt: src for src, tgt in self.lexicon.items()}

    def translator(self) -> DictionaryTranslator:
        """A dictionary backend covering both directions of the pair."""
        return DictionaryTranslator({
            (self.source, self.target): dict(self.lexicon),
            (self.target, self.source): self.reverse_lexicon(),
        })

    def to_target(self, text: str) -> str:
        return " ".join(self.lexicon[w] for w in text.split(" "))


def build_sentiment_world(source: LanguageTag, target: LanguageTag,
                          seed: int = 0, class_words: int = 8,
                          neutral_words: int = 16) -> SentimentWorld:
    rng = random.Random(f"sentiment-world:{seed}")
    vocab = _make_vocabulary(rng, 2 * class_words + neutral_words,
                             _SRC_CONSONANTS, _SRC_VOWELS)
    positive = tuple(vocab[:class_words])
    negative = tuple(vocab[class_words:2 * class_words])
    neutral = tuple(vocab[2 * class_words:])
    targets = _make_vocabulary(rng, len(vocab), _TGT_CONSONANTS, _TGT_VOWELS)
    lexicon = dict(zip(vocab, targets))
    return SentimentWorld(source, target, lexicon, positive, negative, neutral)


def sample_sentiment_dataset(world: SentimentWorld, n: int, seed: int, *,
                             split: Split = Split.TRAIN,
                             language: Optional[LanguageTag] = None,
                             id_prefix: str = "s") -> Dataset:
    """Sample labeled sentences; ``language`` other than the source emits
    the lexicon image of each sentence (gold target-language data)."""
    rng = random.Random(f"sentiment-data:{seed}:{split.value}")
    language = language or world.source
    instances = []
    for i in range(n):
        label = "pos" if i % 2 == 0 else "neg"
        cue_pool = world.positive if label == "pos" else world.negative
        cues = rng.sample(cue_pool, rng.randint(1, 2))
        fillers = rng.sample(world.neutral, rng.randint(2, 4))
        words = cues + fillers
        rng.shuffle(words)
        text = " ".join(words)
        if language == world.target:
            text = world.to_target(text)
        elif language != world.source:
            raise ValueError(f"{language} is not part of this world")
        instances.append(SequenceInstance(
            id=f"{id_prefix}{i}", text_a=text, label=label, language=language))
    return Dataset(TaskKind.TC, ("pos", "neg"), tuple(instances), split)


def sample_nli_dataset(world: SentimentWorld, n: int, seed: int, *,
                       split: Split = Split.TRAIN,
                       language: Optional[LanguageTag] = None,
                       id_prefix: str = "p") -> Dataset:
    """Two-text inference-style task over the same lexicon: the hypothesis
    carries the class cue (entail/contradict pools reuse the sentiment
    pools), the premise is neutral context. Learnable from hypothesis
    features alone, so the desk models can fit it."""
    rng = random.Random(f"nli-data:{seed}:{split.value}")
    language = language or world.source
    instances = []
    for i in range(n):
        label = "entail" if i % 2 == 0 else "contradict"
        cue_pool = world.positive if label == "entail" else world.negative
        premise_words = rng.sample(world.neutral, rng.randint(3, 5))
        hypothesis_words = rng.sample(cue_pool, rng.randint(1, 2)) \
            + rng.sample(world.neutral, rng.randint(1, 2))
        rng.shuffle(hypothesis_words)
        text_a = " ".join(premise_words)
        text_b = " ".join(hypothesis_words)
        if language == world.target:
            text_a, text_b = world.to_target(text_a), world.to_target(text_b)
        elif language != world.source:
            raise ValueError(f"{language} is not part of this world")
        instances.append(SequenceInstance(
            id=f"{id_prefix}{i}", text_a=text_a, text_b=text_b, label=label,
            language=language))
    return Dataset(TaskKind.NLI, ("entail", "contradict"), tuple(instances), split)


def sample_ner_dataset(n: int, seed: int, *,
                       language: LanguageTag = LanguageTag("eng", "Latn"),
                       entity_types: Sequence[str] = ("PER", "LOC"),
                       min_len: int = 3, max_len: int = 8,
                       single_token_entities: bool = False,
                       split: Split = Split.TRAIN,
                       id_prefix: str = "n") -> Dataset:
    """Random token-level data with valid BIO tags.

    ``single_token_entities`` gives every sentence exactly one labeled
    token, which makes instance retention under link dropping a clean
    Bernoulli event.
    """
    rng = random.Random(f"ner-data:{seed}")
    vocab = _make_vocabulary(rng, 40, _SRC_CONSONANTS, _SRC_VOWELS)
    instances = []
    for i in range(n):
        length = rng.randint(min_len, max_len)
        tokens = [rng.choice(vocab) for _ in range(length)]
        tags = ["O"] * length
        if single_token_entities:
            pos = rng.randrange(length)
            tags[pos] = f"B-{rng.choice(entity_types)}"
        else:
            cursor = 0
            while cursor < length:
                if rng.random() < 0.3:
                    etype = rng.choice(entity_types)
                    span_len = min(rng.randint(1, 3), length - cursor)
                    tags[cursor] = f"B-{etype}"
                    for k in range(1, span_len):
                        tags[cursor + k] = f"I-{etype}"
                    cursor += span_len + 1
                else:
                    cursor += 1
        instances.append(TokenInstance(
            id=f"{id_prefix}{i}", tokens=tuple(tokens), tags=tuple(tags),
            language=language))
    return Dataset(TaskKind.NER, tuple(entity_types), tuple(instances), split)
