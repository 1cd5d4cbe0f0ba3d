"""Language inventories for the three low-resource benchmarks the toolkit
targets (AmericasNLI, NusaX sentiment, MasakhaNER 2.0), split by MT
support, plus the reference closest-supported fallback for each
MT-unsupported language.

Codes are ISO-639-3 lowercase. The fallback pairs are the documented
choices for these benchmarks and serve as a data-dependent check for
typology-based proxy selection: given a real URIEL vector export,
``closest_supported`` should reproduce them (deviations are reported, not
hidden, since the exact URIEL feature subset is a configuration knob).
"""

from __future__ import annotations

from .corpus import LanguageTag


def _tags(codes: str) -> tuple[LanguageTag, ...]:
    return tuple(LanguageTag(code) for code in codes.split())


AMERICASNLI_SUPPORTED = _tags("aym grn quy")
AMERICASNLI_UNSUPPORTED = _tags("cni bzd nah oto tar shp hch")

NUSAX_SUPPORTED = _tags("ace ban bjn bug min jav sun")
NUSAX_UNSUPPORTED = _tags("mad nij bbc")

MASAKHANER_SUPPORTED = _tags(
    "bam ewe fon hau ibo kin lug luo mos nya sna swa tsn twi wol xho yor zul")
MASAKHANER_UNSUPPORTED = _tags("bbj pcm")

BENCHMARK_GROUPS: dict[str, tuple[tuple[LanguageTag, ...], tuple[LanguageTag, ...]]] = {
    "americasnli": (AMERICASNLI_SUPPORTED, AMERICASNLI_UNSUPPORTED),
    "nusax": (NUSAX_SUPPORTED, NUSAX_UNSUPPORTED),
    "masakhaner": (MASAKHANER_SUPPORTED, MASAKHANER_UNSUPPORTED),
}

# unsupported target -> documented closest supported language (per benchmark)
CLOSEST_FALLBACKS: dict[LanguageTag, LanguageTag] = {
    LanguageTag("cni"): LanguageTag("aym"),
    LanguageTag("bzd"): LanguageTag("quy"),
    LanguageTag("nah"): LanguageTag("grn"),
    LanguageTag("oto"): LanguageTag("grn"),
    LanguageTag("tar"): LanguageTag("aym"),
    LanguageTag("shp"): LanguageTag("quy"),
    LanguageTag("hch"): LanguageTag("grn"),
    LanguageTag("mad"): LanguageTag("sun"),
    LanguageTag("nij"): LanguageTag("sun"),
    LanguageTag("bbc"): LanguageTag("bug"),
    LanguageTag("bbj"): LanguageTag("swa"),
    LanguageTag("pcm"): LanguageTag("hau"),
}


def benchmark_of(target: LanguageTag) -> str:
    for name, (supported, unsupported) in BENCHMARK_GROUPS.items():
        if target in supported or target in unsupported:
            return name
    raise KeyError(f"{target} is not part of a known benchmark group")


def all_benchmark_languages() -> tuple[LanguageTag, ...]:
    out: list[LanguageTag] = []
    for supported, unsupported in BENCHMARK_GROUPS.values():
        out.extend(supported)
        out.extend(unsupported)
    return tuple(out)
