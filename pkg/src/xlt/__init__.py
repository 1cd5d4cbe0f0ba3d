"""Translation-based cross-lingual transfer: strategy compilation, label
projection, typological fallback, desk-scale models, and MT-based model
selection behind pluggable translation/alignment/model backends.
"""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    Dataset,
    LanguageTag,
    Provenance,
    SequenceInstance,
    Split,
    TaskKind,
    TokenInstance,
)
from .strategy import (  # noqa: F401
    Family,
    Resources,
    Schedule,
    StrategySpec,
    Variant,
    compile_strategy,
)
from .translate import DecodingConfig  # noqa: F401
