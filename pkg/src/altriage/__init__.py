"""Active-learning workbench for rare-class triage-note classification."""

from .records import (
    FilterRuleSet,
    Label,
    LabelSource,
    Pool,
    RecordStore,
    Sex,
    TriageRecord,
    default_rules,
    keyword_filter,
    pattern_match,
    preprocess,
)

__version__ = "0.1.0"

__all__ = [
    "FilterRuleSet",
    "Label",
    "LabelSource",
    "Pool",
    "RecordStore",
    "Sex",
    "TriageRecord",
    "default_rules",
    "keyword_filter",
    "pattern_match",
    "preprocess",
    "__version__",
]
