from .sep_cma_es import SepCmaState, sep_cma_init, sep_cma_ask, sep_cma_tell
from .diversity_ga import Archive, ArchiveMember, ga_illuminate
from .enumeration import EnumerationConfig, EnumerationReport, RuleRecord, enumerate_rules

__all__ = [
    "SepCmaState",
    "sep_cma_init",
    "sep_cma_ask",
    "sep_cma_tell",
    "Archive",
    "ArchiveMember",
    "ga_illuminate",
    "EnumerationConfig",
    "EnumerationReport",
    "RuleRecord",
    "enumerate_rules",
]
