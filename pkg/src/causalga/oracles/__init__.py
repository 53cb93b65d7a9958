from ..constraints import PairPlausibility
from .base import NullOracle, OracleContext, RandomOracle, SuggestionOracle, call_safely
from .knowledge import KnowledgeOracle
from .llm import LLMConfig, LLMOracle
from .statistical import CIInitOracle, MIInitOracle


def knowledge_oracle(path_or_constraints) -> KnowledgeOracle:
    if hasattr(path_or_constraints, "constraints"):
        return KnowledgeOracle(path_or_constraints)
    return KnowledgeOracle.from_file(path_or_constraints)


def llm_oracle(config: LLMConfig, context: OracleContext | None = None, transport=None) -> LLMOracle:
    return LLMOracle(config, context, transport)


def ci_init_oracle(ds, alpha: float = 0.05) -> CIInitOracle:
    return CIInitOracle(ds, alpha)


def mi_init_oracle(ds, quantile: float = 0.5) -> MIInitOracle:
    return MIInitOracle(ds, quantile)


__all__ = [
    "PairPlausibility", "SuggestionOracle", "NullOracle", "RandomOracle", "OracleContext", "KnowledgeOracle",
    "LLMOracle", "LLMConfig", "CIInitOracle", "MIInitOracle", "call_safely", "knowledge_oracle", "llm_oracle",
    "ci_init_oracle", "mi_init_oracle",
]
