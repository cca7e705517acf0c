"""Agent roles, prompt templates and per-agent model settings."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Mapping

__all__ = [
    "DEFAULT_MODEL_IDS",
    "PILOT_ROLES",
    "AgentRole",
    "AgentSpec",
    "MissingBinding",
    "NoBuiltinTemplate",
    "PilotConfig",
    "PromptTemplate",
    "TemplateError",
    "UnknownPlaceholder",
    "builtin_template",
    "builtin_templates",
    "language_name",
    "pilot_agent_set",
    "render_prompt",
]

TEMPERATURE_RANGE = (0.0, 2.0)


class AgentRole(str, Enum):
    TRANSLATOR = "translator"
    ADEQUACY_REVIEWER = "adequacy_reviewer"
    FLUENCY_REVIEWER = "fluency_reviewer"
    EDITOR = "editor"
    ORCHESTRATOR = "orchestrator"
    WORKER = "worker"
    EVALUATOR = "evaluator"
    OPTIMIZER = "optimizer"
    GENERATOR = "generator"


PILOT_ROLES = (
    AgentRole.TRANSLATOR,
    AgentRole.ADEQUACY_REVIEWER,
    AgentRole.FLUENCY_REVIEWER,
    AgentRole.EDITOR,
)


class TemplateError(ValueError):
    pass


class MissingBinding(TemplateError):
    def __init__(self, name: str):
        super().__init__(f"no binding for placeholder [{name}]")
        self.name = name


class UnknownPlaceholder(TemplateError):
    def __init__(self, names: list[str]):
        super().__init__(f"bindings name unknown placeholders: {', '.join(sorted(names))}")
        self.names = names


class NoBuiltinTemplate(KeyError):
    pass


# "[[" and "]]" are escaped literal brackets; anything else in single brackets is a name.
_TOKEN = re.compile(r"\[\[|\]\]|\[([^\[\]\n]+)\]")


def bracketed_names(body: str) -> frozenset[str]:
    return frozenset(m.group(1) for m in _TOKEN.finditer(body) if m.group(1) is not None)


@dataclass(frozen=True)
class PromptTemplate:
    """A role instruction with bracketed placeholders such as ``[target language]``.

    ``literals`` lists bracketed names that are part of the instruction text
    itself (the reviewers' ``[issue]``/``[fix]`` output grammar) and are
    never substituted.
    """

    role: AgentRole
    body: str
    placeholders: frozenset[str]
    literals: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        found = bracketed_names(self.body)
        if self.placeholders & self.literals:
            raise TemplateError("a name cannot be both placeholder and literal")
        if found != self.placeholders | self.literals:
            raise TemplateError(
                f"declared names {sorted(self.placeholders | self.literals)} "
                f"do not match bracketed names {sorted(found)}"
            )

    @classmethod
    def inline(cls, role: AgentRole | str, body: str) -> PromptTemplate:
        """Template whose placeholder set is every bracketed name in ``body``."""
        return cls(AgentRole(role), body, bracketed_names(body))


def render_prompt(
    template: PromptTemplate, bindings: Mapping[str, str], strict: bool = True
) -> str:
    if strict:
        unknown = [k for k in bindings if k not in template.placeholders]
        if unknown:
            raise UnknownPlaceholder(unknown)
    for name in sorted(template.placeholders):
        if name not in bindings:
            raise MissingBinding(name)

    def sub(m: re.Match[str]) -> str:
        tok = m.group(0)
        if tok == "[[":
            return "["
        if tok == "]]":
            return "]"
        name = m.group(1)
        if name in template.placeholders:
            return bindings[name]
        return tok

    return _TOKEN.sub(sub, template.body)


_SRC, _TGT = "source language", "target language"

_TRANSLATOR = (
    "You are a senior legal translator specializing in Intellectual Property documents.\n"
    "Translate the provided legal text from [source language] to [target language] with "
    "perfect accuracy, legal terminology consistency, and publication-ready quality.\n"
    "Return ONLY the translation with no additional text, spaces, or commentary."
)
_ADEQUACY = (
    "You are an Adequacy Reviewer specializing in [source language] to [target language] "
    "translations.\n"
    "Strict instructions: Review the current translation for adequacy issues (such as "
    "mistranslations, omissions, or untranslated segments) and output only a list of "
    "suggestions as plain text bullet points.\n"
    "Maintain original style and format.\n"
    "Each suggestion must be formatted exactly as: ERROR: [issue] → SUGGESTION: [fix].\n"
    'If no corrections are needed, output "Accuracy: No corrections needed".\n'
    "Do not include any additional text, commentary, or the corrected translation—only the "
    "bullet-point list of suggestions."
)
_FLUENCY = (
    "You are a Fluency Reviewer specializing in [source language] to [target language] "
    "translations.\n"
    "Strict instructions: Review the current translation for fluency issues (including "
    "grammar, spelling, natural flow, and cultural adaptation) and output only a list of "
    "suggestions as plain text bullet points.\n"
    "Focus only on: Grammar/spelling errors; Natural flow in [target language]; Cultural "
    "adaptation.\n"
    "Each suggestion must be formatted exactly as: ERROR: [issue] → SUGGESTION: [fix].\n"
    'If no corrections are needed, output "Fluency: No corrections needed".\n'
    "Do not include any additional text or commentary—only the bullet-point list of "
    "suggestions."
)
_EDITOR = (
    "You are a senior legal editor specializing in legal documents. Your task is to "
    "integrate the first translation with the accuracy and fluency suggestions to produce "
    "the final polished translation.\n"
    "Strict instructions: Output only the final translation as a single plain text string "
    "with no additional commentary, labels, or formatting.\n"
    "Maintain legal accuracy and preserve the document’s technical structure."
)

_LANGS = frozenset({_SRC, _TGT})
_GRAMMAR = frozenset({"issue", "fix"})

_BUILTINS = MappingProxyType(
    {
        AgentRole.TRANSLATOR: PromptTemplate(AgentRole.TRANSLATOR, _TRANSLATOR, _LANGS),
        AgentRole.ADEQUACY_REVIEWER: PromptTemplate(
            AgentRole.ADEQUACY_REVIEWER, _ADEQUACY, _LANGS, _GRAMMAR
        ),
        AgentRole.FLUENCY_REVIEWER: PromptTemplate(
            AgentRole.FLUENCY_REVIEWER, _FLUENCY, _LANGS, _GRAMMAR
        ),
        AgentRole.EDITOR: PromptTemplate(AgentRole.EDITOR, _EDITOR, frozenset()),
    }
)


def builtin_templates() -> Mapping[AgentRole, PromptTemplate]:
    return _BUILTINS


def builtin_template(role: AgentRole | str) -> PromptTemplate:
    role = AgentRole(role)
    try:
        return _BUILTINS[role]
    except KeyError:
        raise NoBuiltinTemplate(f"no built-in template for role {role.value!r}") from None


@dataclass(frozen=True)
class AgentSpec:
    name: str
    role: AgentRole
    template: PromptTemplate
    model_id: str
    temperature: float
    backend_id: str = "default"

    def __post_init__(self) -> None:
        lo, hi = TEMPERATURE_RANGE
        if not lo <= self.temperature <= hi:
            raise ValueError(
                f"agent {self.name!r}: temperature {self.temperature} out of range [{lo}, {hi}]"
            )
        if self.template.role != self.role:
            raise ValueError(
                f"agent {self.name!r}: template role {self.template.role.value} "
                f"does not match agent role {self.role.value}"
            )
        if not self.name:
            raise ValueError("agent name must be non-empty")


class PilotConfig(str, Enum):
    """The four multi-agent configurations of the pilot study."""

    BIG13 = "Big13"
    BIG13_05 = "Big13_05"
    SMALL13 = "Small13"
    SMALL13_05 = "Small13_05"

    @property
    def size_class(self) -> str:
        return "big" if self.value.startswith("Big") else "small"

    @property
    def split_temperature(self) -> bool:
        return self.value.endswith("_05")


DEFAULT_MODEL_IDS = MappingProxyType(
    {"big": "deepseek/deepseek-r1", "small": "openai/gpt-4o-mini-2024-07-18"}
)

PILOT_NAMES = {
    AgentRole.TRANSLATOR: "translator",
    AgentRole.ADEQUACY_REVIEWER: "adequacy",
    AgentRole.FLUENCY_REVIEWER: "fluency",
    AgentRole.EDITOR: "editor",
}

CREATIVE_TEMPERATURE = 1.3
REVIEW_TEMPERATURE = 0.5


def pilot_agent_set(
    config: PilotConfig | str,
    model_ids: Mapping[str, str] = DEFAULT_MODEL_IDS,
    backend_id: str = "default",
) -> list[AgentSpec]:
    """Translator, adequacy reviewer, fluency reviewer and editor for a pilot config.

    Split configurations run the two reviewers at 0.5 and the rest at 1.3;
    uniform ones run everything at 1.3.
    """
    try:
        config = PilotConfig(config)
    except ValueError:
        raise ValueError(f"unknown pilot configuration {config!r}") from None
    model = model_ids.get(config.size_class)
    if not model:
        raise ValueError(f"no model id for size class {config.size_class!r}")
    specs = []
    for role in PILOT_ROLES:
        reviewer = role in (AgentRole.ADEQUACY_REVIEWER, AgentRole.FLUENCY_REVIEWER)
        temp = REVIEW_TEMPERATURE if reviewer and config.split_temperature else CREATIVE_TEMPERATURE
        specs.append(
            AgentSpec(PILOT_NAMES[role], role, builtin_template(role), model, temp, backend_id)
        )
    return specs


_LANGUAGE_NAMES = {
    "ar": "Arabic",
    "ca": "Catalan",
    "de": "German",
    "en": "English",
    "es": "Spanish",
    "fr": "French",
    "ga": "Irish",
    "it": "Italian",
    "ja": "Japanese",
    "ko": "Korean",
    "nl": "Dutch",
    "pl": "Polish",
    "pt": "Portuguese",
    "ru": "Russian",
    "zh": "Chinese",
}


def language_name(tag: str) -> str:
    """English display name for a language tag; unknown tags pass through."""
    primary = tag.replace("_", "-").split("-")[0].lower()
    return _LANGUAGE_NAMES.get(primary, tag)
