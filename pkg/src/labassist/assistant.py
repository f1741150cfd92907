"""Answer pipeline: anomaly screen, grounding gate, generation, validation.

Order of authority for every query:

1. anomaly screen - anomaly queries get the fixed anomaly response and the
   chat provider is never called;
2. grounding gate - ungrounded retrieval queries get the fixed pattern B
   refusal, again with no provider call;
3. generation - provider output must pass validate_response; malformed
   drafts are regenerated with the violation list appended as a corrective
   note, and when all attempts stay malformed, retrieval mode falls back to
   pattern B while instructional mode raises AdvisoryValidationFailed.

Every answer carries its refusal classification and retrieval evidence.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import AdvisoryValidationFailed
from .guardrails import (
    FIXED,
    Language,
    Lexicons,
    Pattern,
    RefusalClass,
    ResponseMode,
    ValidationReport,
    classify_refusal,
    detect_anomaly_query,
    detect_language,
    validate_response,
)
from .manuals import ManualCatalog
from .retrieval import (
    Chunk,
    Grounding,
    RetrievalConfig,
    RetrievalHit,
    Retriever,
    grounding_gate,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_REGENERATIONS = 2

RULE_UNKNOWN_REFERENCE = "unknown_reference"


@dataclass(frozen=True)
class PromptTemplates:
    retrieval: str
    instructional: str

    def for_mode(self, mode: ResponseMode) -> str:
        return (
            self.instructional
            if mode is ResponseMode.INSTRUCTIONAL
            else self.retrieval
        )

    def checksums(self) -> dict[str, str]:
        return {
            "retrieval": hashlib.sha256(self.retrieval.encode("utf-8")).hexdigest(),
            "instructional": hashlib.sha256(
                self.instructional.encode("utf-8")
            ).hexdigest(),
        }


def load_templates(template_dir: str | Path | None = None) -> PromptTemplates:
    """Load the system prompt templates from data files (never inlined)."""
    if template_dir is None:
        base = resources.files("labassist").joinpath("prompts")
        return PromptTemplates(
            retrieval=base.joinpath("retrieval_prompt.txt").read_text("utf-8"),
            instructional=base.joinpath("instructional_prompt.txt").read_text("utf-8"),
        )
    root = Path(template_dir)
    return PromptTemplates(
        retrieval=(root / "retrieval_prompt.txt").read_text("utf-8"),
        instructional=(root / "instructional_prompt.txt").read_text("utf-8"),
    )


@dataclass(frozen=True)
class Query:
    text: str
    mode: ResponseMode
    language: Language


@dataclass(frozen=True)
class PromptBundle:
    """What gets sent to the chat provider.

    system_prompt is always one of the two stored templates, unmodified;
    corrective notes on regeneration travel separately.
    """

    system_prompt: str
    context: tuple[str, ...]
    user_text: str

    def user_content(self) -> str:
        return "\n\n".join((*self.context, self.user_text))


@dataclass
class GroundedAnswer:
    body: str
    pattern: Pattern
    refusal: RefusalClass
    language: Language
    mode: ResponseMode
    references: list[tuple[str, list[str]]] = field(default_factory=list)
    hits: list[RetrievalHit] = field(default_factory=list)
    provider_calls: int = 0
    fallback_used: bool = False
    violations: list[str] = field(default_factory=list)


def format_context_block(chunk: Chunk) -> str:
    return f"[{chunk.source_file} Section {chunk.section_id}] {chunk.text}"


def assemble_prompt(
    query: Query, context_chunks: list[Chunk], templates: PromptTemplates
) -> PromptBundle:
    """Compose the provider payload: template, context blocks, user text last."""
    return PromptBundle(
        system_prompt=templates.for_mode(query.mode),
        context=tuple(format_context_block(c) for c in context_chunks),
        user_text=query.text,
    )


class Assistant:
    """Pipeline over one catalog snapshot and a set of providers."""

    def __init__(
        self,
        catalog: ManualCatalog,
        retrieval_config: RetrievalConfig,
        lexicons: Lexicons,
        templates: PromptTemplates | None = None,
        chat=None,
        embedder=None,
        max_regenerations: int = DEFAULT_MAX_REGENERATIONS,
    ):
        self.catalog = catalog
        self.retrieval_config = retrieval_config
        self.lexicons = lexicons
        self.templates = templates or load_templates()
        self.chat = chat
        self.retriever = Retriever(catalog, retrieval_config, embedder=embedder)
        self.max_regenerations = max_regenerations

    # -- fixed responses ----------------------------------------------------

    def _fixed_answer(
        self, body: str, pattern: Pattern, query: Query, hits: list[RetrievalHit],
        fallback_used: bool = False, provider_calls: int = 0,
        violations: list[str] | None = None,
    ) -> GroundedAnswer:
        report = validate_response(body, query.mode, query.language)
        return GroundedAnswer(
            body=body,
            pattern=pattern,
            refusal=classify_refusal(report, body, self.lexicons),
            language=query.language,
            mode=query.mode,
            references=[],
            hits=hits,
            provider_calls=provider_calls,
            fallback_used=fallback_used,
            violations=list(violations or []),
        )

    # -- reference integrity -------------------------------------------------

    def _check_references(self, report: ValidationReport) -> list[str]:
        violations: list[str] = []
        for file_name, section_ids in report.references:
            doc = self.catalog.find_document(file_name)
            if doc is None:
                violations.append(RULE_UNKNOWN_REFERENCE)
                continue
            known = set(doc.section_ids())
            if any(sid not in known for sid in section_ids):
                violations.append(RULE_UNKNOWN_REFERENCE)
        return violations

    # -- context selection ----------------------------------------------------

    def _context_for(self, query: Query) -> tuple[list[RetrievalHit], list[Chunk]]:
        hits = self.retriever.retrieve(query.text)
        if query.mode is ResponseMode.INSTRUCTIONAL:
            if not hits:
                return hits, []
            return hits, self.retriever.document_sections(hits[0].chunk.doc)
        return hits, [h.chunk for h in hits]

    # -- main entry ------------------------------------------------------------

    def answer(self, text: str, mode: ResponseMode = ResponseMode.RETRIEVAL) -> GroundedAnswer:
        language = detect_language(text)
        query = Query(text=text, mode=mode, language=language)

        if detect_anomaly_query(text, language, self.lexicons):
            return self._fixed_answer(
                FIXED.anomaly(language), Pattern.ANOMALY, query, hits=[]
            )

        hits, context_chunks = self._context_for(query)

        if (
            mode is ResponseMode.RETRIEVAL
            and grounding_gate(hits, self.retrieval_config) is Grounding.UNGROUNDED
        ):
            return self._fixed_answer(
                FIXED.pattern_b(language), Pattern.B, query, hits=hits
            )

        bundle = assemble_prompt(query, context_chunks, self.templates)
        return self._generate(query, bundle, hits)

    # -- generation loop --------------------------------------------------------

    def _generate(
        self, query: Query, bundle: PromptBundle, hits: list[RetrievalHit]
    ) -> GroundedAnswer:
        if self.chat is None:
            if query.mode is ResponseMode.INSTRUCTIONAL:
                raise AdvisoryValidationFailed("no chat provider configured")
            return self._no_provider(query, hits)

        provider_calls = 0
        violations: list[str] = []
        corrective: str | None = None
        for _ in range(1 + self.max_regenerations):
            system = bundle.system_prompt
            if corrective:
                system = f"{system}\n\n{corrective}"
            result = self.chat.generate(system, bundle.user_content())
            provider_calls += result.attempts
            report = validate_response(result.content, query.mode, query.language)
            violations = list(report.violations)
            if not report.is_malformed:
                ref_violations = self._check_references(report)
                if not ref_violations:
                    return GroundedAnswer(
                        body=result.content,
                        pattern=report.pattern,
                        refusal=classify_refusal(
                            report, result.content, self.lexicons
                        ),
                        language=query.language,
                        mode=query.mode,
                        references=list(report.references),
                        hits=hits,
                        provider_calls=provider_calls,
                        fallback_used=False,
                        violations=[v for v in violations],
                    )
                violations.extend(ref_violations)
            hard = [v for v in violations if v]
            corrective = (
                "[Format check] The previous draft violated the output contract: "
                + ", ".join(hard)
                + ". Regenerate the answer following the contract exactly."
            )
            logger.info("draft rejected (%s); regenerating", ", ".join(hard))

        if query.mode is ResponseMode.INSTRUCTIONAL:
            raise AdvisoryValidationFailed(
                "advisory output failed validation after "
                f"{1 + self.max_regenerations} attempts",
                violations=violations,
            )
        return self._fixed_answer(
            FIXED.pattern_b(query.language), Pattern.B, query, hits=hits,
            fallback_used=True, provider_calls=provider_calls,
            violations=violations,
        )

    def _no_provider(self, query: Query, hits: list[RetrievalHit]) -> GroundedAnswer:
        # Retrieval mode degrades to the fixed refusal when generation is
        # impossible; the grounding evidence is preserved for the log.
        return self._fixed_answer(
            FIXED.pattern_b(query.language), Pattern.B, query, hits=hits,
            fallback_used=True,
        )
