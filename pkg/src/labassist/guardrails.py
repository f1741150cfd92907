"""Deterministic output contracts: fixed responses, validators, refusal taxonomy.

Everything in this module is rule based. No provider output is trusted until
it passes validate_response, and the fixed refusal/anomaly strings are
compared byte for byte. Lexicons (anomaly terms, escalation phrases, safety
stop phrases) are configuration data loaded from JSON, not code.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import EmptyText

# ---------------------------------------------------------------------------
# Fixed response strings. These are part of the external contract and must
# never be reworded; validators match them byte for byte.
# ---------------------------------------------------------------------------

PATTERN_B_EN = (
    "The information is not found in the procedure manual. "
    "Please check with the faculty member."
)
PATTERN_B_JA = "マニュアルに記載がありません。教員に確認してください。"
ANOMALY_EN = (
    "⚠ There may be an anomaly. Immediately stop the operation "
    "and report it to the faculty member."
)


@dataclass(frozen=True)
class FixedResponses:
    pattern_b_en: str = PATTERN_B_EN
    pattern_b_ja: str = PATTERN_B_JA
    # Only an English anomaly constant is defined; it is served for both
    # languages (there is no separate Japanese anomaly string in the contract).
    anomaly_en: str = ANOMALY_EN

    def pattern_b(self, language: "Language") -> str:
        return self.pattern_b_ja if language is Language.JA else self.pattern_b_en

    def anomaly(self, language: "Language") -> str:
        return self.anomaly_en


FIXED = FixedResponses()


class Language(str, Enum):
    EN = "en"
    JA = "ja"


class ResponseMode(str, Enum):
    RETRIEVAL = "retrieval"
    INSTRUCTIONAL = "instructional"


class Pattern(str, Enum):
    A = "A"
    B = "B"
    ANOMALY = "anomaly"
    ADVISORY = "advisory"
    MALFORMED = "malformed"


class RefusalClass(str, Enum):
    EXPLICIT_REFUSAL = "explicit_refusal"
    SAFETY_WARNING = "safety_warning"
    PARTIAL_WITH_ESCALATION = "partial_with_escalation"
    FULL_ANSWER = "full_answer"


# Violation rule ids are stable strings; "short" and "long" are soft
# (advisory) violations, everything else is hard and makes the response
# malformed.
RULE_OVER_LENGTH = "over_length"
RULE_BULLETS = "bullets"
RULE_MISSING_REFERENCE = "missing_reference"
RULE_MULTIPLE_REFERENCES = "multiple_references"
RULE_REFERENCE_NOT_TRAILING = "reference_not_trailing"
RULE_REFERENCE_MALFORMED = "reference_malformed"
RULE_MULTI_PARAGRAPH = "multi_paragraph"
RULE_SHORT = "short"
RULE_LONG = "long"
RULE_MISSING_DISCLAIMER = "missing_disclaimer"
RULE_MISSING_TRAINING_NOTICE = "missing_training_notice"
RULE_MISSING_RISK_SECTION = "missing_risk_section"
RULE_MISSING_PROCEDURE_SECTION = "missing_procedure_section"
RULE_MISSING_CITATION = "missing_citation"
RULE_SECTION_ORDER = "section_order"

SOFT_RULES = frozenset({RULE_SHORT, RULE_LONG})

# Length limits for pattern A bodies (reference line excluded).
MAX_WORDS_EN = 50
MAX_CHARS_JA = 100
SOFT_MIN_EN = 30
SOFT_MIN_JA = 30
SOFT_MAX_JA = 80


@dataclass
class ValidationReport:
    pattern: Pattern
    language: Language
    length_units: int
    violations: list[str] = field(default_factory=list)
    references: list[tuple[str, list[str]]] = field(default_factory=list)

    @property
    def hard_violations(self) -> list[str]:
        return [v for v in self.violations if v not in SOFT_RULES]

    @property
    def is_malformed(self) -> bool:
        return bool(self.hard_violations)


# ---------------------------------------------------------------------------
# Lexicons
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lexicons:
    """Phrase lists driving anomaly detection and refusal classification.

    All matching is case-insensitive substring matching. The shipped
    defaults include calibration entries tuned against the bundled
    validation table; operators can replace the JSON without a rebuild.
    """

    anomaly: dict[str, tuple[str, ...]]
    escalation: dict[str, tuple[str, ...]]
    safety_stop: dict[str, tuple[str, ...]]

    def all_entries(self, table: str) -> tuple[str, ...]:
        mapping = getattr(self, table)
        out: list[str] = []
        for lang in sorted(mapping):
            out.extend(mapping[lang])
        return tuple(out)


def _freeze_table(raw: dict) -> dict[str, tuple[str, ...]]:
    return {lang: tuple(entries) for lang, entries in raw.items()}


def load_lexicons(path: str | Path | None = None) -> Lexicons:
    """Load lexicons from a JSON file, or the packaged defaults."""
    if path is None:
        text = (
            resources.files("labassist").joinpath("data/lexicons.json").read_text("utf-8")
        )
    else:
        text = Path(path).read_text("utf-8")
    raw = json.loads(text)
    return Lexicons(
        anomaly=_freeze_table(raw.get("anomaly", {})),
        escalation=_freeze_table(raw.get("escalation", {})),
        safety_stop=_freeze_table(raw.get("safety_stop", {})),
    )


# ---------------------------------------------------------------------------
# Language and length rules
# ---------------------------------------------------------------------------

_JA_RANGES = (
    (0x3040, 0x309F),  # Hiragana
    (0x30A0, 0x30FF),  # Katakana
    (0x3400, 0x4DBF),  # CJK Unified Ideographs Extension A
    (0x4E00, 0x9FFF),  # CJK Unified Ideographs
)


def detect_language(text: str) -> Language:
    """Classify text as Japanese iff it contains at least one kana/CJK scalar.

    Mixed-script text such as "Li2S を測る" therefore counts as Japanese.
    Raises EmptyText for empty or whitespace-only input.
    """
    if not text or not text.strip():
        raise EmptyText("cannot detect language of empty text")
    for ch in text:
        cp = ord(ch)
        if any(lo <= cp <= hi for lo, hi in _JA_RANGES):
            return Language.JA
    return Language.EN


_REFERENCE_MARK = "\U0001f517"  # 🔗
_REFERENCE_RE = re.compile(
    r"^\U0001f517\s*(?:Reference|参照)[::]\s*(?P<file>\S.*?)\s*$"
)


def _split_reference_lines(text: str) -> tuple[list[str], list[str]]:
    """Split text into (body lines, reference lines starting with 🔗)."""
    body: list[str] = []
    refs: list[str] = []
    for line in text.splitlines():
        if line.strip().startswith(_REFERENCE_MARK):
            refs.append(line.strip())
        else:
            body.append(line)
    return body, refs


def count_length(text: str, language: Language) -> int:
    """Length in contract units: English words or Japanese characters.

    Reference lines (any line starting with 🔗) are stripped first. English
    counts whitespace-delimited tokens containing at least one alphanumeric
    scalar; Japanese counts non-whitespace scalars.
    """
    body_lines, _ = _split_reference_lines(text)
    body = "\n".join(body_lines)
    if language is Language.JA:
        return sum(1 for ch in body if not ch.isspace())
    tokens = body.split()
    return sum(1 for tok in tokens if any(ch.isalnum() for ch in tok))


# ---------------------------------------------------------------------------
# Response validation
# ---------------------------------------------------------------------------

# "1." opens a numbered item unless a digit follows (so "1.5 deg/min" is text).
_BULLET_RE = re.compile(r"^\s*(?:[-*•]\s|\d+\.(?!\d))")
_CITATION_RE = re.compile(
    r"\(\s*/?(?P<file>[\w\-. ]+?\.(?:docx|md|txt|pdf))\s*[,、]?\s*"
    r"(?:Section|セクション)\s*(?P<secs>[^)]*)\)",
    re.IGNORECASE,
)
_SECTION_ID_RE = re.compile(r"\d+-\d+")


def _extract_citations(text: str) -> list[tuple[str, list[str]]]:
    out: list[tuple[str, list[str]]] = []
    for m in _CITATION_RE.finditer(text):
        fname = m.group("file").strip().lstrip("/")
        sections = _SECTION_ID_RE.findall(m.group("secs"))
        out.append((fname, sections))
    return out


def _validate_pattern_a(
    raw: str, language: Language, report: ValidationReport
) -> None:
    body_lines, ref_lines = _split_reference_lines(raw)

    units = count_length(raw, language)
    report.length_units = units
    limit = MAX_CHARS_JA if language is Language.JA else MAX_WORDS_EN
    if units > limit:
        report.violations.append(RULE_OVER_LENGTH)
    soft_min = SOFT_MIN_JA if language is Language.JA else SOFT_MIN_EN
    if units < soft_min:
        report.violations.append(RULE_SHORT)
    elif language is Language.JA and units > SOFT_MAX_JA:
        report.violations.append(RULE_LONG)

    for line in body_lines:
        if line.strip() and _BULLET_RE.match(line):
            report.violations.append(RULE_BULLETS)
            break

    if not ref_lines:
        report.violations.append(RULE_MISSING_REFERENCE)
    elif len(ref_lines) > 1:
        report.violations.append(RULE_MULTIPLE_REFERENCES)
    else:
        ref_line = ref_lines[0]
        stripped = [ln for ln in raw.splitlines() if ln.strip()]
        if not stripped or stripped[-1].strip() != ref_line:
            report.violations.append(RULE_REFERENCE_NOT_TRAILING)
        m = _REFERENCE_RE.match(ref_line)
        if m is None:
            report.violations.append(RULE_REFERENCE_MALFORMED)
        else:
            report.references.append((m.group("file").strip().lstrip("/"), []))

    # Single paragraph: no blank line may separate the non-empty body lines.
    trimmed = [ln for ln in body_lines]
    while trimmed and not trimmed[0].strip():
        trimmed.pop(0)
    while trimmed and not trimmed[-1].strip():
        trimmed.pop()
    if any(not ln.strip() for ln in trimmed):
        report.violations.append(RULE_MULTI_PARAGRAPH)

    report.pattern = Pattern.MALFORMED if report.is_malformed else Pattern.A


_IMPORTANT_MARKERS = ("[IMPORTANT]", "【重要】")
_TRAINING_MARKERS = ("in-person", "対面")
_RISK_MARKERS = ("risk assessment", "リスク")
_PROCEDURE_MARKERS = ("procedure", "手順")


def _validate_advisory(raw: str, language: Language, report: ValidationReport) -> None:
    report.length_units = count_length(raw, language)
    lines = raw.splitlines()
    lower = raw.lower()

    important_pos = -1
    for marker in _IMPORTANT_MARKERS:
        for i, line in enumerate(lines):
            if line.strip().startswith(marker):
                important_pos = raw.find(marker)
                break
        if important_pos >= 0:
            break
    if important_pos < 0:
        report.violations.append(RULE_MISSING_DISCLAIMER)

    first_section = raw.find("■")  # ■
    training_pos = -1
    for marker in _TRAINING_MARKERS:
        pos = lower.find(marker.lower())
        if pos >= 0 and (training_pos < 0 or pos < training_pos):
            training_pos = pos
    if training_pos < 0 or (0 <= first_section < training_pos):
        report.violations.append(RULE_MISSING_TRAINING_NOTICE)

    risk_pos = -1
    procedure_pos = -1
    offset = 0
    for line in raw.splitlines(keepends=True):
        stripped = line.strip()
        if stripped.startswith("■"):
            low = stripped.lower()
            if risk_pos < 0 and any(m in low for m in _RISK_MARKERS):
                risk_pos = offset
            elif procedure_pos < 0 and any(m in low for m in _PROCEDURE_MARKERS):
                procedure_pos = offset
        offset += len(line)
    if risk_pos < 0:
        report.violations.append(RULE_MISSING_RISK_SECTION)
    if procedure_pos < 0:
        report.violations.append(RULE_MISSING_PROCEDURE_SECTION)
    if risk_pos >= 0 and procedure_pos >= 0 and procedure_pos < risk_pos:
        report.violations.append(RULE_SECTION_ORDER)
    if (
        important_pos >= 0
        and training_pos >= 0
        and not (important_pos <= training_pos)
    ):
        report.violations.append(RULE_SECTION_ORDER)

    citations = _extract_citations(raw)
    if not citations:
        report.violations.append(RULE_MISSING_CITATION)
    report.references = citations

    report.pattern = Pattern.MALFORMED if report.is_malformed else Pattern.ADVISORY


def validate_response(
    raw: str, mode: ResponseMode, language: Language
) -> ValidationReport:
    """Validate provider output against the fixed output contracts.

    Exact matches of the fixed refusal (pattern B) and anomaly strings are
    recognised first, in either language, regardless of mode. Otherwise
    retrieval answers are checked against the pattern A rules and
    instructional answers against the advisory report rules.
    """
    report = ValidationReport(pattern=Pattern.MALFORMED, language=language, length_units=0)
    if raw == FIXED.pattern_b_en or raw == FIXED.pattern_b_ja:
        report.pattern = Pattern.B
        report.length_units = count_length(
            raw, Language.JA if raw == FIXED.pattern_b_ja else Language.EN
        )
        return report
    if raw == FIXED.anomaly_en:
        report.pattern = Pattern.ANOMALY
        report.length_units = count_length(raw, Language.EN)
        return report
    if mode is ResponseMode.INSTRUCTIONAL:
        _validate_advisory(raw, language, report)
    else:
        _validate_pattern_a(raw, language, report)
    return report


# ---------------------------------------------------------------------------
# Anomaly detection and refusal classification
# ---------------------------------------------------------------------------


def detect_anomaly_query(query: str, language: Language, lexicons: Lexicons) -> bool:
    """True when the query mentions a configured anomaly term.

    Matching is case-insensitive substring matching across the entries of
    both languages: a safety gate should fail closed on mixed-script input.
    """
    if not query or not query.strip():
        raise EmptyText("cannot screen an empty query")
    folded = query.casefold()
    return any(
        term.casefold() in folded for term in lexicons.all_entries("anomaly")
    )


_SENTENCE_END_RE = re.compile(r"[.!?。！？](?=\s|$)")

# Imperative openers marking a sentence as procedural content. Used to keep
# step-by-step fix-it answers out of the safety_warning class even when they
# end with a consult-now phrase.
_PROCEDURAL_OPENERS = frozenset(
    {
        "turn", "try", "check", "ensure", "restart", "start", "press", "set",
        "place", "open", "close", "fill", "clean", "execute", "use", "remove",
        "confirm", "insert", "verify", "stop", "shut", "run", "wipe", "eject",
        "record", "reserve", "launch", "load", "measure", "select", "save",
    }
)


def _sentences_before(text: str, pos: int) -> list[str]:
    """Complete sentences preceding character position pos."""
    prefix = text[:pos]
    ends = [m.end() for m in _SENTENCE_END_RE.finditer(prefix)]
    if not ends:
        return []
    sentences = []
    start = 0
    for end in ends:
        sent = prefix[start:end].strip()
        if sent:
            sentences.append(sent)
        start = end
    return sentences


def _is_procedural(sentence: str) -> bool:
    words = re.findall(r"[A-Za-z']+", sentence.lower())
    return bool(words) and words[0] in _PROCEDURAL_OPENERS


def _earliest_match(text: str, entries: tuple[str, ...]) -> int | None:
    folded = text.casefold()
    best: int | None = None
    for entry in entries:
        pos = folded.find(entry.casefold())
        if pos >= 0 and (best is None or pos < best):
            best = pos
    return best


def classify_refusal(
    report: ValidationReport, raw: str, lexicons: Lexicons
) -> RefusalClass:
    """Assign a response to the four-way refusal taxonomy.

    Precedence: explicit refusal (pattern B) > safety warning (anomaly
    pattern, or a safety-stop phrase with at most one preceding sentence and
    no preceding procedural sentence) > partial with escalation (escalation
    phrase after at least one sentence of content) > full answer.
    """
    if report.pattern is Pattern.B:
        return RefusalClass.EXPLICIT_REFUSAL
    if report.pattern is Pattern.ANOMALY:
        return RefusalClass.SAFETY_WARNING

    stop_pos = _earliest_match(raw, lexicons.all_entries("safety_stop"))
    if stop_pos is not None:
        preceding = _sentences_before(raw, stop_pos)
        if len(preceding) <= 1 and not any(_is_procedural(s) for s in preceding):
            return RefusalClass.SAFETY_WARNING

    esc_pos = _earliest_match(raw, lexicons.all_entries("escalation"))
    if esc_pos is not None and len(_sentences_before(raw, esc_pos)) >= 1:
        return RefusalClass.PARTIAL_WITH_ESCALATION

    return RefusalClass.FULL_ANSWER
