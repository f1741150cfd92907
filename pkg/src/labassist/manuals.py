"""Sectioned procedure manuals: parsing, serialization, versioning, catalogs.

Manual format: UTF-8 text where every section opens with a header line

    ## <id> <title> [tag,tag]

The id is the first whitespace-delimited token after "##"; ids like "4-2"
are conventional but any label without whitespace works. The optional
trailing [tag,tag] suffix carries comma-separated tags. Everything up to
the next header is the section body. Text before the first header is
ignored. A body line itself starting with "## " would be parsed as a new
header, so bodies must not contain such lines.
"""

from __future__ import annotations

import json
import logging
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DuplicateSectionId, InvalidDocument, MalformedManual
from .guardrails import Language, detect_language

logger = logging.getLogger(__name__)

MANUAL_SUFFIXES = (".md", ".txt")

_HEADER_RE = re.compile(r"^##\s+(?P<rest>\S.*)$")
_TAGS_RE = re.compile(r"\s*\[(?P<tags>[^\[\]]*)\]\s*$")
_VERSION_V_RE = re.compile(r"_v(\d+)$")
_VERSION_DIGITS_RE = re.compile(r"(\d+)$")


@dataclass(frozen=True)
class ManualSection:
    id: str
    title: str
    body: str
    tags: tuple[str, ...] = ()


@dataclass(frozen=True)
class ManualDocument:
    logical_name: str
    version: int
    source_file: str
    language: Language
    sections: tuple[ManualSection, ...]

    def section_ids(self) -> list[str]:
        return [s.id for s in self.sections]


@dataclass(frozen=True)
class ManualCatalog:
    """Immutable snapshot: every known document plus the resolved latest set."""

    documents: tuple[ManualDocument, ...]
    resolved: dict[str, ManualDocument]

    def resolved_documents(self) -> list[ManualDocument]:
        return [self.resolved[name] for name in sorted(self.resolved)]

    def section_count(self) -> int:
        return sum(len(d.sections) for d in self.resolved_documents())

    def find_document(self, file_or_name: str) -> ManualDocument | None:
        """Match a cited file name against the resolved catalog.

        Accepts the exact source file name, its stem, or the logical name;
        a leading path is ignored.
        """
        wanted = Path(file_or_name.strip().lstrip("/")).name
        stem = Path(wanted).stem
        for doc in self.resolved.values():
            if wanted in (doc.source_file, doc.logical_name):
                return doc
            if stem and stem in (Path(doc.source_file).stem, doc.logical_name):
                return doc
        return None


def split_name_version(source_file: str) -> tuple[str, int]:
    """Derive (logical_name, version) from a file name.

    A trailing "_v<digits>" or trailing "<digits>" before the extension is
    the version; without one the version is 0. If stripping the version
    would leave an empty name, the whole stem is kept with version 0.
    """
    stem = Path(source_file).stem
    m = _VERSION_V_RE.search(stem) or _VERSION_DIGITS_RE.search(stem)
    if not m:
        return stem, 0
    name = stem[: m.start()].rstrip("_- ")
    if not name:
        return stem, 0
    return name, int(m.group(1))


def _parse_header(line: str) -> tuple[str, str, tuple[str, ...]]:
    rest = _HEADER_RE.match(line).group("rest")
    tags: tuple[str, ...] = ()
    tm = _TAGS_RE.search(rest)
    if tm:
        raw_tags = [t.strip() for t in tm.group("tags").split(",")]
        tags = tuple(t for t in raw_tags if t)
        rest = rest[: tm.start()]
    parts = rest.split(None, 1)
    section_id = parts[0]
    title = parts[1].strip() if len(parts) > 1 else ""
    return section_id, title, tags


def parse_manual(text: str, source_file: str) -> ManualDocument:
    """Parse manual text into a ManualDocument.

    Raises MalformedManual when no section header is present or a section
    body is empty, and DuplicateSectionId when two sections share an id.
    """
    if not text.strip():
        raise MalformedManual(f"{source_file}: empty manual text")

    sections: list[ManualSection] = []
    seen: set[str] = set()
    current: tuple[str, str, tuple[str, ...]] | None = None
    body_lines: list[str] = []

    def flush() -> None:
        if current is None:
            return
        body = "\n".join(body_lines).strip()
        if not body:
            raise MalformedManual(
                f"{source_file}: section '{current[0]}' has an empty body"
            )
        sections.append(
            ManualSection(id=current[0], title=current[1], body=body, tags=current[2])
        )

    for line in text.splitlines():
        if _HEADER_RE.match(line):
            flush()
            section_id, title, tags = _parse_header(line)
            if section_id in seen:
                raise DuplicateSectionId(
                    f"{source_file}: duplicate section id '{section_id}'"
                )
            seen.add(section_id)
            current = (section_id, title, tags)
            body_lines = []
        elif current is not None:
            body_lines.append(line)
    flush()

    if not sections:
        raise MalformedManual(f"{source_file}: no section headers found")

    name, version = split_name_version(source_file)
    return ManualDocument(
        logical_name=name,
        version=version,
        source_file=Path(source_file).name,
        language=detect_language(text),
        sections=tuple(sections),
    )


def serialize_manual(doc: ManualDocument) -> str:
    """Render a document back to manual text; parse(serialize(doc)) == doc."""
    if not doc.sections:
        raise InvalidDocument(f"{doc.source_file}: document has no sections")
    chunks: list[str] = []
    for section in doc.sections:
        header = f"## {section.id}"
        if section.title:
            header += f" {section.title}"
        if section.tags:
            header += f" [{','.join(section.tags)}]"
        chunks.append(f"{header}\n\n{section.body}\n")
    return "\n".join(chunks)


def resolve_latest(documents: list[ManualDocument]) -> ManualCatalog:
    """Build a catalog keeping, per logical name, the highest version.

    Ties on version are broken by the lexicographically greatest source
    file name so resolution is deterministic.
    """
    resolved: dict[str, ManualDocument] = {}
    for doc in documents:
        cur = resolved.get(doc.logical_name)
        if cur is None or (doc.version, doc.source_file) > (cur.version, cur.source_file):
            resolved[doc.logical_name] = doc
    return ManualCatalog(documents=tuple(documents), resolved=resolved)


def export_catalog(catalog: ManualCatalog) -> str:
    """Resolved catalog as deterministic JSON (names, versions, section ids)."""
    payload = [
        {
            "logical_name": doc.logical_name,
            "version": doc.version,
            "source_file": doc.source_file,
            "sections": doc.section_ids(),
        }
        for doc in catalog.resolved_documents()
    ]
    return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True)


def load_manual_dir(manual_dir: str | Path) -> list[ManualDocument]:
    """Parse every *.md / *.txt file in a directory (sorted, non-recursive)."""
    root = Path(manual_dir)
    docs: list[ManualDocument] = []
    for path in sorted(root.iterdir()):
        if path.suffix.lower() in MANUAL_SUFFIXES and path.is_file():
            docs.append(parse_manual(path.read_text("utf-8"), path.name))
    return docs


class ManualStore:
    """Thread-safe holder of the current catalog snapshot.

    Ingestion builds a full catalog and swaps it atomically; readers keep
    whatever snapshot they already hold.
    """

    def __init__(self, manual_dir: str | Path | None = None):
        self._lock = threading.Lock()
        self._catalog = ManualCatalog(documents=(), resolved={})
        if manual_dir is not None:
            self.ingest_dir(manual_dir)

    def catalog(self) -> ManualCatalog:
        return self._catalog

    def ingest_dir(self, manual_dir: str | Path) -> ManualCatalog:
        docs = load_manual_dir(manual_dir)
        catalog = resolve_latest(docs)
        with self._lock:
            self._catalog = catalog
        logger.info(
            "ingested %d documents (%d resolved) from %s",
            len(docs), len(catalog.resolved), manual_dir,
        )
        return catalog

    def add_document(self, text: str, source_file: str) -> ManualCatalog:
        doc = parse_manual(text, source_file)
        with self._lock:
            docs = list(self._catalog.documents) + [doc]
            self._catalog = resolve_latest(docs)
            return self._catalog
