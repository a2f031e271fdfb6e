"""Rule-based decomposition of normalized survey markdown.

A survey document is split into four facets:

* an outline tree built from ATX headings (``#`` .. ``###``, deeper
  levels clipped to 3),
* content sections (text between consecutive headings, references
  excluded),
* bibliography entries from a "References"/"Bibliography" section,
* citation-bearing sentences with their resolved reference keys.

Leaf headings are additionally aggregated into outline-path documents:
one document per parent node, carrying the root-to-parent title path and
the titles of all leaf children under it. These are the embedding units
for the outline facet.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import DuplicateReferenceKey, NoHeadings

MAX_DEPTH = 3
UNTITLED = "(untitled)"

_HEADING_RE = re.compile(r"^(#{1,6})\s+(\S.*?)\s*$")
_FENCE_RE = re.compile(r"^(```|~~~)")
_REFS_TITLES = ("references", "bibliography")

# A reference entry starts with "[n] ..." or "n. ..." (n >= 1).
_REF_BRACKET_RE = re.compile(r"^\[([1-9]\d*)\]\s*(.*)$")
_REF_DOTTED_RE = re.compile(r"^([1-9]\d*)\.\s+(.*)$")

# Bracketed citation marker: [1], [1,3], [2-4] and mixtures thereof.
_CITE_RE = re.compile(r"\[(\d+(?:\s*[-,]\s*\d+)*)\]")

# Words that end with a sentence terminator but do not end a sentence.
_ABBREVIATIONS = {
    "al.", "fig.", "figs.", "eq.", "eqs.", "tab.", "sec.", "no.",
    "e.g.", "i.e.", "cf.", "vs.", "etc.", "resp.", "approx.",
}


@dataclass
class OutlineNode:
    """One heading in the outline; the root is virtual with depth 0."""

    title: str
    depth: int
    children: list["OutlineNode"] = field(default_factory=list)
    ordinal: int = 1
    implicit: bool = False  # inserted to repair a skipped heading level

    def is_leaf(self) -> bool:
        return not self.children

    def walk(self):
        """Yield this node and all descendants, depth first."""
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass
class OutlineTree:
    root: OutlineNode
    max_depth: int
    warnings: list[str] = field(default_factory=list)

    def nodes(self):
        """All real nodes (depth >= 1), document order."""
        for node in self.root.walk():
            if node.depth >= 1:
                yield node

    def parents(self) -> list[OutlineNode]:
        """Nodes with children, the virtual root included."""
        return [n for n in self.root.walk() if n.children]


@dataclass
class ContentSection:
    heading_path: list[str]
    body: str
    index: int
    is_container: bool = False


@dataclass
class ReferenceEntry:
    key: int
    text: str
    index: int


@dataclass
class CitationSentence:
    section_index: int
    sentence: str
    cited_keys: list[int]
    dangling_keys: list[int] = field(default_factory=list)


@dataclass
class OutlinePathDocument:
    parent_path: list[str]
    leaf_titles: list[str]
    rendered_text: str


def _heading_lines(document: str) -> list[tuple[int, int, str]]:
    """(line number, clipped depth, title) for every ATX heading.

    Headings inside fenced code blocks are ignored. Levels deeper than
    MAX_DEPTH are clipped to MAX_DEPTH.
    """
    headings = []
    in_fence = False
    for lineno, line in enumerate(document.splitlines()):
        if _FENCE_RE.match(line.strip()):
            in_fence = not in_fence
            continue
        if in_fence:
            continue
        m = _HEADING_RE.match(line)
        if m:
            headings.append((lineno, len(m.group(1)), m.group(2)))
    return headings


def parse_outline(document: str) -> OutlineTree:
    """Build the outline tree from ATX headings.

    ``#`` maps to depth 1, ``##`` to 2, ``###`` to 3; deeper levels are
    clipped to 3 with a warning. A skipped level (``#`` directly followed
    by ``###``) is repaired by inserting an implicit "(untitled)" node.

    Raises NoHeadings when the document contains no heading lines.
    """
    headings = _heading_lines(document)
    if not headings:
        raise NoHeadings("document contains no ATX headings")

    warnings: list[str] = []
    root = OutlineNode(title="", depth=0)
    stack = [root]  # stack[d] is the current node at depth d
    for lineno, raw_depth, title in headings:
        depth = raw_depth
        if depth > MAX_DEPTH:
            warnings.append(
                f"line {lineno + 1}: heading level {depth} clipped to {MAX_DEPTH}"
            )
            depth = MAX_DEPTH
        while len(stack) > depth:
            stack.pop()
        while len(stack) < depth:  # skipped level: repair with implicit node
            parent = stack[-1]
            filler = OutlineNode(
                title=UNTITLED,
                depth=parent.depth + 1,
                ordinal=len(parent.children) + 1,
                implicit=True,
            )
            parent.children.append(filler)
            stack.append(filler)
            warnings.append(
                f"line {lineno + 1}: skipped heading level repaired at depth {filler.depth}"
            )
        parent = stack[-1]
        node = OutlineNode(title=title, depth=depth, ordinal=len(parent.children) + 1)
        parent.children.append(node)
        stack.append(node)

    max_depth = max(n.depth for n in root.walk())
    return OutlineTree(root=root, max_depth=max_depth, warnings=warnings)


def render_outline(tree: OutlineTree) -> str:
    """Re-render the tree as ATX heading lines (inverse of parse_outline)."""
    lines = []
    for node in tree.nodes():
        lines.append("#" * node.depth + " " + node.title)
    return "\n".join(lines) + "\n"


def split_outline_paths(tree: OutlineTree) -> list[OutlinePathDocument]:
    """Aggregate sibling leaves into one document per parent node.

    Depth-1 leaves (sections with no subsections) group under the virtual
    root with an empty parent path. Every leaf of the tree lands in
    exactly one document.
    """
    docs = []
    for parent, path in _walk_with_paths(tree.root, []):
        leaves = [c.title for c in parent.children if c.is_leaf()]
        if not leaves:
            continue
        joined = "; ".join(leaves)
        rendered = (" > ".join(path) + " > " + joined) if path else joined
        docs.append(OutlinePathDocument(parent_path=path, leaf_titles=leaves,
                                        rendered_text=rendered))
    return docs


def _walk_with_paths(node: OutlineNode, path: list[str]):
    if node.children:
        yield node, path
    for child in node.children:
        yield from _walk_with_paths(child, path + [child.title])


def _is_refs_title(title: str) -> bool:
    return title.strip().lower() in _REFS_TITLES


def parse_sections(document: str, tree: OutlineTree) -> list[ContentSection]:
    """Slice the document into one section per heading.

    A section's body is everything between its heading and the next
    heading of any level. The references section (and anything nested
    under it) is excluded. A section with an empty body and children in
    the tree is flagged as a container.
    """
    headings = _heading_lines(document)
    lines = document.splitlines()

    # Headings appear in the tree in document order; implicit repair
    # nodes have no heading line and are skipped when zipping.
    explicit_nodes = [n for n in tree.nodes() if not n.implicit]
    paths = {}
    for node, path in _node_paths(tree):
        paths[id(node)] = path

    sections = []
    index = 0
    for pos, ((lineno, _, _), node) in enumerate(zip(headings, explicit_nodes)):
        path = paths[id(node)]
        if any(_is_refs_title(p) for p in path):
            continue
        next_start = headings[pos + 1][0] if pos + 1 < len(headings) else len(lines)
        body = "\n".join(lines[lineno + 1:next_start]).strip()
        sections.append(ContentSection(
            heading_path=path,
            body=body,
            index=index,
            is_container=bool(node.children) and not body,
        ))
        index += 1
    return sections


def _node_paths(tree: OutlineTree):
    def rec(node, path):
        for child in node.children:
            child_path = path + [child.title]
            yield child, child_path
            yield from rec(child, child_path)

    yield from rec(tree.root, [])


def parse_references(document: str) -> tuple[list[ReferenceEntry], list[str]]:
    """Read bibliography entries from the references section.

    Entries match ``[n] text`` or ``n. text``; lines that match neither
    are continuations of the previous entry. Returns (entries, warnings);
    a missing references section yields an empty list plus a warning.

    Raises DuplicateReferenceKey when a bibliography number repeats.
    """
    headings = _heading_lines(document)
    lines = document.splitlines()
    start = end = None
    for pos, (lineno, _, title) in enumerate(headings):
        if _is_refs_title(title):
            start = lineno + 1
            end = headings[pos + 1][0] if pos + 1 < len(headings) else len(lines)
            break
    if start is None:
        return [], ["no references section found"]

    entries: list[ReferenceEntry] = []
    seen: set[int] = set()
    for line in lines[start:end]:
        stripped = line.strip()
        if not stripped:
            continue
        m = _REF_BRACKET_RE.match(stripped) or _REF_DOTTED_RE.match(stripped)
        if m:
            key = int(m.group(1))
            if key in seen:
                raise DuplicateReferenceKey(f"reference key {key} appears twice")
            seen.add(key)
            entries.append(ReferenceEntry(key=key, text=m.group(2).strip(),
                                          index=len(entries)))
        elif entries:
            entries[-1].text = (entries[-1].text + " " + stripped).strip()
        # a continuation before the first entry has nothing to attach to
    return entries, []


def segment_sentences(text: str) -> list[str]:
    """Split text into sentences on ``.?!`` followed by whitespace.

    Splits are suppressed after known abbreviations and after single
    initials ("J. Smith"). The segmentation is total: joining the parts
    reproduces the input up to whitespace.
    """
    sentences = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in ".?!" and (i + 1 == n or text[i + 1].isspace()):
            word_start = i
            while word_start > 0 and not text[word_start - 1].isspace():
                word_start -= 1
            word = text[word_start:i + 1].lower()
            is_initial = len(word) == 2 and word[0].isalpha()
            if word in _ABBREVIATIONS or is_initial:
                i += 1
                continue
            sentence = text[start:i + 1].strip()
            if sentence:
                sentences.append(sentence)
            start = i + 1
        i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def _expand_citation(marker: str) -> list[int]:
    """Expand the inside of a bracket marker into the keys it names."""
    keys: list[int] = []
    for part in marker.split(","):
        part = part.strip()
        if "-" in part:
            lo_s, hi_s = part.split("-", 1)
            lo, hi = int(lo_s), int(hi_s)
            if hi >= lo:
                keys.extend(range(lo, hi + 1))
        elif part:
            keys.append(int(part))
    return keys


def extract_citation_sentences(
    sections: list[ContentSection],
    references: list[ReferenceEntry],
) -> list[CitationSentence]:
    """Collect sentences that carry bracketed citation markers.

    Keys are deduplicated in textual order. Keys that do not resolve to a
    bibliography entry are kept aside as dangling rather than dropped
    silently.
    """
    known = {r.key for r in references}
    out = []
    for section in sections:
        for sentence in segment_sentences(section.body):
            raw_keys: list[int] = []
            for m in _CITE_RE.finditer(sentence):
                raw_keys.extend(_expand_citation(m.group(1)))
            if not raw_keys:
                continue
            cited, dangling, seen = [], [], set()
            for key in raw_keys:
                if key in seen:
                    continue
                seen.add(key)
                (cited if key in known else dangling).append(key)
            out.append(CitationSentence(
                section_index=section.index,
                sentence=sentence,
                cited_keys=cited,
                dangling_keys=dangling,
            ))
    return out


@dataclass
class DecomposedSurvey:
    """All four facets of one document, plus parser warnings."""

    outline: OutlineTree
    outline_paths: list[OutlinePathDocument]
    sections: list[ContentSection]
    references: list[ReferenceEntry]
    citation_sentences: list[CitationSentence]
    warnings: list[str]


def decompose_document(document: str) -> DecomposedSurvey:
    """Run the full rule-based decomposition over one document."""
    tree = parse_outline(document)
    sections = parse_sections(document, tree)
    references, ref_warnings = parse_references(document)
    citations = extract_citation_sentences(sections, references)
    warnings = list(tree.warnings) + ref_warnings
    for sentence in citations:
        if sentence.dangling_keys:
            warnings.append(
                f"section {sentence.section_index}: dangling citation keys "
                f"{sentence.dangling_keys}"
            )
    return DecomposedSurvey(
        outline=tree,
        outline_paths=split_outline_paths(tree),
        sections=sections,
        references=references,
        citation_sentences=citations,
        warnings=warnings,
    )


# --- JSON round trip for the decomposition files -------------------------


def _node_to_dict(node: OutlineNode) -> dict:
    return {
        "title": node.title,
        "depth": node.depth,
        "ordinal": node.ordinal,
        "implicit": node.implicit,
        "children": [_node_to_dict(c) for c in node.children],
    }


def _node_from_dict(doc: dict) -> OutlineNode:
    return OutlineNode(
        title=doc["title"],
        depth=doc["depth"],
        ordinal=doc["ordinal"],
        implicit=doc.get("implicit", False),
        children=[_node_from_dict(c) for c in doc["children"]],
    )


def decomposition_to_dict(survey: DecomposedSurvey) -> dict:
    return {
        "outline": {
            "max_depth": survey.outline.max_depth,
            "root": _node_to_dict(survey.outline.root),
        },
        "outline_paths": [
            {"parent_path": d.parent_path, "leaf_titles": d.leaf_titles,
             "rendered_text": d.rendered_text}
            for d in survey.outline_paths
        ],
        "sections": [
            {"heading_path": s.heading_path, "body": s.body, "index": s.index,
             "is_container": s.is_container}
            for s in survey.sections
        ],
        "references": [
            {"key": r.key, "text": r.text, "index": r.index}
            for r in survey.references
        ],
        "citation_sentences": [
            {"section_index": c.section_index, "sentence": c.sentence,
             "cited_keys": c.cited_keys, "dangling_keys": c.dangling_keys}
            for c in survey.citation_sentences
        ],
        "warnings": survey.warnings,
    }


def decomposition_from_dict(doc: dict) -> DecomposedSurvey:
    outline = OutlineTree(
        root=_node_from_dict(doc["outline"]["root"]),
        max_depth=doc["outline"]["max_depth"],
    )
    return DecomposedSurvey(
        outline=outline,
        outline_paths=[
            OutlinePathDocument(
                parent_path=d["parent_path"], leaf_titles=d["leaf_titles"],
                rendered_text=d["rendered_text"],
            )
            for d in doc["outline_paths"]
        ],
        sections=[
            ContentSection(
                heading_path=s["heading_path"], body=s["body"], index=s["index"],
                is_container=s["is_container"],
            )
            for s in doc["sections"]
        ],
        references=[
            ReferenceEntry(key=r["key"], text=r["text"], index=r["index"])
            for r in doc["references"]
        ],
        citation_sentences=[
            CitationSentence(
                section_index=c["section_index"], sentence=c["sentence"],
                cited_keys=c["cited_keys"], dangling_keys=c["dangling_keys"],
            )
            for c in doc["citation_sentences"]
        ],
        warnings=doc.get("warnings", []),
    )
