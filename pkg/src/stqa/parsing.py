"""Rule-based extraction of structured answers from free-text model output."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .templates import SCHEMAS
from .vocab import UnknownLabel, Vocabulary, normalize_surface

OK, PARTIAL, FAILED = "ok", "partial", "failed"


class ParseFailure(ValueError):
    def __init__(self, missing, reason: str = ""):
        missing = [missing] if isinstance(missing, str) else list(missing)
        if not missing:
            raise ValueError("ParseFailure needs at least one missing field")
        super().__init__(reason or f"could not extract {', '.join(missing)}")
        self.missing = missing
        self.reason = reason or str(self)


@dataclass
class ParsedAnswer:
    schema: str
    raw_text: str
    fields: dict = field(default_factory=dict)
    missing: list[str] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def parse_status(self) -> str:
        if not self.missing:
            return OK
        return PARTIAL if self.fields else FAILED

    def get(self, key, default=None):
        return self.fields.get(key, default)


_PAREN_LETTER = re.compile(r"[(\[]\s*([A-Da-d])\s*[)\]]")
_CUE_LETTER = re.compile(r"\b(?:answer|option|choice)\s*(?:is|:)?\s*([A-Da-d])\b", re.I)
_UPPER_LETTER = re.compile(r"(?<![A-Za-z0-9])([A-D])(?![A-Za-z0-9])")


def parse_mc_choice(text: str) -> str:
    """Chosen option letter; explicit forms like "(B)" win over bare letters."""
    bare = re.sub(r"[^A-Za-z]", "", text or "")
    if len(bare) == 1 and bare.upper() in "ABCD":
        return bare.upper()
    for pattern in (_PAREN_LETTER, _CUE_LETTER, _UPPER_LETTER):
        m = pattern.search(text or "")
        if m:
            return m.group(1).upper()
    raise ParseFailure("letter", "no option letter found")


_BOX = re.compile(r"[<\[]\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*[>\]]")


def _box_spans(text: str) -> list[tuple[int, int, tuple[int, int, int, int] | None]]:
    out = []
    for m in _BOX.finditer(text):
        box = tuple(int(g) for g in m.groups())
        x1, y1, x2, y2 = box
        ok = all(0 <= v <= 1000 for v in box) and x1 < x2 and y1 < y2
        out.append((m.start(), m.end(), box if ok else None))
    return out


def parse_bboxes(text: str, required: bool = False) -> list[tuple[int, int, int, int]]:
    """Integer [0,1000] boxes written as <x1, y1, x2, y2> or [x1, y1, x2, y2].

    Groups with an out-of-range coordinate or inverted corners are dropped.
    """
    boxes = [b for _, _, b in _box_spans(text or "") if b is not None]
    if required and not boxes:
        raise ParseFailure("bbox", "no valid bounding box")
    return boxes


def _mask_boxes(text: str) -> str:
    for start, end, _ in reversed(_box_spans(text)):
        text = text[:start] + " " * (end - start) + text[end:]
    return text


# a trailing sentence period is not part of the number
_DECIMAL = re.compile(r"(?<![\d.])(\d+\.\d+)(?!\.?\d)")
_RANGE = re.compile(r"(?<![\d.])(\d+\.\d+)\s*(?:-|\u2013|\u2014|to)\s*(\d+\.\d+)(?!\.?\d)")


def _fraction(literal: str) -> float | None:
    decimals = len(literal.split(".")[1])
    if not 1 <= decimals <= 4:
        return None
    v = float(literal)
    return v if 0.0 <= v <= 1.0 else None


def parse_timestamps(text: str, required: bool = False) -> list[float]:
    """Normalized timestamps (decimal literals in [0, 1]) in order of appearance."""
    masked = _mask_boxes(text or "")
    out = [v for v in (_fraction(m.group(1)) for m in _DECIMAL.finditer(masked)) if v is not None]
    if required and not out:
        raise ParseFailure("timestamp", "no timestamp in [0, 1]")
    return out


def parse_windows(text: str) -> list[tuple[float, float]]:
    """``a - b`` timestamp pairs, kept in written order."""
    masked = _mask_boxes(text or "")
    out = []
    for m in _RANGE.finditer(masked):
        a, b = _fraction(m.group(1)), _fraction(m.group(2))
        if a is not None and b is not None:
            out.append((a, b))
    return out


_SPEED_KEYS = {
    "minimum": "min", "min": "min", "lowest": "min",
    "maximum": "max", "max": "max", "highest": "max", "peak": "max",
    "mean": "mean", "average": "mean", "avg": "mean",
}
_SPEED_KEY_RE = re.compile(r"\b(" + "|".join(sorted(_SPEED_KEYS, key=len, reverse=True)) + r")\b", re.I)
_NUMBER = re.compile(r"(?<![\w.])(\d+(?:\.\d+)?)(?!\.?\d)")


def parse_speeds(text: str) -> dict[str, float]:
    """Bind each of min/max/mean to the first number following its keyword.

    The search for a keyword's number stops at the next keyword. Raises
    ParseFailure when none of the three is found; a partial dict is returned
    otherwise.
    """
    text = _mask_boxes(text or "")
    keys = list(_SPEED_KEY_RE.finditer(text))
    out: dict[str, float] = {}
    for i, m in enumerate(keys):
        name = _SPEED_KEYS[m.group(1).lower()]
        if name in out:
            continue
        stop = keys[i + 1].start() if i + 1 < len(keys) else len(text)
        num = _NUMBER.search(text, m.end(), stop)
        if num:
            out[name] = float(num.group(1))
    if not out:
        raise ParseFailure(["min", "max", "mean"], "no speed values")
    return out


_DESCRIPTORS = [
    (re.compile(r"\b(?:stationary|static|motionless|not moving|still)\b", re.I), "stationary"),
    (re.compile(r"\b(?:moving slowly|slowly|slow)\b", re.I), "moving slowly"),
    (re.compile(r"\b(?:moving actively|actively|active|fast|rapidly|quickly)\b", re.I), "moving actively"),
]


def _first_term(text: str, table) -> str | None:
    best = None
    for pattern, value in table:
        m = pattern.search(text or "")
        if m and (best is None or m.start() < best[0]):
            best = (m.start(), value)
    return None if best is None else best[1]


def parse_descriptor(text: str) -> str | None:
    return _first_term(text, _DESCRIPTORS)


def _terms(table: dict[str, str]):
    return [(re.compile(rf"\b(?:{pat})\b", re.I), value) for value, pat in table.items()]


_HORIZONTAL = _terms({"left": "left", "right": "right"})
_VERTICAL = _terms({"above": "above|over", "below": "below|under|underneath|beneath"})
_CHANGE = _terms({
    "closer": "closer|nearer|approaching|converging",
    "further": "further|farther|away|apart|diverging",
    "unchanged": "unchanged|constant|no change|same distance",
})
_THIRDS_H = _terms({"left": "left", "center": "center|centre", "right": "right"})
_THIRDS_V = _terms({"top": "top|upper", "middle": "middle", "bottom": "bottom|lower"})
_DIRECTION = _terms({"left": "left|leftmost", "right": "right|rightmost",
                     "top": "top|topmost", "bottom": "bottom|bottommost"})
_VERDICT = _terms({"same": "same|identical", "different": "different|differ|differs"})


def parse_relation_terms(text: str) -> dict[str, str]:
    """First horizontal, vertical and distance-change terms, with synonyms."""
    out = {}
    for key, table in (("horizontal", _HORIZONTAL), ("vertical", _VERTICAL), ("change", _CHANGE)):
        value = _first_term(text, table)
        if value is not None:
            out[key] = value
    if not out:
        raise ParseFailure(["horizontal", "vertical", "change"], "no relation terms")
    return out


def canonicalize_entity(span: str, vocab: Vocabulary, category: str | None = None) -> str:
    """Canonical label for a text span: exact lookup, else the longest mention inside it."""
    try:
        return vocab.canonical(span, category)
    except UnknownLabel:
        pass
    hits = vocab.find(span, category)
    if not hits:
        raise ParseFailure(category or "entity", f"no vocabulary match for {span!r}")
    norm = normalize_surface(span)
    # longest surface wins; earliest on ties
    best = max(hits, key=lambda h: (_surface_len(norm, h[0], vocab), -h[0]))
    return best[1]


def _surface_len(norm: str, pos: int, vocab: Vocabulary) -> int:
    m = vocab._pattern.match(norm, pos)
    return len(m.group(0)) if m else 0


def _entities(text: str, vocab: Vocabulary, category: str) -> list[str]:
    return [label for _, label in vocab.find(text, category)]


# --- per-schema extraction -------------------------------------------------

_WINDOW_KW = re.compile(r"\bwindow\b", re.I)


def _parse_temporal_window(text, vocab, p: ParsedAnswer):
    hits = list(_WINDOW_KW.finditer(text))
    items = []
    prev_end = 0
    for i, m in enumerate(hits):
        stop = hits[i + 1].start() if i + 1 < len(hits) else len(text)
        item = {}
        names = _entities(text[prev_end:m.start()], vocab, "instrument")
        if names:
            item["name"] = names[-1]
        region = text[m.end():stop]
        ranges = parse_windows(region)
        if ranges:
            item["start"], item["end"] = ranges[0]
        spans = [(s, e, b) for s, e, b in _box_spans(region) if b is not None]
        if len(spans) >= 1:
            item["start_bbox"] = list(spans[0][2])
        if len(spans) >= 2:
            item["end_bbox"] = list(spans[1][2])
            prev_end = m.end() + spans[1][1]
        else:
            prev_end = m.end()
        items.append(item)
    required = set(SCHEMAS["temporal_window"].item)
    complete = [it for it in items if required <= set(it)]
    p.extras["items_partial"] = [it for it in items if not required <= set(it)]
    if complete:
        p.fields["items"] = complete
    if not complete or p.extras["items_partial"]:
        p.missing.append("items")


def _first_entity(text, vocab, category):
    found = _entities(text, vocab, category)
    return found[0] if found else None


def _put(p: ParsedAnswer, key: str, value):
    if value is None:
        p.missing.append(key)
    else:
        p.fields[key] = value


def _first_box(text):
    boxes = parse_bboxes(text)
    return list(boxes[0]) if boxes else None


def _first_time(text):
    ts = parse_timestamps(text)
    return ts[0] if ts else None


def _parse_generic(schema_id: str, text: str, vocab: Vocabulary, p: ParsedAnswer):
    kinds = SCHEMAS[schema_id].answer
    instruments = _entities(text, vocab, "instrument")
    verbs = _entities(text, vocab, "verb")
    targets = _entities(text, vocab, "target")
    indexed = {"name1": 0, "name2": 1, "verb1": 0, "verb2": 1, "target1": 0, "target2": 1}
    speeds = {}
    if {"min", "max", "mean"} & set(kinds):
        try:
            speeds = parse_speeds(text)
        except ParseFailure:
            speeds = {}
    for key in kinds:
        if key in ("name", "name1", "name2"):
            i = indexed.get(key, 0)
            _put(p, key, instruments[i] if len(instruments) > i else None)
        elif key in ("verb", "verb1", "verb2"):
            i = indexed.get(key, 0)
            _put(p, key, verbs[i] if len(verbs) > i else None)
        elif key in ("target", "target1", "target2"):
            i = indexed.get(key, 0)
            _put(p, key, targets[i] if len(targets) > i else None)
        elif key == "bbox":
            _put(p, key, _first_box(text))
        elif key == "t":
            _put(p, key, _first_time(text))
        elif key in ("min", "max", "mean"):
            _put(p, key, speeds.get(key))
        elif key == "descriptor":
            _put(p, key, parse_descriptor(text))
        elif key == "horizontal":
            table = _THIRDS_H if schema_id in ("frame_segment", "cot") else _HORIZONTAL
            _put(p, key, _first_term(text, table))
        elif key == "vertical":
            table = _THIRDS_V if schema_id in ("frame_segment", "cot") else _VERTICAL
            _put(p, key, _first_term(text, table))
        elif key == "change":
            _put(p, key, _first_term(text, _CHANGE))
        elif key == "direction":
            _put(p, key, _first_term(text, _DIRECTION))
        elif key == "verdict":
            _put(p, key, _first_term(text, _VERDICT))
        elif key == "letter":
            try:
                _put(p, key, parse_mc_choice(text))
            except ParseFailure:
                _put(p, key, None)
        else:
            raise KeyError(f"no extractor for field {key!r}")


_CONCLUSION = re.compile(r"\b(?:conclusion|therefore|in summary)\b", re.I)


def _parse_cot(text, vocab, p: ParsedAnswer):
    m = None
    for m in _CONCLUSION.finditer(text):
        pass
    pre, post = (text[:m.start()], text[m.end():]) if m else (text, "")
    _parse_generic("cot", pre, vocab, p)
    conclusion = {
        "name": _first_entity(post, vocab, "instrument"),
        "verb": _first_entity(post, vocab, "verb"),
        "target": _first_entity(post, vocab, "target"),
    }
    p.extras["conclusion"] = conclusion
    p.extras["evidence"] = {
        "horizontal": {v for pat, v in _THIRDS_H if pat.search(pre)},
        "vertical": {v for pat, v in _THIRDS_V if pat.search(pre)},
        "descriptor": {v for pat, v in _DESCRIPTORS if pat.search(pre)},
        "verb": set(_entities(pre, vocab, "verb")),
        "target": set(_entities(pre, vocab, "target")),
    }
    for key in ("name", "verb", "target"):
        if conclusion[key] is not None:
            if key in p.missing:
                p.missing.remove(key)
            p.fields[key] = conclusion[key]


def parse_answer(text: str, schema: str, vocab: Vocabulary) -> ParsedAnswer:
    """Extract every answer field of ``schema`` from free text."""
    if schema not in SCHEMAS:
        raise KeyError(f"unknown schema {schema!r}")
    text = text or ""
    p = ParsedAnswer(schema, text)
    if schema == "temporal_window":
        _parse_temporal_window(text, vocab, p)
    elif schema == "cot":
        _parse_cot(text, vocab, p)
    else:
        _parse_generic(schema, text, vocab, p)
    return p
