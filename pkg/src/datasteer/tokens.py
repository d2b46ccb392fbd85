"""Backtick tokenization of model text.

The model is instructed to wrap column names, variables, and keywords in
backticks; the UI renders those as distinct editable elements. A string is
split into literal runs and backtick tokens by maximal-munch pairing: each
backtick pairs with the next one, and a final unpaired backtick stays part
of the literal text.

Serialization is the exact inverse (tokens wrapped in backticks, literals
verbatim), so ``serialize(tokenize(s)) == s`` for every string, and
tokenizing a serialized segment list reproduces it.
"""

from __future__ import annotations

from dataclasses import dataclass

BACKTICK = "`"


@dataclass(frozen=True)
class Segment:
    text: str
    is_token: bool


def Literal(text: str) -> Segment:
    return Segment(text, False)


def Token(text: str) -> Segment:
    return Segment(text, True)


@dataclass(frozen=True)
class TokenizedText:
    segments: tuple[Segment, ...]

    def serialize(self) -> str:
        return "".join(
            BACKTICK + s.text + BACKTICK if s.is_token else s.text
            for s in self.segments
        )

    def plain(self) -> str:
        """Text with backticks dropped, for display and searching."""
        return "".join(s.text for s in self.segments)

    def token_texts(self) -> list[str]:
        return [s.text for s in self.segments if s.is_token]

    def is_blank(self) -> bool:
        return self.plain().strip() == ""


def tokenize(text: str) -> TokenizedText:
    segments: list[Segment] = []
    literal_start = 0
    i = 0
    n = len(text)
    while i < n:
        if text[i] == BACKTICK:
            close = text.find(BACKTICK, i + 1)
            if close == -1:
                break  # unpaired: the rest is literal
            if i > literal_start:
                segments.append(Literal(text[literal_start:i]))
            segments.append(Token(text[i + 1 : close]))
            i = close + 1
            literal_start = i
        else:
            i += 1
    if literal_start < n:
        segments.append(Literal(text[literal_start:]))
    return TokenizedText(tuple(segments))


def trim(tt: TokenizedText) -> TokenizedText:
    """Strip leading/trailing whitespace from the outer literal edges."""
    segs = list(tt.segments)
    while segs and not segs[0].is_token:
        stripped = segs[0].text.lstrip()
        if stripped:
            segs[0] = Literal(stripped)
            break
        segs.pop(0)
    while segs and not segs[-1].is_token:
        stripped = segs[-1].text.rstrip()
        if stripped:
            segs[-1] = Literal(stripped)
            break
        segs.pop()
    return TokenizedText(tuple(segs))


def split_outside_tokens(tt: TokenizedText, sep: str) -> tuple[TokenizedText, TokenizedText] | None:
    """Split at the first occurrence of ``sep`` inside a literal segment.

    Returns (left, right) with the separator removed, or None when no
    literal segment contains it. Token contents are never split.
    """
    for idx, seg in enumerate(tt.segments):
        if seg.is_token:
            continue
        pos = seg.text.find(sep)
        if pos == -1:
            continue
        left_segs = list(tt.segments[:idx])
        prefix = seg.text[:pos]
        if prefix:
            left_segs.append(Literal(prefix))
        right_segs: list[Segment] = []
        suffix = seg.text[pos + len(sep):]
        if suffix:
            right_segs.append(Literal(suffix))
        right_segs.extend(tt.segments[idx + 1:])
        return TokenizedText(tuple(left_segs)), TokenizedText(tuple(right_segs))
    return None
