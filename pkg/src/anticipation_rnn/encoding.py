"""Melodico-rhythmic token encoding of monophonic melodies.

A melody is a stream of sixteenth-note steps: a note token ("F#4", real note
names, accidentals written as #/b) starts a note, and each HOLD token ("__")
sustains it one more sixteenth. START/END pad sequences during training and
NC marks unconstrained positions in constraint sequences.

Corpus files are UTF-8 text, one sequence per line, tokens separated by
whitespace, "#" starting a comment line. Serialization is bit-exact: parse
then serialize reproduces the token line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, TextIO

from .errors import CorpusParseError, InvalidInputError, OutOfSpellingError

SIXTEENTHS_PER_BEAT = 4

HOLD_SURFACE = "__"
START_SURFACE = "START"
END_SURFACE = "END"
NC_SURFACE = "NC"

_NOTE_RE = re.compile(r"^([A-G])(#{1,2}|b{1,2})?(-?\d+)$")

# semitone offset of each letter within an octave (C-based)
_LETTER_SEMITONES = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}
_LETTERS = "CDEFGAB"

# simplest spelling of each upward chromatic interval within the octave,
# as (diatonic letter steps, semitones)
_SIMPLE_INTERVALS = {
    0: (0, 0),
    1: (1, 1),
    2: (1, 2),
    3: (2, 3),
    4: (2, 4),
    5: (3, 5),
    6: (3, 6),
    7: (4, 7),
    8: (5, 8),
    9: (5, 9),
    10: (6, 10),
    11: (6, 11),
}


class TokenKind(Enum):
    NOTE = "note"
    HOLD = "hold"
    START = "start"
    END = "end"
    NC = "nc"


@dataclass(frozen=True)
class Token:
    """One vocabulary symbol; NOTE tokens carry letter/accidental/octave."""

    kind: TokenKind
    letter: str | None = None
    accidental: int = 0  # -2 (double flat) .. +2 (double sharp)
    octave: int | None = None

    @property
    def surface(self) -> str:
        if self.kind is TokenKind.NOTE:
            marks = "#" * self.accidental if self.accidental > 0 else "b" * (-self.accidental)
            return f"{self.letter}{marks}{self.octave}"
        return {
            TokenKind.HOLD: HOLD_SURFACE,
            TokenKind.START: START_SURFACE,
            TokenKind.END: END_SURFACE,
            TokenKind.NC: NC_SURFACE,
        }[self.kind]

    def __str__(self) -> str:
        return self.surface


HOLD = Token(TokenKind.HOLD)
START = Token(TokenKind.START)
END = Token(TokenKind.END)
NC = Token(TokenKind.NC)

_SPECIALS = {HOLD_SURFACE: HOLD, START_SURFACE: START, END_SURFACE: END, NC_SURFACE: NC}


def parse_token(surface: str) -> Token:
    """Surface text to Token; the mapping is a bijection."""
    special = _SPECIALS.get(surface)
    if special is not None:
        return special
    m = _NOTE_RE.match(surface)
    if not m:
        raise InvalidInputError(f"unknown token {surface!r}")
    letter, marks, octave = m.groups()
    accidental = 0
    if marks:
        accidental = len(marks) if marks[0] == "#" else -len(marks)
    return Token(TokenKind.NOTE, letter, accidental, int(octave))


def note(surface: str) -> Token:
    tok = parse_token(surface)
    if tok.kind is not TokenKind.NOTE:
        raise InvalidInputError(f"{surface!r} is not a note token")
    return tok


def chromatic_pitch(tok: Token) -> int:
    """Absolute semitone number (C of octave n sits at 12n)."""
    if tok.kind is not TokenKind.NOTE:
        raise InvalidInputError("chromatic pitch is defined for notes only")
    return 12 * tok.octave + _LETTER_SEMITONES[tok.letter] + tok.accidental


def diatonic_index(tok: Token) -> int:
    """Letter-name staff position (C of octave n sits at 7n)."""
    if tok.kind is not TokenKind.NOTE:
        raise InvalidInputError("diatonic index is defined for notes only")
    return 7 * tok.octave + _LETTERS.index(tok.letter)


def transpose_note(tok: Token, interval: tuple[int, int]) -> Token:
    """Shift a note by (diatonic steps, semitones), preserving spelling rules.

    The letter moves by the diatonic part; the accidental absorbs whatever is
    left of the chromatic part. More than a double accidental raises
    :class:`OutOfSpellingError`.
    """
    diatonic, chromatic = interval
    new_d = diatonic_index(tok) + diatonic
    new_octave, letter_pos = divmod(new_d, 7)
    new_letter = _LETTERS[letter_pos]
    target = chromatic_pitch(tok) + chromatic
    accidental = target - (12 * new_octave + _LETTER_SEMITONES[new_letter])
    if not -2 <= accidental <= 2:
        raise OutOfSpellingError(
            f"{tok.surface} shifted by {interval} needs accidental {accidental:+d}"
        )
    return Token(TokenKind.NOTE, new_letter, accidental, new_octave)


def simple_interval(semitones: int) -> tuple[int, int]:
    """Simplest-spelling interval pair for a chromatic shift in [-11, 11]."""
    if not -11 <= semitones <= 11:
        raise InvalidInputError("chromatic shift must lie in [-11, 11]")
    if semitones >= 0:
        return _SIMPLE_INTERVALS[semitones]
    d, c = _SIMPLE_INTERVALS[-semitones]
    return (-d, -c)


@dataclass(frozen=True)
class MelodySequence:
    """Note/HOLD stream; starts with a note, contains no special tokens."""

    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise InvalidInputError("empty melody sequence")
        if self.tokens[0].kind is not TokenKind.NOTE:
            raise InvalidInputError("a melody cannot begin with a hold")
        for tok in self.tokens:
            if tok.kind not in (TokenKind.NOTE, TokenKind.HOLD):
                raise InvalidInputError(f"special token {tok.surface} inside melody")

    def __len__(self) -> int:
        return len(self.tokens)

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def to_line(self) -> str:
        return " ".join(self.surfaces())


@dataclass(frozen=True)
class Corpus:
    sequences: tuple[MelodySequence, ...]
    name: str = "corpus"

    def __len__(self) -> int:
        return len(self.sequences)


# ---------------------------------------------------------------------------
# Corpus text format
# ---------------------------------------------------------------------------


def parse_corpus(stream: TextIO | str, name: str = "corpus") -> Corpus:
    """Parse corpus text; raises CorpusParseError at the first bad token."""
    if isinstance(stream, str):
        text = stream
    else:
        text = stream.read()
    sequences: list[MelodySequence] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens: list[Token] = []
        for m in re.finditer(r"\S+", line):
            piece, column = m.group(), m.start() + 1
            try:
                tok = parse_token(piece)
            except InvalidInputError as exc:
                raise CorpusParseError(str(exc), line_no, column) from exc
            if tok.kind not in (TokenKind.NOTE, TokenKind.HOLD):
                raise CorpusParseError(
                    f"special token {piece!r} not allowed in a melody", line_no, column
                )
            if not tokens and tok.kind is TokenKind.HOLD:
                raise CorpusParseError("hold token at sequence start", line_no, column)
            tokens.append(tok)
        sequences.append(MelodySequence(tuple(tokens)))
    return Corpus(tuple(sequences), name)


def serialize_corpus(corpus: Corpus) -> str:
    return "\n".join(seq.to_line() for seq in corpus.sequences) + "\n"


# ---------------------------------------------------------------------------
# Note-event view
# ---------------------------------------------------------------------------


def encode_notes(events: Iterable[tuple[str, int]]) -> MelodySequence:
    """(pitch name, duration in sixteenths) events to a token stream."""
    tokens: list[Token] = []
    for pitch, duration in events:
        if duration < 1:
            raise InvalidInputError(f"duration must be >= 1, got {duration}")
        tokens.append(note(pitch))
        tokens.extend([HOLD] * (duration - 1))
    return MelodySequence(tuple(tokens))


def decode_notes(seq: MelodySequence) -> list[tuple[str, int]]:
    """Exact inverse of :func:`encode_notes`."""
    events: list[tuple[str, int]] = []
    for tok in seq.tokens:
        if tok.kind is TokenKind.NOTE:
            events.append((tok.surface, 1))
        else:
            pitch, dur = events[-1]
            events[-1] = (pitch, dur + 1)
    return events


# ---------------------------------------------------------------------------
# Transposition augmentation
# ---------------------------------------------------------------------------


def transpose(seq: MelodySequence, interval: tuple[int, int]) -> MelodySequence:
    """Shift every note by the interval; holds pass through unchanged."""
    out = tuple(
        transpose_note(t, interval) if t.kind is TokenKind.NOTE else t for t in seq.tokens
    )
    return MelodySequence(out)


def pitch_range(corpus: Corpus) -> tuple[Token, Token]:
    """Lowest and highest note observed across the corpus."""
    notes = [t for seq in corpus.sequences for t in seq.tokens if t.kind is TokenKind.NOTE]
    if not notes:
        raise InvalidInputError("corpus contains no notes")
    lo = min(notes, key=chromatic_pitch)
    hi = max(notes, key=chromatic_pitch)
    return lo, hi


def augment(
    corpus: Corpus,
    note_range: tuple[Token, Token] | None = None,
) -> tuple[Corpus, int]:
    """All transpositions by -11..+11 semitones that stay within the range.

    The range defaults to the corpus' own lowest/highest note. Returns the
    augmented corpus (zero shift included, so it always contains the
    original) and the number of omitted (shift, sequence) pairs.
    """
    lo, hi = note_range if note_range is not None else pitch_range(corpus)
    lo_p, hi_p = chromatic_pitch(lo), chromatic_pitch(hi)
    out: list[MelodySequence] = []
    omitted = 0
    for shift in range(-11, 12):
        interval = simple_interval(shift)
        for seq in corpus.sequences:
            if shift == 0:
                out.append(seq)
                continue
            try:
                moved = transpose(seq, interval)
            except OutOfSpellingError:
                omitted += 1
                continue
            pitches = [chromatic_pitch(t) for t in moved.tokens if t.kind is TokenKind.NOTE]
            if all(lo_p <= p <= hi_p for p in pitches):
                out.append(moved)
            else:
                omitted += 1
    return Corpus(tuple(out), f"{corpus.name}+aug"), omitted


# ---------------------------------------------------------------------------
# Vocabulary
# ---------------------------------------------------------------------------


class Vocabulary:
    """Bijection between token surfaces and dense contiguous ids.

    The four special tokens always occupy ids 0..3 (START, END, NC, HOLD);
    note tokens follow, ordered by pitch then surface. HOLD and the notes
    form the melody alphabet; NC additionally appears in constraint
    sequences and START/END only as padding.
    """

    def __init__(self, notes: Iterable[Token]):
        unique: dict[str, Token] = {}
        for tok in notes:
            if tok.kind is not TokenKind.NOTE:
                raise InvalidInputError("vocabulary is built from note tokens plus specials")
            unique[tok.surface] = tok
        ordered = sorted(unique.values(), key=lambda t: (chromatic_pitch(t), t.surface))
        self.tokens: tuple[Token, ...] = (START, END, NC, HOLD, *ordered)
        self._index = {t.surface: i for i, t in enumerate(self.tokens)}
        if len(self._index) != len(self.tokens):
            raise InvalidInputError("duplicate surfaces in vocabulary")

    @classmethod
    def from_corpus(cls, corpus: Corpus) -> "Vocabulary":
        return cls(
            t for seq in corpus.sequences for t in seq.tokens if t.kind is TokenKind.NOTE
        )

    @classmethod
    def from_surfaces(cls, surfaces: Iterable[str]) -> "Vocabulary":
        toks = [parse_token(s) for s in surfaces]
        return cls(t for t in toks if t.kind is TokenKind.NOTE)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, surface: str) -> bool:
        return surface in self._index

    def id_of(self, surface: str) -> int:
        try:
            return self._index[surface]
        except KeyError:
            raise InvalidInputError(f"token {surface!r} not in vocabulary") from None

    def surface_of(self, token_id: int) -> str:
        return self.tokens[token_id].surface

    def token_of(self, token_id: int) -> Token:
        return self.tokens[token_id]

    @property
    def start_id(self) -> int:
        return 0

    @property
    def end_id(self) -> int:
        return 1

    @property
    def nc_id(self) -> int:
        return 2

    @property
    def hold_id(self) -> int:
        return 3

    def melody_ids(self) -> list[int]:
        """Ids of the melody alphabet: HOLD plus every note."""
        return list(range(3, len(self.tokens)))

    def note_surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens[4:]]

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]
