"""Words over named letters, with inverses and a shared text syntax.

A word is a tuple of letters; a letter is a non-empty string containing no
whitespace.  Inverse letters carry the suffix ``^-1``; the hash separator
``#`` is its own inverse.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence

Word = tuple[str, ...]

HASH = "#"
EPSILON: Word = ()

_INV = "^-1"


class ParseError(ValueError):
    """Raised on malformed word or equation text; carries the position."""

    def __init__(self, message: str, position: int = 0):
        super().__init__(f"{message} (at token {position})")
        self.position = position


def check_letter(letter: str) -> str:
    if not letter or any(ch.isspace() for ch in letter):
        raise ValueError(f"invalid letter {letter!r}")
    return letter


def inverse_letter(letter: str) -> str:
    """The formal inverse: x <-> x^-1, with # fixed."""
    if letter == HASH:
        return letter
    if letter.endswith(_INV):
        return letter[: -len(_INV)]
    return letter + _INV


def base_letter(letter: str) -> str:
    return letter[: -len(_INV)] if letter.endswith(_INV) else letter


def is_inverse(letter: str) -> bool:
    return letter.endswith(_INV)


def inverse_word(word: Sequence[str]) -> Word:
    """Involution on words: reverse and invert each letter."""
    return tuple(inverse_letter(x) for x in reversed(word))


def power(letter: str, exponent: int) -> Word:
    """exponent copies of letter, or |exponent| copies of its inverse."""
    if exponent >= 0:
        return (letter,) * exponent
    return (inverse_letter(letter),) * (-exponent)


def free_reduce(word: Sequence[str]) -> Word:
    out: list[str] = []
    for x in word:
        if out and out[-1] == inverse_letter(x) and x != HASH:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def render_word(word: Sequence[str]) -> str:
    """Space-separated letters; the empty word renders as '1'."""
    return " ".join(word) if word else "1"


def parse_word(text: str) -> Word:
    """Inverse of render_word.  Tokens are whitespace-separated letters."""
    tokens = text.split()
    if tokens == ["1"]:
        return ()
    for i, tok in enumerate(tokens):
        try:
            check_letter(tok)
        except ValueError:
            raise ParseError(f"bad letter {tok!r}", i) from None
    return tuple(tokens)


def words_over(alphabet: Sequence[str], max_len: int) -> Iterator[Word]:
    """All words of length <= max_len, shortest first, alphabet order."""
    letters = list(alphabet)
    layer: list[Word] = [()]
    yield ()
    for _ in range(max_len):
        layer = [w + (x,) for w in layer for x in letters]
        yield from layer


class LetterCoder:
    """Bijection between letters and single private-use characters.

    Long sentential forms are manipulated as ordinary strings so that
    endomorphism application runs through str.translate.
    """

    _BASE = 0xE000  # private use area

    def __init__(self, letters: Iterable[str] = ()):
        self._to_char: dict[str, str] = {}
        self._to_letter: dict[str, str] = {}
        for x in letters:
            self.char(x)

    def char(self, letter: str) -> str:
        ch = self._to_char.get(letter)
        if ch is None:
            ch = chr(self._BASE + len(self._to_char))
            self._to_char[letter] = ch
            self._to_letter[ch] = letter
        return ch

    def encode(self, word: Sequence[str]) -> str:
        return "".join(self.char(x) for x in word)

    def decode(self, packed: str) -> Word:
        return tuple(self._to_letter[ch] for ch in packed)

    def known(self, letter: str) -> bool:
        return letter in self._to_char
