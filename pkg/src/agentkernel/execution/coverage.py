"""Concept-coverage check for constrained generation tasks."""

from __future__ import annotations

import re

from ..errors import ValidationError

# Single-suffix strips only; doubled consonants ("sitting" -> "sitt") are
# deliberately out of grammar.
SUFFIXES = ("s", "es", "ed", "ing", "d")

_WORD = re.compile(r"[a-z0-9']+")


def word_forms(word: str) -> set[str]:
    """The word plus every single-suffix-stripped variant of it."""
    forms = {word}
    for suffix in SUFFIXES:
        if word.endswith(suffix) and len(word) > len(suffix):
            forms.add(word[: -len(suffix)])
    return forms


def concept_coverage(text: str, concepts: list[str]) -> tuple[set[str], set[str]]:
    """Partition ``concepts`` into (covered, missing) for the given text.

    A concept is covered iff some word of the text, lowercased, matches it
    up to stripping one of the suffixes s/es/ed/ing/d from either side.
    """
    if not concepts:
        raise ValidationError("concepts must be non-empty")
    for concept in concepts:
        if not concept or concept != concept.lower():
            raise ValidationError(f"concepts must be lowercase tokens, got {concept!r}")
    words = _WORD.findall(text.lower())
    form_sets = [word_forms(w) for w in words]
    covered: set[str] = set()
    for concept in concepts:
        targets = word_forms(concept)
        if any(forms & targets for forms in form_sets):
            covered.add(concept)
    return covered, set(concepts) - covered
