"""Small helpers shared by several modules."""

import hashlib
import string

_PUNCT = string.punctuation


def derive_seed(*parts: object) -> int:
    """Stable 64-bit seed derived from the string forms of ``parts``.

    Unlike ``hash()``, the result does not change between interpreter runs,
    so anything seeded through here is reproducible across machines.
    """
    blob = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


def split_token(token: str) -> tuple[str, str, str]:
    """Split a whitespace token into (leading punct, core, trailing punct)."""
    start, end = 0, len(token)
    while start < end and token[start] in _PUNCT:
        start += 1
    while end > start and token[end - 1] in _PUNCT:
        end -= 1
    return token[:start], token[start:end], token[end:]


def match_case(model: str, replacement: str) -> str:
    """Capitalize ``replacement`` when ``model`` starts uppercase."""
    if model and model[0].isupper():
        return replacement[:1].upper() + replacement[1:]
    return replacement
