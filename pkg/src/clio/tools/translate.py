"""Translation with language gating and byte-exact source retention."""

from __future__ import annotations

from clio.errors import UnsupportedLanguage

# Target languages the pipeline accepts; sources are whatever the backend
# detects. Mirrors the language inventory the corpus is known to contain.
SUPPORTED_LANGUAGES = frozenset({
    "english", "chinese", "russian", "japanese", "french", "latin",
    "german", "classical chinese", "dutch", "tibetan", "armenian",
    "arabic", "khitan", "ancient greek", "khmer", "indonesian",
    "old tibetan", "sanskrit", "old uyghur", "middle polish", "aramaic",
    "danish", "bosnian", "italian", "macedonian", "yukaghir", "spanish",
})


def translate(text: str, target_language: str, backend) -> dict:
    """Translate text, keeping the original byte-for-byte in the result.

    Empty input returns an empty translation without touching the backend.
    Unknown target languages raise UnsupportedLanguage before any call.
    """
    normalized = " ".join(target_language.strip().lower().split())
    if normalized not in SUPPORTED_LANGUAGES:
        raise UnsupportedLanguage(
            f"unsupported target language: {target_language!r}")
    if text == "":
        return {"original": "", "translation": "",
                "source_language_detected": "unknown",
                "target_language": normalized}
    reply = backend.translate(text, normalized)
    return {
        "original": text,
        "translation": reply.get("translation", ""),
        "source_language_detected": reply.get("detected_source", "unknown"),
        "target_language": normalized,
    }
