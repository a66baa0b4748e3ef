import hashlib
import json
import math
from typing import Any, Sequence, Tuple

Word = Tuple[int, ...]


def parse_word(text: str) -> Word:
    """Convert a config key like "011" or "0,1,12" into a word tuple."""
    text = text.strip()
    if not text:
        raise ValueError("Empty word")
    parts = text.split(",") if "," in text else list(text)
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise ValueError(f"Invalid word format: {text}. Expected digits or comma-separated symbols.")


def word_to_str(word: Sequence[int]) -> str:
    if any(s > 9 for s in word):
        return ",".join(str(s) for s in word)
    return "".join(str(s) for s in word)


def format_float(value: float) -> str:
    """Shortest string that parses back to the same float."""
    value = float(value)
    if math.isnan(value) or math.isinf(value):
        return str(value)
    return repr(value)


def format_cell(value: Any) -> str:
    if isinstance(value, (bool,)) or value is None:
        return "" if value is None else str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if hasattr(value, "item"):
        return format_cell(value.item())
    return str(value)


def to_jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if hasattr(value, "tolist"):
        return to_jsonable(value.tolist())
    return value


def canonical_json(data: Any) -> str:
    return json.dumps(to_jsonable(data), sort_keys=True, separators=(",", ":"))


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()
