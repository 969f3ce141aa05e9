"""Parsers for OpenAI-compatible completion responses with logprobs.

Both the chat format (``choices[].logprobs.content[].top_logprobs``) and
the legacy text-completion format (``choices[].logprobs.top_logprobs`` as
token -> logprob maps) are understood. Only fields the trajectory cache
needs are extracted.
"""

from __future__ import annotations

from dataclasses import dataclass


class ResponseFormatError(ValueError):
    pass


class MissingLogprobsError(ResponseFormatError):
    def __init__(self):
        super().__init__(
            "response carries no token logprobs; re-run the request with "
            '"logprobs": true and "top_logprobs": <k> (chat API) or '
            '"logprobs": <k> (completions API)'
        )


_FINISH_MAP = {"stop": "stop", "length": "length"}


def map_finish_reason(raw) -> str:
    return _FINISH_MAP.get(raw, "other")


@dataclass
class ParsedChoice:
    index: int
    finish_reason: str
    text: str
    token_logprobs: list[list[float]]  # per token, descending, clamped <= 0


def _clean_token(values, k: int) -> list[float]:
    cleaned = sorted((min(float(v), 0.0) for v in values), reverse=True)
    if not cleaned:
        raise MissingLogprobsError()
    return cleaned[:k]


def _parse_chat_choice(choice: dict, k: int) -> ParsedChoice:
    logprobs = choice.get("logprobs") or {}
    content = logprobs.get("content")
    if content is None:
        raise MissingLogprobsError()
    tokens = []
    for entry in content:
        top = entry.get("top_logprobs")
        if top:
            tokens.append(_clean_token((t["logprob"] for t in top), k))
        elif "logprob" in entry:
            tokens.append(_clean_token([entry["logprob"]], k))
        else:
            raise MissingLogprobsError()
    text = (choice.get("message") or {}).get("content") or ""
    return ParsedChoice(
        index=int(choice.get("index", 0)),
        finish_reason=map_finish_reason(choice.get("finish_reason")),
        text=text,
        token_logprobs=tokens,
    )


def _parse_legacy_choice(choice: dict, k: int) -> ParsedChoice:
    logprobs = choice.get("logprobs") or {}
    top = logprobs.get("top_logprobs")
    token_lps = logprobs.get("token_logprobs")
    if top is None and token_lps is None:
        raise MissingLogprobsError()
    tokens = []
    if top is not None:
        for i, entry in enumerate(top):
            if entry:
                tokens.append(_clean_token(entry.values(), k))
            elif token_lps and token_lps[i] is not None:
                tokens.append(_clean_token([token_lps[i]], k))
            else:
                raise MissingLogprobsError()
    else:
        tokens = [_clean_token([lp], k) for lp in token_lps if lp is not None]
    return ParsedChoice(
        index=int(choice.get("index", 0)),
        finish_reason=map_finish_reason(choice.get("finish_reason")),
        text=choice.get("text") or "",
        token_logprobs=tokens,
    )


def parse_response(obj: dict, k: int) -> list[ParsedChoice]:
    """All choices of one response object, in choice-index order."""
    choices = obj.get("choices")
    if not isinstance(choices, list) or not choices:
        raise ResponseFormatError("response has no choices array")
    parsed = []
    for choice in choices:
        if "message" in choice or (choice.get("logprobs") or {}).get("content") is not None:
            parsed.append(_parse_chat_choice(choice, k))
        else:
            parsed.append(_parse_legacy_choice(choice, k))
    parsed.sort(key=lambda c: c.index)
    return parsed
