"""Turn parsed inference responses into trajectory-cache JSONL.

The output format is the cache schema consumed by the entropick toolkit:
one JSON object per line with problem_id, sample_id, topk_logprobs,
finish_reason, and an optional extracted answer. This package writes the
format directly; it never imports the consumer.
"""

from __future__ import annotations

import json
import logging
import re
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path

from .responses import ParsedChoice, ResponseFormatError, parse_response

logger = logging.getLogger(__name__)

TOPK_LIMIT = 10


@dataclass
class ExportJob:
    """What to export and where.

    File mode (``input_files``) parses saved response JSON, one file per
    problem; live mode (``endpoint`` + ``prompts``) queries an
    OpenAI-compatible server. File mode is the deterministic, tested path.
    """

    out_path: str
    input_files: list[str] = field(default_factory=list)
    problem_ids: list[str] | None = None
    endpoint: str | None = None
    model: str | None = None
    prompts: list[str] = field(default_factory=list)
    samples: int = 64
    temperature: float = 0.7
    top_logprobs: int = TOPK_LIMIT
    answer_pattern: str | None = None
    timeout: float = 120.0

    def __post_init__(self):
        if not (1 <= self.top_logprobs <= TOPK_LIMIT):
            raise ValueError(f"top_logprobs must be in [1, {TOPK_LIMIT}]")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.problem_ids is not None and len(self.problem_ids) != len(self.input_files):
            raise ValueError("problem_ids must match input_files one to one")
        if not self.input_files and not (self.endpoint and self.prompts):
            raise ValueError("provide input response files, or an endpoint with prompts")


@dataclass
class ExportStats:
    records: int
    skipped: int


def extract_answer(text: str, pattern: str | None) -> str | None:
    if not pattern or not text:
        return None
    matches = list(re.finditer(pattern, text))
    if not matches:
        return None
    last = matches[-1]
    return last.group(1) if last.groups() else last.group(0)


def record_line(problem_id: str, sample_id: int, choice: ParsedChoice,
                answer_pattern: str | None) -> str:
    obj = {
        "problem_id": problem_id,
        "sample_id": sample_id,
        "topk_logprobs": choice.token_logprobs,
        "finish_reason": choice.finish_reason,
    }
    answer = extract_answer(choice.text, answer_pattern)
    if answer is not None:
        obj["answer"] = answer
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def _collect_file_mode(job: ExportJob):
    for i, path in enumerate(job.input_files):
        problem_id = job.problem_ids[i] if job.problem_ids else Path(path).stem
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        yield problem_id, obj


def _collect_live_mode(job: ExportJob):
    url = job.endpoint.rstrip("/") + "/chat/completions"
    for i, prompt in enumerate(job.prompts):
        payload = {
            "model": job.model,
            "messages": [{"role": "user", "content": prompt}],
            "n": job.samples,
            "temperature": job.temperature,
            "logprobs": True,
            "top_logprobs": job.top_logprobs,
        }
        request = urllib.request.Request(
            url,
            data=json.dumps(payload).encode("utf-8"),
            headers={"Content-Type": "application/json"},
        )
        with urllib.request.urlopen(request, timeout=job.timeout) as response:
            yield f"prompt-{i:04d}", json.loads(response.read().decode("utf-8"))


def export(job: ExportJob) -> ExportStats:
    """Write the cache file; returns how many records were written/skipped.

    Choices with an empty generation are logged and skipped; a response
    without logprobs aborts with instructions for the missing request
    parameter.
    """
    source = _collect_file_mode(job) if job.input_files else _collect_live_mode(job)
    lines = []
    skipped = 0
    for problem_id, obj in source:
        try:
            choices = parse_response(obj, job.top_logprobs)
        except ResponseFormatError as exc:
            raise ResponseFormatError(f"{problem_id}: {exc}") from exc
        for sample_id, choice in enumerate(choices):
            if not choice.token_logprobs:
                logger.warning("skipping %s/%s: empty generation", problem_id, sample_id)
                skipped += 1
                continue
            lines.append(
                ((problem_id, sample_id),
                 record_line(problem_id, sample_id, choice, job.answer_pattern))
            )
    lines.sort(key=lambda item: item[0])
    with open(job.out_path, "w", encoding="utf-8") as fh:
        for _, line in lines:
            fh.write(line + "\n")
    if skipped:
        logger.warning("skipped %d empty completions", skipped)
    return ExportStats(records=len(lines), skipped=skipped)
