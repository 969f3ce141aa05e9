"""Export OpenAI-compatible inference responses to trajectory-cache JSONL."""

from .export import ExportJob, ExportStats, export, extract_answer
from .responses import MissingLogprobsError, ResponseFormatError, map_finish_reason, parse_response

__version__ = "0.1.0"
