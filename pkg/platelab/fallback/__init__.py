"""
VLM fallback: sanitisation of model answers, the HTTP client, an oracle reader and a mock server.
"""

from platelab.fallback.client import (
    HttpVlmClient,
    OracleVlm,
    VlmPort,
    VlmRequest,
    VlmResult,
    corrupt_plate,
    query_vlm,
)
from platelab.fallback.mock_server import MockVlmServer, payload_key
from platelab.fallback.sanitize import PLATE_PATTERN, sanitize
