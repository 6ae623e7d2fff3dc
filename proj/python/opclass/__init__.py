"""Python bindings for the opclass toolkit."""

import json as _json

from ._core import (
    Error,
    dedup_one_to_one as _dedup_one_to_one,
    evaluate,
    featurize,
    generate_ngrams,
    pad_tokens,
    parse_opcode_text,
    percentile,
    run_cli,
)

__all__ = [
    "Error",
    "dedup_one_to_one",
    "evaluate",
    "featurize",
    "generate_ngrams",
    "pad_tokens",
    "parse_opcode_text",
    "percentile",
    "run_cli",
]


def dedup_one_to_one(source, destination):
    """Copy `source` to `destination` keeping each software under one group."""
    return _json.loads(_dedup_one_to_one(str(source), str(destination)))
