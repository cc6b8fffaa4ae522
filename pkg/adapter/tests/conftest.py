from __future__ import annotations

from pathlib import Path

import pytest

from argex_adapter.model import AdapterConfig, ScaffoldDecoder

GOLDEN_DIR = Path(__file__).resolve().parents[2] / "protocol" / "golden"


@pytest.fixture(scope="session")
def decoder() -> ScaffoldDecoder:
    return ScaffoldDecoder(AdapterConfig())


@pytest.fixture(scope="session")
def golden_request_lines() -> list[bytes]:
    return (GOLDEN_DIR / "requests.jsonl").read_bytes().splitlines()
