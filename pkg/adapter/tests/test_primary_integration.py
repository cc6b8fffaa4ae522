"""Drive the adapter from the extraction pipeline's own CLI.

The pipeline is consumed strictly through its external interfaces: the
golden request files and the `argex protocol-check` command pointed at a
live adapter server. Skipped when the pipeline package is not installed.
"""
from __future__ import annotations

import importlib.util
import subprocess
import sys
import threading
import time

import httpx
import pytest
import uvicorn

from argex_adapter.app import create_app
from argex_adapter.model import AdapterConfig, ScaffoldDecoder

from conftest import GOLDEN_DIR

pytestmark = pytest.mark.skipif(
    importlib.util.find_spec("argex") is None,
    reason="extraction pipeline CLI not installed",
)


@pytest.fixture(scope="module")
def live_server():
    app = create_app(ScaffoldDecoder(AdapterConfig()))
    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("adapter server did not start")
        time.sleep(0.05)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


def test_protocol_check_passes_against_live_adapter(live_server):
    result = subprocess.run(
        [
            sys.executable,
            "-m",
            "argex.cli",
            "protocol-check",
            "--requests",
            str(GOLDEN_DIR / "requests.jsonl"),
            "--generator",
            f"remote:{live_server}",
        ],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert result.returncode == 0, result.stdout + result.stderr
    assert result.stdout.count(": ok") == 50


def test_live_generate_over_http(live_server):
    request_line = (GOLDEN_DIR / "requests.jsonl").read_bytes().splitlines()[0]
    response = httpx.post(
        f"{live_server}/v1/generate",
        content=request_line,
        headers={"content-type": "application/json"},
        timeout=30,
    )
    assert response.status_code == 200
    assert response.json()["protocol_version"] == 1


def test_live_embed_over_http(live_server):
    response = httpx.post(
        f"{live_server}/v1/embed",
        json={"protocol_version": 1, "texts": ["Mike was detained"]},
        timeout=30,
    )
    assert response.status_code == 200
    assert len(response.json()["vectors"]) == 1
