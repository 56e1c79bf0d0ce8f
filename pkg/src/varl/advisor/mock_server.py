"""Instrumented in-process HTTP server implementing the advisor wire
protocol; used by the hermetic integration tests and the `mock-advisor` CLI
subcommand."""

from __future__ import annotations

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

_LABELS_RE = re.compile(r"Choose one action label from:[ ]*([0-9, ]+)")
_BOUNDS_RE = re.compile(r"dim \d+: \[([-0-9.]+), ([-0-9.]+)\]")


def scripted_responder(strategy: str = "first", seed: int = 0):
    """Answer prompts by reading the constraints section back out of them.

    Strategies: "first" (lowest label / lower bound midpoint), "random"
    (uniform over labels / the box).
    """
    rng = np.random.default_rng(seed)

    def respond(prompt: str) -> str:
        m = _LABELS_RE.search(prompt)
        if m:
            labels = [int(v) for v in m.group(1).replace(" ", "").split(",") if v]
            pick = labels[0] if strategy == "first" else int(rng.choice(labels))
            return f"action: {pick}"
        bounds = [(float(lo), float(hi)) for lo, hi in _BOUNDS_RE.findall(prompt)]
        if not bounds:
            return "no action available"
        if strategy == "first":
            vals = [(lo + hi) / 2.0 for lo, hi in bounds]
        else:
            vals = [float(rng.uniform(lo, hi)) for lo, hi in bounds]
        return "action: [" + ", ".join(f"{v:.6f}" for v in vals) + "]"

    return respond


class MockAdvisorServer:
    """Threaded HTTP server: POST {"prompt": ...} -> {"completion": ...}.

    `responder` maps prompt text to a completion string. `fail_first` makes
    the first N requests answer 503 (for retry/skip tests). The server counts
    hits and records prompts.
    """

    def __init__(self, responder=None, fail_first: int = 0, host: str = "127.0.0.1", port: int = 0):
        self.responder = responder or scripted_responder("first")
        self._fail_remaining = int(fail_first)
        self._lock = threading.Lock()
        self.hit_count = 0
        self.prompts: list[str] = []
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):  # noqa: N802 (http.server API)
                length = int(self.headers.get("Content-Length", 0))
                try:
                    payload = json.loads(self.rfile.read(length) or b"{}")
                    prompt = payload.get("prompt", "")
                except json.JSONDecodeError:
                    prompt = ""
                with outer._lock:
                    outer.hit_count += 1
                    outer.prompts.append(prompt)
                    must_fail = outer._fail_remaining > 0
                    if must_fail:
                        outer._fail_remaining -= 1
                if must_fail:
                    self.send_response(503)
                    self.end_headers()
                    return
                body = json.dumps({"completion": outer.responder(prompt)}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):  # silence request logging
                pass

        self._server = ThreadingHTTPServer((host, port), Handler)
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/advise"

    def start(self) -> "MockAdvisorServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "MockAdvisorServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
