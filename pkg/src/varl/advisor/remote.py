"""HTTP client for a remote action advisor.

One request/response exchange per suggestion: POST {"prompt": ...} to the
endpoint, expect {"completion": ...} back. Transport failures are retried a
configured number of times and then skipped (never fatal to training); a
reply that fails to parse triggers a single repair re-ask. Successful
suggestions are cached by rendered prompt text, so repeated queries for the
same state and prior action cost no network calls.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from threading import Lock

import numpy as np
import requests

from ..envs.base import Env
from . import prompts


@dataclass(frozen=True)
class AdvisorResponse:
    raw_text: str | None
    parsed_action: object | None
    latency: float
    from_cache: bool = False
    error: str | None = None  # None | "transport" | "parse"


class RemoteAdvisor:
    def __init__(
        self,
        env: Env,
        endpoint: str,
        timeout: float = 5.0,
        retries: int = 2,
        parallelism: int = 4,
        api_key: str | None = None,
        api_key_header: str | None = None,
        session: requests.Session | None = None,
        retry_wait: float = 0.05,
    ):
        if not endpoint:
            raise ValueError("remote advisor needs an endpoint URL")
        self._env = env
        self._space = env.spec.action_space
        self.endpoint = endpoint
        self.timeout = float(timeout)
        self.retries = int(retries)
        self.parallelism = max(1, int(parallelism))
        self.retry_wait = float(retry_wait)
        self._headers = {api_key_header: api_key} if api_key_header and api_key else {}
        self._session = session or requests.Session()
        self._cache: dict[str, AdvisorResponse] = {}
        self._lock = Lock()
        self.network_calls = 0
        self.cache_hits = 0
        self.transport_failures = 0
        self.parse_failures = 0

    # -- wire ---------------------------------------------------------------

    def _post_once(self, prompt: str) -> str | None:
        with self._lock:
            self.network_calls += 1
        resp = self._session.post(
            self.endpoint, json={"prompt": prompt}, timeout=self.timeout, headers=self._headers
        )
        if resp.status_code != 200:
            return None
        return resp.json().get("completion")

    def _post_with_retries(self, prompt: str) -> str | None:
        for attempt in range(self.retries + 1):
            try:
                completion = self._post_once(prompt)
            except (requests.RequestException, ValueError):
                completion = None
            if completion is not None:
                return completion
            if attempt < self.retries:
                time.sleep(self.retry_wait)
        return None

    # -- protocol -------------------------------------------------------------

    def query(self, request: prompts.AdvisorRequest) -> AdvisorResponse:
        """Full exchange for one request: render, cache lookup, send with
        retries, parse with a single repair re-ask, validate."""
        prompt = prompts.render_prompt(request)
        with self._lock:
            cached = self._cache.get(prompt)
            if cached is not None:
                self.cache_hits += 1
                return replace(cached, from_cache=True)

        start = time.monotonic()
        raw = self._post_with_retries(prompt)
        if raw is None:
            with self._lock:
                self.transport_failures += 1
            return AdvisorResponse(None, None, time.monotonic() - start, error="transport")

        action = prompts.parse_completion(raw, self._space)
        if action is None:
            raw = self._post_with_retries(prompt + "\n\n" + prompts.REPAIR_NOTE)
            action = prompts.parse_completion(raw, self._space) if raw is not None else None
        if action is None:
            with self._lock:
                self.parse_failures += 1
            return AdvisorResponse(raw, None, time.monotonic() - start, error="parse")

        response = AdvisorResponse(raw, action, time.monotonic() - start)
        with self._lock:
            self._cache[prompt] = response
        return response

    def advise(self, state: np.ndarray, prior_action):
        """Suggestion for one (state, prior action) pair, or None on failure."""
        return self.query(prompts.build_request(self._env, state, prior_action)).parsed_action

    def advise_batch(self, items: list[tuple[np.ndarray, object]]) -> list:
        """Suggestions for a batch, preserving order; network calls run on a
        bounded thread pool."""
        if len(items) <= 1 or self.parallelism == 1:
            return [self.advise(s, a) for s, a in items]
        with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
            return list(pool.map(lambda sa: self.advise(*sa), items))
