"""Mock token service: the enumeration target that is safe to probe.

Serves a synthetic profile for occupied tokens in a configurable space
and 404 for everything else, with an optional global rate limit that
answers 429 when probes arrive faster than allowed.  Enumeration
experiments run against this, never against third-party hosts.
"""

from __future__ import annotations

import time
from threading import Lock

from fastapi import FastAPI, HTTPException

from .tokens import TokenSpace


def create_mock_app(space: TokenSpace, clock=time.monotonic) -> FastAPI:
    app = FastAPI(title="leaklens mock token service", version="1.0")
    state = {"last": None}
    lock = Lock()
    min_interval = space.rate_limit_ms / 1000.0

    @app.get("/t/{token}")
    def token_endpoint(token: str) -> dict:
        if min_interval > 0:
            with lock:
                now = clock()
                last = state["last"]
                if last is not None and (now - last) < min_interval:
                    raise HTTPException(status_code=429, detail="rate limit exceeded")
                state["last"] = now
        if space.is_occupied(token):
            return space.synthetic_profile(token)
        raise HTTPException(status_code=404, detail="unknown token")

    return app
