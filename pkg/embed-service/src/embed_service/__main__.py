"""Run the service: EMBED_MODEL_ID, EMBED_PORT, EMBED_MAX_BATCH from env."""

from __future__ import annotations

import logging
import os

import uvicorn

from .app import create_app


def main() -> None:
    logging.basicConfig(level=logging.INFO)
    app = create_app()
    uvicorn.run(app, host="0.0.0.0", port=int(os.environ.get("EMBED_PORT", "8901")))


if __name__ == "__main__":
    main()
