"""OpenAI-compatible chat-completions adapter for page conversion.

Sends one request per page: the prompt text plus the page image as a
data-URL image part.  Transport problems raise
:class:`~lineval.anchor.ConverterTransportError`, which the conversion
policy treats as retryable.  The API key comes from an environment
variable, never from configuration files.
"""

from __future__ import annotations

import base64
import os
from pathlib import Path
from typing import Any, Optional

import requests

from lineval.anchor import ConverterTransportError

__all__ = ["OpenAIChatConverter", "DEFAULT_API_KEY_ENV"]

DEFAULT_API_KEY_ENV = "LINEVAL_API_KEY"


def _image_data_url(image: Any) -> str:
    if isinstance(image, (str, Path)):
        data = Path(image).read_bytes()
    elif isinstance(image, (bytes, bytearray)):
        data = bytes(image)
    else:
        raise TypeError(f"unsupported image type {type(image)!r}")
    return "data:image/png;base64," + base64.b64encode(data).decode("ascii")


class OpenAIChatConverter:
    """Callable converter: (page_image, prompt, temperature) -> raw JSON text."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        timeout: float = 180.0,
        max_tokens: int = 4096,
        session: Optional[requests.Session] = None,
    ):
        endpoint = endpoint.rstrip("/")
        if not endpoint.endswith("/chat/completions"):
            endpoint += "/chat/completions"
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.max_tokens = max_tokens
        self._session = session or requests.Session()

    def __call__(self, page_image: Any, prompt: str, temperature: float) -> str:
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = {
            "model": self.model,
            "temperature": temperature,
            "max_tokens": self.max_tokens,
            "messages": [
                {
                    "role": "user",
                    "content": [
                        {"type": "text", "text": prompt},
                        {"type": "image_url", "image_url": {"url": _image_data_url(page_image)}},
                    ],
                }
            ],
        }
        try:
            response = self._session.post(
                self.endpoint, headers=headers, json=body, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise ConverterTransportError(f"request failed: {exc}") from exc
        if response.status_code != 200:
            raise ConverterTransportError(
                f"converter answered HTTP {response.status_code}: {response.text[:200]}"
            )
        try:
            payload = response.json()
            return payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ConverterTransportError(f"malformed completion payload: {exc}") from exc
