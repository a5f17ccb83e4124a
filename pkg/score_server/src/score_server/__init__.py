"""Scoring microservice exposing per-token logprobs over HTTP.

Any locally loadable causal language model can sit behind the
`POST /v1/logprobs` endpoint; a tiny count-model backend ships alongside the
neural one so the wire protocol is testable without model weights.
"""

__version__ = "0.1.0"

from .app import ServerConfig, create_app
from .backends import Backend, CountModelBackend

__all__ = ["Backend", "CountModelBackend", "ServerConfig", "create_app"]
