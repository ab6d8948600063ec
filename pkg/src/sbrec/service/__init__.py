"""HTTP service exposing the experiment lifecycle and recommendation serving."""

from sbrec.service.app import create_app

__all__ = ["create_app"]
