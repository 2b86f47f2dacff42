"""Payload printed to stderr when a command fails."""

from typing import Optional

from pydantic import BaseModel, Field


class ErrorResponse(BaseModel):
    """``{"detail": ..., "code": ...}`` written as one JSON line on stderr."""

    detail: str
    code: Optional[str] = Field(
        default=None,
        description=(
            "invalid_arguments, invalid_config, internal_error, "
            "or the failing error class (e.g. StorageError)"
        ),
    )
