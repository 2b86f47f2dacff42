"""Command request type and the middleware base class."""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from typing import Callable


@dataclass(frozen=True)
class CommandRequest:
    """A parsed invocation: the command path (``"train dgcnn"``) and its args."""

    command: str
    args: argparse.Namespace


CallNext = Callable[[CommandRequest], int]


class CommandMiddleware:
    """Wraps a command handler; subclasses implement :meth:`dispatch`."""

    def __init__(self, app: CallNext) -> None:
        self.app = app

    def __call__(self, request: CommandRequest) -> int:
        return self.dispatch(request, self.app)

    def dispatch(self, request: CommandRequest, call_next: CallNext) -> int:
        raise NotImplementedError


__all__ = ["CallNext", "CommandMiddleware", "CommandRequest"]
