from __future__ import annotations

import logging
import time
from abc import ABC, abstractmethod
from typing import Any, List, TYPE_CHECKING

from U2VChannel.client.logger import U2VChannelLogHandler
from U2VChannel.events import CommandCompleteEvent
from U2VChannel.formats.manifest import RunManifest, manifest_path

if TYPE_CHECKING:
    from U2VChannel.client.client import U2VChannelClient


class CommandRoute(ABC):
    """
    A callable pipeline command

    """

    COMMAND: str = ""

    def __init__(self, client: U2VChannelClient):
        """
        Instantiate a route

        :param client: The client the route belongs to (events are emitted on it)

        """

        self._client: U2VChannelClient = client
        self._logger: logging.Logger = U2VChannelLogHandler.get_logger()

    @abstractmethod
    def __call__(self, **kwargs: Any) -> RunManifest:
        """
        Run the command

        :param kwargs: Arguments to be overridden
        :return: The manifest of the run

        """

        raise NotImplementedError

    def _start(self) -> float:
        U2VChannelLogHandler.set_command(self.COMMAND)
        self._logger.info(f"Running '{self.COMMAND}'")
        return time.perf_counter()

    def _finish(self, manifest: RunManifest, started: float, anchor: str, warnings: List[str] = ()) -> RunManifest:
        """
        Stamp the wall time, write the manifest next to the main output and announce completion

        :param manifest: The manifest filled in by the route
        :param started: Value of _start()
        :param anchor: The main output (file or directory)
        :param warnings: Warnings raised during the run
        :return: The manifest

        """

        manifest.wall_time_s = time.perf_counter() - started
        manifest.warnings += list(warnings)
        manifest.write(manifest_path(anchor))

        self._logger.info(f"'{self.COMMAND}' wrote {len(manifest.outputs)} file(s) in {manifest.wall_time_s:.3f} s")
        self._client.emit(CommandCompleteEvent.get_type(), CommandCompleteEvent(self.COMMAND, list(manifest.outputs), manifest.wall_time_s))
        U2VChannelLogHandler.set_command(None)
        return manifest


__all__ = [
    "CommandRoute"
]
