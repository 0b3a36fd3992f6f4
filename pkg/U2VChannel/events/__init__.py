from typing import Type, TypeVar, Callable, Optional

from pyee.base import EventEmitter

from .base_event import BaseEvent
from .custom_events import *

Event: Type = CustomEvent
EventHandler = TypeVar("EventHandler", bound=Callable[[Event], None])


def emit_event(emitter: Optional[EventEmitter], event: BaseEvent) -> None:
    """
    Emit an event on an optional emitter

    :param emitter: The emitter, or None to drop the event
    :param event: The event to emit
    :return: None

    """

    if emitter is not None:
        emitter.emit(event.type, event)
