from __future__ import annotations

from dataclasses import dataclass, field
from typing import Type, Union, List

from U2VChannel.events.base_event import BaseEvent


@dataclass()
class EpochEndEvent(BaseEvent):
    """
    Thrown after every BPNN training epoch

    """

    model_name: str
    epoch: int
    cost: float
    validation_rmse: float


@dataclass()
class GanStepEvent(BaseEvent):
    """
    Thrown after every generator update of a GAN

    """

    step: int
    discriminator_loss: float
    generator_loss: float
    bce: float


@dataclass()
class ElbowPointEvent(BaseEvent):
    """
    Thrown for every cluster count evaluated by the elbow search

    """

    nk: int
    normalized_sse: float


@dataclass()
class PathBirthEvent(BaseEvent):
    """
    Thrown when a path becomes valid (including paths present at the first snapshot)

    """

    t: float
    path_id: int
    kind: str
    delay: float


@dataclass()
class PathDeathEvent(BaseEvent):
    """
    Thrown when a previously valid path is blocked or loses its bounce point

    """

    t: float
    path_id: int


@dataclass()
class SnapshotEvent(BaseEvent):
    """
    Thrown once per simulated snapshot

    """

    index: int
    t: float
    path_count: int


@dataclass()
class CommandCompleteEvent(BaseEvent):
    """
    Thrown when a pipeline command finishes writing its outputs

    """

    command: str
    outputs: List[str] = field(default_factory=list)
    wall_time_s: float = 0.0


CustomEvent: Type = Union[
    EpochEndEvent,
    GanStepEvent,
    ElbowPointEvent,
    PathBirthEvent,
    PathDeathEvent,
    SnapshotEvent,
    CommandCompleteEvent
]

__all__ = [
    "EpochEndEvent",
    "GanStepEvent",
    "ElbowPointEvent",
    "PathBirthEvent",
    "PathDeathEvent",
    "SnapshotEvent",
    "CommandCompleteEvent",
    "CustomEvent"
]
