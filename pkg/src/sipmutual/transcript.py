"""Ordered message log and the in-process channel that writes it."""

from __future__ import annotations

import base64
import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union


class Direction(str, enum.Enum):
    CLIENT_TO_SERVER = "ClientToServer"
    SERVER_TO_CLIENT = "ServerToClient"
    ADVERSARY_INJECTED = "AdversaryInjected"


class Annotation(str, enum.Enum):
    DELIVERED = "Delivered"
    DROPPED = "Dropped"
    TAMPERED = "Tampered"
    REPLAYED = "Replayed"


@dataclass(frozen=True)
class TranscriptEvent:
    index: int
    direction: Direction
    wire_bytes: bytes
    annotation: Annotation = Annotation.DELIVERED
    description: Optional[str] = None
    original_index: Optional[int] = None
    # where an injected message was headed; None for ordinary legs
    target: Optional[str] = None

    def __post_init__(self) -> None:
        if self.direction is Direction.ADVERSARY_INJECTED and self.annotation not in (
            Annotation.TAMPERED,
            Annotation.REPLAYED,
        ):
            raise ValueError("injected events must be Tampered or Replayed")
        if self.annotation is Annotation.REPLAYED and self.original_index is None:
            raise ValueError("Replayed events need original_index")

    def to_dict(self) -> dict:
        out = {
            "index": self.index,
            "direction": self.direction.value,
            "annotation": self.annotation.value,
            "wire": base64.b64encode(self.wire_bytes).decode("ascii"),
        }
        if self.description is not None:
            out["description"] = self.description
        if self.original_index is not None:
            out["original_index"] = self.original_index
        if self.target is not None:
            out["target"] = self.target
        return out

    @classmethod
    def from_dict(cls, data: dict) -> TranscriptEvent:
        return cls(
            index=data["index"],
            direction=Direction(data["direction"]),
            wire_bytes=base64.b64decode(data["wire"], validate=True),
            annotation=Annotation(data["annotation"]),
            description=data.get("description"),
            original_index=data.get("original_index"),
            target=data.get("target"),
        )


@dataclass
class Transcript:
    """Everything that crossed the simulated wire, in order.

    ``config`` keeps the scenario description (credentials included) so a
    run can be re-driven; it is never exported.
    """

    scenario_name: str
    seed: Optional[int]
    events: list[TranscriptEvent] = field(default_factory=list)
    server_verdict: Optional[str] = None
    client_verdict: Optional[str] = None
    notes: list[str] = field(default_factory=list)
    config: Optional[object] = field(default=None, repr=False, compare=False)

    def append(self, direction: Direction, wire: bytes, **kwargs) -> TranscriptEvent:
        event = TranscriptEvent(len(self.events), direction, bytes(wire), **kwargs)
        self.events.append(event)
        return event

    @property
    def legs(self) -> int:
        """Messages that actually reached an endpoint."""
        return sum(1 for e in self.events if e.annotation is not Annotation.DROPPED)

    @property
    def wire_size(self) -> int:
        return sum(len(e.wire_bytes) for e in self.events if e.annotation is not Annotation.DROPPED)

    @property
    def accepted(self) -> bool:
        return self.server_verdict == "Ok" and self.client_verdict == "Ok"

    def wire(self) -> bytes:
        """All event bytes concatenated; handy for byte-identity checks."""
        return b"".join(e.wire_bytes for e in self.events)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario_name,
            "seed": self.seed,
            "server_verdict": self.server_verdict,
            "client_verdict": self.client_verdict,
            "notes": list(self.notes),
            "events": [e.to_dict() for e in self.events],
        }

    @classmethod
    def from_dict(cls, data: dict) -> Transcript:
        events = [TranscriptEvent.from_dict(e) for e in data["events"]]
        for i, event in enumerate(events):
            if event.index != i:
                raise ValueError("event indices must be dense and ordered")
        return cls(
            scenario_name=data["scenario"],
            seed=data.get("seed"),
            events=events,
            server_verdict=data.get("server_verdict"),
            client_verdict=data.get("client_verdict"),
            notes=list(data.get("notes", [])),
        )


@dataclass(frozen=True)
class Tamper:
    """Returned by a hook to replace a message in flight."""

    wire: bytes
    description: str


@dataclass(frozen=True)
class Relay:
    """Returned by a hook to re-send the intercepted bytes unchanged."""

    description: str = "relayed unchanged"


DROP = object()

# A hook sees only the direction and raw bytes of each message.
Hook = Callable[[Direction, bytes], Union[None, Tamper, Relay, object]]


class Channel:
    """Reliable, ordered in-process pipe with adversary hooks.

    Every message is logged.  When a hook intercepts one, the original is
    logged as Dropped and whatever the hook sends instead is logged as an
    AdversaryInjected event.
    """

    def __init__(self, transcript: Transcript, hooks: Sequence[Hook] = ()) -> None:
        self.transcript = transcript
        self.hooks = list(hooks)

    def transmit(self, direction: Direction, wire: bytes) -> Optional[bytes]:
        """Send ``wire``; return the bytes that reach the far end, or None."""
        wire = bytes(wire)
        for hook in self.hooks:
            action = hook(direction, wire)
            if action is None:
                continue
            original = self.transcript.append(direction, wire, annotation=Annotation.DROPPED)
            if action is DROP:
                return None
            if isinstance(action, Relay):
                self.transcript.append(
                    Direction.ADVERSARY_INJECTED, wire,
                    annotation=Annotation.REPLAYED, description=action.description,
                    original_index=original.index, target=_target(direction),
                )
                return wire
            if isinstance(action, Tamper):
                self.transcript.append(
                    Direction.ADVERSARY_INJECTED, action.wire,
                    annotation=Annotation.TAMPERED, description=action.description,
                    target=_target(direction),
                )
                return action.wire
            raise TypeError(f"hook returned unsupported action {action!r}")
        self.transcript.append(direction, wire)
        return wire

    def inject(self, wire: bytes, target: str, original_index: Optional[int] = None,
               description: Optional[str] = None) -> bytes:
        """Adversary-originated message; replay if ``original_index`` is set."""
        annotation = Annotation.REPLAYED if original_index is not None else Annotation.TAMPERED
        self.transcript.append(
            Direction.ADVERSARY_INJECTED, wire, annotation=annotation,
            description=description, original_index=original_index, target=target,
        )
        return bytes(wire)


def _target(direction: Direction) -> str:
    return "server" if direction is Direction.CLIENT_TO_SERVER else "client"
