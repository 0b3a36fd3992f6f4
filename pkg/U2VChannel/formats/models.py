from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

import numpy as np
from mashumaro import DataClassDictMixin
from mashumaro.exceptions import MissingField, InvalidFieldValue

from U2VChannel.client.errors import ModelDocumentError, InputError
from U2VChannel.client.settings import SCHEMA_VERSION
from U2VChannel.formats.tables import write_text_atomic
from U2VChannel.learning.gan import GanModel, NoisePrior
from U2VChannel.learning.mlp import MlpModel

"""Directory holding the bundled model documents"""
MODEL_DIR: str = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "resources", "models")

Reason = InputError.ErrorReason


@dataclass()
class LayerDocument(DataClassDictMixin):
    weights: List[List[float]]
    biases: List[float]
    activation: str


@dataclass()
class NetworkDocument(DataClassDictMixin):
    layers: List[LayerDocument]
    trained: bool = False

    @classmethod
    def from_model(cls, model: MlpModel) -> NetworkDocument:
        return cls(
            layers=[
                LayerDocument(weights=w.tolist(), biases=b.tolist(), activation=a)
                for w, b, a in zip(model.weights, model.biases, model.activations)
            ],
            trained=model.trained
        )

    def to_model(self) -> MlpModel:
        """
        Rebuild the network; layer sizes follow from the weight shapes

        :raises ModelShapeError: If the matrices do not chain

        """

        if not self.layers:
            raise ModelDocumentError(Reason.SHAPE_MISMATCH, "A network needs at least one layer.")

        weights: List[np.ndarray] = [np.asarray(layer.weights, dtype=float).reshape(len(layer.weights), -1) for layer in self.layers]
        dims: List[int] = [weights[0].shape[0]] + [w.shape[1] for w in weights]

        return MlpModel(
            layer_dims=dims,
            weights=weights,
            biases=[np.asarray(layer.biases, dtype=float) for layer in self.layers],
            activations=[layer.activation for layer in self.layers],
            trained=self.trained
        )


@dataclass()
class BpnnDocument(DataClassDictMixin):
    """
    A delay-to-power network; delays in µs, powers in dB

    """

    schema_version: int
    kind: str
    network: NetworkDocument
    name: str = ""
    metrics: Dict[str, float] = field(default_factory=dict)


@dataclass()
class GanDocument(DataClassDictMixin):
    """
    A generator/discriminator pair working on offsets standardised by (location, scale)

    """

    schema_version: int
    kind: str
    generator: NetworkDocument
    discriminator: NetworkDocument
    noise: str = NoisePrior.NORMAL.value
    location: float = 0.0
    scale: float = 1.0
    name: str = ""
    metrics: Dict[str, float] = field(default_factory=dict)


ModelDocument = Union[BpnnDocument, GanDocument]


def _dump(document: DataClassDictMixin, path: str) -> None:
    # json writes floats with repr, the shortest form that parses back to the same double
    write_text_atomic(path, json.dumps(document.to_dict(), indent=2) + "\n")


def save_bpnn(model: MlpModel, path: str, name: str = "", metrics: Optional[Dict[str, float]] = None) -> None:
    _dump(BpnnDocument(SCHEMA_VERSION, "bpnn", NetworkDocument.from_model(model), name, dict(metrics or {})), path)


def save_gan(model: GanModel, path: str, name: str = "", metrics: Optional[Dict[str, float]] = None) -> None:
    _dump(GanDocument(
        schema_version=SCHEMA_VERSION,
        kind="gan",
        generator=NetworkDocument.from_model(model.generator),
        discriminator=NetworkDocument.from_model(model.discriminator),
        noise=model.noise.value,
        location=model.location,
        scale=model.scale,
        name=name,
        metrics=dict(metrics or {})
    ), path)


def read_document(path: str) -> ModelDocument:
    """
    Load and type-check a model document

    :param path: The JSON file
    :return: A BPNN or GAN document
    :raises ModelDocumentError: If the file is missing, malformed or of an unknown kind

    """

    if not os.path.isfile(path):
        raise ModelDocumentError(Reason.MISSING_FILE, f"Model file '{path}' does not exist.")

    try:
        with open(path, "r", encoding="utf-8") as file:
            document = json.load(file)
    except json.JSONDecodeError as ex:
        raise ModelDocumentError(Reason.MALFORMED_DOCUMENT, f"'{path}' line {ex.lineno}, column {ex.colno}: {ex.msg}") from ex

    if not isinstance(document, dict):
        raise ModelDocumentError(Reason.MALFORMED_DOCUMENT, f"'{path}' must hold an object.")

    if document.get("schema_version") != SCHEMA_VERSION:
        raise ModelDocumentError(Reason.SCHEMA_MISMATCH, f"'{path}' has unsupported schema_version {document.get('schema_version')!r}.")

    kinds: Dict[str, type] = {"bpnn": BpnnDocument, "gan": GanDocument}

    if document.get("kind") not in kinds:
        raise ModelDocumentError(Reason.INVALID_VALUE, f"'{path}' has unknown kind {document.get('kind')!r}.")

    try:
        return kinds[document["kind"]].from_dict(document)
    except MissingField as ex:
        raise ModelDocumentError(Reason.MISSING_FIELD, f"'{path}' lacks '{ex.field_name}'.") from ex
    except (InvalidFieldValue, TypeError, ValueError) as ex:
        raise ModelDocumentError(Reason.INVALID_VALUE, f"'{path}': {ex}") from ex


def load_bpnn(path: str) -> MlpModel:
    document: ModelDocument = read_document(path)

    if not isinstance(document, BpnnDocument):
        raise ModelDocumentError(Reason.INVALID_VALUE, f"'{path}' holds a {document.kind} model, expected bpnn.")

    return document.network.to_model()


def load_gan(path: str) -> GanModel:
    document: ModelDocument = read_document(path)

    if not isinstance(document, GanDocument):
        raise ModelDocumentError(Reason.INVALID_VALUE, f"'{path}' holds a {document.kind} model, expected gan.")

    try:
        noise: NoisePrior = NoisePrior(document.noise)
    except ValueError as ex:
        raise ModelDocumentError(Reason.INVALID_VALUE, f"'{path}' has unknown noise prior {document.noise!r}.") from ex

    if document.scale <= 0:
        raise ModelDocumentError(Reason.INVALID_VALUE, f"'{path}' has a non-positive scale.")

    return GanModel(
        generator=document.generator.to_model(),
        discriminator=document.discriminator.to_model(),
        noise=noise,
        location=document.location,
        scale=document.scale
    )


def bundled_model(name: str) -> str:
    return os.path.join(MODEL_DIR, f"{name}.json")


__all__ = [
    "MODEL_DIR",
    "LayerDocument",
    "NetworkDocument",
    "BpnnDocument",
    "GanDocument",
    "ModelDocument",
    "save_bpnn",
    "save_gan",
    "read_document",
    "load_bpnn",
    "load_gan",
    "bundled_model"
]
