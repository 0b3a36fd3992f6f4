import json
import os
from typing import Callable, Optional

import numpy as np
import pytest

from U2VChannel.channel.cir import ChannelTrace, TraceSnapshot, TracePath, AntennaArray
from U2VChannel.geometry.kinematics import AngleSet
from U2VChannel.geometry.paths import PathKind, LOS_PATH_ID
from U2VChannel.learning.bpnn import preset_network
from U2VChannel.learning.gan import GanModel, NoisePrior
from U2VChannel.learning.mlp import MlpModel


def make_analytic_gan(scale: float = 0.05) -> GanModel:
    """
    A "trained" GAN whose generator maps 1-D standard normal noise to N(0, scale²)

    """

    generator = MlpModel(layer_dims=[1, 1], weights=[np.array([[scale]])], biases=[np.zeros(1)], activations=["linear"], trained=True)
    discriminator = MlpModel(layer_dims=[1, 1], weights=[np.zeros((1, 1))], biases=[np.zeros(1)], activations=["linear"], trained=True)
    return GanModel(generator=generator, discriminator=discriminator, noise=NoisePrior.NORMAL, location=0.0, scale=1.0)


def make_tone_trace(
        doppler_hz: float,
        step: float,
        count: int,
        carrier_hz: float = 28e9,
        speed: float = 2.0,
        power_db: float = 0.0
) -> ChannelTrace:
    """
    Single-ray trace whose phase advances by 2π f_d t, with identity rotations

    """

    angles = AngleSet(aaod=np.zeros(1), eaod=np.zeros(1), aaoa=np.array([np.pi]), eaoa=np.zeros(1))
    snapshots = []

    for k in range(count):
        t = step * k
        path = TracePath(
            path_id=LOS_PATH_ID, instance=0, kind=PathKind.LOS, delay=1e-6, power_db=power_db, angles=angles,
            phases=np.array([2.0 * np.pi * doppler_hz * t]), doppler=np.array([doppler_hz])
        )
        snapshots.append(TraceSnapshot(
            index=k, t=t, paths=[path], r_v_tx=np.eye(3), r_p=np.eye(3), r_v_rx=np.eye(3),
            v_tx=np.array([speed, 0.0, 0.0]), v_rx=np.zeros(3)
        ))

    return ChannelTrace(carrier_hz, AntennaArray(), AntennaArray(), snapshots)


def make_ring_trace(rays: int = 720, carrier_hz: float = 28e9, count: int = 3, seed: int = 1) -> ChannelTrace:
    """
    Static trace with one path whose rays depart uniformly over the horizontal plane

    """

    rng = np.random.default_rng(seed)
    azimuths = 2.0 * np.pi * np.arange(rays) / rays
    angles = AngleSet(aaod=azimuths, eaod=np.zeros(rays), aaoa=np.zeros(rays), eaoa=np.zeros(rays))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=rays)
    snapshots = [
        TraceSnapshot(
            index=k, t=0.1 * k,
            paths=[TracePath(2, 0, PathKind.NLOS, 2e-6, -100.0, angles, phases.copy(), np.zeros(rays))],
            r_v_tx=np.eye(3), r_p=np.eye(3), r_v_rx=np.eye(3), v_tx=np.zeros(3), v_rx=np.zeros(3)
        )
        for k in range(count)
    ]

    return ChannelTrace(carrier_hz, AntennaArray(), AntennaArray(), snapshots)


@pytest.fixture(scope="session")
def analytic_gan() -> Callable[..., GanModel]:
    return make_analytic_gan


@pytest.fixture(scope="session")
def tone_trace() -> Callable[..., ChannelTrace]:
    return make_tone_trace


@pytest.fixture(scope="session")
def ring_trace() -> Callable[..., ChannelTrace]:
    return make_ring_trace


@pytest.fixture(scope="session")
def bpnn_los() -> MlpModel:
    return preset_network(PathKind.LOS)


@pytest.fixture(scope="session")
def bpnn_nlos() -> MlpModel:
    return preset_network(PathKind.NLOS)


@pytest.fixture()
def write_scenario(tmp_path) -> Callable[..., str]:
    """
    Dump a scenario document (dict or raw text) into the test directory

    """

    def write(document, name: Optional[str] = "scenario.json") -> str:
        path = os.path.join(tmp_path, name)

        with open(path, "w", encoding="utf-8") as file:
            file.write(document if isinstance(document, str) else json.dumps(document, indent=2))

        return path

    return write


@pytest.fixture()
def minimal_scenario() -> dict:
    return {
        "schema_version": 1,
        "carrier_hz": 28e9,
        "time": {"start": 0.0, "stop": 1.0, "step": 0.1},
        "tx": {"trajectory": {"waypoints": [[0.0, 0.0, 0.0, 100.0], [1.0, 30.0, 0.0, 100.0]]}},
        "rx": {"trajectory": {"position": [500.0, 0.0, 2.0]}}
    }
