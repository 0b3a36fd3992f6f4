import os
import time
from typing import Dict, List, Optional, Set, Tuple

import numpy as np

from U2VChannel.channel.cir import ChannelTrace, ChannelBuilder, Scenario
from U2VChannel.client.errors import InputError
from U2VChannel.client.route_base import CommandRoute
from U2VChannel.formats.config import read_scenario, resolve_scenario_path, build_scenario, ScenarioConfig
from U2VChannel.formats.manifest import RunManifest
from U2VChannel.formats.models import load_bpnn, load_gan, bundled_model
from U2VChannel.formats.tables import write_cir

"""Bundled delay-to-power presets used when no network is given"""
DEFAULT_BPNN: Dict[str, str] = {
    "bpnn_los": bundled_model("bpnn_los_preset"),
    "bpnn_nlos": bundled_model("bpnn_nlos_preset")
}

CIR_FILE: str = "cir.csv"


def resolve_model(flag: Optional[str], configured: Optional[str], scenario_path: str, name: str) -> str:
    """
    Pick a model file: the flag, else the scenario entry (relative to the scenario file), else a bundled preset

    :raises InputError: If nothing is available or the file is missing

    """

    path: Optional[str] = flag

    if path is None and configured is not None:
        path = configured if os.path.isabs(configured) else os.path.join(os.path.dirname(os.path.abspath(scenario_path)), configured)

    path = path or DEFAULT_BPNN.get(name)

    if path is None:
        raise InputError(InputError.ErrorReason.MISSING_FILE, f"No {name} model was given on the command line or in the scenario.")

    if not os.path.isfile(path):
        raise InputError(InputError.ErrorReason.MISSING_FILE, f"Model file '{path}' for {name} does not exist.")

    return path


class SimulateRoute(CommandRoute):
    """
    Build the channel over a scenario's time grid and dump every antenna pair's CIR

    """

    COMMAND: str = "simulate"

    def __call__(
            self,
            scenario: str,
            out_dir: str,
            bpnn_los: Optional[str] = None,
            bpnn_nlos: Optional[str] = None,
            gan_az: Optional[str] = None,
            gan_el: Optional[str] = None,
            seed: Optional[int] = None,
            rate: Optional[float] = None,
            duration: Optional[float] = None
    ) -> RunManifest:
        """
        Write `cir.csv` into out_dir

        :param scenario: Scenario file or bundled name
        :param out_dir: Output directory
        :param bpnn_los: LoS network document (default: scenario entry, then the bundled preset)
        :param bpnn_nlos: NLoS network document (default: scenario entry, then the bundled preset)
        :param gan_az: Azimuth GAN document (default: scenario entry)
        :param gan_el: Elevation GAN document (default: scenario entry)
        :param seed: Seed override
        :param rate: Snapshot rate override (Hz)
        :param duration: Only simulate this many seconds from the start
        :return: The run manifest with the timing report

        """

        started: float = self._start()
        config: ScenarioConfig
        config, digest = read_scenario(scenario)
        scenario_path: str = resolve_scenario_path(scenario)

        paths: Dict[str, str] = {
            "bpnn_los": resolve_model(bpnn_los, config.models.bpnn_los, scenario_path, "bpnn_los"),
            "bpnn_nlos": resolve_model(bpnn_nlos, config.models.bpnn_nlos, scenario_path, "bpnn_nlos"),
            "gan_azimuth": resolve_model(gan_az, config.models.gan_azimuth, scenario_path, "gan_azimuth"),
            "gan_elevation": resolve_model(gan_el, config.models.gan_elevation, scenario_path, "gan_elevation")
        }

        runtime: Scenario = build_scenario(config, rate)
        times: np.ndarray = runtime.times

        if duration is not None:
            times = times[times <= times[0] + duration + 1e-9]

        builder: ChannelBuilder = ChannelBuilder(
            runtime,
            load_bpnn(paths["bpnn_los"]),
            load_bpnn(paths["bpnn_nlos"]),
            load_gan(paths["gan_azimuth"]),
            load_gan(paths["gan_elevation"]),
            emitter=self._client
        )

        seed = config.seed if seed is None else seed
        building: float = time.perf_counter()
        trace: ChannelTrace = builder.build(times, seed)
        per_snapshot: float = (time.perf_counter() - building) / max(len(times), 1)

        os.makedirs(out_dir, exist_ok=True)
        cir_path: str = os.path.join(out_dir, CIR_FILE)
        write_cir({pair: trace.cir(*pair) for pair in trace.pairs()}, cir_path)

        instances: Set[Tuple[int, int]] = {path.key for snapshot in trace.snapshots for path in snapshot.paths}
        empty: int = sum(1 for snapshot in trace.snapshots if not snapshot.paths)
        manifest: RunManifest = RunManifest(
            command=self.COMMAND,
            config_hash=digest,
            seed=seed,
            outputs=[cir_path],
            metrics={
                "snapshots": float(len(trace.snapshots)),
                "path_instances": float(len(instances)),
                "empty_snapshots": float(empty),
                "mean_snapshot_time_s": per_snapshot
            }
        )

        warnings: List[str] = [f"{empty} snapshot(s) had no valid path"] if empty else []
        self._logger.info(f"Mean time per snapshot: {per_snapshot * 1e3:.3f} ms")
        return self._finish(manifest, started, out_dir, warnings)
