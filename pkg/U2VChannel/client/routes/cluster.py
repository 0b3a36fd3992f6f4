import os
from collections import defaultdict
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from U2VChannel.client.route_base import CommandRoute
from U2VChannel.client.settings import SimDefaults
from U2VChannel.data.synthetic_rt import RayRecord
from U2VChannel.formats.manifest import RunManifest
from U2VChannel.formats.tables import read_rays, write_offsets, write_table, OFFSET_COLUMNS
from U2VChannel.learning.clustering import ray_points, elbow_select, extract_offsets, ElbowResult


def sse_curve_path(out: str) -> str:
    root, _ = os.path.splitext(out)
    return f"{root}.sse.csv"


class ClusterRoute(CommandRoute):
    """
    Cluster every channel's rays in (delay, azimuth, elevation) and extract intra-cluster angle offsets

    """

    COMMAND: str = "cluster"

    def __call__(
            self,
            data: str,
            out: str,
            nk_max: Optional[int] = None,
            sse_threshold: Optional[float] = None,
            slope_threshold: Optional[float] = None,
            restarts: Optional[int] = None,
            seed: int = 0
    ) -> RunManifest:
        """
        Write the offsets CSV and the per-channel SSE curves

        :param data: Ray CSV from gen-data
        :param out: Offsets CSV path
        :param nk_max: Largest cluster count tried per channel
        :param sse_threshold: Normalised SSE threshold
        :param slope_threshold: SSE slope threshold
        :param restarts: k-means restarts per count
        :param seed: Clustering seed
        :return: The run manifest

        """

        started: float = self._start()
        nk_max = SimDefaults.nk_max if nk_max is None else nk_max
        channels: Dict[int, List[RayRecord]] = defaultdict(list)

        for record in read_rays(data):
            channels[record.channel_id].append(record)

        offsets: List[list] = []
        curve: List[list] = []
        chosen: List[int] = []
        chosen_sse: List[float] = []
        unsatisfied: int = 0

        for channel_id in sorted(channels):
            rays: List[RayRecord] = channels[channel_id]
            points: np.ndarray = ray_points([r.delay * 1e6 for r in rays], [r.aaoa for r in rays], [r.eaoa for r in rays])
            elbow: ElbowResult = elbow_select(
                points,
                range(1, min(nk_max, len(points)) + 1),
                sse_threshold,
                slope_threshold,
                seed,
                restarts=restarts,
                emitter=self._client
            )

            unsatisfied += not elbow.satisfied
            chosen.append(elbow.nk)
            chosen_sse.append(elbow.normalized_sse[elbow.nk])
            sizes: np.ndarray = np.bincount(elbow.result.assignments, minlength=elbow.nk)

            for (d_azimuth, d_elevation), cluster in zip(extract_offsets(elbow.result, points), elbow.result.assignments):
                offsets.append([channel_id, int(cluster), int(sizes[cluster]), float(d_azimuth), float(d_elevation)])

            for nk, value in elbow.normalized_sse.items():
                curve.append([channel_id, nk, value, elbow.slopes[nk], int(nk == elbow.nk)])

            self._logger.debug(f"Channel {channel_id}: Nk = {elbow.nk}, normalized SSE {elbow.normalized_sse[elbow.nk]:.4f}")

        write_offsets(pd.DataFrame(offsets, columns=OFFSET_COLUMNS), out)
        write_table(pd.DataFrame(curve, columns=["channel_id", "nk", "normalized_sse", "slope", "chosen"]), sse_curve_path(out))

        manifest: RunManifest = RunManifest(
            command=self.COMMAND,
            seed=seed,
            outputs=[out, sse_curve_path(out)],
            metrics={
                "channels": float(len(chosen)),
                "mean_nk": float(np.mean(chosen)) if chosen else 0.0,
                "mean_normalized_sse": float(np.mean(chosen_sse)) if chosen_sse else 0.0,
                "unsatisfied_channels": float(unsatisfied)
            }
        )

        warnings = [f"{unsatisfied} channel(s) met no elbow threshold within Nk ≤ {nk_max}"] if unsatisfied else []
        return self._finish(manifest, started, out, warnings)
