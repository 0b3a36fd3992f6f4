import os
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from U2VChannel.client.errors import TableSchemaError, InvalidHyperparameterError
from U2VChannel.client.route_base import CommandRoute
from U2VChannel.formats.manifest import RunManifest
from U2VChannel.formats.models import save_gan
from U2VChannel.formats.tables import read_offsets
from U2VChannel.learning.gan import (
    GanConfig, GanModel, BaselineFamily, train_gan, sample_offsets, fit_baseline, ks_statistic, ks_against_baseline,
    discriminator_accuracy, MIN_GAN_SAMPLES
)

"""Generated samples drawn for the KS comparison"""
KS_SAMPLES: int = 10_000

OFFSET_KINDS: Dict[str, str] = {
    "azimuth": "azimuth_offset",
    "elevation": "elevation_offset"
}


def hold_out_split(count: int, split: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Seeded train/held-out partition that never trains on fewer than MIN_GAN_SAMPLES offsets

    When the table is too small to spare a held-out set, both halves are the full table.

    :param count: Number of offsets (≥ MIN_GAN_SAMPLES)
    :param split: Requested training share, in (0, 1)
    :param seed: Permutation seed
    :return: Sorted training indices and sorted held-out indices

    """

    if not 0.0 < split < 1.0:
        raise InvalidHyperparameterError(f"Training share must lie in (0, 1), got {split}.")

    order: np.ndarray = np.random.default_rng(seed).permutation(count)
    n_train: int = min(max(int(round(split * count)), MIN_GAN_SAMPLES), count)

    if n_train == count:
        everything: np.ndarray = np.arange(count)
        return everything, everything

    return np.sort(order[:n_train]), np.sort(order[n_train:])


def compare_fits(model: GanModel, fit_data: np.ndarray, held_out: np.ndarray, seed: int) -> Dict[str, float]:
    """
    KS statistic against held-out offsets for the GAN and the Gaussian and Laplacian fits,
    plus the discriminator's accuracy on the held-out offsets

    """

    return {
        "ks_gan": ks_statistic(sample_offsets(model, KS_SAMPLES, seed), held_out),
        "ks_gaussian": ks_against_baseline(held_out, fit_baseline(fit_data, BaselineFamily.GAUSSIAN)),
        "ks_laplacian": ks_against_baseline(held_out, fit_baseline(fit_data, BaselineFamily.LAPLACIAN)),
        "discriminator_accuracy": discriminator_accuracy(model, held_out, seed + 1)
    }


class TrainGanRoute(CommandRoute):
    """
    Train the azimuth and elevation offset GANs on clustered offsets

    """

    COMMAND: str = "train-gan"

    def __call__(
            self,
            data: str,
            out: str,
            config: Optional[GanConfig] = None,
            min_cluster_size: int = 2,
            split: float = 0.7
    ) -> RunManifest:
        """
        Write `gan_azimuth.json` and `gan_elevation.json` into the output directory

        :param data: Offsets CSV from cluster
        :param out: Output directory
        :param config: GAN hyperparameters
        :param min_cluster_size: Ignore rays of smaller clusters (singletons carry zero offset)
        :param split: Share of offsets used for training; the rest is held out for KS
        :return: The run manifest with KS statistics

        """

        started: float = self._start()
        config = config or GanConfig()
        frame: pd.DataFrame = read_offsets(data, min_cluster_size)

        if len(frame) < MIN_GAN_SAMPLES:
            raise TableSchemaError(data, f"{len(frame)} offsets in clusters of ≥ {min_cluster_size} rays; at least {MIN_GAN_SAMPLES} are needed")

        train_idx, held_idx = hold_out_split(len(frame), split, config.seed)

        if len(train_idx) == len(frame):
            self._logger.warning(f"Only {len(frame)} offsets; training on all of them, so the KS statistics are in-sample")

        os.makedirs(out, exist_ok=True)
        manifest: RunManifest = RunManifest(command=self.COMMAND, seed=config.seed)
        manifest.metrics.update({"train_offsets": float(len(train_idx)), "held_out_offsets": float(len(held_idx))})

        for name, column in OFFSET_KINDS.items():
            values: np.ndarray = frame[column].to_numpy(dtype=float)
            model: GanModel = train_gan(values[train_idx], config, emitter=self._client, model_name=f"gan_{name}")
            metrics: Dict[str, float] = compare_fits(model, values[train_idx], values[held_idx], config.seed)

            path: str = os.path.join(out, f"gan_{name}.json")
            save_gan(model, path, name=f"gan_{name}", metrics=metrics)
            manifest.outputs.append(path)
            manifest.metrics.update({f"{name}_{key}": value for key, value in metrics.items()})

            self._logger.info(
                f"{name}: KS GAN {metrics['ks_gan']:.4f}, Gaussian {metrics['ks_gaussian']:.4f}, "
                f"Laplacian {metrics['ks_laplacian']:.4f}, discriminator accuracy {metrics['discriminator_accuracy']:.3f}"
            )

        return self._finish(manifest, started, out)
