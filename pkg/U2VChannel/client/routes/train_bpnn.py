import os
from collections import defaultdict
from typing import Dict, List, Optional, Tuple

import numpy as np

from U2VChannel.client.errors import TableSchemaError
from U2VChannel.client.route_base import CommandRoute
from U2VChannel.data.synthetic_rt import RayRecord
from U2VChannel.formats.manifest import RunManifest
from U2VChannel.formats.models import save_bpnn
from U2VChannel.formats.tables import read_rays
from U2VChannel.geometry.paths import PathKind
from U2VChannel.learning.bpnn import TrainConfig, TrainHistory, train, fit_exponential_baseline, ExponentialFit
from U2VChannel.learning.mlp import MlpModel


def aggregate_paths(records: List[RayRecord]) -> Dict[PathKind, Tuple[np.ndarray, np.ndarray]]:
    """
    Collapse rays into paths: delay is the earliest ray delay, power the linear sum of ray powers

    :param records: Rays
    :return: Per kind, (delays µs, powers dB) ordered by (channel, path)

    """

    groups: Dict[Tuple[int, int], List[RayRecord]] = defaultdict(list)

    for record in records:
        groups[(record.channel_id, record.path_id)].append(record)

    columns: Dict[PathKind, Tuple[List[float], List[float]]] = {kind: ([], []) for kind in PathKind}

    for key in sorted(groups):
        rays: List[RayRecord] = groups[key]
        kind: PathKind = PathKind.LOS if any(r.los for r in rays) else PathKind.NLOS
        power: float = float(10.0 * np.log10(np.sum(10.0 ** (np.array([r.power for r in rays]) / 10.0))))
        columns[kind][0].append(min(r.delay for r in rays) * 1e6)
        columns[kind][1].append(power)

    return {kind: (np.array(d), np.array(p)) for kind, (d, p) in columns.items()}


class TrainBpnnRoute(CommandRoute):
    """
    Train the LoS and NLoS delay-to-power networks

    """

    COMMAND: str = "train-bpnn"

    def __call__(self, data: str, out: str, config: Optional[TrainConfig] = None) -> RunManifest:
        """
        Write `bpnn_los.json` and `bpnn_nlos.json` into the output directory

        :param data: Ray CSV
        :param out: Output directory
        :param config: Training hyperparameters
        :return: The run manifest with train/validation sizes and RMSEs per population

        """

        started: float = self._start()
        config = config or TrainConfig()
        config.validate()
        populations: Dict[PathKind, Tuple[np.ndarray, np.ndarray]] = aggregate_paths(read_rays(data))
        os.makedirs(out, exist_ok=True)

        manifest: RunManifest = RunManifest(command=self.COMMAND, seed=config.seed)

        for kind, (delays, powers) in populations.items():
            label: str = kind.value.lower()

            if len(delays) < 2:
                raise TableSchemaError(data, f"at least 2 {kind.value} paths are needed, found {len(delays)}")

            model: MlpModel
            history: TrainHistory
            model, history = train(delays, powers, config, emitter=self._client, model_name=f"bpnn_{label}")

            train_idx, val_idx = history.train_indices, history.validation_indices
            baseline: ExponentialFit = fit_exponential_baseline(delays[train_idx], powers[train_idx])
            metrics: Dict[str, float] = {
                "train_size": float(len(train_idx)),
                "validation_size": float(len(val_idx)),
                "train_rmse_db": history.train_rmse[-1],
                "validation_rmse_db": history.validation_rmse[-1],
                "exponential_validation_rmse_db": baseline.rmse(delays[val_idx], powers[val_idx])
            }

            path: str = os.path.join(out, f"bpnn_{label}.json")
            save_bpnn(model, path, name=f"bpnn_{label}", metrics=metrics)
            manifest.outputs.append(path)
            manifest.metrics.update({f"{label}_{name}": value for name, value in metrics.items()})

            self._logger.info(
                f"{kind.value}: {len(train_idx)} train / {len(val_idx)} validation paths, validation RMSE "
                f"{metrics['validation_rmse_db']:.3f} dB (exponential fit {metrics['exponential_validation_rmse_db']:.3f} dB)"
            )

        return self._finish(manifest, started, out)
