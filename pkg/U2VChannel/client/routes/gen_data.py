from typing import Optional

from U2VChannel.client.errors import ScenarioConfigError, InputError
from U2VChannel.client.route_base import CommandRoute
from U2VChannel.data.synthetic_rt import generate_dataset, Dataset
from U2VChannel.formats.config import read_scenario, build_scene, DatasetConfig
from U2VChannel.formats.manifest import RunManifest
from U2VChannel.formats.tables import write_rays


class GenerateDataRoute(CommandRoute):
    """
    Generate a labelled ray corpus from a scenario's dataset section

    """

    COMMAND: str = "gen-data"

    def __call__(
            self,
            scenario: str,
            out: str,
            pairs: Optional[int] = None,
            seed: Optional[int] = None,
            rays_per_path: Optional[int] = None
    ) -> RunManifest:
        """
        Write the ray CSV

        :param scenario: Scenario file or bundled name
        :param out: Output CSV path
        :param pairs: Pair count override
        :param seed: Seed override
        :param rays_per_path: Ray count override
        :return: The run manifest

        """

        started: float = self._start()
        config, digest = read_scenario(scenario)
        dataset_config: Optional[DatasetConfig] = config.dataset

        if dataset_config is None:
            raise ScenarioConfigError(InputError.ErrorReason.MISSING_FIELD, "gen-data needs a dataset section", field="dataset")

        seed = config.seed if seed is None else seed
        dataset: Dataset = generate_dataset(
            scene=build_scene(config.scene),
            tx_grid=dataset_config.tx_grid.points(),
            rx_grid=dataset_config.rx_grid.points(),
            truth=dataset_config.truth,
            rays_per_path=config.rays_per_path if rays_per_path is None else rays_per_path,
            seed=seed,
            pairs=dataset_config.pairs if pairs is None else pairs
        )

        write_rays(dataset.records, out)

        manifest: RunManifest = RunManifest(
            command=self.COMMAND,
            config_hash=digest,
            seed=seed,
            outputs=[out],
            metrics={
                "rays": float(len(dataset.records)),
                "pairs": float(len(dataset.pair_indices)),
                "skipped_pairs": float(dataset.skipped_pairs)
            }
        )

        warnings = [f"{dataset.skipped_pairs} pair(s) had no valid path and were skipped"] if dataset.skipped_pairs else []
        return self._finish(manifest, started, out, warnings)
