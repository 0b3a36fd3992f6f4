import os

import numpy as np
import pandas as pd
import pytest

from U2VChannel.client.cli import main
from U2VChannel.formats.manifest import RunManifest, manifest_path
from U2VChannel.formats.models import save_gan, load_bpnn
from U2VChannel.formats.tables import read_rays, read_offsets, write_offsets


def read_bytes(path: str) -> bytes:
    with open(path, "rb") as file:
        return file.read()


@pytest.fixture()
def gan_files(tmp_path, analytic_gan):
    azimuth, elevation = os.path.join(tmp_path, "gan_az.json"), os.path.join(tmp_path, "gan_el.json")
    save_gan(analytic_gan(0.05), azimuth)
    save_gan(analytic_gan(0.02), elevation)
    return azimuth, elevation


@pytest.fixture(scope="module")
def semiurban_rays(tmp_path_factory):
    path = os.path.join(tmp_path_factory.mktemp("semiurban"), "rays.csv")
    assert main(["gen-data", "--scenario", "semiurban_24ghz", "--out", path]) == 0
    return path


def test_gen_data_free_space(tmp_path):
    out = os.path.join(tmp_path, "rays.csv")

    assert main(["gen-data", "--scenario", "free_space", "--out", out]) == 0

    records = read_rays(out)
    assert len(records) == 1
    assert records[0].los

    manifest = RunManifest.read(manifest_path(out))
    assert manifest.command == "gen-data"
    assert manifest.outputs == [out]
    assert len(manifest.config_hash) == 64


def test_gen_data_is_byte_identical(tmp_path):
    first, second = os.path.join(tmp_path, "a.csv"), os.path.join(tmp_path, "b.csv")

    for out in (first, second):
        assert main(["gen-data", "--scenario", "semiurban_24ghz", "--pairs", "10", "--seed", "4", "--out", out]) == 0

    assert read_bytes(first) == read_bytes(second)


def test_missing_scenario_exits_with_input_error(tmp_path):
    assert main(["gen-data", "--scenario", os.path.join(tmp_path, "nope.json"), "--out", os.path.join(tmp_path, "r.csv")]) == 2


def test_semiurban_has_both_populations(semiurban_rays):
    frame = pd.read_csv(semiurban_rays)
    paths = frame.drop_duplicates(["channel_id", "path_id"])

    assert (paths["los"] == 1).sum() > 10
    assert (paths["los"] == 0).sum() > 10


def test_train_bpnn_writes_both_networks(tmp_path, semiurban_rays):
    out = os.path.join(tmp_path, "models")

    assert main(["train-bpnn", "--data", semiurban_rays, "--out", out, "--epochs", "50"]) == 0

    for name in ("bpnn_los.json", "bpnn_nlos.json"):
        assert load_bpnn(os.path.join(out, name)).trained

    metrics = RunManifest.read(manifest_path(out)).metrics
    assert metrics["los_train_size"] + metrics["los_validation_size"] > 10


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_diverging_training_exits_with_numeric_failure(tmp_path, semiurban_rays):
    assert main(["train-bpnn", "--data", semiurban_rays, "--out", os.path.join(tmp_path, "m"), "--lr", "1e300", "--epochs", "3"]) == 3


def test_invalid_hyperparameter_exits_with_input_error(tmp_path, semiurban_rays):
    assert main(["train-bpnn", "--data", semiurban_rays, "--out", os.path.join(tmp_path, "m"), "--split", "1.5"]) == 2


def test_cluster_then_train_gan(tmp_path):
    rays, offsets, models = (os.path.join(tmp_path, name) for name in ("rays.csv", "offsets.csv", "gans"))

    assert main(["gen-data", "--scenario", "semiurban_24ghz", "--pairs", "40", "--out", rays]) == 0
    assert main(["cluster", "--data", rays, "--out", offsets, "--nk-max", "6", "--restarts", "2"]) == 0

    assert os.path.isfile(os.path.join(tmp_path, "offsets.sse.csv"))
    assert len(read_offsets(offsets, min_cluster_size=2)) >= 100

    assert main(["train-gan", "--data", offsets, "--out", models, "--steps", "20", "--batch-size", "32"]) == 0
    assert sorted(os.listdir(models)) == ["gan_azimuth.json", "gan_elevation.json", "manifest.json"]

    metrics = RunManifest.read(manifest_path(models)).metrics
    assert 0.0 <= metrics["azimuth_ks_gan"] <= 1.0


def offsets_table(count: int, seed: int = 0) -> pd.DataFrame:
    rng = np.random.default_rng(seed)
    return pd.DataFrame({
        "channel_id": np.zeros(count, dtype=int),
        "cluster_id": np.zeros(count, dtype=int),
        "cluster_size": np.full(count, count),
        "azimuth_offset": rng.laplace(0.0, 0.05, count),
        "elevation_offset": rng.laplace(0.0, 0.02, count)
    })


@pytest.mark.parametrize("count, held_out", [(120, 20), (100, 100)])
def test_train_gan_keeps_the_training_minimum_on_small_tables(tmp_path, count, held_out):
    offsets, models = os.path.join(tmp_path, "offsets.csv"), os.path.join(tmp_path, "gans")
    write_offsets(offsets_table(count), offsets)

    assert main(["train-gan", "--data", offsets, "--out", models, "--steps", "20", "--batch-size", "32"]) == 0

    metrics = RunManifest.read(manifest_path(models)).metrics
    assert metrics["train_offsets"] == 100.0
    assert metrics["held_out_offsets"] == float(held_out)
    assert 0.0 <= metrics["elevation_discriminator_accuracy"] <= 1.0


def test_train_gan_rejects_small_tables_and_bad_splits(tmp_path):
    small, enough = os.path.join(tmp_path, "small.csv"), os.path.join(tmp_path, "enough.csv")
    write_offsets(offsets_table(99), small)
    write_offsets(offsets_table(120), enough)

    assert main(["train-gan", "--data", small, "--out", os.path.join(tmp_path, "gans")]) == 2
    assert main(["train-gan", "--data", enough, "--out", os.path.join(tmp_path, "gans"), "--split", "1.0"]) == 2


def test_simulate_needs_gans(tmp_path):
    assert main(["simulate", "--scenario", "free_space", "--out-dir", os.path.join(tmp_path, "sim")]) == 2


def test_simulate_then_stats(tmp_path, gan_files):
    azimuth, elevation = gan_files
    out_dir = os.path.join(tmp_path, "sim")

    assert main([
        "simulate", "--scenario", "free_space", "--out-dir", out_dir,
        "--gan-az", azimuth, "--gan-el", elevation, "--duration", "2"
    ]) == 0

    cir = os.path.join(out_dir, "cir.csv")
    frame = pd.read_csv(cir)
    assert sorted(frame["t"].unique()) == pytest.approx([0.1 * k for k in range(21)])

    pdp_out = os.path.join(tmp_path, "pdp.csv")
    assert main(["stats", "--cir", cir, "--scenario", "free_space", "--which", "pdp", "--t", "1.0", "--out", pdp_out]) == 0

    pdp = pd.read_csv(pdp_out)
    assert list(pdp.columns) == ["delay_s", "power_lin"]
    assert len(pdp) == 1

    acf_out = os.path.join(tmp_path, "acf.csv")
    assert main([
        "stats", "--cir", cir, "--scenario", "free_space", "--which", "acf", "--t", "0.5", "--out", acf_out,
        "--estimator", "closed_form", "--max-lag-steps", "5"
    ]) == 0
    assert pd.read_csv(acf_out)["acf_abs"].tolist() == pytest.approx([1.0] * 6)

    # 0.05 s lag window spans less than two 0.1 s snapshots
    assert main([
        "stats", "--cir", cir, "--scenario", "free_space", "--which", "dpsd", "--t", "1.0", "--out", os.path.join(tmp_path, "d.csv")
    ]) == 2


def test_simulation_is_byte_identical(tmp_path, gan_files):
    azimuth, elevation = gan_files
    dumps = []

    for name in ("a", "b"):
        out_dir = os.path.join(tmp_path, name)
        assert main([
            "simulate", "--scenario", "free_space", "--out-dir", out_dir,
            "--gan-az", azimuth, "--gan-el", elevation, "--duration", "1", "--seed", "5"
        ]) == 0
        dumps.append(read_bytes(os.path.join(out_dir, "cir.csv")))

    assert dumps[0] == dumps[1]
