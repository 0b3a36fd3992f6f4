import hashlib
import json
import os

import numpy as np
import pandas as pd
import pytest

from U2VChannel.channel.cir import simulate_trace
from U2VChannel.client.errors import InputError, ScenarioConfigError, TableSchemaError, ModelDocumentError, ModelShapeError
from U2VChannel.data.synthetic_rt import RayRecord
from U2VChannel.formats.config import parse_scenario, read_scenario, load_scenario, build_scenario, SCENARIO_DIR
from U2VChannel.formats.models import save_bpnn, save_gan, load_bpnn, load_gan, read_document, bundled_model
from U2VChannel.formats.tables import (
    RAY_COLUMNS, write_rays, read_rays, read_table, write_cir, read_cir, trace_from_cir, write_columns
)
from U2VChannel.learning.bpnn import preset_network
from U2VChannel.geometry.paths import PathKind

Reason = InputError.ErrorReason


def test_malformed_json_reports_position():
    with pytest.raises(ScenarioConfigError) as info:
        parse_scenario('{\n"schema_version": 1,\n"carrier_hz": ,\n}')

    assert info.value.reason is Reason.MALFORMED_DOCUMENT
    assert (info.value.line, info.value.column) == (3, 15)


def test_missing_schema_version(minimal_scenario):
    del minimal_scenario["schema_version"]

    with pytest.raises(ScenarioConfigError) as info:
        parse_scenario(json.dumps(minimal_scenario))

    assert info.value.reason is Reason.MISSING_FIELD
    assert info.value.field == "schema_version"


def test_unsupported_schema_version(minimal_scenario):
    minimal_scenario["schema_version"] = 99

    with pytest.raises(ScenarioConfigError) as info:
        parse_scenario(json.dumps(minimal_scenario))

    assert info.value.reason is Reason.SCHEMA_MISMATCH


def test_missing_field_is_named(minimal_scenario):
    del minimal_scenario["carrier_hz"]

    with pytest.raises(ScenarioConfigError) as info:
        parse_scenario(json.dumps(minimal_scenario))

    assert info.value.reason is Reason.MISSING_FIELD
    assert info.value.field == "carrier_hz"


@pytest.mark.parametrize("path, value, field", [
    (("carrier_hz",), -1.0, "carrier_hz"),
    (("time", "step"), 0.0, "time.step"),
    (("time", "stop"), -5.0, "time.stop"),
    (("rays_per_path",), 0, "rays_per_path"),
    (("rx", "trajectory", "position"), [1.0, 2.0], "rx.trajectory.position")
])
def test_invalid_values_are_named(minimal_scenario, path, value, field):
    target = minimal_scenario

    for key in path[:-1]:
        target = target[key]

    target[path[-1]] = value

    with pytest.raises(ScenarioConfigError) as info:
        parse_scenario(json.dumps(minimal_scenario))

    assert info.value.reason is Reason.INVALID_VALUE
    assert info.value.field == field


def test_degenerate_box_is_rejected(minimal_scenario):
    minimal_scenario["scene"] = {"boxes": [{"min": [0, 0, 0], "max": [10, 0, 10]}]}

    with pytest.raises(ScenarioConfigError) as info:
        parse_scenario(json.dumps(minimal_scenario))

    assert info.value.field == "scene.boxes.0"


def test_missing_scenario_file():
    with pytest.raises(ScenarioConfigError) as info:
        read_scenario("/nonexistent/scenario.json")

    assert info.value.reason is Reason.MISSING_FILE
    assert info.value.EXIT_CODE == 2


def test_read_scenario_hashes_the_document(write_scenario, minimal_scenario):
    path = write_scenario(minimal_scenario)
    config, digest = read_scenario(path)

    with open(path, "rb") as file:
        assert digest == hashlib.sha256(file.read()).hexdigest()

    scenario = build_scenario(config)
    assert len(scenario.times) == 11
    assert np.allclose(scenario.tx.velocity_at(0.5), [30.0, 0.0, 0.0])
    assert len(build_scenario(config, snapshot_rate_hz=100.0).times) == 101


@pytest.mark.parametrize("name", [os.path.splitext(n)[0] for n in sorted(os.listdir(SCENARIO_DIR))])
def test_bundled_scenarios_load(name):
    scenario = build_scenario(load_scenario(name))

    assert scenario.carrier_hz > 0
    assert len(scenario.times) > 1


def test_urban_scene_layout():
    scenario = build_scenario(load_scenario("urban_28ghz"))

    assert len(scenario.scene.scatterers) == 11
    assert scenario.scene.scatterers[0].name == "ground"
    assert scenario.tx_array.size == 2
    assert scenario.rx_array.size == 1


def test_bpnn_round_trip_is_exact(tmp_path):
    path = os.path.join(tmp_path, "bpnn.json")
    model = preset_network(PathKind.NLOS)

    save_bpnn(model, path, name="nlos", metrics={"rmse": 1.5})
    loaded = load_bpnn(path)

    assert loaded.trained
    assert loaded.layer_dims == [1, 4, 1]

    for a, b in zip(model.parameters, loaded.parameters):
        assert np.array_equal(a, b)

    assert read_document(path).metrics == {"rmse": 1.5}


def test_gan_round_trip_is_exact(tmp_path, analytic_gan):
    path = os.path.join(tmp_path, "gan.json")
    model = analytic_gan(0.05)
    model.location, model.scale = 0.1, 1.0 / 3.0

    save_gan(model, path)
    loaded = load_gan(path)

    assert loaded.trained
    assert loaded.noise is model.noise
    assert loaded.location == model.location
    assert loaded.scale == model.scale
    assert np.array_equal(loaded.generator.weights[0], model.generator.weights[0])


def test_bundled_presets_match_the_parameters():
    for kind, name in ((PathKind.LOS, "bpnn_los_preset"), (PathKind.NLOS, "bpnn_nlos_preset")):
        for a, b in zip(load_bpnn(bundled_model(name)).parameters, preset_network(kind).parameters):
            assert np.array_equal(a, b)


def write_json(tmp_path, document) -> str:
    path = os.path.join(tmp_path, "model.json")

    with open(path, "w", encoding="utf-8") as file:
        file.write(document if isinstance(document, str) else json.dumps(document))

    return path


def test_model_document_errors(tmp_path):
    with pytest.raises(ModelDocumentError) as info:
        load_bpnn(os.path.join(tmp_path, "absent.json"))
    assert info.value.reason is Reason.MISSING_FILE

    with pytest.raises(ModelDocumentError) as info:
        load_bpnn(write_json(tmp_path, "{not json"))
    assert info.value.reason is Reason.MALFORMED_DOCUMENT

    with pytest.raises(ModelDocumentError) as info:
        load_bpnn(write_json(tmp_path, {"schema_version": 7, "kind": "bpnn"}))
    assert info.value.reason is Reason.SCHEMA_MISMATCH

    with pytest.raises(ModelDocumentError) as info:
        load_bpnn(write_json(tmp_path, {"schema_version": 1, "kind": "forest"}))
    assert info.value.reason is Reason.INVALID_VALUE

    with pytest.raises(ModelDocumentError) as info:
        load_bpnn(write_json(tmp_path, {"schema_version": 1, "kind": "bpnn"}))
    assert info.value.reason is Reason.MISSING_FIELD


def test_model_kind_must_match(tmp_path, analytic_gan):
    path = os.path.join(tmp_path, "gan.json")
    save_gan(analytic_gan(), path)

    with pytest.raises(ModelDocumentError):
        load_bpnn(path)


def test_non_chaining_layers_raise_shape_mismatch(tmp_path):
    document = {
        "schema_version": 1,
        "kind": "bpnn",
        "network": {
            "layers": [
                {"weights": [[1.0, 2.0]], "biases": [0.0, 0.0], "activation": "sigmoid"},
                {"weights": [[1.0], [2.0], [3.0]], "biases": [0.0], "activation": "linear"}
            ],
            "trained": True
        }
    }

    with pytest.raises(ModelShapeError) as info:
        load_bpnn(write_json(tmp_path, document))

    assert info.value.reason is Reason.SHAPE_MISMATCH


def test_ray_table_round_trip(tmp_path):
    path = os.path.join(tmp_path, "rays.csv")
    records = [
        RayRecord(0, 1, 1.234567890123e-6, -90.123456789, 3.0, -0.1, 0.1, -0.2, True),
        RayRecord(0, 2, 2.5e-6, -101.0, -3.0, 0.0, 1.0 / 3.0, 0.2, False)
    ]

    write_rays(records, path)

    assert read_rays(path) == records


def test_table_errors(tmp_path):
    path = os.path.join(tmp_path, "rays.csv")
    pd.DataFrame({c: [1.0] for c in RAY_COLUMNS if c != "power"}).to_csv(path, index=False)

    with pytest.raises(TableSchemaError) as info:
        read_rays(path)
    assert info.value.reason is Reason.SCHEMA_MISMATCH

    with pytest.raises(InputError) as info:
        read_table(os.path.join(tmp_path, "absent.csv"), RAY_COLUMNS)
    assert info.value.reason is Reason.MISSING_FILE

    pd.DataFrame({c: [0.0 if c == "delay" else 1.0] for c in RAY_COLUMNS}).to_csv(path, index=False)

    with pytest.raises(TableSchemaError):
        read_rays(path)


def test_write_columns_keeps_order(tmp_path):
    path = os.path.join(tmp_path, "acf.csv")
    write_columns({"lag_s": [0.0, 0.1], "acf_re": [1.0, 0.5]}, path)

    frame = pd.read_csv(path)
    assert list(frame.columns) == ["lag_s", "acf_re"]
    assert frame["acf_re"].tolist() == [1.0, 0.5]


def test_cir_dump_rebuilds_the_trace(tmp_path, write_scenario, minimal_scenario, bpnn_los, bpnn_nlos, analytic_gan):
    minimal_scenario["scene"] = {"ground": {"half_size": 2000.0}}
    minimal_scenario["rays_per_path"] = 3
    minimal_scenario["tx"]["array"] = [[0.001, 0.0, 0.0], [0.0, 0.005, 0.0]]
    scenario = build_scenario(load_scenario(write_scenario(minimal_scenario)))

    trace = simulate_trace(scenario, bpnn_los, bpnn_nlos, analytic_gan(0.05), analytic_gan(0.02))
    path = os.path.join(tmp_path, "cir.csv")
    write_cir({pair: trace.cir(*pair) for pair in trace.pairs()}, path)

    frame = read_cir(path)
    assert set(frame["pair"].astype(str)) == {"0-0", "0-1"}

    rebuilt = trace_from_cir(frame, scenario)
    assert len(rebuilt.snapshots) == len(trace.snapshots)

    for original, restored in zip(trace.snapshots, rebuilt.snapshots):
        assert restored.t == pytest.approx(original.t)
        assert [p.key for p in restored.paths] == [p.key for p in original.paths]

        for a, b in zip(original.paths, restored.paths):
            assert np.allclose(b.phases, a.phases, rtol=0, atol=1e-9)
            assert b.delay == a.delay
            assert np.allclose(b.doppler, a.doppler)
