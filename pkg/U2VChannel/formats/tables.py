from __future__ import annotations

import os
import tempfile
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from U2VChannel.channel.cir import ChannelTrace, CirSnapshot, TracePath, TraceSnapshot, Scenario, time_grid
from U2VChannel.client.errors import TableSchemaError, InputError
from U2VChannel.client.settings import SimDefaults
from U2VChannel.data.synthetic_rt import RayRecord
from U2VChannel.geometry.kinematics import AngleSet, doppler_frequency
from U2VChannel.geometry.paths import LOS_PATH_ID, PathKind

RAY_COLUMNS: List[str] = ["channel_id", "path_id", "delay", "power", "aaoa", "eaoa", "aaod", "eaod", "los"]
CIR_COLUMNS: List[str] = ["t", "pair", "path_id", "ray_id", "delay_s", "power_db", "aaoa", "eaoa", "aaod", "eaod", "phase_rad"]
OFFSET_COLUMNS: List[str] = ["channel_id", "cluster_id", "cluster_size", "azimuth_offset", "elevation_offset"]


def write_atomic(path: str, writer: Callable[[str], None]) -> None:
    """
    Write through a temporary file in the target directory, then rename over the target

    :param path: Destination
    :param writer: Called with the temporary path

    """

    directory: str = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    handle, temporary = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    os.close(handle)

    try:
        writer(temporary)
        os.replace(temporary, path)
    finally:
        if os.path.exists(temporary):
            os.remove(temporary)


def write_text_atomic(path: str, text: str) -> None:
    def write(temporary: str) -> None:
        with open(temporary, "w", encoding="utf-8", newline="\n") as file:
            file.write(text)

    write_atomic(path, write)


def write_table(frame: pd.DataFrame, path: str) -> None:
    """
    CSV with a header row and 17-significant-digit floats

    """

    write_atomic(path, lambda temporary: frame.to_csv(
        temporary, index=False, float_format=SimDefaults.float_format, lineterminator="\n"
    ))


def read_table(path: str, columns: Sequence[str]) -> pd.DataFrame:
    """
    Read a CSV and check its header

    :param path: The file
    :param columns: Columns that must be present
    :return: The frame
    :raises TableSchemaError: If unreadable or a column is missing

    """

    if not os.path.isfile(path):
        raise InputError(InputError.ErrorReason.MISSING_FILE, f"Table '{path}' does not exist.")

    try:
        frame: pd.DataFrame = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as ex:
        raise TableSchemaError(path, f"unreadable CSV ({ex})") from ex

    missing: List[str] = [c for c in columns if c not in frame.columns]

    if missing:
        raise TableSchemaError(path, f"missing columns {missing}")

    return frame


def _require_finite(frame: pd.DataFrame, path: str, columns: Sequence[str]) -> None:
    try:
        values: np.ndarray = frame[list(columns)].to_numpy(dtype=float)
    except (TypeError, ValueError) as ex:
        raise TableSchemaError(path, f"non-numeric values ({ex})") from ex

    if not np.all(np.isfinite(values)):
        raise TableSchemaError(path, "values must be finite")


def rays_to_frame(records: Sequence[RayRecord]) -> pd.DataFrame:
    frame: pd.DataFrame = pd.DataFrame([[getattr(r, c) for c in RAY_COLUMNS] for r in records], columns=RAY_COLUMNS)
    return frame.astype({"channel_id": int, "path_id": int, "los": int})


def write_rays(records: Sequence[RayRecord], path: str) -> None:
    write_table(rays_to_frame(records), path)


def read_rays(path: str) -> List[RayRecord]:
    """
    Load a ray corpus

    :raises TableSchemaError: On missing columns, non-finite values or non-positive delays

    """

    frame: pd.DataFrame = read_table(path, RAY_COLUMNS)

    if len(frame) == 0:
        raise TableSchemaError(path, "the table holds no rays")

    _require_finite(frame, path, RAY_COLUMNS)

    if np.any(frame["delay"].to_numpy(dtype=float) <= 0):
        raise TableSchemaError(path, "delays must be positive")

    return [
        RayRecord(
            channel_id=int(row.channel_id), path_id=int(row.path_id), delay=float(row.delay), power=float(row.power),
            aaoa=float(row.aaoa), eaoa=float(row.eaoa), aaod=float(row.aaod), eaod=float(row.eaod), los=bool(row.los)
        )
        for row in frame.itertuples(index=False)
    ]


def pair_label(q: int, p: int) -> str:
    return f"{q}-{p}"


def cir_to_frame(sequences: Dict[tuple, List[CirSnapshot]]) -> pd.DataFrame:
    """
    Flatten CIR sequences into one row per (time, pair, path, ray), time-major

    """

    rows: List[list] = []
    pairs: List[tuple] = sorted(sequences)

    for k in range(len(sequences[pairs[0]]) if pairs else 0):
        for pair in pairs:
            snapshot: CirSnapshot = sequences[pair][k]

            for path in snapshot.paths:
                power_db: float = float(10.0 * np.log10(path.power))
                angles: AngleSet = path.angles

                for m, phase in enumerate(path.phases):
                    rows.append([
                        snapshot.t, pair_label(*pair), path.path_id, m, path.delay, power_db,
                        float(angles.aaoa[m]), float(angles.eaoa[m]), float(angles.aaod[m]), float(angles.eaod[m]), float(phase)
                    ])

    return pd.DataFrame(rows, columns=CIR_COLUMNS)


def write_cir(sequences: Dict[tuple, List[CirSnapshot]], path: str) -> None:
    write_table(cir_to_frame(sequences), path)


def read_cir(path: str) -> pd.DataFrame:
    frame: pd.DataFrame = read_table(path, CIR_COLUMNS)
    _require_finite(frame, path, [c for c in CIR_COLUMNS if c != "pair"])
    return frame


def trace_from_cir(frame: pd.DataFrame, scenario: Scenario) -> ChannelTrace:
    """
    Rebuild a channel trace from the reference-pair rows of a CIR dump.

    Kinematics come from the scenario; ψ^R of the reference pair is removed from the dumped
    phases. A path absent at the previous snapshot starts a new instance.

    :param frame: Rows of a CIR dump
    :param scenario: The scenario the dump was simulated from
    :return: The trace

    """

    reference: pd.DataFrame = frame[frame["pair"].astype(str) == pair_label(0, 0)]
    trace: ChannelTrace = ChannelTrace(scenario.carrier_hz, scenario.tx_array, scenario.rx_array)
    previous: Dict[int, int] = {}
    births: Dict[int, int] = {}
    dumped: np.ndarray = np.unique(frame["t"].to_numpy(dtype=float))

    if len(dumped) == 0:
        raise TableSchemaError("<cir>", "the dump holds no snapshots")

    # Snapshots without paths leave no rows, so the grid is rebuilt from the smallest spacing
    step: float = float(np.min(np.diff(dumped))) if len(dumped) > 1 else 1.0
    grid: np.ndarray = time_grid(float(dumped[0]), float(dumped[-1]) + 0.5 * step, step)
    above: np.ndarray = np.clip(np.searchsorted(dumped, grid), 1, len(dumped) - 1) if len(dumped) > 1 else np.zeros(len(grid), dtype=int)
    below: np.ndarray = np.maximum(above - 1, 0)
    nearest: np.ndarray = np.where(np.abs(dumped[above] - grid) < np.abs(dumped[below] - grid), above, below)
    times: np.ndarray = np.where(np.abs(dumped[nearest] - grid) < 1e-6 * step, dumped[nearest], grid)

    for index, t in enumerate(times):
        t = float(t)
        rows: pd.DataFrame = reference[reference["t"] == t]
        v_tx, v_rx = scenario.tx.velocity_at(t), scenario.rx.velocity_at(t)
        snapshot: TraceSnapshot = TraceSnapshot(
            index=index, t=t, paths=[],
            r_v_tx=scenario.tx.velocity_rotation_at(t), r_p=scenario.tx.rotation_at(t), r_v_rx=scenario.rx.velocity_rotation_at(t),
            v_tx=v_tx, v_rx=v_rx
        )
        current: Dict[int, int] = {}

        for path_id, group in rows.groupby("path_id", sort=True):
            group = group.sort_values("ray_id")
            path_id = int(path_id)

            if path_id not in previous:
                births[path_id] = births.get(path_id, -1) + 1

            current[path_id] = births[path_id]
            angles: AngleSet = AngleSet(
                aaod=group["aaod"].to_numpy(dtype=float), eaod=group["eaod"].to_numpy(dtype=float),
                aaoa=group["aaoa"].to_numpy(dtype=float), eaoa=group["eaoa"].to_numpy(dtype=float)
            )
            path: TracePath = TracePath(
                path_id=path_id,
                instance=current[path_id],
                kind=PathKind.LOS if path_id == LOS_PATH_ID else PathKind.NLOS,
                delay=float(group["delay_s"].iloc[0]),
                power_db=float(group["power_db"].iloc[0]),
                angles=angles,
                phases=np.zeros(len(group)),
                doppler=np.atleast_1d(doppler_frequency(angles, v_tx, v_rx, scenario.carrier_hz))
            )
            path.phases = group["phase_rad"].to_numpy(dtype=float) - trace.element_phase(
                snapshot, path, scenario.tx_array.offsets[0], scenario.rx_array.offsets[0]
            )
            snapshot.paths.append(path)

        previous = current
        trace.snapshots.append(snapshot)

    return trace


def write_offsets(frame: pd.DataFrame, path: str) -> None:
    write_table(frame[OFFSET_COLUMNS], path)


def read_offsets(path: str, min_cluster_size: int = 1) -> pd.DataFrame:
    """
    Load clustered angle offsets, keeping rays of clusters with at least min_cluster_size members

    """

    frame: pd.DataFrame = read_table(path, OFFSET_COLUMNS)
    _require_finite(frame, path, OFFSET_COLUMNS)
    return frame[frame["cluster_size"] >= min_cluster_size].reset_index(drop=True)


def write_columns(columns: Dict[str, Sequence[float]], path: str, order: Optional[Sequence[str]] = None) -> None:
    """
    Write named value columns (the first being the abscissa)

    """

    frame: pd.DataFrame = pd.DataFrame({name: np.asarray(columns[name]) for name in (order or list(columns))})
    write_table(frame, path)


__all__ = [
    "RAY_COLUMNS",
    "CIR_COLUMNS",
    "OFFSET_COLUMNS",
    "write_atomic",
    "write_text_atomic",
    "write_table",
    "read_table",
    "rays_to_frame",
    "write_rays",
    "read_rays",
    "pair_label",
    "cir_to_frame",
    "write_cir",
    "read_cir",
    "trace_from_cir",
    "write_offsets",
    "read_offsets",
    "write_columns"
]
