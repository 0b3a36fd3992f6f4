from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from U2VChannel.client.errors import OutOfRangeError, GeometryError
from U2VChannel.client.settings import SPEED_OF_LIGHT

Vec3 = np.ndarray
Mat3 = np.ndarray
ArrayLike = Union[float, np.ndarray]

# Slack on the trajectory span so grid times computed by accumulation still resolve
TIME_TOLERANCE: float = 1e-9


@dataclass(frozen=True)
class AngleSet:
    """
    Mean (or per-ray) departure and arrival angles of a path, in radians.

    Fields may be scalars or equally shaped arrays (one entry per ray).

    """

    aaod: ArrayLike
    eaod: ArrayLike
    aaoa: ArrayLike
    eaoa: ArrayLike

    @property
    def departure_unit(self) -> np.ndarray:
        return spherical_unit(self.aaod, self.eaod)

    @property
    def arrival_unit(self) -> np.ndarray:
        return spherical_unit(self.aaoa, self.eaoa)

    def swapped(self) -> AngleSet:
        """
        Exchange the departure and arrival roles

        :return: The angle set seen from the opposite link direction

        """

        return AngleSet(aaod=self.aaoa, eaod=self.eaoa, aaoa=self.aaod, eaoa=self.eaod)


@dataclass()
class Trajectory:
    """
    Piecewise-linear trajectory of a terminal with an optional attitude profile.

    Attitude rows are (t, ω, φ, γ) in radians and are interpolated linearly; outside
    the attitude span the nearest row is held.

    """

    times: np.ndarray
    positions: np.ndarray
    attitude: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)

        if self.times.ndim != 1 or len(self.times) != len(self.positions) or len(self.times) < 1:
            raise GeometryError("A trajectory needs one position per waypoint time.")

        if np.any(np.diff(self.times) <= 0):
            raise GeometryError("Trajectory waypoint times must be strictly increasing.")

        if self.attitude is not None:
            self.attitude = np.asarray(self.attitude, dtype=float).reshape(-1, 4)

            if np.any(np.diff(self.attitude[:, 0]) <= 0):
                raise GeometryError("Attitude profile times must be strictly increasing.")

    @classmethod
    def stationary(cls, position: Sequence[float], start: float = 0.0, stop: float = 1e9) -> Trajectory:
        """
        A terminal that never moves

        :param position: Where it sits
        :param start: Start of the valid span
        :param stop: End of the valid span
        :return: The trajectory

        """

        return cls(times=np.array([start, stop]), positions=np.array([position, position], dtype=float))

    @classmethod
    def from_path(
            cls,
            points: Sequence[Sequence[float]],
            speed: float,
            start_time: float = 0.0,
            attitude: Optional[np.ndarray] = None
    ) -> Trajectory:
        """
        Build a constant-speed trajectory through a list of points

        :param points: Polyline vertices (m)
        :param speed: Constant speed along the polyline (m/s)
        :param start_time: Time at the first vertex (s)
        :param attitude: Optional attitude rows (t, ω, φ, γ)
        :return: The trajectory with waypoint times derived from segment lengths

        """

        positions: np.ndarray = np.asarray(points, dtype=float).reshape(-1, 3)

        if speed <= 0:
            raise GeometryError("Trajectory speed must be positive.")

        lengths: np.ndarray = np.linalg.norm(np.diff(positions, axis=0), axis=1)
        times: np.ndarray = start_time + np.concatenate([[0.0], np.cumsum(lengths)]) / speed
        return cls(times=times, positions=positions, attitude=attitude)

    @property
    def span(self) -> Tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def _check(self, t: float) -> None:
        start, stop = self.span

        if t < start - TIME_TOLERANCE or t > stop + TIME_TOLERANCE:
            raise OutOfRangeError(f"Time {t} s is outside the trajectory span [{start}, {stop}] s.")

    def _segment(self, t: float) -> int:
        # Right-continuous: at an interior waypoint the outgoing segment is used
        if len(self.times) == 1:
            return 0

        return int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2))

    def velocity_at(self, t: float) -> Vec3:
        """
        Segment slope at time t

        :param t: Time (s)
        :return: Velocity (m/s)

        """

        self._check(t)

        if len(self.times) == 1:
            return np.zeros(3)

        idx: int = self._segment(t)
        return (self.positions[idx + 1] - self.positions[idx]) / (self.times[idx + 1] - self.times[idx])

    def attitude_at(self, t: float) -> Tuple[float, float, float]:
        """
        Interpolated attitude angles (ω, φ, γ) at time t, zeros without a profile

        :param t: Time (s)
        :return: The three angles in radians

        """

        if self.attitude is None or len(self.attitude) == 0:
            return 0.0, 0.0, 0.0

        rows: np.ndarray = self.attitude
        return tuple(float(np.interp(t, rows[:, 0], rows[:, k])) for k in (1, 2, 3))

    def rotation_at(self, t: float) -> Mat3:
        """
        Attitude rotation matrix at time t

        :param t: Time (s)
        :return: R^P

        """

        return rotation_from_attitude(*self.attitude_at(t))

    def velocity_rotation_at(self, t: float) -> Mat3:
        """
        Rotation from body frame to the frame aligned with the direction of motion

        :param t: Time (s)
        :return: R_v (identity for a stationary terminal)

        """

        return rotation_from_velocity(*velocity_angles(self.velocity_at(t)))


def position_at(trajectory: Trajectory, t: float) -> Vec3:
    """
    Position of a terminal by piecewise-linear interpolation of its waypoints

    :param trajectory: The trajectory to evaluate
    :param t: Time (s), inside the trajectory span
    :return: Position (m)

    """

    trajectory._check(t)
    times: np.ndarray = trajectory.times

    return np.array([np.interp(t, times, trajectory.positions[:, k]) for k in range(3)])


def spherical_unit(alpha: ArrayLike, beta: ArrayLike) -> np.ndarray:
    """
    Unit vector for azimuth alpha and elevation beta

    :param alpha: Azimuth (rad), scalar or array
    :param beta: Elevation (rad), same shape as alpha
    :return: Array of shape (..., 3)

    """

    alpha, beta = np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float)
    cos_beta: np.ndarray = np.cos(beta)
    return np.stack([cos_beta * np.cos(alpha), cos_beta * np.sin(alpha), np.sin(beta)], axis=-1)


def velocity_angles(velocity: Vec3) -> Tuple[float, float]:
    """
    Azimuth and elevation of a velocity vector, (0, 0) when at rest

    :param velocity: Velocity (m/s)
    :return: (α_v, β_v) in radians

    """

    speed: float = float(np.linalg.norm(velocity))

    if speed == 0.0:
        return 0.0, 0.0

    return float(np.arctan2(velocity[1], velocity[0])), float(np.arcsin(np.clip(velocity[2] / speed, -1.0, 1.0)))


def rotation_from_velocity(alpha_v: float, beta_v: float) -> Mat3:
    """
    Rotation aligning the body frame with the direction of motion

    :param alpha_v: Azimuth of the velocity (rad)
    :param beta_v: Elevation of the velocity (rad)
    :return: 3x3 rotation matrix

    """

    ca, sa, cb, sb = np.cos(alpha_v), np.sin(alpha_v), np.cos(beta_v), np.sin(beta_v)

    return np.array([
        [ca * cb, -sa, -ca * sb],
        [sa * cb, ca, -sa * sb],
        [sb, 0.0, cb]
    ])


def rotation_from_attitude(omega: float, phi: float, gamma: float) -> Mat3:
    """
    Attitude rotation of an airframe.

    The matrix is the z-y-x product with omega about z, phi about y and gamma about x.
    The angles keep their symbol names; gamma is the angle swept by the 0, 45 and 90
    degree pitch manoeuvre of the bundled urban scenario.

    :param omega: Angle about z (rad)
    :param phi: Angle about y (rad)
    :param gamma: Angle about x (rad)
    :return: 3x3 rotation matrix

    """

    co, so = np.cos(omega), np.sin(omega)
    cp, sp = np.cos(phi), np.sin(phi)
    cg, sg = np.cos(gamma), np.sin(gamma)

    return np.array([
        [co * cp, co * sp * sg - so * cg, co * sp * cg + so * sg],
        [so * cp, so * sp * sg + co * cg, so * sp * cg - co * sg],
        [-sp, cp * sg, cp * cg]
    ])


def doppler_frequency(angles: AngleSet, v_tx: Vec3, v_rx: Vec3, f0: float) -> ArrayLike:
    """
    Doppler shift of a ray (or of every ray in an angle set)

    :param angles: Departure/arrival angles
    :param v_tx: Transmitter velocity (m/s)
    :param v_rx: Receiver velocity (m/s)
    :param f0: Carrier frequency (Hz)
    :return: Doppler frequency (Hz), shaped like the angles

    """

    if f0 <= 0:
        raise GeometryError("Carrier frequency must be positive.")

    r_tx: np.ndarray = angles.departure_unit
    r_rx: np.ndarray = angles.arrival_unit
    return (f0 / SPEED_OF_LIGHT) * (r_tx @ np.asarray(v_tx, dtype=float) + r_rx @ np.asarray(v_rx, dtype=float))


def doppler_bound(v_tx: Vec3, v_rx: Vec3, f0: float) -> float:
    """
    Largest Doppler magnitude any ray can see for the given velocities

    :return: f0 (|v_tx| + |v_rx|) / c

    """

    return f0 * (float(np.linalg.norm(v_tx)) + float(np.linalg.norm(v_rx))) / SPEED_OF_LIGHT


def integrate_phase(times: np.ndarray, frequencies: np.ndarray, cumulative: bool = False) -> np.ndarray:
    """
    Trapezoidal integral of 2π f(t) on a time grid

    :param times: Ascending grid (s), shape (K,)
    :param frequencies: Frequencies (Hz), shape (K, ...) one row per grid time
    :param cumulative: Return the running integral at every grid time instead of the total
    :return: Phase (rad)

    """

    times = np.asarray(times, dtype=float)
    frequencies = np.asarray(frequencies, dtype=float)

    if len(times) < 2:
        zeros: np.ndarray = np.zeros_like(frequencies, dtype=float)
        return zeros if cumulative else zeros[0]

    if np.any(np.diff(times) < 0):
        raise OutOfRangeError("The integration grid must be ascending.")

    running: np.ndarray = cumulative_trapezoid(2.0 * np.pi * frequencies, times, axis=0, initial=0.0)
    return running if cumulative else running[-1]


def movement_phase(
        times: np.ndarray,
        angles: Sequence[AngleSet],
        v_tx: np.ndarray,
        v_rx: np.ndarray,
        f0: float
) -> np.ndarray:
    """
    Phase accumulated by the Doppler shift over [t0, t]

    :param times: Snapshot grid from t0 to t (s), shape (K,)
    :param angles: Angle set at each grid time
    :param v_tx: Transmitter velocities, shape (K, 3)
    :param v_rx: Receiver velocities, shape (K, 3)
    :param f0: Carrier frequency (Hz)
    :return: ψ^D at t (rad), shaped like one angle set

    """

    v_tx, v_rx = np.asarray(v_tx, dtype=float), np.asarray(v_rx, dtype=float)
    frequencies: np.ndarray = np.array([
        doppler_frequency(angle_set, v_tx[k], v_rx[k], f0)
        for k, angle_set in enumerate(angles)
    ])

    return integrate_phase(times, frequencies)


def rotation_phase(
        angles: AngleSet,
        r_v_tx: Mat3,
        r_p: Mat3,
        r_v_rx: Mat3,
        d_tx: Vec3,
        d_rx: Vec3,
        f0: float
) -> ArrayLike:
    """
    Phase caused by the antenna element offsets in the rotated terminal frames

    :param angles: Departure/arrival angles
    :param r_v_tx: Transmitter motion rotation
    :param r_p: Transmitter attitude rotation
    :param r_v_rx: Receiver motion rotation
    :param d_tx: Transmit element offset (m, body frame)
    :param d_rx: Receive element offset (m, body frame)
    :param f0: Carrier frequency (Hz)
    :return: ψ^R (rad), shaped like the angles

    """

    wave_number: float = 2.0 * np.pi * f0 / SPEED_OF_LIGHT
    world_tx: np.ndarray = r_v_tx @ r_p @ np.asarray(d_tx, dtype=float)
    world_rx: np.ndarray = r_v_rx @ np.asarray(d_rx, dtype=float)

    return wave_number * (angles.arrival_unit @ world_rx + angles.departure_unit @ world_tx)


def wavelength(f0: float) -> float:
    return SPEED_OF_LIGHT / f0


def wrap_angle(angle: ArrayLike) -> ArrayLike:
    """
    Wrap angles into (−π, π]

    :param angle: Angle(s) in radians
    :return: Wrapped angle(s)

    """

    wrapped = np.pi - np.mod(np.pi - np.asarray(angle, dtype=float), 2.0 * np.pi)
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


__all__ = [
    "Vec3",
    "Mat3",
    "AngleSet",
    "Trajectory",
    "position_at",
    "spherical_unit",
    "velocity_angles",
    "rotation_from_velocity",
    "rotation_from_attitude",
    "doppler_frequency",
    "doppler_bound",
    "integrate_phase",
    "movement_phase",
    "rotation_phase",
    "wavelength",
    "wrap_angle"
]
