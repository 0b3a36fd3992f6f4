import argparse
import sys
from typing import List, Optional, Callable, Dict

from U2VChannel.__version__ import PACKAGE_VERSION
from U2VChannel.channel.stats import Estimator
from U2VChannel.client.client import U2VChannelClient
from U2VChannel.client.errors import InputError, NumericFailureError
from U2VChannel.client.logger import LogLevel, U2VChannelLogHandler
from U2VChannel.client.routes import StatsOptions, Statistic
from U2VChannel.client.settings import SimDefaults
from U2VChannel.formats.manifest import RunManifest
from U2VChannel.learning.bpnn import TrainConfig
from U2VChannel.learning.gan import GanConfig, NoisePrior, GeneratorLoss

EXIT_OK: int = 0


def build_parser() -> argparse.ArgumentParser:
    """
    Argument parser with one sub-command per pipeline stage

    """

    parser = argparse.ArgumentParser(prog="u2vchannel", description="Machine-learning U2V mmWave channel simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {PACKAGE_VERSION}")
    parser.add_argument("--log-level", choices=[level.name.lower() for level in LogLevel], default=None)
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen-data", help="generate a synthetic ray corpus")
    gen.add_argument("--scenario", required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--pairs", type=int)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--rays-per-path", type=int)

    cluster = commands.add_parser("cluster", help="cluster rays and extract angle offsets")
    cluster.add_argument("--data", required=True)
    cluster.add_argument("--out", required=True)
    cluster.add_argument("--nk-max", type=int, default=SimDefaults.nk_max)
    cluster.add_argument("--sse-threshold", type=float, default=SimDefaults.sse_threshold)
    cluster.add_argument("--slope-threshold", type=float, default=SimDefaults.slope_threshold)
    cluster.add_argument("--restarts", type=int, default=SimDefaults.kmeans_restarts)
    cluster.add_argument("--seed", type=int, default=0)

    bpnn = commands.add_parser("train-bpnn", help="train the delay-to-power networks")
    bpnn.add_argument("--data", required=True)
    bpnn.add_argument("--out", required=True)
    bpnn.add_argument("--lr", type=float, default=0.001)
    bpnn.add_argument("--epochs", type=int, default=2000)
    bpnn.add_argument("--l2", type=float, default=0.0)
    bpnn.add_argument("--split", type=float, default=0.7)
    bpnn.add_argument("--batch-size", type=int)
    bpnn.add_argument("--hidden", type=int, nargs="+", default=[4])
    bpnn.add_argument("--seed", type=int, default=0)

    gan = commands.add_parser("train-gan", help="train the angle-offset GANs")
    gan.add_argument("--data", required=True)
    gan.add_argument("--out", required=True)
    gan.add_argument("--steps", type=int, default=20000)
    gan.add_argument("--batch-size", type=int, default=256)
    gan.add_argument("--lr", type=float, default=2e-4)
    gan.add_argument("--noise-dim", type=int, default=8)
    gan.add_argument("--noise", choices=[prior.value for prior in NoisePrior], default=NoisePrior.NORMAL.value)
    gan.add_argument("--generator-loss", choices=[loss.value for loss in GeneratorLoss], default=GeneratorLoss.NON_SATURATING.value)
    gan.add_argument("--min-cluster-size", type=int, default=2)
    gan.add_argument("--split", type=float, default=0.7)
    gan.add_argument("--seed", type=int, default=0)

    simulate = commands.add_parser("simulate", help="simulate the CIR of a scenario")
    simulate.add_argument("--scenario", required=True)
    simulate.add_argument("--out-dir", required=True)
    simulate.add_argument("--bpnn-los")
    simulate.add_argument("--bpnn-nlos")
    simulate.add_argument("--gan-az")
    simulate.add_argument("--gan-el")
    simulate.add_argument("--seed", type=int)
    simulate.add_argument("--rate", type=float, help="snapshot rate in Hz (default: the scenario time step)")
    simulate.add_argument("--duration", type=float, help="simulate only this many seconds")

    stats = commands.add_parser("stats", help="compute channel statistics from a CIR dump")
    stats.add_argument("--cir", required=True)
    stats.add_argument("--scenario", required=True)
    stats.add_argument("--which", required=True, choices=[s.value for s in Statistic])
    stats.add_argument("--t", type=float, required=True)
    stats.add_argument("--out", required=True)
    stats.add_argument("--max-lag-steps", type=int, default=10)
    stats.add_argument("--max-spacing", type=float, default=2.0, help="largest spacing in wavelengths")
    stats.add_argument("--spacing-count", type=int, default=41)
    stats.add_argument("--axis", choices=["x", "y", "z"], default="y")
    stats.add_argument("--identity-attitude", action="store_true")
    stats.add_argument("--path-id", type=int)
    stats.add_argument("--frequency", type=float, default=0.0)
    stats.add_argument("--estimator", choices=[e.value for e in Estimator], default=Estimator.ENSEMBLE.value)
    stats.add_argument("--ensemble", type=int, default=SimDefaults.ensemble)
    stats.add_argument("--window", type=float, default=SimDefaults.dpsd_window_s)
    stats.add_argument("--fft-size", type=int, default=SimDefaults.dpsd_fft_size)
    stats.add_argument("--seed", type=int, default=0)

    return parser


def run_command(client: U2VChannelClient, args: argparse.Namespace) -> RunManifest:
    """
    Dispatch parsed arguments to the client's routes

    """

    commands: Dict[str, Callable[[], RunManifest]] = {
        "gen-data": lambda: client.gen_data(
            scenario=args.scenario, out=args.out, pairs=args.pairs, seed=args.seed, rays_per_path=args.rays_per_path
        ),
        "cluster": lambda: client.cluster(
            data=args.data, out=args.out, nk_max=args.nk_max, sse_threshold=args.sse_threshold,
            slope_threshold=args.slope_threshold, restarts=args.restarts, seed=args.seed
        ),
        "train-bpnn": lambda: client.train_bpnn(
            data=args.data, out=args.out,
            config=TrainConfig(
                learning_rate=args.lr, epochs=args.epochs, l2=args.l2, split=args.split,
                batch_size=args.batch_size, hidden=args.hidden, seed=args.seed
            )
        ),
        "train-gan": lambda: client.train_gan(
            data=args.data, out=args.out, min_cluster_size=args.min_cluster_size, split=args.split,
            config=GanConfig(
                steps=args.steps, batch_size=args.batch_size, learning_rate=args.lr, noise_dim=args.noise_dim,
                noise=NoisePrior(args.noise), generator_loss=GeneratorLoss(args.generator_loss), seed=args.seed
            )
        ),
        "simulate": lambda: client.simulate(
            scenario=args.scenario, out_dir=args.out_dir, bpnn_los=args.bpnn_los, bpnn_nlos=args.bpnn_nlos,
            gan_az=args.gan_az, gan_el=args.gan_el, seed=args.seed, rate=args.rate, duration=args.duration
        ),
        "stats": lambda: client.stats(
            cir=args.cir, scenario=args.scenario, which=Statistic(args.which), t=args.t, out=args.out,
            options=StatsOptions(
                max_lag_steps=args.max_lag_steps, max_spacing_wavelengths=args.max_spacing, spacing_count=args.spacing_count,
                axis=args.axis, identity_attitude=args.identity_attitude, path_id=args.path_id, frequency=args.frequency,
                estimator=Estimator(args.estimator), ensemble=args.ensemble, seed=args.seed,
                window_s=args.window, fft_size=args.fft_size
            )
        )
    }

    return commands[args.command]()


def print_report(manifest: RunManifest) -> None:
    if manifest.command == "cluster":
        print(f"Chosen Nk: {manifest.metrics['mean_nk']:.6g} (mean over {int(manifest.metrics['channels'])} channel(s))")
        print(f"Normalized SSE: {manifest.metrics['mean_normalized_sse']:.6g}")

    for name, value in sorted(manifest.metrics.items()):
        print(f"{name}: {value:.6g}")

    for warning in manifest.warnings:
        print(f"warning: {warning}")

    for output in manifest.outputs:
        print(f"wrote {output}")


def main(argv: Optional[List[str]] = None) -> int:
    """
    Command-line entry point

    :param argv: Arguments (default: sys.argv[1:])
    :return: 0 on success, 2 on input errors, 3 on numeric failures

    """

    args = build_parser().parse_args(argv)
    client: U2VChannelClient = U2VChannelClient(log_level=LogLevel.from_name(args.log_level))

    try:
        print_report(run_command(client, args))
    except InputError as ex:
        U2VChannelLogHandler.get_logger().error(str(ex))
        print(f"error: {ex}", file=sys.stderr)
        return InputError.EXIT_CODE
    except NumericFailureError as ex:
        U2VChannelLogHandler.get_logger().error(str(ex))
        print(f"error: {ex}", file=sys.stderr)
        return NumericFailureError.EXIT_CODE
    finally:
        U2VChannelLogHandler.set_command(None)

    return EXIT_OK


__all__ = [
    "build_parser",
    "run_command",
    "print_report",
    "main"
]
