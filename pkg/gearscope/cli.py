#
# Copyright (c) 2023 Gearscope Developers. All rights reserved.
#
import argparse
import logging
import sys
from typing import Dict, List, Optional, Tuple, Union

from gearscope.config import load_config
from gearscope.core.exceptions import (ConfigError, GearscopeException, InvalidChannelMap, InvalidDetectionConfig,
                                       InvalidOrder, InvalidSpec, SegmentOutOfRange)
from gearscope.core.utils.constants import CLIENT_VERSION, PARENT_LOGGER_NAME, ExitCode
from gearscope.pipeline import (PipelineResult, cmd_detect, cmd_features, cmd_report, cmd_scalogram, cmd_synth,
                                cmd_trend)
from gearscope.synthetic import SyntheticCorpusSpec

__all__ = ["main", "build_parser", "parse_kappa"]

_logger = logging.getLogger(__name__)

USAGE_ERRORS = (ConfigError, SegmentOutOfRange, InvalidOrder, InvalidDetectionConfig, InvalidSpec, InvalidChannelMap)


class _ArgumentParser(argparse.ArgumentParser):
    """Exit with the usage exit code instead of argparse's default of 2, which is reserved for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(int(ExitCode.USAGE), f'{self.prog}: error: {message}\n')


def parse_kappa(text: str) -> Tuple[Optional[float], Dict[str, float]]:
    """Parse ``"1.5"``, ``"1.5,IP-1=1.6,RR-4=1.3"`` or ``"IP-1=1.6"`` into (global factor, per-channel factors)."""
    factor, per_channel = None, {}
    for item in filter(None, (part.strip() for part in text.split(','))):
        label, sep, value = item.rpartition('=')
        try:
            if sep:
                per_channel[label.strip()] = float(value)
            else:
                factor = float(item)
        except ValueError:
            raise argparse.ArgumentTypeError(f'invalid threshold factor {item!r}') from None
    return factor, per_channel


def _segment_arg(text: str) -> Union[int, str]:
    if text == 'all':
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f'segment must be an integer or "all", got {text!r}') from None
    if value < 0:
        raise argparse.ArgumentTypeError(f'segment must be >= 0, got {value}')
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected an integer, got {text!r}') from None
    if value < 1:
        raise argparse.ArgumentTypeError(f'expected an integer >= 1, got {value}')
    return value


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument('--config', help='INI configuration file')
    common.add_argument('--input', dest='input_dir', help='directory holding the .mat/.csv corpus')
    common.add_argument('--out', dest='output_dir', help='directory receiving all outputs')
    common.add_argument('--jobs', type=_positive_int, help='worker threads (default: available CPUs)')
    common.add_argument('--channels', dest='channel_map', help='channel map as source=label[,source=label...]')
    common.add_argument('--reproducible', action='store_true', default=None,
                        help='omit timestamps so repeated runs give byte-identical outputs')
    common.add_argument('--progress', dest='show_progress', action='store_true', default=None,
                        help='show a progress bar while reading files')
    common.add_argument('-v', '--verbose', action='count', default=0, help='-v for info, -vv for debug logging')

    source = _ArgumentParser(add_help=False)
    source.add_argument('--features', dest='features_path', help='saved features.csv/.json to use instead of --input')

    detection = _ArgumentParser(add_help=False)
    detection.add_argument('--baseline', dest='baseline_count', type=_positive_int, help='files in the baseline')
    detection.add_argument('--kappa', type=parse_kappa, help='threshold factor X[,LABEL=X...]')
    detection.add_argument('--kappa-all', dest='all_channel_factor', type=float,
                           help='factor every channel must exceed for the all-channel tier')
    detection.add_argument('--consecutive', dest='consecutive_required', type=_positive_int,
                           help='files in a row a channel must stay above threshold')

    trend = _ArgumentParser(add_help=False)
    trend.add_argument('--order', help='ARIMA order p,d,q (default: selected by AIC)')
    trend.add_argument('--horizon', dest='forecast_horizon', type=_positive_int, help='values to forecast')

    parser = _ArgumentParser(prog='gearscope', description='Vibration condition monitoring for gearbox test rigs.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {CLIENT_VERSION}')
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    commands.add_parser('features', parents=[common], help='per-file mean/std/p2p of every channel')

    scalogram = commands.add_parser('scalogram', parents=[common], help='wavelet scalogram images of a file')
    scalogram.add_argument('--file', required=True, help='data file, absolute or relative to --input')
    scalogram.add_argument('--channel', help='channel label (default: every channel)')
    scalogram.add_argument('--segment', type=_segment_arg, default=0, help='segment index or "all" (default 0)')
    scalogram.add_argument('--signal-plot', action='store_true', help='also write an SVG plot of the signal')
    scalogram.add_argument('--dump-magnitudes', action='store_true', help='also write raw magnitudes as CSV')

    commands.add_parser('detect', parents=[common, source, detection], help='detection tiers and trend onsets')

    trend_cmd = commands.add_parser('trend', parents=[common, source, trend], help='ARIMA fit and forecast of p2p')
    trend_cmd.add_argument('--channel', default='all', help='channel label or "all" (default)')

    commands.add_parser('report', parents=[common, source, detection, trend], help='run everything, write report.md')

    synth = commands.add_parser('synth', parents=[common], help='write the synthetic test corpus')
    synth.add_argument('--files', type=_positive_int, default=SyntheticCorpusSpec().files, help='number of files')
    synth.add_argument('--seed', type=int, default=SyntheticCorpusSpec().seed, help='noise seed')
    synth.add_argument('--healthy', action='store_true', help='no spike and no growth')
    return parser


def _configure_logging(verbosity: int) -> Tuple[logging.Handler, int]:
    logger = logging.getLogger(PARENT_LOGGER_NAME)
    previous_level = logger.level
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
    logger.addHandler(handler)
    if verbosity >= 2:
        logger.setLevel(logging.DEBUG)
    elif verbosity == 1:
        logger.setLevel(logging.INFO)
    return handler, previous_level


def _overrides(args: argparse.Namespace) -> dict:
    overrides = {key: getattr(args, key, None) for key in (
        'input_dir', 'output_dir', 'jobs', 'channel_map', 'reproducible', 'show_progress', 'baseline_count',
        'all_channel_factor', 'consecutive_required', 'order', 'forecast_horizon')}
    if getattr(args, 'kappa', None) is not None:
        factor, per_channel = args.kappa
        overrides['threshold_factor'] = factor
        overrides['channel_factors'] = per_channel or None
    return overrides


def _run(args: argparse.Namespace) -> PipelineResult:
    if args.command == 'synth':
        spec = SyntheticCorpusSpec(files=args.files, seed=args.seed)
        if args.healthy:
            spec = spec._replace(spike_file=None, growth_start=None)
        return cmd_synth(args.output_dir or load_config(args.config).output_dir, spec)

    config = load_config(args.config, **_overrides(args))
    if args.command == 'features':
        return cmd_features(config)
    if args.command == 'scalogram':
        return cmd_scalogram(config, args.file, args.channel, args.segment, signal_plot=args.signal_plot,
                             dump_magnitudes=args.dump_magnitudes)
    if args.command == 'detect':
        return cmd_detect(config, args.features_path)
    if args.command == 'trend':
        return cmd_trend(config, args.channel, args.features_path)
    return cmd_report(config, args.features_path)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler, previous_level = _configure_logging(args.verbose)
    try:
        result = _run(args)
        for path in result.outputs:
            _logger.info(f'Wrote {path}')
    except USAGE_ERRORS as e:
        print(f'gearscope: error: {e}', file=sys.stderr)
        return int(ExitCode.USAGE)
    except GearscopeException as e:
        print(f'gearscope: error: {e}', file=sys.stderr)
        return int(ExitCode.DATA)
    finally:
        parent = logging.getLogger(PARENT_LOGGER_NAME)
        parent.removeHandler(handler)
        parent.setLevel(previous_level)

    for failure in result.failures:
        print(f'gearscope: skipped {failure.file_name}: {failure.error}', file=sys.stderr)
    return int(result.exit_code)


if __name__ == '__main__':
    sys.exit(main())
