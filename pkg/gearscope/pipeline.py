#
# Copyright (c) 2023 Gearscope Developers. All rights reserved.
#
import json
import logging
import sys
from datetime import datetime
from multiprocessing.pool import ThreadPool
from pathlib import Path
from typing import IO, List, NamedTuple, Optional, Tuple, Union

from tqdm.autonotebook import tqdm

from gearscope.config import PipelineConfig
from gearscope.core.exceptions import (CorruptFile, DidNotConverge, EmptyInput, GearscopeException,
                                       InconsistentChannels, MissingVariable, SegmentOutOfRange)
from gearscope.core.utils import format_float
from gearscope.core.utils.constants import ExitCode
from gearscope.cwt import build_filterbank, scalogram, scalogram_file_name, write_magnitudes_csv, write_pgm
from gearscope.detect import DetectionReport, detection_report
from gearscope.features import (FeatureRow, FileSummary, channel_series, read_feature_table, segment, summarize,
                                table_from_summaries, top_p2p, write_feature_csv, write_feature_json)
from gearscope.ingest import discover_corpus, read_recording
from gearscope.plot import plot_corpus_p2p, plot_signal, plot_trend
from gearscope.synthetic import SyntheticCorpusSpec, write_corpus
from gearscope.trend import ArimaModel, Forecast, auto_fit, fit, forecast, write_forecast_csv, write_model_json

__all__ = [
    "PipelineResult", "FileFailure", "extract_features", "cmd_features", "cmd_scalogram", "cmd_detect",
    "cmd_trend", "cmd_report", "cmd_synth"
]

_logger = logging.getLogger(__name__)

FEATURES_CSV = 'features.csv'
FEATURES_JSON = 'features.json'
DETECTION_JSON = 'detection.json'
REPORT_MD = 'report.md'
CORPUS_SVG = 'corpus_p2p.svg'

TIER_DESCRIPTIONS = (
    ('t1_onset', 'Consistent detection on at least one channel'),
    ('t2_onset', 'Confirmed detection on at least two channels'),
    ('t3_onset', 'Clear indication on all channels'),
    ('t4_onset', 'Consistent increasing trend started at'),
    ('t5_onset', 'Consistent accelerating trend started at'),
)


class FileFailure(NamedTuple):
    file_name: str
    error: GearscopeException


class PipelineResult(NamedTuple):
    exit_code: ExitCode
    outputs: List[Path]
    failures: List[FileFailure] = []


class _Extraction(NamedTuple):
    rows: List[FeatureRow]
    failures: List[FileFailure]


def _summarize_file(args) -> Tuple[Path, Optional[FileSummary], Optional[GearscopeException]]:
    path, channel_map = args
    try:
        return path, summarize(read_recording(path, channel_map)), None
    except GearscopeException as e:
        return path, None, e.add_context(file=path.name)
    except (OSError, UnicodeDecodeError) as e:
        return path, None, CorruptFile(f'cannot read file: {e}', file=path.name, operation='read_recording')


def extract_features(config: PipelineConfig) -> _Extraction:
    """Read every corpus file and compute its features; files that fail are reported, not fatal."""
    if config.input_dir is None:
        raise EmptyInput('no input directory configured', operation='features')
    input_dir = Path(config.input_dir)
    if not input_dir.is_dir():
        raise EmptyInput(f'input directory {input_dir} does not exist', operation='features')
    paths, malformed = discover_corpus(input_dir)
    failures = [FileFailure(path.name, error) for path, error in malformed]
    if not paths:
        raise EmptyInput(f'no parseable .mat or .csv files in {input_dir}', operation='features')

    summaries = []
    pbar = tqdm(total=len(paths), disable=not config.show_progress, desc='Extracted files')
    with ThreadPool(min(config.jobs, len(paths))) as pool:
        for path, summary, error in pool.imap(_summarize_file, [(p, config.channel_map) for p in paths]):
            if error is not None:
                _logger.warning(f'Skipping {path.name}: {error}')
                failures.append(FileFailure(path.name, error))
            else:
                summaries.append(summary)
            pbar.update(1)
    pbar.close()

    if not summaries:
        raise failures[0].error
    return _Extraction(rows=table_from_summaries(summaries), failures=failures)


def _exit_code(failures: List[FileFailure]) -> ExitCode:
    return ExitCode.PARTIAL if failures else ExitCode.SUCCESS


def _output_dir(config: PipelineConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_top_p2p(rows: List[FeatureRow], out: IO[str], n: int = 3):
    for channel, (first, ranked) in top_p2p(rows, n).items():
        print(f'{channel}', file=out)
        print(f'  first file  {first.file_name}  {format_float(first.p2p)}', file=out)
        for rank, row in enumerate(ranked, start=1):
            print(f'  #{rank:<10d} {row.file_name}  {format_float(row.p2p)}', file=out)


def cmd_features(config: PipelineConfig, out: Optional[IO[str]] = None) -> PipelineResult:
    """Write features.csv and features.json and print each channel's highest-p2p files."""
    extraction = extract_features(config)
    out_dir = _output_dir(config)
    outputs = [write_feature_csv(extraction.rows, out_dir / FEATURES_CSV),
               write_feature_json(extraction.rows, out_dir / FEATURES_JSON)]
    _print_top_p2p(extraction.rows, out if out is not None else sys.stdout)
    _logger.info(f'Extracted features of {len(extraction.rows)} (file, channel) pairs')
    return PipelineResult(_exit_code(extraction.failures), outputs, extraction.failures)


def _resolve_file(config: PipelineConfig, file: Union[str, Path]) -> Path:
    path = Path(file)
    if not path.is_absolute() and not path.exists() and config.input_dir is not None:
        path = Path(config.input_dir) / path
    if not path.is_file():
        raise EmptyInput(f'data file {file} not found', file=Path(file).name)
    return path


def cmd_scalogram(config: PipelineConfig, file: Union[str, Path], channel: Optional[str] = None,
                  segment_index: Union[int, str] = 0, signal_plot: bool = False,
                  dump_magnitudes: bool = False) -> PipelineResult:
    """Write one PGM scalogram per selected segment of one or every channel of a file."""
    path = _resolve_file(config, file)
    recording = read_recording(path, config.channel_map)
    if channel is not None and channel not in recording.labels:
        raise MissingVariable(f'channel {channel!r} not in {recording.labels}', file=path.name, channel=channel,
                              operation='scalogram')
    labels = [channel] if channel is not None else recording.labels
    bank = build_filterbank(config.filterbank)
    out_dir = _output_dir(config)

    outputs = []
    for label in labels:
        try:
            segments = segment(recording.channels[label], config.segmentation)
            if segment_index == 'all':
                selected = range(len(segments))
            elif not 0 <= int(segment_index) < len(segments):
                raise SegmentOutOfRange(f'segment {segment_index} out of range, valid segments are '
                                        f'0..{len(segments) - 1}', operation='scalogram')
            else:
                selected = [int(segment_index)]
            for k in selected:
                result = scalogram(segments[k], bank, config.image_size)
                outputs.append(write_pgm(result.image, out_dir / scalogram_file_name(path.name, label, k)))
                if dump_magnitudes:
                    outputs.append(write_magnitudes_csv(
                        result.magnitudes, out_dir / scalogram_file_name(path.name, label, k, suffix='.csv')))
            if signal_plot:
                outputs.append(plot_signal(recording.channels[label], label, path.name,
                                           out_dir / f'{path.stem}_{label}_signal.svg',
                                           reproducible=config.reproducible))
        except GearscopeException as e:
            raise e.add_context(file=path.name, channel=label)
    _logger.info(f'Wrote {len(outputs)} files for {path.name}')
    return PipelineResult(ExitCode.SUCCESS, outputs)


def _feature_rows(config: PipelineConfig, features_path: Optional[Union[str, Path]]) -> _Extraction:
    if features_path is not None:
        return _Extraction(rows=read_feature_table(features_path), failures=[])
    return extract_features(config)


def _write_detection(report: DetectionReport, path: Path) -> Path:
    path.write_text(json.dumps(report.to_json_dict(), indent=2) + '\n', encoding='utf-8')
    return path


def cmd_detect(config: PipelineConfig, features_path: Optional[Union[str, Path]] = None) -> PipelineResult:
    """Write detection.json with per-file tiers and the five onsets."""
    extraction = _feature_rows(config, features_path)
    report = detection_report(extraction.rows, config.detection)
    path = _write_detection(report, _output_dir(config) / DETECTION_JSON)
    return PipelineResult(_exit_code(extraction.failures), [path], extraction.failures)


def _trend_channel(config: PipelineConfig, label: str, series: List[float],
                   out_dir: Path) -> Tuple[ArimaModel, Forecast, List[Path], bool]:
    converged = True
    if config.order is not None:
        try:
            model = fit(series, config.order)
        except DidNotConverge as e:
            _logger.warning(f'{label}: {e}; using the best model reached')
            model, converged = e.best_model, False
    else:
        model = auto_fit(series, jobs=config.jobs)
    fc = forecast(model, series, config.forecast_horizon)
    outputs = [
        write_model_json(model, out_dir / f'trend_{label}_model.json'),
        write_forecast_csv(series, fc, out_dir / f'trend_{label}_forecast.csv'),
        plot_trend(series, fc.values, label, out_dir / f'trend_{label}.svg', reproducible=config.reproducible),
    ]
    return model, fc, outputs, converged


def _trend_all(config: PipelineConfig, rows: List[FeatureRow], channel: Optional[str]):
    grouped = channel_series(rows)
    if channel not in (None, 'all') and channel not in grouped:
        raise InconsistentChannels(f'channel {channel!r} not in the feature table, available: {list(grouped)}',
                                   channel=channel, operation='trend')
    labels = list(grouped) if channel in (None, 'all') else [channel]
    out_dir = _output_dir(config)
    results, outputs, all_converged = {}, [], True
    for label in labels:
        series = [r.p2p for r in grouped[label]]
        try:
            model, fc, written, converged = _trend_channel(config, label, series, out_dir)
        except GearscopeException as e:
            raise e.add_context(channel=label)
        results[label] = (model, fc)
        outputs.extend(written)
        all_converged = all_converged and converged
    return results, outputs, all_converged


def cmd_trend(config: PipelineConfig, channel: Optional[str] = 'all',
              features_path: Optional[Union[str, Path]] = None) -> PipelineResult:
    """Fit and forecast the p2p series of one channel, or of every channel with ``'all'``."""
    extraction = _feature_rows(config, features_path)
    _, outputs, converged = _trend_all(config, extraction.rows, channel)
    exit_code = _exit_code(extraction.failures)
    if not converged:
        exit_code = ExitCode.PARTIAL
    return PipelineResult(exit_code, outputs, extraction.failures)


def _onset_cell(onset) -> Tuple[str, str, str]:
    if onset is None:
        return 'not reached', '', ''
    return onset.file_name, str(onset.ordinal), ', '.join(onset.channels)


def render_report(rows: List[FeatureRow], report: DetectionReport, trends: dict,
                  failures: List[FileFailure], reproducible: bool = False) -> str:
    files = sorted({(r.file_ordinal, r.file_name) for r in rows})
    channels = list(channel_series(rows))
    lines = ['# Gearscope report', '']
    if not reproducible:
        lines += [f'Generated {datetime.now().isoformat(timespec="seconds")}', '']
    lines += [f'{len(files)} files, channels {", ".join(channels)}.', '']
    if failures:
        lines += [f'{len(failures)} files could not be processed:', '']
        lines += [f'- {f.file_name}: {f.error}' for f in failures] + ['']

    lines += ['## Detection summary', '', '| Result | File | Ordinal | Channels |', '|---|---|---|---|']
    for key, description in TIER_DESCRIPTIONS:
        name, ordinal, where = _onset_cell(report.onsets.get(key))
        lines.append(f'| {description} | {name} | {ordinal} | {where} |')
    lines.append('')

    lines += ['## Highest peak-to-peak values', '']
    for channel, (first, ranked) in top_p2p(rows, 3).items():
        lines += [f'### {channel}', '', '| Rank | File | p2p |', '|---|---|---|',
                  f'| first file | {first.file_name} | {format_float(first.p2p)} |']
        lines += [f'| {rank} | {row.file_name} | {format_float(row.p2p)} |'
                  for rank, row in enumerate(ranked, start=1)]
        lines.append('')

    if trends:
        lines += ['## Trend', '', '| Channel | Order | AIC | Forecast |', '|---|---|---|---|']
        for channel, (model, fc) in trends.items():
            values = ', '.join(format_float(v) for v in fc.values)
            lines.append(f'| {channel} | {model.order} | {format_float(model.aic)} | {values} |')
        lines.append('')
    return '\n'.join(lines)


def cmd_report(config: PipelineConfig, features_path: Optional[Union[str, Path]] = None,
               out: Optional[IO[str]] = None) -> PipelineResult:
    """Run features, detection and trend for every channel, then write report.md and the corpus plot."""
    out_dir = _output_dir(config)
    extraction = _feature_rows(config, features_path)
    outputs = []
    if features_path is None:
        outputs += [write_feature_csv(extraction.rows, out_dir / FEATURES_CSV),
                    write_feature_json(extraction.rows, out_dir / FEATURES_JSON)]
        _print_top_p2p(extraction.rows, out if out is not None else sys.stdout)

    report = detection_report(extraction.rows, config.detection)
    outputs.append(_write_detection(report, out_dir / DETECTION_JSON))
    trends, written, converged = _trend_all(config, extraction.rows, 'all')
    outputs += written

    series = {channel: [r.p2p for r in rows] for channel, rows in channel_series(extraction.rows).items()}
    outputs.append(plot_corpus_p2p(series, out_dir / CORPUS_SVG, reproducible=config.reproducible))
    text = render_report(extraction.rows, report, trends, extraction.failures, config.reproducible)
    report_path = out_dir / REPORT_MD
    report_path.write_text(text, encoding='utf-8')
    outputs.append(report_path)

    exit_code = _exit_code(extraction.failures)
    if not converged:
        exit_code = ExitCode.PARTIAL
    return PipelineResult(exit_code, outputs, extraction.failures)


def cmd_synth(out_dir: Union[str, Path], spec: SyntheticCorpusSpec = SyntheticCorpusSpec()) -> PipelineResult:
    return PipelineResult(ExitCode.SUCCESS, write_corpus(out_dir, spec))
