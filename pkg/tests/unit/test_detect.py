import json
from datetime import datetime, timedelta

import numpy as np
import pytest

import gearscope.detect
from gearscope import (DetectionConfig, FeatureRow, SyntheticCorpusSpec, Tier, Trend, baseline, channel_trend,
                       classify, detection_report, target_p2p, trend_verdict)
from gearscope.exceptions import InconsistentChannels, InsufficientBaseline, InvalidDetectionConfig, TooShort


def _table(p2p, labels=None):
    """Feature rows from a (files, channels) array of p2p values."""
    p2p = np.asarray(p2p, dtype=np.float64)
    labels = labels or [f'ch{c}' for c in range(p2p.shape[1])]
    start = datetime(2021, 12, 8, 9)
    return [FeatureRow(f'file{t:03d}.csv', t, label, start + timedelta(hours=4 * t), 0.0, 1.0, float(p2p[t, c]))
            for t in range(p2p.shape[0]) for c, label in enumerate(labels)]


class TestBaseline:

    def test_baseline_medianIgnoresLaterFiles(self):
        rows = _table([[80.0], [81.0], [82.0], [500.0]])
        median, spread = baseline(rows, 3)
        assert median == 81.0
        assert spread == pytest.approx(1.0)

    def test_baseline_tooFewFiles_raisesInsufficientBaseline(self):
        with pytest.raises(InsufficientBaseline):
            baseline(_table([[80.0], [81.0]]), 3)

    def test_baseline_laterValuesDoNotMoveThreshold(self):
        p2p = np.full((20, 2), 100.0)
        quiet = classify(_table(p2p), DetectionConfig())
        p2p[10:, 0] = 10_000.0
        loud = classify(_table(p2p), DetectionConfig())
        assert all(r.tier is Tier.HEALTHY for r in quiet)
        assert [r.per_channel_flag['ch0'] for r in loud] == [False] * 10 + [True] * 10


class TestClassify:

    def test_classify_constantCorpus_allHealthy(self):
        results = classify(_table(np.full((20, 3), 100.0)))
        assert len(results) == 20
        assert all(r.tier is Tier.HEALTHY and r.trend is Trend.NONE for r in results)

    def test_classify_twoChannelJump_T2WithoutT3(self):
        p2p = np.full((15, 3), 100.0)
        p2p[7:, :2] = 200.0
        results = classify(_table(p2p))
        assert [r.tier for r in results[:7]] == [Tier.HEALTHY] * 7
        assert all(r.tier is Tier.T2_TWO_CHANNEL for r in results[7:])
        assert results[7].per_channel_flag == {'ch0': True, 'ch1': True, 'ch2': False}

    def test_classify_singleChannel_T1(self):
        p2p = np.full((12, 2), 100.0)
        p2p[11, 1] = 160.0
        assert classify(_table(p2p))[11].tier is Tier.T1_SINGLE_CHANNEL

    def test_classify_allChannelsFourfold_T3AndEveryChannelFlagged(self):
        p2p = np.full((14, 3), 100.0)
        p2p[10:] = 500.0
        results = classify(_table(p2p))
        assert [r.tier for r in results[10:]] == [Tier.T3_ALL_CHANNEL_CLEAR] * 4
        assert all(all(r.per_channel_flag.values()) for r in results if r.tier is Tier.T3_ALL_CHANNEL_CLEAR)

    def test_classify_singleChannelCorpus_neverT3(self):
        p2p = np.full((12, 1), 100.0)
        p2p[10:] = 1000.0
        assert {r.tier for r in classify(_table(p2p))} == {Tier.HEALTHY, Tier.T1_SINGLE_CHANNEL}

    def test_classify_consecutiveRequired_delaysFlag(self):
        p2p = np.full((16, 2), 100.0)
        p2p[10, 0] = 200.0
        p2p[12:, 0] = 200.0
        results = classify(_table(p2p), DetectionConfig(consecutive_required=3))
        assert [r.per_channel_flag['ch0'] for r in results[10:]] == [False, False, False, False, True, True]

    def test_classify_perChannelFactor_overridesGlobal(self):
        p2p = np.full((12, 2), 100.0)
        p2p[11] = 140.0
        results = classify(_table(p2p), DetectionConfig(threshold_factor=1.5, channel_factors={'ch1': 1.2}))
        assert results[11].per_channel_flag == {'ch0': False, 'ch1': True}

    def test_classify_shuffledRows_sameResult(self):
        rng = np.random.default_rng(4)
        rows = _table(rng.uniform(80, 400, size=(25, 4)))
        shuffled = [rows[i] for i in rng.permutation(len(rows))]
        assert classify(shuffled) == classify(rows)

    @pytest.mark.parametrize('seed', range(10))
    def test_classify_higherKappa_neverRaisesTier(self, seed):
        rows = _table(np.random.default_rng(seed).uniform(80, 600, size=(25, 4)))
        levels = [[r.tier.level for r in classify(rows, DetectionConfig(threshold_factor=kappa))]
                  for kappa in (1.2, 1.5, 2.0, 3.0)]
        for lower, higher in zip(levels, levels[1:]):
            assert all(h <= low for low, h in zip(lower, higher))

    def test_classify_fewerFilesThanBaseline_raisesInsufficientBaseline(self):
        with pytest.raises(InsufficientBaseline):
            classify(_table(np.full((5, 2), 100.0)))

    def test_classify_channelMissingFile_raisesInconsistentChannels(self):
        rows = _table(np.full((12, 2), 100.0))
        with pytest.raises(InconsistentChannels):
            classify(rows[:-1])

    @pytest.mark.parametrize('cfg', [
        DetectionConfig(baseline_count=1),
        DetectionConfig(threshold_factor=0.9),
        DetectionConfig(threshold_factor=4.0, all_channel_factor=4.0),
        DetectionConfig(channel_factors={'ch0': 5.0}),
        DetectionConfig(consecutive_required=0),
        DetectionConfig(rolling_window=0),
    ])
    def test_classify_invalidConfig_raisesInvalidDetectionConfig(self, cfg):
        with pytest.raises(InvalidDetectionConfig):
            classify(_table(np.full((20, 2), 100.0)), cfg)


class TestTrendVerdict:

    def setup_method(self):
        self.t = np.arange(40)

    def test_channelTrend_constant_noVerdict(self):
        assert channel_trend(np.full(30, 100.0)) == (None, None)

    def test_channelTrend_linearRamp_increasingNotAccelerating(self):
        x = 100.0 + 30.0 * np.maximum(0, self.t - 19)
        assert channel_trend(x) == (19, None)

    def test_channelTrend_geometricGrowth_increasingAndAccelerating(self):
        t = self.t[:30]
        x = np.where(t < 20, 100.0, 100.0 * 1.5 ** (t - 19.0))
        assert channel_trend(x) == (19, 19)

    def test_channelTrend_fallingTail_noVerdict(self):
        x = 100.0 + 30.0 * np.maximum(0, self.t - 19)
        x[-3:] = [500.0, 400.0, 300.0]
        assert channel_trend(x) == (None, None)

    def test_channelTrend_riseBelowThreshold_noVerdict(self):
        x = 100.0 + 0.5 * np.maximum(0, self.t - 19)
        assert channel_trend(x) == (None, None)

    def test_channelTrend_tooShort_raisesTooShort(self):
        with pytest.raises(TooShort):
            channel_trend(np.full(12, 100.0))

    def test_trendVerdict_earliestChannelWins(self):
        x = 100.0 + 30.0 * np.maximum(0, self.t - 19)
        y = 100.0 + 30.0 * np.maximum(0, self.t - 24)
        assert trend_verdict({'a': y, 'b': x, 'c': np.full(40, 100.0)}) == (19, None)

    @pytest.mark.parametrize('seed', range(5))
    def test_trendVerdict_acceleratingOnsetNotBeforeIncreasing(self, seed):
        rng = np.random.default_rng(seed)
        t = np.arange(30)
        x = 100.0 * rng.uniform(0.95, 1.05, size=30) * np.where(t < 18, 1.0, 1.6 ** (t - 17.0))
        t4, t5 = channel_trend(x)
        assert t5 is None or (t4 is not None and t5 >= t4)


class TestDetectionReport:

    def setup_method(self):
        spec = SyntheticCorpusSpec()
        self.rows = _table(target_p2p(spec), list(spec.channels))

    def test_detectionReport_syntheticCorpus_onsets(self):
        report = detection_report(self.rows)
        onsets = {key: (onset.ordinal if onset else None) for key, onset in report.onsets.items()}
        assert onsets == {'t1_onset': 7, 't2_onset': 7, 't3_onset': 24, 't4_onset': 20, 't5_onset': 20}
        assert report.onsets['t2_onset'].channels == ('IP-1', 'RF-2')
        assert report.onsets['t3_onset'].channels == ('IP-1', 'RF-2', 'RL-3', 'RR-4')
        assert report.results[8].tier is Tier.HEALTHY

    def test_detectionReport_healthyCorpus_noOnsets(self):
        spec = SyntheticCorpusSpec.healthy()
        report = detection_report(_table(target_p2p(spec), list(spec.channels)))
        assert all(onset is None for onset in report.onsets.values())

    def test_detectionReport_trendsComputedOncePerChannel(self, mocker):
        spy = mocker.spy(gearscope.detect, 'channel_trend')
        report = detection_report(self.rows)
        assert spy.call_count == 4
        assert report.onsets['t4_onset'].ordinal == 20

    def test_toJsonDict_serializable(self):
        document = json.loads(json.dumps(detection_report(self.rows).to_json_dict()))
        assert len(document['files']) == 30
        assert document['files'][7]['tier'] == 'T2_TwoChannel'
        assert document['files'][7]['flags'] == {'IP-1': True, 'RF-2': True, 'RL-3': False, 'RR-4': False}
        assert document['summary']['t3_onset']['ordinal'] == 24
        assert document['summary']['t1_onset']['file_name'] == 'file007.csv'
        assert document['baselines']['IP-1']['kappa'] == 1.5
        assert document['config']['baseline_count'] == 10
