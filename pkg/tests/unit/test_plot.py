import xml.etree.ElementTree as ET

import numpy as np
import pytest

from gearscope import envelope, nice_ticks, plot_corpus_p2p, plot_signal, plot_trend
from gearscope.exceptions import EmptyInput

NS = {'svg': 'http://www.w3.org/2000/svg'}


def _points(element):
    return [tuple(float(v) for v in pair.split(',')) for pair in element.get('points').split()]


class TestNiceTicks:

    @pytest.mark.parametrize('lo, hi, expected', [
        (0, 10, [0, 2, 4, 6, 8, 10]),
        (0, 29, [0, 10, 20]),
        (78.4, 683.3, [200, 400, 600]),
        (-1, 1, [-1, -0.5, 0, 0.5, 1]),
    ])
    def test_niceTicks_roundSteps(self, lo, hi, expected):
        assert nice_ticks(lo, hi) == pytest.approx(expected)

    def test_niceTicks_emptyRange_singleTick(self):
        assert nice_ticks(3.0, 3.0) == [3.0]


class TestEnvelope:

    def test_envelope_binsHoldMinAndMax(self):
        centres, lows, highs = envelope(np.arange(10.0), columns=5)
        np.testing.assert_array_equal(lows, [0, 2, 4, 6, 8])
        np.testing.assert_array_equal(highs, [1, 3, 5, 7, 9])
        np.testing.assert_array_equal(centres, [0.5, 2.5, 4.5, 6.5, 8.5])

    def test_envelope_shorterThanColumns_oneBinPerSample(self):
        centres, lows, highs = envelope([3.0, -1.0, 2.0], columns=1000)
        np.testing.assert_array_equal(lows, highs)
        assert len(centres) == 3

    def test_envelope_empty_raisesEmptyInput(self):
        with pytest.raises(EmptyInput):
            envelope([])


class TestPlotTrend:

    def setup_method(self):
        self.given = [80.0, 81.0, 79.5, 90.0, 120.0]
        self.forecast = [140.0, 150.0, 155.0]

    def test_plotTrend_givenAndDashedForecast(self, tmp_path):
        root = ET.parse(plot_trend(self.given, self.forecast, 'IP-1', tmp_path / 't.svg', reproducible=True)).getroot()
        given = root.find("svg:polyline[@class='given']", NS)
        forecast = root.find("svg:polyline[@class='forecast']", NS)
        assert len(_points(given)) == 5
        # forecast line starts at the last given point
        assert len(_points(forecast)) == 4
        assert _points(forecast)[0] == _points(given)[-1]
        assert forecast.get('stroke-dasharray')
        assert len(root.findall("svg:g[@class='forecast-points']/svg:circle", NS)) == 3
        assert 'IP-1' in root.find("svg:text[@class='title']", NS).text

    def test_plotTrend_higherValuePlotsHigher(self, tmp_path):
        root = ET.parse(plot_trend(self.given, self.forecast, 'IP-1', tmp_path / 't.svg')).getroot()
        ys = [y for _, y in _points(root.find("svg:polyline[@class='given']", NS))]
        assert ys[4] < ys[3] < ys[0]

    def test_plotTrend_reproducible_identicalBytes(self, tmp_path):
        a = plot_trend(self.given, self.forecast, 'IP-1', tmp_path / 'a.svg', reproducible=True).read_bytes()
        b = plot_trend(self.given, self.forecast, 'IP-1', tmp_path / 'b.svg', reproducible=True).read_bytes()
        assert a == b
        assert b'generated' not in a
        assert b'generated' in plot_trend(self.given, self.forecast, 'IP-1', tmp_path / 'c.svg').read_bytes()

    def test_plotTrend_noGivenValues_raisesEmptyInput(self, tmp_path):
        with pytest.raises(EmptyInput):
            plot_trend([], [1.0], 'IP-1', tmp_path / 't.svg')


class TestOtherPlots:

    def test_plotSignal_polygonOverEnvelope(self, tmp_path):
        signal = np.sin(np.arange(5000) / 10.0)
        root = ET.parse(plot_signal(signal, 'RF-2', 'Day021_x.csv', tmp_path / 's.svg', columns=200)).getroot()
        assert len(_points(root.find("svg:polygon[@class='signal']", NS))) == 400

    def test_plotCorpusP2p_oneLinePerChannel(self, tmp_path):
        series = {'IP-1': [1.0, 2.0, 3.0], 'RF-2': [2.0, 2.0, 2.5]}
        root = ET.parse(plot_corpus_p2p(series, tmp_path / 'c.svg', reproducible=True)).getroot()
        lines = root.findall("svg:polyline[@class='channel']", NS)
        assert [line.get('data-channel') for line in lines] == ['IP-1', 'RF-2']

    def test_plotCorpusP2p_noChannels_raisesEmptyInput(self, tmp_path):
        with pytest.raises(EmptyInput):
            plot_corpus_p2p({}, tmp_path / 'c.svg')
