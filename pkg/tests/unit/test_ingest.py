from datetime import datetime

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gearscope import (ChannelMap, ChannelSource, Recording, corpus_sort_key, discover_corpus, parse_filename,
                       read_csv, read_mat)
from gearscope.core.matfile import parse_header, read_variables
from gearscope.exceptions import (CorruptFile, InvalidChannelMap, MalformedName, MissingVariable, NonNumericCell,
                                  RaggedRows, UnsupportedMatFeature)
from tests.unit.matfixtures import MX_CHAR, compressed, header, mat_file, matrix

NAME = 'Day022_Hunting_SSA_20211209_124241.mat'


class TestFileNames:

    def test_parseFilename_challengeName_dayAndTimestamp(self):
        assert parse_filename(NAME) == (22, datetime(2021, 12, 9, 12, 42, 41))

    def test_parseFilename_tagWithUnderscores_lastTwoFieldsAreDateTime(self):
        assert parse_filename('Day3_a_b_c_20220101_000001.csv') == (3, datetime(2022, 1, 1, 0, 0, 1))

    @pytest.mark.parametrize('name', [
        'Hunting_SSA_20211209_124241.mat',
        'Day022_Hunting_SSA_2021129_124241.mat',
        'Day022_Hunting_SSA_20211309_124241.mat',
        'Day022_Hunting_SSA_20211209_124241.txt',
    ])
    def test_parseFilename_malformed_raisesMalformedName(self, name):
        with pytest.raises(MalformedName) as e:
            parse_filename(name)
        assert e.value.file == name
        assert e.value.operation == 'parse_filename'

    def test_discoverCorpus_mixedNames_sortedByDayThenTime(self, tmp_path):
        for name in ['Day022_x_20211209_124241.csv', 'Day021_x_20211208_235959.csv',
                     'Day022_x_20211209_080000.csv', 'notes.csv', 'readme.txt']:
            (tmp_path / name).write_text('1,2\n')
        good, bad = discover_corpus(tmp_path)
        assert [p.name for p in good] == ['Day021_x_20211208_235959.csv', 'Day022_x_20211209_080000.csv',
                                          'Day022_x_20211209_124241.csv']
        assert [(p.name, e.operation) for p, e in bad] == [('notes.csv', 'parse_filename')]

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(st.integers(min_value=0, max_value=999),
                              st.datetimes(min_value=datetime(2000, 1, 1), max_value=datetime(2099, 12, 31))),
                    min_size=1, max_size=30))
    def test_corpusSortKey_challengeNames_matchesLexicographicOrder(self, entries):
        names = {f'Day{day:03d}_Hunting_SSA_{ts:%Y%m%d_%H%M%S}.mat' for day, ts in entries}
        assert sorted(names, key=corpus_sort_key) == sorted(names)


class TestChannelMap:

    def test_parse_columnIndexNameAndMatrixColumn(self):
        assert ChannelSource.parse('3') == ChannelSource(3)
        assert ChannelSource.parse('ch1') == ChannelSource('ch1')
        assert ChannelSource.parse('data:2') == ChannelSource('data', 2)

    def test_fromSpec_orderPreserved(self):
        channel_map = ChannelMap.from_spec('b=RF-2, a=IP-1')
        assert channel_map.labels == ['RF-2', 'IP-1']

    def test_duplicateLabel_raisesInvalidChannelMap(self):
        with pytest.raises(InvalidChannelMap):
            ChannelMap.from_spec('a=IP-1,b=IP-1')

    def test_duplicateSource_raisesInvalidChannelMap(self):
        with pytest.raises(InvalidChannelMap):
            ChannelMap.from_spec('a=IP-1,a=RF-2')

    def test_default_fourColumns(self):
        assert ChannelMap.default().labels == ['IP-1', 'RF-2', 'RL-3', 'RR-4']


class TestRecording:

    def test_raggedChannels_raisesRaggedRows(self):
        with pytest.raises(RaggedRows):
            Recording(NAME, 22, datetime(2021, 12, 9), {'a': [1.0, 2.0], 'b': [1.0]})

    def test_channels_readOnly(self):
        recording = Recording(NAME, 22, datetime(2021, 12, 9), {'a': [1.0, 2.0]})
        with pytest.raises(ValueError):
            recording.channels['a'][0] = 5.0


class TestReadMat:

    def setup_method(self):
        self.channel_map = ChannelMap.from_mapping({'ch1': 'IP-1', 'ch2': 'RF-2'})
        self.ch1 = np.linspace(-1.0, 1.0, 64)
        self.ch2 = np.arange(64, dtype=np.float64) * 0.25

    def _write(self, tmp_path, content: bytes, name=NAME):
        path = tmp_path / name
        path.write_bytes(content)
        return path

    @pytest.mark.parametrize('byte_order', ['<', '>'])
    @pytest.mark.parametrize('compress', [False, True])
    def test_readMat_bothEndiannessesAndCompression_sameValues(self, tmp_path, byte_order, compress):
        path = self._write(tmp_path, mat_file({'ch1': self.ch1, 'ch2': self.ch2}, byte_order, compress))
        recording = read_mat(path, self.channel_map)
        assert recording.labels == ['IP-1', 'RF-2']
        assert recording.day == 22
        np.testing.assert_array_equal(recording.channels['IP-1'], self.ch1)
        np.testing.assert_array_equal(recording.channels['RF-2'], self.ch2)

    def test_readMat_longNameNotSmallElement(self, tmp_path):
        channel_map = ChannelMap.from_mapping({'vibration_ip1': 'IP-1'})
        path = self._write(tmp_path, mat_file({'vibration_ip1': self.ch1}, small_name=False))
        np.testing.assert_array_equal(read_mat(path, channel_map).channels['IP-1'], self.ch1)

    def test_readMat_doubleClassStoredAsInt32_convertedToFloat(self, tmp_path):
        values = np.arange(-5, 5, dtype=np.float64)
        path = self._write(tmp_path, mat_file({'ch1': values}, store_as_int32=True))
        recording = read_mat(path, ChannelMap.from_mapping({'ch1': 'IP-1'}))
        np.testing.assert_array_equal(recording.channels['IP-1'], values)

    def test_readMat_matrixColumn_selectsColumn(self, tmp_path):
        data = np.column_stack([self.ch1, self.ch2])
        path = self._write(tmp_path, header() + matrix('data', data))
        recording = read_mat(path, ChannelMap.from_spec('data:0=IP-1,data:1=RF-2'))
        np.testing.assert_array_equal(recording.channels['RF-2'], self.ch2)

    def test_readMat_unindexedMatrix_raisesUnsupported(self, tmp_path):
        path = self._write(tmp_path, header() + matrix('data', np.ones((4, 3))))
        with pytest.raises(UnsupportedMatFeature):
            read_mat(path, ChannelMap.from_mapping({'data': 'IP-1'}))

    def test_readMat_missingVariable_namesFileChannelOperation(self, tmp_path):
        path = self._write(tmp_path, mat_file({'ch1': self.ch1}))
        with pytest.raises(MissingVariable) as e:
            read_mat(path, self.channel_map)
        assert (e.value.file, e.value.channel, e.value.operation) == (NAME, 'RF-2', 'read_mat')
        assert NAME in str(e.value) and 'RF-2' in str(e.value) and 'read_mat' in str(e.value)

    def test_readMat_charVariable_raisesUnsupported(self, tmp_path):
        path = self._write(tmp_path, header() + matrix('ch1', [[72, 105]], mx_class=MX_CHAR))
        with pytest.raises(UnsupportedMatFeature):
            read_mat(path, ChannelMap.from_mapping({'ch1': 'IP-1'}))

    def test_readMat_complexVariable_raisesUnsupported(self, tmp_path):
        path = self._write(tmp_path, header() + matrix('ch1', self.ch1.reshape(-1, 1), complex_flag=True))
        with pytest.raises(UnsupportedMatFeature):
            read_mat(path, ChannelMap.from_mapping({'ch1': 'IP-1'}))

    def test_readMat_hdf5_raisesUnsupported(self, tmp_path):
        content = header(text='MATLAB 7.3 MAT-file', version=0x0200)
        path = self._write(tmp_path, content + b'\x00' * 512)
        with pytest.raises(UnsupportedMatFeature):
            read_mat(path, self.channel_map)

    def test_readMat_truncated_raisesCorruptFile(self, tmp_path):
        content = mat_file({'ch1': self.ch1, 'ch2': self.ch2})
        path = self._write(tmp_path, content[:len(content) - 100])
        with pytest.raises(CorruptFile):
            read_mat(path, self.channel_map)

    def test_readMat_shortHeader_raisesCorruptFile(self, tmp_path):
        path = self._write(tmp_path, b'MATLAB 5.0')
        with pytest.raises(CorruptFile):
            read_mat(path, self.channel_map)

    def test_readMat_badDeflateStream_raisesCorruptFile(self, tmp_path):
        element = compressed(matrix('ch1', self.ch1.reshape(-1, 1)))
        broken = element[:8] + b'\xff' * (len(element) - 8)
        path = self._write(tmp_path, header() + broken)
        with pytest.raises(CorruptFile):
            read_mat(path, self.channel_map)

    def test_readMat_nonFiniteSamples_raisesCorruptFile(self, tmp_path):
        ch1 = self.ch1.copy()
        ch1[5] = np.nan
        path = self._write(tmp_path, mat_file({'ch1': ch1, 'ch2': self.ch2}))
        with pytest.raises(CorruptFile) as e:
            read_mat(path, self.channel_map)
        assert (e.value.file, e.value.channel) == (NAME, 'IP-1')

    def test_readVariables_bigEndianHeader(self):
        content = mat_file({'ch1': self.ch1}, byte_order='>')
        assert parse_header(content).byte_order == '>'
        assert read_variables(content)['ch1'].shape == (64, 1)


class TestReadCsv:

    def setup_method(self):
        self.channel_map = ChannelMap.default()

    def test_readCsv_headerRow_detectedAndSkipped(self, tmp_path):
        path = tmp_path / 'Day001_x_20220101_000000.csv'
        path.write_text('IP-1,RF-2,RL-3,RR-4\n1,2,3,4\n5,6,7,8\n')
        recording = read_csv(path, self.channel_map)
        np.testing.assert_array_equal(recording.channels['RR-4'], [4.0, 8.0])

    def test_readCsv_noHeader_columnIndices(self, tmp_path):
        path = tmp_path / 'Day001_x_20220101_000000.csv'
        path.write_text('1,2,3,4\n5,6,7,8\n\n')
        recording = read_csv(path, self.channel_map)
        assert recording.sample_count == 2
        np.testing.assert_array_equal(recording.channels['IP-1'], [1.0, 5.0])

    def test_readCsv_columnNames(self, tmp_path):
        path = tmp_path / 'Day001_x_20220101_000000.csv'
        path.write_text('time,acc\n0,0.5\n1,-0.5\n')
        recording = read_csv(path, ChannelMap.from_spec('acc=IP-1'))
        np.testing.assert_array_equal(recording.channels['IP-1'], [0.5, -0.5])

    def test_readCsv_nonNumericCell_reportsPhysicalRowAndColumn(self, tmp_path):
        path = tmp_path / 'Day001_x_20220101_000000.csv'
        path.write_text('IP-1,RF-2,RL-3,RR-4\n1,2,3,4\n5,6,oops,8\n')
        with pytest.raises(NonNumericCell) as e:
            read_csv(path, self.channel_map)
        assert (e.value.row, e.value.column, e.value.value) == (3, 3, 'oops')
        assert e.value.file == path.name

    @pytest.mark.parametrize('cell', ['nan', 'inf', '-Infinity'])
    def test_readCsv_nonFiniteCell_raisesNonNumericCell(self, tmp_path, cell):
        path = tmp_path / 'Day001_x_20220101_000000.csv'
        path.write_text(f'IP-1,RF-2,RL-3,RR-4\n1,2,3,4\n{cell},6,7,8\n')
        with pytest.raises(NonNumericCell) as e:
            read_csv(path, self.channel_map)
        assert (e.value.row, e.value.column, e.value.value) == (3, 1, cell)

    def test_readCsv_emptyFile_raisesRaggedRows(self, tmp_path):
        path = tmp_path / 'Day001_x_20220101_000000.csv'
        path.write_text('')
        with pytest.raises(RaggedRows):
            read_csv(path, self.channel_map)

    def test_readCsv_raggedRow_raisesRaggedRows(self, tmp_path):
        path = tmp_path / 'Day001_x_20220101_000000.csv'
        path.write_text('1,2,3,4\n5,6,7\n')
        with pytest.raises(RaggedRows):
            read_csv(path, self.channel_map)

    def test_readCsv_missingColumn_raisesMissingVariable(self, tmp_path):
        path = tmp_path / 'Day001_x_20220101_000000.csv'
        path.write_text('1,2\n3,4\n')
        with pytest.raises(MissingVariable) as e:
            read_csv(path, self.channel_map)
        assert e.value.channel == 'RL-3'
