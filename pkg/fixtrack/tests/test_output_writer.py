# fixtrack/tests/test_output_writer.py

import math

import pandas as pd
import pytest

from fixtrack.core.integrator import integrate
from fixtrack.core.metrics import compute_summary_metrics
from fixtrack.core.services.output_writer import OutputWriter, emit_csv

CASE_HEADER = 't,x1,x2,x3,u1,u2,ustar1,ustar2,err,err_sq,phi_minus_gamma,grad_norm,cost'


@pytest.fixture
def short_trajectory(case_problem, fc_tracking, short_integrator, case_x0, case_u0):
    return integrate(case_problem, fc_tracking, short_integrator, case_x0, case_u0,
                     metadata={'scenario': 'case_study'}, label='short')


@pytest.fixture
def writer():
    return OutputWriter()


class TestTrajectoryCsv:
    def test_header_and_rows(self, temp_dir, short_trajectory):
        path = emit_csv(short_trajectory, temp_dir / 'run.csv')
        lines = path.read_text(encoding='utf-8').split('\n')
        assert lines[0] == CASE_HEADER
        assert lines[-1] == ''
        # floor(t_end / sample_dt) + 1 samples
        assert len(lines) - 2 == 6

    def test_round_trip_precision(self, temp_dir, short_trajectory):
        path = emit_csv(short_trajectory, temp_dir / 'run.csv')
        frame = pd.read_csv(path, float_precision='round_trip')
        pd.testing.assert_frame_equal(frame, short_trajectory.to_dataframe())

    def test_byte_identical_reruns(self, temp_dir, case_problem, fc_tracking, short_integrator,
                                   case_x0, case_u0):
        first = integrate(case_problem, fc_tracking, short_integrator, case_x0, case_u0)
        second = integrate(case_problem, fc_tracking, short_integrator, case_x0, case_u0)
        a = emit_csv(first, temp_dir / 'a.csv').read_bytes()
        b = emit_csv(second, temp_dir / 'b.csv').read_bytes()
        assert a == b
        assert b'\r' not in a

    def test_gradient_columns(self, temp_dir, writer, short_trajectory):
        path = writer.emit_csv(short_trajectory, temp_dir / 'grad.csv', include_gradient=True)
        header = path.read_text(encoding='utf-8').split('\n')[0]
        assert header == CASE_HEADER + ',grad1,grad2'

    def test_creates_parent_directories(self, temp_dir, short_trajectory):
        path = emit_csv(short_trajectory, temp_dir / 'nested' / 'deeper' / 'run.csv')
        assert path.exists()

    def test_unwritable_path(self, temp_dir, short_trajectory):
        (temp_dir / 'taken').mkdir()
        with pytest.raises(OSError) as info:
            emit_csv(short_trajectory, temp_dir / 'taken')
        assert 'cannot write' in str(info.value)


class TestSummaryFile:
    def test_key_value_lines(self, temp_dir, writer, short_trajectory):
        metrics = compute_summary_metrics(short_trajectory, tau=10.0)
        path = writer.write_summary(metrics, temp_dir / 'summary.txt', short_trajectory.metadata)
        lines = path.read_text(encoding='utf-8').splitlines()
        pairs = dict(line.split(' = ', 1) for line in lines)
        assert lines[0] == 'label = short'
        assert lines[1] == 'scenario = case_study'
        assert pairs['law'] == 'FC'
        assert pairs['err_at_tau'] == 'nan'
        assert pairs['feasible'] == 'True'
        assert float(pairs['final_cost']) == metrics.final_cost

    def test_without_metadata(self, temp_dir, writer, short_trajectory):
        metrics = compute_summary_metrics(short_trajectory, tau=0.3)
        path = writer.write_summary(metrics, temp_dir / 'summary.txt')
        assert path.read_text(encoding='utf-8').startswith('tau = 0.3\n')


class TestTables:
    def test_csv_table(self, temp_dir, writer):
        frame = pd.DataFrame({'factor': [0.5, 1.0], 'status': ['ok', 'skipped']})
        path = writer.write_table(frame, temp_dir / 'sweep.csv')
        assert path.read_text(encoding='utf-8') == 'factor,status\n0.5,ok\n1,skipped\n'

    def test_excel_table(self, temp_dir, writer):
        frame = pd.DataFrame({'tau': [0.5, 3.0], 'err_at_tau': [1e-9, math.nan]})
        path = writer.write_table(frame, temp_dir / 'sweep.xlsx')
        loaded = pd.read_excel(path, engine='openpyxl')
        pd.testing.assert_frame_equal(loaded, frame)


class TestGnuplotScript:
    def test_script_contents(self, temp_dir, writer, short_trajectory):
        csv_path = temp_dir / 'short.csv'
        script = writer.write_gnuplot_script(csv_path, temp_dir / 'short.gp',
                                             short_trajectory.column_names(), tau=3.0, title='short')
        text = script.read_text(encoding='utf-8')
        assert "set output 'short.png'" in text
        assert "'short.csv' using 1:9 with lines" in text
        assert "'short.csv' using 1:12 with lines" in text
        assert 'set arrow from 3.0, graph 0' in text
        assert text.startswith('# short\n')

    def test_no_tau_marker(self, temp_dir, writer):
        script = writer.write_gnuplot_script('a.csv', temp_dir / 'a.gp', ['t', 'err'])
        assert 'set arrow' not in script.read_text(encoding='utf-8')
