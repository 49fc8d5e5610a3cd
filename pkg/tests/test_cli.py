import math
from pathlib import Path

import pytest
from scipy.special import erfcx

from mlrelax import approx, create_app
from mlrelax.cli.options import resolve_tolerance, workers
from mlrelax.cli.output import format_value, render_csv
from mlrelax.errors import InvalidParameterError, NoConvergenceError

from conftest import read_csv


def value_line(output):
    """The value,err_est,method line printed by eval."""
    lines = [line for line in output.splitlines() if line.count(',') == 2]
    return lines[-1].split(',')


def test_eval_series(runner):
    """Test eval at alpha=1/2, t=1 against erfcx(1)."""
    result = runner.invoke(args=['eval', '--alpha', '0.5', '--t', '1'])
    assert result.exit_code == 0
    value, err_est, method = value_line(result.output)
    assert float(value) == pytest.approx(float(erfcx(1.0)), rel=1e-10)
    assert float(err_est) <= 1e-10
    assert method == 'series'


def test_eval_exponential_origin(runner):
    """Test alpha=1 at t=0 reports the exponential path."""
    result = runner.invoke(args=['eval', '--alpha', '1', '--t', '0'])
    assert result.exit_code == 0
    value, _, method = value_line(result.output)
    assert value == '1'
    assert method == 'exponential'


@pytest.mark.parametrize('method', ['spectral', 'series'])
def test_eval_forced_method(runner, method):
    """Test forced methods agree with the closed form."""
    result = runner.invoke(args=['eval', '--alpha', '0.5', '--t', '0.25', '--method', method])
    assert result.exit_code == 0
    value, _, used = value_line(result.output)
    assert float(value) == pytest.approx(float(erfcx(0.5)), rel=1e-9)
    assert used == method


def test_eval_asymptotic_outside_regime(runner):
    """Test the asymptotic series refuses small t with exit code 2."""
    result = runner.invoke(args=['eval', '--alpha', '0.5', '--t', '1', '--method', 'asymptotic'])
    assert result.exit_code == 2
    assert 'DivergenceError' in result.output


def test_eval_invalid_alpha(runner):
    """Test alpha outside (0, 1] is a domain failure."""
    result = runner.invoke(args=['eval', '--alpha', '1.5', '--t', '1'])
    assert result.exit_code == 2


def test_eval_missing_option(runner):
    """Test click usage errors also exit with 2."""
    result = runner.invoke(args=['eval', '--alpha', '0.5'])
    assert result.exit_code == 2


def test_spectrum_at_unit_frequency(runner, tmp_path):
    """Test K_{1/2}(1) = 1/(2 pi)."""
    out = tmp_path / 'spectrum.csv'
    result = runner.invoke(args=['spectrum', '--alpha', '0.5', '--grid-lo', '0.5', '--grid-hi', '1.5',
                                 '--grid-n', '3', '--out', str(out)])
    assert result.exit_code == 0
    header, rows = read_csv(out)
    assert header == ['abscissa', 'density']
    assert [r[0] for r in rows] == [0.5, 1.0, 1.5]
    assert rows[1][1] == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-14)


def test_spectrum_time_domain(runner, tmp_path):
    """Test H and K coincide as functions at alpha=1/2."""
    freq, time = tmp_path / 'k.csv', tmp_path / 'h.csv'
    args = ['spectrum', '--alpha', '0.5', '--grid-n', '11']
    assert runner.invoke(args=args + ['--out', str(freq)]).exit_code == 0
    assert runner.invoke(args=args + ['--domain', 'time', '--out', str(time)]).exit_code == 0
    for k_row, h_row in zip(read_csv(freq)[1], read_csv(time)[1]):
        assert h_row[1] == pytest.approx(k_row[1], rel=1e-12)


def test_spectrum_rejects_exponential(runner):
    """Test alpha=1 has no spectral density."""
    result = runner.invoke(args=['spectrum', '--alpha', '1'])
    assert result.exit_code == 2


def test_spectrum_deterministic(runner):
    """Test repeated runs print identical bytes."""
    args = ['spectrum', '--alpha', '0.3', '--grid-n', '25']
    first = runner.invoke(args=args)
    second = runner.invoke(args=args)
    assert first.exit_code == 0
    assert first.output == second.output
    assert first.output.startswith('abscissa,density\n')


def test_figures_relaxation_and_pade(runner, tmp_path):
    """Test the relaxation curves and one Pade figure."""
    result = runner.invoke(args=['figures', '--which', '2', '--which', '8', '--grid-n', '41',
                                 '--out', str(tmp_path)])
    assert result.exit_code == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ['fig02.csv', 'fig08.csv']

    header, rows = read_csv(tmp_path / 'fig02.csv')
    assert header == ['alpha', 't', 'e']
    assert len(rows) == 5 * 151
    for alpha, t, e in rows:
        assert 0.0 < e <= 1.0
        if t == 0.0:
            assert e == 1.0
        if alpha == 1.0:
            assert e == pytest.approx(math.exp(-t), rel=1e-14)

    header, rows = read_csv(tmp_path / 'fig08.csv')
    assert header == ['t', 'e', 'f', 'g', 'relerr_f', 'relerr_g']
    assert len(rows) == 41
    assert rows[0][0] == pytest.approx(1e-5)
    assert rows[-1][0] == pytest.approx(1e5)
    for _, e, f, g, relerr_f, relerr_g in rows:
        assert g <= e * (1.0 + 1e-9) and e <= f * (1.0 + 1e-9)
        assert relerr_f >= -1e-9 and relerr_g >= -1e-9


def test_figures_stretched_power_trends(runner, tmp_path):
    """Test e0 degrades and einf improves as t grows."""
    result = runner.invoke(args=['figures', '--which', '3', '--grid-n', '31', '--out', str(tmp_path)])
    assert result.exit_code == 0
    header, rows = read_csv(tmp_path / 'fig03.csv')
    assert header == ['t', 'e', 'e0', 'einf', 'relerr_e0', 'relerr_einf']
    assert rows[0][4] < 1e-2 < rows[-1][4]
    assert rows[-1][5] < rows[0][5]


@pytest.mark.slow
@pytest.mark.parametrize('which, alpha', [(3, 0.25), (4, 0.5), (5, 0.75), (6, 0.9), (7, 0.99)])
def test_figures_asymptotic_equivalence(runner, tmp_path, which, alpha):
    """Test both surrogates converge at their ends and the power law crosses e below t=1."""
    result = runner.invoke(args=['figures', '--which', str(which), '--out', str(tmp_path)])
    assert result.exit_code == 0
    _, rows = read_csv(tmp_path / f'fig{which:02d}.csv')
    assert len(rows) == 1001
    assert rows[0][2] == pytest.approx(math.exp(-1e-5 ** alpha / math.gamma(1.0 + alpha)), rel=1e-13)

    # last two decades toward t=1e-5 and toward t=1e5
    small = [r[4] for r in rows[:201]]
    large = [r[5] for r in rows[-201:]]
    assert all(b > a for a, b in zip(small, small[1:]))
    assert all(b < a for a, b in zip(large, large[1:]))

    if which >= 5:
        gaps = [einf - e for t, e, _, einf, _, _ in rows if t < 1.0]
        assert any(a > 0.0 > b for a, b in zip(gaps, gaps[1:]))


def test_figures_spectrum(runner, tmp_path):
    """Test the spectrum figure holds the four orders."""
    result = runner.invoke(args=['figures', '--which', '1', '--out', str(tmp_path)])
    assert result.exit_code == 0
    header, rows = read_csv(tmp_path / 'fig01.csv')
    assert header == ['alpha', 'r', 'K']
    assert sorted({r[0] for r in rows}) == [0.25, 0.5, 0.75, 0.9]
    assert all(r[2] >= 0.0 for r in rows)


def test_figures_unknown_id(runner, tmp_path):
    """Test figure ids outside 1..12 are usage errors."""
    result = runner.invoke(args=['figures', '--which', '13', '--out', str(tmp_path)])
    assert result.exit_code == 2


def test_bounds_scan_holds(runner, tmp_path):
    """Test g <= e <= f at alpha=1/2 exits 0."""
    out = tmp_path / 'bounds.csv'
    result = runner.invoke(args=['bounds-scan', '--alpha', '0.5', '--grid-n', '101', '--out', str(out)])
    assert result.exit_code == 0
    assert 'alpha=0.5: ok' in result.output
    header, rows = read_csv(out)
    assert header == ['alpha', 'points', 'violations_lower', 'violations_upper', 'worst_signed_gap', 'skipped']
    assert rows == [[0.5, 101.0, 0.0, 0.0, rows[0][4], 0.0]]
    assert rows[0][4] <= 1e-12


def test_bounds_scan_rejects_origin(runner):
    """Test a grid reaching t=0 is refused."""
    result = runner.invoke(args=['bounds-scan', '--alpha', '0.5', '--grid-lo', '0', '--grid-hi', '10',
                                 '--grid-n', '11', '--grid-linear'])
    assert result.exit_code == 2


def test_bounds_scan_unchecked_fails(runner, monkeypatch):
    """Test a scan where no point could be evaluated exits 1."""
    def fail(*args, **kwargs):
        raise NoConvergenceError('no value')

    monkeypatch.setattr(approx, 'eval_auto', fail)
    result = runner.invoke(args=['bounds-scan', '--alpha', '0.5', '--grid-n', '5'])
    assert result.exit_code == 1
    assert 'alpha=0.5: UNCHECKED' in result.output


def test_solve_exponential(runner, tmp_path):
    """Test the solver output at alpha=1."""
    out = tmp_path / 'solve.csv'
    result = runner.invoke(args=['solve', '--alpha', '1', '--horizon', '1', '--out', str(out)])
    assert result.exit_code == 0
    assert 'scheme=caputo_gl' in result.output
    header, rows = read_csv(out)
    assert header == ['t', 'u_numeric', 'u_analytic', 'abs_err']
    assert rows[-1][0] == pytest.approx(1.0)
    for t, u, exact, err in rows:
        assert exact == pytest.approx(math.exp(-t), rel=1e-14)
        assert err == pytest.approx(abs(u - exact), abs=1e-16)
        assert err <= 0.01


def test_solve_richardson(runner):
    """Test --richardson prints observed orders."""
    result = runner.invoke(args=['solve', '--alpha', '0.5', '--h', '0.02', '--horizon', '1',
                                 '--scheme', 'rl_gl', '--richardson', '--out', '-'])
    assert result.exit_code == 0
    assert result.output.count('order=') == 3
    assert 'order=nan' in result.output


def test_solve_rejects_coarse_step(runner):
    """Test h > horizon/10 exits 2."""
    result = runner.invoke(args=['solve', '--alpha', '0.5', '--h', '0.5', '--horizon', '1'])
    assert result.exit_code == 2


def test_validity(runner, tmp_path):
    """Test the small-time Pade interval starts at the grid edge."""
    out = tmp_path / 'validity.csv'
    result = runner.invoke(args=['validity', '--alpha', '0.25', '--approximant', 'pade_small',
                                 '--grid-n', '21', '--out', str(out)])
    assert result.exit_code == 0
    lines = Path(out).read_text(encoding='utf-8').splitlines()
    assert lines[0] == 'approximant,t_lo,t_hi'
    name, lo, hi = lines[1].split(',')
    assert name == 'pade_small'
    assert float(lo) == pytest.approx(1e-5)
    assert float(hi) > float(lo)


def test_validity_rejects_exponential(runner):
    """Test alpha=1 has no approximant validity scan."""
    result = runner.invoke(args=['validity', '--alpha', '1'])
    assert result.exit_code == 2


def test_laplace(runner, tmp_path):
    """Test the Laplace transform matches at s=1."""
    out = tmp_path / 'laplace.csv'
    result = runner.invoke(args=['laplace', '--alpha', '0.5', '--s', '1', '--out', str(out)])
    assert result.exit_code == 0
    header, rows = read_csv(out)
    assert header == ['alpha', 's', 'lhs', 'rhs', 'rel_gap']
    alpha, s, lhs, rhs, gap = rows[0]
    assert rhs == pytest.approx(0.5, rel=1e-15)
    assert gap < 1e-6


def test_crossings(runner, tmp_path):
    """Test the power law crosses e_{3/4} before t=1."""
    out = tmp_path / 'crossings.csv'
    result = runner.invoke(args=['crossings', '--alpha', '0.75', '--grid-n', '101', '--out', str(out)])
    assert result.exit_code == 0
    header, rows = read_csv(out)
    assert header == ['alpha', 't']
    assert any(0.01 < t < 1.0 for _, t in rows)


def test_environment_tolerance(monkeypatch):
    """Test MLRELAX_TOL sets the default and a flag overrides it."""
    monkeypatch.setenv('MLRELAX_TOL', '1e-6')
    monkeypatch.setenv('MLRELAX_WORKERS', '3')
    app = create_app('testing')
    assert app.config['TOL_REL'] == 1e-6
    with app.app_context():
        assert resolve_tolerance().rel == 1e-6
        assert resolve_tolerance(1e-8).rel == 1e-8
        assert resolve_tolerance(tol_abs=1e-12).abs == 1e-12
        assert workers() == 3


def test_environment_bad_value(monkeypatch):
    """Test unparsable environment values fail at startup."""
    monkeypatch.setenv('MLRELAX_WORKERS', 'many')
    with pytest.raises(ValueError):
        create_app('testing')


def test_environment_bad_tolerance(monkeypatch):
    """Test a non-positive tolerance is refused at startup."""
    monkeypatch.setenv('MLRELAX_TOL', '0')
    with pytest.raises(InvalidParameterError):
        create_app('testing')


def test_unknown_configuration():
    """Test configuration names are checked."""
    with pytest.raises(InvalidParameterError):
        create_app('staging')


def test_default_configuration(app):
    """Test testing defaults."""
    assert app.config['TESTING']
    assert app.config['TOL_REL'] == 1e-10
    assert app.config['SERIES_MAX_X'] == 1.0
    assert app.config['ASYMPTOTIC_MIN_X'] == 15.0


def test_render_csv(app):
    """Test rows are sorted and written with 17 significant digits."""
    text = render_csv(['a', 'b'], [(2.0, 0.1), (1.0, 1.0 / 3.0)])
    assert text == 'a,b\n1,0.33333333333333331\n2,0.10000000000000001\n'
    assert format_value('x') == 'x'
    assert format_value(7) == '7'
