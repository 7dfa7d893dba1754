import json

import numpy as np
import pytest

from subrad_sync._csvio import read_csv
from subrad_sync.analysis import FIG6_PARAMS
from subrad_sync.cli import (
    EXIT_DEGENERATE,
    EXIT_INVALID,
    EXIT_OK,
    FIG3_PARAMS,
    ConfigError,
    RunConfig,
    figure_config,
    main,
)
from subrad_sync.spectral import sync_constants

FIG3_CONFIG = {"gamma1": 1.1, "gamma2": 0.9, "gamma12": 0.95, "s12": 0.6, "delta": 1.0, "omega0": 10.0}


def _run(tmp_path, command, config=None, *extra, name="run"):
    out = tmp_path / name
    argv = [command, "--out", str(out), *extra]
    if config is not None:
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(config))
        argv += ["--config", str(path)]
    return main(argv), out


class TestSpectrum:
    def test_fig3(self, tmp_path):
        code, out = _run(tmp_path, "spectrum", FIG3_CONFIG)
        assert code == EXIT_OK
        _, columns, rows = read_csv(out / "spectrum.csv")
        assert columns == ["sector", "index", "re_lambda", "im_lambda"]
        a6 = [r for r in rows if r[0] == "a" and int(r[1]) == 6]
        # oracle: -1 + Re V from numpy complex arithmetic
        assert float(a6[0][2]) == pytest.approx(-0.16778257986254363, abs=1e-12)
        assert json.loads((out / "spectrum.json").read_text())

    def test_dicke_limit_is_degenerate(self, tmp_path, capsys):
        code, _ = _run(tmp_path, "spectrum", {"gamma12": 1.0})
        assert code == EXIT_DEGENERATE
        assert "a3=-1+0j ~ a4=-1+0j" in capsys.readouterr().err

    @pytest.mark.parametrize("config", [{"gamma12": 1.2}, {"bogus": 1}, {"dt": -1}])
    def test_invalid_input(self, tmp_path, config):
        assert _run(tmp_path, "spectrum", config)[0] == EXIT_INVALID

    def test_unreadable_config(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["spectrum", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_INVALID


class TestEvolve:
    def test_single_exponential_AR(self, tmp_path):
        config = dict(FIG3_CONFIG, initial_state="A_R", t_max=5.0, observables=["I"])
        code, out = _run(tmp_path, "evolve", config)
        assert code == EXIT_OK
        _, columns, rows = read_csv(out / "trajectory.csv")
        rows = np.array(rows, dtype=float)
        t, intensity = rows[:, 0], rows[:, columns.index("I")]
        slope = np.polyfit(t, np.log(intensity), 1)[0]
        kappa, _ = sync_constants(FIG3_PARAMS)
        assert slope == pytest.approx(-(1 - kappa), abs=1e-6)
        assert np.max(np.abs(rows[:, columns.index("I_check")] - intensity)) < 1e-6

    def test_ground_state_is_constant(self, tmp_path):
        code, out = _run(tmp_path, "evolve", dict(FIG3_CONFIG, initial_state="gg", t_max=1.0))
        assert code == EXIT_OK
        _, _, rows = read_csv(out / "trajectory.csv")
        rows = np.array(rows, dtype=float)
        assert np.all(rows[1:, 1:] == rows[0, 1:])

    def test_footer_and_header(self, tmp_path):
        _, out = _run(tmp_path, "evolve", dict(FIG3_CONFIG, t_max=0.5))
        text = (out / "trajectory.csv").read_text()
        assert text.startswith("#")
        assert "max_deviation" in text.splitlines()[-1]

    def test_explicit_matrix(self, tmp_path):
        rho = np.full((4, 4), 0.25).tolist()
        code, _ = _run(tmp_path, "evolve", dict(FIG3_CONFIG, initial_state=rho, t_max=0.5))
        assert code == EXIT_OK

    def test_degenerate_falls_back_to_rk4(self, tmp_path):
        code, out = _run(tmp_path, "evolve", {"gamma12": 1.0, "t_max": 0.5})
        assert code == EXIT_OK
        meta, _, _ = read_csv(out / "trajectory.csv")
        assert meta["provenance"] == "rk4"


class TestSweep:
    def test_single_point_matches_spectrum(self, tmp_path):
        config = dict(FIG3_CONFIG, grid={"delta": [1.0, 1.0, 1]}, diagnostics=["kappaS", "nuS"])
        code, out = _run(tmp_path, "sweep", config)
        assert code == EXIT_OK
        _, columns, rows = read_csv(out / "sweep.csv")
        assert columns == ["delta", "kappaS", "nuS"]
        kappa, nu = sync_constants(FIG3_PARAMS)
        assert [float(v) for v in rows[0]] == [1.0, kappa, nu]

    @pytest.mark.parametrize("grid", [{"delta": [0, 1]}, {"nope": [0, 1, 3]}, {"delta": [0, 1, 2.5]},
                                      {"delta": [0, 1, 1]}, {}])
    def test_malformed_grid(self, tmp_path, grid):
        assert _run(tmp_path, "sweep", {"grid": grid})[0] == EXIT_INVALID

    def test_missing_grid(self, tmp_path):
        assert _run(tmp_path, "sweep", {})[0] == EXIT_INVALID

    def test_fig6_consistency(self, tmp_path):
        config = dict(FIG6_PARAMS.as_dict(), grid={"gamma12": [0, 1, 21]}, diagnostics=["C_delayed", "R_I"])
        code, out = _run(tmp_path, "sweep", config)
        assert code == EXIT_OK
        assert _run(tmp_path, "figure", None, "--id", "fig6", name="fig")[0] == EXIT_OK
        assert (out / "sweep.csv").read_bytes() == (tmp_path / "fig" / "fig6.csv").read_bytes()

    def test_fig2_consistency(self, tmp_path):
        config = {"gamma12": 0.8, "grid": {"delta": [0, 2, 101], "s12": [0, 1, 101]}, "diagnostics": ["kappaS"]}
        _, out = _run(tmp_path, "sweep", config)
        _run(tmp_path, "figure", None, "--id", "fig2", name="fig")
        fig2 = (tmp_path / "fig" / "fig2.csv").read_bytes()
        assert (out / "sweep.csv").read_bytes() == fig2
        _, _, rows = read_csv(tmp_path / "fig" / "fig2.csv")
        rows = np.array(rows, dtype=float)
        threshold = rows[(rows[:, 1] == 0) & (rows[:, 0] >= 0.8)]
        assert len(threshold) and np.all(threshold[:, 2] == 0)


class TestFigures:
    def test_baked_in_parameters(self):
        assert figure_config("fig3").params == FIG3_PARAMS
        assert figure_config("fig6").params == FIG6_PARAMS
        assert figure_config("fig6").t_star == 5.0
        fig2 = figure_config("fig2")
        assert (fig2.params.gamma1, fig2.params.gamma2, fig2.params.gamma12) == (1.0, 1.0, 0.8)

    def test_fig5_curves(self, tmp_path):
        code, _ = _run(tmp_path, "figure", None, "--id", "fig5", name="fig")
        assert code == EXIT_OK
        _, columns, _ = read_csv(tmp_path / "fig" / "fig5.csv")
        assert columns == ["t", "S", "A", "S_R", "A_R", "S_delta", "A_delta", "ee", "IA"]

    @pytest.mark.parametrize("fig_id", ["fig3", "fig4a"])
    def test_reproducible_with_svg(self, tmp_path, fig_id):
        _run(tmp_path, "figure", None, "--id", fig_id, "--svg", name="one")
        _run(tmp_path, "figure", None, "--id", fig_id, "--svg", name="two")
        for suffix in (".csv", ".svg"):
            first = (tmp_path / "one" / f"{fig_id}{suffix}").read_bytes()
            assert first == (tmp_path / "two" / f"{fig_id}{suffix}").read_bytes()

    def test_unknown_id(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["figure", "--id", "fig9", "--out", str(tmp_path)])


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"gamma1": 1.0, "extra": 2})


def test_oracle_disagreement_exit_code(tmp_path, monkeypatch):
    import subrad_sync.cli as cli

    monkeypatch.setattr(cli, "ORACLE_TOL", 0.0)
    code, _ = _run(tmp_path, "evolve", dict(FIG3_CONFIG, t_max=0.5))
    assert code == cli.EXIT_ORACLE
