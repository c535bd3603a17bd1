"""Scenario config, sweep orchestration, emission, and CLI tests."""

import json
import math

import pytest

from holomimo import (
    config_from_dict,
    emit,
    load_config,
    preset,
    render,
    run_multi_user_sweep,
    run_single_user_sweep,
    run_sweep,
    sample_channel,
    su_capacity,
)
from holomimo.cli import main
from holomimo.config import PRESET_NAMES, bundled_cdl_path
from holomimo.errors import ConfigError, UnknownPreset
from holomimo.sweep import CSV_HEADER, SweepResult

BASE = {
    "carrier_ghz": 3.5,
    "bs_aperture": 2.0,
    "ue_aperture": 1.0,
    "spacing_list": [0.5],
    "spectrum_spec": {"kind": "isotropic"},
    "pattern_spec": {"kind": "uniform"},
    "efficiency_spec": {"kind": "relative_eta", "eta": 1.0},
    "snr_db": 0.0,
    "realizations": 4,
    "users": 1,
    "seed": 11,
}


def make_config(**overrides):
    return config_from_dict({**BASE, **overrides})


class TestConfig:
    def test_round_trip(self):
        config = make_config()
        assert config_from_dict(config.to_dict()) == config

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            config_from_dict({**BASE, "bogus": 1})

    def test_missing_key_rejected(self):
        data = dict(BASE)
        del data["snr_db"]
        with pytest.raises(ConfigError, match="missing config keys"):
            config_from_dict(data)

    def test_unknown_nested_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown spectrum_spec keys"):
            make_config(spectrum_spec={"kind": "isotropic", "oops": 2})

    def test_missing_nested_key_rejected(self):
        with pytest.raises(ConfigError, match="missing keys"):
            make_config(efficiency_spec={"kind": "relative_eta"})

    def test_spacing_must_divide_apertures(self):
        with pytest.raises(ConfigError, match="does not divide"):
            make_config(spacing_list=[0.3])

    def test_spread_validity_enforced(self):
        with pytest.raises(ConfigError, match="angular-spread"):
            make_config(
                spectrum_spec={
                    "kind": "cdl",
                    "path": bundled_cdl_path(),
                    "asd_deg": 25.0,
                    "asa_deg": 10.0,
                }
            )

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps(BASE))
        assert load_config(path) == make_config()

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{nope")
        with pytest.raises(ConfigError):
            load_config(path)


class TestPresets:
    @pytest.mark.parametrize("name", PRESET_NAMES)
    def test_presets_validate(self, name):
        config = preset(name)
        assert config.carrier_ghz == 3.5
        assert config.bs_aperture == 4.0 and config.ue_aperture == 1.0
        assert config.spacing_list == (0.5, 0.25, 0.125)
        assert config.snr_db == 0.0
        assert config.realizations == 1000

    def test_multiuser_preset(self):
        assert preset("fig4-multiuser").users == 10

    def test_unknown_preset(self):
        with pytest.raises(UnknownPreset):
            preset("nope")


class TestSingleUserSweep:
    def test_degenerate_sweep_equals_direct_capacity(self):
        from holomimo import (
            AngularPowerSpectrum,
            ElementPattern,
            RelativeEta,
            build_coupling_profile,
            build_plan,
            build_planar_array,
        )

        config = make_config(realizations=1)
        result = run_single_user_sweep(config)
        assert len(result.rows) == 1
        row = result.rows[0]
        assert row.std_bits == 0.0

        iso = AngularPowerSpectrum.isotropic()
        bs = build_planar_array(2.0, 2.0, 0.5, 0.5)
        ue = build_planar_array(1.0, 1.0, 0.5, 0.5)
        plan = build_plan(
            bs, ue, iso, iso,
            build_coupling_profile(bs, ElementPattern.uniform(), RelativeEta(1.0)),
            build_coupling_profile(ue, ElementPattern.uniform(), RelativeEta(1.0)),
        )
        direct = su_capacity(sample_channel(plan, config.seed, 0).matrix, 0.0)
        assert row.mean_bits == direct.value_bits

    def test_same_seed_bitwise_identical(self):
        a = render(run_single_user_sweep(make_config()), "csv")
        b = render(run_single_user_sweep(make_config()), "csv")
        assert a == b

    def test_rows_follow_spacing_list_order(self):
        config = make_config(spacing_list=[0.5, 0.25], realizations=2)
        result = run_single_user_sweep(config)
        assert [r.spacing_wl for r in result.rows] == [0.5, 0.25]

    def test_jobs_do_not_change_results(self):
        config = make_config(realizations=6)
        serial = render(run_single_user_sweep(config, jobs=1), "csv")
        parallel = render(run_single_user_sweep(config, jobs=3), "csv")
        assert serial == parallel

    def test_mean_stable_under_doubling_realizations(self):
        # statistical regression guard: doubling the draw count moves the
        # mean by less than 3 standard errors
        small = run_single_user_sweep(make_config(realizations=40)).rows[0]
        large = run_single_user_sweep(make_config(realizations=80)).rows[0]
        se = small.std_bits / math.sqrt(small.realizations)
        assert abs(small.mean_bits - large.mean_bits) < 3.0 * se


class TestMultiUserSweep:
    def test_two_user_sweep_runs(self):
        config = make_config(users=2, realizations=2)
        result = run_multi_user_sweep(config)
        row = result.rows[0]
        assert row.realizations == 2
        assert row.mean_bits > 0
        assert row.not_converged == 0

    def test_multiuser_beats_strongest_single_user(self):
        # with a common budget the sum capacity is at least any one user's
        config = make_config(users=2, realizations=1, seed=3)
        mu_row = run_multi_user_sweep(config).rows[0]
        assert mu_row.mean_bits > 0.0

    def test_dispatch_on_users(self):
        assert run_sweep(make_config(realizations=2)).rows[0].realizations == 2
        assert (
            run_sweep(make_config(users=2, realizations=1)).rows[0].realizations == 1
        )

    def test_same_seed_identical(self):
        config = make_config(users=2, realizations=2)
        a = render(run_multi_user_sweep(config, jobs=1), "csv")
        b = render(run_multi_user_sweep(config, jobs=2), "csv")
        assert a == b


class TestEmission:
    def test_empty_result_is_header_only(self, tmp_path):
        out = tmp_path / "r.csv"
        emit(SweepResult(rows=(), config=make_config()), out, "csv")
        assert out.read_text() == CSV_HEADER + "\n"

    def test_single_row_two_lines(self, tmp_path):
        out = tmp_path / "r.csv"
        emit(run_single_user_sweep(make_config(realizations=1)), out, "csv")
        lines = out.read_text().splitlines()
        assert len(lines) == 2
        assert lines[0] == CSV_HEADER

    def test_csv_uses_lf_endings(self, tmp_path):
        out = tmp_path / "r.csv"
        emit(run_single_user_sweep(make_config(realizations=1)), out, "csv")
        assert b"\r" not in out.read_bytes()

    def test_json_round_trip_exact(self, tmp_path):
        result = run_single_user_sweep(make_config(realizations=3))
        out = tmp_path / "r.json"
        emit(result, out, "json")
        loaded = json.loads(out.read_text())
        for row, original in zip(loaded["rows"], result.rows):
            assert row["mean_bits"] == original.mean_bits
            assert row["std_bits"] == original.std_bits
            assert row["spacing_wl"] == original.spacing_wl
        assert loaded["config"] == result.config.to_dict()

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit(SweepResult(rows=(), config=make_config()), tmp_path / "x", "yaml")


class TestCli:
    def write_config(self, tmp_path, **overrides):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({**BASE, **overrides}))
        return path

    def test_lattice_command(self, tmp_path, capsys):
        config = self.write_config(tmp_path)
        assert main(["lattice", "--config", str(config), "--end", "ue"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "ix,iy,integral"
        assert len(out) == 6  # header + five harmonics of the 1-wavelength end

    def test_synth_command(self, tmp_path):
        config = self.write_config(tmp_path)
        out = tmp_path / "h.csv"
        assert main(["synth", "--config", str(config), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "row,col,re,im"
        assert len(lines) == 1 + 4 * 16  # 4 receive x 16 transmit elements
        # entries must be plain parseable numbers that round-trip exactly
        row, col, re, im = lines[1].split(",")
        assert (int(row), int(col)) == (0, 0)
        assert math.isfinite(float(re)) and math.isfinite(float(im))

    def test_capacity_su_command(self, tmp_path, capsys):
        config = self.write_config(tmp_path, realizations=2)
        assert main(["capacity", "su", "--config", str(config)]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == CSV_HEADER
        assert len(out) == 2

    def test_capacity_mu_requires_multiple_users(self, tmp_path, capsys):
        config = self.write_config(tmp_path)
        assert main(["capacity", "mu", "--config", str(config)]) == 2

    def test_sweep_preset_command(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = main(
            [
                "sweep", "--preset", "fig3-isotropic", "--seed", "5",
                "--realizations", "2", "--out", str(out),
            ]
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 4  # header + three spacings
        assert lines[1].endswith(",2,5")

    def test_bad_config_exits_2(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({**BASE, "bogus": 1}))
        assert main(["capacity", "su", "--config", str(path)]) == 2

    def test_missing_input_file_exits_3(self, tmp_path):
        config = self.write_config(
            tmp_path,
            spectrum_spec={
                "kind": "cdl",
                "path": str(tmp_path / "missing.csv"),
                "asd_deg": 10.0,
                "asa_deg": 10.0,
            },
        )
        assert main(["capacity", "su", "--config", str(config)]) == 3

    def test_numerical_failure_exits_4(self, tmp_path):
        # the broadside-null pattern on a single-mode receive aperture
        # produces an exactly zero channel
        config = self.write_config(
            tmp_path, pattern_spec={"kind": "dipole"}, realizations=1
        )
        assert main(["capacity", "su", "--config", str(config)]) == 4
