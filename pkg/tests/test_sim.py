import math

import numpy as np
import pytest
import yaml

from zakfd.pulses import PulseShape
from zakfd.sim import (
    CURVE_COLUMNS,
    SCHEMES,
    TRIAL_COLUMNS,
    SimConfig,
    SweepResult,
    TrialResult,
    _Trial,
    aggregate,
    bench_complexity,
    emit_results,
    fading_study,
    read_trials,
    run_sweep,
    wilson_interval,
)
from zakfd.zak import GridParams

SMALL = {"grid": {"M": 11, "N": 13}, "sweep": {"snr_db": [10, 20], "trials": 2, "seed": 3}}


def small(**changes):
    return SimConfig.from_dict(SMALL).replace(**changes)


def trial(errs, total, snr=10.0, pdr=math.nan, turbo=0, nmse=math.nan, t=0):
    return TrialResult("f", 1, t, snr, pdr, turbo, errs, total, nmse, 0)


class TestConfig:
    def test_defaults_are_the_desk_setup(self):
        cfg = SimConfig()
        assert (cfg.grid.M, cfg.grid.N, cfg.grid.nu_p) == (31, 37, 30e3)
        assert cfg.channel.nu_max == 815.0 and cfg.pulse.kind == "rrc"
        assert cfg.half_bandwidth == 3
        assert (cfg.equalizer.eps, cfg.equalizer.max_iter) == (1e-6, 250)

    def test_yaml_round_trip(self, tmp_path):
        cfg = small(scheme="zak-dd", estimation__mode="spread-pilot",
                    estimation__pdr_db=(0.0, 10.0), estimation__n_turbo=(0, 2))
        path = tmp_path / "c.yaml"
        path.write_text(yaml.safe_dump(cfg.to_dict()))
        back = SimConfig.load(path)
        assert back == cfg
        assert back.fingerprint == cfg.fingerprint

    def test_scalar_lists_are_accepted(self):
        cfg = SimConfig.from_dict({"sweep": {"snr_db": 15}, "estimation": {"n_turbo": 5}})
        assert cfg.sweep.snr_db == (15.0,)
        assert cfg.estimation.n_turbo == (5,)

    def test_fingerprint_tracks_content(self):
        assert small().fingerprint == small().fingerprint
        assert small().fingerprint != small(sweep__seed=4).fingerprint
        assert len(small().fingerprint) == 16

    @pytest.mark.parametrize("data", [
        {"colour": 1},
        {"grid": {"M": 11, "Q": 3}},
        {"grid": []},
        {"scheme": "mc-otfs"},
        {"pulse": {"kind": "hann"}},
        {"channel": {"model": "eva"}},
        {"channel": {"nu_max": -1.0}},
        {"constellation": 8},
        {"cp_len": 31},
        {"equalizer": {"b": -1}},
        {"equalizer": {"b": "wide"}},
        {"equalizer": {"max_iter": 0}},
        {"estimation": {"mode": "point"}},
        {"estimation": {"mode": "spread-pilot", "root": 31}},
        {"estimation": {"mode": "spread-pilot", "pdr_db": []}},
        {"estimation": {"mode": "spread-pilot", "n_turbo": [-1]}},
        {"scheme": "cp-ofdm-genie", "estimation": {"mode": "spread-pilot"}},
        {"sweep": {"trials": 0}},
        {"sweep": {"snr_db": []}},
        {"sweep": {"snr_db": ["loud"]}},
        {"output": {"formats": ["parquet"]}},
        {"grid": {"M": 0}},
    ])
    def test_rejects_invalid(self, data):
        with pytest.raises(ValueError):
            SimConfig.from_dict(data)

    def test_points(self):
        assert small().points == [(10.0, pytest.approx(math.nan, nan_ok=True)),
                                   (20.0, pytest.approx(math.nan, nan_ok=True))]
        cfg = small(estimation__mode="spread-pilot", estimation__pdr_db=(0.0, 5.0))
        assert cfg.points == [(10.0, 0.0), (10.0, 5.0), (20.0, 0.0), (20.0, 5.0)]


class TestRunSweep:
    @pytest.mark.parametrize("scheme", SCHEMES)
    def test_every_scheme_runs(self, scheme):
        res = run_sweep(small(scheme=scheme))
        assert len(res.trials) == 4
        for r in res.trials:
            assert r.bits_total > 0 and 0 <= r.bit_errors <= r.bits_total

    @pytest.mark.parametrize("scheme", ["zak-fd-cgm", "zak-dd"])
    def test_noiseless_perfect_csi_is_error_free(self, scheme):
        res = run_sweep(small(scheme=scheme, sweep__snr_db=(200.0, 250.0),
                              equalizer__eps=1e-10, equalizer__max_iter=2000))
        assert all(r.bit_errors == 0 for r in res.trials)

    def test_deterministic(self):
        a, b = run_sweep(small()), run_sweep(small())
        strip = [(r.bit_errors, r.cgm_iterations, r.snr_db) for r in a.trials]
        assert strip == [(r.bit_errors, r.cgm_iterations, r.snr_db) for r in b.trials]

    def test_schemes_share_channel_draws(self):
        a, b = _Trial(small(scheme="zak-dd"), 1), _Trial(small(scheme="zak-fd-cgm"), 1)
        np.testing.assert_array_equal(a.h.taps, b.h.taps)
        assert not np.array_equal(_Trial(small(), 2).h.taps, a.h.taps)

    def test_dd_and_fd_equalisers_agree(self):
        # same channels and noise levels, only the equaliser differs
        dd = aggregate(run_sweep(small(scheme="zak-dd", sweep__trials=6, sweep__snr_db=(10.0,))).trials)
        fd = aggregate(run_sweep(small(scheme="zak-fd-cgm", sweep__trials=6, sweep__snr_db=(10.0,))).trials)
        assert dd[0]["bit_errors"] > 50
        assert 0.5 < fd[0]["ber"] / dd[0]["ber"] < 2.0

    def test_spread_pilot_rows(self):
        cfg = small(estimation__mode="spread-pilot", estimation__pdr_db=(5.0, 15.0),
                    estimation__n_turbo=(0, 2), sweep__snr_db=(20.0,))
        res = run_sweep(cfg)
        assert len(res.trials) == 2 * 2 * 2
        assert {(r.pdr_db, r.turbo) for r in res.trials} == {(5.0, 0), (5.0, 2), (15.0, 0), (15.0, 2)}
        assert all(0 < r.nmse < 1 for r in res.trials)
        # sorted by point, then turbo, then trial
        keys = [(r.pdr_db, r.turbo, r.trial) for r in res.trials]
        assert keys == sorted(keys)

    def test_progress_callback(self):
        seen = []
        run_sweep(small(sweep__trials=3), progress=lambda i, n: seen.append((i, n)))
        assert seen == [(1, 3), (2, 3), (3, 3)]


class TestAggregate:
    def test_hand_summed_fixture(self):
        rows = [trial(3, 100, t=0, nmse=0.1), trial(0, 100, t=1, nmse=0.3),
                trial(7, 200, t=2, nmse=0.2)]
        (pt,) = aggregate(rows)
        assert pt["bit_errors"] == 10 and pt["bits_total"] == 400
        assert pt["ber"] == 10 / 400
        assert pt["nmse_median"] == 0.2
        assert pt["nmse_median_db"] == pytest.approx(10 * math.log10(0.2))
        assert pt["ber_ci_low"] < pt["ber"] < pt["ber_ci_high"]
        assert pt["trials"] == 3

    def test_groups_by_point(self):
        rows = [trial(1, 10, snr=5.0), trial(2, 10, snr=10.0), trial(3, 10, snr=5.0, turbo=1)]
        assert [(p["snr_db"], p["turbo"], p["bit_errors"]) for p in aggregate(rows)] == [
            (5.0, 0, 1), (10.0, 0, 2), (5.0, 1, 3)]

    def test_empty(self):
        assert aggregate([]) == []

    def test_wilson_interval(self):
        lo, hi = wilson_interval(0, 100)
        assert lo == 0.0 and 0 < hi < 0.04
        lo, hi = wilson_interval(50, 100)
        assert (lo, hi) == (pytest.approx(0.4038, abs=1e-4), pytest.approx(0.5962, abs=1e-4))
        assert all(math.isnan(v) for v in wilson_interval(0, 0))

    def test_ci_width_shrinks_with_root_of_trials(self):
        # the interval width scales as 1 / sqrt(bits): doubling trials narrows it by ~0.71
        rng = np.random.default_rng(0)
        p, bits = 0.01, 2000
        widths = {}
        for n in (50, 100):
            errs = rng.binomial(bits, p, size=n)
            lo, hi = wilson_interval(int(errs.sum()), n * bits)
            widths[n] = hi - lo
        assert widths[100] / widths[50] == pytest.approx(1 / math.sqrt(2), abs=0.06)

    def test_rejects_inconsistent_counts(self):
        with pytest.raises(ValueError):
            trial(11, 10)


class TestEmit:
    def test_files_and_byte_stability(self, tmp_path):
        res = run_sweep(small())
        p1 = emit_results(res, tmp_path / "a", formats=("csv", "timing"))
        p2 = emit_results(run_sweep(small()), tmp_path / "b")
        for name in ("trials", "curve", "manifest"):
            assert p1[name].read_bytes() == p2[name].read_bytes()
        assert "timing" in p1 and "timing" not in p2
        header = p1["trials"].read_text().splitlines()[0]
        assert header == ",".join(TRIAL_COLUMNS)
        assert p1["curve"].read_text().splitlines()[0] == ",".join(CURVE_COLUMNS)
        manifest = yaml.safe_load(p1["manifest"].read_text())
        assert manifest["fingerprint"] == res.config.fingerprint
        assert manifest["master_seed"] == 3
        assert SimConfig.from_dict(manifest["config"]) == res.config

    def test_trials_round_trip(self, tmp_path):
        res = run_sweep(small())
        paths = emit_results(res, tmp_path)
        back = read_trials(paths["trials"])
        assert [(r.bit_errors, r.snr_db, r.trial) for r in back] == \
            [(r.bit_errors, r.snr_db, r.trial) for r in res.trials]

    def test_empty_results_give_headers_only(self, tmp_path):
        paths = emit_results(SweepResult(small(), []), tmp_path)
        assert paths["trials"].read_text() == ",".join(TRIAL_COLUMNS) + "\n"
        assert paths["curve"].read_text() == ",".join(CURVE_COLUMNS) + "\n"

    def test_unwritable_directory(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError):
            emit_results(SweepResult(small(), []), blocker / "out")


class TestBench:
    def test_table(self, tmp_path):
        table = bench_complexity(grids=((5, 7), (7, 9)), k=20, repeats=1, min_time=0.0,
                                 dense_max=50)
        methods = [(r.method, r.MN) for r in table.rows]
        assert methods == [("cgm", 35), ("dense", 35), ("cgm", 63)]
        assert all(r.iterations == 20 for r in table.rows if r.method == "cgm")
        assert math.isnan(table.slope("dense"))
        table.write_csv(tmp_path / "bench.csv")
        assert (tmp_path / "bench.csv").read_text().startswith("method,M,N,MN,seconds,iterations")

    @pytest.mark.slow
    def test_doubling_ratios(self):
        t = bench_complexity(grids=((16, 32), (32, 32)), k=250, repeats=3, min_time=0.3,
                             dense_max=1024)
        sec = {(r.method, r.MN): r.seconds for r in t.rows}
        assert 1.6 <= sec[("cgm", 1024)] / sec[("cgm", 512)] <= 2.6
        assert 5 <= sec[("dense", 1024)] / sec[("dense", 512)] <= 12


class TestFadingStudy:
    def test_small_grid(self):
        g = GridParams(11, 13)
        study = fading_study(g, PulseShape.default("rrc"), 815.0, seeds=range(3))
        med = study.median_spreads()
        assert med["pulsone"] < 1e-9
        assert 0 < med["dft"]
        assert len(study.energies["cp-ofdm"]) == 3
        assert study.energies["cp-ofdm"][0].shape == (143,)
