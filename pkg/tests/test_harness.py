import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qbattery.analytic import Ordering
from qbattery.harness import cli
from qbattery.harness.io import CSV_HEADER, RunManifest, csv_to_rows, fmt, parse, rows_to_csv
from qbattery.harness.scan import (
    ScanPoint,
    ScanResult,
    classify,
    fit_window,
    loglog_fit,
    ordering_certificates,
    point_seed,
    run_fig1,
    scan,
)
from qbattery.harness.verify import swap_partial_trace, swap_trace_exact, trace_j2_check

doubles = st.floats(allow_nan=False, allow_infinity=False)


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr().out


class TestCsv:
    @given(doubles)
    def test_number_round_trip(self, x):
        assert parse(fmt(x)) == x

    def test_missing_is_empty(self):
        assert fmt(None) == "" and parse("") is None

    @given(st.lists(st.tuples(doubles, doubles, st.one_of(st.none(), doubles)), min_size=1, max_size=10))
    def test_rows_round_trip(self, items):
        rows = []
        for axis, v, se in items:
            rows.append({"axis": axis, "values": {"unitary": v, "general": v / 3}, "se": {} if se is None else {"cptp": se}, "mode": "mc"})
        back = csv_to_rows(rows_to_csv(rows))
        assert back == rows

    def test_header(self):
        text = rows_to_csv([{"axis": 2, "values": {"cptp": 0.5}, "se": {}, "mode": "analytic"}])
        header, line = text.strip().split("\n")
        assert header.split(",") == CSV_HEADER
        assert line == "2,,0.5,,,,,analytic"

    def test_bad_header(self):
        with pytest.raises(ValueError):
            csv_to_rows("a,b\n1,2\n")


class TestScan:
    def test_dA_slopes(self):
        r = scan("dA", range(50, 501, 50), dB=3, alpha1=0.9, sum_sq=2.0)
        assert r.fits["cptp"].slope == pytest.approx(-2, abs=0.1)
        assert r.fits["general"].slope == pytest.approx(-1, abs=0.05)
        assert r.fit_window == (140.0, 500.0)

    def test_dB_slopes(self):
        r = scan("dB", range(50, 501, 50), dA=2, alpha1=1.0)
        for p in ("unitary", "cptp", "general"):
            assert r.fits[p].slope == pytest.approx(-1, abs=0.05)

    def test_n_axis_bounds(self):
        r = scan("n", [2**k for k in range(4, 14)], dB=2)
        for pt in r.points:
            b = pt.extra["general"]
            assert b["lower_bound"] < pt.analytic["general"] < b["upper_bound"]
        assert "general_value_n_vs_ln_n" in r.extra_fits

    def test_too_few_points_no_fit(self):
        r = scan("dA", [2, 3], dB=2)
        assert r.fits == {}

    @pytest.mark.parametrize("grid", [[], [5, 3, 4], [1, 2, 3], [2, 2, 3]])
    def test_invalid_grid(self, grid):
        with pytest.raises(ValueError):
            scan("dA", grid)

    def test_mc_agrees_with_analytic(self):
        r = scan("dA", [2, 3, 4], dB=2, alpha1=0.8, mode="both", samples=20_000, seed=5)
        for pt in r.points:
            for p, (v, se) in pt.mc.items():
                assert abs(v - pt.analytic[p]) <= 4 * se

    def test_threads_do_not_change_results(self):
        a = scan("dB", [2, 3, 4], mode="mc", samples=2000, seed=1, threads=1)
        b = scan("dB", [2, 3, 4], mode="mc", samples=2000, seed=1, threads=3)
        assert [p.mc for p in a.points] == [p.mc for p in b.points]

    def test_loglog_fit_exact_power(self):
        x = np.array([2.0, 4, 8, 16])
        f = loglog_fit(x, 3 * x**-1.5)
        assert f.slope == pytest.approx(-1.5) and f.r2 == pytest.approx(1)

    def test_fit_window(self):
        assert fit_window([10, 110]) == (30.0, 110.0)

    def test_point_seed_distinct(self):
        assert len({point_seed(1, k) for k in range(100)}) == 100

    def test_empty_result_rejected(self):
        with pytest.raises(ValueError):
            ScanResult("dA", [])

    def test_rows(self):
        pt = ScanPoint(3.0, analytic={"unitary": 0.1}, mc={"unitary": (0.11, 0.01)})
        assert [r["mode"] for r in pt.rows()] == ["analytic", "mc"]


@pytest.fixture(scope="module")
def curves():
    return run_fig1(2, 101, seed=0)


class TestFig1:
    def test_general_above_cptp(self, curves):
        assert np.all(curves.series("general") > curves.series("cptp"))

    def test_curves_decay(self, curves):
        for p in ("unitary", "cptp", "general"):
            y = curves.series(p)[8:]
            envelope = np.maximum.accumulate(y[::-1])[::-1]
            assert np.all(np.diff(envelope) <= 0)
            assert envelope[-1] < envelope[0] / 10

    def test_cptp_falls_below_the_others(self, curves):
        tail = slice(20, None)
        assert np.all(curves.series("cptp")[tail] < curves.series("unitary")[tail])

    def test_small_d_crossover(self):
        found = []
        for seed in range(40):
            r = run_fig1(2, 6, seed=seed)
            if np.any(r.series("cptp") > r.series("unitary")):
                found.append(seed)
        assert found

    def test_pure_batteries_keep_unitary_finite(self):
        r = run_fig1(80, 101, state="pure", seed=0)
        assert np.all(r.series("unitary") > 0.2)

    def test_mc_agreement(self):
        r = run_fig1(2, 6, mode="both", samples=4000, seed=3)
        for pt in r.points:
            for p, (v, se) in pt.mc.items():
                assert abs(v - pt.analytic[p]) <= 4 * se, (pt.axis, p)

    def test_fixed_purity(self):
        r = run_fig1(4, 6, alpha1=0.5)
        assert all(pt.extra["alpha1"] == pytest.approx(0.5) for pt in r.points)

    def test_bad_range(self):
        with pytest.raises(ValueError):
            run_fig1(5, 4)


class TestClassify:
    def test_report(self):
        rep = classify(2, 2, 0.55)
        assert rep.ordering is Ordering.G_CPTP_U
        assert rep.cond_general_exceeds_unitary and not rep.cond_unitary_exceeds_cptp
        assert rep.unit_values["cptp"] == pytest.approx(0.050666666)

    def test_certificates(self):
        certs = ordering_certificates()
        assert set(certs) == {Ordering.G_U_CPTP, Ordering.G_CPTP_U, Ordering.U_G_CPTP}
        for o, rep in certs.items():
            assert classify(rep.dB, rep.dA, rep.alpha1).ordering is o


class TestVerifyPieces:
    def test_exact_checks(self):
        assert swap_trace_exact(3, 0).deviation == 0
        assert swap_partial_trace(2, 3).deviation == 0
        assert trace_j2_check(4, 6).passed


class TestCli:
    def test_classify_text(self, capsys):
        code, out = run_cli(capsys, "classify", "--dB", "2", "--dA", "2", "--alpha1", "1")
        assert code == 0 and "ordering: U>G>CPTP" in out

    def test_scan_json_schema(self, capsys):
        code, out = run_cli(capsys, "scan", "--axis", "dA", "--grid", "50:500:50", "--dB", "3", "--format", "json", "--process", "cptp")
        doc = json.loads(out)
        assert code == 0
        assert set(doc) >= {"manifest", "points", "fit"}
        assert set(doc["fit"]) >= {"slope", "intercept", "r2"}
        assert doc["fit"]["slope"] == pytest.approx(-2, abs=0.1)
        assert set(doc["manifest"]) >= set(vars(RunManifest("x", {}, 0)))
        assert doc["manifest"]["config"]["grid"] == list(range(50, 501, 50))

    def test_scan_csv_round_trips(self, capsys, tmp_path):
        out = tmp_path / "scan.csv"
        code, _ = run_cli(capsys, "scan", "--axis", "dB", "--grid", "2,3,4", "--mode", "both", "--samples", "500", "--out", str(out))
        rows = csv_to_rows(out.read_text())
        assert code == 0
        assert [r["mode"] for r in rows] == ["analytic", "mc"] * 3
        assert rows[1]["se"].keys() == {"unitary", "cptp", "general"}

    def test_power_grid(self, capsys):
        code, out = run_cli(capsys, "scan", "--axis", "n", "--grid", "2^4..2^6", "--format", "csv")
        assert code == 0
        assert [r["axis"] for r in csv_to_rows(out)] == [16, 32, 64]

    def test_fluct_and_average(self, capsys):
        code, out = run_cli(capsys, "fluct", "--format", "json")
        assert code == 0 and json.loads(out)["analytic"]["cptp"] == pytest.approx(11 / 75)
        code, out = run_cli(capsys, "average", "--alpha1", "0.5", "--format", "csv")
        assert code == 0 and out.startswith("quantity,process,value,se")

    def test_fig1_small(self, capsys):
        code, out = run_cli(capsys, "fig1", "--d-max", "5", "--format", "csv")
        assert code == 0 and len(csv_to_rows(out)) == 4

    def test_classify_sweep_json(self, capsys):
        code, out = run_cli(capsys, "classify", "--dB", "6", "--dA", "3", "--sweep", "50", "--certificates", "--format", "json")
        doc = json.loads(out)
        assert code == 0 and sum(doc["sweep"].values()) == 50 and len(doc["certificates"]) == 3

    @pytest.mark.parametrize("argv", [
        ["scan", "--axis", "dA", "--grid", "1,2,3"],
        ["scan", "--axis", "dA", "--grid", "x"],
        ["fluct", "--alpha1", "0.1"],
        ["fluct", "--alpha1", "abc"],
        ["fluct", "--dA", "1"],
        ["bogus"],
        [],
    ])
    def test_usage_errors(self, capsys, argv):
        assert cli.main(argv) == 2

    def test_verify_exit_code(self, capsys):
        code, out = run_cli(capsys, "verify", "--samples", "20000")
        assert code == 0 and "FAIL" not in out

    def test_verify_failure_exit_code(self, capsys, monkeypatch):
        from qbattery.harness import verify

        real = verify.verify_suite

        def broken(**kw):
            rep = real(**kw)
            rep.checks[0].passed = False
            return rep

        monkeypatch.setattr(cli, "verify_suite", broken)
        assert cli.main(["verify", "--samples", "2000"]) == 1
