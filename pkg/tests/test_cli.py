import numpy as np
import pytest

from linksig.cli import cli_main
from linksig.traceio import read_trace


def run(*argv):
    return cli_main(list(argv))


def simulate(out, *extra):
    return run("simulate", "--seed", "3", "--paths", "16", "--k1", "1",
               "--k2", "1", "--bandwidth-mhz", "40", "--taps", "20",
               "--snr-db", "25", "--count", "12", "--out", str(out), *extra)


class TestSimulate:
    def test_writes_readable_trace(self, tmp_path):
        out = tmp_path / "trace.jsonl"
        assert simulate(out) == 0
        trace = read_trace(out)
        assert trace.header.record_count == 12
        assert trace.snapshots[0].taps.shape == (1, 1, 20)

    def test_jump_flags_move_position(self, tmp_path):
        out = tmp_path / "trace.jsonl"
        assert simulate(out, "--jump-at", "6", "--jump-distance-m", "0.05") == 0
        trace = read_trace(out)
        assert trace.snapshots[5].position_m == (0.0, 0.0)
        assert trace.snapshots[6].position_m[0] == pytest.approx(0.05)

    def test_jump_outside_trace_is_usage_error(self, tmp_path):
        out = tmp_path / "trace.jsonl"
        assert simulate(out, "--jump-at", "99") == 1

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        simulate(a)
        simulate(b)
        assert a.read_bytes() == b.read_bytes()


class TestSound:
    def test_multitone_trace(self, tmp_path):
        out = tmp_path / "trace.jsonl"
        code = run("sound", "--method", "multitone", "--seed", "1",
                   "--paths", "8", "--taps", "20", "--bandwidth-mhz", "20",
                   "--count", "3", "--out", str(out))
        assert code == 0
        assert read_trace(out).header.record_count == 3

    def test_ofdm_trace(self, tmp_path):
        out = tmp_path / "trace.jsonl"
        code = run("sound", "--method", "ofdm", "--seed", "1", "--paths", "8",
                   "--count", "2", "--out", str(out))
        assert code == 0
        assert read_trace(out).snapshots[0].taps.shape == (1, 1, 64)


class TestDetect:
    def test_history_floor_message(self, tmp_path, capsys):
        trace = tmp_path / "t.jsonl"
        simulate(trace)
        code = run("detect", "--in", str(trace), "--history", "2",
                   "--out", str(tmp_path / "d.csv"))
        assert code == 1
        assert "3" in capsys.readouterr().err

    def test_decisions_csv(self, tmp_path):
        trace = tmp_path / "t.jsonl"
        simulate(trace)
        out = tmp_path / "d.csv"
        assert run("detect", "--in", str(trace), "--history", "3",
                   "--delay", "1", "--threshold", "2.0",
                   "--out", str(out)) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "meas_index,verdict,delta"
        assert len(lines) == 13
        assert lines[1] == "0,warming,"
        final = lines[-1].split(",")
        assert final[1] in ("alarm", "no_alarm") and float(final[2]) >= 0

    def test_missing_file_is_data_error(self, tmp_path):
        code = run("detect", "--in", str(tmp_path / "nope.jsonl"),
                   "--out", str(tmp_path / "d.csv"))
        assert code == 2


class TestRocCommand:
    def test_pipeline_and_determinism(self, tmp_path):
        h0 = tmp_path / "h0.jsonl"
        h1 = tmp_path / "h1.jsonl"
        simulate(h0)
        simulate(h1, "--jump-at", "8", "--jump-distance-m", "0.05")
        outs = []
        for name in ("r1.csv", "r2.csv"):
            out = tmp_path / name
            assert run("roc", "--h0", str(h0), "--h1", str(h1), "--history",
                       "3", "--delay", "1", "--out", str(out)) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        text = outs[0].decode()
        assert text.splitlines()[0] == "gamma,pfa,pd,pm"
        assert "inf" in text  # both endpoint rows present

    def test_h1_without_move_is_data_error(self, tmp_path):
        h0 = tmp_path / "h0.jsonl"
        simulate(h0)
        code = run("roc", "--h0", str(h0), "--h1", str(h0), "--history", "3",
                   "--out", str(tmp_path / "r.csv"))
        assert code == 2


class TestSweepAndFit:
    def test_antennas_sweep_and_fit(self, tmp_path):
        sweep_csv = tmp_path / "sweep.csv"
        code = run("sweep", "--kind", "antennas", "--grid", "1,4",
                   "--k1", "2", "--k2", "2", "--snr-db", "25",
                   "--trials", "40", "--target-pfa", "0.1",
                   "--seed", "2", "--out", str(sweep_csv))
        assert code == 0
        lines = sweep_csv.read_text().splitlines()
        assert lines[0] == "value,pm,at_floor,n_h1_samples"
        assert len(lines) == 3

    def test_fit_exact_law(self, tmp_path):
        sweep_csv = tmp_path / "sweep.csv"
        rows = ["value,pm,at_floor,n_h1_samples"] + [
            f"{k},{2.0 / k},0,500" for k in (1, 4, 16, 64)
        ]
        sweep_csv.write_text("\n".join(rows) + "\n")
        out = tmp_path / "fit.csv"
        assert run("fit", "--in", str(sweep_csv), "--out", str(out)) == 0
        header_line, data = out.read_text().splitlines()
        assert header_line == "b,m,residual"
        b, m, resid = map(float, data.split(","))
        assert b == pytest.approx(2.0) and m == pytest.approx(1.0)
        assert resid < 1e-12

    def test_fit_bad_csv_is_data_error(self, tmp_path):
        bad = tmp_path / "sweep.csv"
        bad.write_text("value,pm\nctls,0.1\n")
        assert run("fit", "--in", str(bad), "--out", str(tmp_path / "f.csv")) == 2

    def test_invalid_grid_value_is_usage_error(self, tmp_path):
        code = run("sweep", "--kind", "history", "--grid", "2,5",
                   "--trials", "20", "--out", str(tmp_path / "s.csv"))
        assert code == 1


class TestUsage:
    def test_unknown_subcommand(self):
        assert run("frobnicate") == 1

    def test_missing_required_flag(self):
        assert run("detect") == 1
