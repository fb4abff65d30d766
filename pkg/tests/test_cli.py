import io
import math

import pytest

from hypisop import cli
from hypisop import evolve as ev
from hypisop import sweep as sw


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_constants_command(capsys):
    code, out, _ = run(capsys, "constants")
    assert code == 0
    assert "2.058171027" in out
    assert "0.259263587" in out
    assert "0.281411123" in out


def test_validate_command_green(capsys):
    code, out, _ = run(capsys, "validate")
    assert code == 0
    assert "PASS" in out
    assert "FAIL" not in out


def test_evolve_command_writes_csv_and_mesh(capsys, tmp_path):
    out_csv = tmp_path / "one.csv"
    out_off = tmp_path / "one.off"
    code, out, _ = run(
        capsys, "evolve", "--case", "aaa", "--eps", "0.15",
        "--max-iter", "300", "--out", str(out_csv), "--mesh-out", str(out_off),
    )
    assert code == 0
    assert "CONVERGED" in out
    recs = sw.read_csv(out_csv)
    assert len(recs) == 1 and recs[0].case == "aaa"
    assert out_off.read_text().startswith("OFF")


def test_evolve_command_exit_three_when_not_converged(capsys):
    code, out, _ = run(
        capsys, "evolve", "--case", "aaa", "--eps", "0.2", "--max-iter", "3",
    )
    assert code == 3


def test_config_file_round_trip(tmp_path, capsys):
    cfgf = tmp_path / "run.cfg"
    cfgf.write_text("# tight run\nmax_iter = 250\nstep0 = 0.02\n")
    code, out, _ = run(
        capsys, "evolve", "--case", "aaa", "--eps", "0.15", "--config", str(cfgf),
    )
    assert code == 0


def test_config_file_unknown_key_is_usage_error(tmp_path, capsys):
    cfgf = tmp_path / "bad.cfg"
    cfgf.write_text("no_such_knob = 1\n")
    code, _, err = run(
        capsys, "evolve", "--case", "aaa", "--eps", "0.15", "--config", str(cfgf),
    )
    assert code == 2
    assert "no_such_knob" in err


def test_sweep_isop_gaps_pipeline(tmp_path, capsys):
    # tiny synthetic pipeline: write fixture CSVs, then reduce them
    def fam(case, slope, offset, vols):
        return [
            sw.SweepRecord(case=case, epsilon=v, volume_target=v, volume=v,
                           area=offset + slope * v, facets=10, iterations=1,
                           status=ev.CONVERGED, ortho_deficit=0.0)
            for v in vols
        ]

    vols = [0.01 + 0.002 * k for k in range(21)]
    paths = []
    for case, slope, offset in (("aaa", 1.0, 0.0), ("abb", 0.5, 0.02),
                                ("bbe", 0.1, 0.038), ("bbd", 1.2, 0.005)):
        p = tmp_path / f"{case}.csv"
        sw.write_csv(fam(case, slope, offset, vols), p)
        paths.append(str(p))

    out_csv = tmp_path / "isop.csv"
    code, out, _ = run(capsys, "isop", *paths[:3], "--out", str(out_csv))
    assert code == 0
    assert "turning point aaa/abb" in out
    assert "turning point abb/bbe" in out
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "volume,area,winner"
    assert len(lines) > 10

    code, out, _ = run(capsys, "gaps", *paths)
    assert code == 0
    assert "A_bbd / A_isop" in out


def test_sweep_command_eps_range(tmp_path, capsys):
    out_csv = tmp_path / "aaa.csv"
    code, out, _ = run(
        capsys, "sweep", "--case", "aaa", "--eps-range", "0.12:0.18:2",
        "--max-iter", "300", "--out", str(out_csv),
    )
    assert code == 0
    recs = sw.read_csv(out_csv)
    assert [r.epsilon for r in recs] == [0.12, 0.18]
    assert all(r.status == ev.CONVERGED for r in recs)


def test_export_mesh_command(tmp_path, capsys):
    off = tmp_path / "seed.off"
    code, out, _ = run(
        capsys, "export-mesh", "--case", "bbd", "--eps", "0.2",
        "--mesh-out", str(off),
    )
    assert code == 0
    assert off.read_text().startswith("OFF")


def test_usage_errors(capsys):
    code, _, err = run(capsys, "sweep", "--case", "aaa", "--eps-range", "bogus")
    assert code == 2
    with pytest.raises(SystemExit):
        cli.main(["evolve", "--case", "nope", "--eps", "0.1"])
