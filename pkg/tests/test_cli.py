import subprocess
import sys

from loopperc.cli import main, parse_grid


def run(args, capsys):
    code = main(args)
    return code, capsys.readouterr()


def test_parse_grid():
    assert parse_grid("0.1,0.2") == (0.1, 0.2)
    assert parse_grid("0.3:0.5:0.1") == (0.3, 0.4, 0.5)


def test_sample_trace_color(tmp_path, capsys):
    cfg = tmp_path / "c.txt"
    code, _ = run(["--seed", "3", "sample", "--graph", "torus:2,4", "--beta", "1.0", "--out", str(cfg)], capsys)
    assert code == 0 and cfg.read_text().startswith("# beta=1.0")
    code, out = run(["trace", str(cfg), "--graph", "torus:2,4"], capsys)
    assert code == 0 and out.out.splitlines()[0] == "loops\tmax_loop_size\tmax_loop_frac"
    code, out = run(["trace", str(cfg), "--graph", "torus:2,4", "--per-vertex"], capsys)
    assert len(out.out.splitlines()) > 16
    code, out = run(["color", str(cfg), "--graph", "torus:2,4"], capsys)
    assert code == 0 and "uncoloured" in out.out
    code, out = run(["trace", str(cfg), "--graph", "torus:2,5"], capsys)
    assert code == 2 and "edges" in out.err


def test_color_many_reports_delta(tmp_path, capsys):
    base = tmp_path / "r"
    assert main(["sample", "--graph", "torus:1,30", "--beta", "1", "--replicas", "20",
                 "--out", str(base)]) == 0
    files = [str(tmp_path / f"r.{i}") for i in range(20)]
    code, out = run(["color", *files, "--graph", "torus:1,30"], capsys)
    assert code == 0 and "# delta_hat:" in out.out


def test_perc_and_theta(capsys):
    code, out = run(["perc", "--graph", "torus:2,8", "--p", "0.3:0.7:0.1", "--replicas", "20"], capsys)
    assert code == 0 and out.out.startswith("grid\tobservable\tmean\tstderr\treplicas")
    code, out = run(["theta-sample", "--graph", "torus:2,4", "--beta", "1", "--theta", "2",
                     "--burn-in", "10", "--samples", "3", "--thin", "2"], capsys)
    lines = [l for l in out.out.splitlines() if not l.startswith("#")]
    assert code == 0 and len(lines) == 4


def test_scan_config_and_determinism(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("graph: torus:2,6\nbeta: [0.0, 0.6]\nreplicas: 3\nseed: 5\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--config", str(cfg), "scan", "--out", str(a)]) == 0
    assert main(["scan", "--config", str(cfg), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert main(["scan", "--config", str(cfg), "--seed", "6", "--out", str(b)]) == 0
    assert a.read_bytes() != b.read_bytes()


def test_gap_and_delta(capsys):
    code, out = run(["gap", "--graph", "torus:2,8", "--beta", "0.3:1.2:0.1", "--sizes", "6,8,10",
                     "--replicas", "10"], capsys)
    assert code == 0 and "gap_detected" in out.out
    code, out = run(["delta", "--graph", "torus:1,20", "--beta", "1.0", "--probes", "100"], capsys)
    assert code == 0 and out.out.startswith("beta\tu\tprobes\tdelta_hat")


def test_invalid_config_rejected(capsys):
    code, out = run(["scan", "--graph", "torus:2,4", "--beta", "1.0,0.5"], capsys)
    assert code == 2 and "increasing" in out.err
    code, out = run(["scan", "--graph", "torus:2,2", "--beta", "1.0"], capsys)
    assert code == 2
    code, out = run(["scan", "--beta", "1.0"], capsys)
    assert code == 2 and "--graph" in out.err


def test_validate_exit_status(capsys):
    code, out = run(["validate", "--replicas", "50"], capsys)
    assert code == 0 and "oracle checks passed" in out.out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "loopperc", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "loopperc" in res.stdout
