"""File-based workflow: simulate, identify, refine, compare via the CLI.

Everything the library does is reachable through ``bilarx`` subcommands with
CSV data and JSON configuration, which is the path for measured data such as
logged power consumption. This script drives the CLI in a scratch directory
and shows the artifacts it leaves behind.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path


def run(*args):
    cmd = [sys.executable, "-m", "bilarx", *args]
    print("$", " ".join(str(a) for a in cmd[2:]))
    res = subprocess.run(cmd, capture_output=True, text=True)
    if res.stdout:
        print(res.stdout, end="")
    if res.returncode not in (0, 2):
        print(res.stderr, end="")
        raise SystemExit(res.returncode)
    return res.returncode


with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    data = tmp / "measurements.csv"
    cfg = tmp / "config.json"
    cfg.write_text(json.dumps({
        "n_a": 1, "n_b": 3, "n_k": 0,
        "epsilon": 2.0, "lambda": 1e7, "gamma": 0.5,
        "max_iters": 30000,
    }, indent=2))

    run("simulate", "--scenario", "scenario_arx_noisy", "--seed", "5",
        "--out", str(data))
    print("data header:", data.read_text().splitlines()[0])
    print()

    run("identify", "--data", str(data), "--config", str(cfg),
        "--out", str(tmp / "first.json"), "--plot-dir", str(tmp / "plots"))
    run("refine", "--data", str(data), "--config", str(cfg),
        "--result", str(tmp / "first.json"), "--gamma", "0.5",
        "--out", str(tmp / "refined.json"))
    run("baseline", "--data", str(data), "--config", str(cfg),
        "--segments", "4", "--out", str(tmp / "naive.json"))

    refined = json.loads((tmp / "refined.json").read_text())
    naive = json.loads((tmp / "naive.json").read_text())
    print()
    print("refined change points:", refined["change_points"]["y1"])
    print("refined a:", [round(v, 4) for v in refined["a"]])
    print("refined b (unit norm):", [round(v, 4) for v in refined["b"]])
    print("naive change points (threshold 0.5 on the fitted signal):")
    u = naive["u"]["y1"]
    cps = [i + 1 for i in range(len(u) - 1) if abs(u[i] - u[i + 1]) > 0.5]
    print("  ", cps)
    print()
    print("artifacts written:", sorted(p.name for p in tmp.iterdir()))
    print("plot files:", sorted(p.name for p in (tmp / "plots").iterdir()))
