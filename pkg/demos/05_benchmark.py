"""A small groups sweep against the equal-size baselines, written as CSV."""

import tempfile
from pathlib import Path

from nomagroup import bench

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp)
    cfg = bench.ExperimentConfig(
        sweep="groups", values=[10, 20, 30], seeds=[0, 1, 2],
        strategies=["greedy", "user_preference", "gale_shapley"],
        n_users=60, output_path=str(out / "rows.csv"),
    )
    rows = bench.run_sweep(cfg)
    print((out / "rows.csv").read_text().splitlines()[0])
    print(len(rows), "rows")

    bench.emit_plot_data(rows, "group_count", out / "plot.csv")
    for line in (out / "plot.csv").read_text().splitlines():
        print(line)

# with 60 users, more groups means less sharing and less power
for rec in bench.aggregate(rows, "group_count"):
    print(f"{rec['strategy']:16s} G={rec['group_count']:3d}  {rec['mean_power_dbm']:7.2f} dBm")
