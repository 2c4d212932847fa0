"""Inner and outer compute-download regions for every r, one CSV per kind."""
import argparse
from pathlib import Path

from coded_offload import latency
from coded_offload.cli import to_csv
from coded_offload.config import load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=Path(__file__).parents[1] / "configs" / "fig3.json")
    ap.add_argument("--out", default="out")
    args = ap.parse_args()
    cfg = load_config(args.config).network
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cols = ["r", "q", "tau_u", "tau_c", "tau_d", "on_hull"]
    for kind in ("inner", "outer"):
        rows = []
        for r in range(1, cfg.K + 1):
            curve = latency.region(cfg, r, kind)
            hull = set(curve.hull)
            rows += [{"r": r, "q": q, "tau_u": latency.nult_achievable(cfg, r), "tau_c": c, "tau_d": d,
                      "on_hull": (c, d) in hull} for q, c, d in curve.points]
        (out / f"region_{kind}.csv").write_text(to_csv(cols, rows))
    print(f"wrote {out}/region_inner.csv and {out}/region_outer.csv")


if __name__ == "__main__":
    main()
