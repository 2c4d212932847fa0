"""Optimal end-to-end time of the proposed scheme and the baselines versus each weight."""
import argparse
from fractions import Fraction
from pathlib import Path

from coded_offload.cli import emit_sweep, to_csv
from coded_offload.config import load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=Path(__file__).parents[1] / "configs" / "fig7.json")
    ap.add_argument("--out", default="out")
    args = ap.parse_args()
    cfg = load_config(args.config).network
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    # delta_c sweep at the configured delta_d, delta_d sweep at delta_c = 5
    cols, rows = emit_sweep(cfg, "delta_c", [Fraction(k, 2) for k in range(0, 41)])
    (out / "sweep_delta_c.csv").write_text(to_csv(cols, rows))
    cols, rows = emit_sweep(cfg.replace(delta_c=5), "delta_d", [Fraction(k, 2) for k in range(0, 61)])
    (out / "sweep_delta_d.csv").write_text(to_csv(cols, rows))
    for row in rows:
        gap = (row["mds_only_tau"] - row["proposed_tau"]) / row["proposed_tau"]
        rep = (row["repetition_only_tau"] - row["proposed_tau"]) / row["proposed_tau"]
        print(f"delta_d={float(row['value']):5.1f}  vs MDS-only {float(gap):7.3%}  vs repetition-only {float(rep):7.3%}")


if __name__ == "__main__":
    main()
