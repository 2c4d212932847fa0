"""Wall-clock phase times at finite SNR for the small three-EN network."""
import argparse
from pathlib import Path

from coded_offload import simulator
from coded_offload.cli import to_csv
from coded_offload.config import load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=Path(__file__).parents[1] / "configs" / "table1.json")
    ap.add_argument("--trials", type=int)
    ap.add_argument("--out", default="out")
    args = ap.parse_args()
    run = load_config(args.config, [f"sim.trials={args.trials}"] if args.trials else [])
    rows = simulator.run_campaign(run.network, [(2, 3), (3, 3), (3, 2)], run.sim)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "phase_times.csv").write_text(to_csv(list(simulator.CAMPAIGN_COLUMNS), rows))
    for row in rows:
        print(f"(r,q)=({row['r']},{row['q']})  T_u={row['mean_Tu_s']:.4f}  T_c={row['mean_Tc_s']:.4f}  "
              f"T_d={row['mean_Td_s']:.4f}  total={row['mean_total_s']:.4f}")


if __name__ == "__main__":
    main()
