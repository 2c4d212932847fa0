"""Print the NDLT bookkeeping for the five-user, five-EN example at (r, q) = (4, 3)."""
from pathlib import Path

from coded_offload import latency
from coded_offload.config import load_config
from coded_offload.scheme import design_scheme


def main():
    cfg = load_config(Path(__file__).parents[1] / "configs" / "fig5.json").network
    s = design_scheme(cfg, 4, 3)
    print(f"rates: rho1={s.rho1} rho2={s.rho2}  l per p1: {s.l_table}")
    for t in latency.ndlt_terms(cfg, s):
        kind = "remainder" if t.partial else "full level"
        print(f"p1={t.p1} p2={t.p2} ({kind}): dof={t.dof}  per input {latency.per_input_ndlt(cfg, s, t.p1, t.p2)}")
    print(f"total NDLT = {latency.ndlt_achievable(cfg, 4, 3, s)}")


if __name__ == "__main__":
    main()
