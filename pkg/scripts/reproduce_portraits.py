"""Write chart/plane portraits for one b per Table 1 interval and run the geometric checks."""
from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

from pleatlab import portrait as pr
from pleatlab.nflab import make_oracle, representative_b


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-o", "--out", type=Path, default=Path("portraits"))
    args = ap.parse_args()

    summary = {}
    start = time.perf_counter()
    for case, b in representative_b().items():
        pt = pr.render(make_oracle(f"cubic:b={b}").ode)
        pt.write(args.out)
        row = {
            "b": b,
            "bold_branches": pr.bold_branches(pt.manifest),
            "crossings": len(pr.crossings(pt.trajectories, 1e-3, fld=pt.chart)),
            "cusp_sides": pr.cusp_sides(pt),
            "tongue_fraction": pr.tongue_containment(pt),
        }
        summary[case] = row
        print(case, json.dumps(row))
    print(f"total {time.perf_counter() - start:.1f} s, files in {args.out}/")


if __name__ == "__main__":
    main()
