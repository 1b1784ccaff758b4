"""Measure Table 1 from fitted cusps over a sweep of b and compare with the analytic rows."""
from __future__ import annotations

import argparse

import numpy as np

from pleatlab import curves as cv
from pleatlab.classify import EXCLUDED_B, table1_case
from pleatlab.errors import PleatlabError
from pleatlab.nflab import make_oracle


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lo", type=float, default=-4.0)
    ap.add_argument("--hi", type=float, default=3.0)
    ap.add_argument("-n", type=int, default=36)
    args = ap.parse_args()

    bs = [float(b) for b in np.linspace(args.lo, args.hi, args.n) if min(abs(b - e) for e in EXCLUDED_B) > 0.02]
    print(f"{'b':>8} {'case':>4} {'field':>6} {'signs':>5} {'1/b':>3} {'b^3':>3} {'mK err':>9} {'mC err':>9}  match")
    mismatches = 0
    for b in bs:
        expected = table1_case(b)
        try:
            row, rep = cv.table1_from_fits(make_oracle(f"cubic:b={b!r}").ode)
        except PleatlabError as exc:
            print(f"{b:8.3f} {expected.case:>4}  failed: {exc}")
            mismatches += 1
            continue
        ok = row.lifted_field == expected.lifted_field and row.signs == expected.signs
        if expected.inverse_ratio is not None:
            ok &= row.inverse_ratio == expected.inverse_ratio and row.cube_ratio == expected.cube_ratio
        mK, mC = 4 / 9 * b**3, 4 / 9 * (3 * b - 2)
        mismatches += not ok
        print(
            f"{b:8.3f} {row.case:>4} {row.lifted_field:>6} {':'.join(row.signs):>5} {row.inverse_ratio:>3} "
            f"{row.cube_ratio:>3} {abs(rep.mK - mK) / abs(mK):9.2e} {abs(rep.mC - mC) / abs(mC):9.2e}  {ok}"
        )
    print(f"{len(bs) - mismatches}/{len(bs)} rows match")


if __name__ == "__main__":
    main()
