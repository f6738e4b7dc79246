#!/usr/bin/env python3
"""Locate the mean-square stability boundary in the drift coefficient.

For noise c X(t) + d X(t-alpha) and drift b X(t), sweeps b by bisection on
the numerical classification and compares the located boundary with the
closed-form root of c^2 + d^2 + 2 c d e^(b alpha) + 2 b = 0.
"""

import argparse
import json

from sdde_meansq import SUBCRITICAL, aligned_horizon, aligned_step, analyze, parse_config, solve_b0


def classify_at(b, c, d, alpha, h_req):
    h = aligned_step(alpha, h_req)
    T = aligned_horizon(max(20.0, 12.0 / abs(b)), h)
    doc = {
        "alpha": alpha,
        "mu": {"atoms": [[0, b]]},
        "nu": {"atoms": [[0, c], [-alpha, d]]},
        "phi": {"constant": 1},
        "numerical": {"h": h, "T": T, "band": 1e-7},
    }
    return analyze(parse_config(json.dumps(doc))).report.classification


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--d", type=float, default=1.0)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--step", type=float, default=1e-3)
    ap.add_argument("--tol", type=float, default=1e-3)
    args = ap.parse_args()

    b_exact = solve_b0(args.c, args.d, args.alpha)
    lo, hi = b_exact - 0.5, min(b_exact + 0.5, -1e-3)
    assert classify_at(lo, args.c, args.d, args.alpha, args.step) == SUBCRITICAL
    assert classify_at(hi, args.c, args.d, args.alpha, args.step) != SUBCRITICAL
    while hi - lo > args.tol:
        mid = 0.5 * (lo + hi)
        if classify_at(mid, args.c, args.d, args.alpha, args.step) == SUBCRITICAL:
            lo = mid
        else:
            hi = mid
    b_num = 0.5 * (lo + hi)
    print(f"closed-form boundary b0 = {b_exact:.6f}")
    print(f"numerical boundary     = {b_num:.6f}  (|diff| = {abs(b_num - b_exact):.2e})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
