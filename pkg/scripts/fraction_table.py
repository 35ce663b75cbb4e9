"""Flat inverse-band fraction across Fibonacci approximants, versus (3 - sqrt 5)/2."""

import argparse
import math

from quasiwqed.bands import localization_fraction
from quasiwqed.model import LatticeSpec, approximant_for_eta, fibonacci_sizes


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--max-eta", type=int, default=144)
    p.add_argument("--n-q", type=int, default=512)
    args = p.parse_args()
    target = (3 - math.sqrt(5)) / 2
    spec = LatticeSpec(1, delta=args.delta)
    print("chi/eta,flat,curved,indeterminate,fraction,|fraction - target|*eta")
    for eta in fibonacci_sizes(args.max_eta, 2):
        ap = approximant_for_eta(eta)
        lf = localization_fraction(ap, spec, args.n_q)
        print(f"{ap.chi}/{eta},{lf.flat},{lf.curved},{lf.indeterminate},{lf.fraction},{abs(lf.value - target) * eta:.3f}")


if __name__ == "__main__":
    main()
