"""Write the input document for the Hauptmodul of Gamma_0^*(p), p - 1 | 24.

    T_p = (eta(z)/eta(pz))^r + r + p^{r/2} (eta(pz)/eta(z))^r,  r = 24/(p-1),

normalized to q^{-1} + O(q). Usage: python scripts/hauptmodul.py 2 [n_max] > out.json
"""

import json
import sys
from fractions import Fraction


def eta_product(p: int, r: int, n: int) -> list[int]:
    """Coefficients of prod_k ((1 - q^k)/(1 - q^{pk}))^r through q^n."""
    c = [1] + [0] * n
    for k in range(1, n + 1):
        for _ in range(r):
            for i in range(n, k - 1, -1):
                c[i] -= c[i - k]
            if p * k <= n:
                # divide by (1 - q^{pk})
                for i in range(p * k, n + 1):
                    c[i] += c[i - p * k]
    return c


def inverse(a: list[int], n: int) -> list[int]:
    inv = [1] + [0] * n
    for k in range(1, n + 1):
        inv[k] = -sum(a[i] * inv[k - i] for i in range(1, k + 1))
    return inv


def hauptmodul(p: int, n_max: int) -> dict[int, int]:
    if 24 % (p - 1):
        raise SystemExit(f"p - 1 must divide 24, got p = {p}")
    r = 24 // (p - 1)
    n = n_max + 1
    # (eta(z)/eta(pz))^r = q^{-1} E(q), E as above; the reciprocal is q inv(E)
    e = eta_product(p, r, n)
    inv = inverse(e, n)
    scale = Fraction(p) ** Fraction(r, 2)
    if scale.denominator != 1:
        raise SystemExit("p^{r/2} is not an integer")
    out = {k - 1: e[k] for k in range(n + 1)}
    out[0] = out.get(0, 0) + r
    for k in range(n):
        out[k + 1] = out.get(k + 1, 0) + int(scale) * inv[k]
    return {k: v for k, v in out.items() if k <= n_max and v}


def main() -> None:
    p = int(sys.argv[1])
    n_max = int(sys.argv[2]) if len(sys.argv) > 2 else 120
    coeffs = hauptmodul(p, n_max)
    if coeffs.get(0) is not None:
        raise SystemExit("constant term should vanish")
    doc = {"group": f"gamma0star:{p}",
           "cusps": [{"label": "inf", "alpha": "1", "beta": "1", "k": "0",
                      "aplus": {str(k): str(v) for k, v in sorted(coeffs.items())}, "aminus": {}}]}
    json.dump(doc, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
