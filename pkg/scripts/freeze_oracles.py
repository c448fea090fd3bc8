"""Compute reference values with tools independent of sciuq and freeze them.

Everything here uses sympy, scipy or plain Python loops.  The output,
tests/data/oracles.json, is checked in; rerun this script only when a
recipe changes on purpose.

    python3 scripts/freeze_oracles.py
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import sympy as sp
from scipy import integrate

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "oracles.json"


def conjugate():
    """Posterior of u = theta x + eps, theta ~ N(0, 1), on a fixed dataset."""
    rng = np.random.default_rng(2024)
    x = rng.uniform(-1.0, 1.0, 20)
    sigma = 0.1
    u = 1.0 * x + sigma * rng.standard_normal(20)
    sxx = sum(xi * xi for xi in x)
    sxu = sum(xi * ui for xi, ui in zip(x, u))
    var = 1.0 / (1.0 + sxx / sigma ** 2)
    return {"x": list(x), "u": list(u), "sigma": sigma,
            "mean": var * sxu / sigma ** 2, "std": math.sqrt(var)}


def jets():
    """Derivatives up to order 3 of compositions, straight from sympy."""
    t = sp.symbols("t")
    cases = {
        "sin_exp": (sp.sin(sp.exp(t)), 0.3),
        "exp_sin": (sp.exp(sp.sin(t)), -0.7),
        "poly_sin": (sp.sin(t) ** 3 - 2 * sp.sin(t) + 1, 1.1),
        "exp_poly": (sp.exp(t ** 2 - t), 0.4),
        "tanh_tanh": (sp.tanh(2 * sp.tanh(t) + 0.5), -0.2),
        "log_sqrt_softplus": (sp.log(1 + sp.sqrt(sp.log(1 + sp.exp(t)))), 0.8),
        "recip": (1 / (1 + t ** 2), 0.6),
    }
    out = {}
    for name, (expr, at) in cases.items():
        out[name] = {"at": at, "derivs": [float(sp.diff(expr, t, k).subs(t, at)) for k in range(4)]}
    return out


def manufactured_dr():
    x = sp.symbols("x")
    D, k_r = sp.Rational(1, 100), sp.Rational(1, 5)
    u = sp.Rational(3, 10) * sp.sin(sp.pi * x)
    f = D * sp.diff(u, x, 2) - k_r * u ** 3
    pts = [-0.9, -0.35, 0.0, 0.2, 0.77]
    return {"points": pts, "f": [float(f.subs(x, p)) for p in pts]}


def ko_invariants():
    """d/dt of b x1^2 - a x2^2 and (a+b) x1^2 + a x3^2 vanish along the flow."""
    a, b, x1, x2, x3 = sp.symbols("a b x1 x2 x3")
    rhs = {x1: a * x2 * x3, x2: b * x1 * x3, x3: -(a + b) * x1 * x2}
    out = {}
    for name, q in {"b_x1sq_minus_a_x2sq": b * x1 ** 2 - a * x2 ** 2,
                    "apb_x1sq_plus_a_x3sq": (a + b) * x1 ** 2 + a * x3 ** 2}.items():
        dq = sum(sp.diff(q, v) * rhs[v] for v in rhs)
        out[name] = {"derivative_is_zero": sp.simplify(dq) == 0,
                     "value_at_start": float(q.subs({a: 1, b: 1, x1: 1, x2: 1, x3: 0.5}))}
    return out


def antiderivative():
    """u(x) = int_0^x sum_k c_k sin(k pi x) by adaptive quadrature."""
    c = [0.8, -0.45, 0.2]

    def lam(s):
        return sum(ck * math.sin((k + 1) * math.pi * s) for k, ck in enumerate(c))

    xs = [0.0, 0.13, 0.5, 0.71, 1.0]
    return {"coeffs": c, "x": xs,
            "u": [integrate.quad(lam, 0.0, xi, epsabs=1e-13, epsrel=1e-13)[0] for xi in xs]}


def kdv():
    """Residual of the two-soliton solution for both candidate coefficients."""
    x, t = sp.symbols("x t")
    a1, a2 = 1, 2
    b1 = sp.log(3) / 2
    e1 = a1 * x + a1 ** 3 * t + b1
    e2 = a2 * x + a2 ** 3 * t + b1
    pts = [(0.3, 0.1), (-1.0, 0.4), (2.0, -1.5)]
    out = {"points": pts}
    for name, c in {"plus": sp.Rational((a1 - a2) ** 2, (a1 + a2) ** 2), "minus": 1}.items():
        R = sp.log(sp.exp(-e1 - e2) + sp.exp(e1 - e2) + sp.exp(e2 - e1) + c * sp.exp(e1 + e2))
        u = 2 * sp.diff(R, x, 2)
        res = sp.diff(u, t) - sp.Rational(3, 2) * u * sp.diff(u, x) - sp.diff(u, x, 3) / 4
        f = sp.lambdify((x, t), res)
        g = sp.lambdify((x, t), u)
        out[name] = {"residual": [float(f(*p)) for p in pts], "u": [float(g(*p)) for p in pts]}
    return out


def rk4_decay():
    """Classic RK4 on y' = -y, hand-rolled; the amplification factor is exact."""
    out = {}
    for dt in (0.1, 0.05):
        z = -dt
        amp = 1 + z + z ** 2 / 2 + z ** 3 / 6 + z ** 4 / 24
        n = round(1.0 / dt)
        out[str(dt)] = abs(amp ** n - math.exp(-1.0))
    out["ratio"] = out["0.1"] / out["0.05"]
    return out


def calibration():
    """Data with true std 1 against a prediction claiming std 0.5."""
    rng = np.random.default_rng(99)
    mean = rng.uniform(-1.0, 1.0, 500)
    y = mean + rng.standard_normal(500)
    pred_var = np.full(500, 0.25)
    s = math.sqrt(sum((yi - mi) ** 2 / v for yi, mi, v in zip(y, mean, pred_var)) / 500)
    return {"mean": list(mean), "y": list(y), "pred_std": 0.5, "scale": s}


def main():
    oracles = {
        "conjugate": conjugate(),
        "jets": jets(),
        "manufactured_dr": manufactured_dr(),
        "ko_invariants": ko_invariants(),
        "antiderivative": antiderivative(),
        "kdv": kdv(),
        "rk4_decay": rk4_decay(),
        "calibration": calibration(),
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(oracles, indent=1) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
