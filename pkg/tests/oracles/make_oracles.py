"""Regenerate oracle_values.json from independent high-precision computations.

Nothing here imports hlx. Fields are trigonometric polynomials held as
{wavevector: coefficient} dictionaries, so products, derivatives and
mollification (a radial multiplier per mode) are exact mode by mode.
Run: python tests/oracles/make_oracles.py
"""

import json
import os
from collections import defaultdict

import mpmath as mp

mp.mp.dps = 30
HERE = os.path.dirname(os.path.abspath(__file__))


def bump_constant():
    mass = 4 * mp.pi * mp.quad(lambda r: mp.e ** (-1 / (1 - r**2)) * r**2, [0, 0.5, 0.9, 1])
    return 1 / mass


C_STD = bump_constant()


def smoothstep(t):
    if t <= 0:
        return mp.mpf(0)
    if t >= 1:
        return mp.mpf(1)
    a, b = mp.e ** (-1 / t), mp.e ** (-1 / (1 - t))
    return a / (a + b)


def shell_profile(s):
    return 1 - smoothstep((s - mp.mpf(3) / 4) / (mp.mpf(1) / 2))


def sinc(x):
    return mp.mpf(1) if x == 0 else mp.sin(x) / x


def multiplier(kind, eps, q, mu=mp.mpf("0.5")):
    eps, q = mp.mpf(eps), mp.mpf(q)
    if kind == "standard_radial":
        f = lambda r: C_STD * mp.e ** (-1 / (1 - (r / eps) ** 2)) / eps**3
        pts = [0, eps / 2, 0.9 * eps, eps]
        return 4 * mp.pi * mp.quad(lambda r: f(r) * r**2 * sinc(q * r), pts)
    if kind == "ball_indicator":
        x = q * eps
        return 3 * (mp.sin(x) - x * mp.cos(x)) / x**3
    g = lambda r: shell_profile(1 + (r / eps - 1) / mu)
    a, b = eps * (1 - mu / 4), eps * (1 + mu / 4)
    mass = 4 * mp.pi * mp.quad(lambda r: g(r) * r**2, [0, a, eps, b])
    return 4 * mp.pi * mp.quad(lambda r: g(r) * r**2 * sinc(q * r), [0, a, eps, b]) / mass


class Trig(dict):
    """Scalar trigonometric polynomial sum c_k exp(i k.x)."""

    def __add__(self, o):
        out = Trig(self)
        for k, v in o.items():
            out[k] = out.get(k, 0) + v
        return out

    def __neg__(self):
        return Trig({k: -v for k, v in self.items()})

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o):
        if not isinstance(o, Trig):
            return Trig({k: v * o for k, v in self.items()})
        out = defaultdict(lambda: mp.mpc(0))
        for k1, v1 in self.items():
            for k2, v2 in o.items():
                out[tuple(a + b for a, b in zip(k1, k2))] += v1 * v2
        return Trig(out)

    __rmul__ = __mul__

    def d(self, axis):
        return Trig({k: 1j * k[axis] * v for k, v in self.items()})

    def moll(self, m):
        return Trig({k: v * m(k) for k, v in self.items()})

    def at(self, x):
        return sum(v * mp.e ** (1j * sum(a * b for a, b in zip(k, x))) for k, v in self.items())

    def l2sq(self):
        return (2 * mp.pi) ** 3 * sum(abs(v) ** 2 for v in self.values())


def sin_(axis, m=1):
    k = [0, 0, 0]
    k[axis] = m
    return Trig({tuple(k): mp.mpc(0, -0.5), tuple(-v for v in k): mp.mpc(0, 0.5)})


def cos_(axis, m=1):
    k = [0, 0, 0]
    k[axis] = m
    return Trig({tuple(k): mp.mpc(0.5), tuple(-v for v in k): mp.mpc(0.5)})


def curl(u):
    return [u[2].d(1) - u[1].d(2), u[0].d(2) - u[2].d(0), u[1].d(0) - u[0].d(1)]


def dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def div_rows(t):
    # (div T)_j = d_i T_ij
    return [t[0][j].d(0) + t[1][j].d(1) + t[2][j].d(2) for j in range(3)]


def outer(a, b):
    return [[a[i] * b[j] for j in range(3)] for i in range(3)]


def double_dot_grad(a, b, f):
    # a_i b_j d_i f_j
    out = Trig()
    for i in range(3):
        for j in range(3):
            out = out + a[i] * b[j] * f[j].d(i)
    return out


def defects(u, m):
    w = curl(u)
    M = lambda f: f.moll(m)
    Mv = lambda v: [M(c) for c in v]
    wu = dot(w, u)
    uu = dot(u, u)
    grad = lambda f: [f.d(0), f.d(1), f.d(2)]
    d1 = -(M(wu * u[0]).d(0) + M(wu * u[1]).d(1) + M(wu * u[2]).d(2))
    d1 = d1 + dot(u, grad(M(wu)))
    d1 = d1 + dot(u, div_rows([[M(x) for x in row] for row in outer(u, w)]))
    d1 = d1 + dot(w, div_rows([[M(x) for x in row] for row in outer(u, u)]))
    d1 = d1 - double_dot_grad(u, w, Mv(u)) - double_dot_grad(u, u, Mv(w))
    d2 = -(M(uu * w[0]).d(0) + M(uu * w[1]).d(1) + M(uu * w[2]).d(2))
    d2 = d2 + dot(w, grad(M(uu)))
    d2 = d2 + 2 * dot(u, div_rows([[M(x) for x in row] for row in outer(w, u)]))
    d2 = d2 - 2 * double_dot_grad(w, u, Mv(u))
    return d1, d2


def main():
    out = {}
    out["standard_radial_constant"] = float(C_STD)
    out["abc_helicity"] = float(3 * (2 * mp.pi) ** 3)
    eps = 0.3
    qs = [1, mp.sqrt(2), mp.sqrt(3), 2, 3, mp.sqrt(14)]
    out["multiplier_eps"] = eps
    out["multiplier_q"] = [float(q) for q in qs]
    out["multipliers"] = {
        kind: [float(multiplier(kind, eps, q)) for q in qs]
        for kind in ("standard_radial", "shell", "ball_indicator")
    }

    # u = (sin y + cos 2z, sin z, sin x), divergence-free, not Beltrami
    u = [sin_(1) + cos_(2, 2), sin_(2), sin_(0)]
    cache = {}

    def m(k):
        q2 = sum(v * v for v in k)
        if q2 not in cache:
            cache[q2] = multiplier("standard_radial", eps, mp.sqrt(q2))
        return cache[q2]

    d1, d2 = defects(u, m)
    pts = [(0.1, 0.2, 0.3), (1.0, 2.0, 3.0), (4.0, 0.5, 5.5), (2.2, 3.3, 0.7)]
    out["defect_field"] = "u = (sin y + cos 2z, sin z, sin x), standard_radial, eps = 0.3"
    out["defect_points"] = pts
    out["d1_values"] = [float(mp.re(d1.at(p))) for p in pts]
    out["d2_values"] = [float(mp.re(d2.at(p))) for p in pts]
    out["d1_l2"] = float(mp.sqrt(d1.l2sq()))
    out["d2_l2"] = float(mp.sqrt(d2.l2sq()))
    with open(os.path.join(HERE, "oracle_values.json"), "w") as fh:
        json.dump(out, fh, indent=2)
        fh.write("\n")


if __name__ == "__main__":
    main()
