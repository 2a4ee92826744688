"""Regenerate the frozen oracle constants used by the tests.

Independent of the package: plain mpmath at 30 digits.  Run
``python tests/oracle_values.py`` and compare with the constants in the
test modules.
"""

import mpmath as mp

mp.mp.dps = 30


def state(n):
    n = mp.mpf(n)
    return 1 + 2 * n, 2 * mp.sqrt(n * (n + 1))


def dawson(x):
    return mp.sqrt(mp.pi) / 2 * mp.exp(-x * x) * mp.erfi(x)


def values():
    c2, s2 = state(10)
    out = {
        "R_N10": mp.asinh(mp.sqrt(10)),
        "S2_N10": s2,
        "COV_N10": s2 / 2,
        "RATIO_11": mp.exp(-c2 + s2),
        "E00_N10": 2 / mp.pi * mp.atan(s2),
        "E11_N10": 2 / mp.pi * mp.atan(s2) * mp.exp(-c2 * mp.mpf("0.02") + 2 * s2 * mp.mpf("0.01")),
        "ERF1": mp.erf(1),
        "DAWSON_01": dawson(mp.mpf("0.1")),
        "R_COHERENT": 2 / mp.sqrt(mp.pi) * mp.exp(-mp.mpf("0.09")) * dawson(mp.mpf("0.7")),
        "PLATEAU": 1 + 2 * mp.mpf(2) ** (-mp.mpf(1) / 3) - mp.mpf(2) ** (-mp.mpf(4) / 3),
    }
    # B(d) = C (1 + 2 e^{-c2 u} - e^{-2 (c2 + s2) u}), u = d^2; dB/du = 0
    u = mp.log((c2 + s2) / c2) / (c2 + 2 * s2)
    out["DSTAR_N10"] = mp.sqrt(u)
    out["BSTAR_N10"] = out["E00_N10"] * (1 + 2 * mp.exp(-c2 * u) - mp.exp(-2 * (c2 + s2) * u))
    # E[sgn(X - a) sgn(Y - b)], unit bivariate normal with correlation rho
    rho, a, b = mp.mpf("0.6"), mp.mpf("0.3"), mp.mpf("-0.2")
    phi = lambda x: mp.exp(-x * x / 2) / mp.sqrt(2 * mp.pi)
    both = mp.quad(lambda x: phi(x) * mp.ncdf((b - rho * x) / mp.sqrt(1 - rho ** 2)), [-mp.inf, a])
    out["ORTHANT_SHIFTED"] = 1 - 2 * mp.ncdf(a) - 2 * mp.ncdf(b) + 4 * both
    return out


if __name__ == "__main__":
    for k, v in values().items():
        print(f"{k} = {mp.nstr(v, 30)}")
