"""High-precision reference values frozen into the unit tests (mpmath, 30 digits)."""
import mpmath as mp

mp.mp.dps = 30


def E(w, T):
    return w / 2 * mp.coth(w / (2 * T))


def adiabat_ode(w0, w1, tau, v0):
    # (H, L, D, W_f) along omega(t) = w0 exp(alpha t)
    a = mp.log(mp.mpf(w1) / w0) / tau

    def f(t, y):
        w2 = (w0 * mp.e ** (a * t)) ** 2
        return [a * (y[0] - y[1]), -a * (y[0] - y[1]) - w2 * y[2], 4 * y[1], -a * y[1]]

    return mp.odefun(f, 0, [mp.mpf(x) for x in v0] + [0])(tau)


def main():
    n = 1 / (mp.e - 1)
    rows = {
        "E(2,5)": E(2, 5),
        "E(1,1)": E(1, 1),
        "S thermal (1,1)": (n + 1) * mp.log(n + 1) - n * mp.log(n),
        "isochore H (tau 6, Gamma .03, H0 10)": mp.e ** -0.18 * (10 - E(2, 5)) + E(2, 5),
        "heat current": -0.03 * (E(2, 4) - E(2, 5)),
        "sudden 1->2 (H, L)": (2.5 * E(1, 1), -1.5 * E(1, 1)),
        "G_W fig4": (0.05 - 0.025) / 2 * (mp.coth(0.025) - mp.coth(0.05)),
        "P_q fig4, Gamma .6, tau 120": 0.025 * (mp.coth(0.025) - mp.coth(0.05)) * mp.tanh(0.15 * 60) / 240,
        "ftf root c=.03": mp.findroot(lambda x: 2 * mp.sinh(x) - 2 * x - mp.mpf("0.03"), 0.45),
        "W full equilibration": -(E(2, 5) / 2 - E(1, 1)),
        "adiabat 2->1 tau .7 (H, L, D, W_f)": adiabat_ode(mp.mpf(2), 1, mp.mpf("0.7"), ["3", "0.5", "0.2"]),
    }
    for k, v in rows.items():
        print(f"{k:40s} {v}")


if __name__ == "__main__":
    main()
