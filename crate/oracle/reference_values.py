"""High-precision reference values for the frozen test constants.

Independent of the Rust code: every quantity is built from the OU covariance
and plain determinants in mpmath. Run with `python3 oracle/reference_values.py`.
"""
from mpmath import mp, mpf, exp, log, matrix, det

mp.dps = 40

SAMPLES = [1, 3, 5, 7, 9, 11, 13, 15, 17, 19]
RECEIVES = [2, 4.2, 6.5, 8, 10.7, 12.1, 14.7, 16.2, 18.3, 20.5]
GOOD = [9.62, 19.01, 8.29, 7.47, 8, 15.29, 8.16, 9.52, 7.08, 7.89]
BAD = [0.11, 0.13, 0.1, 0.13, 0.13, 0.14, 0.14, 0.14, 0.12, 0.1]


def model(kappa, sigma=10):
    c = mpf(sigma) ** 2 / (2 * kappa)
    var = lambda t: c * (1 - exp(-2 * kappa * t))
    cov = lambda a, b: c * (exp(-kappa * abs(a - b)) - exp(-kappa * (a + b)))
    return c, var, cov


def voi(kappa, times, gammas, t):
    """I(X_t; Y) from the joint covariance of (Y, X_t)."""
    _, var, cov = model(kappa)
    n = len(times)
    m = matrix(n + 1, n + 1)
    for i in range(n):
        for j in range(n):
            m[i, j] = cov(times[i], times[j]) + (var(times[i]) / gammas[i] if i == j else 0)
        m[i, n] = m[n, i] = cov(times[i], t)
    m[n, n] = var(t)
    return log(var(t) * det(m[0:n, 0:n]) / det(m)) / 2


def v_ou(kappa, tn, t):
    return log((1 - exp(-2 * kappa * t)) / (1 - exp(-2 * kappa * (t - tn)))) / 2


def v_single(kappa, tn, t, g):
    return v_ou(kappa, tn, t) - log(1 + (1 - exp(-2 * kappa * tn)) / ((1 + g) * (exp(2 * kappa * (t - tn)) - 1))) / 2


def v_asymptotic(kappa, delta, g):
    return log(1 + 1 / (((1 + g) / g) * exp(2 * kappa * delta) - 1)) / 2


def i_xy(kappa, times, gammas):
    """I(X; Y) = ½ ln det(Σ_X + Σ_N) / det Σ_N."""
    _, var, cov = model(kappa)
    n = len(times)
    y = matrix(n, n)
    noise_det = mpf(1)
    for i in range(n):
        for j in range(n):
            y[i, j] = cov(times[i], times[j])
        nv = var(times[i]) / gammas[i]
        y[i, i] += nv
        noise_det *= nv
    return log(det(y) / noise_det) / 2


k = mpf("0.15")
c, var, cov = model(k)
g15 = mpf("1.5")
print("stationary variance", c)
print("Var[X_19]", var(19))
print("cond var 19 -> 21", c * (1 - exp(-2 * k * 2)))
print("cond mean 19 -> 21 from x = 4", 4 * exp(-k * 2))
print("Cov[X_1, X_3]", cov(1, 3))
print("noise variance at 19, gamma 1.5", var(19) / g15)
print("joint entries", var(19) * (1 + 1 / g15), var(21), cov(19, 21))
print("v_OU(19, 21)", v_ou(k, 19, 21))
print("single observation, t = 21", v_single(k, 19, 21, g15))
print("asymptotic, delta = 2", v_asymptotic(k, 2, g15))
for tn in [19, 50, 100, 200]:
    print("  asymptotic gap at t_n =", tn, abs(v_single(k, tn, tn + 2, g15) - v_asymptotic(k, 2, g15)))
print("gamma threshold", (exp(-2 * k * 2) - exp(-2 * k * 21)) / (1 - exp(-2 * k * 2)))
print("v_AGN(1.5)", log(mpf("2.5")) / 2, "v_AGN(0.1)", log(mpf("1.1")) / 2)
print("bivariate MI, rho = 0.5", -log(1 - mpf("0.25")) / 2)
for kk in ["0.05", "0.1", "0.15", "0.2", "0.4"]:
    print("  single observation at t = 21, kappa =", kk, v_single(mpf(kk), 19, 21, g15))
print("all ten updates, t = 21", voi(k, SAMPLES, [g15] * 10, 21))
print("first four updates, t = 10", voi(k, SAMPLES[:4], [g15] * 4, 10))

# Window sweep at kappa = 0.025, t = 21: ratio v / v_OU for the last w updates.
k5 = mpf("0.025")
for g in ["0.1", "0.5", "1.5", "5", "20"]:
    ratios = [voi(k5, SAMPLES[10 - w:], [mpf(g)] * w, 21) / v_ou(k5, 19, 21) for w in range(1, 11)]
    print("window sweep gamma", g, [round(float(r), 5) for r in ratios], "w10 - w9", float(ratios[9] - ratios[8]))

# Bound sides on the grid 2.0, 2.05, ..., 21.5 for both SNR sets.
for name, gs in [("good", GOOD), ("bad", BAD)]:
    latent_side = 0
    max_gap = 0
    for i in range(391):
        t = mpf(2) + mpf(i) / 20
        n = sum(1 for r in RECEIVES if r <= t + mpf("1e-12"))
        gam = [mpf(x) for x in gs[:n]]
        a = v_ou(k, SAMPLES[n - 1], t)
        b = i_xy(k, SAMPLES[:n], gam)
        latent_side += a <= b
        max_gap = max(max_gap, min(a, b) - voi(k, SAMPLES[:n], gam, t))
    print(name, "SNR set: latent side at", latent_side, "of 391 points; max bound gap", float(max_gap))
