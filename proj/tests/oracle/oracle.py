"""Independent reference values frozen into the C++ tests.

Run with: python3 tests/oracle/oracle.py
Uses scipy / statsmodels / mpmath only; nothing here imports the library.
"""
import math

import numpy as np
from scipy import integrate, stats
import statsmodels.api as sm


def kernel():
    theta = 0.9 / 8.19
    print("theta_true", repr(theta))
    print("Q at unit contrast", repr(math.exp(-theta)))
    print("OR at unit contrast", repr(math.exp(theta)))


def conditional():
    # regress X on Y by simulation, N = 1e6, as a cross-check of (0, 0.5, 0.75)
    rng = np.random.default_rng(20240101)
    cov = np.array([[1.0, 0.5], [0.5, 1.0]])
    y, x = rng.multivariate_normal([0, 0], cov, size=1_000_000).T
    b, a = np.polyfit(y, x, 1)
    resid = x - (a + b * y)
    print("conditional (alpha, beta, sigma2) MC", a, b, resid.var())


def logistic():
    x = np.array([-2.0, -1.5, -1.0, -0.5, 0.0, 0.3, 0.7, 1.0, 1.4, 2.0, 2.5, 3.0])
    r = np.array([0, 0, 1, 0, 0, 1, 0, 1, 1, 1, 0, 1])
    fit = sm.Logit(r, sm.add_constant(x)).fit(disp=0, tol=1e-14, maxiter=100)
    print("logistic coef", [repr(c) for c in fit.params])
    fit2 = sm.Logit(r, np.column_stack([np.ones_like(x), x, x * x])).fit(disp=0, tol=1e-14, maxiter=100)
    print("logistic quadratic coef", [repr(c) for c in fit2.params])


def gauss_hermite():
    # E[1 / expit(1 + 0.7 X)] for X ~ N(-0.5, 3^2), by adaptive quadrature
    f = lambda x: (1 + math.exp(-(1 + 0.7 * x))) * stats.norm.pdf(x, -0.5, 3)
    v, _ = integrate.quad(f, -40, 40, epsabs=1e-13, epsrel=1e-13, limit=500)
    print("E[1/pi(X)]", repr(v))


def counterexample():
    s = math.sqrt(5 / 6)

    def prx(y, which):
        e = math.exp(-(y - 1) ** 2 / 12)
        return s / (s + e) if which == 1 else e / (s + e)

    def ry_missing(x, which):
        if which == 1:
            return stats.norm.pdf(x, 5, math.sqrt(5))
        return math.exp(-8 / 9) * math.sqrt(2 / 5) * math.sqrt(6 / 5) * stats.norm.pdf(x, 7 / 3, 1)

    def py(y, which):
        return stats.norm.pdf(y, 1, 1 if which == 1 else math.sqrt(1.2))

    for which in (1, 2):
        inner = lambda y: integrate.quad(lambda x: stats.norm.pdf(x, y, 1) * (1 - ry_missing(x, which)),
                                         y - 12, y + 12, epsabs=1e-13)[0]
        m, _ = integrate.quad(lambda y: py(y, which) * (1 - prx(y, which)) * inner(y), -15, 17, epsabs=1e-12)
        print("pattern (0,0) mass model", which, repr(m))


def c7_rank():
    # Exponential X (rate lambda_x = 1, eta_x = -1), exponential Y|X with
    # canonical link t = a + b x, natural parameter t, b(t) = -log(-t).
    # Identified functionals over support x_0 = 0, x_1..x_3:
    #   phi_i = t(x_i) - t(x_0) (coefficient of y in log p(y|x_i)/p(y|x_0))
    #   zeta_i = log p(x_i)/p(x_0) + b(t(x_0)) - b(t(x_i))
    # Jacobian in (a, b, eta_x) by mpmath differentiation; rank by mp SVD.
    import mpmath as mp
    mp.mp.dps = 40
    xs = [0, 1, 2, 3]

    def funcs(a, b, eta):
        out = []
        t0 = a + b * xs[0]
        for xi in xs[1:]:
            out.append((a + b * xi) - t0)
        for xi in xs[1:]:
            ti = a + b * xi
            logpx = lambda x: eta * x + mp.log(-eta)
            out.append(logpx(xi) - logpx(xs[0]) + (-mp.log(-t0)) - (-mp.log(-ti)))
        return out

    p0 = [mp.mpf(-1), mp.mpf(-0.5), mp.mpf(-1)]
    cols = []
    for k in range(3):
        def g(h, k=k):
            p = list(p0)
            p[k] += h
            return funcs(*p)
        cols.append([mp.diff(lambda h, i=i: g(h)[i], 0) for i in range(6)])
    J = mp.matrix(6, 3)
    for i in range(6):
        for k in range(3):
            J[i, k] = cols[k][i]
    sv = mp.svd_r(J, compute_uv=False)
    print("C7 singular values", [mp.nstr(v, 12) for v in sv])


if __name__ == "__main__":
    kernel()
    conditional()
    logistic()
    gauss_hermite()
    counterexample()
    c7_rank()
