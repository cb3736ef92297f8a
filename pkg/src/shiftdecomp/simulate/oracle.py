"""Ground-truth estimands for the synthetic generators.

All generators draw W independently of Z, so the hybrid distribution
p_1(W) p_0(Z | W) is sampled by pairing target W with source Z. The loss is
the 0-1 loss of a linear threshold rule f, hence
E_d[loss | x] = f(x) + (1 - 2 f(x)) P_d(Y=1 | x).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import expit, logit, ndtr, ndtri
from scipy.stats import norm

from ..errors import ConfigError
from .dgp import DGPSpec

CHUNK = 1_000_000


def _mean_loss(spec: DGPSpec, d: int, x: np.ndarray) -> np.ndarray:
    f = spec.predictor()(x[:, :spec.m1], x[:, spec.m1:]).astype(float)
    return f + (1 - 2 * f) * spec.risk(d, x)


def aggregate_truth_mc(spec: DGPSpec, draws: int = 10_000_000, seed: int = 12345) -> dict[str, float]:
    """Lambda_W, Lambda_Z, Lambda_Y by chunked Monte Carlo."""
    sums = np.zeros(4)  # E000, E100, E110, E111
    rng = np.random.default_rng(seed)
    done = 0
    while done < draws:
        n = min(CHUNK, draws - done)
        x0 = spec.sample_x(0, n, rng)
        x1 = spec.sample_x(1, n, rng)
        hyb = np.hstack([x1[:, :spec.m1], x0[:, spec.m1:]])
        sums += [_mean_loss(spec, 0, x0).sum(), _mean_loss(spec, 0, hyb).sum(),
                 _mean_loss(spec, 0, x1).sum(), _mean_loss(spec, 1, x1).sum()]
        done += n
    e000, e100, e110, e111 = sums / draws
    return {"lambda_W": e100 - e000, "lambda_Z": e110 - e100, "lambda_Y": e111 - e110}


_GH_X, _GH_W = np.polynomial.hermite_e.hermegauss(80)
_GH_W = _GH_W / _GH_W.sum()
# the logistic-normal integrand is smooth; a short rule suffices inside loops
_GH_SHORT = np.polynomial.hermite_e.hermegauss(24)
_GH_SHORT = (_GH_SHORT[0], _GH_SHORT[1] / _GH_SHORT[1].sum())


def _gauss_expect(fn, mean, sd, rule=(_GH_X, _GH_W)):
    """E[fn(U)] for U ~ N(mean, sd^2), vectorised over mean/sd arrays."""
    nodes, weights = rule
    mean = np.asarray(mean, dtype=float)[..., None]
    sd = np.asarray(sd, dtype=float)[..., None]
    return (fn(mean + sd * nodes) * weights).sum(axis=-1)


def _check_gaussian(spec: DGPSpec):
    if spec.kind != "gaussian_logistic" or spec.predictor_coef not in (None, spec.source_coef):
        raise ConfigError("subset-value oracles need gaussian_logistic with the source Bayes "
                          "classifier; supply truths for other generators")


def _zero_one_given_u(u):
    # E_0[loss | beta0 . x = u] for the source Bayes classifier
    return expit(-np.abs(u))


def _kinked_expect(fn, mean, sd):
    """E[fn(U)], U ~ N(mean, sd^2), for fn with a kink or jump at 0.

    Gauss-Hermite converges slowly across the break, so integrate each
    half-line adaptively.
    """
    def one(m, s):
        dens = lambda u: fn(u) * norm.pdf(u, m, s)
        return quad(dens, -np.inf, 0.0, epsabs=1e-12)[0] + quad(dens, 0.0, np.inf, epsabs=1e-12)[0]

    return np.vectorize(one)(mean, sd)


def aggregate_truth_quadrature(spec: DGPSpec) -> dict[str, float]:
    """Exact (quadrature) aggregate terms for gaussian_logistic."""
    _check_gaussian(spec)
    b0, b1 = spec.coef(0), spec.coef(1)
    m0, m1 = np.asarray(spec.source_mean), np.asarray(spec.target_mean)
    hyb = np.concatenate([m1[:spec.m1], m0[spec.m1:]])
    sd0 = np.linalg.norm(b0)
    e000 = float(_kinked_expect(_zero_one_given_u, b0 @ m0, sd0))
    e100 = float(_kinked_expect(_zero_one_given_u, b0 @ hyb, sd0))
    e110 = float(_kinked_expect(_zero_one_given_u, b0 @ m1, sd0))
    # E_111: (u, v) = (b0.x, b1.x) jointly normal under the target
    cov = np.array([[b0 @ b0, b0 @ b1], [b0 @ b1, b1 @ b1]])
    mu = np.array([b0 @ m1, b1 @ m1])
    cond_sd = np.sqrt(max(cov[1, 1] - cov[0, 1] ** 2 / cov[0, 0], 0.0))

    def loss_given_u(u):
        f = float(u > 0)
        p = _gauss_expect(expit, mu[1] + cov[0, 1] / cov[0, 0] * (u - mu[0]), cond_sd)
        return f + (1 - 2 * f) * float(p)

    e111 = float(_kinked_expect(loss_given_u, mu[0], np.sqrt(cov[0, 0])))
    return {"lambda_W": e100 - e000, "lambda_Z": e110 - e100, "lambda_Y": e111 - e110}


def covariate_value_truth(spec: DGPSpec, subset) -> dict[str, float]:
    """v_Z(s) with numerator and denominator, by nested quadrature (gaussian_logistic).

    mu_{s0}(w) averages the source loss mean over Z_s from the target and
    Z_{-s} from the source; with independent features the inner integral is
    one-dimensional in u = beta0 . x.
    """
    _check_gaussian(spec)
    b0 = spec.coef(0)
    m0, m1 = np.asarray(spec.source_mean), np.asarray(spec.target_mean)
    k = spec.m1
    bw, bz = b0[:k], b0[k:]
    zmix = m0[k:].copy()
    zmix[list(subset)] = m1[k:][list(subset)]
    sd = np.linalg.norm(bz)
    # outer expectation over W ~ target, one GH node per W coordinate (m1 <= 1 here)
    if k == 0:
        wvals, wwts = np.zeros((1, 0)), np.ones(1)
    elif k == 1:
        wvals, wwts = (m1[0] + _GH_X)[:, None], _GH_W
    else:
        raise ValueError("covariate oracle supports at most one W column")
    base = wvals @ bw
    mu00 = _kinked_expect(_zero_one_given_u, base + bz @ m0[k:], sd)
    mu10 = _kinked_expect(_zero_one_given_u, base + bz @ m1[k:], sd)
    mus0 = _kinked_expect(_zero_one_given_u, base + bz @ zmix, sd)
    den = float(((mu00 - mu10) ** 2 * wwts).sum())
    num = float(((mus0 - mu10) ** 2 * wwts).sum())
    return {"num": num, "den": den, "value": 1.0 - num / den}


_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)


def _bin_bounds(q: np.ndarray, B: int) -> tuple[np.ndarray, np.ndarray]:
    """Logit-scale interval of the risk bin containing each q."""
    k = np.minimum(np.floor(q * B + 0.5), B)
    lo = (k - 0.5) / B
    hi = (k + 0.5) / B
    with np.errstate(divide="ignore"):
        L = np.where(lo <= 0, -np.inf, logit(np.clip(lo, 1e-300, 1)))
        H = np.where(hi >= 1, np.inf, logit(np.clip(hi, 0, 1 - 1e-16)))
    return L, H


def _truncated_expect(alpha_lo, alpha_hi, fn):
    """E[fn(A)] for standard normal A truncated to [alpha_lo, alpha_hi),
    by Gauss-Legendre in probability space (upper tail mirrored for accuracy)."""
    flip = alpha_lo > 0
    lo = np.where(flip, -alpha_hi, alpha_lo)
    hi = np.where(flip, -alpha_lo, alpha_hi)
    plo, phi = ndtr(lo), ndtr(hi)
    mid, half = (plo + phi) / 2, (phi - plo) / 2
    u = mid[:, None] + half[:, None] * _GL_X
    a = ndtri(np.clip(u, 1e-300, 1 - 1e-16))
    a = np.where(flip[:, None], -a, a)
    return (fn(a) * _GL_W).sum(axis=1) / 2


def outcome_value_truth(spec: DGPSpec, subset, B: int = 20, outer: int = 1_000_000,
                        seed: int = 2024) -> dict[str, float]:
    """v_{Y,bin}(s) for gaussian_logistic.

    For each target draw x, the shifted risk averages P_1(Y=1 | w, z_s, Z~_{-s})
    over Z~_{-s} ~ p_1 restricted to the source-risk bin of x. Writing
    a = beta0_{-s} . Z~ and b = beta1_{-s} . Z~ (jointly normal), that is a
    truncated-normal integral over a with b | a normal.
    """
    _check_gaussian(spec)
    b0, b1 = spec.coef(0), spec.coef(1)
    m1 = np.asarray(spec.target_mean)
    k = spec.m1
    keep = list(range(k)) + [k + j for j in subset]
    rest = [c for c in range(spec.p) if c not in keep]
    rng = np.random.default_rng(seed)
    num = den = 0.0
    done = 0
    ma, mb = b0[rest] @ m1[rest], b1[rest] @ m1[rest]
    saa, sbb, sab = b0[rest] @ b0[rest], b1[rest] @ b1[rest], b0[rest] @ b1[rest]
    sa = np.sqrt(saa)
    cond_sd = np.sqrt(max(sbb - sab ** 2 / saa, 0.0)) if saa > 0 else np.sqrt(sbb)
    while done < outer:
        n = min(4_000, outer - done)
        x = spec.sample_x(1, n, rng)
        u0 = x @ b0
        f = (u0 > 0).astype(float)
        mu0 = f + (1 - 2 * f) * expit(u0)
        mu1 = f + (1 - 2 * f) * expit(x @ b1)
        if not rest:
            ps = expit(x @ b1)
        else:
            c0, c1 = x[:, keep] @ b0[keep], x[:, keep] @ b1[keep]
            L, H = _bin_bounds(expit(u0), B)
            alo, ahi = (L - c0 - ma) / sa, (H - c0 - ma) / sa

            def inner(a, c1=c1):
                bm = mb + sab / sa * a  # E[b | standardized a]
                return _gauss_expect(expit, c1[:, None] + bm, np.full(bm.shape, cond_sd),
                                     _GH_SHORT)

            ps = _truncated_expect(alo, ahi, inner)
        mus = f + (1 - 2 * f) * ps
        num += ((mu1 - mus) ** 2).sum()
        den += ((mu1 - mu0) ** 2).sum()
        done += n
    num, den = num / outer, den / outer
    return {"num": num, "den": den, "value": 1.0 - num / den}


def outcome_value_bruteforce(spec: DGPSpec, subset, B: int = 20, outer: int = 20_000,
                             pool: int = 4_000, seed: int = 7) -> dict[str, float]:
    """v_{Y,bin}(s) by direct simulation of the partial outcome shift.

    For each target draw, phantom Z_{-s} come from a fresh target pool; pool
    members whose source-risk bin differs from the draw's are rejected and the
    shifted risk is the mean target risk over the accepted phantoms.
    """
    rng = np.random.default_rng(seed)
    k = spec.m1
    keep = list(range(k)) + [k + j for j in subset]
    rest = [c for c in range(spec.p) if c not in keep]
    x = spec.sample_x(1, outer, rng)
    u0 = x @ spec.coef(0)
    f = (u0 > 0).astype(float)
    qb = np.floor(expit(u0) * B + 0.5)
    mu0 = f + (1 - 2 * f) * expit(u0)
    mu1 = f + (1 - 2 * f) * expit(x @ spec.coef(1))
    ps = np.empty(outer)
    step = max(1, 2_000_000 // pool)
    for a in range(0, outer, step):
        rows = slice(a, min(a + step, outer))
        xr = x[rows]
        phantom = spec.sample_x(1, pool, rng)[:, rest]
        xx = np.repeat(xr[:, None, :], pool, axis=1)
        xx[:, :, rest] = phantom[None]
        qq = np.floor(expit(xx @ spec.coef(0)) * B + 0.5)
        ok = qq == qb[rows, None]
        r1 = expit(xx @ spec.coef(1))
        cnt = ok.sum(axis=1)
        own = expit(xr @ spec.coef(1))
        ps[rows] = np.where(cnt > 0, (r1 * ok).sum(axis=1) / np.maximum(cnt, 1), own)
    mus = f + (1 - 2 * f) * ps
    num = float(np.mean((mu1 - mus) ** 2))
    den = float(np.mean((mu1 - mu0) ** 2))
    return {"num": num, "den": den, "value": 1.0 - num / den}


@lru_cache(maxsize=None)
def gaussian_truths(subsets: tuple[tuple[int, ...], ...] = ((0,), (1,), (2,)), B: int = 20,
                    outer: int = 1_000_000) -> dict[str, float]:
    """All coverage-experiment truths for the default gaussian_logistic DGP."""
    from .dgp import gaussian_logistic

    spec = gaussian_logistic()
    out = dict(aggregate_truth_quadrature(spec))
    for s in subsets:
        key = "{" + ",".join(str(j + 1) for j in s) + "}"
        out[f"vz:{key}"] = covariate_value_truth(spec, s)["value"]
        out[f"vy:{key}"] = outcome_value_truth(spec, s, B, outer)["value"]
    return out


def mixture_covariate_value_truth(spec: DGPSpec, subset, grid: int = 1201) -> dict[str, float]:
    """v_Z(s) for covariate_mixture by grid integration over (Z1, Z2).

    Z2 | Z1 is the same two-component mixture in both domains, so the
    {Z1}-partial shift reproduces the full covariate shift and has value 1.
    """
    if spec.kind != "covariate_mixture":
        raise ConfigError("mixture oracle needs the covariate_mixture generator")
    s = tuple(sorted(subset))
    b = np.asarray(spec.predictor_coef or spec.source_coef, dtype=float)
    b0 = spec.coef(0)
    m0 = spec.source_mean[0] if spec.source_mean else 0.0
    m1 = spec.target_mean[0] if spec.target_mean else 0.0
    half, sd = spec.mixture_gap / 2, spec.mixture_sd
    lo, hi = min(m0, m1) - 7 - half - 4 * sd, max(m0, m1) + 7 + half + 4 * sd
    z = np.linspace(lo, hi, grid)
    dz = z[1] - z[0]
    p1z1, p0z1 = norm.pdf(z, m1) * dz, norm.pdf(z, m0) * dz
    # cond[i, j] = P(Z2 = z_j | Z1 = z_i)
    cond = 0.5 * (norm.pdf(z[None, :], z[:, None] - half, sd) + norm.pdf(z[None, :], z[:, None] + half, sd)) * dz
    j0, j1 = p0z1[:, None] * cond, p1z1[:, None] * cond
    j0, j1 = j0 / j0.sum(), j1 / j1.sum()
    if s == (0,) or s == (0, 1):
        mix = j1
    elif s == ():
        mix = j0
    else:  # Z2 from the target marginal, Z1 | Z2 from the source
        z1_given_z2 = j0 / np.maximum(j0.sum(axis=0, keepdims=True), 1e-300)
        mix = z1_given_z2 * j1.sum(axis=0, keepdims=True)
    num = den = 0.0
    for w, wt in zip(_GH_X, _GH_W):
        u = b0[0] * w + b0[1] * z[:, None] + b0[2] * z[None, :]
        f = (b[0] * w + b[1] * z[:, None] + b[2] * z[None, :] > 0).astype(float)
        mu0 = f + (1 - 2 * f) * expit(u)
        mu10, mu00, mus0 = (j1 * mu0).sum(), (j0 * mu0).sum(), (mix * mu0).sum()
        num += wt * (mus0 - mu10) ** 2
        den += wt * (mu00 - mu10) ** 2
    return {"num": float(num), "den": float(den), "value": 1.0 - float(num / den)}
