"""Regenerates the frozen oracle fixtures used by the stats tests.

t-tests and effect sizes are evaluated with mpmath at 50 significant digits.
ANCOVA fits solve the normal equations (X'X)b = X'y in mpmath.
Mixed-ANOVA F values come from nested least-squares model comparisons in
numpy, which shares no code path with the closed-form decomposition in Rust.

    python3 gen_oracles.py
"""

import json
import os

import mpmath as mp
import numpy as np
from scipy import stats

mp.mp.dps = 50
HERE = os.path.dirname(os.path.abspath(__file__))


def mean(xs):
    return mp.fsum(xs) / len(xs)


def var(xs):
    m = mean(xs)
    return mp.fsum((x - m) ** 2 for x in xs) / (len(xs) - 1)


def t_two_sided(t, df):
    x = df / (df + t * t)
    return mp.betainc(df / 2, mp.mpf(1) / 2, 0, x, regularized=True)


def t_fixtures(rng, count):
    out = []
    for _ in range(count):
        na = int(rng.integers(2, 31))
        nb = int(rng.integers(2, 31))
        shift = float(rng.normal(0, 1))
        scale_a = float(rng.uniform(0.2, 3.0))
        scale_b = float(rng.uniform(0.2, 3.0))
        a = [round(float(v), 6) for v in rng.normal(0, scale_a, na)]
        b = [round(float(v), 6) for v in rng.normal(shift, scale_b, nb)]
        ma, mb = mp.mpf(0), mp.mpf(0)
        A = [mp.mpf(v) for v in a]
        B = [mp.mpf(v) for v in b]
        ma, mb = mean(A), mean(B)
        va, vb = var(A), var(B)
        se2a, se2b = va / na, vb / nb
        t_w = (ma - mb) / mp.sqrt(se2a + se2b)
        df_w = (se2a + se2b) ** 2 / (se2a**2 / (na - 1) + se2b**2 / (nb - 1))
        sp2 = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2)
        t_p = (ma - mb) / mp.sqrt(sp2 * (mp.mpf(1) / na + mp.mpf(1) / nb))
        df_p = mp.mpf(na + nb - 2)
        d_s = (ma - mb) / mp.sqrt(sp2)

        m = min(na, nb)
        diffs = [A[i] - B[i] for i in range(m)]
        if m >= 2 and var(diffs) > 0:
            md, sd = mean(diffs), mp.sqrt(var(diffs))
            t_z = md / (sd / mp.sqrt(m))
            paired = {
                "t": float(t_z),
                "df": m - 1,
                "p": float(t_two_sided(t_z, mp.mpf(m - 1))),
                "d_z": float(md / sd),
            }
        else:
            paired = None
        out.append(
            {
                "a": a,
                "b": b,
                "welch": {"t": float(t_w), "df": float(df_w), "p": float(t_two_sided(t_w, df_w))},
                "pooled": {"t": float(t_p), "df": float(df_p), "p": float(t_two_sided(t_p, df_p))},
                "d_s": float(d_s),
                "paired": paired,
            }
        )
    return out


def rss(X, y):
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ beta
    return float(r @ r)


def anova_fixture(rng, n_a, n_b, interaction):
    n = n_a + n_b
    group = np.array([0] * n_a + [1] * n_b)
    subj_eff = rng.normal(0, 1.0, n)
    time_eff = np.array([0.0, 0.4, 0.7])
    data = np.zeros((n, 3))
    for s in range(n):
        for t in range(3):
            gx = interaction * (1 if group[s] == 1 and t == 1 else 0)
            data[s, t] = 4.0 + 0.5 * group[s] + time_eff[t] + gx + subj_eff[s] + rng.normal(0, 0.8)
    data = np.round(data, 4)

    y = data.reshape(-1)
    subj = np.repeat(np.arange(n), 3)
    time = np.tile(np.arange(3), n)
    g = group[subj]
    ones = np.ones(len(y))
    S = np.eye(n)[subj]
    T = np.eye(3)[time][:, 1:]
    GT = T * g[:, None]
    G = g[:, None].astype(float)

    rss_intercept = rss(ones[:, None], y)
    rss_group = rss(np.column_stack([ones, G]), y)
    rss_subj = rss(S, y)
    rss_subj_time = rss(np.column_stack([S, T]), y)
    rss_full = rss(np.column_stack([S, T, GT]), y)

    ss_group = rss_intercept - rss_group
    ss_subj = rss_group - rss_subj
    ss_time = rss_subj - rss_subj_time
    ss_inter = rss_subj_time - rss_full
    ss_err = rss_full

    df_subj = n - 2
    df_err = 2 * (n - 2)
    f_group = (ss_group / 1) / (ss_subj / df_subj)
    f_time = (ss_time / 2) / (ss_err / df_err)
    f_inter = (ss_inter / 2) / (ss_err / df_err)
    return {
        "groups": group.tolist(),
        "values": data.tolist(),
        "f_group": f_group,
        "f_time": f_time,
        "f_interaction": f_inter,
        "p_group": float(stats.f.sf(f_group, 1, df_subj)),
        "p_time": float(stats.f.sf(f_time, 2, df_err)),
        "p_interaction": float(stats.f.sf(f_inter, 2, df_err)),
        "ss_total": rss_intercept,
    }


def ancova_fixture(rng):
    n = int(rng.integers(6, 60))
    baseline = [round(float(v), 4) for v in rng.normal(4.5, 1.0, n)]
    group = [float(v) for v in rng.integers(0, 2, n)]
    if sum(group) == 0 or sum(group) == n:
        group[0] = 1.0 - group[0]
    b1 = float(rng.uniform(0.2, 1.2))
    b2 = float(rng.normal(0, 0.6))
    outcome = [round(1.0 + b1 * x + b2 * g + float(rng.normal(0, 0.7)), 4) for x, g in zip(baseline, group)]

    X = mp.matrix([[1, x, g] for x, g in zip(baseline, group)])
    y = mp.matrix(outcome)
    xtx = X.T * X
    inv = mp.inverse(xtx)
    beta = inv * (X.T * y)
    resid = y - X * beta
    rss_v = mp.fsum(resid[i] ** 2 for i in range(n))
    df = n - 3
    sigma2 = rss_v / df
    se = [mp.sqrt(sigma2 * inv[i, i]) for i in range(3)]
    t = beta[2] / se[2]
    return {
        "outcome": outcome,
        "baseline": baseline,
        "group": group,
        "beta": [float(beta[i]) for i in range(3)],
        "se": [float(v) for v in se],
        "t": float(t),
        "df": df,
        "p": float(t_two_sided(t, mp.mpf(df))),
        "rss": float(rss_v),
    }


def main():
    rng = np.random.default_rng(20261015)
    with open(os.path.join(HERE, "t_oracle.json"), "w") as fh:
        json.dump(t_fixtures(rng, 100), fh, indent=1)

    sizes = [(14, 15), (5, 5), (3, 7), (10, 12), (2, 2), (8, 3), (20, 20), (6, 9), (15, 14), (4, 11)]
    fixtures = []
    for i, (a, b) in enumerate(sizes):
        fixtures.append(anova_fixture(rng, a, b, interaction=0.3 * i))
    with open(os.path.join(HERE, "anova_oracle.json"), "w") as fh:
        json.dump(fixtures, fh, indent=1)

    with open(os.path.join(HERE, "ancova_oracle.json"), "w") as fh:
        json.dump([ancova_fixture(rng) for _ in range(50)], fh, indent=1)


if __name__ == "__main__":
    main()
