"""Reference values computed independently of the package.

* Normal CDF and demolition hazards at high precision with mpmath.
* A 3-year ledger worked out by hand with decimal arithmetic.
* A brute-force turnover model written with plain lists and loops.
"""
from __future__ import annotations

import math

import mpmath

mpmath.mp.dps = 50


def normal_cdf(t, mean, sd):
    t, mean, sd = mpmath.mpf(t), mpmath.mpf(mean), mpmath.mpf(sd)
    return 0.5 * mpmath.erfc(-(t - mean) / (sd * mpmath.sqrt(2)))


def hazard(t, mean, sd):
    """(P_T - P_{T-1}) / (1 - P_{T-1}) evaluated literally.

    1 - P is about exp(-z^2 / 2) deep in the upper tail, so the working
    precision grows with z to keep 30 significant digits in it.
    """
    z = max(0.0, (float(t) - 1 - float(mean)) / float(sd))
    with mpmath.workdps(60 + int(z * z / (2 * math.log(10)))):
        p_t = normal_cdf(t, mean, sd)
        p_prev = normal_cdf(t - 1, mean, sd)
        return (p_t - p_prev) / (1 - p_prev)


# One cohort of 1 m2 built in 2000, demand held at 1 m2, hazards 0.1, 0.2
# and 1.0 at ages 1, 2, 3 for both new and renovated floorspace, alpha 0.5.
#
# 2001  DB = 0.1                          RB = 0.05
#       reference rebuilt by 0.1, R = 0.05, stock = 1 - 0.05 = 0.95
#       NC = 0.95 - (1 - 0.1) = 0.05
# 2002  DB = 0.9*0.2 + 0.1*0.1 = 0.19     DRB = 0.05*0.1 = 0.005
#       RB = 0.095, R = 0.045 + 0.095 = 0.14, stock = 0.86
#       NC = 0.86 - (0.95 - 0.19) = 0.10
# 2003  DB = 0.72 + 0.09*0.2 + 0.19*0.1 = 0.757
#       DRB = 0.045*0.2 + 0.095*0.1 = 0.0185
#       RB = 0.3785, R = 0.036 + 0.0855 + 0.3785 = 0.5, stock = 0.5
#       NC = 0.5 - (0.86 - 0.757) = 0.397
HAND_HAZARDS = (0.0, 0.1, 0.2, 1.0)
HAND_ALPHA = 0.5
HAND_LEDGER = {
    2000: dict(stock_total=1.0, demolished=0.0, renovated=0.0, demolished_renovated=0.0,
               new_construction=0.0, renovated_stock=0.0),
    2001: dict(stock_total=0.95, demolished=0.1, renovated=0.05, demolished_renovated=0.0,
               new_construction=0.05, renovated_stock=0.05),
    2002: dict(stock_total=0.86, demolished=0.19, renovated=0.095, demolished_renovated=0.005,
               new_construction=0.10, renovated_stock=0.14),
    2003: dict(stock_total=0.5, demolished=0.757, renovated=0.3785, demolished_renovated=0.0185,
               new_construction=0.397, renovated_stock=0.5),
}


def _hazard_fn(mean):
    """Hazard by age for a normal lifetime with sd = mean / 3, cut off at mean + 5 sd."""
    sd = mean / 3.0
    horizon = math.ceil(mean + 5 * sd)
    cache = {}

    def surv(t):
        return 0.5 * math.erfc((t - mean) / (sd * math.sqrt(2.0)))

    def h(age):
        if age <= 0:
            return 0.0
        if age >= horizon:
            return 1.0
        if age not in cache:
            prev = surv(age - 1)
            cache[age] = 1.0 if prev <= 0 else min(1.0, max(0.0, 1.0 - surv(age) / prev))
        return cache[age]

    return h


def brute_force_run(demand, opening, lifetime_of, cycle, alpha1, alpha2=lambda year: 0.0, hazards=None):
    """Turnover ledger by explicit loops.

    demand: {year: m2}; opening: [(vintage, m2)] new-build cohorts at the
    first year; lifetime_of(vintage) -> mean lifetime; cycle: mean of the
    renovated lifetime; alpha1/alpha2: year -> rate. ``hazards`` overrides
    every lifetime with a fixed hazard list indexed by age.
    """
    fns = {}

    def h(mean, age):
        if hazards is not None:
            return hazards[age] if age < len(hazards) else 1.0
        if mean not in fns:
            fns[mean] = _hazard_fn(mean)
        return fns[mean](age)

    years = sorted(demand)
    new = [[v, a, lifetime_of(v)] for v, a in opening]
    gen1, gen2 = [], []
    stock = sum(a for _, a, _ in new)
    rows = {years[0]: dict(stock_total=stock, demolished=0.0, renovated=0.0, demolished_renovated=0.0,
                           new_construction=0.0, renovated_stock=0.0, written_off=0.0)}
    for year in years[1:]:
        db = 0.0
        for c in new:
            out = c[1] * h(c[2], year - c[0])
            c[1] -= out
            db += out
        drb1 = 0.0
        for c in gen1:
            out = c[1] * h(cycle, year - c[0])
            c[1] -= out
            drb1 += out
        drb2 = 0.0
        for c in gen2:
            out = c[1] * h(cycle, year - c[0])
            c[1] -= out
            drb2 += out
        rb1 = alpha1(year) * db
        rb2 = alpha2(year) * drb1
        gen1.append([year, rb1])
        gen2.append([year, rb2])
        renovated = sum(c[1] for c in gen1) + sum(c[1] for c in gen2)

        reference = sum(c[1] for c in new)
        if demand[year] > reference:
            new.append([year, demand[year] - reference, lifetime_of(year)])
            reference = demand[year]
        target = reference - renovated
        written_off = max(0.0, db - stock)
        floor = stock - db + written_off
        nc = max(0.0, target - floor)
        stock = max(target, floor)
        rows[year] = dict(stock_total=stock, demolished=db, renovated=rb1 + rb2,
                          demolished_renovated=drb1 + drb2, new_construction=nc,
                          renovated_stock=renovated, written_off=written_off)
    return rows
