"""The closed-form lifespan machinery, end to end.

Growth constants, the generic bootstrap closure with its triple-log
lifespan, the model-specific bounds (including the MHD threshold that only
exists in log space), and the saturated differential-inequality systems
with their envelope margins.  The last section shows the one negative
result this package reports: the saturated trajectories beat the textbook
envelopes built from (1 + log(1 + C), C, 2C, 5C), while envelopes with the
factor-C bookkeeping restored do hold.
"""

import math

import numpy as np

from fluidspan.bootstrap import (
    ClosureSpec,
    boussinesq_bound,
    closure_lifespan,
    growth_constants,
    iie_continuation_budget,
    integrate_saturated_system,
    mhd_certificate,
    mhd_constants,
)

print("== growth constants ==")
for c in (3.0, 10.0):
    g = growth_constants(c)
    print(f"C = {c:4.1f}: Lambda = ({g.lambda1:.6f}, {g.lambda2:g}, "
          f"{g.lambda3:g}, {g.lambda4:g})")

print("\n== generic closure, unit constants ==")
bound = closure_lifespan(ClosureSpec(kappa=(1.0,), zeta=(1.0,), c1=1, c2=1, c3=1))
print(f"C0 = {bound.c0}, delta0 = {math.exp(bound.log_delta0):.6e}")
print(f"T(delta0) = {bound.time_of_log_delta(bound.log_delta0):.12f} "
      f"(= log 2 exactly)")
for d in (1e-4, 1e-6, 1e-9):
    print(f"T({d:.0e}) = {bound.time_of_delta(d):.6f}")

print("\n== Boussinesq bound at C = 3 ==")
bss = boussinesq_bound(growth_constants(3.0))
print(f"C0 = {bss.c0:.6f}, log10(delta0) = {bss.log10_delta0:.4f}")
print(f"T(delta0) = {bss.time_of_log_delta(bss.log_delta0):.6f}")

print("\n== IIE continuation budget at C = 1 ==")
budget = iie_continuation_budget(1.0)
print(f"threshold: log10(delta0) < {budget.log10_delta0_bound:.6f}")
print(f"U budget at delta = 1e-20: {budget.budget_of_delta(1e-20):.6f}")

print("\n== MHD constants at C = 1 (log space mandatory) ==")
consts, mbound = mhd_constants(1.0)
print(f"C1 = {consts.c1}, C2 = {consts.c2:.6f}, C4 = {consts.c4:.6f}")
print(f"log10(delta0) = {consts.log10_delta0:.6e}  <- never a float")
print(f"gamma(delta0) = {consts.gamma_at_delta0:.12f}, "
      f"log f(delta0) = {consts.log_f_at_delta0:.6e} (< 0)")
print(f"certificate: {mhd_certificate(consts)}")
print(f"T(delta0) = {mbound.time_of_log_delta(mbound.log_delta0):.12f} (= 2/C1)")

print("\n== saturated systems vs envelopes ==")
for c in (3.0, 5.0, 10.0):
    rep = integrate_saturated_system("generic", c, 0.5)
    mins = {k: float(np.min(v)) for k, v in rep.margins.items()}
    print(f"C = {c:4.1f}: first crossings {rep.violations}")
    print(f"          min log-space margins {mins}")

print("\nwith the factor-C bookkeeping restored (Lambda1 -> 2C(1+log(1+C))):")
for c in (3.0, 5.0, 10.0):
    rep = integrate_saturated_system("generic", c, 0.5)
    lam1 = 2.0 * c * (1.0 + math.log1p(c))
    margin = np.exp(np.minimum(lam1 * rep.t, 700.0)) - rep.log_m
    print(f"C = {c:4.1f}: min corrected M-margin {float(np.min(margin)):+.3f} (holds)")

rep = integrate_saturated_system("mhd_simplified", 1.0, 0.25, delta=1e-3)
print(f"\nMHD simplified system, C = 1, delta = 1e-3: all envelopes hold = "
      f"{rep.all_hold()}")
