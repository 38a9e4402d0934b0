"""Blow-up certificates: which (s, gamma, beta) are covered, and how big must data be.

A certificate picks a weight w > 1 such that a weighted sum L of the rescaled
shells obeys dL/dt >= C1 L^2 - C2. Data with L(0) above sqrt(C2 / C1) then
blows up. The admissible w form an interval that depends on s, gamma, beta.
"""

from dyadic import EmptyAdmissibleSet, admissible_w, beta_max, beta_max_closed_form, make_certificate

print("largest beta still certified, inviscid, lambda = 2")
for s in (0.4, 0.5, 0.75, 1.0, 1.5):
    bm = beta_max(s)
    closed = beta_max_closed_form(s) if s <= 1 else float("nan")
    print(f"  s={s:<5} beta_max={bm.value:.6f}  closed form={closed:.6f}  attained={bm.attained}")

print("\nadmissible w as s falls toward 1/3 (beta = 0)")
for k in range(2, 9):
    s = 1 / 3 + 2.0**-k
    iv = admissible_w(s)
    print(f"  s = 1/3 + 2^-{k}: w in {'[' if iv.lo_closed else '('}{iv.lo:.5f}, {iv.hi:.5f})  measure {iv.measure:.2e}")

print("\nviscous certificates, gamma = 1/4")
for s, beta in [(1.0, 0.0), (1.0, 0.5), (0.6, 0.1), (1.0, 1.0)]:
    try:
        c = make_certificate(s, 0.25, beta)
    except EmptyAdmissibleSet:
        print(f"  s={s} beta={beta}: nothing admissible")
        continue
    print(f"  s={s} beta={beta}: w={c.w:.4f} C1={c.C1:.4f} C2={c.C2:.4f} threshold={c.threshold:.3f}")
