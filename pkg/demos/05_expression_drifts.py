"""Drift expressions: parse, classify, and sanity-check regularity.

Drifts enter as plain strings over (t, x, y).  The classifier decides which
small-time remainder exponent applies, and the assumption checker estimates
Lipschitz and growth constants on a box by sampled quotients; estimates are
lower bounds, so everything it reports is a warning rather than a veto.
"""

from modalbridge import (Hurst, ModelSpec, classify_drift, eval_drift, parse_drift,
                         validate_assumptions)

print("=== parsing and evaluation ===")
expr = parse_drift("0.5*x + sin(t)*y - 2/(1+t)^2")
print("source:      0.5*x + sin(t)*y - 2/(1+t)^2")
print("canonical:  ", expr.to_source())
print("value at (t=0.3, x=1, y=-2):", eval_drift(expr, 0.3, 1.0, -2.0))

print()
print("=== classification drives the remainder exponent ===")
for h1, h2 in (("sin(t)", "2"), ("t*x + y + 1", "x - 2*y"), ("sin(x)", "2")):
    m = ModelSpec(Hurst(0.3), 0.5, 0.0, 0.0, 0.5, parse_drift(h1), parse_drift(h2))
    print(f"h1={h1!r:14} h2={h2!r:10} -> {classify_drift(m).value}")

print()
print("=== sampled regularity report: a well-behaved drift ===")
m = ModelSpec(Hurst(0.3), 0.0, 0.0, 0.0, 0.1,
              parse_drift("3*x"), parse_drift("cos(y)"))
print(validate_assumptions(m, ((-1.0, 1.0), (-1.0, 1.0))))

print()
print("=== and one that is not Lipschitz at y = 0 ===")
m = ModelSpec(Hurst(0.3), 0.0, 0.0, 0.0, 0.1,
              parse_drift("1"), parse_drift("sqrt(abs(y))"))
print(validate_assumptions(m, ((-1.0, 1.0), (-1.0, 1.0))))
