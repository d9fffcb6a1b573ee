import math

import numpy as np
import pytest

from modalbridge.driftspec import (DriftClass, DriftDomainError, ExprSyntaxError,
                                   ModelSpec, classify_drift, eval_drift,
                                   model_from_dict, parse_drift,
                                   validate_assumptions)
from modalbridge.kernel import Hurst

ZERO = parse_drift("0")


def model(h1, h2, H=0.3, rho=0.5, T=1.0, **kw):
    return ModelSpec(Hurst(H), rho, 0.0, 0.0, T, parse_drift(h1), parse_drift(h2), **kw)


# -- parsing ---------------------------------------------------------------------

def test_parse_basic_shape():
    e = parse_drift("0.5*x + sin(t)")
    assert e.free_vars() == {"x", "t"}
    assert eval_drift(e, math.pi / 2, 2.0, 0.0) == pytest.approx(2.0)


def test_power_right_associative():
    assert eval_drift(parse_drift("2^3^2"), 0, 0, 0) == 512.0


def test_power_binds_tighter_than_unary_minus():
    assert eval_drift(parse_drift("-2^2"), 0, 0, 0) == -4.0
    assert eval_drift(parse_drift("2^-3"), 0, 0, 0) == 0.125


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as err:
        parse_drift("x + * y")
    assert err.value.offset == 4
    assert err.value.expected


def test_unknown_identifier():
    with pytest.raises(ExprSyntaxError):
        parse_drift("x + z")
    with pytest.raises(ExprSyntaxError):
        parse_drift("foo(t)")


def test_empty_and_trailing():
    with pytest.raises(ExprSyntaxError):
        parse_drift("   ")
    with pytest.raises(ExprSyntaxError):
        parse_drift("1 2")


def test_whitespace_insensitive():
    a = parse_drift("1+2 * x")
    b = parse_drift(" 1 + 2*x ")
    assert a.ast == b.ast


def test_printer_round_trip_stability():
    sources = [
        "0.5*x + sin(t)*y - 2/(1+t)^2",
        "-x^2 + tanh(y)",
        "exp(-t)*(x - y)",
        "sqrt(abs(y)) + log(1 + t)",
        "2^3^2 - t/3/4",
    ]
    for src in sources:
        p1 = parse_drift(src)
        p2 = parse_drift(p1.to_source())
        assert p1.ast == p2.ast


def test_eval_matches_python_reference():
    # table-driven reference: same expressions evaluated with plain python
    cases = {
        "x": lambda t, x, y: x,
        "sin(t)*y": lambda t, x, y: math.sin(t) * y,
        "x + y*t - 1.5": lambda t, x, y: x + y * t - 1.5,
        "exp(x/4) - cos(y)": lambda t, x, y: math.exp(x / 4) - math.cos(y),
        "tanh(x)*abs(y)": lambda t, x, y: math.tanh(x) * abs(y),
        "2*x^2 - y^3": lambda t, x, y: 2 * x ** 2 - y ** 3,
        "(x + y)/(2 + t)": lambda t, x, y: (x + y) / (2 + t),
    }
    rng = np.random.default_rng(17)
    for src, ref in cases.items():
        expr = parse_drift(src)
        for _ in range(100):
            t, x, y = rng.uniform(-2, 2, 3)
            got = eval_drift(expr, t, x, y)
            want = ref(t, x, y)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_eval_vectorized():
    expr = parse_drift("x*y + t")
    t = np.linspace(0, 1, 5)
    x = np.arange(5.0)
    y = np.full(5, 2.0)
    np.testing.assert_allclose(eval_drift(expr, t, x, y), x * y + t)


def _random_expr(rng, depth=0):
    """Random expression source over (t, x, y) with safe function domains."""
    leaves = ["t", "x", "y", f"{rng.uniform(-3, 3):.3f}"]
    if depth >= 3 or rng.random() < 0.3:
        return rng.choice(leaves)
    kind = rng.choice(["add", "sub", "mul", "div", "pow", "neg", "fn"])
    a = _random_expr(rng, depth + 1)
    b = _random_expr(rng, depth + 1)
    if kind == "add":
        return f"({a} + {b})"
    if kind == "sub":
        return f"({a} - {b})"
    if kind == "mul":
        return f"({a} * {b})"
    if kind == "div":
        return f"({a} / (2 + abs({b})))"
    if kind == "pow":
        return f"(abs({a}) + 1)^{rng.integers(1, 3)}"
    if kind == "neg":
        return f"(-{a})"
    fn = rng.choice(["sin", "cos", "tanh", "exp"])
    inner = f"({a})/4" if fn == "exp" else a
    return f"{fn}({inner})"


def test_eval_agrees_with_python_eval_on_random_expressions():
    # 100 random expressions x 100 random points against an independent
    # evaluator (python eval of the canonical printed source)
    env_fns = {"sin": math.sin, "cos": math.cos, "exp": math.exp,
               "log": math.log, "sqrt": math.sqrt, "abs": abs,
               "tanh": math.tanh}
    rng = np.random.default_rng(123)
    for _ in range(100):
        src = _random_expr(rng)
        expr = parse_drift(src)
        pysrc = expr.to_source().replace("^", "**")
        for _ in range(100):
            t, x, y = rng.uniform(-2.0, 2.0, 3)
            want = eval(pysrc, {"__builtins__": {}},
                        dict(env_fns, t=t, x=x, y=y))
            got = eval_drift(expr, t, x, y)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_domain_errors_not_nan():
    with pytest.raises(DriftDomainError):
        eval_drift(parse_drift("log(x)"), 0.0, -1.0, 0.0)
    with pytest.raises(DriftDomainError):
        eval_drift(parse_drift("sqrt(y)"), 0.0, 0.0, -2.0)
    with pytest.raises(DriftDomainError):
        eval_drift(parse_drift("1/x"), 0.0, 0.0, 1.0)
    with pytest.raises(DriftDomainError):
        eval_drift(parse_drift("x^0.5"), 0.0, -4.0, 0.0)
    # array path: one bad entry anywhere raises
    with pytest.raises(DriftDomainError):
        eval_drift(parse_drift("log(x)"), 0.0, np.array([1.0, -0.5, 2.0]), 0.0)


# -- classification ---------------------------------------------------------------

def test_classify_time_only():
    assert model("sin(t)", "2").drift_class is DriftClass.TIME_ONLY


def test_classify_linear():
    assert model("t*x + y + 1", "x - 2*y").drift_class is DriftClass.LINEAR
    assert model("x/(1+t)", "exp(t)*y").drift_class is DriftClass.LINEAR


def test_classify_general():
    assert model("sin(x)", "2").drift_class is DriftClass.GENERAL
    assert model("x*y", "0").drift_class is DriftClass.GENERAL
    assert model("x^2", "0").drift_class is DriftClass.GENERAL
    assert model("1/(1+x)", "0").drift_class is DriftClass.GENERAL


def test_classify_drift_function():
    m = model("sin(t)", "1")
    assert classify_drift(m) is DriftClass.TIME_ONLY


def test_time_only_constant_in_state():
    m = model("sin(t) + 2", "exp(-t)")
    rng = np.random.default_rng(0)
    base = eval_drift(m.h1, 0.3, 0.0, 0.0)
    for _ in range(20):
        x, y = rng.normal(size=2) * 10
        assert eval_drift(m.h1, 0.3, x, y) == base


# -- model validation ----------------------------------------------------------------

def test_model_invariants():
    with pytest.raises(ValueError):
        ModelSpec(Hurst(0.3), 1.0, 0, 0, 1.0, ZERO, ZERO)
    with pytest.raises(ValueError):
        ModelSpec(Hurst(0.3), 0.0, 0, 0, -1.0, ZERO, ZERO)


def test_holder_gamma_required_for_rough_state_drifts():
    with pytest.raises(ValueError):
        model("x", "y", H=0.7)
    m = model("x", "y", H=0.7, holder_gamma=0.3)
    assert m.holder_gamma == 0.3
    with pytest.raises(ValueError):
        model("x", "y", H=0.7, holder_gamma=0.1)  # below H - 1/2
    # TimeOnly drifts need no declaration
    assert model("sin(t)", "1", H=0.7).drift_class is DriftClass.TIME_ONLY


def test_model_from_dict_strict():
    cfg = {"H": 0.3, "rho": 0.2, "x0": 0.0, "y0": 0.0, "T": 1.0,
           "h1": "0", "h2": "0"}
    m = model_from_dict(cfg)
    assert m.H == 0.3
    with pytest.raises(ValueError):
        model_from_dict({**cfg, "bogus": 1})
    with pytest.raises(ValueError):
        model_from_dict({k: v for k, v in cfg.items() if k != "T"})


# -- assumption report ------------------------------------------------------------------

def test_constant_drifts_report():
    r = validate_assumptions(model("1", "1", T=0.5), ((-1, 1), (-1, 1)))
    assert r.lipschitz_estimate == 0.0
    assert math.isinf(r.contraction_horizon)
    assert not r.violations


def test_linear_drift_lipschitz_estimate():
    r = validate_assumptions(model("3*x", "0", T=0.1), ((-1, 1), (-1, 1)))
    assert r.lipschitz_estimate == pytest.approx(3.0, rel=0.02)
    assert r.contraction_horizon == pytest.approx(1.0 / 6.0, rel=0.02)


def test_sqrt_drift_triggers_refinement_warning():
    r = validate_assumptions(model("1", "sqrt(abs(y))", T=0.1), ((-1, 1), (-1, 1)))
    assert any("spacing shrinks" in v for v in r.violations)


def test_horizon_warning():
    r = validate_assumptions(model("3*x", "0", T=1.0), ((-1, 1), (-1, 1)))
    assert any("contraction horizon" in v for v in r.violations)
