"""Drift expressions: parsing, evaluation, classification, assumption checks.

Grammar (whitespace-insensitive)::

    expr    := term (("+" | "-") term)*
    term    := factor (("*" | "/") factor)*
    factor  := "-" factor | power
    power   := primary ("^" factor)?          # right-associative
    primary := number | ident | ident "(" expr ")" | "(" expr ")"

Variables are t, x, y; functions are sin, cos, exp, log, sqrt, abs, tanh.
"^" binds tighter than unary minus ("-x^2" is -(x^2)), and its exponent may
itself be signed ("2^-3").  Evaluation is IEEE double and vectorizes over
numpy arrays; domain violations (log of a nonpositive value, sqrt of a
negative one, a negative base under a non-integer power, division by zero)
raise :class:`DriftDomainError` instead of propagating NaNs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from .kernel import Hurst

__all__ = [
    "DriftExpr",
    "DriftClass",
    "ModelSpec",
    "AssumptionReport",
    "ExprSyntaxError",
    "DriftDomainError",
    "parse_drift",
    "eval_drift",
    "classify_drift",
    "validate_assumptions",
    "model_from_dict",
]

_FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs", "tanh")
_VARIABLES = ("t", "x", "y")
_MAX_DEPTH = 64


class ExprSyntaxError(ValueError):
    """Parse failure, carrying the byte offset and the expected-token set."""

    def __init__(self, message: str, offset: int, expected=()):
        super().__init__(f"{message} at offset {offset}"
                         + (f" (expected one of: {', '.join(expected)})" if expected else ""))
        self.offset = offset
        self.expected = tuple(expected)


class DriftDomainError(ValueError):
    """Evaluation hit a function outside its domain."""


# -- AST ----------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Call]


def _depth(node: Node) -> int:
    if isinstance(node, (Num, Var)):
        return 1
    if isinstance(node, Neg):
        return 1 + _depth(node.operand)
    if isinstance(node, Call):
        return 1 + _depth(node.arg)
    return 1 + max(_depth(node.left), _depth(node.right))


def _free_vars(node: Node, acc: set) -> set:
    if isinstance(node, Var):
        acc.add(node.name)
    elif isinstance(node, Neg):
        _free_vars(node.operand, acc)
    elif isinstance(node, Call):
        _free_vars(node.arg, acc)
    elif isinstance(node, BinOp):
        _free_vars(node.left, acc)
        _free_vars(node.right, acc)
    return acc


@dataclass(frozen=True)
class DriftExpr:
    """A parsed drift expression over (t, x, y)."""

    ast: Node
    source: str = ""

    def free_vars(self) -> frozenset:
        return frozenset(_free_vars(self.ast, set()))

    def references_state(self) -> bool:
        return bool(self.free_vars() & {"x", "y"})

    def to_source(self) -> str:
        return _print(self.ast)

    def __call__(self, t, x, y):
        return eval_drift(self, t, x, y)


def _print(node: Node) -> str:
    """Canonical fully-parenthesized rendering; parse(print(.)) is stable."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_print(node.operand)})"
    if isinstance(node, Call):
        return f"{node.fn}({_print(node.arg)})"
    return f"({_print(node.left)} {node.op} {_print(node.right)})"


# -- tokenizer / parser ---------------------------------------------------------

_OPS = set("+-*/^()")


def _tokenize(src: str):
    tokens = []  # (kind, text, offset)
    i = 0
    while i < len(src):
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _OPS:
            tokens.append(("op", ch, i))
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            j = i
            seen_e = False
            while j < len(src) and (src[j].isdigit() or src[j] == "."
                                    or (src[j] in "eE" and not seen_e)
                                    or (src[j] in "+-" and j > i and src[j - 1] in "eE")):
                if src[j] in "eE":
                    seen_e = True
                j += 1
            text = src[i:j]
            try:
                float(text)
            except ValueError:
                raise ExprSyntaxError(f"malformed number {text!r}", i) from None
            tokens.append(("num", text, i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(src) and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(("ident", src[i:j], i))
            i = j
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(("eof", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, text, off = self.peek()
        if kind != "op" or text != op:
            raise ExprSyntaxError(f"unexpected token {text or 'end of input'!r}",
                                  off, expected=(op,))
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        kind, text, off = self.peek()
        if kind != "eof":
            raise ExprSyntaxError(f"trailing input {text!r}", off,
                                  expected=("+", "-", "*", "/", "^", "end of input"))
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = BinOp(text, node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.factor()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = BinOp(text, node, self.factor())
            else:
                return node

    def factor(self) -> Node:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.factor())
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            return BinOp("^", base, self.factor())
        return base

    def primary(self) -> Node:
        kind, text, off = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(text))
        if kind == "ident":
            self.advance()
            nk, nt, _ = self.peek()
            if nk == "op" and nt == "(":
                if text not in _FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {text!r}", off,
                                          expected=_FUNCTIONS)
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return Call(text, arg)
            if text not in _VARIABLES:
                raise ExprSyntaxError(f"unknown identifier {text!r}", off,
                                      expected=_VARIABLES)
            return Var(text)
        if kind == "op" and text == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExprSyntaxError(f"unexpected token {text or 'end of input'!r}", off,
                              expected=("number", "identifier", "("))


def parse_drift(source: str) -> DriftExpr:
    """Parse a drift expression over the variables t, x, y."""
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    ast = _Parser(_tokenize(source)).parse()
    if _depth(ast) > _MAX_DEPTH:
        raise ExprSyntaxError(f"expression tree deeper than {_MAX_DEPTH}", 0)
    return DriftExpr(ast, source)


# -- evaluation -----------------------------------------------------------------

def _bad_example(mask, *vals):
    idx = np.argmax(mask)
    return ", ".join(f"{np.atleast_1d(v).ravel()[idx if np.ndim(v) else 0]:g}"
                     for v in vals)


def _eval(node: Node, env: dict):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, Call):
        arg = _eval(node.arg, env)
        if node.fn == "log":
            bad = np.asarray(arg) <= 0.0
            if np.any(bad):
                raise DriftDomainError(f"log of nonpositive value {_bad_example(bad, arg)}")
            return np.log(arg)
        if node.fn == "sqrt":
            bad = np.asarray(arg) < 0.0
            if np.any(bad):
                raise DriftDomainError(f"sqrt of negative value {_bad_example(bad, arg)}")
            return np.sqrt(arg)
        return getattr(np, node.fn if node.fn != "abs" else "abs")(arg)
    left = _eval(node.left, env)
    right = _eval(node.right, env)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        bad = np.asarray(right) == 0.0
        if np.any(bad):
            raise DriftDomainError(f"division by zero (denominator {_bad_example(bad, right)})")
        return left / right
    # node.op == "^"
    lneg = np.asarray(left) < 0.0
    if np.any(lneg):
        r = np.asarray(right, dtype=float)
        frac = r != np.floor(r)
        if np.any(lneg & (frac if frac.ndim else np.full(np.shape(lneg), frac))):
            raise DriftDomainError(
                f"negative base under non-integer power ({_bad_example(lneg, left, right)})"
            )
    with np.errstate(over="raise", divide="raise"):
        try:
            return np.power(np.asarray(left, dtype=float), right)
        except FloatingPointError as exc:
            raise DriftDomainError(f"power overflow: {exc}") from None


def eval_drift(expr: DriftExpr, t, x, y):
    """Evaluate a drift at (t, x, y); broadcasts over numpy arrays."""
    out = _eval(expr.ast, {"t": t, "x": x, "y": y})
    shape = np.broadcast_shapes(np.shape(t), np.shape(x), np.shape(y))
    if shape == ():
        return float(out)
    out = np.asarray(out, dtype=float)
    if out.shape != shape:
        out = np.broadcast_to(out, shape).copy()
    return out


# -- classification ---------------------------------------------------------------

class DriftClass(str, Enum):
    TIME_ONLY = "TimeOnly"
    LINEAR = "Linear"
    GENERAL = "General"


def _linear_parts(node: Node):
    """Decompose as alpha(t) * x + beta(t) * y + gamma(t); None when impossible.

    Returns (alpha, beta, gamma) as AST nodes (possibly Num(0.0)).
    """
    if isinstance(node, Num):
        return Num(0.0), Num(0.0), node
    if isinstance(node, Var):
        if node.name == "x":
            return Num(1.0), Num(0.0), Num(0.0)
        if node.name == "y":
            return Num(0.0), Num(1.0), Num(0.0)
        return Num(0.0), Num(0.0), node
    if isinstance(node, Neg):
        parts = _linear_parts(node.operand)
        if parts is None:
            return None
        return tuple(Neg(p) for p in parts)
    if isinstance(node, Call):
        return (Num(0.0), Num(0.0), node) if not _free_vars(node, set()) & {"x", "y"} else None
    if isinstance(node, BinOp):
        if node.op in "+-":
            lp = _linear_parts(node.left)
            rp = _linear_parts(node.right)
            if lp is None or rp is None:
                return None
            return tuple(BinOp(node.op, a, b) for a, b in zip(lp, rp))
        state_l = _free_vars(node.left, set()) & {"x", "y"}
        state_r = _free_vars(node.right, set()) & {"x", "y"}
        if node.op == "*":
            if not state_l and not state_r:
                return Num(0.0), Num(0.0), node
            if not state_l:
                rp = _linear_parts(node.right)
                if rp is None:
                    return None
                return tuple(BinOp("*", node.left, p) for p in rp)
            if not state_r:
                lp = _linear_parts(node.left)
                if lp is None:
                    return None
                return tuple(BinOp("*", p, node.right) for p in lp)
            return None
        if node.op == "/":
            if state_r:
                return None
            if not state_l:
                return Num(0.0), Num(0.0), node
            lp = _linear_parts(node.left)
            if lp is None:
                return None
            return tuple(BinOp("/", p, node.right) for p in lp)
        # "^": only time-dependent expressions pass through
        if not state_l and not state_r:
            return Num(0.0), Num(0.0), node
        return None
    return None


def classify_exprs(h1: DriftExpr, h2: DriftExpr) -> DriftClass:
    if not h1.references_state() and not h2.references_state():
        return DriftClass.TIME_ONLY
    if _linear_parts(h1.ast) is not None and _linear_parts(h2.ast) is not None:
        return DriftClass.LINEAR
    return DriftClass.GENERAL


# -- model -------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    """Full problem instance for the coupled Brownian / fBm system."""

    hurst: Hurst
    rho: float
    x0: float
    y0: float
    T: float
    h1: DriftExpr
    h2: DriftExpr
    holder_gamma: Optional[float] = None
    drift_class: DriftClass = field(init=False)

    def __post_init__(self) -> None:
        if not -1.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {self.rho}")
        if not self.T > 0.0:
            raise ValueError(f"T must be positive, got {self.T}")
        rho_h = self.rho * self.hurst.kappa_H
        if 1.0 - rho_h ** 2 < 1e-10:
            raise ValueError(
                f"degenerate correlation: 1 - (rho kappa_H)^2 = {1 - rho_h ** 2:.3e} < 1e-10"
            )
        object.__setattr__(self, "drift_class", classify_exprs(self.h1, self.h2))
        if self.hurst.H > 0.5 and self.drift_class is not DriftClass.TIME_ONLY:
            g = self.holder_gamma
            if g is None or not (self.hurst.H - 0.5 < g < 0.5):
                raise ValueError(
                    "state-dependent drifts with H > 1/2 require holder_gamma in "
                    f"(H - 1/2, 1/2) = ({self.hurst.H - 0.5}, 0.5), got {g}"
                )

    @property
    def H(self) -> float:
        return self.hurst.H

    @property
    def rho_bar(self) -> float:
        return math.sqrt(1.0 - self.rho ** 2)

    @property
    def rho_H(self) -> float:
        return self.rho * self.hurst.kappa_H

    @property
    def rho_bar_H_sq(self) -> float:
        return 1.0 - self.rho_H ** 2


def model_from_dict(cfg: dict) -> ModelSpec:
    """Build a ModelSpec from a plain dict (the CLI config 'model' block)."""
    known = {"H", "rho", "x0", "y0", "T", "h1", "h2", "holder_gamma"}
    unknown = set(cfg) - known
    if unknown:
        raise ValueError(f"unknown model keys: {sorted(unknown)}")
    missing = {"H", "rho", "x0", "y0", "T", "h1", "h2"} - set(cfg)
    if missing:
        raise ValueError(f"missing model keys: {sorted(missing)}")
    return ModelSpec(
        hurst=Hurst(float(cfg["H"])),
        rho=float(cfg["rho"]),
        x0=float(cfg["x0"]),
        y0=float(cfg["y0"]),
        T=float(cfg["T"]),
        h1=parse_drift(str(cfg["h1"])),
        h2=parse_drift(str(cfg["h2"])),
        holder_gamma=None if cfg.get("holder_gamma") is None else float(cfg["holder_gamma"]),
    )


def classify_drift(model: ModelSpec) -> DriftClass:
    """Drift class of the model (TimeOnly / Linear / General)."""
    return model.drift_class


# -- assumption checks ---------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionReport:
    """Sampled estimates of the regularity constants; advisory only."""

    lipschitz_estimate: float
    linear_growth_estimate: float
    contraction_horizon: float
    violations: tuple

    def __str__(self) -> str:
        lines = [
            f"Lipschitz estimate L ~ {self.lipschitz_estimate:.4g}",
            f"linear growth estimate K ~ {self.linear_growth_estimate:.4g}",
            f"contraction horizon 1/(2L) ~ {self.contraction_horizon:.4g}",
        ]
        for v in self.violations:
            lines.append(f"warning: {v}")
        return "\n".join(lines)


def default_sample_box(model: ModelSpec):
    """Default state box: x0 +- 15 sqrt(T), y0 +- 15 T^H."""
    rx = 15.0 * math.sqrt(model.T)
    ry = 15.0 * model.T ** model.H
    return ((model.x0 - rx, model.x0 + rx), (model.y0 - ry, model.y0 + ry))


def validate_assumptions(model: ModelSpec, sample_box=None, samples: int = 400,
                         seed: int = 0) -> AssumptionReport:
    """Estimate the Lipschitz / linear-growth constants by sampled quotients.

    The estimates are lower bounds of the true constants, so violations are
    reported as warnings and never rejected.  A Lipschitz quotient that keeps
    growing as the probe spacing shrinks (e.g. sqrt-type drifts) is flagged,
    as is T at or beyond the contraction horizon 1/(2 L), and (for H > 1/2)
    a sampled t-Hoelder quotient of h2 exceeding the declared envelope.
    """
    if sample_box is None:
        sample_box = default_sample_box(model)
    (x_lo, x_hi), (y_lo, y_hi) = sample_box
    if not (np.isfinite([x_lo, x_hi, y_lo, y_hi]).all() and x_lo < x_hi and y_lo < y_hi):
        raise ValueError(f"sample_box must be finite with lo < hi, got {sample_box}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    ts = rng.uniform(0.0, model.T, samples)
    xs = rng.uniform(x_lo, x_hi, samples)
    ys = rng.uniform(y_lo, y_hi, samples)
    violations = []

    # Lipschitz quotients at a ladder of spacings; growth under refinement is a
    # warning.  Each finer level re-probes around the worst points of the
    # previous one, so quotient blow-ups on thin singular sets are found too.
    scale = max(x_hi - x_lo, y_hi - y_lo)
    spacings = scale * np.array([1e-1, 1e-2, 1e-3, 1e-4, 1e-5])
    ladder = []
    px, py, pt = xs, ys, ts
    for d in spacings:
        dx = rng.uniform(-d, d, len(px))
        dy = rng.uniform(-d, d, len(px))
        denom = np.abs(dx) + np.abs(dy)
        worst = 0.0
        worst_q = None
        for h in (model.h1, model.h2):
            v0 = np.asarray(eval_drift(h, pt, px, py))
            v1 = np.asarray(eval_drift(h, pt, np.clip(px + dx, x_lo, x_hi),
                                       np.clip(py + dy, y_lo, y_hi)))
            with np.errstate(invalid="ignore", divide="ignore"):
                q = np.abs(v1 - v0) / denom
            q = np.nan_to_num(q)
            if worst_q is None or q.max() > worst_q.max():
                worst_q = q
            worst = max(worst, float(q.max()))
        ladder.append(worst)
        # children of the worst points, perturbed at the current scale
        top = np.argsort(worst_q)[-max(8, len(px) // 10):]
        kids = 4
        cx = np.repeat(px[top], kids) + rng.uniform(-d, d, kids * len(top))
        cy = np.repeat(py[top], kids) + rng.uniform(-d, d, kids * len(top))
        ct = np.repeat(pt[top], kids)
        px = np.concatenate([xs, np.clip(cx, x_lo, x_hi)])
        py = np.concatenate([ys, np.clip(cy, y_lo, y_hi)])
        pt = np.concatenate([ts, ct])
    lipschitz = max(ladder)
    if ladder[-1] > 3.0 * ladder[0] and ladder[-1] > 1e-8:
        violations.append(
            "sampled Lipschitz quotient grows as the probe spacing shrinks "
            f"({ladder[0]:.3g} at coarse vs {ladder[-1]:.3g} at fine); "
            "the drift may not be Lipschitz on this box"
        )

    growth = 0.0
    for h in (model.h1, model.h2):
        vals = np.abs(np.asarray(eval_drift(h, ts, xs, ys)))
        growth = max(growth, float(np.max(vals / (1.0 + np.abs(xs) + np.abs(ys)))))

    horizon = math.inf if lipschitz == 0.0 else 1.0 / (2.0 * lipschitz)
    if model.T >= horizon:
        violations.append(
            f"T = {model.T:g} is not below the sampled contraction horizon "
            f"1/(2L) ~ {horizon:.4g}; existence/uniqueness is not guaranteed"
        )

    if model.H > 0.5 and model.holder_gamma is not None:
        gma = model.holder_gamma
        dts = model.T * np.array([1e-1, 1e-3, 1e-5])
        worst_ratio = 0.0
        base = None
        for d in dts:
            t2 = np.clip(ts + d, 0.0, model.T)
            v0 = np.asarray(eval_drift(model.h2, ts, xs, ys))
            v1 = np.asarray(eval_drift(model.h2, t2, xs, ys))
            q = float(np.max(np.abs(v1 - v0) / np.maximum(t2 - ts, 1e-300) ** gma))
            if base is None:
                base = q
            worst_ratio = max(worst_ratio, q)
        if base is not None and worst_ratio > 3.0 * max(base, 1e-12) and worst_ratio > 1e-8:
            violations.append(
                f"sampled t-Hoelder quotient of h2 at gamma={gma:g} grows under "
                f"refinement (up to {worst_ratio:.3g}); the declared exponent may be too large"
            )

    return AssumptionReport(
        lipschitz_estimate=lipschitz,
        linear_growth_estimate=growth,
        contraction_horizon=horizon,
        violations=tuple(violations),
    )
