"""Metric-definition language: tokenizer, recursive-descent parser, interpreter.

A definition is a sequence of statements separated by newlines or ``;``::

    # round four-sphere, stereographic chart
    domain = [-1, 1]x[-1, 1]x[-1, 1]x[-1, 1]
    orientation = +1
    q = 1 + x1^2 + x2^2 + x3^2 + x4^2
    g11 = 4/q^2; g22 = g11; g33 = g11; g44 = g11

``gIJ`` assigns a metric component (missing off-diagonal entries are 0,
missing diagonal entries are an error); any other name is an auxiliary
definition usable by later statements. Expressions support ``+ - * / ^``
(``**`` is accepted for ``^``), unary signs, parentheses, the functions in
:data:`FUNCTIONS`, the constants ``pi`` and ``e``, and coordinates
``x1``..``x4``. ``^`` binds tighter than unary minus and is right
associative.
"""

import hashlib
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import MetricSyntaxError, NonSymmetricError, UndefinedSymbolError
from .tensor import ChartDomain, MetricPatch

FUNCTIONS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan,
    "sinh": np.sinh, "cosh": np.cosh, "tanh": np.tanh,
    "exp": np.exp, "log": np.log, "sqrt": np.sqrt, "abs": np.abs,
}
CONSTANTS = {"pi": math.pi, "e": math.e}
COORDINATES = ("x1", "x2", "x3", "x4")
HEADERS = ("domain", "orientation")
_COMPONENT = re.compile(r"g([1-4])([1-4])$")

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<comment>#[^\n]*)|(?P<newline>\n)"
    r"|(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()=;,\[\]])"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(source):
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise MetricSyntaxError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "newline":
            tokens.append(Token("sep", "\n", line, col))
            line, line_start = line + 1, m.end()
        elif kind == "op":
            if text == "**":
                text = "^"
            tokens.append(Token("sep" if text == ";" else "op", text, line, col))
        elif kind in ("number", "name"):
            tokens.append(Token(kind, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, len(source) - line_start + 1))
    return tokens


# -- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "unary": 3, "^": 4}


def to_source(node):
    """Render an expression with the minimum parentheses that re-parse to the same tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Unary):
        inner = to_source(node.operand)
        if _prec(node.operand) < _PRECEDENCE["unary"]:
            inner = f"({inner})"
        return f"{node.op}{inner}"
    p = _PRECEDENCE[node.op]
    left, right = to_source(node.left), to_source(node.right)
    if node.op == "^":
        # right associative; a unary operand on the left needs parentheses
        if _prec(node.left) <= p:
            left = f"({left})"
        if _prec(node.right) < _PRECEDENCE["unary"]:
            right = f"({right})"
    else:
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
    return f"{left} {node.op} {right}"


def _prec(node):
    if isinstance(node, Binary):
        return _PRECEDENCE[node.op]
    if isinstance(node, Unary):
        return _PRECEDENCE["unary"]
    if isinstance(node, Num) and node.value < 0:
        return _PRECEDENCE["unary"]
    return 10


def free_names(node):
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, (Unary, Call)):
        return free_names(node.operand if isinstance(node, Unary) else node.arg)
    return free_names(node.left) | free_names(node.right)


def evaluate(node, env):
    """Evaluate an expression tree; ``env`` maps names to scalars or arrays."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.name in env:
            return env[node.name]
        if node.name in CONSTANTS:
            return CONSTANTS[node.name]
        raise UndefinedSymbolError(f"undefined symbol {node.name!r}")
    if isinstance(node, Unary):
        v = evaluate(node.operand, env)
        return -v if node.op == "-" else v
    if isinstance(node, Call):
        return FUNCTIONS[node.func](evaluate(node.arg, env))
    a = evaluate(node.left, env)
    b = evaluate(node.right, env)
    op = node.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return np.true_divide(a, b)
    return np.power(np.asarray(a, dtype=float), b)


_DERIVATIVES = {
    "sin": np.cos, "cos": lambda v: -np.sin(v), "tan": lambda v: 1.0 / np.cos(v) ** 2,
    "sinh": np.cosh, "cosh": np.sinh, "tanh": lambda v: 1.0 / np.cosh(v) ** 2,
    "exp": np.exp, "log": lambda v: 1.0 / v, "sqrt": lambda v: 0.5 / np.sqrt(v), "abs": np.sign,
}


def evaluate_with_gradient(node, env):
    """Forward-mode evaluation: ``env`` maps names to ``(value, gradient)`` pairs.

    Gradients carry a trailing axis of length 4 (d/dx1 .. d/dx4); the result
    is ``(value, gradient)`` with the same convention.
    """
    if isinstance(node, Num):
        return node.value, np.zeros(4)
    if isinstance(node, Var):
        if node.name in env:
            return env[node.name]
        if node.name in CONSTANTS:
            return CONSTANTS[node.name], np.zeros(4)
        raise UndefinedSymbolError(f"undefined symbol {node.name!r}")
    if isinstance(node, Unary):
        v, d = evaluate_with_gradient(node.operand, env)
        return (-v, -d) if node.op == "-" else (v, d)
    if isinstance(node, Call):
        v, d = evaluate_with_gradient(node.arg, env)
        return FUNCTIONS[node.func](v), _col(_DERIVATIVES[node.func](v)) * d
    a, da = evaluate_with_gradient(node.left, env)
    b, db = evaluate_with_gradient(node.right, env)
    op = node.op
    if op == "+":
        return a + b, da + db
    if op == "-":
        return a - b, da - db
    if op == "*":
        return a * b, _col(b) * da + _col(a) * db
    if op == "/":
        q = np.true_divide(a, b)
        return q, (da - _col(q) * db) / _col(b)
    a = np.asarray(a, dtype=float)
    v = np.power(a, b)
    b_arr = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        coeff = np.where(b_arr == 0.0, 0.0, b_arr * np.power(a, b_arr - 1.0))
    grad = _col(coeff) * da
    if np.any(db):
        with np.errstate(divide="ignore", invalid="ignore"):
            grad = grad + _col(v * np.log(a)) * db
    return v, grad


def _col(v):
    return np.asarray(v, dtype=float)[..., None]


# -- parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, source):
        self.tokens = tokenize(source)
        self.pos = 0

    @property
    def tok(self):
        return self.tokens[self.pos]

    def advance(self):
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def error(self, message, expected):
        t = self.tok
        found = "end of input" if t.kind == "eof" else ("end of line" if t.text == "\n" else repr(t.text))
        raise MetricSyntaxError(f"{message}, found {found}", t.line, t.column, expected)

    def expect(self, text):
        if self.tok.text != text or self.tok.kind not in ("op", "sep"):
            self.error(f"expected {text!r}", {repr(text)})
        return self.advance()

    def statements(self):
        out = []
        while self.tok.kind != "eof":
            if self.tok.kind == "sep":
                self.advance()
                continue
            if self.tok.kind != "name":
                self.error("statement must start with a name", {"NAME"})
            target = self.advance()
            self.expect("=")
            if target.text == "domain":
                value = self.domain_spec()
            else:
                value = self.expr()
            if self.tok.kind not in ("sep", "eof"):
                self.error("expected end of statement", {"';'", "newline", "operator"})
            out.append((target, value))
        return out

    def domain_spec(self):
        intervals = []
        for axis in range(4):
            if axis:
                if not (self.tok.kind == "name" and self.tok.text == "x"):
                    self.error("intervals must be joined by 'x'", {"'x'"})
                self.advance()
            self.expect("[")
            lo = self.expr()
            self.expect(",")
            hi = self.expr()
            self.expect("]")
            intervals.append((lo, hi))
        return intervals

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            op = self.advance().text
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        if self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            return Unary(op, self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        t = self.tok
        if t.kind == "number":
            self.advance()
            return Num(float(t.text))
        if t.kind == "name":
            self.advance()
            if t.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(t.text, arg)
            return Var(t.text)
        if t.kind == "op" and t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.error("expected an operand", {"NUMBER", "NAME", "'('", "'+'", "'-'"})


def parse_expression(text):
    """Parse a single expression (no statements)."""
    p = _Parser(text)
    node = p.expr()
    if p.tok.kind != "eof":
        p.error("trailing input after expression", {"operator", "end of input"})
    return node


# -- metric definitions -------------------------------------------------------

@dataclass
class MetricDefinition:
    """Parsed definition.

    ``bindings`` lists every assignment in source order (auxiliaries and
    components alike); ``components`` maps an index pair ``(i, j)`` with
    ``i <= j`` to the binding that supplies it.
    """

    bindings: list
    components: dict
    domain: ChartDomain
    orientation: int = 1
    name: str = "user"
    domain_source: list = field(default=None, repr=False)

    def evaluate(self, x):
        x = np.asarray(x, dtype=np.float64)
        env = {c: x[:, k] for k, c in enumerate(COORDINATES)}
        for name, node in self.bindings:
            env[name] = evaluate(node, env)
        n = x.shape[0]
        g = np.zeros((n, 4, 4))
        for (i, j), name in self.components.items():
            v = np.broadcast_to(np.asarray(env[name], dtype=float), (n,))
            g[:, i, j] = v
            g[:, j, i] = v
        return g

    def evaluate_gradient(self, x):
        """Exact first derivatives ``[n, k, i, j] = d_k g_ij`` by forward-mode evaluation."""
        x = np.asarray(x, dtype=np.float64)
        n = x.shape[0]
        env = {c: (x[:, k], np.broadcast_to(np.eye(4)[k], (n, 4))) for k, c in enumerate(COORDINATES)}
        for name, node in self.bindings:
            env[name] = evaluate_with_gradient(node, env)
        d = np.zeros((n, 4, 4, 4))
        for (i, j), name in self.components.items():
            v = np.broadcast_to(np.asarray(env[name][1], dtype=float), (n, 4))
            d[:, :, i, j] = v
            d[:, :, j, i] = v
        return d

    def to_source(self):
        """Canonical text; parsing it again yields an equivalent definition."""
        if self.domain_source is not None:
            parts = [f"[{to_source(lo)}, {to_source(hi)}]" for lo, hi in self.domain_source]
        else:
            parts = [f"[{lo!r}, {hi!r}]" for lo, hi in zip(self.domain.lower, self.domain.upper)]
        lines = ["domain = " + "x".join(parts), f"orientation = {'+1' if self.orientation == 1 else '-1'}"]
        lines += [f"{name} = {to_source(node)}" for name, node in self.bindings]
        return "\n".join(lines) + "\n"

    def digest(self):
        return hashlib.sha256(self.to_source().encode()).hexdigest()[:16]

    def to_patch(self, **metadata):
        return MetricPatch(
            domain=self.domain,
            metric=self.evaluate,
            dmetric=self.evaluate_gradient,
            name=metadata.pop("name", self.name),
            orientation=self.orientation,
            source=self.to_source(),
            **metadata,
        )


def parse_definition(source, domain=None, name="user"):
    """Parse metric-definition text into a :class:`MetricDefinition`.

    ``domain`` (a ChartDomain) overrides the ``domain =`` header; without
    either, the chart is [-1, 1]^4.
    """
    stmts = _Parser(source).statements()
    env_names = set(COORDINATES) | set(CONSTANTS)
    bindings, given = [], {}
    dom_src, orientation = None, 1
    for target, value in stmts:
        t = target.text
        if t == "domain":
            for lo, hi in value:
                _check_names(lo, set(CONSTANTS), target)
                _check_names(hi, set(CONSTANTS), target)
            dom_src = value
            continue
        if t == "orientation":
            _check_names(value, set(), target)
            if float(evaluate(value, {})) not in (1.0, -1.0):
                raise MetricSyntaxError("orientation must be +1 or -1", target.line, target.column, {"+1", "-1"})
            orientation = int(evaluate(value, {}))
            continue
        if t in COORDINATES or t in CONSTANTS or t in FUNCTIONS or t == "x" or t in env_names:
            raise MetricSyntaxError(f"{t!r} is reserved or already defined", target.line, target.column)
        _check_names(value, env_names, target)
        m = _COMPONENT.match(t)
        if m:
            given[(int(m.group(1)) - 1, int(m.group(2)) - 1)] = t
        bindings.append((t, value))
        env_names.add(t)

    missing = [f"g{k + 1}{k + 1}" for k in range(4) if (k, k) not in given]
    if missing:
        raise UndefinedSymbolError(f"missing diagonal metric component(s): {', '.join(missing)}")

    if domain is None:
        if dom_src is None:
            domain = ChartDomain((-1.0,) * 4, (1.0,) * 4, name)
        else:
            lo = [float(evaluate(a, {})) for a, _ in dom_src]
            hi = [float(evaluate(b, {})) for _, b in dom_src]
            try:
                domain = ChartDomain(lo, hi, name)
            except ValueError as exc:
                raise MetricSyntaxError(str(exc), 1, 1) from None
    else:
        dom_src = None

    components = {}
    for (i, j), comp in sorted(given.items()):
        components.setdefault((min(i, j), max(i, j)), comp)
    defn = MetricDefinition(bindings=bindings, components=components, domain=domain,
                            orientation=orientation, name=name, domain_source=dom_src)
    _check_symmetric(defn, given)
    return defn


def _check_names(node, known, target):
    unknown = free_names(node) - known
    if unknown:
        raise UndefinedSymbolError(
            f"line {target.line}: undefined symbol(s) {', '.join(sorted(unknown))} in definition of {target.text!r}"
        )


def _check_symmetric(defn, given):
    pairs = [(i, j) for (i, j) in given if i < j and (j, i) in given]
    if not pairs:
        return
    rng = np.random.default_rng(0)
    lo, hi = np.array(defn.domain.lower), np.array(defn.domain.upper)
    x = lo + (hi - lo) * rng.uniform(0.05, 0.95, size=(8, 4))
    env = {c: x[:, k] for k, c in enumerate(COORDINATES)}
    for name, node in defn.bindings:
        env[name] = evaluate(node, env)
    for i, j in pairs:
        a = np.broadcast_to(env[given[(i, j)]], (8,))
        b = np.broadcast_to(env[given[(j, i)]], (8,))
        if not np.allclose(a, b, rtol=1e-12, atol=1e-12):
            raise NonSymmetricError(f"g{i + 1}{j + 1} and g{j + 1}{i + 1} differ")


def parse_metric(source, domain=None, name="user", **metadata):
    """Parse metric-definition text straight into a :class:`MetricPatch`."""
    return parse_definition(source, domain=domain, name=name).to_patch(**metadata)


def load_metric_file(path, **metadata):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    import os
    name = metadata.pop("name", os.path.splitext(os.path.basename(str(path)))[0])
    return parse_definition(text, name=name).to_patch(name=name, **metadata)
