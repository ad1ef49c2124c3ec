"""Whitelisted arithmetic expressions for metrics and factors read from JSON.

Only numbers, named variables/parameters, ``+ - * / **``, unary minus and the
jet-supported functions below are accepted; anything else is a ConfigError.
The compiled callable works on floats and on :class:`~finslerproj.calculus.Jet`.
"""

from __future__ import annotations

import ast
import math
import operator
from typing import Callable, Mapping

from . import calculus as C
from .errors import ConfigError

FUNCTIONS: dict[str, Callable] = {
    "sqrt": C.sqrt,
    "exp": C.exp,
    "log": C.log,
    "sin": C.sin,
    "cos": C.cos,
    "tan": C.tan,
    "sinh": C.sinh,
    "cosh": C.cosh,
    "tanh": C.tanh,
}
CONSTANTS = {"pi": math.pi, "e": math.e}

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}


class Expression:
    """A parsed expression; call it with a mapping of variable values."""

    def __init__(self, source: str, names: set[str] | frozenset[str]):
        if not isinstance(source, str):
            source = repr(source)
        self.source = source
        try:
            tree = ast.parse(source, mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse expression {source!r}: {exc.msg}") from None
        self._names = frozenset(names)
        self._fn = self._compile(tree.body)

    def _compile(self, node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            v = float(node.value)
            return lambda env: v
        if isinstance(node, ast.Name):
            name = node.id
            if name in CONSTANTS:
                v = CONSTANTS[name]
                return lambda env: v
            if name not in self._names:
                raise ConfigError(f"unknown name {name!r} in {self.source!r}")
            return lambda env: env[name]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            op = _BINOPS[type(node.op)]
            lhs, rhs = self._compile(node.left), self._compile(node.right)
            return lambda env: op(lhs(env), rhs(env))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            arg = self._compile(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda env: -arg(env)
            return arg
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in FUNCTIONS
            and not node.keywords
            and len(node.args) == 1
        ):
            fn = FUNCTIONS[node.func.id]
            arg = self._compile(node.args[0])
            return lambda env: fn(arg(env))
        raise ConfigError(f"unsupported construct {ast.dump(node)[:60]} in {self.source!r}")

    def __call__(self, env: Mapping[str, object]):
        return self._fn(env)

    def __repr__(self) -> str:
        return f"Expression({self.source!r})"


def coordinate_names(n: int) -> set[str]:
    return {f"x{i + 1}" for i in range(n)} | {f"y{i + 1}" for i in range(n)}


def environment(x, y, parameters: Mapping[str, float] | None = None) -> dict:
    env = dict(parameters or {})
    for i, v in enumerate(x):
        env[f"x{i + 1}"] = v
    for i, v in enumerate(y):
        env[f"y{i + 1}"] = v
    return env
