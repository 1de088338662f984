"""Constraint evaluation over integer field environments."""

import logging
import operator
from functools import lru_cache
from typing import Callable, Mapping, Optional, Union

from chewspec.constants import ERROR_TEMPLATES, TOTAL_LEN
from chewspec.errors import EvaluationError
from chewspec.pfs.model import Constraint, Expr, FieldRef, IntLit, Not, TotalLen

logger = logging.getLogger(__name__)

Env = Mapping[str, int]
Value = Union[int, bool]
Compiled = Callable[[Env, Optional[int]], Value]

_BINARY = {
    "+": operator.add,
    "-": operator.sub,
    "*": operator.mul,
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


class _Unbound(Exception):
    def __init__(self, name: str):
        self.name = name


@lru_cache(maxsize=4096)
def compile_expr(expr: Expr) -> Compiled:
    """Turn an expression tree into a closure ``f(env, total_len)``."""
    if isinstance(expr, IntLit):
        value = expr.value
        return lambda env, total: value
    if isinstance(expr, FieldRef):
        name = expr.name

        def ref(env: Env, total: Optional[int]) -> Value:
            try:
                return env[name]
            except KeyError:
                raise _Unbound(name) from None

        return ref
    if isinstance(expr, TotalLen):

        def total_len(env: Env, total: Optional[int]) -> Value:
            if total is None:
                raise _Unbound(TOTAL_LEN)
            return total

        return total_len
    if isinstance(expr, Not):
        inner = compile_expr(expr.operand)
        return lambda env, total: not inner(env, total)
    left = compile_expr(expr.left)
    right = compile_expr(expr.right)
    if expr.op == "and":
        return lambda env, total: bool(left(env, total)) and bool(right(env, total))
    if expr.op == "or":
        return lambda env, total: bool(left(env, total)) or bool(right(env, total))
    fn = _BINARY[expr.op]
    return lambda env, total: fn(left(env, total), right(env, total))


def evaluate_expr(
    expr: Expr, env: Env, total_len: Optional[int] = None, context: str = ""
) -> Value:
    """Evaluate any expression; unbound names raise EvaluationError."""
    try:
        return compile_expr(expr)(env, total_len)
    except _Unbound as unbound:
        template = ERROR_TEMPLATES["unbound_field"]
        message = template.format(name=unbound.name, constraint=context or "<expr>")
        logger.debug(message)
        raise EvaluationError(message, field=unbound.name) from None


def evaluate_constraint(
    c: Constraint, env: Env, total_len: Optional[int] = None
) -> bool:
    """Truth value of ``c`` for the field values in ``env``.

    Every referenced field must be bound, independently of short-circuiting,
    so a missing field is always reported.
    """
    for name in sorted(c.refs):
        if name not in env:
            template = ERROR_TEMPLATES["unbound_field"]
            message = template.format(name=name, constraint=c.text)
            raise EvaluationError(message, field=name)
    return bool(evaluate_expr(c.expr, env, total_len, c.text))
