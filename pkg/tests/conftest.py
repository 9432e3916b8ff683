import numpy as np
import pytest

from bergerdeform.expr import BinOp, Call, Coord, Expression, Neg, Num, eval_jet
from bergerdeform.manifolds import load_manifold, manifold_from_manifest, with_alpha


@pytest.fixture(scope="session")
def flat2():
    return load_manifold("flat2")


@pytest.fixture(scope="session")
def flat4():
    return load_manifold("flat4")


@pytest.fixture(scope="session")
def killing2(flat2):
    """flat2 with an affine (Killing-potential) conformal factor."""
    return with_alpha(flat2, "1 + x/10", name="killing2")


@pytest.fixture(scope="session")
def const2(flat2):
    """flat2 with a constant conformal factor."""
    return with_alpha(flat2, "2", name="const2")


@pytest.fixture(scope="session")
def curved4():
    """A curved chart satisfying every structural hypothesis.

    Product of a conformally flat 2-block with a flat 2-block; F is +1 on the
    curved block and -1 on the flat one, V sits in the flat block, and alpha
    depends only on the curved block, so (FV)(alpha) = 0.
    """
    return manifold_from_manifest(
        {
            "name": "curved4",
            "dimension": 4,
            "coordinates": ["x1", "x2", "x3", "x4"],
            "metric": [
                ["1 + x1^2", "0", "0", "0"],
                ["0", "1 + x1^2", "0", "0"],
                ["0", "0", "1", "0"],
                ["0", "0", "0", "1"],
            ],
            "F": [
                ["1", "0", "0", "0"],
                ["0", "1", "0", "0"],
                ["0", "0", "-1", "0"],
                ["0", "0", "0", "-1"],
            ],
            "V": ["0", "0", "1", "0"],
            "alpha": "2 + sin(x1)",
            "domain": [[-2, 2], [-2, 2], [-2, 2], [-2, 2]],
        }
    )


# -- random expression generator (shared by the AD and parser property tests) --

_SAFE_WRAPPED = ("log", "sqrt")
_PLAIN_FUNCS = ("sin", "cos", "tan", "sinh", "cosh", "tanh", "exp")


def random_expression(rng: np.random.Generator, coords: list[str], depth: int) -> Expression:
    """A random tree of depth <= ``depth`` over the full grammar."""
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.7:
            idx = int(rng.integers(len(coords)))
            return Coord(coords[idx], idx)
        return Num(float(np.round(rng.uniform(-2.5, 2.5), 3)))
    roll = rng.random()
    if roll < 0.5:
        op = str(rng.choice(["+", "-", "*", "/"]))
        left = random_expression(rng, coords, depth - 1)
        right = random_expression(rng, coords, depth - 1)
        return BinOp(op, left, right)
    if roll < 0.62:
        base = random_expression(rng, coords, depth - 1)
        return BinOp("^", base, Num(float(rng.integers(2, 4))))
    if roll < 0.74:
        return Neg(random_expression(rng, coords, depth - 1))
    fn = str(rng.choice(_PLAIN_FUNCS + _SAFE_WRAPPED))
    arg = random_expression(rng, coords, depth - 1)
    if fn in _SAFE_WRAPPED:
        arg = BinOp("+", Num(2.0), Call("sin", arg))
    return Call(fn, arg)


def tame_at(expr: Expression, point: np.ndarray, step: float = 1e-5, bound: float = 20.0) -> bool:
    """True when every jet entry stays below ``bound`` at the point and its
    coordinate-axis neighbours, so finite differences are trustworthy."""
    n = point.shape[-1]
    probes = [point]
    for i in range(n):
        for sign in (+1.0, -1.0):
            q = point.copy()
            q[i] += sign * step
            probes.append(q)
    for q in probes:
        try:
            jet = eval_jet(expr, q, order=3)
        except Exception:
            return False
        for arr in (jet.value, jet.grad, jet.hess, jet.third):
            if not np.all(np.isfinite(arr)) or np.max(np.abs(arr)) > bound:
                return False
    return True
