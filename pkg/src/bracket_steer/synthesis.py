"""Extension matrix, steering coefficients, and the periodic control family.

The control drives the y-block toward y* by realizing the average motion
-gamma (y - y*): constant inputs along the fields selected in S1, plus
high-frequency cos/sin pairs whose second-order interaction moves the state
along the selected Lie brackets in S2.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInputError, RankDegeneracyError, SelectionShapeError
from .model import as_state, eval_field, lie_bracket

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class BracketSelection:
    """Index data defining the extension matrix: S1, S2, and frequencies.

    s1 lists direct field indices (1-based); s2 lists ordered index pairs
    whose brackets are used; kappa assigns each pair its integer frequency.
    kappa may be given as a sequence aligned with s2, as a mapping from
    pairs, or omitted to default to 1, 2, 3, ... in s2 order.
    """

    s1: tuple
    s2: tuple
    kappa: Optional[tuple] = None

    def __post_init__(self):
        s1 = tuple(int(i) for i in self.s1)
        s2 = tuple((int(p[0]), int(p[1])) for p in self.s2)
        kappa = self.kappa
        if kappa is None:
            kappa = tuple(range(1, len(s2) + 1))
        elif isinstance(kappa, dict):
            try:
                kappa = tuple(int(kappa[p]) for p in s2)
            except KeyError as exc:
                raise InvalidInputError(f"kappa mapping is missing pair {exc.args[0]}") from None
        else:
            kappa = tuple(int(k) for k in kappa)
            if len(kappa) != len(s2):
                raise InvalidInputError(
                    f"kappa has {len(kappa)} entries for {len(s2)} bracket pairs")
        object.__setattr__(self, "s1", s1)
        object.__setattr__(self, "s2", s2)
        object.__setattr__(self, "kappa", kappa)

    @property
    def width(self):
        return len(self.s1) + len(self.s2)

    @property
    def kappa_max(self):
        return max(self.kappa) if self.kappa else 1


def check_selection(sys, sel):
    """Raise SelectionShapeError naming the violated invariant, if any."""
    if sel.width != sys.n1:
        raise SelectionShapeError(
            f"selection shape invariant violated: |S1| + |S2| = {sel.width} "
            f"must equal n1 = {sys.n1}")
    for i in sel.s1:
        if not 1 <= i <= sys.m:
            raise SelectionShapeError(f"S1 index invariant violated: {i} outside 1..{sys.m}")
    for (i1, i2) in sel.s2:
        if i1 == i2:
            raise SelectionShapeError(
                f"bracket pair invariant violated: pair ({i1}, {i2}) has i1 = i2, "
                "and the bracket of a field with itself vanishes")
        if not (1 <= i1 <= sys.m and 1 <= i2 <= sys.m):
            raise SelectionShapeError(
                f"S2 index invariant violated: pair ({i1}, {i2}) outside 1..{sys.m}")
    for k in sel.kappa:
        if k < 1:
            raise SelectionShapeError(f"kappa positivity invariant violated: {k} < 1")
    if len(set(sel.kappa)) != len(sel.kappa):
        raise SelectionShapeError(
            f"kappa distinctness invariant violated: duplicate values in {sel.kappa}")


@dataclass(frozen=True)
class ControllerGains:
    """Sampling period epsilon, gain gamma, target y*, and condition cap."""

    epsilon: float
    gamma: float
    y_star: tuple
    cond_cap: float = 1e6

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidInputError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.gamma > 0:
            raise InvalidInputError(f"gamma must be > 0, got {self.gamma}")
        if not self.cond_cap > 1:
            raise InvalidInputError(f"cond_cap must be > 1, got {self.cond_cap}")
        object.__setattr__(self, "y_star", tuple(float(v) for v in np.atleast_1d(self.y_star)))

    def y_star_vec(self):
        return np.array(self.y_star, dtype=float)


@dataclass(frozen=True)
class RankCertificate:
    """Empirical record of extension-matrix invertibility over probe states."""

    sampled_states: tuple
    worst_condition: float
    rank_ok: bool
    alpha_estimate: float  # max of ||F^{-1}|| (spectral) over the probes
    cond_cap: float

    def to_dict(self):
        return {
            "worst_condition": self.worst_condition,
            "rank_ok": self.rank_ok,
            "alpha_estimate": self.alpha_estimate,
            "cond_cap": self.cond_cap,
            "n_probes": len(self.sampled_states),
        }


def extension_matrix(sys, sel, x):
    """Columns: y-rows of f_i for i in S1, then y-rows of [f_i1, f_i2] for S2."""
    check_selection(sys, sel)
    x = as_state(x, sys.n)
    cols = [eval_field(sys, i, 0.0, x)[: sys.n1] for i in sel.s1]
    cols += [lie_bracket(sys, i1, i2, x)[: sys.n1] for (i1, i2) in sel.s2]
    return np.column_stack(cols)


def _solve_steering(F, rhs, cond_cap, x):
    """Solve F a = rhs with a condition-number guard; never forms F^{-1}."""
    sv = np.linalg.svd(F, compute_uv=False)
    smin = sv[-1]
    cond = math.inf if smin == 0.0 else float(sv[0] / smin)
    if cond > cond_cap:
        raise RankDegeneracyError(
            f"extension matrix condition number {cond:.3g} exceeds cap {cond_cap:.3g} "
            f"at state {np.asarray(x).tolist()}",
            state=np.array(x, dtype=float), condition=cond)
    try:
        return np.linalg.solve(F, rhs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded by cond check
        raise RankDegeneracyError(
            f"extension matrix is singular at state {np.asarray(x).tolist()}",
            state=np.array(x, dtype=float), condition=cond) from exc


def steering_coefficients(sys, sel, gains, x):
    """a(x) solving F(x) a = -gamma (y - y*), ordered as (S1 entries, S2 entries)."""
    x = as_state(x, sys.n)
    y_star = gains.y_star_vec()
    if y_star.shape != (sys.n1,):
        raise InvalidInputError(f"y_star has dimension {y_star.size}, expected n1 = {sys.n1}")
    F = extension_matrix(sys, sel, x)
    return _solve_steering(F, -gains.gamma * (x[: sys.n1] - y_star), gains.cond_cap, x)


def _sign(v):
    # sign(0) = 0: the amplitude vanishes with the coefficient anyway.
    return math.copysign(1.0, v) if v != 0.0 else 0.0


def held_control(sel, epsilon, m, a, t):
    """Evaluate the control family at absolute time t for held coefficients a.

    u_k = sum_{i in S1} delta_{ki} a_i
        + sum_{(i1,i2) in S2} 2 sqrt(pi kappa |a_{i1i2}| / eps)
          [ delta_{k,i1} cos(2 pi kappa t / eps)
            + delta_{k,i2} sign(a_{i1i2}) sin(2 pi kappa t / eps) ].

    The phase is reduced with fmod(t, epsilon), so the evaluation is
    epsilon-periodic exactly whenever t and t + epsilon round to the same
    remainder (always true on dyadic grids).
    """
    u = np.zeros(m)
    for idx, i in enumerate(sel.s1):
        u[i - 1] += a[idx]
    off = len(sel.s1)
    phase = math.fmod(t, epsilon) / epsilon
    for p, (i1, i2) in enumerate(sel.s2):
        ap = a[off + p]
        kap = sel.kappa[p]
        amp = 2.0 * math.sqrt(math.pi * kap * abs(ap) / epsilon)
        ang = TWO_PI * kap * phase
        u[i1 - 1] += amp * math.cos(ang)
        u[i2 - 1] += _sign(ap) * amp * math.sin(ang)
    return u


def control_value(sys, sel, gains, t, x_hold):
    """The applied input u(t) with the state argument frozen at x_hold."""
    a = steering_coefficients(sys, sel, gains, x_hold)
    return held_control(sel, gains.epsilon, sys.m, a, t)


def validate_selection(sys, sel, probes, gains):
    """Probe the rank condition over sample states and certify the result.

    Raises SelectionShapeError for structurally malformed selections;
    conditioning failures are reported in the certificate, not raised.
    """
    check_selection(sys, sel)
    if len(probes) == 0:
        raise InvalidInputError("at least one probe state is required")
    worst = 0.0
    alpha = 0.0
    ok = True
    states = []
    for x in probes:
        x = as_state(x, sys.n)
        states.append(tuple(float(v) for v in x))
        sv = np.linalg.svd(extension_matrix(sys, sel, x), compute_uv=False)
        smin = sv[-1]
        if smin == 0.0:
            ok = False
            worst = math.inf
            alpha = math.inf
            continue
        worst = max(worst, float(sv[0] / smin))
        alpha = max(alpha, float(1.0 / smin))
    if worst > gains.cond_cap:
        ok = False
    return RankCertificate(
        sampled_states=tuple(states), worst_condition=worst,
        rank_ok=ok, alpha_estimate=alpha, cond_cap=gains.cond_cap)
