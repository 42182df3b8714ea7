"""Constructive stationary objects in the rational one-dimensional case.

When the irrationality condition fails, the walk maps h_i(x) = D_i x + a_i
preserve a finite set A + x0 with x0 = -a_1/(D_1 - 1); its exact transition
chain yields a finitely supported stationary measure.  For an IFS with all
translation differences rational, the carry process eta_{m+1} = D eta_m +
Dd_i mod 1 is a finite Markov chain whose exact stationary law enters the
limit measure nu * p * mu_K.  All linear algebra is exact over Q.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Sequence

import numpy as np

from .exactcore import Scalar, TorusPoint
from .fractal import AffineIFS
from .spectral import CoefficientFunction, DiscreteMeasure, SelfSimilarSpec, convolve

__all__ = [
    "RationalityError",
    "ReducibleChainError",
    "FiniteStationary",
    "EtaChain",
    "build_finite_stationary",
    "build_eta_chain",
    "stationary_distribution",
    "stationary_power_iteration",
    "alpha_orbit_measure",
    "limit_law_fourier",
]

_Q0 = Fraction(0)
_Q1 = Fraction(1)


class RationalityError(ValueError):
    """A quantity the construction requires to be rational is not."""


class ReducibleChainError(ValueError):
    """The transition structure is not irreducible (or not aperiodic)."""


def _frac(q: Fraction) -> Fraction:
    return q - (q.numerator // q.denominator)


# ---------------------------------------------------------------------------
# exact chain linear algebra


def _check_row_stochastic(transition: Sequence[Sequence[Fraction]]) -> None:
    n = len(transition)
    for row in transition:
        if len(row) != n:
            raise ValueError("transition matrix must be square")
        if any(x < 0 for x in row) or sum(row) != 1:
            raise ValueError("rows must be nonnegative and sum to 1")


def _strongly_connected(adj: list[list[int]]) -> bool:
    n = len(adj)

    def reach(start: int, edges: list[list[int]]) -> set[int]:
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in edges[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    radj: list[list[int]] = [[] for _ in range(n)]
    for u, outs in enumerate(adj):
        for v in outs:
            radj[v].append(u)
    return len(reach(0, adj)) == n and len(reach(0, radj)) == n


def _period(adj: list[list[int]]) -> int:
    """gcd of cycle lengths of a strongly connected digraph."""
    from math import gcd

    n = len(adj)
    level = [-1] * n
    level[0] = 0
    queue = [0]
    g = 0
    while queue:
        u = queue.pop()
        for v in adj[u]:
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = gcd(g, level[u] + 1 - level[v])
    return abs(g) if g else 0


def stationary_distribution(
    transition: Sequence[Sequence[Fraction]],
) -> tuple[Fraction, ...]:
    """Exact unique stationary vector of an irreducible row-stochastic matrix."""
    _check_row_stochastic(transition)
    n = len(transition)
    adj = [[j for j, x in enumerate(row) if x > 0] for row in transition]
    if not _strongly_connected(adj):
        raise ReducibleChainError("chain is reducible; stationary vector not unique")
    # solve v (T - I) = 0 with sum(v) = 1:   rows of A are columns of T - I
    a = [[Fraction(transition[j][i]) - (1 if i == j else 0) for j in range(n)] for i in range(n)]
    a[n - 1] = [_Q1] * n
    b = [_Q0] * (n - 1) + [_Q1]
    v = _solve_exact(a, b)
    for i in range(n):
        check = sum(v[j] * transition[j][i] for j in range(n))
        assert check == v[i], "stationarity residual nonzero"
    assert all(x >= 0 for x in v)
    return tuple(v)


def _solve_exact(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(a)
    aug = [row[:] + [b[i]] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise ReducibleChainError("singular system; chain lacks a unique solution")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [aug[i][n] for i in range(n)]


def stationary_power_iteration(
    transition: Sequence[Sequence[Fraction]], iterations: int = 200
) -> np.ndarray:
    """Float cross-check of the exact solve."""
    t = np.array([[float(x) for x in row] for row in transition])
    v = np.full(len(t), 1.0 / len(t))
    for _ in range(iterations):
        v = v @ t
    return v


def _terminal_class_stationary(
    transition: list[list[Fraction]],
) -> tuple[Fraction, ...]:
    """Exact stationary vector supported on one closed recurrent class."""
    n = len(transition)
    adj = [[j for j, x in enumerate(row) if x > 0] for row in transition]
    # find a terminal SCC by following reachability greedily
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)

    def closure(start: int) -> set[int]:
        grp = {start}
        frontier = [start]
        while frontier:
            u = frontier.pop()
            for v in adj[u]:
                if v not in grp:
                    grp.add(v)
                    frontier.append(v)
        return grp

    # a state whose forward closure is minimal spans a terminal class
    best: set[int] | None = None
    for s in sorted(seen):
        c = closure(s)
        if best is None or len(c) < len(best):
            best = c
    assert best is not None
    members = sorted(best)
    # restricted chain is stochastic (class is closed) and irreducible
    idx = {m: i for i, m in enumerate(members)}
    sub = [[transition[u][v] for v in members] for u in members]
    subvec = stationary_distribution(sub)
    out = [_Q0] * n
    for m, val in zip(members, subvec):
        out[m] = val
    return tuple(out)


# ---------------------------------------------------------------------------
# finite stationary support (walk case)


@dataclass(frozen=True)
class FiniteStationary:
    """Finite invariant set A + x0 with an exact stationary vector on it."""

    x0: Scalar
    q: int
    a_values: tuple[Fraction, ...]
    transition: tuple[tuple[Fraction, ...], ...]
    stationary: tuple[Fraction, ...]
    d_values: tuple[int, ...]
    betas: tuple[Fraction, ...]
    probabilities: tuple[Fraction, ...]

    def support_points(self) -> list[TorusPoint]:
        return [TorusPoint([self.x0 + a]) for a in self.a_values]

    def map_state(self, i: int, a: Fraction) -> Fraction:
        """Image of a + x0 under h_i, expressed by its A-component."""
        return _frac(self.d_values[i] * a + self.betas[i])

    def pushforward_is_stationary(self) -> bool:
        """Exact check that sum_i P_i (h_i)_* nu = nu as atomic measures."""
        acc: dict[Fraction, Fraction] = {a: _Q0 for a in self.a_values}
        for i, p in enumerate(self.probabilities):
            for a, w in zip(self.a_values, self.stationary):
                acc[self.map_state(i, a)] += p * w
        return all(acc[a] == w for a, w in zip(self.a_values, self.stationary))


def build_finite_stationary(
    d_values: Sequence[int],
    alphas: Sequence[Scalar],
    probabilities: Sequence[Fraction] | None = None,
) -> FiniteStationary:
    """Construct the finite stationary support for h_i(x) = D_i x + alpha_i.

    Requires every beta_j = alpha_j - (D_j - 1)/(D_1 - 1) alpha_1 to be
    rational; otherwise the irrationality condition holds and no finitely
    supported stationary measure exists this way.
    """
    k = len(d_values)
    if k == 0 or len(alphas) != k:
        raise ValueError("need one alpha per D")
    if any(abs(d) < 2 for d in d_values):
        raise ValueError("all D_i must be expanding (|D_i| >= 2)")
    if probabilities is None:
        probabilities = [Fraction(1, k)] * k
    probabilities = [Fraction(p) for p in probabilities]
    if any(p <= 0 for p in probabilities) or sum(probabilities) != 1:
        raise ValueError("probabilities must be positive and sum to 1")

    d1 = d_values[0]
    x0 = alphas[0] * Fraction(-1, d1 - 1)
    betas = []
    for d, alpha in zip(d_values, alphas):
        beta = alpha - alphas[0] * Fraction(d - 1, d1 - 1)
        if not beta.is_rational():
            raise RationalityError(
                "beta_j is irrational: the irrationality condition holds "
                "and the walk has no finite stationary support of this form"
            )
        betas.append(_frac(beta.rational_part))

    q = lcm(*(b.denominator for b in betas)) if betas else 1
    a_values = [Fraction(i, q) for i in range(q)]
    index = {a: i for i, a in enumerate(a_values)}
    transition = [[_Q0] * q for _ in range(q)]
    for d, beta, p in zip(d_values, betas, probabilities):
        for a in a_values:
            target = _frac(d * a + beta)
            transition[index[a]][index[target]] += p
    trans = [list(row) for row in transition]
    stationary = _terminal_class_stationary(trans)
    return FiniteStationary(
        x0=x0,
        q=q,
        a_values=tuple(a_values),
        transition=tuple(tuple(row) for row in transition),
        stationary=stationary,
        d_values=tuple(int(d) for d in d_values),
        betas=tuple(betas),
        probabilities=tuple(probabilities),
    )


# ---------------------------------------------------------------------------
# the eta carry chain (IFS rational-difference case)


@dataclass(frozen=True)
class EtaChain:
    """Finite-state carry process eta_{m+1} = D eta_m + Dd_{i_{m+1}} mod 1."""

    d_value: int
    q: int
    states: tuple[Fraction, ...]
    deltas_tilde: tuple[Fraction, ...]
    probabilities: tuple[Fraction, ...]
    transition: tuple[tuple[Fraction, ...], ...]
    stationary: tuple[Fraction, ...]

    def next_state(self, state: Fraction, letter: int) -> Fraction:
        return _frac(self.d_value * state + self.deltas_tilde[letter - 1])

    def simulate(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """State indices of an n-step run started from eta_1 = Dd_{i_1}."""
        index = {a: i for i, a in enumerate(self.states)}
        table = np.array(
            [
                [index[self.next_state(a, j + 1)] for j in range(len(self.deltas_tilde))]
                for a in self.states
            ],
            dtype=np.int64,
        )
        p = np.array([float(x) for x in self.probabilities])
        p /= p.sum()
        letters = rng.choice(len(self.deltas_tilde), size=n, p=p)
        out = np.empty(n, dtype=np.int64)
        state = index[self.deltas_tilde[letters[0]]]
        out[0] = state
        for m in range(1, n):
            state = table[state, letters[m]]
            out[m] = state
        return out

    def stationary_measure(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.states, self.stationary)


def build_eta_chain(
    d_value: int,
    translations: Sequence[Scalar],
    probabilities: Sequence[Fraction] | None = None,
) -> EtaChain:
    """Build the carry chain for an IFS x -> x/D + t_i with rational t_i - t_1.

    The state set is the forward-reachable part of {0, 1/q, ..., (q-1)/q};
    irreducibility and aperiodicity are verified structurally.
    """
    k = len(translations)
    if k < 1:
        raise ValueError("need at least one translation")
    if abs(d_value) < 2:
        raise ValueError("D must be expanding (|D| >= 2)")
    if probabilities is None:
        probabilities = [Fraction(1, k)] * k
    probabilities = [Fraction(p) for p in probabilities]
    if any(p <= 0 for p in probabilities) or sum(probabilities) != 1:
        raise ValueError("probabilities must be positive and sum to 1")

    deltas = []
    for t in translations:
        diff = t - translations[0]
        if not diff.is_rational():
            raise RationalityError("translation differences must all be rational")
        deltas.append(diff.rational_part)
    q = lcm(*(d.denominator for d in deltas)) if deltas else 1
    deltas_tilde = [_frac(d_value * d) for d in deltas]

    # forward-reachable states from the law of eta_1
    states: list[Fraction] = []
    seen: set[Fraction] = set()
    frontier = list(dict.fromkeys(deltas_tilde))
    while frontier:
        a = frontier.pop()
        if a in seen:
            continue
        seen.add(a)
        states.append(a)
        for dt in deltas_tilde:
            nxt = _frac(d_value * a + dt)
            if nxt not in seen:
                frontier.append(nxt)
    states.sort()
    index = {a: i for i, a in enumerate(states)}
    n = len(states)
    transition = [[_Q0] * n for _ in range(n)]
    for a in states:
        for dt, p in zip(deltas_tilde, probabilities):
            transition[index[a]][index[_frac(d_value * a + dt)]] += p

    adj = [[j for j, x in enumerate(row) if x > 0] for row in transition]
    if not _strongly_connected(adj):
        raise ReducibleChainError("eta chain is not irreducible on its state set")
    if _period(adj) != 1:
        raise ReducibleChainError("eta chain is not aperiodic")
    # structural witness: delta_1 = 0 puts 0 in the state set with a self-loop
    zero_idx = index[_Q0]
    assert transition[zero_idx][zero_idx] >= probabilities[0]
    stationary = stationary_distribution(transition)
    return EtaChain(
        d_value=int(d_value),
        q=q,
        states=tuple(states),
        deltas_tilde=tuple(deltas_tilde),
        probabilities=tuple(probabilities),
        transition=tuple(tuple(row) for row in transition),
        stationary=stationary,
    )


# ---------------------------------------------------------------------------
# limit law nu * p * mu_K


def alpha_orbit_measure(d_value: int, t1: Fraction) -> DiscreteMeasure:
    """Limit distribution of alpha_m = D^m c - c with c = D t1 / (D - 1).

    The times-D orbit of the rational c is eventually periodic; the limit law
    is uniform on the cycle, translated by -c.
    """
    c = Fraction(d_value, d_value - 1) * Fraction(t1)
    seen: dict[Fraction, int] = {}
    orbit: list[Fraction] = []
    x = _frac(c * d_value)  # alpha_1 + c = D c
    while x not in seen:
        seen[x] = len(orbit)
        orbit.append(x)
        x = _frac(x * d_value)
    cycle = orbit[seen[x] :]
    atoms = [_frac(v - c) for v in cycle]
    k = len(atoms)
    weights: dict[Fraction, Fraction] = {}
    for a in atoms:
        weights[a] = weights.get(a, _Q0) + Fraction(1, k)
    return DiscreteMeasure(list(weights.keys()), list(weights.values()))


def limit_law_fourier(eta: EtaChain, ifs: AffineIFS) -> CoefficientFunction:
    """Fourier coefficients of nu * p * mu_K for the rational-difference case.

    Requires t_1 rational (so nu is an exactly computable atomic measure);
    p comes from the eta chain and mu_K from the self-similar product formula.
    """
    if ifs.dimension != 1 or any(r != 1 for r in ifs.exponents):
        raise ValueError("limit law requires d = 1 and uniform exponents r = 1")
    t1 = ifs.translations[0].coords[0]
    if not t1.is_rational():
        raise RationalityError(
            "t_1 is irrational: nu is not finitely computable; "
            "only empirical comparison is available"
        )
    d_scalar = ifs.d_matrix.rows[0][0]
    if d_scalar != eta.d_value:
        raise ValueError("eta chain and ifs disagree on D")
    atoms = []
    for t in ifs.translations:
        s = t.coords[0]
        if not s.is_rational():
            raise RationalityError("all t_i must be rational for the exact limit law")
        atoms.append(s.rational_part)
    nu = alpha_orbit_measure(d_scalar, t1.rational_part)
    p_measure = eta.stationary_measure()
    mu = SelfSimilarSpec.create(d_scalar, atoms, ifs.probabilities)
    return convolve(
        convolve(nu.coefficients(), p_measure.coefficients()), mu.coefficients()
    )
