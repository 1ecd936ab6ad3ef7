"""Two-tori sewing data: moment matrices, determinant and resolvent expansions,
the genus-two period matrix, and the pinched-torus modular parameter.

The raw moment matrix has entries

    A_a(k,l) = eps^((k+l)/2) (-1)^(l+1) (k+l-1)! / (sqrt(kl) (k-1)! (l-1)!) E_{k+l}(q_a),

whose sqrt(kl) factors are removed here by conjugating with diag(sqrt(k)).
Determinants, traces and (1,1) entries are unchanged, and every stored entry
becomes rational.  Entries with k+l odd vanish identically (odd Eisenstein
series and odd Bernoulli numbers), so all surviving powers of eps are
integral even though (k+l)/2 is half-integral entrywise; powers are tracked
in t = eps^(1/2) regardless, and public results assert even t-powers.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from .series import (
    BiSeries,
    EpsSeries,
    QSeries,
    SeriesError,
    bernoulli,
    eisenstein,
)

RATIONAL, Q1, Q2, BI = "rational", "q1", "q2", "bi"


@dataclass(frozen=True)
class AMatrix:
    """Truncated sewing-moment matrix in conjugated (rational) form."""
    size: int
    entries: tuple            # tuple of tuples of EpsSeries
    ring: str                 # coefficient ring tag: rational | q1 | q2 | bi
    q_trunc: int              # q-order of series coefficients (0 for rational)
    t_trunc: int
    conjugated: bool = True

    def entry(self, k: int, l: int) -> EpsSeries:
        """1-based (k, l) entry."""
        return self.entries[k - 1][l - 1]

    def to_json(self) -> dict:
        return {"size": self.size, "ring": self.ring, "conjugated": self.conjugated,
                "entries": [[e.to_json() for e in row] for row in self.entries]}


def _t_trunc(eps_trunc: int) -> int:
    return 2 * eps_trunc + 1


def a_matrix(torus: int, N: int, eps_trunc: int, q_trunc: int) -> AMatrix:
    """Conjugated moment matrix of torus 1 or 2 (series in q1 resp. q2)."""
    if torus not in (1, 2):
        raise ValueError("torus must be 1 or 2")
    if N < 1:
        raise ValueError("matrix size must be >= 1")
    var = Q1 if torus == 1 else Q2
    tt = _t_trunc(eps_trunc)
    rows = []
    for k in range(1, N + 1):
        row = []
        for l in range(1, N + 1):
            if k + l > tt or (k + l) % 2:
                row.append(EpsSeries.zero(tt))
                continue
            c = Fraction((-1) ** (l + 1) * factorial(k + l - 1),
                         l * factorial(k - 1) * factorial(l - 1))
            row.append(EpsSeries({k + l: eisenstein(k + l, q_trunc, var) * c}, tt))
        rows.append(tuple(row))
    return AMatrix(N, tuple(rows), var, q_trunc, tt)


def a2_degenerate(N: int, eps_trunc: int) -> AMatrix:
    """Pinched-torus limit of the second moment matrix: Bernoulli entries."""
    if N < 1:
        raise ValueError("matrix size must be >= 1")
    tt = _t_trunc(eps_trunc)
    rows = []
    for k in range(1, N + 1):
        row = []
        for l in range(1, N + 1):
            if k + l > tt or (k + l) % 2:
                row.append(EpsSeries.zero(tt))
                continue
            c = Fraction((-1) ** l, l * (k + l) * factorial(k - 1) * factorial(l - 1)) \
                * bernoulli(k + l)
            row.append(EpsSeries({k + l: c}, tt))
        rows.append(tuple(row))
    return AMatrix(N, tuple(rows), RATIONAL, 0, tt)


# -- coefficient-ring lifting ----------------------------------------------------


def _join_ring(ra: str, rb: str) -> str:
    if ra == rb:
        return ra
    if RATIONAL in (ra, rb):
        return rb if ra == RATIONAL else ra
    return BI


def _lift_coeff(c, ring: str, q1_trunc: int, q2_trunc: int):
    if ring == RATIONAL:
        return c
    if isinstance(c, (int, Fraction)):
        if ring == Q1:
            return QSeries.const(Q1, c, q1_trunc)
        if ring == Q2:
            return QSeries.const(Q2, c, q2_trunc)
        return BiSeries((Q1, Q2), {(0, 0): c}, (q1_trunc, q2_trunc))
    if isinstance(c, QSeries):
        if ring == c.var:
            return c
        if ring == BI:
            slot = 0 if c.var == Q1 else 1
            other = Q2 if slot == 0 else Q1
            other_trunc = q2_trunc if slot == 0 else q1_trunc
            return BiSeries.from_qseries(c, slot, other, other_trunc)
    raise SeriesError(f"cannot lift coefficient of type {type(c).__name__} to ring {ring}")


def lift_matrix(A: AMatrix, ring: str, q1_trunc: int, q2_trunc: int) -> AMatrix:
    if A.ring == ring:
        return A
    rows = tuple(
        tuple(e.map_coeffs(lambda c: _lift_coeff(c, ring, q1_trunc, q2_trunc))
              for e in row)
        for row in A.entries)
    return AMatrix(A.size, rows, ring, max(q1_trunc, q2_trunc), A.t_trunc, A.conjugated)


def _common_ring(A: AMatrix, B: AMatrix):
    ring = _join_ring(A.ring, B.ring)
    q1_trunc = max((m.q_trunc for m in (A, B) if m.ring in (Q1, BI)), default=0)
    q2_trunc = max((m.q_trunc for m in (A, B) if m.ring in (Q2, BI)), default=0)
    return lift_matrix(A, ring, q1_trunc, q2_trunc), lift_matrix(B, ring, q1_trunc, q2_trunc)


# -- matrix algebra over EpsSeries ------------------------------------------------


def _mat_mul(A, B, size: int, t_trunc: int):
    out = []
    for k in range(size):
        row = []
        for l in range(size):
            acc = EpsSeries.zero(t_trunc)
            for m in range(size):
                if A[k][m].is_zero() or B[m][l].is_zero():
                    continue
                acc = acc + A[k][m] * B[m][l]
            row.append(acc)
        out.append(tuple(row))
    return tuple(out)


def _mat_vec(A, v, size: int, t_trunc: int):
    out = []
    for k in range(size):
        acc = EpsSeries.zero(t_trunc)
        for m in range(size):
            if A[k][m].is_zero() or v[m].is_zero():
                continue
            acc = acc + A[k][m] * v[m]
        out.append(acc)
    return out


def _check_sizes(A: AMatrix, B: AMatrix, eps_trunc: int):
    if A.size != B.size:
        raise SeriesError("matrix sizes differ")
    if A.size < eps_trunc:
        raise SeriesError("matrix size too small for requested eps order")


def log_det_I_minus(A: AMatrix, B: AMatrix, eps_trunc: int) -> EpsSeries:
    """log det(I - A B) = -sum_{n>=1} Tr((A B)^n)/n, truncated at eps^eps_trunc.

    The n-sum is finite: Tr((A B)^n) = O(eps^(2n)).
    """
    _check_sizes(A, B, eps_trunc)
    A, B = _common_ring(A, B)
    tt = min(A.t_trunc, B.t_trunc)
    P = _mat_mul(A.entries, B.entries, A.size, tt)
    power = P
    out = EpsSeries.zero(tt)
    n = 1
    while 2 * n <= eps_trunc:
        if n > 1:
            power = _mat_mul(power, P, A.size, tt)
        tr = EpsSeries.zero(tt)
        for k in range(A.size):
            tr = tr + power[k][k]
        out = out + tr * Fraction(-1, n)
        n += 1
    return out.assert_even()


def _resolvent_vector_sum(A: AMatrix, B: AMatrix, eps_trunc: int):
    # sum_{n>=0} (A B)^n e_1, computed by matrix-vector chains
    tt = min(A.t_trunc, B.t_trunc)
    sample = next((c for row in A.entries for e in row for c in e.coeffs.values()), Fraction(1))
    e1 = [EpsSeries.one(tt, like=sample) if k == 0 else EpsSeries.zero(tt)
          for k in range(A.size)]
    total = list(e1)
    v = e1
    n = 1
    while 2 * n <= eps_trunc:
        v = _mat_vec(A.entries, _mat_vec(B.entries, v, A.size, tt), A.size, tt)
        total = [t + x for t, x in zip(total, v)]
        n += 1
    return total, tt


def resolvent_11(A: AMatrix, B: AMatrix, eps_trunc: int) -> EpsSeries:
    """(I - A B)^(-1) (1,1) by the geometric series."""
    _check_sizes(A, B, eps_trunc)
    A, B = _common_ring(A, B)
    total, _ = _resolvent_vector_sum(A, B, eps_trunc)
    return total[0].assert_even()


def weighted_resolvent_11(W: AMatrix, A: AMatrix, B: AMatrix, eps_trunc: int) -> EpsSeries:
    """(W (I - A B)^(-1)) (1,1), the variant the period matrix needs."""
    _check_sizes(A, B, eps_trunc)
    if W.size != A.size:
        raise SeriesError("matrix sizes differ")
    ring = _join_ring(W.ring, _join_ring(A.ring, B.ring))
    q1 = max((m.q_trunc for m in (W, A, B) if m.ring in (Q1, BI)), default=0)
    q2 = max((m.q_trunc for m in (W, A, B) if m.ring in (Q2, BI)), default=0)
    W = lift_matrix(W, ring, q1, q2)
    A = lift_matrix(A, ring, q1, q2)
    B = lift_matrix(B, ring, q1, q2)
    total, tt = _resolvent_vector_sum(A, B, eps_trunc)
    w_total = _mat_vec(W.entries, total, W.size, tt)
    return w_total[0]


@dataclass(frozen=True)
class PeriodData:
    """2*pi*i-normalized period data: d11 = 2pi i (O11 - tau1), d22 likewise,
    d12 = 2pi i O12."""
    d11: EpsSeries
    d22: EpsSeries
    d12: EpsSeries

    def to_json(self) -> dict:
        return {"d11": self.d11.to_json(), "d22": self.d22.to_json(),
                "d12": self.d12.to_json()}


def period_matrix(q1_trunc: int, q2_trunc: int, eps_trunc: int, N: int) -> PeriodData:
    """Genus-two period matrix from the sewing expansion, in normalized form."""
    A1 = a_matrix(1, N, eps_trunc, q1_trunc)
    A2 = a_matrix(2, N, eps_trunc, q2_trunc)
    d11 = weighted_resolvent_11(A2, A1, A2, eps_trunc).times_eps()
    d22 = weighted_resolvent_11(A1, A2, A1, eps_trunc).times_eps()
    d12 = -resolvent_11(A1, A2, eps_trunc).times_eps()
    return PeriodData(d11.assert_even(), d22.assert_even(), d12.assert_even())


def degenerate_tau(q1_trunc: int, eps_trunc: int, N: int) -> EpsSeries:
    """2pi i (tau - tau1) on the pinched surface, as a rational eps-series."""
    A1 = a_matrix(1, N, eps_trunc, q1_trunc)
    A20 = a2_degenerate(N, eps_trunc)
    return weighted_resolvent_11(A20, A1, A20, eps_trunc).times_eps().assert_even()


# -- advisory numeric domain check -------------------------------------------------


def min_lattice_distance(q: complex, bound: int = 40) -> float:
    """min |2 pi i (m + n tau)| over nonzero lattice points, by brute scan."""
    q = complex(q)
    if not 0 < abs(q) < 1:
        raise ValueError("need 0 < |q| < 1")
    tau = cmath.log(q) / (2j * cmath.pi)
    best = None
    for m in range(-bound, bound + 1):
        for n in range(-bound, bound + 1):
            if m == 0 and n == 0:
                continue
            d = abs(2j * cmath.pi * (m + n * tau))
            if best is None or d < best:
                best = d
    return best


def domain_check(q1: complex, q2: complex, eps: complex) -> bool:
    """Numeric test of the sewing domain |eps| < D(q1) D(q2) / 4.

    Advisory only; never gates the exact-series computations.
    """
    if eps == 0:
        return True
    return abs(complex(eps)) < min_lattice_distance(q1) * min_lattice_distance(q2) / 4
