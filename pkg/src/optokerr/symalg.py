"""Normal-ordered two-mode boson polynomials with harmonic time phases.

A term ``c * ad^p a^q bd^r b^s * exp(i k Omega t)`` is keyed by the tuple
``(p, q, r, s, k)``. Coefficients are either plain complex numbers or exact
:class:`Coef` objects, which are Laurent polynomials in the symbols
``g, v, w, Omega`` with Gaussian-rational weights. Exact coefficients make
the averaging derivation checkable term by term without tolerances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Callable, Iterable, Mapping

MAX_EXPONENT = 32
PRUNE_EPS = 1e-14

Key = tuple[int, int, int, int, int]
Powers = tuple[int, int, int, int]  # exponents of g, v, w, Omega
SYMBOLS = ("g", "v", "w", "Omega")


class ExponentOverflow(ValueError):
    pass


# ---------------------------------------------------------------------------
# exact coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussQ:
    """Complex number with rational real and imaginary parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    @classmethod
    def of(cls, x) -> GaussQ:
        if isinstance(x, GaussQ):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        return cls(Fraction(x))

    def __add__(self, o):
        o = GaussQ.of(o)
        return GaussQ(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussQ(-self.re, -self.im)

    def __sub__(self, o):
        return self + (-GaussQ.of(o))

    def __mul__(self, o):
        o = GaussQ.of(o)
        return GaussQ(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def conjugate(self):
        return GaussQ(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        return f"({self.re}{'+' if self.im > 0 else '-'}{abs(self.im)}i)"


I = GaussQ(Fraction(0), Fraction(1))


class Coef:
    """Sum of ``weight * g^i v^j w^k Omega^l`` with exact Gaussian-rational weights."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Powers, GaussQ] | None = None):
        self.terms = {p: GaussQ.of(c) for p, c in (terms or {}).items() if c}

    @classmethod
    def symbol(cls, name: str) -> Coef:
        powers = [0, 0, 0, 0]
        powers[SYMBOLS.index(name)] = 1
        return cls({tuple(powers): GaussQ(Fraction(1))})

    @classmethod
    def const(cls, x) -> Coef:
        return cls({(0, 0, 0, 0): GaussQ.of(x)})

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, o):
        o = _as_coef(o)
        out = dict(self.terms)
        for p, c in o.terms.items():
            out[p] = out.get(p, GaussQ()) + c
        return Coef(out)

    __radd__ = __add__

    def __neg__(self):
        return Coef({p: -c for p, c in self.terms.items()})

    def __sub__(self, o):
        return self + (-_as_coef(o))

    def __rsub__(self, o):
        return _as_coef(o) - self

    def __mul__(self, o):
        if not isinstance(o, Coef):
            o = GaussQ.of(o)
            return Coef({p: c * o for p, c in self.terms.items()})
        out: dict[Powers, GaussQ] = {}
        for (p1, c1), (p2, c2) in itertools.product(self.terms.items(), o.terms.items()):
            p = tuple(a + b for a, b in zip(p1, p2))
            out[p] = out.get(p, GaussQ()) + c1 * c2
        return Coef(out)

    __rmul__ = __mul__

    def conjugate(self):
        return Coef({p: c.conjugate() for p, c in self.terms.items()})

    def __eq__(self, o):
        if isinstance(o, (int, Fraction, complex, float, GaussQ)):
            o = _as_coef(o)
        return isinstance(o, Coef) and self.terms == o.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def evaluate(self, g=0.0, v=0.0, w=0.0, Omega=1.0) -> complex:
        vals = (g, v, w, Omega)
        total = 0j
        for powers, c in self.terms.items():
            m = complex(c)
            for x, e in zip(vals, powers):
                if e:
                    m *= x**e
            total += m
        return total

    def filter(self, keep: Callable[[Powers], bool]) -> Coef:
        return Coef({p: c for p, c in self.terms.items() if keep(p)})

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for powers in sorted(self.terms):
            c = self.terms[powers]
            factors = []
            for name, e in zip(SYMBOLS, powers):
                if e == 1:
                    factors.append(name)
                elif e:
                    factors.append(f"{name}^{e}")
            mono = "*".join(factors)
            parts.append(f"{c}*{mono}" if mono else str(c))
        return " + ".join(parts)

    __repr__ = __str__


def _as_coef(x) -> Coef:
    return x if isinstance(x, Coef) else Coef.const(x)


g_sym, v_sym, w_sym, Omega_sym = (Coef.symbol(s) for s in SYMBOLS)


def _is_zero(c) -> bool:
    if isinstance(c, Coef):
        return c.is_zero()
    return c == 0


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------

def _reorder(q: int, p2: int):
    """a^q ad^p2 = sum_j C(q,j) C(p2,j) j! ad^(p2-j) a^(q-j)."""
    for j in range(min(q, p2) + 1):
        yield j, math.comb(q, j) * math.comb(p2, j) * math.factorial(j)


@dataclass(frozen=True)
class OperatorPolynomial:
    terms: Mapping[Key, object] = field(default_factory=dict)
    eps: float = PRUNE_EPS

    def __post_init__(self):
        object.__setattr__(self, "terms", MappingProxyType(_prune(dict(self.terms), self.eps)))

    # constructors --------------------------------------------------------
    @classmethod
    def monomial(cls, p=0, q=0, r=0, s=0, k=0, coeff=1) -> OperatorPolynomial:
        return cls({(p, q, r, s, k): coeff})

    @classmethod
    def scalar(cls, c) -> OperatorPolynomial:
        return cls.monomial(coeff=c)

    @property
    def is_exact(self) -> bool:
        return any(isinstance(c, Coef) for c in self.terms.values())

    # arithmetic ------------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, OperatorPolynomial):
            other = OperatorPolynomial.scalar(other)
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out[key] + c if key in out else c
        return OperatorPolynomial(out, self.eps)

    __radd__ = __add__

    def __neg__(self):
        return OperatorPolynomial({key: -c for key, c in self.terms.items()}, self.eps)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, OperatorPolynomial):
            return multiply(self, other)
        return OperatorPolynomial({key: c * other for key, c in self.terms.items()}, self.eps)

    def __rmul__(self, other):
        return OperatorPolynomial({key: other * c for key, c in self.terms.items()}, self.eps)

    def __pow__(self, n: int):
        out = OperatorPolynomial.scalar(1)
        for _ in range(n):
            out = multiply(out, self)
        return out

    def __eq__(self, other):
        if not isinstance(other, OperatorPolynomial):
            return NotImplemented
        return dict(self.terms) == dict(other.terms)

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __len__(self):
        return len(self.terms)

    # structure ---------------------------------------------------------------
    def coeff(self, p=0, q=0, r=0, s=0, k=0):
        return self.terms.get((p, q, r, s, k), 0)

    def dagger(self) -> OperatorPolynomial:
        return OperatorPolynomial(
            {(q, p, s, r, -k): _conj(c) for (p, q, r, s, k), c in self.terms.items()}, self.eps)

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        diff = self - self.dagger()
        if not diff.terms:
            return True
        if diff.is_exact:
            return False
        scale = max((abs(c) for c in self.terms.values()), default=1.0)
        return all(abs(c) <= atol * scale for c in diff.terms.values())

    def constant(self):
        """Coefficient of the identity (k = 0 scalar term)."""
        return self.terms.get((0, 0, 0, 0, 0), 0)

    def without_constant(self) -> OperatorPolynomial:
        return OperatorPolynomial(
            {key: c for key, c in self.terms.items() if key != (0, 0, 0, 0, 0)}, self.eps)

    def harmonics(self) -> set[int]:
        return {key[4] for key in self.terms}

    def map_coefficients(self, f) -> OperatorPolynomial:
        return OperatorPolynomial({key: f(c) for key, c in self.terms.items()}, self.eps)

    def evaluate(self, g=0.0, v=0.0, w=0.0, Omega=1.0) -> OperatorPolynomial:
        """Substitute numbers for the symbols; returns a numeric polynomial."""
        return self.map_coefficients(
            lambda c: c.evaluate(g, v, w, Omega) if isinstance(c, Coef) else complex(c))

    def to_number_form(self) -> dict[tuple[int, int], object]:
        """Rewrite a diagonal, k = 0 polynomial as sum c_ij n_a^i n_b^j."""
        out: dict[tuple[int, int], object] = {}
        for (p, q, r, s, k), c in self.terms.items():
            if p != q or r != s or k != 0:
                raise ValueError(f"term {(p, q, r, s, k)} is not diagonal and static")
            for i, si in _falling_factorial(p).items():
                for j, sj in _falling_factorial(r).items():
                    term = c * (si * sj)
                    out[(i, j)] = out[(i, j)] + term if (i, j) in out else term
        return {ij: c for ij, c in out.items() if not _is_zero(c)}

    def format(self) -> str:
        """Canonical text form, one term per line sorted by (p, q, r, s, k)."""
        lines = []
        for key in sorted(self.terms):
            lines.append(f"{_format_key(key):<28s} {_format_coeff(self.terms[key])}")
        return "\n".join(lines) if lines else "0"

    __str__ = format


def _prune(terms: dict, eps: float) -> dict:
    terms = {k: (Coef.const(c) if isinstance(c, GaussQ) else c) for k, c in terms.items()}
    terms = {k: c for k, c in terms.items() if not _is_zero(c)}
    numeric = [abs(c) for c in terms.values() if not isinstance(c, Coef)]
    if numeric:
        cut = eps * max(numeric)
        terms = {k: c for k, c in terms.items() if isinstance(c, Coef) or abs(c) > cut}
    return terms


def _conj(c):
    return c.conjugate()


def _falling_factorial(p: int) -> dict[int, int]:
    """Coefficients of n(n-1)...(n-p+1) in powers of n."""
    poly = {0: 1}
    for m in range(p):
        nxt: dict[int, int] = {}
        for e, c in poly.items():
            nxt[e + 1] = nxt.get(e + 1, 0) + c
            nxt[e] = nxt.get(e, 0) - m * c
        poly = {e: c for e, c in nxt.items() if c}
    return poly


def _format_key(key: Key) -> str:
    p, q, r, s, k = key
    parts = []
    for name, e in (("a+", p), ("a", q), ("b+", r), ("b", s)):
        if e == 1:
            parts.append(name)
        elif e:
            parts.append(f"{name}^{e}")
    ops = " ".join(parts) if parts else "1"
    return f"{ops} [k={k:+d}]"


def _format_coeff(c) -> str:
    if isinstance(c, Coef):
        return str(c)
    c = complex(c)
    return f"{c.real!r}{c.imag:+}j" if c.imag else repr(c.real)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def multiply(P: OperatorPolynomial, Q: OperatorPolynomial, max_exponent: int = MAX_EXPONENT
             ) -> OperatorPolynomial:
    """Normal-ordered product P*Q; harmonic indices add."""
    out: dict[Key, object] = {}
    for (p1, q1, r1, s1, k1), c1 in P.terms.items():
        for (p2, q2, r2, s2, k2), c2 in Q.terms.items():
            c12 = c1 * c2
            for ja, fa in _reorder(q1, p2):
                for jb, fb in _reorder(s1, r2):
                    key = (p1 + p2 - ja, q1 + q2 - ja, r1 + r2 - jb, s1 + s2 - jb, k1 + k2)
                    if max(key[:4]) > max_exponent:
                        raise ExponentOverflow(f"exponent in {key} exceeds {max_exponent}")
                    term = c12 * (fa * fb)
                    out[key] = out[key] + term if key in out else term
    return OperatorPolynomial(out, min(P.eps, Q.eps))


def commutator(P: OperatorPolynomial, Q: OperatorPolynomial) -> OperatorPolynomial:
    return multiply(P, Q) - multiply(Q, P)


def time_average(P: OperatorPolynomial) -> OperatorPolynomial:
    """Keep only the non-oscillating (k = 0) part."""
    return OperatorPolynomial({key: c for key, c in P.terms.items() if key[4] == 0}, P.eps)


def integrate_oscillating(P: OperatorPolynomial, omega: float | None = None) -> OperatorPolynomial:
    """Antiderivative in t of a purely oscillating polynomial.

    ``c exp(ikOt) -> c/(ikO) exp(ikOt)``. With ``omega=None`` the factor 1/O is
    kept symbolic (exact coefficients); otherwise ``omega`` is numeric.
    """
    out = {}
    for key, c in P.terms.items():
        k = key[4]
        if k == 0:
            raise ValueError(f"term {key} is not oscillating; subtract the time average first")
        if omega is None:
            out[key] = _as_coef(c) * Coef({(0, 0, 0, -1): GaussQ(Fraction(0), Fraction(-1, k))})
        else:
            out[key] = c / (1j * k * omega)
    return OperatorPolynomial(out, P.eps)


def drop_w_products(powers: Powers) -> bool:
    """Keep-predicate dropping second-order products that involve w."""
    ig, iv, iw, _ = powers
    return not (iw >= 1 and ig + iv + iw >= 2)


def keep_all(powers: Powers) -> bool:
    return True


@dataclass(frozen=True)
class AveragedHamiltonian:
    """Result of averaging, split by order; identity terms kept apart."""

    first: OperatorPolynomial
    second: OperatorPolynomial
    first_constant: object = 0
    second_constant: object = 0

    @property
    def operator(self) -> OperatorPolynomial:
        return self.first + self.second

    @property
    def constant(self):
        return self.first_constant + self.second_constant


def bogoliubov_effective(H: OperatorPolynomial, order: int = 2,
                         keep: Callable[[Powers], bool] = drop_w_products,
                         omega: float | None = None) -> AveragedHamiltonian:
    """First- and second-order averaged Hamiltonian.

    ``H1 = <H>``, ``H2 = (i/2) < [ int^t (H - <H>), H ] >``. For exact input the
    ``keep`` predicate filters the second-order coefficient monomials by their
    (g, v, w, Omega) exponents; numeric input ignores it.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    first = time_average(H)
    second = OperatorPolynomial({}, H.eps)
    if order == 2:
        osc = H - first
        second = time_average(commutator(integrate_oscillating(osc, omega), H))
        half_i = GaussQ(Fraction(0), Fraction(1, 2)) if omega is None else 0.5j
        second = second * half_i
        if second.is_exact:
            second = second.map_coefficients(lambda c: _as_coef(c).filter(keep))
    return AveragedHamiltonian(
        first=first.without_constant(), second=second.without_constant(),
        first_constant=first.constant(), second_constant=second.constant())


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def a_op():
    return OperatorPolynomial.monomial(q=1)


def ad_op():
    return OperatorPolynomial.monomial(p=1)


def b_op():
    return OperatorPolynomial.monomial(s=1)


def bd_op():
    return OperatorPolynomial.monomial(r=1)


def n_a():
    return OperatorPolynomial.monomial(p=1, q=1)


def n_b():
    return OperatorPolynomial.monomial(r=1, s=1)


def displacement_b():
    """bd exp(i Omega t) + b exp(-i Omega t)."""
    return OperatorPolynomial({(0, 0, 1, 0, 1): 1, (0, 0, 0, 1, -1): 1})


def interaction_hamiltonian(g=g_sym, v=v_sym, w=w_sym) -> OperatorPolynomial:
    """Optomechanical plus cubic/quartic terms in the interaction picture.

    With the default arguments the coefficients are exact symbols.
    """
    X = displacement_b()
    exact = any(isinstance(x, Coef) for x in (g, v, w))
    sixth = Fraction(1, 6) if exact else 1.0 / 6.0
    H = n_a() * X * (-g) + (X ** 3) * (v * sixth) + (X ** 4) * (w * sixth)
    return H


def closed_form_effective_terms() -> tuple[OperatorPolynomial, OperatorPolynomial]:
    """The averaged first- and second-order operators as stated in closed form."""
    na, nb = n_a(), n_b()
    first = (nb + nb * nb) * w_sym
    inv_O = Coef({(0, 0, 0, -1): GaussQ(Fraction(1))})
    second = (
        na * (g_sym * v_sym * inv_O)
        - nb * (v_sym * v_sym * inv_O * Fraction(5, 6))
        - na * na * (g_sym * g_sym * inv_O)
        + na * nb * (g_sym * v_sym * inv_O * 2)
        - nb * nb * (v_sym * v_sym * inv_O * Fraction(5, 6))
    )
    return first, second


def random_polynomial(rng, n_terms: int = 3, max_exp: int = 3, max_k: int = 2,
                      exps: Iterable[int] | None = None) -> OperatorPolynomial:
    """Random numeric polynomial for property tests."""
    terms = {}
    for _ in range(n_terms):
        key = tuple(int(x) for x in rng.integers(0, max_exp + 1, size=4)) + (
            int(rng.integers(-max_k, max_k + 1)),)
        terms[key] = complex(rng.normal(), rng.normal())
    return OperatorPolynomial(terms)
