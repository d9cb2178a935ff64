"""Multimode bosonic states as weighted sums of product terms.

States live on a fixed tuple of named modes.  A ket sum holds terms
c * |k_1> x ... x |k_M|, an operator sum holds terms c * prod_m |L_m><R_m|.
Each per-mode factor is either an explicit Fock coefficient vector or an
exact coherent state.  Contractions (overlaps, traces, projections) reduce
to per-mode scalar factors, evaluated by one of two interchangeable
backends: exact coherent-state algebra, or truncated Fock sums at the
layout cutoffs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterable, Union

import numpy as np

MERGE_DECIMALS = 12
DROP_TOL = 1e-14
COHERENT_TAIL_TOL = 1e-10
DENSE_ENTRY_LIMIT = 10**7


class CutoffInsufficientError(ValueError):
    """A Fock cutoff cannot hold the requested state to tolerance."""


class DimensionLimitError(ValueError):
    """A dense materialization would exceed the entry budget."""


class Role(Enum):
    PHOTONIC = "photonic"
    COHERENT = "coherent"


def default_cutoff(amplitude: float) -> int:
    """Fock cutoff that keeps a coherent state's tail below ~1e-10."""
    a = abs(amplitude)
    return math.ceil(a * a + 6.0 * a + 10.0)


@dataclass(frozen=True)
class ModeLayout:
    """Named modes with per-mode Fock cutoffs and physical roles."""

    names: tuple
    cutoffs: tuple
    roles: tuple

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate mode names")
        if not (len(self.names) == len(self.cutoffs) == len(self.roles)):
            raise ValueError("layout field lengths differ")
        for c, role in zip(self.cutoffs, self.roles):
            if role is Role.PHOTONIC and c < 2:
                raise ValueError("photonic modes need cutoff >= 2")
            if c < 1:
                raise ValueError("cutoffs must be >= 1")

    def index(self, name: str) -> int:
        return self.names.index(name)

    def cutoff(self, name: str) -> int:
        return self.cutoffs[self.index(name)]

    def subset(self, keep: Iterable[str]) -> "ModeLayout":
        keep = tuple(keep)
        idx = [self.index(n) for n in keep]
        return ModeLayout(
            names=keep,
            cutoffs=tuple(self.cutoffs[i] for i in idx),
            roles=tuple(self.roles[i] for i in idx),
        )

    def merge(self, other: "ModeLayout") -> "ModeLayout":
        if set(self.names) & set(other.names):
            raise ValueError("mode name collision in layout merge")
        return ModeLayout(
            self.names + other.names,
            self.cutoffs + other.cutoffs,
            self.roles + other.roles,
        )

    @property
    def dims(self) -> tuple:
        return tuple(c + 1 for c in self.cutoffs)


@dataclass(frozen=True)
class Coherent:
    """Exact coherent state |amplitude>."""

    amplitude: complex

    def __post_init__(self):
        object.__setattr__(self, "amplitude", complex(self.amplitude))


@dataclass(frozen=True)
class FockVector:
    """Ket with explicit photon-number coefficients, index = photon count."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))

    @property
    def degree(self) -> int:
        deg = -1
        for n, c in enumerate(self.coeffs):
            if abs(c) > 0.0:
                deg = n
        return deg


LocalKet = Union[Coherent, FockVector]


def fock(n: int) -> FockVector:
    return FockVector((0.0,) * n + (1.0,))


VACUUM = fock(0)


def _round_c(z: complex) -> tuple:
    return (round(z.real, MERGE_DECIMALS), round(z.imag, MERGE_DECIMALS))


def ket_key(k: LocalKet) -> tuple:
    if isinstance(k, Coherent):
        return ("c",) + _round_c(k.amplitude)
    coeffs = k.coeffs
    deg = k.degree
    return ("f",) + tuple(_round_c(c) for c in coeffs[: deg + 1])


def normalize_ket(k: LocalKet) -> tuple:
    """(scalar, unit ket) with the ket in a canonical representative form.

    Fock vectors are scaled to unit norm with their first nonzero
    coefficient real and positive so that proportional kets produced by
    different code paths merge under canonicalization.  A zero vector
    returns scalar 0.  Coherent kets pass through unchanged.
    """
    if isinstance(k, Coherent):
        return 1.0 + 0.0j, k
    norm2 = sum(abs(c) ** 2 for c in k.coeffs)
    if norm2 == 0.0:
        return 0.0 + 0.0j, k
    lead = next(c for c in k.coeffs if abs(c) > 0.0)
    scale = math.sqrt(norm2) * (lead / abs(lead))
    if scale == 1.0:
        return 1.0 + 0.0j, k
    return complex(scale), FockVector(tuple(c / scale for c in k.coeffs))


# ---------------------------------------------------------------------------
# backends

@dataclass(frozen=True)
class Backend:
    """How per-mode contractions are evaluated.

    kind "coherent" keeps coherent states symbolic and uses exact
    exponential overlap formulas; kind "fock" expands every ket to a
    truncated Fock vector first.  algebra_tol is the tolerance for
    identities that hold exactly; cutoff_tol covers quantities limited by
    Fock truncation.
    """

    kind: str
    algebra_tol: float = 1e-10
    cutoff_tol: float = 1e-6

    def __post_init__(self):
        if self.kind not in ("coherent", "fock"):
            raise ValueError(f"unknown backend kind {self.kind!r}")


COHERENT_ALGEBRA = Backend("coherent")
TRUNCATED_FOCK = Backend("fock")


@lru_cache(maxsize=4096)
def _coherent_coeffs(amplitude: complex, cutoff: int) -> tuple:
    """Fock coefficients of |amplitude> up to the cutoff, plus tail weight."""
    out = np.empty(cutoff + 1, dtype=complex)
    out[0] = math.exp(-0.5 * abs(amplitude) ** 2)
    for n in range(1, cutoff + 1):
        out[n] = out[n - 1] * amplitude / math.sqrt(n)
    tail = 1.0 - float(np.sum(np.abs(out) ** 2))
    return tuple(out), tail


def ket_vector(k: LocalKet, cutoff: int) -> np.ndarray:
    """Dense Fock coefficients of a local ket at the given cutoff."""
    if isinstance(k, Coherent):
        coeffs, tail = _coherent_coeffs(k.amplitude, cutoff)
        if tail > COHERENT_TAIL_TOL:
            raise CutoffInsufficientError(
                f"cutoff {cutoff} leaves tail {tail:.2e} for amplitude "
                f"{k.amplitude:.3f}"
            )
        return np.asarray(coeffs, dtype=complex)
    vec = np.zeros(cutoff + 1, dtype=complex)
    deg = k.degree
    if deg > cutoff:
        raise CutoffInsufficientError(
            f"Fock vector of degree {deg} exceeds cutoff {cutoff}"
        )
    for n, c in enumerate(k.coeffs[: cutoff + 1]):
        vec[n] = c
    return vec


def _fock_coh_overlap(bra: FockVector, amplitude: complex) -> complex:
    # <f|amp>: finite sum over the vector's support, exact.
    acc = 0.0 + 0.0j
    c = math.exp(-0.5 * abs(amplitude) ** 2)
    term = complex(c)
    for n, fc in enumerate(bra.coeffs):
        if n > 0:
            term = term * amplitude / math.sqrt(n)
        acc += fc.conjugate() * term
    return acc


@lru_cache(maxsize=1 << 18)
def overlap(bra: LocalKet, ket: LocalKet, backend: Backend, cutoff: int) -> complex:
    """<bra|ket> for two local kets on a mode with the given cutoff."""
    if backend.kind == "fock":
        vb = ket_vector(bra, cutoff)
        vk = ket_vector(ket, cutoff)
        return complex(np.vdot(vb, vk))
    if isinstance(bra, Coherent) and isinstance(ket, Coherent):
        g, d = bra.amplitude, ket.amplitude
        return complex(
            np.exp(-0.5 * abs(g) ** 2 - 0.5 * abs(d) ** 2 + g.conjugate() * d)
        )
    if isinstance(bra, FockVector) and isinstance(ket, Coherent):
        return _fock_coh_overlap(bra, ket.amplitude)
    if isinstance(bra, Coherent) and isinstance(ket, FockVector):
        return _fock_coh_overlap(ket, bra.amplitude).conjugate()
    la, lb = len(bra.coeffs), len(ket.coeffs)
    return sum(
        bra.coeffs[n].conjugate() * ket.coeffs[n] for n in range(min(la, lb))
    )


# ---------------------------------------------------------------------------
# photon-number filters

@dataclass(frozen=True)
class NumberFilter:
    """Projector onto a photon-number class of a single mode.

    kind "n" keeps exactly n photons, "odd" keeps odd counts, "even_ge2"
    keeps even counts of at least two, "all" is the identity.
    """

    kind: str
    n: int = 0

    def mask(self, dim: int) -> np.ndarray:
        idx = np.arange(dim)
        if self.kind == "n":
            return (idx == self.n).astype(float)
        if self.kind == "odd":
            return (idx % 2 == 1).astype(float)
        if self.kind == "even_ge2":
            return ((idx % 2 == 0) & (idx >= 2)).astype(float)
        if self.kind == "all":
            return np.ones(dim)
        raise ValueError(f"unknown filter kind {self.kind!r}")


FILTER_VACUUM = NumberFilter("n", 0)
FILTER_SINGLE = NumberFilter("n", 1)
FILTER_ODD = NumberFilter("odd")
FILTER_EVEN_GE2 = NumberFilter("even_ge2")
FILTER_ALL = NumberFilter("all")


@lru_cache(maxsize=65536)
def filtered_overlap(
    bra: LocalKet, filt: NumberFilter, ket: LocalKet, backend: Backend, cutoff: int
) -> complex:
    """<bra| F |ket> where F projects onto a photon-number class."""
    if filt.kind == "all":
        return overlap(bra, ket, backend, cutoff)
    if backend.kind == "fock":
        vb = ket_vector(bra, cutoff)
        vk = ket_vector(ket, cutoff)
        return complex(np.vdot(vb, filt.mask(cutoff + 1) * vk))
    if isinstance(bra, Coherent) and isinstance(ket, Coherent):
        g, d = bra.amplitude, ket.amplitude
        base = np.exp(-0.5 * abs(g) ** 2 - 0.5 * abs(d) ** 2)
        z = g.conjugate() * d
        if filt.kind == "n":
            return complex(base * z ** filt.n / math.factorial(filt.n))
        if filt.kind == "odd":
            return complex(base * np.sinh(z))
        if filt.kind == "even_ge2":
            return complex(base * (np.cosh(z) - 1.0))
        raise ValueError(f"unknown filter kind {filt.kind!r}")
    # mixed coherent/Fock: the Fock side bounds the sum, so evaluate exactly
    parts = apply_filter(filt, ket, COHERENT_ALGEBRA, cutoff)
    return complex(
        sum(s * overlap(bra, k, COHERENT_ALGEBRA, cutoff) for s, k in parts)
    )


def apply_filter(
    filt: NumberFilter, ket: LocalKet, backend: Backend, cutoff: int
) -> list:
    """F|ket> as a list of (scalar, LocalKet) pieces."""
    if filt.kind == "all":
        return [(1.0 + 0.0j, ket)]
    if backend.kind == "coherent" and isinstance(ket, Coherent):
        g = ket.amplitude
        if filt.kind == "n":
            c0 = math.exp(-0.5 * abs(g) ** 2)
            amp = c0 * g ** filt.n / math.sqrt(math.factorial(filt.n))
            return [(complex(amp), fock(filt.n))] if abs(amp) > 0 else []
        if filt.kind == "odd":
            return [(0.5 + 0.0j, ket), (-0.5 + 0.0j, Coherent(-g))]
        if filt.kind == "even_ge2":
            c0 = math.exp(-0.5 * abs(g) ** 2)
            return [
                (0.5 + 0.0j, ket),
                (0.5 + 0.0j, Coherent(-g)),
                (complex(-c0), VACUUM),
            ]
        raise ValueError(f"unknown filter kind {filt.kind!r}")
    vec = ket_vector(ket, cutoff) * filt.mask(cutoff + 1)
    if not np.any(np.abs(vec) > DROP_TOL):
        return []
    return [(1.0 + 0.0j, FockVector(tuple(vec)))]


# ---------------------------------------------------------------------------
# beam splitter

BS_THETA = math.pi / 4.0


@lru_cache(maxsize=64)
def _bs_sector_matrix(k: int) -> np.ndarray:
    """Rotation of the total-photon-number-k sector, basis |n>_i |k-n>_j.

    Generator (pi/4)(a_i^dag a_j - a_i a_j^dag); the sector matrix is the
    exact exponential (the generator conserves total photon number).
    """
    g = np.zeros((k + 1, k + 1))
    for n in range(k):
        val = BS_THETA * math.sqrt((n + 1) * (k - n))
        g[n + 1, n] = val
        g[n, n + 1] = -val
    lam, vec = np.linalg.eigh(1j * g)
    return (vec * np.exp(-1j * lam)) @ vec.conj().T


def _bs_pair(ki: LocalKet, kj: LocalKet, ci: int, cj: int) -> list:
    """Transform a two-mode product ket; returns [(scalar, ket_i, ket_j)].

    Coherent pairs stay a single product via the closed-form rule
    |g>|d> -> |(g+d)/sqrt2>|(d-g)/sqrt2>; Fock content is rotated exactly
    within each total-photon-number sector.
    """
    if isinstance(ki, Coherent) and isinstance(kj, Coherent):
        g, d = ki.amplitude, kj.amplitude
        s = math.sqrt(0.5)
        return [(1.0 + 0.0j, Coherent((g + d) * s), Coherent((d - g) * s))]
    vi = ket_vector(ki, ci)
    vj = ket_vector(kj, cj)
    block = np.outer(vi, vj)
    out = np.zeros_like(block)
    lost = 0.0
    for k in range(len(vi) + len(vj) - 1):
        n_lo = max(0, k - cj)
        n_hi = min(ci, k)
        if n_lo > n_hi:
            continue
        rot = _bs_sector_matrix(k)
        full = np.zeros(k + 1, dtype=complex)
        for n in range(n_lo, n_hi + 1):
            full[n] = block[n, k - n]
        if not np.any(np.abs(full) > 0):
            continue
        res = rot @ full
        for n in range(k + 1):
            if n <= ci and k - n <= cj:
                out[n, k - n] += res[n]
            else:
                lost += abs(res[n]) ** 2
    if lost > COHERENT_TAIL_TOL:
        raise CutoffInsufficientError(
            f"beam splitter output exceeds cutoffs ({ci}, {cj}); "
            f"clipped weight {lost:.2e}"
        )
    pieces = []
    for n in range(out.shape[0]):
        row = out[n]
        if np.any(np.abs(row) > DROP_TOL):
            pieces.append((1.0 + 0.0j, fock(n), FockVector(tuple(row))))
    return pieces


# ---------------------------------------------------------------------------
# sums of product terms

class KetSum:
    """Pure state: sum of weighted product kets over the layout's modes."""

    __slots__ = ("layout", "terms")

    def __init__(self, layout: ModeLayout, terms: Iterable):
        self.layout = layout
        self.terms = []
        for c, kets in terms:
            c = complex(c)
            norm_kets = []
            for k in kets:
                s, nk = normalize_ket(k)
                c *= s
                norm_kets.append(nk)
            if c != 0:
                self.terms.append((c, tuple(norm_kets)))

    @classmethod
    def product(cls, layout: ModeLayout, kets: Iterable[LocalKet]) -> "KetSum":
        return cls(layout, [(1.0, tuple(kets))])

    def scaled(self, z: complex) -> "KetSum":
        return KetSum(self.layout, [(c * z, k) for c, k in self.terms])

    def __add__(self, other: "KetSum") -> "KetSum":
        if other.layout.names != self.layout.names:
            raise ValueError("layout mismatch")
        return KetSum(self.layout, self.terms + other.terms)

    def tensor(self, other: "KetSum") -> "KetSum":
        lay = self.layout.merge(other.layout)
        terms = [
            (c1 * c2, k1 + k2)
            for c1, k1 in self.terms
            for c2, k2 in other.terms
        ]
        return KetSum(lay, terms)

    def canonicalized(self) -> "KetSum":
        acc = {}
        kets_by_key = {}
        for c, kets in self.terms:
            key = tuple(ket_key(k) for k in kets)
            acc[key] = acc.get(key, 0.0) + c
            kets_by_key[key] = kets
        terms = [
            (c, kets_by_key[key])
            for key, c in sorted(acc.items(), key=lambda kv: kv[0])
            if abs(c) > DROP_TOL
        ]
        return KetSum(self.layout, terms)

    def braket(self, other: "KetSum", backend: Backend) -> complex:
        """<self|other>."""
        if other.layout.names != self.layout.names:
            raise ValueError("layout mismatch")
        cuts = self.layout.cutoffs
        acc = 0.0 + 0.0j
        for cb, kb in self.terms:
            for ck, kk in other.terms:
                f = cb.conjugate() * ck
                for m in range(len(cuts)):
                    f *= overlap(kb[m], kk[m], backend, cuts[m])
                    if f == 0:
                        break
                acc += f
        return acc

    def norm2(self, backend: Backend) -> float:
        return float(self.braket(self, backend).real)

    def map_mode(self, name: str, func: Callable) -> "KetSum":
        """Apply a per-mode linear map; func(ket) -> [(scalar, ket)]."""
        m = self.layout.index(name)
        terms = []
        for c, kets in self.terms:
            for s, newk in func(kets[m]):
                terms.append((c * s, kets[:m] + (newk,) + kets[m + 1 :]))
        return KetSum(self.layout, terms)

    def dm(self) -> "TermSum":
        """Outer product |self><self|."""
        terms = [
            (cl * cr.conjugate(), kl, kr)
            for cl, kl in self.terms
            for cr, kr in self.terms
        ]
        return TermSum(self.layout, terms)

    def outer(self, other: "KetSum") -> "TermSum":
        """|self><other|."""
        if other.layout.names != self.layout.names:
            raise ValueError("layout mismatch")
        terms = [
            (cl * cr.conjugate(), kl, kr)
            for cl, kl in self.terms
            for cr, kr in other.terms
        ]
        return TermSum(self.layout, terms)

    def to_vector(self) -> np.ndarray:
        dims = self.layout.dims
        total = int(np.prod(dims))
        if total > DENSE_ENTRY_LIMIT:
            raise DimensionLimitError(f"dense vector of size {total}")
        vec = np.zeros(total, dtype=complex)
        for c, kets in self.terms:
            acc = np.array([c], dtype=complex)
            for k, cut in zip(kets, self.layout.cutoffs):
                acc = np.kron(acc, ket_vector(k, cut))
            vec += acc
        return vec


class TermSum:
    """Operator: sum of weighted products of per-mode |L><R| factors."""

    __slots__ = ("layout", "terms")

    def __init__(self, layout: ModeLayout, terms: Iterable):
        self.layout = layout
        self.terms = []
        for c, lefts, rights in terms:
            c = complex(c)
            nl, nr = [], []
            for k in lefts:
                s, nk = normalize_ket(k)
                c *= s
                nl.append(nk)
            for k in rights:
                s, nk = normalize_ket(k)
                c *= s.conjugate()
                nr.append(nk)
            if c != 0:
                self.terms.append((c, tuple(nl), tuple(nr)))

    def scaled(self, z: complex) -> "TermSum":
        return TermSum(self.layout, [(c * z, l, r) for c, l, r in self.terms])

    def __add__(self, other: "TermSum") -> "TermSum":
        if other.layout.names != self.layout.names:
            raise ValueError("layout mismatch")
        return TermSum(self.layout, self.terms + other.terms)

    def tensor(self, other: "TermSum") -> "TermSum":
        lay = self.layout.merge(other.layout)
        terms = [
            (c1 * c2, l1 + l2, r1 + r2)
            for c1, l1, r1 in self.terms
            for c2, l2, r2 in other.terms
        ]
        return TermSum(lay, terms)

    def adjoint(self) -> "TermSum":
        return TermSum(
            self.layout, [(c.conjugate(), r, l) for c, l, r in self.terms]
        )

    def canonicalized(self) -> "TermSum":
        acc = {}
        kets_by_key = {}
        for c, lefts, rights in self.terms:
            key = (
                tuple(ket_key(k) for k in lefts),
                tuple(ket_key(k) for k in rights),
            )
            acc[key] = acc.get(key, 0.0) + c
            kets_by_key[key] = (lefts, rights)
        terms = []
        for key, c in sorted(acc.items(), key=lambda kv: kv[0]):
            if abs(c) > DROP_TOL:
                lefts, rights = kets_by_key[key]
                terms.append((c, lefts, rights))
        return TermSum(self.layout, terms)

    def trace(self, backend: Backend) -> complex:
        cuts = self.layout.cutoffs
        acc = 0.0 + 0.0j
        for c, lefts, rights in self.terms:
            f = c
            for m in range(len(cuts)):
                f *= overlap(rights[m], lefts[m], backend, cuts[m])
                if f == 0:
                    break
            acc += f
        return acc

    def matrix_element(self, bra: KetSum, ket: KetSum, backend: Backend) -> complex:
        """<bra| self |ket>."""
        cuts = self.layout.cutoffs
        nmodes = len(cuts)
        acc = 0.0 + 0.0j
        for c, lefts, rights in self.terms:
            for cb, kb in bra.terms:
                left_f = cb.conjugate()
                for m in range(nmodes):
                    left_f *= overlap(kb[m], lefts[m], backend, cuts[m])
                    if left_f == 0:
                        break
                if left_f == 0:
                    continue
                for ck, kk in ket.terms:
                    f = c * left_f * ck
                    for m in range(nmodes):
                        f *= overlap(rights[m], kk[m], backend, cuts[m])
                        if f == 0:
                            break
                    acc += f
        return acc

    def expectation(self, psi: KetSum, backend: Backend) -> complex:
        return self.matrix_element(psi, psi, backend)

    def map_mode(self, name: str, func: Callable) -> "TermSum":
        """Conjugate by a per-mode linear map: rho -> C rho C^dag."""
        m = self.layout.index(name)
        terms = []
        for c, lefts, rights in self.terms:
            lparts = func(lefts[m])
            rparts = func(rights[m])
            for sl, kl in lparts:
                for sr, kr in rparts:
                    terms.append(
                        (
                            c * sl * sr.conjugate(),
                            lefts[:m] + (kl,) + lefts[m + 1 :],
                            rights[:m] + (kr,) + rights[m + 1 :],
                        )
                    )
        return TermSum(self.layout, terms)

    def swap_modes(self, name_a: str, name_b: str) -> "TermSum":
        """Exchange the kets held by two modes (a mathematical relabel)."""
        i = self.layout.index(name_a)
        j = self.layout.index(name_b)
        terms = []
        for c, lefts, rights in self.terms:
            ll, rr = list(lefts), list(rights)
            ll[i], ll[j] = ll[j], ll[i]
            rr[i], rr[j] = rr[j], rr[i]
            terms.append((c, tuple(ll), tuple(rr)))
        return TermSum(self.layout, terms)

    def to_dense(self, backend: Backend = TRUNCATED_FOCK) -> np.ndarray:
        dims = self.layout.dims
        total = int(np.prod(dims))
        if total * total > DENSE_ENTRY_LIMIT:
            raise DimensionLimitError(
                f"dense operator with {total * total} entries"
            )
        mat = np.zeros((total, total), dtype=complex)
        for c, lefts, rights in self.terms:
            vl = np.array([1.0], dtype=complex)
            vr = np.array([1.0], dtype=complex)
            for kl, kr, cut in zip(lefts, rights, self.layout.cutoffs):
                vl = np.kron(vl, ket_vector(kl, cut))
                vr = np.kron(vr, ket_vector(kr, cut))
            mat += c * np.outer(vl, vr.conj())
        return mat


def apply_beam_splitter(state, mode_i: str, mode_j: str):
    """50:50 beam splitter on modes (i, j) of a KetSum or TermSum.

    Convention: generator exp((pi/4)(a_i^dag a_j - a_i a_j^dag)), i.e.
    a_i^dag -> (a_i^dag - a_j^dag)/sqrt2 and a_j^dag -> (a_i^dag + a_j^dag)/sqrt2,
    so coherent amplitudes map as |g>_i |d>_j -> |(g+d)/sqrt2>_i |(d-g)/sqrt2>_j
    and a lone photon in i exits as (|1,0> - |0,1>)/sqrt2.
    """
    lay = state.layout
    i, j = lay.index(mode_i), lay.index(mode_j)
    ci, cj = lay.cutoffs[i], lay.cutoffs[j]

    def transform(kets):
        return [
            (s, kets[:i] + (ki,) + kets[i + 1 : j] + (kj,) + kets[j + 1 :])
            if i < j
            else (s, kets[:j] + (kj,) + kets[j + 1 : i] + (ki,) + kets[i + 1 :])
            for s, ki, kj in _bs_pair(kets[i], kets[j], ci, cj)
        ]

    if isinstance(state, KetSum):
        terms = []
        for c, kets in state.terms:
            for s, newkets in transform(kets):
                terms.append((c * s, newkets))
        return KetSum(lay, terms)
    terms = []
    for c, lefts, rights in state.terms:
        lparts = transform(lefts)
        rparts = transform(rights)
        for sl, kl in lparts:
            for sr, kr in rparts:
                terms.append((c * sl * sr.conjugate(), kl, kr))
    return TermSum(lay, terms)


# ---------------------------------------------------------------------------
# projectors

@dataclass(frozen=True)
class ModeProjector:
    """Sum of product projectors; each branch maps mode name -> NumberFilter."""

    branches: tuple  # tuple of tuples of (mode_name, NumberFilter)

    def modes(self) -> tuple:
        seen = []
        for br in self.branches:
            for name, _ in br:
                if name not in seen:
                    seen.append(name)
        return tuple(seen)


def project(state: TermSum, proj: ModeProjector, backend: Backend) -> TermSum:
    """P rho P for a sum-of-products projector P."""
    lay = state.layout
    out_terms = []

    def side_apply(kets, branch):
        pieces = [(1.0 + 0.0j, kets)]
        for name, filt in branch:
            m = lay.index(name)
            cut = lay.cutoffs[m]
            nxt = []
            for s, kk in pieces:
                for s2, newk in apply_filter(filt, kk[m], backend, cut):
                    nxt.append((s * s2, kk[:m] + (newk,) + kk[m + 1 :]))
            pieces = nxt
        return pieces

    for c, lefts, rights in state.terms:
        for br_l in proj.branches:
            lparts = side_apply(lefts, br_l)
            if not lparts:
                continue
            for br_r in proj.branches:
                rparts = side_apply(rights, br_r)
                for sl, kl in lparts:
                    for sr, kr in rparts:
                        out_terms.append((c * sl * sr.conjugate(), kl, kr))
    return TermSum(lay, out_terms)


def partial_trace(state: TermSum, keep: Iterable[str], backend: Backend) -> TermSum:
    """Trace out every mode not in keep; contraction is <R_m|L_m> per mode."""
    lay = state.layout
    keep = tuple(keep)
    keep_idx = [lay.index(n) for n in keep]
    drop_idx = [i for i in range(len(lay.names)) if lay.names[i] not in keep]
    sub = lay.subset(keep)
    terms = []
    for c, lefts, rights in state.terms:
        f = c
        for m in drop_idx:
            f *= overlap(rights[m], lefts[m], backend, lay.cutoffs[m])
            if f == 0:
                break
        if f == 0:
            continue
        terms.append(
            (
                f,
                tuple(lefts[m] for m in keep_idx),
                tuple(rights[m] for m in keep_idx),
            )
        )
    return TermSum(sub, terms)


def conditional_probability(
    state: TermSum, proj: ModeProjector, backend: Backend
) -> float:
    """Tr[P rho] for a projector acting on a subset of modes."""
    lay = state.layout
    cuts = lay.cutoffs
    proj_modes = {name: lay.index(name) for name in proj.modes()}
    acc = 0.0 + 0.0j
    for c, lefts, rights in state.terms:
        base = c
        for m in range(len(cuts)):
            if lay.names[m] in proj_modes:
                continue
            base *= overlap(rights[m], lefts[m], backend, cuts[m])
            if base == 0:
                break
        if base == 0:
            continue
        for branch in proj.branches:
            f = base
            for name, filt in branch:
                m = proj_modes[name]
                f *= filtered_overlap(rights[m], filt, lefts[m], backend, cuts[m])
                if f == 0:
                    break
            acc += f
    return float(acc.real)


def gram_eigvals(state: TermSum, backend: Backend) -> np.ndarray:
    """Eigenvalues of a Hermitian TermSum via the Gram matrix of its kets.

    Works without materializing the full dense operator, so it stays cheap
    even when the layout's product dimension is huge.
    """
    lay = state.layout
    cuts = lay.cutoffs
    st = state.canonicalized()
    keys = {}
    kets = []
    for _, lefts, rights in st.terms:
        for prod in (lefts, rights):
            key = tuple(ket_key(k) for k in prod)
            if key not in keys:
                keys[key] = len(kets)
                kets.append(prod)
    n = len(kets)
    if n == 0:
        return np.zeros(0)
    mat = np.zeros((n, n), dtype=complex)
    for c, lefts, rights in st.terms:
        i = keys[tuple(ket_key(k) for k in lefts)]
        j = keys[tuple(ket_key(k) for k in rights)]
        mat[i, j] += c
    gram = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            f = 1.0 + 0.0j
            for m in range(len(cuts)):
                f *= overlap(kets[i][m], kets[j][m], backend, cuts[m])
                if f == 0:
                    break
            gram[i, j] = f
            gram[j, i] = f.conjugate()
    lam, vec = np.linalg.eigh(gram)
    good = lam > max(1e-12 * max(lam.max(), 1.0), 1e-14)
    w = (vec[:, good] * np.sqrt(lam[good])).conj().T
    h = w @ mat @ w.conj().T
    return np.linalg.eigvalsh(0.5 * (h + h.conj().T))


def trace_distance(a: TermSum, b: TermSum, backend: Backend) -> float:
    """(1/2)||a - b||_1 for Hermitian TermSums on the same layout."""
    diff = a + b.scaled(-1.0)
    lam = gram_eigvals(diff, backend)
    return 0.5 * float(np.sum(np.abs(lam)))
