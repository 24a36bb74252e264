"""Parent POVMs, marginal targets and certificate checks.

Outcome strings a in {+1,-1}^N are indexed in ``itertools.product((1, -1),
repeat=N)`` order, so index bit r (counted from the most significant end)
is set exactly when a_r = -1.
"""

import itertools
import re
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    I2, X, Y, Z, TOL_PSD, bloch_state, bloch_vector, conjugate, embed,
    flip_unitary, min_eigenvalue, num_qubits, operator_from_json,
    operator_to_json, pair_bracket, partial_trace, qubit_ket, sigma,
    spin_projector, symmetrize3, tensor, unsharp_effect,
)
from .observables import T_HAT, sytet, sytri

MAX_PARALLEL = 4


class UnsupportedConfiguration(ValueError):
    pass


@dataclass(frozen=True)
class Configuration:
    """Single copy, k identical copies, or the antiparallel pair [1|1]."""

    kind: str
    k: int = 1

    def __post_init__(self):
        if self.kind not in ("single", "parallel", "antiparallel"):
            raise UnsupportedConfiguration(f"unknown configuration kind {self.kind!r}")
        if self.kind == "parallel" and self.k == 1:
            object.__setattr__(self, "kind", "single")
        if self.kind == "single" and self.k != 1:
            raise UnsupportedConfiguration("single configuration has one copy")
        if self.kind == "parallel" and self.k < 1:
            raise UnsupportedConfiguration("parallel configuration needs k >= 1")
        if self.kind == "antiparallel" and self.k != 2:
            object.__setattr__(self, "k", 2)

    @classmethod
    def single(cls):
        return cls("single")

    @classmethod
    def parallel(cls, k):
        return cls("parallel", int(k))

    @classmethod
    def antiparallel(cls):
        return cls("antiparallel", 2)

    @classmethod
    def parse(cls, text):
        """Parse ``single``, ``parallel:k`` or ``antiparallel``."""
        text = text.strip().lower()
        if text == "single":
            return cls.single()
        if text in ("antiparallel", "antiparallel:1:1", "[1|1]"):
            return cls.antiparallel()
        m = re.fullmatch(r"parallel:(\d+)", text)
        if m:
            return cls.parallel(int(m.group(1)))
        raise UnsupportedConfiguration(f"cannot parse configuration {text!r}")

    @property
    def copies(self):
        return self.k

    @property
    def hilbert_dim(self):
        return 2**self.k

    @property
    def slot_signs(self):
        """+1 for a copy of the state, -1 for a spin-flipped copy."""
        if self.kind == "antiparallel":
            return (1, -1)
        return (1,) * self.k

    def __str__(self):
        if self.kind == "parallel":
            return f"parallel:{self.k}"
        return self.kind


def sign_strings(n_obs):
    return list(itertools.product((1, -1), repeat=n_obs))


def outcome_index(signs):
    idx = 0
    for a in signs:
        idx = (idx << 1) | (a == -1)
    return idx


def sign_label(signs):
    return "".join("+" if a == 1 else "-" for a in signs)


def parse_sign_label(label):
    """Accept '++-' or '+1+1-1'."""
    compact = label.replace("1", "")
    if not compact or set(compact) - {"+", "-"}:
        raise ValueError(f"bad outcome label {label!r}")
    return tuple(1 if ch == "+" else -1 for ch in compact)


@dataclass(eq=False)
class Povm:
    """Effects indexed by outcome strings in {+1,-1}^N.

    ``effects`` has shape (2**N, 2**copies, 2**copies).
    """

    effects: np.ndarray
    n_observables: int
    copies: int
    label: str = field(default="", compare=False)

    def __post_init__(self):
        self.effects = np.asarray(self.effects, dtype=complex)
        d = 2**self.copies
        if self.effects.shape != (2**self.n_observables, d, d):
            raise ValueError(
                f"effects shape {self.effects.shape} does not match "
                f"N={self.n_observables}, copies={self.copies}"
            )

    @property
    def dim(self):
        return 2**self.copies

    def __getitem__(self, signs):
        if isinstance(signs, str):
            signs = parse_sign_label(signs)
        return self.effects[outcome_index(signs)]

    def items(self):
        for signs in sign_strings(self.n_observables):
            yield signs, self.effects[outcome_index(signs)]

    def total(self):
        return self.effects.sum(axis=0)

    def to_json(self):
        return {
            "n_observables": self.n_observables,
            "copies": self.copies,
            "effects": {sign_label(s): operator_to_json(e) for s, e in self.items()},
        }

    @classmethod
    def from_json(cls, obj):
        try:
            n_obs = int(obj["n_observables"])
            copies = int(obj["copies"])
            raw = obj["effects"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed POVM JSON: {exc}") from exc
        d = 2**copies
        effects = np.zeros((2**n_obs, d, d), dtype=complex)
        for label, op_json in raw.items():
            signs = parse_sign_label(label)
            if len(signs) != n_obs:
                raise ValueError(f"outcome {label!r} does not have {n_obs} signs")
            op = operator_from_json(op_json)
            if op.shape != (d, d):
                raise ValueError(f"effect {label!r} has dim {op.shape[0]}, expected {d}")
            effects[outcome_index(signs)] = op
        return cls(effects, n_obs, copies)


@dataclass
class MarginalReport:
    lam: float
    tol: float
    per_constraint: list
    completeness_residual: float
    min_eigenvalue: float
    max_residual: float
    passed: bool

    def to_json(self):
        return {
            "lambda": self.lam,
            "max_residual": self.max_residual,
            "completeness_residual": self.completeness_residual,
            "min_eigenvalue": self.min_eigenvalue,
            "per_constraint": self.per_constraint,
            "tol": self.tol,
            "pass": self.passed,
        }


def povm_marginal(p, r, a):
    """Sum of the effects whose r-th outcome equals ``a`` (r counts from 0)."""
    if not 0 <= r < p.n_observables:
        raise IndexError(f"observable index {r} out of range")
    mask = [s[r] == a for s in sign_strings(p.n_observables)]
    return p.effects[np.array(mask)].sum(axis=0)


def marginal_slope(config, n):
    """Traceless part D of the marginal target, which equals I/2 + a*lam*D."""
    signs = config.slot_signs
    k = len(signs)
    s = sigma(n)
    return sum(f * embed(s, j, k) for j, f in enumerate(signs)) / (2 * k)


def target_marginal(config, n, a, lam):
    """Operator that the (r, a) marginal of a parent POVM must equal.

    The k-slot average (1/k) sum_j I..⊗P_{a f_j n}(lam)⊗..I, with f_j = -1
    on the spin-flipped slot of the antiparallel pair. For one copy this is
    the unsharp effect itself; for two copies it is the two-slot average of
    the parallel and antiparallel characterisations.
    """
    if config.kind == "parallel" and config.k > MAX_PARALLEL:
        raise UnsupportedConfiguration(f"parallel:{config.k} exceeds k <= {MAX_PARALLEL}")
    signs = config.slot_signs
    k = len(signs)
    return sum(embed(unsharp_effect(n, a * f, lam), j, k) for j, f in enumerate(signs)) / k


def _spectral(op):
    return float(np.linalg.norm(op, 2))


def verify_povm(p, config, obs, lam, tol=1e-10):
    """Check positivity, completeness and every marginal identity."""
    if p.copies != config.copies:
        raise ValueError(f"POVM acts on {p.copies} copies, configuration needs {config.copies}")
    if p.n_observables != len(obs):
        raise ValueError(f"POVM has {p.n_observables} observables, set has {len(obs)}")
    per = []
    for r, n in enumerate(obs):
        for a in (1, -1):
            res = _spectral(povm_marginal(p, r, a) - target_marginal(config, n, a, lam))
            per.append({"r": r, "a": a, "residual": res})
    complete = _spectral(p.total() - np.eye(p.dim))
    lo = min(min_eigenvalue(e, tol_herm=max(tol, 1e-12)) for e in p.effects)
    worst = max(max(c["residual"] for c in per), complete, max(0.0, -lo))
    return MarginalReport(float(lam), tol, per, complete, lo, worst, worst <= tol)


def statistics_check(p, config, obs, lam, states):
    """Largest deviation between the post-processed statistics of ``p`` on
    the configured register and the unsharp spin statistics on the state.

    ``states`` holds Bloch vectors m; the register is rho_m on parallel
    slots and rho_{-m} on the spin-flipped slot.
    """
    worst = 0.0
    marg = {(r, a): povm_marginal(p, r, a) for r in range(len(obs)) for a in (1, -1)}
    for m in np.atleast_2d(states):
        rho = bloch_state(m)
        reg = tensor([bloch_state(f * np.asarray(m)) for f in config.slot_signs])
        for r, n in enumerate(obs):
            for a in (1, -1):
                got = np.trace(marg[r, a] @ reg).real
                want = np.trace(unsharp_effect(n, a, lam) @ rho).real
                worst = max(worst, abs(got - want))
    return worst


def prop2_transform(p, plane_normal):
    """Conjugate the second copy by the pi rotation about ``plane_normal``.

    For directions orthogonal to the normal this exchanges the parallel and
    antiparallel marginal targets; the map is its own inverse.
    """
    if p.copies != 2:
        raise ValueError("prop2_transform acts on two-copy POVMs")
    u = np.kron(I2, flip_unitary(plane_normal))
    return Povm(np.array([conjugate(e, u) for e in p.effects]), p.n_observables, 2, p.label)


def relabel_primitive(primitive, obs, copies):
    """Lift effects labelled by a Bloch direction v onto outcome strings
    a_r = sign(n_r . v); unrealised strings get zero effects."""
    d = 2**copies
    effects = np.zeros((2 ** len(obs), d, d), dtype=complex)
    for v, op in primitive:
        dots = obs.directions @ np.asarray(v, dtype=float)
        if np.any(np.abs(dots) < 1e-12):
            raise ValueError(f"outcome direction {v} is orthogonal to an observable")
        effects[outcome_index(tuple(int(s) for s in np.sign(dots)))] += op
    return effects


AXES = {"x": np.array([1.0, 0, 0]), "y": np.array([0, 1.0, 0]), "z": np.array([0, 0, 1.0])}


def _octahedron():
    for name, v in AXES.items():
        for s in (1, -1):
            yield ("+" if s == 1 else "-") + name, s * v


def sytet_single_primitive(weight=1 / 3):
    """Six qubit effects weight * P_{±alpha}, alpha in {x, y, z}.

    Only weight 1/3 gives a complete POVM: the six projectors sum to 3 I.
    """
    return [(v, weight * spin_projector(v, 1)) for _, v in _octahedron()]


def build_sytet_single_povm():
    """Single-copy parent POVM for the tetrahedral set at sharpness 1/sqrt(3)."""
    obs = sytet()
    return Povm(relabel_primitive(sytet_single_primitive(), obs, 1), 4, 1, "sytet-single")


def xi_state(v):
    """(sqrt3+1)/(2 sqrt2)|v,-v> + (sqrt3-1)/(2 sqrt2)|-v,v>."""
    up, down = qubit_ket(v), qubit_ket(-np.asarray(v))
    c_plus = (np.sqrt(3) + 1) / (2 * np.sqrt(2))
    c_minus = (np.sqrt(3) - 1) / (2 * np.sqrt(2))
    return c_plus * np.kron(up, down) + c_minus * np.kron(down, up)


def sytet_antiparallel_primitive():
    """Six rank-one two-qubit effects (2/3)|xi_{±alpha}><xi_{±alpha}|."""
    out = []
    for _, v in _octahedron():
        xi = xi_state(v)
        out.append((v, 2 / 3 * np.outer(xi, xi.conj())))
    return out


def build_sytet_antiparallel_povm():
    """Perfect joint measurement of the tetrahedral set on rho ⊗ rho_{-m}."""
    obs = sytet()
    return Povm(
        relabel_primitive(sytet_antiparallel_primitive(), obs, 2), 4, 2, "sytet-antiparallel"
    )


# Two-copy triangle POVM: columns II, XI, YI, ZI, <XY>, <YZ>, <ZX>, XX, YY, ZZ.
# The printed header names the sixth column "YX" and the expansion repeats
# the XI term; reading them as YZ and ZI is the only assignment for which
# every effect is positive (tests check the literal reading fails).
SYTRI_TABLE = {
    (1, 1, 1): (1, 0, 0, 0, 0, 0, 0, -9, -9, -9),
    (1, 1, -1): (5, 1, 1, -2, 2, -1, -1, -5, -5, 19),
    (1, -1, 1): (5, 1, -2, 1, -1, -1, 2, -5, 19, -5),
    (1, -1, -1): (5, 2, -1, -1, -1, 2, -1, 19, -5, -5),
    (-1, 1, 1): (5, -2, 1, 1, -1, 2, -1, 19, -5, -5),
    (-1, 1, -1): (5, -1, 2, -1, -1, -1, 2, -5, 19, -5),
    (-1, -1, 1): (5, -1, -1, 2, 2, -1, -1, -5, -5, 19),
    (-1, -1, -1): (1, 0, 0, 0, 0, 0, 0, -9, -9, -9),
}
SYTRI_CROSS_TERMS = ("XY", "YZ", "ZX")
_P1 = {"X": X, "Y": Y, "Z": Z, "I": I2}


def sytri_parallel_effects(cross_terms=SYTRI_CROSS_TERMS):
    """Effects of the two-copy triangle POVM from the coefficient table."""
    sym = lambda a, b: pair_bracket(_P1[a], _P1[b], 1)  # noqa: E731
    out = np.zeros((8, 4, 4), dtype=complex)
    for signs, b in SYTRI_TABLE.items():
        op = b[0] / 4 * np.eye(4)
        op = op + 2 / (3 * np.sqrt(3)) * (b[1] * sym("X", "I") + b[2] * sym("Y", "I") + b[3] * sym("Z", "I"))
        op = op + 2 / 9 * sum(c * sym(w[0], w[1]) for c, w in zip(b[4:7], cross_terms))
        op = op + (b[7] * np.kron(X, X) + b[8] * np.kron(Y, Y) + b[9] * np.kron(Z, Z)) / 36
        out[outcome_index(signs)] = op / 8
    return out


def build_sytri_parallel_povm():
    """Optimal two-copy POVM for the triangle set, sharpness 2 sqrt2 / 3."""
    return Povm(sytri_parallel_effects(), 3, 2, "sytri-parallel")


def build_sytri_antiparallel_povm():
    """Antiparallel counterpart: second copy rotated by pi about (1,1,1)."""
    p = prop2_transform(build_sytri_parallel_povm(), T_HAT)
    p.label = "sytri-antiparallel"
    return p


def sytet_3copy_coefficients():
    """Closed-form surd coefficients of the three-copy tetrahedral POVM."""
    s2, s3, s6 = np.sqrt(2), np.sqrt(3), np.sqrt(6)
    k = 1 / 576
    root_b = np.sqrt(3 * (s3 + 2))
    root_c = np.sqrt(6 * (7 - 4 * s3))
    return {
        "a": 6 * k * (2 * s2 - 2 * s3 + 1),
        "b1": 9 * k * (10 * s2 - 14 * s3 - 4 * s6 + 25),
        "b2": 4 * k * (8 * s3 - 4 * root_b + 3),
        "b3": 3 * k * (10 * s2 - 2 * s3 * (6 * s2 + 7) + 41),
        "b4": 12 * k * (s6 - 2),
        "b5": 4 * k * (-8 * s3 - 2 * root_c + 15),
        "b6": 12 * k * (-6 * s2 + 8 * s3 + 2 * s6 - 9),
        "c1": 6 * k * (-22 * s2 + 30 * s3 + 8 * s6 - 35),
        "c2": 8 * k * (6 * s2 - 8 * s3 - 10 * s6 + 33),
        "c3": 2 * k * (22 * s2 - 30 * s3 - 40 * s6 + 131),
        "c4": 2 * k * (-22 * s2 + 30 * s3 + 16 * s6 - 59),
        "c5": 8 * k * (-8 * s3 - 2 * root_c + 15),
        "c6": 24 * k * (-6 * s2 + 8 * s3 + 2 * s6 - 9),
    }


# Symmetrised basis terms, in table column order.
SYTET_3COPY_BASIS = (
    "III", "XII", "YII", "ZII", "IXX", "IYY", "IZZ", "XYI", "YZI", "ZXI",
    "XYY", "YXX", "YZZ", "ZYY", "ZXX", "XZZ", "XXX", "YYY", "ZZZ",
)

# Each row: outcome string a0 a1 a2 a3, then per column a (sign, symbol) pair.
_SYTET_3COPY_ROWS = {
    "++++": "+3a 0 0 0 -a -a -a 0 0 0 0 0 0 0 0 0 0 0 0",
    "----": "+3a 0 0 0 -a -a -a 0 0 0 0 0 0 0 0 0 0 0 0",
    "+---": "b1 b2 b2 b2 -b3 -b3 -b3 b4 b4 b4 b5 b5 b5 b5 b5 b5 -b6 -b6 -b6",
    "-+++": "b1 -b2 -b2 -b2 -b3 -b3 -b3 b4 b4 b4 -b5 -b5 -b5 -b5 -b5 -b5 b6 b6 b6",
    "-+--": "b1 b2 -b2 -b2 -b3 -b3 -b3 -b4 b4 -b4 b5 -b5 -b5 -b5 -b5 b5 -b6 b6 b6",
    "+-++": "b1 -b2 b2 b2 -b3 -b3 -b3 -b4 b4 -b4 -b5 b5 b5 b5 b5 -b5 b6 -b6 -b6",
    "--+-": "b1 -b2 b2 -b2 -b3 -b3 -b3 -b4 -b4 b4 -b5 b5 b5 -b5 -b5 -b5 b6 -b6 b6",
    "++-+": "b1 b2 -b2 b2 -b3 -b3 -b3 -b4 -b4 b4 b5 -b5 -b5 b5 b5 b5 -b6 b6 -b6",
    "---+": "b1 -b2 -b2 b2 -b3 -b3 -b3 b4 -b4 -b4 -b5 -b5 -b5 b5 b5 -b5 b6 b6 -b6",
    "+++-": "b1 b2 b2 -b2 -b3 -b3 -b3 b4 -b4 -b4 b5 b5 b5 -b5 -b5 b5 -b6 -b6 b6",
    "--++": "c1 -c2 0 0 c3 -c4 -c4 0 0 0 c5 0 0 0 0 c5 -c6 0 0",
    "++--": "c1 c2 0 0 c3 -c4 -c4 0 0 0 -c5 0 0 0 0 -c5 c6 0 0",
    "-+-+": "c1 0 -c2 0 -c4 c3 -c4 0 0 0 0 c5 c5 0 0 0 0 -c6 0",
    "+-+-": "c1 0 c2 0 -c4 c3 -c4 0 0 0 0 -c5 -c5 0 0 0 0 c6 0",
    "-++-": "c1 0 0 -c2 -c4 -c4 c3 0 0 0 0 0 0 c5 c5 0 0 0 -c6",
    "+--+": "c1 0 0 c2 -c4 -c4 c3 0 0 0 0 0 0 -c5 -c5 0 0 0 c6",
}


def _cell(token, coeffs):
    if token == "0":
        return 0.0
    sign = -1.0 if token.startswith("-") else 1.0
    name = token.lstrip("+-")
    scale, name = (3.0, "a") if name == "3a" else (1.0, name)
    return sign * scale * coeffs[name]


def sytet_3copy_table():
    """Map outcome string -> 19 coefficients in ``SYTET_3COPY_BASIS`` order."""
    coeffs = sytet_3copy_coefficients()
    return {
        parse_sign_label(lbl): [_cell(t, coeffs) for t in row.split()]
        for lbl, row in _SYTET_3COPY_ROWS.items()
    }


def _basis_term(word):
    ops = [_P1[ch] for ch in word]
    if len(set(word)) == 1:
        return tensor(ops)
    return symmetrize3(*ops)


def build_sytet_3copy_povm():
    """Three-copy tetrahedral POVM at sharpness 3/(sqrt3 + sqrt2)."""
    basis = [_basis_term(w) for w in SYTET_3COPY_BASIS]
    effects = np.zeros((16, 8, 8), dtype=complex)
    for signs, row in sytet_3copy_table().items():
        effects[outcome_index(signs)] = sum(c * b for c, b in zip(row, basis))
    return Povm(effects, 4, 3, "sytet-3copy")


def reduced_bloch_vectors(effects, slot=0):
    """Bloch vectors of the single-copy reductions of two-qubit effects."""
    return np.array([bloch_vector(partial_trace(e, [slot], num_qubits(e))) for e in effects])


SYTRI_LAMBDA = 2 * np.sqrt(2) / 3
SYTET_3COPY_LAMBDA = 3 / (np.sqrt(3) + np.sqrt(2))
SYTET_SINGLE_LAMBDA = 1 / np.sqrt(3)

# name -> (builder, observable set, configuration, claimed sharpness)
BUILTIN_POVMS = {
    "sytet-single": (build_sytet_single_povm, sytet, Configuration.single(), SYTET_SINGLE_LAMBDA),
    "sytri-parallel": (build_sytri_parallel_povm, sytri, Configuration.parallel(2), SYTRI_LAMBDA),
    "sytri-antiparallel": (build_sytri_antiparallel_povm, sytri, Configuration.antiparallel(), SYTRI_LAMBDA),
    "sytet-3copy": (build_sytet_3copy_povm, sytet, Configuration.parallel(3), SYTET_3COPY_LAMBDA),
    "sytet-antiparallel": (build_sytet_antiparallel_povm, sytet, Configuration.antiparallel(), 1.0),
}


def check_effects(p, tol=TOL_PSD):
    """True when every effect is PSD within ``tol`` and they sum to I."""
    lo = min(min_eigenvalue(e, tol_herm=1e-10) for e in p.effects)
    return lo >= -tol and np.allclose(p.total(), np.eye(p.dim), atol=1e-10)
