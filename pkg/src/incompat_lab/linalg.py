"""Dense operator algebra on small multi-qubit spaces.

Operators are plain complex ``numpy`` arrays of shape ``(2**n, 2**n)``.
Nothing here is cached or mutated, so every function is safe to call from
any number of threads.
"""

import itertools
from functools import reduce

import numpy as np

TOL_HERM = 1e-12
TOL_PSD = 1e-9
TOL_UNIT = 1e-12

PAULI_LABELS = "IXYZ"

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
for _m in _PAULI.values():
    _m.setflags(write=False)

I2 = _PAULI["I"]
X = _PAULI["X"]
Y = _PAULI["Y"]
Z = _PAULI["Z"]


class InvalidStateError(ValueError):
    pass


class InvalidDirectionError(ValueError):
    pass


class InvalidSharpnessError(ValueError):
    pass


class ContractViolation(ValueError):
    """An operator handed to a routine does not meet its input contract."""


def pauli(axis):
    """Return the Pauli matrix for ``axis`` in ``{'x', 'y', 'z'}`` (or 'i')."""
    key = str(axis).upper()
    if key not in _PAULI:
        raise ValueError(f"unknown Pauli axis {axis!r}")
    return _PAULI[key].copy()


def sigma(n):
    """Spin observable n.sigma for a real 3-vector ``n``."""
    n = np.asarray(n, dtype=float)
    return n[0] * X + n[1] * Y + n[2] * Z


def _unit(n, tol=TOL_UNIT):
    n = np.asarray(n, dtype=float).reshape(3)
    if abs(np.linalg.norm(n) - 1.0) > tol:
        raise InvalidDirectionError(f"direction {n} is not a unit vector")
    return n


def num_qubits(op):
    dim = op.shape[0]
    n = dim.bit_length() - 1
    if op.ndim != 2 or op.shape[1] != dim or dim < 2 or 2**n != dim:
        raise ContractViolation(f"operator of shape {op.shape} is not a multi-qubit operator")
    return n


def bloch_state(m, tol=TOL_UNIT):
    """Qubit density matrix (I + m.sigma)/2 for a Bloch vector with |m| <= 1."""
    m = np.asarray(m, dtype=float).reshape(3)
    if np.linalg.norm(m) > 1 + tol:
        raise InvalidStateError(f"Bloch vector {m} lies outside the unit ball")
    return 0.5 * (I2 + sigma(m))


def spin_projector(n, a, tol=TOL_UNIT):
    """Eigenprojector of n.sigma with eigenvalue ``a`` = +1 or -1."""
    n = _unit(n, tol)
    if a not in (1, -1):
        raise ValueError("outcome must be +1 or -1")
    return 0.5 * (I2 + a * sigma(n))


def unsharp_effect(n, a, lam, tol=TOL_UNIT):
    """Noisy spin effect lam * P_{a n} + (1 - lam) * I/2."""
    if not 0.0 <= lam <= 1.0:
        raise InvalidSharpnessError(f"sharpness {lam} outside [0, 1]")
    return lam * spin_projector(n, a, tol) + (1 - lam) * 0.5 * I2


def tensor(*ops):
    """Kronecker product of the operators (or vectors), left to right."""
    if len(ops) == 1 and not isinstance(ops[0], np.ndarray):
        ops = tuple(ops[0])
    return reduce(np.kron, ops)


def embed(op, slot, copies):
    """Place a single-qubit operator in ``slot`` of a ``copies``-qubit register."""
    factors = [I2] * copies
    factors[slot] = op
    return tensor(factors)


def symmetrize3(a, b, c):
    """Sum of a⊗b⊗c over all distinct placements of the three factors.

    With three different arguments this is the full six-term sum. When two
    arguments coincide only the three distinct placements are kept, and when
    all three coincide the result is the single term a⊗a⊗a.
    """
    args = (a, b, c)
    if any(x.shape != (2, 2) for x in args):
        raise ContractViolation("symmetrize3 takes single-qubit operators")
    labels = _identity_labels(args)
    seen = set()
    total = np.zeros((8, 8), dtype=complex)
    for perm in itertools.permutations(range(3)):
        key = tuple(labels[i] for i in perm)
        if key in seen:
            continue
        seen.add(key)
        total += tensor(*(args[i] for i in perm))
    return total


def _identity_labels(args):
    labels = []
    for i, x in enumerate(args):
        for j in range(i):
            if np.array_equal(x, args[j]):
                labels.append(labels[j])
                break
        else:
            labels.append(i)
    return labels


def pair_bracket(a, b, sign=1):
    """a⊗b + sign * b⊗a (sign=+1 anticommutator-like, -1 antisymmetric)."""
    if a.shape != b.shape:
        raise ContractViolation("pair_bracket needs operators of equal shape")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return np.kron(a, b) + sign * np.kron(b, a)


def pauli_words(n):
    """All length-n strings over I, X, Y, Z in lexicographic order."""
    return ["".join(w) for w in itertools.product(PAULI_LABELS, repeat=n)]


def pauli_word(word):
    return tensor(*(_PAULI[ch] for ch in word))


def pauli_basis(n):
    """Array of shape (4**n, 2**n, 2**n) holding every Pauli word operator."""
    return np.array([pauli_word(w) for w in pauli_words(n)])


def hs_decompose(op, cutoff=0.0):
    """Hilbert-Schmidt coefficients c_w = Tr[op W] / 2**n keyed by Pauli word.

    Coefficients with magnitude at or below ``cutoff`` are dropped. For a
    Hermitian input the values are returned as real floats.
    """
    n = num_qubits(op)
    basis = pauli_basis(n)
    # Tr[op W] = sum_ij op_ij W_ji
    coeffs = np.einsum("ij,wji->w", op, basis) / 2**n
    if is_hermitian(op):
        coeffs = coeffs.real
    return {w: c for w, c in zip(pauli_words(n), coeffs) if abs(c) > cutoff}


def hs_compose(coeffs):
    """Inverse of :func:`hs_decompose`."""
    if not coeffs:
        raise ValueError("empty coefficient map")
    lengths = {len(w) for w in coeffs}
    if len(lengths) != 1:
        raise ValueError("Pauli words of mixed length")
    n = lengths.pop()
    out = np.zeros((2**n, 2**n), dtype=complex)
    for w, c in coeffs.items():
        out += c * pauli_word(w)
    return out


def is_hermitian(op, tol=TOL_HERM):
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) <= tol)


def min_eigenvalue(op, tol_herm=TOL_HERM):
    if not is_hermitian(op, tol_herm):
        raise ContractViolation("eigenvalues requested for a non-Hermitian operator")
    return float(np.linalg.eigvalsh(0.5 * (op + op.conj().T))[0])


def is_psd(op, tol=TOL_PSD, tol_herm=TOL_HERM):
    """Return ``(psd, min_eig)``; psd is True iff min_eig >= -tol."""
    lo = min_eigenvalue(op, tol_herm)
    return lo >= -tol, lo


def flip_unitary(axis, tol=TOL_UNIT):
    """Unitary for a pi rotation of the Bloch sphere about ``axis``.

    Conjugation maps a Bloch vector v to 2 (axis.v) axis - v.
    """
    return sigma(_unit(axis, tol))


def conjugate(op, u):
    return u @ op @ u.conj().T


def bloch_vector(op):
    """Real 3-vector (Tr[op X], Tr[op Y], Tr[op Z]) of a qubit operator."""
    if op.shape != (2, 2):
        raise ContractViolation("bloch_vector takes a single-qubit operator")
    return np.array([np.trace(op @ p).real for p in (X, Y, Z)])


def partial_trace(op, keep, copies):
    """Reduced operator on the qubits listed in ``keep``."""
    keep = sorted(keep)
    t = op.reshape([2] * (2 * copies))
    drop = [q for q in range(copies) if q not in keep]
    # trace out from the highest index so axis positions stay valid
    for q in sorted(drop, reverse=True):
        t = np.trace(t, axis1=q, axis2=q + t.ndim // 2)
    d = 2 ** len(keep)
    return t.reshape(d, d)


def random_hermitian(dim, rng):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (a + a.conj().T)


def random_unit_vectors(count, rng):
    v = rng.normal(size=(count, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def qubit_ket(n):
    """Spinor |n> with n.sigma |n> = |n>, for a unit Bloch vector."""
    n = _unit(n)
    w, v = np.linalg.eigh(sigma(n))
    return v[:, 1]


# JSON helpers -----------------------------------------------------------

def operator_to_json(op):
    dim = op.shape[0]
    entries = [[float(z.real), float(z.imag)] for z in np.asarray(op).ravel()]
    return {"dim": int(dim), "entries": entries}


def operator_from_json(obj):
    try:
        dim = int(obj["dim"])
        entries = np.array([complex(re, im) for re, im in obj["entries"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed operator JSON: {exc}") from exc
    if entries.size != dim * dim:
        raise ValueError(f"operator JSON has {entries.size} entries for dim {dim}")
    op = entries.reshape(dim, dim)
    num_qubits(op)
    return op


def hs_to_json(coeffs):
    return {w: float(np.real(c)) for w, c in coeffs.items()}
