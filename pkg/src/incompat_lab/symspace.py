"""Permutation-symmetric subspace of n qubits.

Dicke states, the symmetric projector, the Vandermonde determinant and the
rank argument showing that N distinct spin observables admit no perfect
joint measurement on N-1 identical copies.
"""

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .linalg import qubit_ket, tensor
from .observables import InvalidSetError

RANK_RTOL = 1e-10


def dicke_state(n, r):
    """Normalised equal superposition of the n-qubit strings of Hamming weight r.

    Qubit value 1 marks an excitation; basis ordering is big-endian, as for
    ``np.kron``.
    """
    if n < 1 or not 0 <= r <= n:
        raise ValueError(f"need 0 <= r <= n with n >= 1, got n={n}, r={r}")
    vec = np.zeros(2**n, dtype=complex)
    for ones in itertools.combinations(range(n), r):
        vec[sum(1 << (n - 1 - q) for q in ones)] = 1.0
    return vec / np.sqrt(comb(n, r))


def dicke_basis(n):
    """Array of shape (n+1, 2**n) whose rows are the Dicke states."""
    return np.array([dicke_state(n, r) for r in range(n + 1)])


def symmetric_projector(n):
    basis = dicke_basis(n)
    return basis.T @ basis.conj()


def permutation_operator(perm):
    """Unitary that moves qubit i to position perm[i]."""
    n = len(perm)
    dim = 2**n
    out = np.zeros((dim, dim))
    for idx in range(dim):
        bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
        new = [0] * n
        for q, b in enumerate(bits):
            new[perm[q]] = b
        out[int("".join(map(str, new)), 2), idx] = 1
    return out


def vandermonde_matrix(z):
    z = np.asarray(z, dtype=complex)
    return np.vander(z, increasing=True)


def vandermonde_det(z):
    """prod_{i<j} (z_j - z_i)."""
    z = np.asarray(z, dtype=complex)
    if z.size == 0:
        raise ValueError("empty node list")
    out = 1.0 + 0j
    for j in range(len(z)):
        for i in range(j):
            out *= z[j] - z[i]
    return out


def tensor_power_span_dim(states, n, rtol=RANK_RTOL):
    """Numerical rank of the columns |psi_i>^{⊗n}."""
    states = [np.asarray(s, dtype=complex) for s in states]
    if not states:
        raise ValueError("no states given")
    if n < 1:
        raise ValueError("tensor power must be >= 1")
    cols = np.array([tensor([s] * n) for s in states]).T
    sv = np.linalg.svd(cols, compute_uv=False)
    return int(np.sum(sv > rtol * sv[0]))


@dataclass
class Prop1Witness:
    n_observables: int
    copies: int
    sym_dim: int
    complement_dim: int
    span_dims: dict
    spans_symmetric: bool

    @property
    def perfect_joint_measurement_impossible(self):
        """Every effect is confined to the complement of Sym^k, so the
        effects cannot sum to the identity."""
        return self.spans_symmetric

    def to_json(self):
        return {
            "n_observables": self.n_observables,
            "copies": self.copies,
            "sym_dim": self.sym_dim,
            "complement_dim": self.complement_dim,
            "min_span_dim": min(self.span_dims.values()),
            "spans_symmetric": self.spans_symmetric,
            "impossible": self.perfect_joint_measurement_impossible,
        }


def prop1_orthogonality_witness(obs, copies=None):
    """Rank certificate against perfect joint measurability on N-1 copies.

    For every outcome string a, a perfect parent effect must annihilate the
    states |psi_{-a_r n_r}>^{⊗k}. When those N states span the whole
    symmetric subspace the effect lives on its complement, whose dimension
    is 2**k - (k+1).
    """
    n_obs = len(obs)
    if n_obs < 2:
        raise InvalidSetError("need at least two distinct directions")
    k = n_obs - 1 if copies is None else copies
    sym = symmetric_projector(k)
    sym_dim = k + 1
    span_dims = {}
    ok = True
    for signs in itertools.product((1, -1), repeat=n_obs):
        kets = [qubit_ket(-a * n) for a, n in zip(signs, obs)]
        dim = tensor_power_span_dim(kets, k)
        span_dims[signs] = dim
        powers = np.array([tensor([s] * k) for s in kets]).T
        inside = np.allclose(sym @ powers, powers, atol=1e-10)
        ok = ok and inside and dim == sym_dim
    return Prop1Witness(n_obs, k, sym_dim, 2**k - sym_dim, span_dims, ok)
