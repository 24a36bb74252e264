"""Sets of qubit spin observables and their geometry."""

from dataclasses import dataclass, field

import numpy as np

from .linalg import TOL_UNIT

ANGLE_TOL = 1e-9
T_HAT = np.ones(3) / np.sqrt(3)


class InvalidSetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ObservableSet:
    """Ordered list of distinct unit Bloch directions, one per spin observable."""

    directions: np.ndarray
    label: str = field(default="custom", compare=False)

    def __post_init__(self):
        d = np.array(self.directions, dtype=float)
        if d.ndim != 2 or d.shape[1] != 3 or len(d) == 0:
            raise InvalidSetError(f"directions must have shape (N, 3), got {d.shape}")
        norms = np.linalg.norm(d, axis=1)
        if np.any(np.abs(norms - 1) > TOL_UNIT):
            raise InvalidSetError("all directions must be unit vectors")
        for i in range(len(d)):
            for j in range(i):
                if _angle(d[i], d[j]) < ANGLE_TOL:
                    raise InvalidSetError(f"directions {j} and {i} coincide")
        d.setflags(write=False)
        object.__setattr__(self, "directions", d)

    def __len__(self):
        return len(self.directions)

    def __iter__(self):
        return iter(self.directions)

    def __getitem__(self, r):
        return self.directions[r]

    def gram(self):
        return self.directions @ self.directions.T

    def pairwise_angles(self):
        """Sorted angles between all pairs of directions."""
        n = len(self)
        return np.sort([_angle(self[i], self[j]) for i in range(n) for j in range(i + 1, n)])

    def rotated(self, rotation, label=None):
        return ObservableSet(self.directions @ np.asarray(rotation).T, label or self.label)

    def to_json(self):
        return {"label": self.label, "directions": self.directions.tolist()}

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(np.array(obj["directions"], dtype=float), obj.get("label", "custom"))
        except (KeyError, TypeError) as exc:
            raise InvalidSetError(f"malformed observable-set JSON: {exc}") from exc


def _angle(u, v):
    # atan2 form stays accurate for nearly parallel vectors
    return float(np.arctan2(np.linalg.norm(np.cross(u, v)), np.dot(u, v)))


def sytri():
    """Three equatorial directions at 120 degrees, orthogonal to (1,1,1)."""
    d = np.array([[2, -1, -1], [-1, 2, -1], [-1, -1, 2]]) / np.sqrt(6)
    return ObservableSet(d, "sytri")


def sytet():
    """Four directions along the vertices of a regular tetrahedron."""
    d = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / np.sqrt(3)
    return ObservableSet(d, "sytet")


def mub():
    return ObservableSet(np.eye(3), "mub")


def orthogonal_pair():
    """Spin along x and along z."""
    return ObservableSet(np.eye(3)[[0, 2]], "pair")


def theta_family(theta):
    """Three directions, each at angle theta from (1,1,1)/sqrt(3), symmetric
    under cyclic permutation of the coordinates."""
    if not 0 < theta < np.pi:
        raise InvalidSetError("theta must lie strictly between 0 and pi")
    c, s = np.cos(theta), np.sin(theta)
    alpha = (np.sqrt(3) * c + np.sqrt(6) * s) / 3
    beta = (2 * np.sqrt(3) * c - np.sqrt(6) * s) / 6
    d = np.array([[alpha, beta, beta], [beta, alpha, beta], [beta, beta, alpha]])
    # renormalise away the last-ulp drift of the closed form
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return ObservableSet(d, f"theta:{theta!r}")


def pairwise_angle(theta):
    """Common angle between the directions of ``theta_family(theta)``."""
    return float(np.arccos((3 * np.cos(theta) ** 2 - 1) / 2))


def n_sytet(n, rotations):
    """Union of ``n`` rotated copies of :func:`sytet`."""
    rotations = list(rotations)
    if n < 1 or len(rotations) != n:
        raise InvalidSetError(f"need exactly n={n} rotations, got {len(rotations)}")
    base = sytet().directions
    parts = []
    for rot in rotations:
        rot = np.asarray(rot, dtype=float)
        if rot.shape != (3, 3) or not np.allclose(rot @ rot.T, np.eye(3), atol=1e-10):
            raise InvalidSetError("rotations must be 3x3 orthogonal matrices")
        parts.append(base @ rot.T)
    return ObservableSet(np.vstack(parts), f"{n}-sytet")


def rotation_z(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def is_equatorial(obs, tol=ANGLE_TOL):
    """Return ``(coplanar, normal)`` for the plane through the origin holding
    every direction; ``normal`` is None when no such plane exists."""
    if len(obs) < 2:
        raise InvalidSetError("need at least two directions")
    _, s, vt = np.linalg.svd(obs.directions)
    normal = vt[-1]
    if np.max(np.abs(obs.directions @ normal)) < tol:
        return True, normal
    return False, None


def random_set(n, rng, equatorial=False, min_angle=0.05):
    """Seeded random set of ``n`` directions, optionally confined to a plane.

    Directions closer than ``min_angle`` (or antipodal within it) are
    redrawn so the SDPs built on them stay well conditioned.
    """
    for _ in range(1000):
        if equatorial:
            normal = rng.normal(size=3)
            normal /= np.linalg.norm(normal)
            e1 = np.cross(normal, rng.normal(size=3))
            e1 /= np.linalg.norm(e1)
            e2 = np.cross(normal, e1)
            phis = rng.uniform(0, 2 * np.pi, size=n)
            d = np.outer(np.cos(phis), e1) + np.outer(np.sin(phis), e2)
        else:
            d = rng.normal(size=(n, 3))
            d /= np.linalg.norm(d, axis=1, keepdims=True)
        ang = [_angle(d[i], d[j]) for i in range(n) for j in range(i)]
        if all(min_angle < a < np.pi - min_angle for a in ang):
            kind = "equatorial" if equatorial else "random"
            return ObservableSet(d, f"{kind}-{n}")
    raise RuntimeError("could not draw a well separated set")


BUILTIN_SETS = {"sytri": sytri, "sytet": sytet, "mub": mub, "pair": orthogonal_pair}
