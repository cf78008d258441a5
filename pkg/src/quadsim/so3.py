"""Rotation group operations: hat/vee, Exp/Log and the left Jacobian.

All functions take and return plain numpy arrays. Rotations are 3x3
matrices, tangent vectors are 3-vectors ``phi * u`` with ``phi`` in radians.
The closed forms are singular at ``phi = 0`` and ``phi = pi``; both ends are
handled with series expansions or their exact limits.
"""
import numpy as np

SMALL_ANGLE = 1e-6
PI_ANGLE = 1e-6
ORTHO_TOL = 1e-9
SKEW_TOL = 1e-9

_I3 = np.eye(3)


class NonSkewInput(ValueError):
    """Matrix passed to :func:`vee` is not skew-symmetric."""


class NotARotation(ValueError):
    """Matrix is not orthonormal with unit determinant."""


def hat(v):
    """Skew-symmetric matrix such that ``hat(a) @ b == cross(a, b)``."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def cross(a, b):
    """Cross product of two 3-vectors (much cheaper than ``np.cross`` for one pair)."""
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def vee(S, tol=SKEW_TOL):
    """Inverse of :func:`hat`.

    Raises:
        NonSkewInput: if ``||S + S^T||_F > tol``.
    """
    S = np.asarray(S, dtype=float)
    if np.linalg.norm(S + S.T) > tol:
        raise NonSkewInput(f"matrix is not skew-symmetric: {S!r}")
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def _vee_unchecked(S):
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def is_rotation(R, tol=ORTHO_TOL):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    E = R.T @ R - _I3
    # Determinant as the triple product of the columns.
    det = R[:, 0] @ cross(R[:, 1], R[:, 2])
    return bool(np.sqrt(np.sum(E * E)) <= tol and abs(det - 1.0) <= tol)


def check_rotation(R, tol=ORTHO_TOL):
    if not is_rotation(R, tol):
        raise NotARotation(f"not a rotation matrix: {R!r}")


# Below this angle (phi - sin phi) / phi^3 and 1 - (phi/2) cot(phi/2) lose
# digits to cancellation and are evaluated by their series instead.
SERIES_ANGLE = 1e-2


def _one_minus_cos_over_sq(phi):
    """``(1 - cos phi) / phi^2`` without cancellation."""
    s = np.sin(0.5 * phi) / phi
    return 2.0 * s * s


def exp_map(v):
    """Map a rotation vector to SO(3) with the Rodrigues formula.

    Vectors longer than pi are accepted; the formula is 2*pi periodic in the
    angle so no explicit wrapping is needed.
    """
    v = np.asarray(v, dtype=float)
    phi = np.sqrt(v @ v)
    K = hat(v)
    if phi < SMALL_ANGLE:
        phi2 = phi * phi
        a = 1.0 - phi2 / 6.0 + phi2 * phi2 / 120.0
        b = 0.5 - phi2 / 24.0 + phi2 * phi2 / 720.0
    else:
        a = np.sin(phi) / phi
        b = _one_minus_cos_over_sq(phi)
    return _I3 + a * K + b * (K @ K)


def canonical_axis(u):
    """Flip ``u`` so its first component with magnitude above 1e-9 is positive."""
    for c in u:
        if abs(c) > 1e-9:
            return u if c > 0 else -u
    return u


def _axis_at_pi(R):
    # Symmetric part of (R + I)/2 equals c*I + (1 - c)*u u^T with c = (1 + cos)/2,
    # so its top eigenvector is the rotation axis.
    B = 0.25 * (R + R.T) + 0.5 * _I3
    w, V = np.linalg.eigh(B)
    u = V[:, np.argmax(w)]
    return u / np.linalg.norm(u)


def log_map(R, check=True):
    """Map a rotation matrix to its rotation vector with angle in [0, pi].

    At exactly pi the axis sign is ambiguous and is made canonical (first
    non-negligible component positive).

    Raises:
        NotARotation: if ``R`` is not a valid rotation (when ``check``).
    """
    R = np.asarray(R, dtype=float)
    if check:
        check_rotation(R)
    w = _vee_unchecked(R - R.T)
    s = 0.5 * np.sqrt(w @ w)
    c = 0.5 * (R[0, 0] + R[1, 1] + R[2, 2] - 1.0)
    phi = np.arctan2(s, c)
    if phi < SMALL_ANGLE:
        # phi / sin(phi) = 1 + phi^2/6 + O(phi^4)
        return 0.5 * w * (1.0 + phi * phi / 6.0)
    if np.pi - phi < PI_ANGLE:
        u = _axis_at_pi(R)
        if s > 1e-10:
            # Skew part still carries the axis sign.
            if u @ w < 0.0:
                u = -u
        else:
            u = canonical_axis(u)
        return phi * u
    return phi * w / (2.0 * s)


def left_jacobian(v):
    """Left Jacobian of SO(3), ``int_0^1 Exp(alpha v) d alpha``."""
    v = np.asarray(v, dtype=float)
    phi = np.sqrt(v @ v)
    K = hat(v)
    phi2 = phi * phi
    if phi < SMALL_ANGLE:
        a = 0.5 - phi2 / 24.0
    else:
        a = _one_minus_cos_over_sq(phi)
    if phi < SERIES_ANGLE:
        b = 1.0 / 6.0 - phi2 / 120.0 + phi2 * phi2 / 5040.0 - phi2 ** 3 / 362880.0
    else:
        b = (phi - np.sin(phi)) / (phi2 * phi)
    return _I3 + a * K + b * (K @ K)


def left_jacobian_inv(v):
    """Inverse of :func:`left_jacobian`.

    Uses the half-angle form ``I - (phi/2) u^ + (1 - (phi/2) cot(phi/2)) u^ u^``.
    Unlike ``(1 + cos phi) / (2 phi sin phi)`` it has no 0/0 at a half-turn and
    evaluates to the limit ``I - (pi/2) u^ + u^ u^`` there.
    """
    v = np.asarray(v, dtype=float)
    phi = np.sqrt(v @ v)
    if phi < SMALL_ANGLE:
        K = hat(v)
        return _I3 - 0.5 * K + (1.0 / 12.0 + phi * phi / 720.0) * (K @ K)
    u = v / phi
    U = hat(u)
    half = 0.5 * phi
    if phi < SERIES_ANGLE:
        phi2 = phi * phi
        b = phi2 / 12.0 + phi2 * phi2 / 720.0 + phi2 ** 3 / 30240.0
    elif abs(phi - np.pi) < PI_ANGLE:
        # cot(phi/2) ~ (pi - phi) / 2 here
        b = 1.0 - half * np.tan(0.5 * (np.pi - phi))
    else:
        b = 1.0 - half * np.cos(half) / np.sin(half)
    return _I3 - half * U + b * (U @ U)
