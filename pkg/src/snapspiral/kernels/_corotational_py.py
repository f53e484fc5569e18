"""Vectorized numpy implementation of the corotational element hot loop.

Same contract as the compiled kernel: per-element internal force (m, 6),
consistent tangent (m, 6, 6) and strain energy (m,) for 2-D corotational
Euler-Bernoulli frame elements. Truss behaviour falls out of EI = 0.
"""

import numpy as np

BACKEND = "python"


def _local_state(X, conn, L0, u):
    """Current chord geometry and local deformations for every element."""
    i, j = conn[:, 0], conn[:, 1]
    x1 = X[i] + u.reshape(-1, 3)[i, :2]
    x2 = X[j] + u.reshape(-1, 3)[j, :2]
    dx = x2 - x1
    L = np.hypot(dx[:, 0], dx[:, 1])
    if np.any(L < 1e-9):
        from ..errors import SingularElementError

        k = int(np.argmin(L))
        raise SingularElementError(
            f"element {k} collapsed to length {L[k]:.3e} mm"
        )
    c = dx[:, 0] / L
    s = dx[:, 1] / L

    D = X[j] - X[i]
    beta0 = np.arctan2(D[:, 1], D[:, 0])
    beta = np.arctan2(dx[:, 1], dx[:, 0])
    alpha = beta - beta0
    th1 = u.reshape(-1, 3)[i, 2] - alpha
    th2 = u.reshape(-1, 3)[j, 2] - alpha
    # wrap to (-pi, pi]: local rotations stay small for a resolved mesh
    th1 = np.arctan2(np.sin(th1), np.cos(th1))
    th2 = np.arctan2(np.sin(th2), np.cos(th2))

    ul = (L * L - L0 * L0) / (L + L0)
    return L, c, s, ul, th1, th2


def batch_force_tangent(X, conn, EA, EI, L0, u):
    m = len(conn)
    L, c, s, ul, th1, th2 = _local_state(X, conn, L0, u)

    N = EA * ul / L0
    M1 = (EI / L0) * (4.0 * th1 + 2.0 * th2)
    M2 = (EI / L0) * (2.0 * th1 + 4.0 * th2)

    zeros = np.zeros(m)
    r = np.stack([-c, -s, zeros, c, s, zeros], axis=1)
    z = np.stack([s, -c, zeros, -s, c, zeros], axis=1)

    B = np.zeros((m, 3, 6))
    B[:, 0, :] = r
    B[:, 1, :] = -z / L[:, None]
    B[:, 1, 2] += 1.0
    B[:, 2, :] = -z / L[:, None]
    B[:, 2, 5] += 1.0

    fel = (N[:, None] * r
           + M1[:, None] * B[:, 1, :]
           + M2[:, None] * B[:, 2, :])

    kl = np.zeros((m, 3, 3))
    kl[:, 0, 0] = EA / L0
    kl[:, 1, 1] = 4.0 * EI / L0
    kl[:, 2, 2] = 4.0 * EI / L0
    kl[:, 1, 2] = 2.0 * EI / L0
    kl[:, 2, 1] = 2.0 * EI / L0

    kel = np.einsum("eai,eab,ebj->eij", B, kl, B)
    zz = z[:, :, None] * z[:, None, :]
    rz = r[:, :, None] * z[:, None, :]
    kel += (N / L)[:, None, None] * zz
    kel += ((M1 + M2) / L**2)[:, None, None] * (rz + rz.transpose(0, 2, 1))
    return fel, kel


def batch_energy(X, conn, EA, EI, L0, u):
    _, _, _, ul, th1, th2 = _local_state(X, conn, L0, u)
    axial = EA * ul * ul / (2.0 * L0)
    bend = (EI / L0) * 2.0 * (th1 * th1 + th1 * th2 + th2 * th2)
    return axial + bend
