"""Pure-numpy Euler-Maruyama loop; fallback for the compiled ``_emcore``.

Vectorized over paths, sequential over time steps.
"""

import math

import numpy as np

FAM_CONSTANT, FAM_COSINE, FAM_AFFINE, FAM_LINEAR = range(4)


def _kernel_batch(family, X, G0, Gs, a, k, gamma):
    n, m = G0.shape
    if family == FAM_COSINE:
        return (a * np.cos(k * X))[:, :, None]
    G = np.broadcast_to(G0, (X.shape[0], n, m))
    if family == FAM_AFFINE:
        scale = gamma * np.sqrt(np.sum(X * X, axis=1)) / math.sqrt(n * m)
        return G + scale[:, None, None]
    if family == FAM_LINEAR:
        return G + np.einsum("pl,lij->pij", X, Gs)
    return G


def integrate(A, family, G0, Gs, a, k, gamma, x0, dW, dt, threshold):
    """Integrate a batch of paths.

    Parameters
    ----------
    A : ndarray, shape (n, n)
    family : int
        Kernel family code (constant, cosine, affine, linear).
    G0 : ndarray, shape (n, m)
    Gs : ndarray, shape (n, n, m)
        Linear-part matrices; ignored unless ``family`` is linear.
    a, k, gamma : float
        Scalar kernel parameters; unused ones are ignored.
    x0 : ndarray, shape (p, n)
    dW : ndarray, shape (p, steps, m)
        Wiener increments, already scaled by ``sqrt(dt)``.
    dt : float
    threshold : float
        Any ``|x_i|`` above this aborts the batch.

    Returns
    -------
    states : ndarray, shape (p, steps + 1, n)
    bad_path, bad_step : int
        ``-1, -1`` when every path stayed finite.
    """
    A = np.asarray(A, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    dW = np.asarray(dW, dtype=float)
    p, n = x0.shape
    steps = dW.shape[1]
    states = np.empty((p, steps + 1, n))
    states[:, 0] = x0
    X = x0.copy()
    for s in range(steps):
        G = _kernel_batch(family, X, G0, Gs, a, k, gamma)
        drift = np.einsum("ij,pj->pi", A, X)
        noise = np.einsum("pij,pj->pi", G, dW[:, s])
        X = X + drift * dt + noise
        states[:, s + 1] = X
        bad = ~np.isfinite(X) | (np.abs(X) > threshold)
        if bad.any():
            return states, int(np.flatnonzero(bad.any(axis=1))[0]), s + 1
    return states, -1, -1
