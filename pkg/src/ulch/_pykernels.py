"""Pure-numpy implementations of the hot kernels.

Signatures mirror ``_ckernels`` exactly; ``_backend`` picks one at import.
"""
import numpy as np


def periodic_window_sum(a, weights):
    """``out[i, j] = sum_m weights[m + M] * a[i, (j + m) % n]`` for 2-D ``a``."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    half = (weights.size - 1) // 2
    out = np.zeros_like(a)
    for m in range(-half, half + 1):
        w = weights[m + half]
        if w != 0.0:
            out += w * np.roll(a, -m, axis=1)
    return out


def poly_f_fprime(u, coeffs):
    """Horner evaluation of f(u) = sum c_i u^i and f'(u); coeffs ascending."""
    u = np.asarray(u, dtype=np.float64)
    c = np.asarray(coeffs, dtype=np.float64)
    f = np.full_like(u, c[-1])
    fp = np.zeros_like(u)
    for ci in c[-2::-1]:
        fp = fp * u + f
        f = f * u + ci
    return f, fp


def singular_f_fprime(u, l, alpha):
    """f(u) = u (1-u^2)^(-l) - alpha u and its derivative; caller checks |u| < 1."""
    u = np.asarray(u, dtype=np.float64)
    s = 1.0 - u * u
    p = s ** (-l)
    f = u * p - alpha * u
    fp = p + 2.0 * l * u * u * p / s - alpha
    return f, fp
