"""Hot inner loops, compiled with numba when available.

Every kernel below is written once in numba-compatible numpy and exported in
two flavors: a plain-Python/numpy version (suffix ``_numpy``) and, when numba
imports and ``RMT_EQUIV_NO_NUMBA`` is not set, an ``@njit``-compiled twin
(suffix ``_jit``). The module-level unsuffixed names point at the selected
implementation; the rest of the package only uses those.

``benchmarks/bench_kernels.py`` times both flavors side by side.
"""

import os

import numpy as np

_FORCE_NUMPY = os.environ.get("RMT_EQUIV_NO_NUMBA", "").strip().lower() in {
    "1", "true", "yes", "on",
}


def delta_scm_iterate_numpy(c_eigs, n, z, tol, max_iter, delta0):
    """Damped fixed-point iteration for the sample-covariance DE.

    Iterates delta <- (1/n) sum_i c_i / (c_i/(1+delta) - z) from delta0.
    A 0.5 damping factor kicks in permanently once the step direction
    reverses (oscillation). Returns (delta, residual, iterations, converged).
    """
    delta = delta0 + 0.0j
    damping = 1.0
    prev_step = 0.0 + 0.0j
    for k in range(max_iter):
        target = np.sum(c_eigs / (c_eigs / (1.0 + delta) - z)) / n
        step = target - delta
        if k > 0 and (step.real * prev_step.real + step.imag * prev_step.imag) < 0.0:
            damping = 0.5
        new = delta + damping * step
        if abs(new - delta) <= tol:
            resid = abs(np.sum(c_eigs / (c_eigs / (1.0 + new) - z)) / n - new)
            return new, resid, k + 1, True
        prev_step = step
        delta = new
    resid = abs(np.sum(c_eigs / (c_eigs / (1.0 + delta) - z)) / n - delta)
    return delta, resid, max_iter, False


def delta_gram_iterate_numpy(k_eigs, n, d, gamma, tol, max_iter, delta0):
    """Damped fixed-point iteration for the nonlinear-Gram DE.

    Iterates delta <- (1/n) sum_i k_i / ((d/n) k_i/(1+delta) + gamma).
    Same damping rule as the SCM solver. Returns
    (delta, residual, iterations, converged).
    """
    delta = delta0
    damping = 1.0
    prev_step = 0.0
    ratio = d / n
    for k in range(max_iter):
        target = np.sum(k_eigs / (ratio * k_eigs / (1.0 + delta) + gamma)) / n
        step = target - delta
        if k > 0 and step * prev_step < 0.0:
            damping = 0.5
        new = delta + damping * step
        if abs(new - delta) <= tol:
            resid = abs(
                np.sum(k_eigs / (ratio * k_eigs / (1.0 + new) + gamma)) / n - new
            )
            return new, resid, k + 1, True
        prev_step = step
        delta = new
    resid = abs(np.sum(k_eigs / (ratio * k_eigs / (1.0 + delta) + gamma)) / n - delta)
    return delta, resid, max_iter, False


def theta_bisect_numpy(k_eigs, d_over_n, tol, max_iter):
    """Bisection for theta: (1/n) sum_i k_i/(k_i + theta/d_over_n) = d_over_n.

    The left side is strictly decreasing in theta, so plain bisection on a
    bracket is unconditionally convergent. Returns (theta, iterations).
    """
    n = k_eigs.shape[0]
    inv = 1.0 / d_over_n
    lo = 0.0
    hi = np.max(k_eigs) * inv
    # widen until the bracket is valid (cheap; one or two doublings at most)
    for _ in range(200):
        g_hi = np.sum(k_eigs / (k_eigs + hi * inv)) / n - d_over_n
        if g_hi < 0.0:
            break
        hi *= 2.0
    it = 0
    while hi - lo > tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        g = np.sum(k_eigs / (k_eigs + mid * inv)) / n - d_over_n
        if g > 0.0:
            lo = mid
        else:
            hi = mid
        it += 1
    return 0.5 * (lo + hi), it


def relu_pair_kernel_numpy(gram, norms_a, norms_b):
    """Entrywise degree-1 arc-cosine kernel.

    K[i,j] = (|a_i||b_j| / 2pi) * (sqrt(1-rho^2) + (pi - arccos(rho)) rho),
    with rho the cosine of the angle between columns, clamped to [-1, 1].
    """
    scale = norms_a.reshape(-1, 1) * norms_b.reshape(1, -1)
    rho = gram / scale
    rho = np.minimum(np.maximum(rho, -1.0), 1.0)
    ang = np.arccos(rho)
    return (scale / (2.0 * np.pi)) * (np.sqrt(1.0 - rho * rho) + (np.pi - ang) * rho)


HAS_NUMBA = False
if not _FORCE_NUMPY:
    try:
        from numba import njit

        delta_scm_iterate_jit = njit(cache=True)(delta_scm_iterate_numpy)
        delta_gram_iterate_jit = njit(cache=True)(delta_gram_iterate_numpy)
        theta_bisect_jit = njit(cache=True)(theta_bisect_numpy)
        relu_pair_kernel_jit = njit(cache=True)(relu_pair_kernel_numpy)
        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass

if HAS_NUMBA:
    delta_scm_iterate = delta_scm_iterate_jit
    delta_gram_iterate = delta_gram_iterate_jit
    theta_bisect = theta_bisect_jit
    relu_pair_kernel = relu_pair_kernel_jit
else:
    delta_scm_iterate = delta_scm_iterate_numpy
    delta_gram_iterate = delta_gram_iterate_numpy
    theta_bisect = theta_bisect_numpy
    relu_pair_kernel = relu_pair_kernel_numpy
