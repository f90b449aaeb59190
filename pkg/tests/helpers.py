"""Shared test utilities: central finite-difference gradient checking."""

import numpy as np

from dynhi.nn import Parameter


def finite_difference_grads(loss_fn, params, step=1e-4):
    """Numerical gradient of a scalar-valued closure w.r.t. every parameter."""
    grads = []
    for p in params:
        g = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = loss_fn()
            flat[i] = orig - step
            down = loss_fn()
            flat[i] = orig
            gflat[i] = (up - down) / (2 * step)
        grads.append(g)
    return grads


def max_relative_error(analytic, numeric):
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-6)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def check_gradients(build_loss, params, step=1e-4, tol=1e-4):
    """Assert analytic gradients of `build_loss()` match central differences.

    `build_loss` must construct a fresh graph (returning a scalar Tensor) on
    every call, reading the current parameter values.
    """
    for p in params:
        p.grad = np.zeros_like(p.data)
    build_loss().backward()
    analytic = [p.grad.copy() for p in params]
    numeric = finite_difference_grads(lambda: build_loss().item(), params, step=step)
    err = max_relative_error(analytic, numeric)
    assert err < tol, f"gradient mismatch: max relative error {err:.3e} >= {tol}"
    for p in params:
        p.grad = np.zeros_like(p.data)
    return err


def make_params(rng, *shapes):
    return [Parameter(rng.standard_normal(shape)) for shape in shapes]
