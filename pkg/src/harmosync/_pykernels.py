"""Pure-Python sampled-data propagation kernel (fallback for ``_ckernels``)."""
import numpy as np

BACKEND = "python"


def propagate(E, G, Phi, x0, mu, control, delta, K, M, n_steps):
    """Iterate the closed loop over ``n_steps`` sampling periods.

    With coupling on at sample ``k``::

        res = mu_k * q(v_k / mu_k) - v_k
        X_{k+1} = E X_k + G res

    and with coupling off ``X_{k+1} = Phi X_k``.  Returns the sampled
    states ``(n_steps+1, 2n)``, the quantization residuals ``(n_steps, n)``
    and a per-sample saturation flag.
    """
    E = np.ascontiguousarray(E, dtype=float)
    G = np.ascontiguousarray(G, dtype=float)
    Phi = np.ascontiguousarray(Phi, dtype=float)
    n2 = E.shape[0]
    n = n2 // 2
    step = 2.0 * delta
    X = np.empty((n_steps + 1, n2))
    R = np.zeros((n_steps, n))
    sat = np.zeros(n_steps, dtype=np.uint8)
    X[0] = x0
    for k in range(n_steps):
        x = X[k]
        if control[k]:
            m = mu[k]
            y = x[n:] / m
            idx = np.clip(np.floor(y / step + 0.5), -K, K)
            res = m * (step * idx) - x[n:]
            if np.any(np.abs(y) > M):
                sat[k] = 1
            R[k] = res
            X[k + 1] = E @ x + G @ res
        else:
            X[k + 1] = Phi @ x
    return X, R, sat
