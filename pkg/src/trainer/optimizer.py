# src/trainer/optimizer.py
# Adam optimizer with bias-corrected moments and the step learning-rate schedule
# Moments are kept in float64 whatever the parameter dtype

import numpy as np


class Adam:
    def __init__(self, lr=0.001, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon

        # First and second moment estimates, keyed like the parameter dict
        self.m = {}
        self.v = {}
        # Timestep counter
        self.t = 0

    def step(self, params, grads, lr=None):
        """Updates `params` in place; `lr` overrides the base rate for this step."""
        self.t += 1
        lr = self.lr if lr is None else lr

        # Bias corrections once per step, not per parameter
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t

        for k in params:
            g = np.asarray(grads[k], dtype=np.float64)
            if k not in self.m:
                self.m[k] = np.zeros(g.shape, dtype=np.float64)
                self.v[k] = np.zeros(g.shape, dtype=np.float64)

            self.m[k] *= self.beta1
            self.m[k] += (1.0 - self.beta1) * g
            self.v[k] *= self.beta2
            self.v[k] += (1.0 - self.beta2) * (g * g)

            m_hat = self.m[k] / bc1
            v_hat = self.v[k] / bc2
            update = lr * m_hat / (np.sqrt(v_hat) + self.epsilon)
            params[k][...] = params[k] - update

    def state_arrays(self):
        """Flat {name: array} view of the optimizer state for np.savez."""
        arrays = {f'm.{k}': v for k, v in self.m.items()}
        arrays.update({f'v.{k}': v for k, v in self.v.items()})
        return arrays

    def load_state_arrays(self, arrays, t):
        self.m = {k[2:]: np.array(v, dtype=np.float64) for k, v in arrays.items() if k.startswith('m.')}
        self.v = {k[2:]: np.array(v, dtype=np.float64) for k, v in arrays.items() if k.startswith('v.')}
        self.t = int(t)


def lr_at(epoch, config):
    """Step decay: the base rate halves every `lr_halving_period` epochs (epochs are 1-based)."""
    if epoch < 1:
        raise ValueError(f"epoch must be >= 1, got {epoch}")
    return config.learning_rate * 0.5 ** ((epoch - 1) // config.lr_halving_period)
