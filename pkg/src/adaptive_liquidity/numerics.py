"""Overflow-safe log-sum-exp and softmax."""

import numpy as np


def logsumexp(z, axis=-1):
    z = np.asarray(z, dtype=float)
    top = np.max(z, axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(z - top), axis=axis, keepdims=True)) + top
    out = np.squeeze(out, axis=axis)
    return out if out.ndim else float(out)


def softmax(z, axis=-1):
    z = np.asarray(z, dtype=float)
    e = np.exp(z - np.max(z, axis=axis, keepdims=True))
    return e / np.sum(e, axis=axis, keepdims=True)
