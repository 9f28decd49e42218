import numpy as np

from coverspectra import validate_ifs


def random_spec(rng, n_maps=None, lam_lo=0.05, lam_hi=0.9, p_floor=0.02):
    """Random valid spec; probabilities kept away from zero."""
    n = n_maps or int(rng.integers(2, 5))
    lambdas = rng.uniform(lam_lo, lam_hi, n)
    raw = rng.uniform(p_floor, 1.0, n)
    probs = raw / raw.sum()
    probs[-1] = 1.0 - probs[:-1].sum()
    return validate_ifs(lambdas.tolist(), probs.tolist())
