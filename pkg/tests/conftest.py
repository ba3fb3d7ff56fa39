import numpy as np

from parisphere.measures import StepCDF


def random_step_cdf(rng: np.random.Generator, kmax: int = 6, atom_at_zero_prob: float = 0.4) -> StepCDF:
    """Random valid step c.d.f. with 1..kmax jumps."""
    k = int(rng.integers(1, kmax + 1))
    incs = rng.uniform(0.02, 1.0, size=k)
    qs = 0.95 * np.cumsum(incs) / np.sum(incs)
    if rng.random() < atom_at_zero_prob:
        qs = qs - qs[0]  # shift so the first atom sits at 0
        qs = qs * (0.95 / max(qs[-1], 1e-9)) if k > 1 else qs
    w = rng.uniform(0.05, 1.0, size=k)
    ms = np.cumsum(w) / np.sum(w)
    ms[-1] = 1.0
    return StepCDF(tuple((float(q), float(m)) for q, m in zip(qs, ms)))


def random_mixture(rng: np.random.Generator, even_only: bool = False, max_terms: int = 3):
    from parisphere.mixture import MixtureSpec

    degrees = [2, 4, 6, 8] if even_only else [1, 2, 3, 4, 5, 6, 7, 8]
    n = int(rng.integers(1, max_terms + 1))
    chosen = rng.choice(degrees, size=min(n, len(degrees)), replace=False)
    if not any(p >= 2 for p in chosen):
        chosen = np.append(chosen, 2)
    return MixtureSpec({int(p): float(rng.uniform(0.2, 1.2)) for p in chosen})
