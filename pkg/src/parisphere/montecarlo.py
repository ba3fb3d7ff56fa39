"""Small-N Monte Carlo for the spherical mixed p-spin Gibbs measures.

Disorder is stored as full unsymmetrized Gaussian coefficient tensors,
one per degree, exactly matching the Hamiltonian's normalization
H(s) = sum_p gamma_p N^(-(p-1)/2) <g_p, s^(x p)>; desk-scale N makes the
memory cost irrelevant and keeps the covariance identity
E H(s1) H(s2) = N xi(R(s1, s2)) free of combinatorial factors.  Chains
are Metropolis walks on the sphere with an isotropic projected proposal.
Everything is seeded by fixed-stride splitting so reruns are
bit-identical.

The asymptotic chaos statements are qualitative overlays here: no
finite-N rate is available, so simulator output never gates on them.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from parisphere.chaos import NotApplicable, cross_overlap_prediction
from parisphere.measures import StepCDF
from parisphere.mixture import MixtureSpec
from parisphere.solver import parisi_solve

__all__ = [
    "BudgetExceeded",
    "DisorderRealization",
    "SphereState",
    "McmcParams",
    "SimConfig",
    "OverlapStats",
    "sample_disorder",
    "energy",
    "covariance_selftest",
    "uniform_sphere_sample",
    "mcmc_run",
    "overlap",
    "chaos_experiment",
    "ks_statistic",
    "permutation_ks_test",
]

TENSOR_BUDGET = 10**8  # max total entries over all degree tensors
_DISORDER_STRIDE = 104729
_CHAIN_STRIDE = 7919
NON_REPRODUCIBILITY_NOTE = (
    "The chaos limit and the overlap-support concentration are asymptotic "
    "(N -> infinity) statements; predicted atoms are qualitative overlays "
    "only and are not reproducible as quantitative pass/fail checks at desk scale."
)


class BudgetExceeded(RuntimeError):
    """Requested disorder tensors exceed the entry budget."""


@dataclass(frozen=True)
class SphereState:
    """Point on the sphere of radius sqrt(N), |coords|^2 = N within 1e-9."""

    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, float)
        object.__setattr__(self, "coords", coords)
        n = len(coords)
        if n < 1:
            raise ValueError("empty state")
        if abs(float(coords @ coords) / n - 1.0) > 1e-9:
            raise ValueError("state is not on the sphere of radius sqrt(N)")

    @property
    def n(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class DisorderRealization:
    """One draw of the i.i.d. Gaussian coefficient tensors defining H_N.

    ``tensors`` maps degree p to the full (N,)*p array filled in C order
    (lexicographic index tuples), degrees ascending; a perturbation tensor,
    when present, is drawn after all mixture tensors.
    """

    n: int
    seed: int | None
    tensors: dict[int, np.ndarray]
    pert_degree: int | None = None
    pert_tensor: np.ndarray | None = None

    @classmethod
    def from_tensors(cls, tensors: dict[int, np.ndarray]) -> "DisorderRealization":
        n = next(iter(tensors.values())).shape[0]
        return cls(n=n, seed=None, tensors=dict(tensors))


def _check_budget(n: int, degrees: list[int]) -> None:
    total = 0
    for p in degrees:
        entries = n**p
        total += entries
        if total > TENSOR_BUDGET:
            raise BudgetExceeded(
                f"degree {p} pushes the tensor budget past {TENSOR_BUDGET} entries "
                f"(N={n}, total would be >= {total})"
            )


def sample_disorder(
    spec: MixtureSpec, n: int, seed: int, pert_degree: int | None = None
) -> DisorderRealization:
    """Deterministic Gaussian tensors for every mixture degree (plus perturbation).

    Fill order is fixed: degrees ascending, each tensor filled in C order,
    the perturbation tensor last, so regeneration from (seed, N, spec) is
    bit-identical.
    """
    degrees = list(spec.degrees)
    _check_budget(n, degrees + ([pert_degree] if pert_degree is not None else []))
    rng = np.random.default_rng(seed)
    tensors = {p: rng.standard_normal((n,) * p) for p in degrees}
    pert = rng.standard_normal((n,) * pert_degree) if pert_degree is not None else None
    return DisorderRealization(n=n, seed=seed, tensors=tensors, pert_degree=pert_degree, pert_tensor=pert)


def _contract(tensor: np.ndarray, coords: np.ndarray) -> float:
    out = tensor
    for _ in range(tensor.ndim):
        out = out @ coords
    return float(out)


def energy(
    disorder: DisorderRealization,
    spec: MixtureSpec,
    state: SphereState,
    perturbation: tuple[int, int, float] | None = None,
) -> float:
    """H_N(state) = sum_p gamma_p N^(-(p-1)/2) <g_p, state^(x p)>.

    The tensor is contracted one index at a time (O(N^p) for the first
    contraction, cheap thereafter).  With ``perturbation`` = (p0, p, a),
    adds N^(-a) times the pure degree-p energy of the perturbation tensor
    (unit amplitude).
    """
    n = state.n
    if disorder.n != n:
        raise ValueError(f"dimension mismatch: disorder N={disorder.n}, state N={n}")
    total = 0.0
    for p, g in spec.coeffs:
        if p not in disorder.tensors:
            raise ValueError(f"disorder has no tensor for degree {p}")
        total += g * n ** (-(p - 1) / 2.0) * _contract(disorder.tensors[p], state.coords)
    if perturbation is not None:
        _, p, a = perturbation
        if disorder.pert_degree != p or disorder.pert_tensor is None:
            raise ValueError(f"disorder has no perturbation tensor of degree {p}")
        total += n ** (-a) * n ** (-(p - 1) / 2.0) * _contract(disorder.pert_tensor, state.coords)
    return total


def uniform_sphere_sample(n: int, rng: np.random.Generator) -> SphereState:
    """Uniform draw on the sphere of radius sqrt(N)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    while True:
        v = rng.standard_normal(n)
        norm = float(np.linalg.norm(v))
        if norm > 0.0:
            return SphereState(v * (math.sqrt(n) / norm))


def overlap(s1: SphereState, s2: SphereState) -> float:
    """R(s1, s2) = (1/N) sum_i s1_i s2_i, clipped into [-1, 1]."""
    if s1.n != s2.n:
        raise ValueError("states have different dimensions")
    r = float(s1.coords @ s2.coords) / s1.n
    return min(1.0, max(-1.0, r))


@dataclass(frozen=True)
class McmcParams:
    burn_in: int = 500
    thin: int = 10
    n_samples: int = 200
    proposal_step: float = 0.1
    auto_tune: bool = False

    def __post_init__(self):
        if self.burn_in < 0 or self.thin < 1 or self.n_samples < 1:
            raise ValueError("burn_in >= 0, thin >= 1, n_samples >= 1 required")
        if self.proposal_step < 0.0 or self.proposal_step > 1.0:
            raise ValueError("proposal_step must lie in [0, 1]")


def _propose(coords: np.ndarray, eps: float, rng: np.random.Generator) -> np.ndarray:
    n = len(coords)
    v = rng.standard_normal(n)
    norm = float(np.linalg.norm(v))
    if norm == 0.0 or eps == 0.0:
        return coords.copy()
    w = coords + eps * math.sqrt(n) * (v / norm)
    return w * (math.sqrt(n) / float(np.linalg.norm(w)))


def mcmc_run(
    disorder: DisorderRealization,
    spec: MixtureSpec,
    beta: float,
    params: McmcParams,
    rng: np.random.Generator,
    perturbation: tuple[int, int, float] | None = None,
) -> tuple[list[SphereState], dict]:
    """Metropolis chain targeting the Gibbs measure exp(beta H) d nu_N.

    Proposal: move eps * sqrt(N) along a fresh uniform direction and
    project back to the sphere -- isotropic around the current state,
    hence symmetric, so acceptance min(1, exp(beta dH)) preserves
    detailed balance with the uniform measure as base.  Emits every
    ``thin``-th state after burn-in and warns when the acceptance rate
    leaves [0.1, 0.9].
    """
    eps = params.proposal_step
    coords = uniform_sphere_sample(disorder.n, rng).coords
    h = energy(disorder, spec, SphereState(coords), perturbation)

    if params.auto_tune:
        for _ in range(10):
            accepted = 0
            for _ in range(100):
                cand = _propose(coords, eps, rng)
                h_cand = energy(disorder, spec, SphereState(cand), perturbation)
                de = beta * (h_cand - h)
                if de >= 0.0 or rng.random() < math.exp(de):
                    coords, h = cand, h_cand
                    accepted += 1
            rate = accepted / 100.0
            if rate > 0.5:
                eps = min(1.0, eps * 1.3)
            elif rate < 0.3:
                eps = max(1e-4, eps * 0.7)

    total_steps = params.burn_in + params.thin * params.n_samples
    samples: list[SphereState] = []
    accepted = 0
    for step in range(1, total_steps + 1):
        cand = _propose(coords, eps, rng)
        h_cand = energy(disorder, spec, SphereState(cand), perturbation)
        de = beta * (h_cand - h)
        if de >= 0.0 or rng.random() < math.exp(de):
            coords, h = cand, h_cand
            accepted += 1
        if step > params.burn_in and (step - params.burn_in) % params.thin == 0:
            samples.append(SphereState(coords.copy()))
    rate = accepted / total_steps
    if not 0.1 <= rate <= 0.9 and eps > 0.0:
        warnings.warn(f"acceptance rate {rate:.3f} outside [0.1, 0.9]", stacklevel=2)
    return samples, {"acceptance_rate": rate, "proposal_step": eps}


# ----------------------------------------------------------------------
# Covariance self-test
# ----------------------------------------------------------------------


def covariance_selftest(
    spec: MixtureSpec,
    n: int,
    n_pairs: int,
    n_disorder: int,
    seed: int,
) -> dict:
    """Monte Carlo check of E H(s1) H(s2) = N xi(R) over random sphere pairs.

    Gaussian draws are batched through precontracted per-state weight
    vectors (H(s) = <g, w(s)> with w = gamma_p N^(-(p-1)/2) flatten(s^(x p)));
    the first draw is replayed through the tensor-contraction energy path
    and the agreement is reported as ``path_check_max_abs_diff``.
    """
    degrees = list(spec.degrees)
    _check_budget(n, degrees)
    rng = np.random.default_rng(seed)
    states = [uniform_sphere_sample(n, rng) for _ in range(2 * n_pairs)]

    weights: dict[int, np.ndarray] = {}
    for p, g in spec.coeffs:
        cols = []
        for s in states:
            w = s.coords
            for _ in range(p - 1):
                w = np.multiply.outer(w, s.coords)
            cols.append(w.reshape(-1))
        weights[p] = (g * n ** (-(p - 1) / 2.0)) * np.stack(cols, axis=1)

    draw_rng = np.random.default_rng(seed + 1)
    batch = 256
    energies = np.empty((n_disorder, 2 * n_pairs))
    path_check = None
    done = 0
    while done < n_disorder:
        b = min(batch, n_disorder - done)
        contrib = np.zeros((b, 2 * n_pairs))
        first_tensors: dict[int, np.ndarray] = {}
        for p, _ in spec.coeffs:
            g_flat = draw_rng.standard_normal((b, n**p))
            contrib += g_flat @ weights[p]
            if done == 0:
                first_tensors[p] = g_flat[0].reshape((n,) * p)
        if done == 0:
            replay = DisorderRealization.from_tensors(first_tensors)
            diffs = [
                abs(energy(replay, spec, states[j]) - contrib[0, j])
                for j in range(min(4, 2 * n_pairs))
            ]
            path_check = max(diffs)
        energies[done : done + b] = contrib
        done += b

    pairs = []
    max_abs_z = 0.0
    for i in range(n_pairs):
        r = overlap(states[2 * i], states[2 * i + 1])
        target = n * float(np.dot([g * g for _, g in spec.coeffs], [r**p for p, _ in spec.coeffs]))
        prod = energies[:, 2 * i] * energies[:, 2 * i + 1]
        est = float(np.mean(prod))
        se = float(np.std(prod, ddof=1) / math.sqrt(n_disorder))
        z = (est - target) / se
        max_abs_z = max(max_abs_z, abs(z))
        pairs.append({"overlap": r, "target": target, "estimate": est, "se": se, "z": z})
    return {
        "n": n,
        "n_pairs": n_pairs,
        "n_disorder": n_disorder,
        "seed": seed,
        "max_abs_z": max_abs_z,
        "all_within_4": max_abs_z <= 4.0,
        "path_check_max_abs_diff": path_check,
        "pairs": pairs,
    }


# ----------------------------------------------------------------------
# Two-temperature experiment
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    spec: MixtureSpec
    n: int
    betas: tuple[float, float]
    mcmc: McmcParams = McmcParams()
    perturbation: tuple[int, int, float] | None = None
    n_disorder: int = 10
    master_seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("N must be >= 2")
        if len(self.betas) != 2 or any(b < 0.0 for b in self.betas):
            raise ValueError("betas must be a pair of non-negative reals")
        if self.perturbation is not None:
            p0, p, a = self.perturbation
            if a <= 0.0:
                raise ValueError("perturbation exponent a must be positive")
            if p == p0:
                raise ValueError("perturbation degree must differ from the base degree")
        if self.n_disorder < 1:
            raise ValueError("n_disorder must be >= 1")


@dataclass(frozen=True)
class OverlapStats:
    config: dict
    bin_edges: list[float]
    histograms: dict[str, list[int]]
    cross_abs_mean: float
    cross_abs_se: float
    same_abs_mean: dict[str, float]
    per_disorder_cross_abs_mean: list[float]
    acceptance: dict[str, float]
    predicted_atoms: dict
    flags: dict
    raw_overlaps: dict | None = None  # per pair type: list of (disorder, |R|); not serialized

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "bin_edges": self.bin_edges,
            "histograms": self.histograms,
            "cross_abs_mean": self.cross_abs_mean,
            "cross_abs_se": self.cross_abs_se,
            "same_abs_mean": self.same_abs_mean,
            "per_disorder_cross_abs_mean": self.per_disorder_cross_abs_mean,
            "acceptance": self.acceptance,
            "predicted_atoms": self.predicted_atoms,
            "flags": self.flags,
        }


def _run_disorder(args) -> dict:
    config, d_index = args
    dseed = config.master_seed + _DISORDER_STRIDE * d_index
    pert_degree = config.perturbation[1] if config.perturbation is not None else None
    disorder = sample_disorder(config.spec, config.n, dseed, pert_degree)
    chains = []
    rates = []
    for chain_index, beta in enumerate((config.betas[0], config.betas[0], config.betas[1], config.betas[1])):
        rng = np.random.default_rng(dseed + _CHAIN_STRIDE * (chain_index + 1))
        samples, info = mcmc_run(disorder, config.spec, beta, config.mcmc, rng, config.perturbation)
        chains.append(np.stack([s.coords for s in samples]))
        rates.append(info["acceptance_rate"])
    a1, b1, a2, b2 = chains
    inv_n = 1.0 / config.n
    same1 = np.abs(np.einsum("ij,ij->i", a1, b1) * inv_n)
    same2 = np.abs(np.einsum("ij,ij->i", a2, b2) * inv_n)
    cross = np.abs(
        np.concatenate(
            (np.einsum("ij,ij->i", a1, a2) * inv_n, np.einsum("ij,ij->i", b1, b2) * inv_n)
        )
    )
    return {
        "same1": same1,
        "same2": same2,
        "cross": cross,
        "rates": rates,
    }


def _predictions(config: SimConfig) -> dict:
    out = {"same_beta1": None, "same_beta2": None, "cross": None, "note": ""}
    try:
        sols = [parisi_solve(config.spec, b) for b in config.betas]
    except Exception as exc:  # prediction is an optional overlay; never fail the run
        out["note"] = f"no prediction: {exc}"
        return out
    for key, sol in zip(("same_beta1", "same_beta2"), sols):
        if isinstance(sol.measure, StepCDF):
            out[key] = sorted({0.0} | set(float(q) for q in sol.measure.locations))
    try:
        out["cross"] = sorted(cross_overlap_prediction(*sols))
    except NotApplicable as exc:
        out["note"] = str(exc)
    return out


def chaos_experiment(
    config: SimConfig,
    jobs: int = 1,
    include_predictions: bool = True,
    keep_raw: bool = False,
) -> OverlapStats:
    """Same- and cross-temperature overlap statistics over disorder replicas.

    Per disorder realization: two independent chains per temperature;
    same-temperature overlaps pair the two chains at one beta, cross
    overlaps pair chains across the betas.  Outputs fixed-width (0.02)
    histograms of |R|, the plug-in cross-overlap mean with a
    disorder-level standard error, and (optionally) predicted overlap
    atoms as a qualitative overlay.  Bit-identical for identical configs.
    """
    tasks = [(config, d) for d in range(config.n_disorder)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_disorder, tasks))
    else:
        results = [_run_disorder(t) for t in tasks]

    edges = np.linspace(0.0, 1.0, 51)
    hists = {}
    for key in ("same1", "same2", "cross"):
        allv = np.concatenate([r[key] for r in results])
        hists[key] = np.histogram(allv, bins=edges)[0].tolist()
    cross_all = np.concatenate([r["cross"] for r in results])
    per_disorder = [float(np.mean(r["cross"])) for r in results]
    if config.n_disorder > 1:
        se = float(np.std(per_disorder, ddof=1) / math.sqrt(config.n_disorder))
    else:
        se = float("nan")
    rates = np.array([r["rates"] for r in results])
    raw = None
    if keep_raw:
        raw = {}
        for key, out_key in (("same1", "same_beta1"), ("same2", "same_beta2"), ("cross", "cross")):
            raw[out_key] = [
                (d, float(v)) for d, r in enumerate(results) for v in r[key]
            ]

    return OverlapStats(
        config={
            "mixture": config.spec.to_json_dict(),
            "N": config.n,
            "betas": list(config.betas),
            "mcmc": {
                "burn_in": config.mcmc.burn_in,
                "thin": config.mcmc.thin,
                "n_samples": config.mcmc.n_samples,
                "proposal_step": config.mcmc.proposal_step,
                "auto_tune": config.mcmc.auto_tune,
            },
            "perturbation": list(config.perturbation) if config.perturbation else None,
            "n_disorder": config.n_disorder,
            "master_seed": config.master_seed,
        },
        bin_edges=[float(e) for e in edges],
        histograms={"same_beta1": hists["same1"], "same_beta2": hists["same2"], "cross": hists["cross"]},
        cross_abs_mean=float(np.mean(cross_all)),
        cross_abs_se=se,
        same_abs_mean={
            "beta1": float(np.mean(np.concatenate([r["same1"] for r in results]))),
            "beta2": float(np.mean(np.concatenate([r["same2"] for r in results]))),
        },
        per_disorder_cross_abs_mean=per_disorder,
        acceptance={
            "beta1": float(np.mean(rates[:, :2])),
            "beta2": float(np.mean(rates[:, 2:])),
        },
        predicted_atoms=_predictions(config) if include_predictions else {"note": "disabled"},
        flags={
            "asymptotic_overlay_only": True,
            "non_reproducibility": NON_REPRODUCIBILITY_NOTE,
        },
        raw_overlaps=raw,
    )


# ----------------------------------------------------------------------
# Two-sample permutation test (used by the simulator sanity checks)
# ----------------------------------------------------------------------


def ks_statistic(x: np.ndarray, y: np.ndarray) -> float:
    """Two-sample sup-CDF (Kolmogorov-Smirnov) distance."""
    x = np.sort(np.asarray(x, float))
    y = np.sort(np.asarray(y, float))
    grid = np.concatenate((x, y))
    cdf_x = np.searchsorted(x, grid, side="right") / len(x)
    cdf_y = np.searchsorted(y, grid, side="right") / len(y)
    return float(np.max(np.abs(cdf_x - cdf_y)))


def permutation_ks_test(x, y, n_perm: int = 500, seed: int = 0) -> dict:
    """Permutation null for the KS distance; rejects at 95% when stat > threshold."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    stat = ks_statistic(x, y)
    pooled = np.concatenate((x, y))
    rng = np.random.default_rng(seed)
    null = np.empty(n_perm)
    for i in range(n_perm):
        perm = rng.permutation(len(pooled))
        null[i] = ks_statistic(pooled[perm[: len(x)]], pooled[perm[len(x) :]])
    threshold = float(np.quantile(null, 0.95))
    pvalue = float((1 + np.sum(null >= stat)) / (n_perm + 1))
    return {"statistic": stat, "threshold_95": threshold, "pvalue": pvalue, "reject_95": stat > threshold}
