"""Two-point-measurement path ensembles and fluctuation theorems.

A forward trajectory of an episode is gamma = (n, nu, m, mu): measure S and
E in the eigenbases of their initial states, evolve with U, measure again
in a final product basis.  The backward process re-initializes the joint
system in a reference state rho_tilde and runs U^dag; its choice fixes
which information counts as lost, and hence what <sigma> means:

    bath reset            rho_S' x rho_E     ->  I(S:E) + S(rho_E'||rho_E)
    correlations destroyed rho_S' x rho_E'   ->  I(S:E)
    post-measurement       dephased rho_SE'  ->  coherence of rho_SE'
    both reset            rho_S  x rho_E     ->  I + S(rho_S'||rho_S) + S(rho_E'||rho_E)

The averages above hold exactly only when the final measurement basis
diagonalizes the backward reference state, so each choice fixes its own
final basis (see `backward_ensemble`).  The module also hosts the
work-protocol statistics (Crooks/Jarzynski), cumulant generating
functions, infinitesimal-quench expansions, correlated and augmented
exchange ensembles, measurement-driven trajectories, and the finite-width
work-weight convolution.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CoreError,
    DensityOperator,
    HermitianOperator,
    HilbertDims,
    UnitaryOperator,
    _clamp_probs,
    _mat,
    hermitian_function,
    partial_trace,
    relative_entropy,
    shannon_entropy,
    tensor,
    thermal_state,
    trace_distance,
    von_neumann_entropy,
)
from .episodes import Episode, evolve, is_strict_energy_conserving

ENSEMBLE_DIM_CAP = 64


class TrajectoryError(ValueError):
    pass


class BackwardChoice(enum.Enum):
    BATH_RESET = "bath_reset"
    CORRELATIONS_DESTROYED = "correlations_destroyed"
    POST_MEASUREMENT_STATE = "post_measurement_state"
    BOTH_RESET = "both_reset"


@dataclass(frozen=True)
class Trajectory:
    outcome: tuple
    p_forward: float
    p_backward: float | None = None
    sigma: float | None = None


@dataclass(frozen=True)
class PathEnsemble:
    trajectories: tuple[Trajectory, ...]
    choice: BackwardChoice | None = None

    def forward_probabilities(self):
        return np.array([t.p_forward for t in self.trajectories])

    def sigmas(self):
        return np.array([t.sigma for t in self.trajectories])

    def average_sigma(self) -> float:
        tot = 0.0
        for t in self.trajectories:
            if t.p_forward <= 0.0:
                continue
            if not math.isfinite(t.sigma):
                return math.inf
            tot += t.p_forward * t.sigma
        return tot

    def integral_ft(self) -> float:
        """<e^{-sigma}> over the forward ensemble (1 when supports match)."""
        return float(sum(t.p_forward * math.exp(-t.sigma)
                         for t in self.trajectories
                         if t.p_forward > 0.0 and math.isfinite(t.sigma)))

    def sigma_distribution(self) -> "ScalarDistribution":
        vals, probs = [], []
        for t in self.trajectories:
            if t.p_forward > 0:
                vals.append(t.sigma)
                probs.append(t.p_forward)
        return ScalarDistribution.from_samples(np.array(vals), np.array(probs))


@dataclass(frozen=True)
class ScalarDistribution:
    """Discrete distribution over real values (merged support)."""

    values: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probabilities, dtype=float)
        if v.shape != p.shape or v.ndim != 1:
            raise TrajectoryError("values/probabilities must be matching 1-d arrays")
        if p.min() < -1e-12:
            raise TrajectoryError(f"negative probability {p.min():.3e}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def from_samples(cls, values, probabilities, merge_tol=1e-10):
        order = np.argsort(values)
        values = np.asarray(values, dtype=float)[order]
        probabilities = np.asarray(probabilities, dtype=float)[order]
        merged_v, merged_p = [], []
        for v, p in zip(values, probabilities):
            if p <= 0.0:
                continue
            if merged_v and abs(v - merged_v[-1]) <= merge_tol * max(1.0, abs(v)):
                merged_p[-1] += p
            else:
                merged_v.append(v)
                merged_p.append(p)
        return cls(np.array(merged_v), np.array(merged_p))

    @classmethod
    def delta(cls, value):
        return cls(np.array([float(value)]), np.array([1.0]))

    def mean(self) -> float:
        return float(np.sum(self.values * self.probabilities))

    def moment(self, n, central=False) -> float:
        x = self.values - (self.mean() if central else 0.0)
        return float(np.sum(x ** n * self.probabilities))

    def variance(self) -> float:
        return self.moment(2, central=True)

    def cumulants(self, upto=4):
        m = self.mean()
        mu2 = self.moment(2, central=True)
        mu3 = self.moment(3, central=True)
        mu4 = self.moment(4, central=True)
        return (m, mu2, mu3, mu4 - 3 * mu2 ** 2)[:upto]

    def exp_average(self, factor=-1.0) -> float:
        """<e^{factor * x}>."""
        return float(np.sum(self.probabilities * np.exp(factor * self.values)))

    def cgf(self, lam) -> float:
        """ln <e^{-lam x}>."""
        return math.log(self.exp_average(-lam))

    def convolve(self, other: "ScalarDistribution") -> "ScalarDistribution":
        vals = (self.values[:, None] + other.values[None, :]).ravel()
        probs = (self.probabilities[:, None] * other.probabilities[None, :]).ravel()
        return ScalarDistribution.from_samples(vals, probs)

    def to_csv(self, path):
        lines = ["value,probability"]
        lines += [f"{format(v, '.17g')},{format(p, '.17g')}"
                  for v, p in zip(self.values, self.probabilities)]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        return path

    def to_json(self) -> dict:
        return {"values": self.values.tolist(),
                "probabilities": self.probabilities.tolist()}


# ---------------------------------------------------------------------------
# TPM ensembles for episodes
# ---------------------------------------------------------------------------

def _eig_state(rho) -> tuple[np.ndarray, np.ndarray]:
    vals, vecs = np.linalg.eigh(_mat(rho))
    return _clamp_probs(vals), vecs


def _joint_amplitudes(u, basis_s_final, basis_e_final, basis_s_init, basis_e_init):
    """|<m,mu| U |n,nu>|^2 as array [m, mu, n, nu]."""
    final = np.kron(basis_s_final, basis_e_final)
    init = np.kron(basis_s_init, basis_e_init)
    amp = final.conj().T @ u @ init
    ds_f = basis_s_final.shape[1]
    de_f = basis_e_final.shape[1]
    ds_i = basis_s_init.shape[1]
    de_i = basis_e_init.shape[1]
    return (np.abs(amp) ** 2).reshape(ds_f, de_f, ds_i, de_i)


def tpm_ensemble(ep: Episode) -> PathEnsemble:
    """Exhaustive forward ensemble with the default final bases, the
    eigenbases of rho_S' and rho_E' (no measurement backaction on the
    local ensembles)."""
    if ep.unitary.dim > ENSEMBLE_DIM_CAP:
        raise TrajectoryError(f"joint dimension {ep.unitary.dim} exceeds the "
                              f"exhaustive cap {ENSEMBLE_DIM_CAP}")
    ev = evolve(ep)
    p_init, vs_init = _eig_state(ep.rho_system)
    q_init, ve_init = _eig_state(ep.rho_env)
    _, vs_fin = _eig_state(ev.rho_system)
    _, ve_fin = _eig_state(ev.rho_env)
    w = _joint_amplitudes(ep.unitary.matrix, vs_fin, ve_fin, vs_init, ve_init)
    trajs = []
    ds, de = ep.rho_system.dim, ep.rho_env.dim
    for m in range(ds):
        for mu in range(de):
            for n in range(ds):
                for nu in range(de):
                    pf = w[m, mu, n, nu] * p_init[n] * q_init[nu]
                    trajs.append(Trajectory((n, nu, m, mu), float(pf)))
    return PathEnsemble(tuple(trajs))


def backward_ensemble(ep: Episode, choice: BackwardChoice) -> PathEnsemble:
    """Forward/backward pair for one backward-process choice.

    The final (forward) measurement basis is the eigenbasis of the chosen
    backward reference state rho_tilde, which is what makes the Table of
    averages exact:

      BATH_RESET             |psi_m> x |nu>   (eigvecs of rho_S', rho_E)
      CORRELATIONS_DESTROYED |psi_m> x |phi_mu> (eigvecs of rho_S', rho_E')
      POST_MEASUREMENT_STATE |psi_m> x |phi_mu> (rho_tilde is the dephased
                             rho_SE' in that very basis)
      BOTH_RESET             |n> x |nu>        (initial eigenbases)

    The per-trajectory sigma = ln p_n q_nu / rho_tilde_{m mu}; a vanishing
    reference weight on a populated forward trajectory yields +inf.
    """
    if ep.unitary.dim > ENSEMBLE_DIM_CAP:
        raise TrajectoryError(f"joint dimension {ep.unitary.dim} exceeds the "
                              f"exhaustive cap {ENSEMBLE_DIM_CAP}")
    ev = evolve(ep)
    p_init, vs_init = _eig_state(ep.rho_system)
    q_init, ve_init = _eig_state(ep.rho_env)
    ps_fin, vs_fin = _eig_state(ev.rho_system)
    qe_fin, ve_fin = _eig_state(ev.rho_env)

    if choice is BackwardChoice.BATH_RESET:
        basis_s, basis_e = vs_fin, ve_init
        ref_s, ref_e = ps_fin, q_init
        ref_weight = np.outer(ref_s, ref_e)
    elif choice is BackwardChoice.CORRELATIONS_DESTROYED:
        basis_s, basis_e = vs_fin, ve_fin
        ref_weight = np.outer(ps_fin, qe_fin)
    elif choice is BackwardChoice.POST_MEASUREMENT_STATE:
        basis_s, basis_e = vs_fin, ve_fin
        final = np.kron(basis_s, basis_e)
        diag = np.real(np.einsum("im,ij,jm->m", final.conj(),
                                 ev.rho_joint.matrix, final))
        ref_weight = _clamp_probs(diag).reshape(ep.rho_system.dim, ep.rho_env.dim)
    elif choice is BackwardChoice.BOTH_RESET:
        basis_s, basis_e = vs_init, ve_init
        ref_weight = np.outer(p_init, q_init)
    else:
        raise TrajectoryError(f"unknown backward choice {choice}")

    w = _joint_amplitudes(ep.unitary.matrix, basis_s, basis_e, vs_init, ve_init)
    trajs = []
    ds, de = ep.rho_system.dim, ep.rho_env.dim
    for m in range(ds):
        for mu in range(de):
            for n in range(ds):
                for nu in range(de):
                    # |<n,nu|U^dag|m,mu>|^2 = |<m,mu|U|n,nu>|^2
                    pf = float(w[m, mu, n, nu] * p_init[n] * q_init[nu])
                    pb = float(w[m, mu, n, nu] * ref_weight[m, mu])
                    if pf <= 0.0:
                        sigma = 0.0
                    elif pb <= 0.0:
                        sigma = math.inf
                    else:
                        sigma = math.log(p_init[n] * q_init[nu] / ref_weight[m, mu])
                    trajs.append(Trajectory((n, nu, m, mu), pf, pb, sigma))
    return PathEnsemble(tuple(trajs), choice)


def stochastic_sigma(forward: PathEnsemble, backward: PathEnsemble | None = None):
    """Per-trajectory sigma = ln P_F / P_B for matched ensembles."""
    if backward is None:
        if any(t.sigma is None for t in forward.trajectories):
            raise TrajectoryError("ensemble carries no backward probabilities")
        return forward.sigmas()
    out = []
    for tf, tb in zip(forward.trajectories, backward.trajectories):
        if tf.outcome != tb.outcome:
            raise TrajectoryError("ensembles are not matched trajectory by trajectory")
        pb = tb.p_backward if tb.p_backward is not None else tb.p_forward
        if tf.p_forward <= 0:
            out.append(0.0)
        elif pb <= 0:
            out.append(math.inf)
        else:
            out.append(math.log(tf.p_forward / pb))
    return np.array(out)


# ---------------------------------------------------------------------------
# Work protocols: distributions, Crooks, CGF
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WorkStatistics:
    forward: ScalarDistribution
    backward: ScalarDistribution
    delta_f: float
    mean_work: float
    jarzynski: float          # <e^{-beta W}> e^{beta dF}, equals 1
    sigma_mean: float         # beta (<W> - dF)
    lag: float                # S(rho' || thermal(H_f))


def _log_partition(h, beta) -> float:
    vals = np.linalg.eigvalsh(_mat(h))
    m = vals.min()
    return float(-beta * m + np.log(np.sum(np.exp(-beta * (vals - m)))))


def work_distribution(h_initial, h_final, protocol_unitary, beta: float) -> WorkStatistics:
    """TPM work statistics for a thermal initial state.

    P_F(W) collects transitions between the eigenbases of H_i and H_f with
    W = E_f - E_i.  The backward distribution starts from the thermal state
    of H_f and runs V^dag, so the pair satisfies the Crooks relation
    P_F(W) = P_B(-W) e^{beta (W - dF)} pointwise on the shared support.
    """
    hi = _mat(h_initial)
    hf = _mat(h_final)
    v = _mat(protocol_unitary)
    ei, vi = np.linalg.eigh(hi)
    ef, vf = np.linalg.eigh(hf)
    pi = np.exp(-beta * (ei - ei.min()))
    pi = pi / pi.sum()
    pf_th = np.exp(-beta * (ef - ef.min()))
    pf_th = pf_th / pf_th.sum()
    trans = np.abs(vf.conj().T @ v @ vi) ** 2          # [m, n]
    vals_f = (ef[:, None] - ei[None, :]).ravel()
    probs_f = (trans * pi[None, :]).ravel()
    fwd = ScalarDistribution.from_samples(vals_f, probs_f)
    trans_b = np.abs(vi.conj().T @ v.conj().T @ vf) ** 2   # [n, m]
    vals_b = (ei[:, None] - ef[None, :]).ravel()
    probs_b = (trans_b * pf_th[None, :]).ravel()
    bwd = ScalarDistribution.from_samples(vals_b, probs_b)
    delta_f = (-_log_partition(hf, beta) + _log_partition(hi, beta)) / beta
    mean_w = fwd.mean()
    jarz = fwd.exp_average(-beta) * math.exp(beta * delta_f)
    rho_prime = v @ ((vi * pi) @ vi.conj().T) @ v.conj().T
    lag = relative_entropy(rho_prime, (vf * pf_th) @ vf.conj().T)
    return WorkStatistics(
        forward=fwd,
        backward=bwd,
        delta_f=delta_f,
        mean_work=mean_w,
        jarzynski=jarz,
        sigma_mean=beta * (mean_w - delta_f),
        lag=lag,
    )


def crooks_check(stats: WorkStatistics, beta: float, tol=1e-10):
    """Pointwise P_F(W) / P_B(-W) = e^{beta (W - dF)} on the shared support.

    Returns (max deviation, number of compared points).
    """
    dev, count = 0.0, 0
    bvals = {round(v, 12): p for v, p in zip(stats.backward.values,
                                             stats.backward.probabilities)}
    for w, p in zip(stats.forward.values, stats.forward.probabilities):
        q = bvals.get(round(-w, 12))
        if q is None or q <= tol or p <= tol:
            continue
        dev = max(dev, abs(p / q - math.exp(beta * (w - stats.delta_f))))
        count += 1
    return dev, count


@dataclass(frozen=True)
class CgfCurve:
    lam: np.ndarray
    values: np.ndarray
    kappa: tuple  # first four cumulants of sigma

    def __post_init__(self):
        object.__setattr__(self, "lam", np.asarray(self.lam, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def to_csv(self, path):
        lines = ["lambda,K"]
        lines += [f"{format(l, '.17g')},{format(k, '.17g')}"
                  for l, k in zip(self.lam, self.values)]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        return path


def work_cgf(h_initial, h_final, protocol_unitary, beta: float, lam_grid) -> CgfCurve:
    """K(lambda) = ln <e^{-lambda sigma}> for the work protocol.

    Evaluated through the trace formula
    K = ln Tr{ V^dag rho_f^lam V rho_i^(1-lam) } (thermal states as matrix
    powers) which equals the ensemble sum exactly; cumulants come from the
    exact sigma distribution.
    """
    hi = _mat(h_initial)
    hf = _mat(h_final)
    v = _mat(protocol_unitary)
    rho_i = thermal_state(HermitianOperator.from_matrix(hi), beta).matrix
    rho_f = thermal_state(HermitianOperator.from_matrix(hf), beta).matrix
    ei, vi = np.linalg.eigh(rho_i)
    ef, vf = np.linalg.eigh(rho_f)
    ei = _clamp_probs(ei)
    ef = _clamp_probs(ef)
    lam_grid = np.asarray(lam_grid, dtype=float)
    out = np.empty_like(lam_grid)
    for k, lam in enumerate(lam_grid):
        pow_f = (vf * ef ** lam) @ vf.conj().T
        pow_i = (vi * ei ** (1.0 - lam)) @ vi.conj().T
        out[k] = math.log(float(np.real(np.trace(v.conj().T @ pow_f @ v @ pow_i))))
    stats = work_distribution(hi, hf, v, beta)
    sig = ScalarDistribution(beta * (stats.forward.values - stats.delta_f),
                             stats.forward.probabilities)
    return CgfCurve(lam_grid, out, tuple(sig.cumulants(4)))


# ---------------------------------------------------------------------------
# Infinitesimal quenches
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def _gl_map(a, b):
    x = 0.5 * (b - a) * _GL_NODES + 0.5 * (a + b)
    w = 0.5 * (b - a) * _GL_WEIGHTS
    return x, w


def _y_covariance(rho_vals, rho_vecs, op, y) -> float:
    """cov^y(A, A) = Tr[A rho^y A rho^(1-y)] - <A>^2 for one y."""
    a = rho_vecs.conj().T @ _mat(op) @ rho_vecs
    mean = float(np.real(np.sum(np.diag(a).real * rho_vals)))
    py = rho_vals ** y
    p1y = rho_vals ** (1.0 - y)
    corr = float(np.real(np.einsum("ij,j,ji,i->", a, p1y, a, py)))
    return corr - mean ** 2


def y_covariance_integral(rho, op) -> float:
    """int_0^1 cov^y(A, A) dy by 32-node Gauss-Legendre."""
    vals, vecs = _eig_state(rho)
    x, w = _gl_map(0.0, 1.0)
    return float(np.sum(w * [_y_covariance(vals, vecs, op, y) for y in x]))


def skew_information_integral(rho, op) -> float:
    """int_0^1 I_y(rho, A) dy with I_y = -1/2 Tr{[rho^y, A][rho^(1-y), A]}."""
    vals, vecs = _eig_state(rho)
    a = vecs.conj().T @ _mat(op) @ vecs
    asq = a @ a
    var_part = float(np.real(np.sum(np.diag(asq).real * vals)))
    x, w = _gl_map(0.0, 1.0)
    out = 0.0
    for y, wi in zip(x, w):
        py = vals ** y
        p1y = vals ** (1.0 - y)
        corr = float(np.real(np.einsum("ij,j,ji,i->", a, p1y, a, py)))
        out += wi * (var_part - corr)
    return out


@dataclass(frozen=True)
class QuenchReport:
    sigma_exact: float
    sigma_second_order: float
    y_cov_integral: float
    incompatibility: float      # the skew-information (coherence) penalty
    variance_dh: float
    sigma_distribution: ScalarDistribution
    cumulants: tuple
    fdr_residual: float         # <sigma> - (var(sigma)/2 - incompatibility)
    commuting: bool
    expansion_ok: bool


def quench_report(h_of_lambda, lam0: float, dlam: float, beta: float,
                  rel_tol: float = 0.05) -> QuenchReport:
    """Sudden quench H(lam0) -> H(lam0 + dlam) from a thermal state.

    Sigma_exact = S(rho_i^th || rho_f^th); the second-order expansion is
    (beta^2/2) int_0^1 cov^y(dH, dH) dy = (beta^2/2) var(dH) - Q, with Q
    the integrated skew information of dH in rho_i^th.  A commuting quench
    has Q = 0 and satisfies the fluctuation-dissipation relation
    <sigma> = var(sigma)/2 up to O(dlam^3); coherence breaks it by exactly
    Q at second order.
    """
    hi = _mat(h_of_lambda(lam0))
    hf = _mat(h_of_lambda(lam0 + dlam))
    rho_i = thermal_state(HermitianOperator.from_matrix(hi), beta)
    rho_f = thermal_state(HermitianOperator.from_matrix(hf), beta)
    sigma_exact = relative_entropy(rho_i, rho_f)
    dh = hf - hi
    ycov = y_covariance_integral(rho_i, dh)
    sigma_2 = 0.5 * beta ** 2 * ycov
    skew = 0.5 * beta ** 2 * skew_information_integral(rho_i, dh)
    mean_dh = float(np.real(np.trace(dh @ rho_i.matrix)))
    var_dh = float(np.real(np.trace(dh @ dh @ rho_i.matrix))) - mean_dh ** 2
    commuting = float(np.abs(hi @ hf - hf @ hi).max()) < 1e-12 * max(
        1.0, float(np.abs(hi).max() * np.abs(hf).max()))
    # exhaustive sigma distribution (V = identity quench)
    stats = work_distribution(hi, hf, np.eye(hi.shape[0]), beta)
    sig = ScalarDistribution(beta * (stats.forward.values - stats.delta_f),
                             stats.forward.probabilities)
    kappa = sig.cumulants(4)
    fdr_residual = kappa[0] - (0.5 * kappa[1] - skew)
    expansion_ok = abs(sigma_exact - sigma_2) <= rel_tol * max(sigma_exact, 1e-300)
    return QuenchReport(
        sigma_exact=sigma_exact,
        sigma_second_order=sigma_2,
        y_cov_integral=ycov,
        incompatibility=skew,
        variance_dh=var_dh,
        sigma_distribution=sig,
        cumulants=tuple(kappa),
        fdr_residual=fdr_residual,
        commuting=commuting,
        expansion_ok=expansion_ok,
    )


def quench_cgf(h_initial, h_final, beta: float, lam_grid) -> CgfCurve:
    """Second-order quench CGF
    K(lam) = -(beta^2/2) int_0^lam dx int_x^(1-x) dy cov^y(dH, dH),
    evaluated with nested 32-node Gauss-Legendre rules.  Satisfies the
    Gallavotti-Cohen symmetry K(lam) = K(1 - lam) identically.
    """
    hi = _mat(h_initial)
    hf = _mat(h_final)
    rho_i = thermal_state(HermitianOperator.from_matrix(hi), beta)
    dh = hf - hi
    vals, vecs = _eig_state(rho_i)

    def inner(x):
        ys, ws = _gl_map(x, 1.0 - x)
        return float(np.sum(ws * [_y_covariance(vals, vecs, dh, y) for y in ys]))

    lam_grid = np.asarray(lam_grid, dtype=float)
    out = np.empty_like(lam_grid)
    for k, lam in enumerate(lam_grid):
        xs, wx = _gl_map(0.0, lam)
        out[k] = -0.5 * beta ** 2 * float(np.sum(wx * [inner(x) for x in xs]))
    stats = work_distribution(hi, hf, np.eye(hi.shape[0]), beta)
    sig = ScalarDistribution(beta * (stats.forward.values - stats.delta_f),
                             stats.forward.probabilities)
    return CgfCurve(lam_grid, out, tuple(sig.cumulants(4)))


# ---------------------------------------------------------------------------
# Exchange ensembles with initial correlations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrelatedExchange:
    ensemble: tuple              # (nA, nB, mA, mB, P, q_B, dI)
    mean_heat_dephased: float    # the TPM (measured) average heat
    mean_heat_unitary: float     # Tr{H_B (U rho U' - rho)}, no measurement
    integral_ft: float           # <e^{-[(bB-bA) q_B - dI]}> = 1
    lhs: float                   # (beta_B - beta_A) <q_B>
    rhs: float                   # <dI>
    bound_satisfied: bool


def correlated_tpm(rho_ab: DensityOperator, h_a, h_b, unitary,
                   beta_a: float, beta_b: float,
                   tol: float = 1e-9) -> CorrelatedExchange:
    """Local-energy-basis TPM for two correlated thermal-marginal systems.

    The first measurement dephases rho_AB in |n_A n_B>, so the measured
    mean heat is the heat of the dephased state, which differs from the
    unitary-only value whenever the correlations live in coherences.  The
    trajectory functional sigma = (beta_B - beta_A) q_B - dI satisfies the
    integral fluctuation theorem and Jensen gives
    (beta_B - beta_A) <q_B> >= <dI>.
    """
    if trace_distance(partial_trace(rho_ab, [0]), thermal_state(h_a, beta_a)) > tol:
        raise TrajectoryError("marginal of A is not thermal at beta_a")
    if trace_distance(partial_trace(rho_ab, [1]), thermal_state(h_b, beta_b)) > tol:
        raise TrajectoryError("marginal of B is not thermal at beta_b")
    ok, res = is_strict_energy_conserving(unitary, h_a, h_b)
    if not ok:
        raise TrajectoryError(f"unitary is not strictly energy conserving ({res:.3e})")
    ea, va = np.linalg.eigh(_mat(h_a))
    eb, vb = np.linalg.eigh(_mat(h_b))
    basis = np.kron(va, vb)
    u = _mat(unitary)
    da, db = len(ea), len(eb)
    p_joint = np.real(np.einsum("im,ij,jm->m", basis.conj(), rho_ab.matrix, basis))
    p_joint = _clamp_probs(p_joint).reshape(da, db)
    pa = p_joint.sum(axis=1)
    pb = p_joint.sum(axis=0)
    w = np.abs(basis.conj().T @ u @ basis) ** 2   # [(mA mB), (nA nB)]
    w = w.reshape(da, db, da, db)

    def stoch_mi(i, j):
        if p_joint[i, j] <= 0:
            return -math.inf
        return math.log(p_joint[i, j] / (pa[i] * pb[j]))

    recs = []
    ft = 0.0
    mean_q = 0.0
    mean_di = 0.0
    for na in range(da):
        for nb in range(db):
            p0 = p_joint[na, nb]
            if p0 <= 0:
                continue
            for ma in range(da):
                for mb in range(db):
                    p = float(w[ma, mb, na, nb] * p0)
                    if p <= 0:
                        continue
                    q_b = float(eb[mb] - eb[nb])
                    di = stoch_mi(ma, mb) - stoch_mi(na, nb)
                    recs.append((na, nb, ma, mb, p, q_b, di))
                    ft += p * math.exp(-((beta_b - beta_a) * q_b - di))
                    mean_q += p * q_b
                    mean_di += p * di
    # unitary-only (backaction-free) average heat for comparison
    hb_full = tensor([np.eye(da), h_b])
    after = u @ rho_ab.matrix @ u.conj().T
    mean_unitary = float(np.real(np.trace(hb_full @ (after - rho_ab.matrix))))
    lhs = (beta_b - beta_a) * mean_q
    return CorrelatedExchange(
        ensemble=tuple(recs),
        mean_heat_dephased=mean_q,
        mean_heat_unitary=mean_unitary,
        integral_ft=ft,
        lhs=lhs,
        rhs=mean_di,
        bound_satisfied=lhs >= mean_di - 1e-10,
    )


@dataclass(frozen=True)
class AugmentedExchange:
    ensemble: tuple          # (s, nA, nB, mA, mB, P, q_B)
    mean_heat: float         # equals the unitary (backaction-free) heat
    normalization: float


def augmented_tpm(rho_ab: DensityOperator, unitary, h_a, h_b) -> AugmentedExchange:
    """Backaction-free exchange ensemble.

    The first measurement is made in the eigenbasis |s> of rho_AB itself
    and the trajectory is augmented with the conditional energy outcome
    p(nA nB | s) = |<nA nB|s>|^2, so the mean heat recovers the unitary
    value Tr{H_B (U rho_AB U^dag - rho_AB)} exactly.
    """
    ps, vs = _eig_state(rho_ab)
    ea, va = np.linalg.eigh(_mat(h_a))
    eb, vb = np.linalg.eigh(_mat(h_b))
    basis = np.kron(va, vb)
    u = _mat(unitary)
    da, db = len(ea), len(eb)
    amp_m = np.abs(basis.conj().T @ u @ vs) ** 2   # [(mA mB), s]
    amp_n = np.abs(basis.conj().T @ vs) ** 2       # [(nA nB), s]
    recs = []
    mean_q = 0.0
    norm = 0.0
    for s in range(len(ps)):
        if ps[s] <= 0:
            continue
        for idx_n in range(da * db):
            pn = amp_n[idx_n, s]
            if pn <= 0:
                continue
            na, nb = divmod(idx_n, db)
            for idx_m in range(da * db):
                p = float(ps[s] * pn * amp_m[idx_m, s])
                if p <= 0:
                    continue
                ma, mb = divmod(idx_m, db)
                q_b = float(eb[mb] - eb[nb])
                recs.append((s, na, nb, ma, mb, p, q_b))
                mean_q += p * q_b
                norm += p
    return AugmentedExchange(tuple(recs), mean_q, norm)


# ---------------------------------------------------------------------------
# Measurement-driven ("quantum heat") trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasurementTrajectories:
    sigma_values: np.ndarray
    probabilities: np.ndarray
    average_sigma: float
    shannon_initial: float
    shannon_final: float
    integral_ft: float
    doubly_stochastic: bool
    sampled: bool
    seed: int | None


def measurement_trajectories(psi0, bases, unitaries, max_exhaustive=10 ** 6,
                             n_samples=200_000, seed=2024):
    """Trajectories of a repeatedly measured pure state.

    bases: list of unitary matrices whose columns are the measurement bases
    B_0 ... B_n; unitaries: the n evolution operators between them.  The
    entropy production of a record (k_0 ... k_n) is ln p(k_0) - ln p(k_n),
    averaging to the Shannon-entropy gain S(p_n) - S(p_0) >= 0, since the
    compound transition matrix is doubly stochastic.
    """
    bases = [np.asarray(b, dtype=complex) for b in bases]
    for b in bases:
        if np.abs(b.conj().T @ b - np.eye(b.shape[0])).max() > 1e-9:
            raise TrajectoryError("measurement basis is not orthonormal")
    if len(unitaries) != len(bases) - 1:
        raise TrajectoryError("need exactly one unitary between consecutive bases")
    psi = np.asarray(psi0, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    d = len(psi)
    p0 = np.abs(bases[0].conj().T @ psi) ** 2
    steps = []
    for b_prev, u, b_next in zip(bases[:-1], unitaries, bases[1:]):
        steps.append(np.abs(b_next.conj().T @ _mat(u) @ b_prev) ** 2)  # [k', k]
    # final-record marginal and the compound transition matrix
    compound = np.eye(d)
    for t in steps:
        compound = t @ compound
    p_final = compound @ p0
    row = np.abs(compound.sum(axis=0) - 1.0).max()
    col = np.abs(compound.sum(axis=1) - 1.0).max()
    doubly = bool(max(row, col) < 1e-9)

    n_traj = d ** (len(bases))
    if n_traj <= max_exhaustive:
        sig_map = {}
        stack = [(k0, p0[k0], k0) for k0 in range(d) if p0[k0] > 0]
        for depth, t in enumerate(steps):
            new = []
            for k0, p, k in stack:
                for k2 in range(d):
                    pp = p * t[k2, k]
                    if pp > 0:
                        new.append((k0, pp, k2))
            stack = new
        for k0, p, kn in stack:
            sig = math.log(p0[k0]) - math.log(p_final[kn])
            key = round(sig, 12)
            sig_map[key] = sig_map.get(key, 0.0) + p
        values = np.array(sorted(sig_map))
        probs = np.array([sig_map[k] for k in sorted(sig_map)])
        sampled = False
        used_seed = None
    else:
        rng = np.random.default_rng(seed)
        values_list = []
        for _ in range(n_samples):
            k = rng.choice(d, p=p0)
            k0 = k
            for t in steps:
                k = rng.choice(d, p=t[:, k])
            values_list.append(math.log(p0[k0]) - math.log(p_final[k]))
        values, counts = np.unique(np.round(values_list, 12), return_counts=True)
        probs = counts / counts.sum()
        sampled = True
        used_seed = seed
    avg = float(np.sum(values * probs))
    ft = float(np.sum(probs * np.exp(-values)))
    return MeasurementTrajectories(
        sigma_values=values,
        probabilities=probs,
        average_sigma=avg,
        shannon_initial=shannon_entropy(p0),
        shannon_final=shannon_entropy(p_final),
        integral_ft=ft,
        doubly_stochastic=doubly,
        sampled=sampled,
        seed=used_seed,
    )


# ---------------------------------------------------------------------------
# Finite-width work weight
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvolvedWork:
    grid: np.ndarray
    density: np.ndarray          # probability mass per grid cell, sums to 1
    mean: float
    variance: float
    attenuations: np.ndarray | None


def weight_convolve(ideal: ScalarDistribution, delta: float, gaps=None,
                    n_grid: int = 2 ** 12) -> ConvolvedWork:
    """Convolve an ideal work distribution with a Gaussian weight of spread
    delta: P_F(w) = sum_j p_j q(w - w_j), q = N(0, delta^2).

    The mean is preserved and the variance gains exactly delta^2.  A finite
    weight also dephases the final state: for an energy gap dE the
    off-diagonal element survives with attenuation e^{-dE^2 / (8 delta^2)}
    (reported for the supplied gap list).  The ideal Crooks relation does
    not survive the convolution.
    """
    if delta <= 0:
        raise TrajectoryError("weight spread delta must be positive")
    lo = float(ideal.values.min() - 6.0 * delta)
    hi = float(ideal.values.max() + 6.0 * delta)
    grid = np.linspace(lo, hi, n_grid)
    dw = grid[1] - grid[0]
    dens = np.zeros_like(grid)
    norm = 1.0 / math.sqrt(2.0 * math.pi * delta ** 2)
    for w_j, p_j in zip(ideal.values, ideal.probabilities):
        dens += p_j * norm * np.exp(-((grid - w_j) ** 2) / (2.0 * delta ** 2))
    mass = dens * dw
    mass = mass / mass.sum()
    mean = float(np.sum(grid * mass))
    var = float(np.sum((grid - mean) ** 2 * mass))
    att = None
    if gaps is not None:
        gaps = np.asarray(gaps, dtype=float)
        att = np.exp(-(gaps ** 2) / (8.0 * delta ** 2))
    return ConvolvedWork(grid, mass, mean, var, att)
