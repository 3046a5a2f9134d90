"""Linear (Gaussian) dynamics: Lyapunov evolution, phase-space entropy
rates, the driven-dissipative two-mode steady state, and squeezed-bath
entropy production with asymmetry accounting.

Quadratures are ordered x = (q_1, p_1, q_2, p_2, ...) with a_i =
(q_i + i p_i)/sqrt(2); covariances Theta_ij = <{X_i, X_j}>/2 - <X_i><X_j>
so a thermal mode has Theta = (nbar + 1/2) I.  The drift convention is

    dx/dt = -A x + noise,   dTheta/dt = -(A Theta + Theta A^T) + 2 D,

so stability means every eigenvalue of A has positive real part.  The
time-reversal split uses the parity matrix E (+1 positions, -1 momenta):
A_irr = (A + E A E)/2 contains damping, A_rev the Hamiltonian flow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DensityOperator,
    hermitian_function,
    relative_entropy_spectral,
    von_neumann_entropy,
)
from .lindblad import destroy


class GaussianError(ValueError):
    pass


def default_parity(n_modes: int) -> np.ndarray:
    return np.diag(np.tile([1.0, -1.0], n_modes))


def symplectic_form(n_modes: int) -> np.ndarray:
    j = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return np.kron(np.eye(n_modes), j)


@dataclass(frozen=True)
class GaussianModel:
    """Drift A, diffusion D and the parity matrix defining the split."""

    drift: np.ndarray
    diffusion: np.ndarray
    parity: np.ndarray | None = None

    def __post_init__(self):
        a = np.asarray(self.drift, dtype=float)
        d = np.asarray(self.diffusion, dtype=float)
        if a.shape != d.shape or a.shape[0] != a.shape[1]:
            raise GaussianError("drift and diffusion must be equal square matrices")
        if a.shape[0] % 2:
            raise GaussianError("phase space dimension must be even")
        if np.abs(d - d.T).max() > 1e-12:
            raise GaussianError("diffusion matrix must be symmetric")
        if np.linalg.eigvalsh(d).min() < -1e-12:
            raise GaussianError("diffusion matrix must be PSD")
        par = self.parity
        if par is None:
            par = default_parity(a.shape[0] // 2)
        par = np.asarray(par, dtype=float)
        if np.abs(par @ par - np.eye(a.shape[0])).max() > 1e-12:
            raise GaussianError("parity matrix must square to the identity")
        object.__setattr__(self, "drift", a)
        object.__setattr__(self, "diffusion", d)
        object.__setattr__(self, "parity", par)

    @property
    def n_modes(self) -> int:
        return self.drift.shape[0] // 2

    @property
    def irreversible(self) -> np.ndarray:
        return 0.5 * (self.drift + self.parity @ self.drift @ self.parity)

    @property
    def reversible(self) -> np.ndarray:
        return self.drift - self.irreversible

    def is_stable(self) -> bool:
        return bool(np.real(np.linalg.eigvals(self.drift)).min() > 0)


@dataclass(frozen=True)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray
    quantum: bool = True

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).ravel()
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (len(mean), len(mean)):
            raise GaussianError("covariance shape does not match the mean")
        if np.abs(cov - cov.T).max() > 1e-10:
            raise GaussianError("covariance must be symmetric")
        if self.quantum:
            omega = symplectic_form(len(mean) // 2)
            test = cov + 0.5j * omega
            low = float(np.linalg.eigvalsh((test + test.conj().T) / 2.0).min())
            if low < -1e-9:
                raise GaussianError(f"covariance violates the uncertainty bound ({low:.3e})")
        else:
            if np.linalg.eigvalsh(cov).min() < -1e-12:
                raise GaussianError("classical covariance must be PSD")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def thermal(cls, nbar: float, n_modes: int = 1):
        return cls(np.zeros(2 * n_modes), (nbar + 0.5) * np.eye(2 * n_modes))

    def occupation(self, mode: int = 0) -> float:
        """<a^dag a> of one mode."""
        i = 2 * mode
        var = self.cov[i, i] + self.cov[i + 1, i + 1]
        disp = self.mean[i] ** 2 + self.mean[i + 1] ** 2
        return 0.5 * (var + disp - 1.0)


# ---------------------------------------------------------------------------
# Lyapunov machinery
# ---------------------------------------------------------------------------

def lyapunov_steady(drift, diffusion) -> np.ndarray:
    """Unique symmetric solution of A Theta + Theta A^T = 2 D for stable A,
    by the vectorized linear solve; residual below 1e-10 enforced."""
    a = np.asarray(drift, dtype=float)
    d = np.asarray(diffusion, dtype=float)
    if np.real(np.linalg.eigvals(a)).min() <= 0:
        raise GaussianError("drift matrix is not stable; steady covariance undefined")
    n = a.shape[0]
    eye = np.eye(n)
    coeff = np.kron(eye, a) + np.kron(a, eye)
    theta = np.linalg.solve(coeff, (2.0 * d).flatten(order="F")).reshape(n, n, order="F")
    theta = 0.5 * (theta + theta.T)
    resid = float(np.abs(a @ theta + theta @ a.T - 2.0 * d).max())
    if resid > 1e-10 * max(1.0, np.abs(d).max()):
        raise GaussianError(f"Lyapunov residual {resid:.3e}")
    return theta


def integrate_lyapunov(model: GaussianModel, state: GaussianState, t_grid):
    """Evolve (mean, Theta) under dTheta/dt = -(A Theta + Theta A^T) + 2D."""
    a = model.drift
    d = model.diffusion
    t_grid = np.asarray(t_grid, dtype=float)
    states = [state]
    mean = state.mean.copy()
    cov = state.cov.copy()
    scale = max(np.abs(a).max(), 1e-12)
    for t0, t1 in zip(t_grid[:-1], t_grid[1:]):
        span = t1 - t0
        n_sub = max(1, int(math.ceil(span * scale / 0.05)))
        h = span / n_sub
        for _ in range(n_sub):
            def rhs(c):
                return -(a @ c + c @ a.T) + 2.0 * d
            k1 = rhs(cov)
            k2 = rhs(cov + 0.5 * h * k1)
            k3 = rhs(cov + 0.5 * h * k2)
            k4 = rhs(cov + h * k3)
            cov = cov + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            m1 = -a @ mean
            m2 = -a @ (mean + 0.5 * h * m1)
            m3 = -a @ (mean + 0.5 * h * m2)
            m4 = -a @ (mean + h * m3)
            mean = mean + (h / 6.0) * (m1 + 2 * m2 + 2 * m3 + m4)
        states.append(GaussianState(mean.copy(), 0.5 * (cov + cov.T),
                                    quantum=state.quantum))
    return states


# ---------------------------------------------------------------------------
# Entropy production and flux for linear dynamics
# ---------------------------------------------------------------------------

def pi_phi(model: GaussianModel, state: GaussianState):
    """Entropy production and flux rates of a Gaussian state under linear
    dynamics (in Wigner/Shannon convention):

      Sigma_rate = tr(D Theta^-1 - A_irr) + (A_irr xbar)^T D^-1 (A_irr xbar)
                 + tr(A_irr^T D^-1 A_irr Theta - A_irr)
      Phi_rate   = tr(A_irr^T D^-1 A_irr Theta - A_irr)
                 + (A_irr xbar)^T D^-1 (A_irr xbar).

    Only A_irr, D, Theta and the mean enter; D is pseudo-inverted on its
    range with an explicit range check when singular.
    """
    a_irr = model.irreversible
    d = model.diffusion
    theta = state.cov
    xbar = state.mean
    vals, vecs = np.linalg.eigh(d)
    nz = vals > 1e-12 * max(1.0, vals.max())
    if not np.all(nz):
        # pseudo-inverse: A_irr must act within the range of D
        proj = vecs[:, ~nz]
        if np.abs(proj.T @ a_irr).max() > 1e-10:
            raise GaussianError("singular diffusion with irreversible drift "
                                "outside its range")
    inv_vals = np.where(nz, 1.0 / np.where(nz, vals, 1.0), 0.0)
    d_inv = (vecs * inv_vals) @ vecs.T
    theta_inv = np.linalg.inv(theta)
    drive = a_irr @ xbar
    common = float(np.trace(a_irr.T @ d_inv @ a_irr @ theta) - np.trace(a_irr))
    mean_term = float(drive @ d_inv @ drive)
    sigma_rate = (float(np.trace(d @ theta_inv) - np.trace(a_irr))
                  + mean_term + common)
    phi_rate = common + mean_term
    return sigma_rate, phi_rate


def wigner_entropy(state: GaussianState) -> float:
    """Shannon entropy of the Gaussian phase-space distribution:
    (1/2) ln det Theta + n ln(2 pi e)."""
    sign, logdet = np.linalg.slogdet(state.cov)
    if sign <= 0:
        raise GaussianError("covariance must be positive definite")
    n = len(state.mean) // 2
    return 0.5 * logdet + n * math.log(2.0 * math.pi * math.e)


def renyi2_entropy(state: GaussianState) -> float:
    """S_2 = (1/2) ln det Theta; differs from the Wigner entropy by the
    state-independent constant n ln(2 pi e)."""
    sign, logdet = np.linalg.slogdet(state.cov)
    if sign <= 0:
        raise GaussianError("covariance must be positive definite")
    return 0.5 * logdet


def single_mode_rates(gamma: float, nbar: float, state: GaussianState,
                      omega: float = 1.0):
    """Thermal damping of one mode, phase-space formulation.

    Flux Phi_W = gamma (<a^dag a> - nbar)/(nbar + 1/2) = Qdot_E/(omega
    (nbar + 1/2)); Sigma_W >= 0 vanishes only on the thermal state and
    stays finite for a pure-loss bath (nbar = 0) thanks to the vacuum 1/2.
    """
    if len(state.mean) != 2:
        raise GaussianError("single_mode_rates expects one mode")
    model = thermal_damping_model(gamma, nbar)
    sigma_rate, phi_rate = pi_phi(model, state)
    q_dot = omega * gamma * (state.occupation() - nbar)
    return {
        "sigma_rate": sigma_rate,
        "flux_rate": phi_rate,
        "heat_rate": q_dot,
        "flux_from_heat": q_dot / (omega * (nbar + 0.5)),
    }


def thermal_damping_model(gamma: float, nbar: float) -> GaussianModel:
    a = 0.5 * gamma * np.eye(2)
    d = 0.5 * gamma * (nbar + 0.5) * np.eye(2)
    return GaussianModel(a, d)


# ---------------------------------------------------------------------------
# Two-mode driven-dissipative steady state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoModeNessSpec:
    """Optical mode a (vacuum bath, rate kappa_a) linearly coupled to mode b
    (thermal bath n_Tb, rate gamma_b) through g_ab (a + a^dag)(b + b^dag)/2
    per quadrature pair, i.e. H_int = g_ab (a+a^dag)(b+b^dag) in mode
    operators."""

    omega_a: float
    omega_b: float
    g_ab: float
    kappa_a: float
    gamma_b: float
    n_tb: float

    def __post_init__(self):
        if min(self.omega_a, self.omega_b, self.kappa_a, self.gamma_b) <= 0:
            raise GaussianError("frequencies and rates must be positive")
        if self.n_tb < 0:
            raise GaussianError("bath occupation must be non-negative")


def two_mode_drift_diffusion(spec: TwoModeNessSpec):
    """Langevin drift/diffusion for x = (q_a, p_a, q_b, p_b).

    H = (omega_a/2)(q_a^2 + p_a^2) + (omega_b/2)(q_b^2+p_b^2)
      + 2 g_ab q_a q_b, plus local damping kappa_a (n=0) and gamma_b (n_Tb).
    """
    w_a, w_b, g = spec.omega_a, spec.omega_b, spec.g_ab
    k, gb = spec.kappa_a, spec.gamma_b
    a = np.array([
        [k, -w_a, 0.0, 0.0],
        [w_a, k, 2.0 * g, 0.0],
        [0.0, 0.0, gb, -w_b],
        [2.0 * g, 0.0, w_b, gb],
    ])
    d = np.diag([k * 0.5, k * 0.5,
                 gb * (spec.n_tb + 0.5), gb * (spec.n_tb + 0.5)])
    return GaussianModel(a, d)


def critical_coupling(spec: TwoModeNessSpec) -> float:
    """Coupling where the drift loses stability (soft-mode instability):
    g_cr = sqrt((kappa_a^2 + omega_a^2)(gamma_b^2 + omega_b^2) /
    (4 omega_a omega_b)); reduces to sqrt((kappa_a^2 + omega_a^2) omega_b /
    (4 omega_a)) for gamma_b << omega_b."""
    return math.sqrt((spec.kappa_a ** 2 + spec.omega_a ** 2)
                     * (spec.gamma_b ** 2 + spec.omega_b ** 2)
                     / (4.0 * spec.omega_a * spec.omega_b))


@dataclass(frozen=True)
class TwoModeNessResult:
    cov: np.ndarray
    n_a: float
    n_b: float
    entropy_rate: float       # Pi at the steady state
    mu_a: float
    mu_b: float
    entropy_rate_general: float  # cross-check through pi_phi


def two_mode_ness(spec: TwoModeNessSpec) -> TwoModeNessResult:
    """Steady covariance and its entropy production rate

      Pi = 2 gamma_b ((n_b + 1/2)/(n_Tb + 1/2) - 1) + 4 kappa_a n_a,

    the entropic cost of holding quantum fluctuations out of equilibrium;
    diverges at the critical coupling.  Cross-checked against the general
    linear-dynamics formula.
    """
    model = two_mode_drift_diffusion(spec)
    if not model.is_stable():
        raise GaussianError(
            f"unstable drift at g_ab = {spec.g_ab}; "
            f"critical coupling {critical_coupling(spec):.6g}")
    theta = lyapunov_steady(model.drift, model.diffusion)
    state = GaussianState(np.zeros(4), theta)
    n_a = state.occupation(0)
    n_b = state.occupation(1)
    mu_a = 4.0 * spec.kappa_a * n_a
    mu_b = 2.0 * spec.gamma_b * ((n_b + 0.5) / (spec.n_tb + 0.5) - 1.0)
    sigma_rate, _ = pi_phi(model, state)
    return TwoModeNessResult(theta, n_a, n_b, mu_a + mu_b, mu_a, mu_b, sigma_rate)


# ---------------------------------------------------------------------------
# Squeezed-bath entropy production (two-mode exchange)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SqueezedExchangeSpec:
    """Resonant system mode exchanging with one squeezed thermal bath mode
    through the quanta- and asymmetry-conserving V = i g (a^dag b -
    b^dag a), evolved in the interaction picture for a time t."""

    omega: float
    g: float
    t: float
    r: float
    theta: float
    beta: float
    fock_cut: int = 20


def _squeeze_operator(z: complex, n: int) -> np.ndarray:
    a = destroy(n)
    gen = 0.5 * (np.conj(z) * (a @ a) - z * (a.conj().T @ a.conj().T))
    vals, vecs = np.linalg.eigh(1j * gen)   # gen is anti-Hermitian
    return (vecs * np.exp(-1j * vals)) @ vecs.conj().T


def squeezed_thermal_state(nbar_beta: float, omega: float, r: float,
                           theta: float, n: int) -> DensityOperator:
    """S(z) rho_th S(z)^dag on a truncated Fock space, z = r e^{i theta}."""
    if nbar_beta <= 0:
        w = np.zeros(n)
        w[0] = 1.0
    else:
        x = nbar_beta / (1.0 + nbar_beta)
        w = (1 - x) * x ** np.arange(n)
        w = w / w.sum()
    rho = np.diag(w).astype(complex)
    s = _squeeze_operator(r * np.exp(1j * theta), n)
    return DensityOperator.from_matrix(s @ rho @ s.conj().T)


def asymmetry_operator(omega: float, theta: float, n: int) -> np.ndarray:
    a = destroy(n)
    return 0.5 * omega * (np.exp(1j * theta) * (a.conj().T @ a.conj().T)
                          + np.exp(-1j * theta) * (a @ a))


@dataclass(frozen=True)
class SqueezedSigmaResult:
    sigma_affinity: float
    sigma_relative_entropy: float
    d_quanta: float            # change of total a^dag a + b^dag b
    d_asymmetry: float         # change of total (aa + bb) expectation, |.|
    d_entropy_system: float
    d_h_system: float
    d_a_system: float


def squeezed_sigma(spec: SqueezedExchangeSpec,
                   rho_system: DensityOperator) -> SqueezedSigmaResult:
    """Entropy production against a squeezed thermal bath, two routes.

    Affinity route: Sigma = dS_S - beta (cosh 2r dH_S + sinh 2r dA_S),
    the GGE second law with heat and asymmetry currents.  Fixed-point
    route: Sigma = S(rho_S || rho*) - S(rho_S' || rho*) with rho* the
    system GGE e^{-beta (cosh 2r H + sinh 2r A)}/Z.  The two agree when
    the interaction conserves both total quanta and total asymmetry,
    which is validated structurally (projected commutators) and
    dynamically (moment conservation along the evolution).
    """
    n = spec.fock_cut
    a = np.kron(destroy(n), np.eye(n))
    b = np.kron(np.eye(n), destroy(n))
    v = 1j * spec.g * (a.conj().T @ b - b.conj().T @ a)
    # structural conservation checks on the untruncated-safe subspace
    n_tot = a.conj().T @ a + b.conj().T @ b
    asym_tot = a @ a + b @ b
    proj = _total_quanta_projector(n, n - 2)
    for label, op in (("quanta", n_tot), ("asymmetry", asym_tot)):
        comm = v @ op - op @ v
        resid = float(np.abs(proj @ comm @ proj).max())
        if resid > 1e-10:
            raise GaussianError(f"interaction does not conserve {label} "
                                f"(residual {resid:.3e})")
    if np.abs(v - v.conj().T).max() > 1e-10:
        raise GaussianError("exchange generator must be Hermitian")
    u = hermitian_function(v, lambda x: np.exp(-1j * spec.t * x))

    nbar = 1.0 / (math.exp(spec.beta * spec.omega) - 1.0)
    rho_env = squeezed_thermal_state(nbar, spec.omega, spec.r, spec.theta, n)
    h_sys = spec.omega * (destroy(n).conj().T @ destroy(n))
    a_sys = asymmetry_operator(spec.omega, spec.theta, n)

    joint0 = np.kron(rho_system.matrix, rho_env.matrix)
    joint1 = u @ joint0 @ u.conj().T
    rho_s0 = rho_system.matrix
    rho_s1 = _partial_first(joint1, n)

    ds = von_neumann_entropy(rho_s1) - von_neumann_entropy(rho_s0)
    dh = float(np.real(np.trace(h_sys @ (rho_s1 - rho_s0))))
    da = float(np.real(np.trace(a_sys @ (rho_s1 - rho_s0))))
    ch, sh = math.cosh(2 * spec.r), math.sinh(2 * spec.r)
    sigma_aff = ds - spec.beta * (ch * dh + sh * da)

    # fixed-point route: rho* built as the squeeze of the thermal state,
    # whose spectral data is exact (thermal weights, squeezed Fock basis);
    # independent of the affinity algebra, so agreement genuinely tests
    # that the GGE is the global fixed point of the conserving exchange.
    if nbar <= 0:
        w = np.zeros(n)
        w[0] = 1.0
    else:
        x = nbar / (1.0 + nbar)
        w = (1 - x) * x ** np.arange(n)
        w = w / w.sum()
    squeeze = _squeeze_operator(spec.r * np.exp(1j * spec.theta), n)
    sigma_rel = (relative_entropy_spectral(rho_s0, w, squeeze)
                 - relative_entropy_spectral(rho_s1, w, squeeze))

    d_quanta = float(np.real(np.trace(n_tot @ (joint1 - joint0))))
    d_asym = abs(complex(np.trace(asym_tot @ (joint1 - joint0))))
    return SqueezedSigmaResult(
        sigma_affinity=sigma_aff,
        sigma_relative_entropy=sigma_rel,
        d_quanta=d_quanta,
        d_asymmetry=d_asym,
        d_entropy_system=ds,
        d_h_system=dh,
        d_a_system=da,
    )


def _total_quanta_projector(n: int, max_total: int) -> np.ndarray:
    diag = np.zeros(n * n)
    for i in range(n):
        for j in range(n):
            if i + j <= max_total:
                diag[i * n + j] = 1.0
    return np.diag(diag)


def _partial_first(joint, n):
    t = joint.reshape(n, n, n, n)
    return np.einsum("ikjk->ij", t)
