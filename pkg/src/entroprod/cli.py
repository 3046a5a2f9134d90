"""Scenario runner: declarative JSON configs in, CSV/JSON tables out.

    entroprod run <config.json> [--jobs N] [--out DIR]
    entroprod verify <suite>

Config schema (version "v1"): {"schema": "v1", "kind": <scenario>,
"parameters": {...}, "sweep": {"parameter": name, "grid": [...]},
"seed": int, "output": {"path": ..., "format": "csv"|"json"}}.
Runs are deterministic given the seed; every CSV carries a header row and
a provenance comment with the config hash and seed.  Exit codes: 0 ok,
2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import classical as cl
from . import collisional as cm
from . import episodes as eps
from . import gaussian as gs
from . import lindblad as lb
from . import resource as rs
from . import trajectories as tj
from . import verify
from .core import CoreError, HermitianOperator, PAULI_X, PAULI_Z
from .rand import random_probability

SCHEMA_VERSION = "v1"
EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _require(params: dict, name: str, kind=float):
    if name not in params:
        raise ConfigError(f"missing required parameter '{name}'")
    try:
        return kind(params[name])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"parameter '{name}' is not a valid {kind.__name__}") from exc


# ---------------------------------------------------------------------------
# Scenario table builders: each returns (header, rows)
# ---------------------------------------------------------------------------

def _scenario_collisional(params, rng):
    """SWAP engine sweep over the gap ratio."""
    t_a = _require(params, "t_a")
    t_b = _require(params, "t_b")
    eps_a = _require(params, "eps_a")
    ratio = float(params.get("ratio", 0.5))
    spec = cm.SwapEngineSpec(eps_a, ratio * eps_a, t_a, t_b)
    res = cm.swap_engine(spec)
    return (["ratio", "W", "Qa", "Qb", "Sigma", "regime"],
            [[ratio, res.work, res.q_a, res.q_b, res.sigma, res.regime]])


def _scenario_episode(params, rng):
    """Random (seeded) resonant-qubit thermal episode balance."""
    beta = _require(params, "beta")
    omega = float(params.get("omega", 1.0))
    g = float(params.get("g", 0.7))
    from .core import SIGMA_MINUS, SIGMA_PLUS, UnitaryOperator, hermitian_function, thermal_state
    from .rand import random_density
    h = HermitianOperator.from_matrix(omega * np.diag([0.0, 1.0]))
    v = g * (np.kron(SIGMA_PLUS, SIGMA_MINUS) + np.kron(SIGMA_MINUS, SIGMA_PLUS))
    u = UnitaryOperator.from_matrix(hermitian_function(v, lambda x: np.exp(-1j * x)), (2, 2))
    ep = eps.Episode(h, h, u, random_density(2, rng), thermal_state(h, beta))
    bal = eps.thermal_balance(ep, beta)
    row = [g, bal.sigma, bal.flux, bal.d_entropy_system, bal.mutual_info,
           bal.env_displacement, bal.heat_env, bal.work]
    return (["g", "sigma", "flux", "dS_S", "I_SE", "D_env", "Q_E", "W"], [row])


def _scenario_trajectories(params, rng):
    """Qubit sudden-quench work distribution."""
    beta = _require(params, "beta")
    dlam = float(params.get("dlam", 0.3))
    h_i = PAULI_Z
    h_f = PAULI_Z + dlam * PAULI_X
    stats = tj.work_distribution(h_i, h_f, np.eye(2), beta)
    rows = [[v, p] for v, p in zip(stats.forward.values,
                                   stats.forward.probabilities)]
    return (["value", "probability"], rows)


def _scenario_lindblad(params, rng):
    """Liouvillian gap and steady occupation of the driven Kerr model."""
    drive = _require(params, "drive")
    n_scale = int(params.get("n_scale", 1))
    fock_cut = int(params.get("fock_cut", 20))
    model = lb.kerr_model(float(params.get("delta", -2.0)),
                          float(params.get("kerr", 1.0)),
                          drive, float(params.get("kappa", 0.5)),
                          n_scale=n_scale, fock_cut=fock_cut)
    gap_val = lb.gap(model)
    rho_ss = lb.steady_state(model)
    n_mean, _ = lb.validate_kerr_truncation(model, rho_ss)
    return (["parameter", "gap", "order_parameter", "n_a"],
            [[drive, gap_val, n_mean / n_scale, n_mean]])


def _scenario_gaussian(params, rng):
    """Two-mode NESS sweep row."""
    g_ab = _require(params, "g_ab")
    spec = gs.TwoModeNessSpec(
        float(params.get("omega_a", 1.0)), float(params.get("omega_b", 1.5)),
        g_ab, float(params.get("kappa_a", 0.4)),
        float(params.get("gamma_b", 0.2)), float(params.get("n_tb", 0.6)))
    res = gs.two_mode_ness(spec)
    return (["g_ab", "n_a", "n_b", "Pi", "mu_a", "mu_b"],
            [[g_ab, res.n_a, res.n_b, res.entropy_rate, res.mu_a, res.mu_b]])


def _scenario_classical(params, rng):
    """Competing-reservoir Ising lattice entropy production."""
    temperature = _require(params, "temperature")
    mu = float(params.get("mu", 0.8))
    n_sites = int(params.get("n_sites", 4))
    w = cl.glauber_ising_competing(n_sites, float(params.get("coupling", 1.0)),
                                   temperature, mu, -mu,
                                   cl.ring_adjacency(n_sites))
    p_ss = cl.stationary_distribution(w)
    sigma, lumped = cl.multibath_sigma(w, p_ss)
    return (["T", "sigma", "sigma_lumped"], [[temperature, sigma, lumped]])


def _scenario_resource(params, rng):
    """Thermo-majorization verdict for a random (seeded) qubit pair."""
    beta = _require(params, "beta")
    e2 = np.array([0.0, float(params.get("gap", 1.0))])
    pop1 = rs.EnergyPopulations(e2, random_probability(2, rng))
    pop2 = rs.EnergyPopulations(e2, random_probability(2, rng))
    verdict = rs.thermo_majorizes(pop1, pop2, beta)
    g1, err = rs.gamma_embed(pop1, beta, int(params.get("denominator", 10_000)))
    return (["beta", "p1_ground", "p2_ground", "verdict", "embedding_error"],
            [[beta, pop1.probabilities[0], pop2.probabilities[0],
              verdict.value, err]])


SCENARIOS = {
    "collisional": _scenario_collisional,
    "episode": _scenario_episode,
    "trajectories": _scenario_trajectories,
    "lindblad": _scenario_lindblad,
    "gaussian": _scenario_gaussian,
    "classical": _scenario_classical,
    "resource": _scenario_resource,
}


# ---------------------------------------------------------------------------
# Config handling and output
# ---------------------------------------------------------------------------

def load_config(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if cfg.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema '{cfg.get('schema')}'")
    kind = cfg.get("kind")
    if kind not in SCENARIOS:
        raise ConfigError(f"unknown kind '{kind}'; choose from {sorted(SCENARIOS)}")
    params = cfg.get("parameters", {})
    if not isinstance(params, dict):
        raise ConfigError("'parameters' must be an object")
    sweep = cfg.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, dict) or "parameter" not in sweep \
                or "grid" not in sweep:
            raise ConfigError("'sweep' needs 'parameter' and 'grid'")
        if not isinstance(sweep["grid"], list) or len(sweep["grid"]) == 0:
            raise ConfigError("sweep grid must be a non-empty list")
    return cfg


def run_config(cfg: dict, out_dir: Path | None = None, jobs: int = 1) -> Path:
    kind = cfg["kind"]
    scenario = SCENARIOS[kind]
    seed = int(cfg.get("seed", 0))
    params = dict(cfg.get("parameters", {}))
    sweep = cfg.get("sweep")
    output = cfg.get("output", {})
    out_path = Path(output.get("path", f"{kind}.csv"))
    if out_dir is not None:
        out_path = out_dir / out_path.name
    fmt = output.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown output format '{fmt}'")

    points = [params]
    if sweep is not None:
        points = []
        for value in sweep["grid"]:
            p = dict(params)
            p[sweep["parameter"]] = value
            points.append(p)

    def run_point(idx_point):
        idx, point = idx_point
        rng = np.random.default_rng(seed + idx)
        return scenario(point, rng)

    if jobs > 1 and len(points) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_point, enumerate(points)))
    else:
        results = [run_point(x) for x in enumerate(points)]

    header = results[0][0]
    rows = [row for _, table in results for row in table]
    digest = hashlib.sha256(
        json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        lines = [f"# entroprod {SCHEMA_VERSION} config_sha256={digest} seed={seed}"]
        lines.append(",".join(header))
        for row in rows:
            lines.append(",".join(_fmt(x) for x in row))
        out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        payload = {
            "provenance": {"config_sha256": digest, "seed": seed,
                           "schema": SCHEMA_VERSION},
            "header": header,
            "rows": rows,
        }
        out_path.write_text(json.dumps(payload, indent=2, default=_fmt) + "\n",
                            encoding="utf-8")
    return out_path


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="entroprod",
                                     description="entropy production toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--out", type=Path, default=None)
    p_ver = sub.add_parser("verify", help="run a verification suite")
    p_ver.add_argument("suite",
                       help="ft-table | landauer | gaussian-ness | "
                            "majorization | quench | all (plus extras: "
                            "route-equality, swap-engine, classical, "
                            "squeezed, liouvillian)")
    args = parser.parse_args(argv)

    if args.command == "run":
        try:
            cfg = load_config(args.config)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        try:
            out = run_config(cfg, args.out, max(1, args.jobs))
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        except (CoreError, ValueError, ArithmeticError) as exc:
            print(f"numerical failure [{cfg.get('kind')}]: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        print(out)
        return EXIT_OK

    if args.command == "verify":
        try:
            records = verify.run_suite(args.suite)
        except KeyError as exc:
            print(f"error: {exc.args[0]}", file=sys.stderr)
            return EXIT_VALIDATION
        failures = 0
        for name, passed, detail in records:
            tag = "PASS" if passed else "FAIL"
            suffix = f"  ({detail})" if detail else ""
            print(f"[{tag}] {name}{suffix}")
            failures += 0 if passed else 1
        print(f"{len(records) - failures}/{len(records)} checks passed")
        return EXIT_OK if failures == 0 else EXIT_NUMERICAL

    return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
