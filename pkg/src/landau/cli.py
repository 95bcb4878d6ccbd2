"""Batch front door: JSON configs in, CSV series and JSON manifests out.

Exit codes: 0 success, 1 config error, 2 blow-up abort (flagged series is
still written), 3 validation failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__, _fast
from .dynamics import CoupledConfig, SimConfig, run
from .ensemble import (
    Ensemble,
    GaussianSpec,
    MixtureSpec,
    UniformBallSpec,
    sample_initial,
)
from .experiments import maxwell_covariance_oracle, stability_experiment
from .kernel import KernelParams, a_matrix, b_drift, sigma
from .transport import w2_bruteforce, w2_exact

SIM_COLUMNS = ["t", "m2", "m4", "jgamma", "entropy", "lp_norm",
               "mean_x", "mean_y", "mean_z", "flags"]
COUPLE_COLUMNS = ["t", "w2sq", "pair_msd", "jgamma_a", "jgamma_b", "jint", "flags"]


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config ---

def _require_keys(mapping: dict, allowed: set, required: set, where: str):
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(mapping)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")


def _parse_initial(node: dict, where: str):
    if not isinstance(node, dict) or "type" not in node:
        raise ConfigError(f"{where}: expected an object with a 'type' key")
    kind = node["type"]
    if kind == "gaussian":
        _require_keys(node, {"type", "mean", "cov"}, {"type"}, where)
        return GaussianSpec(
            mean=tuple(node.get("mean", (0.0, 0.0, 0.0))),
            cov=tuple(tuple(row) for row in node.get("cov", np.eye(3).tolist())),
        )
    if kind == "uniform_ball":
        _require_keys(node, {"type", "center", "radius"}, {"type", "radius"}, where)
        return UniformBallSpec(center=tuple(node.get("center", (0.0, 0.0, 0.0))),
                               radius=float(node["radius"]))
    if kind == "mixture":
        _require_keys(node, {"type", "weights", "components"}, {"type", "weights", "components"}, where)
        comps = tuple(_parse_initial(c, f"{where}.components[{i}]")
                      for i, c in enumerate(node["components"]))
        if not all(isinstance(c, GaussianSpec) for c in comps):
            raise ConfigError(f"{where}: mixture components must be gaussians")
        return MixtureSpec(weights=tuple(node["weights"]), components=comps)
    raise ConfigError(f"{where}: unknown initial type {kind!r}")


def load_config(path: str, coupled: bool):
    """Parse and validate a JSON config; unknown keys are errors."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}")

    top = {"kernel", "particles", "time", "initial", "estimators", "output"}
    required = {"kernel", "particles", "time", "initial", "output"}
    if coupled:
        top |= {"initial_b", "coupling"}
        required |= {"initial_b"}
    _require_keys(raw, top, required, "config")

    kernel = raw["kernel"]
    _require_keys(kernel, {"gamma", "eps"}, {"gamma"}, "kernel")
    particles = raw["particles"]
    _require_keys(particles, {"n", "seed", "noise_atoms", "drift_only"},
                  {"n", "seed"}, "particles")
    timing = raw["time"]
    _require_keys(timing, {"dt", "t_end", "diag_every"}, {"dt", "t_end"}, "time")
    estimators = raw.get("estimators", {})
    _require_keys(estimators, {"k_neighbors", "bandwidth", "lp_p"}, set(), "estimators")
    output = raw["output"]
    _require_keys(output, {"dir", "prefix"}, {"dir"}, "output")

    try:
        common = dict(
            kp=KernelParams(gamma=float(kernel["gamma"]), eps=float(kernel.get("eps", 1e-4))),
            n=int(particles["n"]),
            dt=float(timing["dt"]),
            t_end=float(timing["t_end"]),
            seed=int(particles["seed"]),
            initial=_parse_initial(raw["initial"], "initial"),
            diag_every=int(timing.get("diag_every", 1)),
            noise_atoms=(None if particles.get("noise_atoms") is None
                         else int(particles["noise_atoms"])),
            drift_only=bool(particles.get("drift_only", False)),
            k_neighbors=int(estimators.get("k_neighbors", 4)),
            bandwidth=(None if estimators.get("bandwidth") is None
                       else float(estimators["bandwidth"])),
            lp_p=float(estimators.get("lp_p", 2.0)),
        )
        if coupled:
            coupling = raw.get("coupling", {})
            _require_keys(coupling, {"recouple_every", "init", "seeds"}, set(), "coupling")
            config = CoupledConfig(
                initial_b=_parse_initial(raw["initial_b"], "initial_b"),
                recouple_every=int(coupling.get("recouple_every", 10)),
                init_coupling=str(coupling.get("init", "independent")),
                **common,
            )
            seeds = [int(s) for s in coupling.get("seeds", [common["seed"]])]
            return config, raw, seeds
        return SimConfig(**common), raw, [common["seed"]]
    except ValueError as exc:
        raise ConfigError(str(exc))


# ---------------------------------------------------------------- output ---

def _fmt(x) -> str:
    return "%.17g" % float(x)


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _series_csv(series, columns) -> str:
    lines = [",".join(columns)]
    n = len(series.t)
    for i in range(n):
        row = []
        for col in columns:
            if col == "flags":
                row.append(series.flags[i])
            elif col == "t":
                row.append(_fmt(series.t[i]))
            elif col.startswith("mean_"):
                row.append(_fmt(series.mean[i]["xyz".index(col[-1])]))
            else:
                row.append(_fmt(getattr(series, col)[i]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _write_outputs(raw, seeds, outputs, started):
    out = raw["output"]
    directory = out["dir"]
    prefix = out.get("prefix", "run")
    os.makedirs(directory, exist_ok=True)
    paths = {}
    for name, text in outputs.items():
        path = os.path.join(directory, f"{prefix}_{name}")
        _atomic_write(path, text)
        paths[name] = path
    manifest = {
        "config": raw,
        "seeds": seeds,
        "version": __version__,
        "wall_clock_seconds": time.time() - started,
        "outputs": paths,
    }
    _atomic_write(os.path.join(directory, f"{prefix}_manifest.json"),
                  json.dumps(manifest, indent=2) + "\n")
    return paths


# -------------------------------------------------------------- commands ---

def cmd_simulate(args) -> int:
    started = time.time()
    try:
        config, raw, seeds = load_config(args.config, coupled=False)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    series = run(config)
    _write_outputs(raw, seeds, {"series.csv": _series_csv(series, SIM_COLUMNS)}, started)
    return 2 if series.blown_up else 0


def cmd_couple(args) -> int:
    started = time.time()
    try:
        config, raw, seeds = load_config(args.config, coupled=True)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    report = stability_experiment(config, seeds)
    first = report.series[0]
    report_json = {
        "seeds": report.seeds,
        "slopes": [None if not np.isfinite(s) else float(s) for s in report.slopes],
        "slope_median": None if not np.isfinite(report.slope_median) else report.slope_median,
        "c_max": None if not np.isfinite(report.c_max) else report.c_max,
        "dominance_ok": report.dominance_ok,
        "trivial": report.trivial,
        "w2sq_initial": [float(x) for x in report.w2sq0],
        "w2sq_final": [float(x) for x in report.w2sq_end],
        "blown_up": [s.blown_up for s in report.series],
    }
    _write_outputs(raw, seeds, {
        "coupled.csv": _series_csv(first, COUPLE_COLUMNS),
        "stability.json": json.dumps(report_json, indent=2) + "\n",
    }, started)
    return 2 if any(s.blown_up for s in report.series) else 0


def _drift_sum_reference(v, kp, flip_sign_component=None):
    """O(n^2) numpy evaluation of Sum_j b(v_i - v_j), optionally with an
    injected sign fault on one drift component (test-only)."""
    z = v[:, None, :] - v[None, :, :]
    b = b_drift(z.reshape(-1, 3), kp).reshape(v.shape[0], v.shape[0], 3)
    if flip_sign_component is not None:
        b[..., flip_sign_component] = np.abs(b[..., flip_sign_component])
    return b.sum(axis=1)


def cmd_validate(args) -> int:
    rng = np.random.default_rng(20240611)
    fault = getattr(args, "inject_fault", None)
    checks = []

    def check(name, ok, detail=""):
        checks.append((name, bool(ok), detail))

    gammas = [-0.5, -1.0, -2.0, -2.9]
    z = rng.normal(size=(500, 3)) * rng.uniform(0.1, 3.0, size=(500, 1))
    for g in gammas:
        kp = KernelParams(gamma=g, eps=1e-8)
        a = a_matrix(z, kp)
        s = sigma(z, kp)
        check(f"sigma_sqrt_identity[gamma={g}]",
              np.max(np.abs(s @ s.transpose(0, 2, 1) - a)) <= 1e-12 * np.max(np.abs(a)))
        az = np.einsum("nij,nj->ni", a, z)
        scale = np.linalg.norm(a.reshape(-1, 9), axis=1) * np.linalg.norm(z, axis=1)
        check(f"null_direction[gamma={g}]", np.max(np.linalg.norm(az, axis=1) / scale) <= 1e-12)
        check(f"psd[gamma={g}]", np.min(np.linalg.eigvalsh(a)) >= -1e-12)
        check(f"parity[gamma={g}]",
              np.array_equal(b_drift(-z, kp), -b_drift(z, kp))
              and np.array_equal(a_matrix(-z, kp), a))

    kp = KernelParams(gamma=-1.0, eps=1e-8)
    z1 = rng.normal(size=(10_000, 3))
    z2 = rng.normal(size=(10_000, 3))
    r1 = np.linalg.norm(z1, axis=1)
    r2 = np.linalg.norm(z2, axis=1)
    dz = np.linalg.norm(z1 - z2, axis=1)
    ds = np.linalg.norm((sigma(z1, kp) - sigma(z2, kp)).reshape(-1, 9), axis=1)
    db = np.linalg.norm(b_drift(z1, kp) - b_drift(z2, kp), axis=1)
    check("lipschitz_sigma",
          np.all(ds <= (abs(kp.gamma) / 2 + 1) * dz * (r1 ** (kp.gamma / 2) + r2 ** (kp.gamma / 2)) * (1 + 1e-12)))
    check("lipschitz_drift",
          np.all(db <= 2 * (abs(kp.gamma) + 1) * dz * (r1**kp.gamma + r2**kp.gamma) * (1 + 1e-12)))

    ot_ok = True
    for trial in range(20):
        n = int(rng.integers(2, 7))
        a_ens = Ensemble(rng.normal(size=(n, 3)))
        b_ens = Ensemble(rng.normal(size=(n, 3)))
        if w2_exact(a_ens, b_ens).cost != w2_bruteforce(a_ens, b_ens).cost:
            ot_ok = False
    check("transport_bruteforce_equivalence", ot_ok)

    sigma0 = np.diag([2.0, 1.0, 1.0])
    oracle = maxwell_covariance_oracle(sigma0, 0.5)
    check("maxwell_oracle_trace", abs(np.trace(oracle) - 4.0) <= 1e-12)
    check("maxwell_oracle_value",
          abs(oracle[0, 0] - (4.0 / 3.0 + (2.0 / 3.0) * np.exp(-3.0))) <= 1e-12)

    kp = KernelParams(gamma=-1.0, eps=1e-3)
    ens = sample_initial(GaussianSpec(), 64, seed=3)
    v = np.array(ens.velocities)
    flip = 0 if fault == "b-sign" else None
    momentum_ok = True
    for step_index in range(20):
        drift = _drift_sum_reference(v, kp, flip_sign_component=flip)
        if step_index == 0:
            kernel_drift = _fast.pairwise_drift(v, kp.gamma, kp.eps)
            ref = _drift_sum_reference(v, kp)
            check("drift_kernel_matches_reference",
                  np.max(np.abs(kernel_drift - ref)) <= 1e-10 * np.max(np.abs(ref)))
        v = v + (1e-3 / 64) * drift
        if np.linalg.norm(v.mean(axis=0) - ens.velocities.mean(axis=0)) > 1e-12:
            momentum_ok = False
    check("momentum_conservation", momentum_ok)

    width = max(len(name) for name, _, _ in checks)
    failures = []
    for name, ok, detail in checks:
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}")
        if not ok:
            failures.append(name)
    if failures:
        print(f"{len(failures)} check(s) failed: {', '.join(failures)}", file=sys.stderr)
        return 3
    return 0


def cmd_oracle(args) -> int:
    if args.which != "maxwell":
        print(f"unknown oracle {args.which!r}", file=sys.stderr)
        return 1
    sigma0 = np.asarray(args.sigma0, dtype=float).reshape(3, 3)
    result = maxwell_covariance_oracle(sigma0, args.t)
    for row in result:
        print(" ".join(_fmt(x) for x in row))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="landau",
        description="Particle simulator for the homogeneous Landau equation "
                    "with soft potentials, with coupled Wasserstein diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a single-system simulation from a JSON config")
    p.add_argument("config")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("couple", help="run the coupled two-system experiment from a JSON config")
    p.add_argument("config")
    p.set_defaults(func=cmd_couple)

    p = sub.add_parser("validate", help="run the fast invariant suite")
    p.add_argument("--inject-fault", choices=["b-sign"], default=None,
                   help=argparse.SUPPRESS)  # test-only: flip a drift sign
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("oracle", help="evaluate a closed-form oracle")
    p.add_argument("which", choices=["maxwell"])
    p.add_argument("--sigma0", type=float, nargs=9, required=True,
                   help="row-major 3x3 initial covariance")
    p.add_argument("--t", type=float, required=True)
    p.set_defaults(func=cmd_oracle)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
