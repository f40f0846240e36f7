"""Command-line front end.

Every subcommand takes the model couplings as flags or from a ``key = value``
config file (flags win over the file, the file wins over defaults) and writes
CSV or JSON.  Exit codes: 0 success (including blow-up or singular
trajectories, which are findings), 1 computational failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import calogero_exact, quantum, sutherland
from .dynamics import IntegrationError, IntegratorOptions, integrate
from .model import DomainError, MisuseError, ModelParams, PhaseStateZ

MODES = ("simulate", "exact", "stability", "perturb", "spectrum", "wedges")

COLUMNS = {
    "simulate": ["t", "x", "y", "z1", "z2", "H", "Pi"],
    "exact": ["t", "z1_exact", "z1_quadrature", "z2_exact", "z1_numeric", "z2_numeric"],
    "stability": ["method", "index", "re", "im"],
    "perturb": ["t", "x_num", "y_num", "x_pert", "y_pert"],
    "spectrum": ["m", "n", "E", "E_minus", "E_plus", "E_fd"],
    "wedges": ["center_angle", "opening_angle"],
}

# epsilon implied by each mode: None means free (default 0)
_FORCED_LIMIT = {"exact": "calogero", "spectrum": "calogero", "wedges": "calogero",
                 "stability": "sutherland", "perturb": "sutherland"}

_DEFAULTS = {
    "gamma": 0.0,
    "g": -0.5,
    "a": 0.0,
    "b": 1.0,
    "t_max": 50.0,
    "samples": 2000,
    "rel_tol": 1e-10,
    "abs_tol": 1e-12,
    "levels": 3,
    "branch": "minus",
    "format": "csv",
}

_MODE_DEFAULTS = {
    "perturb": {"gamma": 0.1, "t_max": 5.0},
    "wedges": {"format": "json"},
}

_FLOAT_KEYS = ("omega", "gamma", "g", "epsilon", "a", "b", "z1_0", "v1_0", "t_max", "rel_tol", "abs_tol")
_INT_KEYS = ("samples", "levels")
_STR_KEYS = ("branch", "format", "output", "sweep", "mode")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    mode: str
    params: ModelParams
    a: float
    b: float
    z1_0: float
    v1_0: Optional[float]
    t_max: float
    samples: int
    rel_tol: float
    abs_tol: float
    levels: int
    branch: str
    format: str
    output: Optional[str] = None
    sweep: Optional[str] = None

    @property
    def initial_v1(self) -> float:
        """z1'(0): explicit value, else -2 gamma b (Pi = 0) in the Calogero limit and 0 otherwise."""
        if self.v1_0 is not None:
            return self.v1_0
        return -2.0 * self.params.gamma * self.b if self.params.is_calogero else 0.0

    @property
    def integrator(self) -> IntegratorOptions:
        return IntegratorOptions(rel_tol=self.rel_tol, abs_tol=self.abs_tol, max_samples=self.samples)

    def dump(self) -> str:
        """Config-file text that parses back to this config."""
        flat = {"mode": self.mode, **asdict(self.params)}
        for f in fields(self):
            if f.name not in ("mode", "params", "sweep"):
                flat[f.name] = getattr(self, f.name)
        lines = [f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}" for k, v in flat.items() if v is not None]
        return "\n".join(lines) + "\n"


def read_config_file(path: str) -> dict:
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FLOAT_KEYS + _INT_KEYS + _STR_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def _coerce(key: str, value):
    try:
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _INT_KEYS:
            return int(value)
    except ValueError as exc:
        raise UsageError(f"invalid value for {key}: {value!r}") from exc
    return value


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--omega", type=float)
    common.add_argument("--gamma", type=float)
    common.add_argument("--g", type=float)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--a", type=float, help="initial z2'(0)")
    common.add_argument("--b", type=float, help="initial z2(0)")
    common.add_argument("--z1-0", dest="z1_0", type=float, help="initial z1(0)")
    common.add_argument("--v1-0", dest="v1_0", type=float,
                        help="initial z1'(0); default -2 gamma b in the Calogero limit, else 0")
    common.add_argument("--t-max", dest="t_max", type=float)
    common.add_argument("--samples", type=int)
    common.add_argument("--rel-tol", dest="rel_tol", type=float)
    common.add_argument("--abs-tol", dest="abs_tol", type=float)
    common.add_argument("--levels", type=int)
    common.add_argument("--branch", choices=("plus", "minus"))
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--output", metavar="PATH")
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--dump-config", dest="dump_config", action="store_true")
    common.add_argument("--sweep", metavar="SPEC", help="key=start:stop:count or key=v1,v2,...")

    parser = argparse.ArgumentParser(prog="ptcalogero", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="mode", required=True)
    helps = {
        "simulate": "numerical trajectory in both frames",
        "exact": "closed-form Calogero solution with quadrature and numerical cross-checks",
        "stability": "Sutherland equilibrium and eigenvalue analysis",
        "perturb": "first-order perturbative vs numerical x(t), y(t)",
        "spectrum": "quantum energy ladder, both branches, finite-difference oracle",
        "wedges": "Stokes wedge geometry of the ground state",
    }
    for mode in MODES:
        sub.add_parser(mode, parents=[common], help=helps[mode], argument_default=argparse.SUPPRESS)
    return parser


def _resolve(mode: str, given: dict) -> RunConfig:
    merged = {**_DEFAULTS, **_MODE_DEFAULTS.get(mode, {}), **given}
    if "mode" in merged and merged.pop("mode") != mode:
        raise UsageError(f"config file is for mode {given.get('mode')!r}, not {mode!r}")
    if "omega" not in merged:
        raise UsageError("--omega is required")
    if merged["samples"] < 2:
        raise UsageError("--samples must be at least 2")
    if merged["levels"] < 0:
        raise UsageError("--levels must be non-negative")
    if merged["branch"] not in ("plus", "minus") or merged["format"] not in ("csv", "json"):
        raise UsageError("branch must be plus|minus and format csv|json")

    omega = merged["omega"]
    limit = _FORCED_LIMIT.get(mode)
    implied = {"calogero": -omega * omega, "sutherland": 0.0}.get(limit)
    eps = merged.get("epsilon", implied if implied is not None else 0.0)
    try:
        params = ModelParams(omega, merged["gamma"], merged["g"], eps)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if limit == "calogero" and not params.is_calogero:
        raise UsageError(f"{mode} works in the Calogero limit epsilon = -omega^2; got epsilon = {eps}")
    if limit == "sutherland" and not params.is_sutherland:
        raise UsageError(f"{mode} works in the Sutherland limit epsilon = 0; got epsilon = {eps}")

    z1_0 = merged.get("z1_0", 0.5 if mode in ("simulate", "perturb") else 0.0)
    return RunConfig(
        mode=mode, params=params, a=merged["a"], b=merged["b"], z1_0=z1_0, v1_0=merged.get("v1_0"),
        t_max=merged["t_max"], samples=merged["samples"], rel_tol=merged["rel_tol"],
        abs_tol=merged["abs_tol"], levels=merged["levels"], branch=merged["branch"],
        format=merged["format"], output=merged.get("output"), sweep=merged.get("sweep"),
    )


def parse_args(argv=None) -> tuple[RunConfig, bool]:
    """Parse argv into (config, dump_requested); usage errors exit with status 2."""
    parser = _build_parser()
    ns = vars(parser.parse_args(argv))
    mode = ns.pop("mode")
    dump = ns.pop("dump_config", False)
    config_path = ns.pop("config", None)
    try:
        given = {}
        if config_path is not None:
            given = {k: _coerce(k, v) for k, v in read_config_file(config_path).items()}
        given.update(ns)
        return _resolve(mode, given), dump
    except UsageError as exc:
        parser.error(str(exc))


# ---------------------------------------------------------------- computations


def _num(v):
    if v is None:
        return ""
    if isinstance(v, (complex, np.complexfloating)):
        return repr(complex(v)) if v.imag != 0 else float(v.real)
    if isinstance(v, (np.integer, int)):
        return int(v)
    return float(v)


def _params_meta(p: ModelParams) -> dict:
    return asdict(p)


def run_simulate(cfg: RunConfig):
    p = cfg.params
    start = PhaseStateZ(cfg.z1_0, cfg.b, cfg.initial_v1, cfg.a)
    tr = integrate(start, p, (0.0, cfg.t_max), cfg.integrator)
    H = tr.energy()
    Pi = tr.pi()
    rows = []
    for i in range(len(tr)):
        rows.append([tr.t[i], tr.x[i], tr.y[i], tr.z1[i], tr.z2[i], H[i], None if Pi is None else Pi[i]])
    meta = {"params": _params_meta(p), "initial": asdict(start), "diagnostics": tr.diagnostics.as_dict()}
    return rows, meta


def run_exact(cfg: RunConfig):
    p = cfg.params
    c = calogero_exact.ep_constants(cfg.a, cfg.b, p, cfg.z1_0)
    tr = integrate(calogero_exact.pi_zero_initial_state(c), p, (0.0, cfg.t_max), cfg.integrator)
    t = np.linspace(0.0, cfg.t_max, cfg.samples)
    z1e, z2e = calogero_exact.z1_exact(t, c), calogero_exact.z2_exact(t, c)
    z1q = calogero_exact.z1_quadrature(t, c)
    n = len(tr)
    rows = [
        [t[i], z1e[i], z1q[i], z2e[i], tr.z1[i] if i < n else None, tr.z2[i] if i < n else None]
        for i in range(len(t))
    ]
    consts = {k: getattr(c, k) for k in ("a", "b", "A", "B", "C", "D", "k_sq", "I", "z1_0", "Omega")}
    meta = {
        "params": _params_meta(p),
        "constants": consts,
        "phase": calogero_exact.effective_frequency(p).phase.value,
        "max_abs_err_z1_exact_vs_quadrature": float(np.max(np.abs(z1e - z1q))),
        "max_abs_err_z1_numeric": float(np.max(np.abs(tr.z1 - z1e[:n]))),
        "max_abs_err_z2_numeric": float(np.max(np.abs(tr.z2 - z2e[:n]))),
        "mean_slope_z1": calogero_exact.z1_mean_slope(c),
        "diagnostics": tr.diagnostics.as_dict(),
    }
    return rows, meta


def run_stability(cfg: RunConfig):
    rep = sutherland.stability_report(cfg.params)
    rows = []
    for method, eigs in (("quoted", rep.eigs_paper), ("characteristic", rep.eigs_char), ("numeric", rep.eigs_numeric)):
        for i, lam in enumerate(_sorted_eigs(eigs)):
            rows.append([method, i, lam.real, lam.imag])
    meta = rep.as_dict()
    for k in ("eigs_paper", "eigs_char", "eigs_numeric"):
        meta[k] = [[float(z.real), float(z.imag)] for z in _sorted_eigs(getattr(rep, k))]
    return rows, meta


def _sorted_eigs(eigs):
    # rounding keeps the order stable against last-bit noise from the eigensolver
    return sorted((complex(z) for z in eigs), key=lambda z: (round(z.real, 9), round(z.imag, 9)))


def run_perturb(cfg: RunConfig):
    cmp = sutherland.compare_perturbative_numeric(cfg.params, cfg.t_max, cfg.integrator)
    rows = [[cmp.t[i], cmp.x_num[i], cmp.y_num[i], cmp.x_pert[i], cmp.y_pert[i]] for i in range(len(cmp.t))]
    meta = {
        "params": _params_meta(cfg.params),
        "initial": asdict(sutherland.PERTURBATIVE_INITIAL),
        "max_deviation": cmp.max_deviation(),
        "termination": cmp.termination,
    }
    return rows, meta


def run_spectrum(cfg: RunConfig):
    p = cfg.params
    qm = quantum.quantum_params(p, "minus")
    qp = quantum.quantum_params(p, "plus")
    e_minus = quantum.energy_ladder(qm, cfg.levels).energies
    e_plus = quantum.energy_ladder(qp, cfg.levels).energies
    fd = None
    if qp.phase.value == "unbroken" and cfg.levels > 0:
        fd = quantum.fd_spectrum_oracle(qp, cfg.levels).energies
    sel = e_minus if cfg.branch == "minus" else e_plus
    rows = [
        [m, 2 * m, sel[m], e_minus[m], e_plus[m], None if fd is None else fd[m]]
        for m in range(cfg.levels)
    ]
    meta = {
        "params": _params_meta(p),
        "phase": qm.phase.value,
        "branch": cfg.branch,
        "lambda": qm.lam,
        "lambda_roots": [qm.lambda_plus, qm.lambda_minus],
        "Omega": _num(qm.omega_eff),
        "C": _num(qm.C if cfg.branch == "minus" else qp.C),
        "fd_oracle_branch": "plus",
    }
    return rows, meta


def run_wedges(cfg: RunConfig):
    coeff = 0.5 * cfg.params.gamma * cfg.z1_0
    wedges = quantum.stokes_wedges(coeff)
    rows = [[w.center_angle, w.opening_angle] for w in wedges]
    meta = {"params": _params_meta(cfg.params), "z1": cfg.z1_0, "coefficient": coeff}
    return rows, meta


RUNNERS = {
    "simulate": run_simulate,
    "exact": run_exact,
    "stability": run_stability,
    "perturb": run_perturb,
    "spectrum": run_spectrum,
    "wedges": run_wedges,
}


# ---------------------------------------------------------------- output


def format_csv(mode: str, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(COLUMNS[mode])
    for row in rows:
        w.writerow([v if isinstance(v, str) else _num(v) for v in row])
    return buf.getvalue()


def format_json(mode: str, rows, meta) -> str:
    cols = COLUMNS[mode]
    data = {c: [v if isinstance(v, str) else _num(v) for v in col] for c, col in zip(cols, zip(*rows))} if rows else {c: [] for c in cols}
    return json.dumps({"metadata": {"mode": mode, **meta}, "data": data}, indent=1) + "\n"


def emit(cfg: RunConfig, rows, meta, stdout=None, stderr=None) -> None:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    if cfg.format == "json":
        text = format_json(cfg.mode, rows, meta)
        if cfg.output:
            Path(cfg.output).write_text(text)
        else:
            stdout.write(text)
        return
    text = format_csv(cfg.mode, rows)
    meta_text = json.dumps({"mode": cfg.mode, **meta}, sort_keys=True)
    if cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(text)
        Path(cfg.output + ".meta.json").write_text(meta_text + "\n")
    else:
        stdout.write(text)
        stderr.write(meta_text + "\n")


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    """Execute one config; returns the process exit code."""
    stderr = stderr or sys.stderr
    if cfg.sweep:
        return run_sweep(cfg, stderr=stderr)
    try:
        rows, meta = RUNNERS[cfg.mode](cfg)
    except (DomainError, MisuseError, IntegrationError, quantum.ConvergenceError, ArithmeticError) as exc:
        stderr.write(f"ptcalogero {cfg.mode}: {type(exc).__name__}: {exc}\n")
        return 1
    emit(cfg, rows, meta, stdout=stdout, stderr=stderr)
    return 0


# ---------------------------------------------------------------- sweeps


def parse_sweep(spec: str) -> tuple[str, list]:
    if "=" not in spec:
        raise UsageError(f"sweep spec {spec!r} must look like key=start:stop:count or key=v1,v2")
    key, rhs = (s.strip() for s in spec.split("=", 1))
    key = key.replace("-", "_")
    if key not in _FLOAT_KEYS:
        raise UsageError(f"cannot sweep over {key!r}")
    try:
        if ":" in rhs:
            start, stop, count = rhs.split(":")
            values = [float(v) for v in np.linspace(float(start), float(stop), int(count))]
        else:
            values = [float(v) for v in rhs.split(",")]
    except ValueError as exc:
        raise UsageError(f"malformed sweep spec {spec!r}") from exc
    if not values:
        raise UsageError("sweep produced no values")
    return key, values


def sweep_configs(cfg: RunConfig) -> list[RunConfig]:
    if not cfg.output:
        raise UsageError("--sweep needs --output; each run writes its own file")
    key, values = parse_sweep(cfg.sweep)
    out = Path(cfg.output)
    configs = []
    for v in values:
        if key in ("omega", "gamma", "g", "epsilon"):
            kw = asdict(cfg.params)
            kw[key] = v
            if key == "omega" and cfg.params.is_calogero:
                kw["epsilon"] = -v * v
            try:
                params = ModelParams(**kw)
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
            new = replace(cfg, params=params)
        else:
            new = replace(cfg, **{key: v})
        path = out.with_name(f"{out.stem}_{key}={v!r}{out.suffix}")
        configs.append(replace(new, output=str(path), sweep=None))
    return configs


def _run_quiet(cfg: RunConfig) -> tuple[str, int, str]:
    err = io.StringIO()
    code = run(cfg, stderr=err)
    return cfg.output, code, err.getvalue()


def run_sweep(cfg: RunConfig, stderr=None, max_workers: Optional[int] = None) -> int:
    stderr = stderr or sys.stderr
    try:
        configs = sweep_configs(cfg)
    except UsageError as exc:
        stderr.write(f"ptcalogero: {exc}\n")
        return 2
    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        results = list(pool.map(_run_quiet, configs))
    worst = 0
    for path, code, err in results:
        if err and code:
            stderr.write(err)
        worst = max(worst, code)
    return worst


def main(argv=None) -> int:
    cfg, dump = parse_args(argv)
    if dump:
        sys.stdout.write(cfg.dump())
        return 0
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
