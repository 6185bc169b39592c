"""Configuration-driven scenario runner with machine-readable reports.

Configs are flat ``key = value`` text with dotted sections and ``#``
comments.  Recognized keys (see README for the full reference):

    scenario                 spectral | equilibrium | simulate |
                             threshold_sweep | verify
    seed                     integer, defaults to 0
    output.dir               optional output directory
    domain.left domain.right grid.n
    kernel.family            tophat | triangle | truncated_gaussian
    kernel.h | kernel.sigma kernel.cutoff
    beta.* gamma.* lambda.*  field recipes (family = constant | step |
                             bump | table with their parameters)
    init.s.* init.i.*        initial data recipes for simulate
    d_S d_I                  dispersal rates
    integrator.dt .method .t_end .snapshot_stride .positivity_floor
    simulate.tol
    sweep.lo sweep.hi sweep.count sweep.spacing
    verify.instances verify.n_max

Reports are JSON with lexicographically ordered keys; everything except
the ``timing`` object is byte-stable for a fixed (config, seed).  Scenario
CSVs use comma separators, ``.`` decimals, a header row and LF endings.
Instance-level work in sweeps and verify suites may run on a small thread
pool capped by the ``NONLOCAL_SIS_THREADS`` environment variable; results
are merged in input order either way.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .domain import (
    CoefficientField,
    DomainSpec,
    FieldSpec,
    Grid,
    KernelSpec,
    ModelParams,
    build_field,
    build_grid,
    load_coefficient_table,
    sample_field_values,
    validate_instance,
)
from .dynamics import (
    IntegratorConfig,
    State,
    check_convergence,
    integrate,
    write_norms_csv,
    write_trajectory_csv,
)
from .equilibrium import solve_disease_free, solve_endemic
from .errors import ConfigError, InvalidBracketError, NonlocalSISError
from .operators import assemble_dispersal
from .spectral import (
    SIGN_DEADBAND,
    basic_reproduction_number,
    compute_spectral_report,
    critical_dispersal_rate,
    infection_growth_rate,
)

__all__ = [
    "ExperimentConfig",
    "Instance",
    "RunReport",
    "parse_config",
    "make_config",
    "load_config",
    "run_scenario",
    "write_report",
    "random_instance",
    "run_verify_suite",
    "worker_count",
]

SCENARIOS = ("spectral", "equilibrium", "simulate", "threshold_sweep", "verify")

_FIELD_KEYS = {
    "constant": ("value",),
    "step": ("c1", "c2", "x_split"),
    "bump": ("base", "amp", "center", "width"),
    "table": ("path",),
}


def worker_count() -> int:
    """Worker cap from NONLOCAL_SIS_THREADS (defaults to 1)."""
    raw = os.environ.get("NONLOCAL_SIS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass
class ExperimentConfig:
    scenario: str
    seed: int
    entries: dict
    base_dir: Path
    output_dir: str | None = None

    def get(self, key: str, default=None):
        return self.entries.get(key, default)


def _parse_scalar(raw: str):
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            continue
    return raw


def parse_config(text: str, base_dir=None) -> ExperimentConfig:
    """Parse and validate a config document; unknown keys are rejected."""
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    entries: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}",
                              line=lineno)
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if not key or not raw:
            raise ConfigError(f"line {lineno}: empty key or value", line=lineno)
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}",
                              line=lineno, key=key)
        entries[key] = _parse_scalar(raw)

    return make_config(entries, base_dir)


def make_config(entries: dict, base_dir=None) -> ExperimentConfig:
    """Validate parsed entries into a config (also used for overrides)."""
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    _check_keys(entries)
    scenario = entries.get("scenario")
    if scenario is None:
        raise ConfigError("missing required key 'scenario'", key="scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}", key="scenario")
    seed = entries.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("'seed' must be an integer", key="seed")

    config = ExperimentConfig(scenario=scenario, seed=seed, entries=entries,
                              base_dir=base_dir,
                              output_dir=entries.get("output.dir"))
    _validate_semantics(config)
    return config


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


_SIMPLE_KEYS = {
    "scenario", "seed", "output.dir",
    "domain.left", "domain.right", "grid.n",
    "kernel.family", "kernel.h", "kernel.sigma", "kernel.cutoff",
    "d_S", "d_I",
    "integrator.dt", "integrator.method", "integrator.t_end",
    "integrator.snapshot_stride", "integrator.positivity_floor",
    "simulate.tol",
    "sweep.lo", "sweep.hi", "sweep.count", "sweep.spacing",
    "verify.instances", "verify.n_max",
}

_FIELD_PREFIXES = ("beta", "gamma", "lambda", "init.s", "init.i")


def _check_keys(entries: dict) -> None:
    for key in entries:
        if key in _SIMPLE_KEYS:
            continue
        prefix, _, tail = key.rpartition(".")
        if prefix in _FIELD_PREFIXES and tail in {"family", "value", "c1", "c2",
                                                  "x_split", "base", "amp",
                                                  "center", "width", "path"}:
            continue
        raise ConfigError(f"unknown key {key!r}", key=key)


def _require(config: ExperimentConfig, key: str):
    value = config.get(key)
    if value is None:
        raise ConfigError(f"missing required key {key!r}", key=key)
    return value


def _field_spec(config: ExperimentConfig, prefix: str, n: int) -> FieldSpec:
    family = config.get(f"{prefix}.family")
    if family is None:
        raise ConfigError(f"missing field family for {prefix!r}", key=prefix)
    if family not in _FIELD_KEYS:
        raise ConfigError(f"unknown field family {family!r} for {prefix!r}",
                          key=f"{prefix}.family")
    params = []
    for name in _FIELD_KEYS[family]:
        value = config.get(f"{prefix}.{name}")
        if value is None:
            raise ConfigError(f"missing {prefix}.{name} for family {family!r}",
                              key=f"{prefix}.{name}")
        params.append(value)
    if family == "table":
        path = config.base_dir / str(params[0])
        if not path.exists():
            raise ConfigError(f"table for {prefix!r} not found: {path}",
                              key=f"{prefix}.path")
        values = load_coefficient_table(path)
        if values.size != n:
            raise ConfigError(
                f"table for {prefix!r} has {values.size} rows, grid has {n}",
                key=f"{prefix}.path")
        return FieldSpec.table(values)
    return FieldSpec(family, tuple(float(p) for p in params))


def _validate_semantics(config: ExperimentConfig) -> None:
    if config.scenario == "verify":
        return  # verify draws its own instances
    for key in ("domain.left", "domain.right", "grid.n", "kernel.family",
                "d_S", "d_I"):
        _require(config, key)
    n = int(_require(config, "grid.n"))
    family = config.get("kernel.family")
    if family in ("tophat", "triangle"):
        _require(config, "kernel.h")
    elif family == "truncated_gaussian":
        _require(config, "kernel.sigma")
        _require(config, "kernel.cutoff")
    else:
        raise ConfigError(f"unknown kernel family {family!r}", key="kernel.family")
    for prefix in ("beta", "gamma", "lambda"):
        _field_spec(config, prefix, n)
    if config.scenario == "simulate":
        for key in ("integrator.dt", "integrator.t_end"):
            _require(config, key)
        for prefix in ("init.s", "init.i"):
            _field_spec(config, prefix, n)
    if config.scenario == "threshold_sweep":
        for key in ("sweep.lo", "sweep.hi", "sweep.count"):
            _require(config, key)


@dataclass
class Instance:
    """A fully assembled problem instance."""

    grid: Grid
    kernel: KernelSpec
    beta: CoefficientField
    gamma: CoefficientField
    lam: CoefficientField
    params: ModelParams

    @property
    def dispersal(self):
        return assemble_dispersal(self.grid, self.kernel)

    @property
    def gap(self) -> np.ndarray:
        """Transmission minus recovery at the nodes."""
        return self.beta.values - self.gamma.values


def _build_instance(config: ExperimentConfig) -> Instance:
    domain = DomainSpec(float(_require(config, "domain.left")),
                        float(_require(config, "domain.right")))
    grid = build_grid(int(_require(config, "grid.n")), domain)
    family = config.get("kernel.family")
    if family == "tophat":
        kernel = KernelSpec.tophat(float(config.get("kernel.h")))
    elif family == "triangle":
        kernel = KernelSpec.triangle(float(config.get("kernel.h")))
    else:
        kernel = KernelSpec.truncated_gaussian(float(config.get("kernel.sigma")),
                                               float(config.get("kernel.cutoff")))
    beta = build_field(_field_spec(config, "beta", grid.n), grid, role="beta")
    gamma = build_field(_field_spec(config, "gamma", grid.n), grid, role="gamma")
    lam = build_field(_field_spec(config, "lambda", grid.n), grid, role="lambda")
    params = ModelParams(d_S=float(_require(config, "d_S")),
                         d_I=float(_require(config, "d_I")))
    return Instance(grid=grid, kernel=kernel, beta=beta, gamma=gamma,
                    lam=lam, params=params)


@dataclass
class RunReport:
    scenario: str
    config_echo: dict
    validation: dict
    outputs: dict
    status: str
    errors: list
    timing: dict
    tool_version: str = __version__

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def stable_dict(self) -> dict:
        outputs = {k: v for k, v in self.outputs.items() if not k.startswith("_")}
        return {
            "config": self.config_echo,
            "errors": list(self.errors),
            "outputs": outputs,
            "scenario": self.scenario,
            "status": self.status,
            "tool": "nonlocal-sis",
            "version": self.tool_version,
            "validation": self.validation,
        }

    def to_dict(self) -> dict:
        out = self.stable_dict()
        out["timing"] = self.timing
        return out


def _integrator_config(config: ExperimentConfig) -> IntegratorConfig:
    return IntegratorConfig(
        dt=float(_require(config, "integrator.dt")),
        t_end=float(_require(config, "integrator.t_end")),
        method=str(config.get("integrator.method", "rk4")),
        snapshot_stride=int(config.get("integrator.snapshot_stride", 1)),
        positivity_floor=float(config.get("integrator.positivity_floor", 0.0)),
    )


def run_scenario(config: ExperimentConfig) -> RunReport:
    """Execute a scenario; module errors land in the report, not a traceback."""
    started = time.perf_counter()
    outputs: dict = {}
    errors: list[str] = []
    validation: dict = {}
    try:
        if config.scenario == "verify":
            outputs = run_verify_suite(
                seed=config.seed,
                instances=int(config.get("verify.instances", 200)),
                n_max=int(config.get("verify.n_max", 64)),
            )
            if outputs["failed"] > 0:
                errors.append(f"{outputs['failed']} verify properties failed")
        else:
            inst = _build_instance(config)
            report = validate_instance(inst.grid, inst.kernel, inst.beta,
                                       inst.gamma, inst.lam, inst.params)
            validation = report.to_dict()
            if not report.passed:
                errors.append("validation failed: " + ", ".join(report.failures()))
            else:
                outputs = _run_instance_scenario(config, inst)
                if "threshold_error" in outputs:
                    errors.append(outputs["threshold_error"])
    except NonlocalSISError as exc:
        errors.append(f"{type(exc).__name__}: {exc}")
    status = "ok" if not errors else "error"
    timing = {"seconds": time.perf_counter() - started}
    echo = {k: config.entries[k] for k in sorted(config.entries)}
    return RunReport(scenario=config.scenario, config_echo=echo,
                     validation=validation, outputs=outputs, status=status,
                     errors=errors, timing=timing)


def _run_instance_scenario(config: ExperimentConfig, inst: Instance) -> dict:
    K = inst.dispersal
    if config.scenario == "spectral":
        report = compute_spectral_report(K, inst.params, inst.beta, inst.gamma)
        return {"spectral": report.to_dict()}

    if config.scenario == "equilibrium":
        dfe = solve_disease_free(K, inst.params.d_S, inst.lam)
        out = {"disease_free": dfe.to_dict()}
        growth = infection_growth_rate(K, inst.params.d_I, inst.gap)
        out["growth_rate"] = growth.value
        if growth.value > SIGN_DEADBAND:
            endemic = solve_endemic(K, inst.params, inst.beta, inst.gamma,
                                    dfe.field)
            out["endemic"] = endemic.to_dict()
        return out

    if config.scenario == "simulate":
        return _run_simulate(config, inst, K)

    if config.scenario == "threshold_sweep":
        return _run_sweep(config, inst, K)

    raise ConfigError(f"unhandled scenario {config.scenario!r}", key="scenario")


def _run_simulate(config: ExperimentConfig, inst: Instance, K) -> dict:
    icfg = _integrator_config(config)
    s0 = sample_field_values(_field_spec(config, "init.s", inst.grid.n), inst.grid)
    i0 = sample_field_values(_field_spec(config, "init.i", inst.grid.n), inst.grid)
    if np.any(s0 < 0) or np.any(i0 < 0):
        raise ConfigError("initial data must be nonnegative", key="init.s")
    if float(inst.grid.weights @ i0) <= 0:
        raise ConfigError("epidemic run needs positive initial infected mass",
                          key="init.i")

    dfe = solve_disease_free(K, inst.params.d_S, inst.lam)
    growth = infection_growth_rate(K, inst.params.d_I, inst.gap)
    if growth.value > SIGN_DEADBAND:
        endemic = solve_endemic(K, inst.params, inst.beta, inst.gamma, dfe.field)
        target_s, target_i = endemic.susceptible, endemic.infected
        regime = "persistence"
    else:
        target_s, target_i = dfe.field, np.zeros(inst.grid.n)
        regime = "extinction"

    traj = integrate(State(S=s0, I=i0), icfg, inst.params, K, inst.beta,
                     inst.gamma, inst.lam, s_target=target_s)
    tol = float(config.get("simulate.tol", 1e-4))
    entered = check_convergence(traj, s_target=target_s, i_target=target_i,
                                tol=tol)
    return {
        "clip_events": traj.clip_events,
        "convergence": {
            "entered_at": entered,
            "regime": regime,
            "target_I": [float(v) for v in target_i],
            "target_S": [float(v) for v in target_s],
            "tol": tol,
        },
        "growth_rate": growth.value,
        "nodes": [float(x) for x in inst.grid.nodes],
        "trajectory": {"dt": icfg.dt, "method": icfg.method,
                       "snapshots": len(traj.times), "t_end": icfg.t_end},
        "_trajectory_obj": (traj, inst.grid.nodes),
    }


def _run_sweep(config: ExperimentConfig, inst: Instance, K) -> dict:
    lo = float(config.get("sweep.lo"))
    hi = float(config.get("sweep.hi"))
    count = int(config.get("sweep.count"))
    spacing = str(config.get("sweep.spacing", "log"))
    if not (0 < lo < hi) or count < 2:
        raise ConfigError("sweep needs 0 < lo < hi and count >= 2", key="sweep.lo")
    if spacing == "log":
        rates = np.geomspace(lo, hi, count)
    elif spacing == "linear":
        rates = np.linspace(lo, hi, count)
    else:
        raise ConfigError(f"unknown sweep spacing {spacing!r}", key="sweep.spacing")

    def point(d):
        mu = infection_growth_rate(K, d, inst.gap).value
        r0 = basic_reproduction_number(K, d, inst.beta, inst.gamma).value
        return {"d_I": float(d), "mu_p": mu, "r0": r0}

    rows = _map_ordered(point, list(rates))
    out = {"rows": rows}
    try:
        threshold = critical_dispersal_rate(K, inst.beta, inst.gamma, (lo, hi))
        out["threshold"] = threshold.to_dict()
    except InvalidBracketError as exc:
        out["threshold"] = None
        out["threshold_error"] = f"InvalidBracketError: {exc}"
    return out


def _map_ordered(fn, items):
    """Map preserving input order, optionally on a bounded thread pool."""
    workers = worker_count()
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Random instances and the verify property suite
# ---------------------------------------------------------------------------

def _random_kernel(rng: np.random.Generator, length: float, n: int) -> KernelSpec:
    """Kernel whose width is aligned with the cell size.

    Alignment (half-integer cells for the tophat, whole cells for the
    triangle, wide smooth gaussians) keeps the midpoint quadrature of the
    unit-mass kernel from overshooting 1 at any node.
    """
    delta = length / n
    family = str(rng.choice(["tophat", "triangle", "truncated_gaussian"]))
    if family == "tophat":
        k = int(rng.integers(2, n + 1))
        return KernelSpec.tophat((k + 0.5) * delta)
    if family == "triangle":
        k = int(rng.integers(2, n + 1))
        return KernelSpec.triangle(k * delta)
    sigma = rng.uniform(0.5, 1.5) * length
    return KernelSpec.truncated_gaussian(sigma, rng.uniform(2.0, 4.0) * sigma)


def _bumpy_field(rng: np.random.Generator, grid: Grid, base: float,
                 amp_cap: float) -> np.ndarray:
    spec = FieldSpec.bump(base, rng.uniform(-amp_cap, amp_cap),
                          rng.uniform(grid.domain.left, grid.domain.right),
                          rng.uniform(0.1, 0.5) * grid.domain.length)
    return sample_field_values(spec, grid)


def random_instance(rng: np.random.Generator, n_max: int = 64,
                    risk: str = "mixed",
                    dispersal_ratio: float = 1.0) -> Instance:
    """Draw a reproducible instance from the documented distribution.

    ``risk`` shapes the transmission/recovery gap: ``high`` guarantees a
    node with a comfortably positive gap, ``low`` makes the gap negative
    everywhere, ``mixed`` leaves it free.  ``dispersal_ratio`` sets
    ``d_S = ratio * d_I``.
    """
    n = int(rng.integers(8, max(8, n_max) + 1))
    length = rng.uniform(0.5, 2.0)
    grid = build_grid(n, DomainSpec(0.0, length))
    kernel = _random_kernel(rng, length, n)

    gamma_v = _bumpy_field(rng, grid, base=rng.uniform(0.4, 1.5), amp_cap=0.1)
    if risk == "high":
        offset = rng.uniform(0.4, 1.0)
        beta_v = gamma_v + offset + _bumpy_field(rng, grid, 0.0, 0.1)
    elif risk == "low":
        beta_v = gamma_v * rng.uniform(0.4, 0.85)
    else:
        beta_v = _bumpy_field(rng, grid, base=rng.uniform(0.4, 1.5), amp_cap=0.1)
    lam_v = _bumpy_field(rng, grid, base=rng.uniform(0.5, 2.0), amp_cap=0.2)

    d_i = float(np.exp(rng.uniform(np.log(0.05), np.log(20.0))))
    params = ModelParams(d_S=dispersal_ratio * d_i, d_I=d_i)
    return Instance(grid=grid, kernel=kernel,
                    beta=CoefficientField(beta_v, "beta"),
                    gamma=CoefficientField(gamma_v, "gamma"),
                    lam=CoefficientField(lam_v, "lambda"),
                    params=params)


def _verify_one(task) -> dict:
    seed, index, n_max = task
    rng = np.random.default_rng([seed, index])
    inst = random_instance(rng, n_max=n_max)
    K = inst.dispersal
    d = inst.params.d_I
    checks = {}

    mu = infection_growth_rate(K, d, inst.gap).value
    r0 = basic_reproduction_number(K, d, inst.beta, inst.gamma).value
    checks["sign_consistency"] = bool(abs(mu) <= SIGN_DEADBAND
                                      or np.sign(r0 - 1.0) == np.sign(mu))

    scaled = d * infection_growth_rate(K, 1.0, inst.gap / d).value
    checks["scaling_identity"] = bool(abs(mu - scaled) <= 1e-10)

    grid_d = np.geomspace(0.05, 20.0, 6)
    mus = [infection_growth_rate(K, dd, inst.gap).value for dd in grid_d]
    checks["monotone_in_rate"] = all(mus[k + 1] <= mus[k] + 1e-12
                                     for k in range(len(mus) - 1))

    delta = 0.1
    lip = abs(infection_growth_rate(K, d + delta, inst.gap).value - mu)
    checks["lipschitz_bound"] = bool(lip <= 2.0 * delta + 1e-12)

    bound = infection_growth_rate(K, d, -inst.gamma.values).value
    checks["spectral_bound_negative"] = bool(bound < 0.0)
    checks["r0_positive"] = bool(r0 > 0.0)

    return {"index": index, "checks": checks,
            "passed": all(checks.values()),
            "mu_p": mu, "r0": r0}


def run_verify_suite(seed: int, instances: int = 200, n_max: int = 64) -> dict:
    """Seeded random-instance property suite; returns stable pass counts."""
    results = _map_ordered(_verify_one,
                           [(seed, k, n_max) for k in range(instances)])
    failed = [r for r in results if not r["passed"]]
    by_check: dict = {}
    for r in results:
        for name, ok in r["checks"].items():
            by_check[name] = by_check.get(name, 0) + (1 if ok else 0)
    return {
        "by_check": {k: by_check[k] for k in sorted(by_check)},
        "failed": len(failed),
        "failed_indices": [r["index"] for r in failed],
        "instances": instances,
        "passed": len(results) - len(failed),
        "seed": seed,
    }


# ---------------------------------------------------------------------------
# Report writing
# ---------------------------------------------------------------------------

def write_report(report: RunReport, out_dir) -> list[Path]:
    """Write report.json plus scenario CSVs; returns the paths written.

    JSON keys are sorted, so everything except the ``timing`` object is
    byte-stable across reruns of the same (config, seed).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    report_path = out_dir / "report.json"
    report_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True)
                           + "\n", encoding="utf-8")
    paths.append(report_path)

    packed = report.outputs.get("_trajectory_obj")
    if report.scenario == "simulate" and packed is not None:
        traj, nodes = packed
        traj_path = out_dir / "trajectory.csv"
        write_trajectory_csv(traj, nodes, traj_path)
        paths.append(traj_path)
        norms_path = out_dir / "norms.csv"
        write_norms_csv(traj, norms_path)
        paths.append(norms_path)

    if report.scenario == "threshold_sweep" and "rows" in report.outputs:
        sweep_path = out_dir / "sweep.csv"
        with open(sweep_path, "w", encoding="utf-8", newline="\n") as f:
            f.write("d_I,mu_p,r0\n")
            for row in report.outputs["rows"]:
                f.write(f"{row['d_I']!r},{row['mu_p']!r},{row['r0']!r}\n")
        paths.append(sweep_path)

    return paths
