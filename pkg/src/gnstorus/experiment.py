"""Run configuration, the staged pipeline and report emission.

Configuration files are flat ``key = value`` text with dotted section names,
for example ``construction.A = 5`` or ``grid.n = 128``.  Lines starting with
``#`` are comments.  Overrides use the same syntax.
"""

import csv
import json
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .construction import (
    ConstructionParams,
    DirectionSet,
    assemble_initial_data,
    build_ladder,
    cancellation_defect,
    defining_identity_defect,
    principal_flow_eval,
    reconstruction_residual,
    residual_assemble,
    solve_gamma,
    y_alpha_norm,
)
from .errors import ConfigurationError, GNSError
from .evolution import (
    MildSolverConfig,
    branch_agreement,
    corrector_grid,
    perturbation_fixed_point,
    separation_report,
)
from .io import config_hash, read_field, write_field
from .littlewood_paley import BesovSpec, besov_norm, chi, phi, reconstruct
from .norms import sup_norm
from .spectral import (
    GridSpec,
    antidivergence_R,
    divergence,
    gradient,
    hermitian_defect,
    laplacian,
    leray,
    pointwise_product,
    random_field,
    sym_gradient_S,
)

STAGES = ("build", "flows", "residual", "perturb", "separate", "verify")
DEPENDS = {
    "build": (),
    "flows": ("build",),
    "residual": ("flows",),
    "perturb": ("residual",),
    "separate": ("perturb",),
    "verify": (),
}

DEFAULTS = {
    "grid.n": 128,
    "grid.lattice": "auto",
    "grid.dealias_fraction": 2.0 / 3.0,
    "time.t_min_factor": 1e-4,
    "time.steps_per_decade": 60,
    "solver.picard_max": 40,
    "solver.picard_tol": 1e-10,
    "solver.mode": "picard",
    "ladder.strict": False,
    "probes.enabled": True,
    "outputs.dir": "runs/default",
    "outputs.write_fields": True,
    "seed": 0,
}


def _parse_value(text):
    t = text.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(t)
        except ValueError:
            pass
    return t


def parse_pairs(lines, source="config"):
    """Dict of dotted keys to parsed values from ``key = value`` lines."""
    out = {}
    for number, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source} line {number}: expected key = value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigurationError(f"{source} line {number}: empty key")
        out[key] = _parse_value(value)
    return out


@dataclass(frozen=True)
class RunConfig:
    construction: ConstructionParams
    grid: GridSpec
    t_min_factor: float
    steps_per_decade: int
    solver: MildSolverConfig
    outputs: Path
    seed: int = 0
    strict: bool = False
    probes: bool = True
    write_fields: bool = True
    values: dict = field(default_factory=dict, compare=False)

    @property
    def canonical_text(self):
        """Sorted key = value lines of every resolved setting."""
        return "\n".join(f"{k} = {self.values[k]!r}" for k in sorted(self.values) if k != "outputs.dir") + "\n"

    @property
    def hash(self):
        return config_hash(self.canonical_text)

    def time_grid(self):
        return corrector_grid(self.construction, self.t_min_factor, self.steps_per_decade)


def build_config(pairs=None, overrides=()):
    """RunConfig from parsed pairs plus ``key=value`` override strings."""
    values = dict(DEFAULTS)
    values.update({f"construction.{k}": v for k, v in _construction_defaults().items()})
    values.update(pairs or {})
    values.update(parse_pairs(overrides, "override"))
    known = set(DEFAULTS) | {f"construction.{k}" for k in ConstructionParams.field_names()}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {', '.join(unknown)}")
    cp = ConstructionParams(**{k: values[f"construction.{k}"] for k in ConstructionParams.field_names()})
    lattice = values["grid.lattice"]
    if lattice == "auto":
        lattice = cp.N(0)
    values["grid.lattice"] = lattice
    try:
        grid = GridSpec(int(values["grid.n"]), float(values["grid.dealias_fraction"]), int(lattice))
    except GNSError as exc:
        raise ConfigurationError(f"grid: {exc}") from exc
    solver = MildSolverConfig(
        mode="stepper" if values["solver.mode"] == "stepper" else "picard",
        picard_max=int(values["solver.picard_max"]),
        picard_tol=float(values["solver.picard_tol"]),
    )
    return RunConfig(
        construction=cp,
        grid=grid,
        t_min_factor=float(values["time.t_min_factor"]),
        steps_per_decade=int(values["time.steps_per_decade"]),
        solver=solver,
        outputs=Path(str(values["outputs.dir"])),
        seed=int(values["seed"]),
        strict=bool(values["ladder.strict"]),
        probes=bool(values["probes.enabled"]),
        write_fields=bool(values["outputs.write_fields"]),
        values=values,
    )


def _construction_defaults():
    return {k: v for k, v in ConstructionParams().as_dict().items() if k != "tau"}


def load_config(path=None, overrides=()):
    pairs = parse_pairs(Path(path).read_text().splitlines(), str(path)) if path else {}
    return build_config(pairs, overrides)


# ------------------------------------------------------------------ report


@dataclass
class RunReport:
    """Measured constants per stage, tables, timings and provenance.

    Every entry of ``constants`` is {"value": ..., "measures": text}.
    """

    constants: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    stages: list = field(default_factory=list)

    def record(self, stage, name, value, measures):
        self.constants.setdefault(stage, {})[name] = {"value": _plain(value), "measures": measures}

    def check(self, name, value, tolerance, measures, larger_is_better=False):
        ok = value >= tolerance if larger_is_better else value <= tolerance
        self.checks[name] = {"value": _plain(value), "tolerance": tolerance, "passed": bool(ok), "measures": measures}

    def payload(self):
        """Everything except wall-clock timings; bit-identical across identical runs."""
        return {"constants": self.constants, "checks": self.checks, "tables": self.tables, "provenance": self.provenance, "stages": self.stages}

    def as_dict(self):
        d = self.payload()
        d["timings"] = self.timings
        return d

    @property
    def all_checks_pass(self):
        return all(c["passed"] for c in self.checks.values())


def _plain(x):
    """JSON-ready copy with numpy scalars turned into Python numbers."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return repr(x)
    return x


# ---------------------------------------------------------------- pipeline


@dataclass
class PipelineState:
    config: RunConfig
    ladder: object = None
    bundle: object = None
    residuals: dict = field(default_factory=dict)
    correctors: dict = field(default_factory=dict)


def stage_order(stage):
    """Stages to execute for ``stage``, dependencies first."""
    if stage == "all":
        return list(STAGES)
    if stage not in STAGES:
        raise ConfigurationError(f"unknown stage {stage!r}; choose from {', '.join(STAGES + ('all',))}")
    order = []

    def visit(s):
        for d in DEPENDS[s]:
            visit(d)
        if s not in order:
            order.append(s)

    visit(stage)
    return order


def run_pipeline(config, stage="all"):
    """Execute ``stage`` and its dependencies; persist fields and the report.

    A toolkit error raised by a stage gets a ``stage`` attribute naming it.
    """
    report = RunReport()
    report.provenance = {"config_hash": config.hash, "code_version": __version__, "config": _plain({k: v for k, v in config.values.items() if k != "outputs.dir"})}
    state = PipelineState(config)
    out = config.outputs
    out.mkdir(parents=True, exist_ok=True)
    for name in stage_order(stage):
        start = time.perf_counter()
        try:
            STAGE_FUNCTIONS[name](state, report)
        except GNSError as exc:
            exc.stage = name
            raise
        report.timings[name] = time.perf_counter() - start
        report.stages.append(name)
    emit_report(report, "json", out)
    return report


def _write(state, name, f, **meta):
    cfg = state.config
    if not cfg.write_fields:
        return
    d = cfg.outputs / "fields"
    d.mkdir(parents=True, exist_ok=True)
    write_field(d / f"{name}.gns", f, {"config_hash": cfg.hash, "name": name, **meta})


def _stage_build(state, report):
    cfg = state.config
    p, g = cfg.construction, cfg.grid
    ladder = build_ladder(p, g, strict=cfg.strict)
    state.ladder = ladder
    r = lambda *a: report.record("build", *a)
    r("stress_bounds", list(ladder.bounds), "|S(Phi_k)/(N_{k+1}^(2 alpha) eps^2)|_inf per level; the ladder needs <= 1/7")
    r("relaxations", ladder.relaxations, "factor applied to the stress ratio before the Gamma solve (1 = exact ladder)")
    r("exact", ladder.exact, "no level needed relaxation")
    if len(ladder.levels) > 1:
        lev = ladder.levels[1]
        grad = max(sup_norm(gradient(a)) for a in lev.amplitudes)
        r("amplitude_gradient_over_N0", grad / p.N(0), "max |grad a_{xi,1}|_inf / N_0")
        r("min_gamma_squared", lev.info["min_gamma_squared"], "smallest Gamma_xi^2 over the grid at level 1")
    for k, lev in enumerate(ladder.levels):
        _write(state, f"phi_{k}", lev.phi0, level=k)


def _stage_flows(state, report):
    cfg = state.config
    p = cfg.construction
    bundle = assemble_initial_data(state.ladder)
    state.bundle = bundle
    datum = bundle.datum
    r = lambda *a: report.record("flows", *a)
    spec = BesovSpec(-p.beta - p.alpha)
    r("datum_besov_over_eps", besov_norm(datum, spec) / p.epsilon, "|V^0|_{B^{-beta-alpha}_{inf,inf}} / eps")
    r("datum_divergence", sup_norm(divergence(datum)) / max(sup_norm(datum), 1e-300), "|div V^0|_inf / |V^0|_inf")
    head_exact = p.epsilon * (2 * np.pi) ** 2 * p.N(0) ** (p.beta + p.alpha) * np.exp(-((2 * np.pi) ** (2 * p.beta)))
    r("head_term", sup_norm(bundle.heat_level(0, p.t0)), "|v_0(t0)|_inf")
    r("head_term_exact", head_exact, "eps (2 pi)^2 N_0^(beta+alpha) e^{-(2 pi)^(2 beta)}")
    for k in bundle.levels:
        if k == 0:
            continue
        rel = sup_norm(bundle.error1[k] + bundle.error2[k] + bundle.principal0[k] - bundle.v0[k]) / sup_norm(bundle.v0[k])
        r(f"decomposition_defect_{k}", rel, "|v^p + v^{e,1} + v^{e,2} - v_k^0| / |v_k^0|")
        r(f"error_fraction_{k}", (sup_norm(bundle.error1[k]) + sup_norm(bundle.error2[k])) / sup_norm(bundle.v0[k]), "error parts of v_k^0 relative to v_k^0")
    times = np.geomspace(p.t0 * 1e-4, 1.0, 25)
    base = [sup_norm(v) for v in bundle.v0]
    rows = []
    for t in times:
        row = {"t": float(t)}
        for k in bundle.levels:
            row[f"v{k}"] = sup_norm(bundle.heat_level(k, t))
            row[f"v{k}_exact"] = base[k] * float(np.exp(-p.lam(k) * t))
            row[f"vbar{k}"] = sup_norm(bundle.cascade_level(k, t))
        for br in (1, 2):
            row[f"branch{br}"] = sup_norm(principal_flow_eval(bundle, br, t))
        rows.append(row)
    report.tables["decay"] = rows
    report.tables["norm_vs_k"] = [
        {"k": k, "N_k": p.N(k), "rate": p.lam(k), "v0_sup": base[k], "stress_bound": state.ladder.bounds[k], "relaxation": state.ladder.relaxations[k]}
        for k in bundle.levels
    ]
    _write(state, "datum", datum)


def _stage_residual(state, report):
    cfg = state.config
    p = cfg.construction
    bundle = state.bundle
    r = lambda *a: report.record("residual", *a)
    if len(state.ladder.levels) > 1:
        r("cancellation_defect", cancellation_defect(state.ladder, 0), "relative size of div(d_t Rbar_0 + mean stress of level 1)")
    times = cfg.time_grid().samples
    sample = times[:: max(1, len(times) // 40)]
    profile = []
    for br in (1, 2):
        res = residual_assemble(bundle, br)
        state.residuals[br] = res
        defects = [defining_identity_defect(res, t) for t in np.geomspace(p.t0 * 1e-4, p.t0, 5)]
        r(f"identity_defect_{br}", max(defects), "relative defect of P div F = -(d_t v + (-Lap)^beta v + P div(v(x)v))")
        snaps = [(t, res.total(t)) for t in sample]
        r(f"y_alpha_{br}", y_alpha_norm(snaps, p), "Y^alpha norm of F on the corrector grid")
        r(f"aliasing_{br}", bool(res.meta.get("aliasing")), "any product in F exceeded the dealiasing budget")
        for t, F in snaps:
            profile.append({"branch": br, "t": float(t), "F_sup": sup_norm(F)})
        _write(state, f"residual_{br}_t0", res.total(p.t0), branch=br, t=p.t0)
    report.tables["residual_profile"] = profile


def _stage_perturb(state, report):
    cfg = state.config
    p = cfg.construction
    grid_t = cfg.time_grid()
    r = lambda *a: report.record("perturb", *a)
    r("t_min", float(grid_t.t_min), "lower limit of the Duhamel integral")
    r("eta", max(report.constants["residual"][f"y_alpha_{br}"]["value"] for br in (1, 2)), "residual smallness knob: the larger Y^alpha norm of the two branches")
    for br in (1, 2):
        s = perturbation_fixed_point(state.residuals[br], state.bundle, br, grid_t, cfg.solver.picard_max, cfg.solver.picard_tol, evaluate_until=p.t0)
        state.correctors[br] = s
        factors = s.contraction_factors
        r(f"contraction_factors_{br}", factors, "ratio of successive Picard steps in X^alpha")
        r(f"final_contraction_{br}", factors[-1] if factors else 0.0, "last Picard contraction factor")
        r(f"converged_{br}", s.converged, "Picard reached tolerance")
        r(f"x_alpha_{br}", s.x_alpha_norm, "X^alpha norm of the corrector")
        r(f"fixed_point_residual_{br}", s.fixed_point_residual, "|T(omega) - omega|_{X^alpha}")
        r(f"truncation_{br}", s.truncation_estimate, "bound on the dropped integral over (0, t_min)")
        r(f"pde_residual_{br}", s.pde_residual["max_relative"], "max relative PDE residual of v + omega at midpoints up to t0")
        r(f"envelope_{br}", s.envelope, "fitted exponent of |omega(t)|_{B^{-1+rho}} near t_min and the predicted one")
        _write(state, f"omega_{br}_t0", s.at(p.t0), branch=br, t=p.t0)
    report.tables["corrector"] = [
        {"branch": br, "t": float(t), "omega_sup": sup_norm(w)} for br in (1, 2) for t, w in zip(state.correctors[br].times, state.correctors[br].omega)
    ]
    manifest = [{"branch": br, "t": p.t0, "file": f"fields/omega_{br}_t0.gns"} for br in (1, 2)]
    (cfg.outputs / "trajectory_manifest.json").write_text(json.dumps(manifest, indent=1))


def _stage_separate(state, report):
    cfg = state.config
    p = cfg.construction
    led = separation_report(state.bundle, state.correctors)
    r = lambda *a: report.record("separate", *a)
    for key, value in led.items():
        r(key, value, "separation ledger")
    r("separation_over_head", led["separation"] / led["head_exact"], "separation relative to the exact head term")
    debug = separation_report(state.bundle, {1: state.correctors[1], 2: state.correctors[1]})
    r("debug_separation", debug["separation"], "separation with branch 1 passed twice; must be zero")
    t_mins = p.t0 * 10.0 ** -np.arange(2, 14, 2)
    agree = branch_agreement(state.bundle, t_mins)
    r("branch_agreement", [[float(t), v] for t, v in agree], "|v1(t_min) - v2(t_min)| in B^{-beta-alpha-eps'} for decreasing t_min")
    report.tables["ledger"] = [{"term": k, "value": v} for k, v in led.items()]


def _stage_verify(state, report):
    """Fast invariant suite over every module plus the measured-constant probes."""
    cfg = state.config
    rng = np.random.default_rng(cfg.seed)
    g = GridSpec(64)
    worst = {"div_S": 0.0, "div_R": 0.0, "leray_idempotence": 0.0, "lp_reconstruction": 0.0}
    for _ in range(20):
        f = leray(random_field(g, "vector", rng))
        worst["div_S"] = max(worst["div_S"], sup_norm(divergence(sym_gradient_S(f)) - laplacian(f)) / sup_norm(laplacian(f)))
        v = random_field(g, "vector", rng)
        worst["div_R"] = max(worst["div_R"], sup_norm(divergence(antidivergence_R(v)) - v) / sup_norm(v))
        worst["leray_idempotence"] = max(worst["leray_idempotence"], sup_norm(leray(leray(v)) - leray(v)) / sup_norm(v))
        s = random_field(g, "scalar", rng)
        worst["lp_reconstruction"] = max(worst["lp_reconstruction"], sup_norm(reconstruct(s) - s) / sup_norm(s))
    report.check("div_S_equals_laplacian", worst["div_S"], 1e-10, "div S(f) = Lap f for divergence-free f")
    report.check("div_R_identity", worst["div_R"], 1e-10, "div R f = f - mean f")
    report.check("leray_idempotence", worst["leray_idempotence"], 1e-12, "P(Pf) = Pf")
    report.check("lp_reconstruction", worst["lp_reconstruction"], 1e-8, "sum of dyadic blocks reproduces the field")
    x = np.linspace(0.0, 64.0, 20001)
    part = chi(x) + sum(phi(x / 2.0**j) for j in range(8))
    report.check("cutoff_partition", float(np.abs(part - 1.0).max()), 1e-10, "chi + sum_j phi(2^-j .) = 1")
    d = DirectionSet.default()
    geo = 0.0
    for _ in range(100):
        m = rng.standard_normal(3)
        m *= rng.uniform(0, 1) / 7.0 / np.linalg.norm([[m[0], m[1]], [m[1], m[2]]], 2)
        S = np.array([[1 + m[0], m[1]], [m[1], 1 + m[2]]])
        geo = max(geo, reconstruction_residual(S, solve_gamma(S, d)))
    report.check("geometric_reconstruction", geo, 1e-12, "sum Gamma_xi^2 xibar(x)xibar = S on the 1/7 ball")
    a = random_field(g, "scalar", rng)
    prod = pointwise_product(a, a)
    report.check("product_real", hermitian_defect(prod), 1e-12, "products of real fields keep Hermitian symmetric coefficients")
    tmp = cfg.outputs / "verify_roundtrip.gns"
    f = random_field(GridSpec(16, lattice=5), "vector", rng)
    write_field(tmp, f, {"config_hash": cfg.hash})
    back = read_field(tmp)
    report.check("gns1_roundtrip", float(np.abs(back.coeffs - f.coeffs).max()), 0.0, "write then read is bit identical")
    if cfg.probes:
        from .probes import antidivergence_ratio, commutator_ratio, heat_smoothing_ratio, semigroup_ratio

        beta = cfg.construction.beta
        probes = [antidivergence_ratio(seed=cfg.seed), commutator_ratio(seed=cfg.seed, beta=beta), heat_smoothing_ratio(seed=cfg.seed, beta=beta)]
        if state.bundle is not None:
            probes.append(semigroup_ratio(state.bundle, 2, seed=cfg.seed))
        for pr in probes:
            report.record("probes", pr["name"], {k: pr[k] for k in ("configs", "max_ratio", "min_ratio", "finite")}, pr["measures"])
            report.check(f"probe_{pr['name']}_finite", float(pr["configs"]) if pr["finite"] else 0.0, 20, f"{pr['measures']}: finite over at least 20 configurations", larger_is_better=True)
            report.tables[f"probe_{pr['name']}"] = pr["samples"]


STAGE_FUNCTIONS = {
    "build": _stage_build,
    "flows": _stage_flows,
    "residual": _stage_residual,
    "perturb": _stage_perturb,
    "separate": _stage_separate,
    "verify": _stage_verify,
}


# ------------------------------------------------------------------ output


def _write_csv(path, rows):
    keys = []
    for row in rows:
        for k in row:
            if k not in keys:
                keys.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for row in rows:
            w.writerow({k: _plain(v) for k, v in row.items()})


def emit_report(report, fmt, out_dir):
    """Write the report as ``json``, ``csv_tables`` or ``plot_data``; returns the paths written."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            path = out / "report.json"
            path.write_text(json.dumps(_plain(report.as_dict()), sort_keys=True, indent=1))
            _sidecar(path, report)
            return [path]
        if fmt == "csv_tables":
            paths = []
            for name in ("decay", "norm_vs_k", "ledger"):
                path = out / f"{name}.csv"
                _write_csv(path, report.tables.get(name, []))
                _sidecar(path, report)
                paths.append(path)
            return paths
        if fmt == "plot_data":
            path = out / "plot_data.csv"
            rows = [{k: v for k, v in row.items() if not k.endswith("_exact")} for row in report.tables.get("decay", [])]
            _write_csv(path, rows)
            _sidecar(path, report)
            return [path]
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc}") from exc
    raise ConfigurationError(f"unknown report format {fmt!r}")


def _sidecar(path, report):
    Path(str(path) + ".meta.json").write_text(json.dumps({"config_hash": report.provenance.get("config_hash"), "code_version": __version__}, sort_keys=True))


def load_report(path):
    d = json.loads(Path(path).read_text())
    rep = RunReport()
    for f in fields(RunReport):
        if f.name in d:
            setattr(rep, f.name, d[f.name])
    return rep


def merge_reports(reports, labels, out_path):
    """One CSV row per label with the Y^alpha norms and headline constants of each run."""
    rows = []
    for label, rep in zip(labels, reports):
        c = rep.constants
        row = {"run": label, "config_hash": rep.provenance.get("config_hash")}
        for br in (1, 2):
            row[f"y_alpha_{br}"] = c.get("residual", {}).get(f"y_alpha_{br}", {}).get("value")
        row["separation"] = c.get("separate", {}).get("separation", {}).get("value")
        row["A"] = rep.provenance.get("config", {}).get("construction.A")
        rows.append(row)
    _write_csv(out_path, rows)
    return out_path
