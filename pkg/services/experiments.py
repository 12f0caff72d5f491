"""Named experiments: parameter grids over the engines, fits and theory columns.

Grid points run concurrently; rows are always written in grid order.
"""

import logging
import math
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from config import ED_MAX_SITES_FULL, LOG_LAW_MIN_SIZE, MI_FIT_MAX_RATIO, ORACLE_TOL
from engines import ed, gaussian, vqa
from errors import ConfigError, DomainError, LabError
from lattice import protocols, theory
from lattice.specs import MeasurementKind, MeasurementSpec, ModelSpec, ProtocolSpec, Region
from services import analysis, artifacts, cache
from services.artifacts import PlotHint, Table

logger = logging.getLogger(__name__)


class Experiment(StrEnum):
    CEFF_SCAN = "ceff_scan"
    EE_SCAN = "ee_scan"
    MUTUAL_INFO = "mutual_info"
    COLLAPSE = "collapse"
    VQA_RUN = "vqa_run"
    PROTOCOL_PROB = "protocol_prob"
    ORACLE_CHECK = "oracle_check"


class Engine(StrEnum):
    GAUSSIAN = "gaussian"
    ED = "ed"
    VQA = "vqa"


DEFAULT_ENGINE = {
    Experiment.CEFF_SCAN: Engine.GAUSSIAN,
    Experiment.EE_SCAN: Engine.ED,
    Experiment.MUTUAL_INFO: Engine.GAUSSIAN,
    Experiment.COLLAPSE: Engine.ED,
    Experiment.VQA_RUN: Engine.VQA,
    Experiment.PROTOCOL_PROB: Engine.GAUSSIAN,
    Experiment.ORACLE_CHECK: Engine.ED,
}

# grids each experiment needs, with minimum lengths
REQUIRED_GRIDS = {
    Experiment.CEFF_SCAN: {"L": 3, "W": 1},
    Experiment.EE_SCAN: {"L": 1, "W": 1},
    Experiment.MUTUAL_INFO: {"L": 3, "W": 1},
    Experiment.COLLAPSE: {"L": 3, "W": 1, "delta": 2},
    Experiment.VQA_RUN: {"W": 1},
    Experiment.PROTOCOL_PROB: {"W": 1},
    Experiment.ORACLE_CHECK: {"L": 1, "W": 1},
}

CONFIG_KEYS = {"experiment", "engine", "model", "measurement", "grids", "output",
               "analysis", "vqa", "protocol"}
MODEL_KEYS = {"n_sites", "boundary", "delta", "hopping", "filling"}
MEASUREMENT_KEYS = {"kind", "pattern"}
GRID_KEYS = {"L", "W", "delta"}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Experiment
    engine: Engine
    model: ModelSpec
    measurement: MeasurementSpec
    sizes: tuple[int, ...] = ()
    strengths: tuple[float, ...] = ()
    deltas: tuple[float, ...] = ()
    output: str | None = None
    analysis: dict = field(default_factory=dict, compare=False)
    vqa: dict = field(default_factory=dict, compare=False)
    protocol: dict = field(default_factory=dict, compare=False)
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        """Parse and validate a flat JSON config; all problems are reported at once."""
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object", {"config": type(raw).__name__})
        details = {}

        unknown = sorted(set(raw) - CONFIG_KEYS)
        if unknown:
            details["unknown_keys"] = unknown
        try:
            experiment = Experiment(raw.get("experiment"))
        except ValueError:
            raise ConfigError("unknown experiment", {
                "experiment": raw.get("experiment"), "allowed": [e.value for e in Experiment]})
        try:
            engine = Engine(raw.get("engine", DEFAULT_ENGINE[experiment]))
        except ValueError:
            details["engine"] = f"unknown engine {raw.get('engine')!r}"
            engine = DEFAULT_ENGINE[experiment]

        grids = raw.get("grids", {})
        sizes, strengths, deltas = (), (), ()
        if not isinstance(grids, dict):
            details["grids"] = "grids must be an object of explicit lists"
            grids = {}
        for key in sorted(set(grids) - GRID_KEYS):
            details[f"grids.{key}"] = "unknown grid"
        try:
            sizes = tuple(_int_list(grids.get("L", [])))
            strengths = tuple(float(w) for w in grids.get("W", []))
            deltas = tuple(float(d) for d in grids.get("delta", []))
        except (TypeError, ValueError) as e:
            details["grids"] = f"grids must be explicit lists of numbers: {e}"
        for key, minimum in REQUIRED_GRIDS[experiment].items():
            length = len({"L": sizes, "W": strengths, "delta": deltas}[key])
            if length < minimum:
                details[f"grids.{key}"] = f"{experiment} needs at least {minimum} value(s), got {length}"
        if any(w < 0 for w in strengths):
            details["grids.W"] = "measurement strengths must be >= 0"

        model_raw = raw.get("model", {})
        model = None
        if not isinstance(model_raw, dict) or set(model_raw) - MODEL_KEYS:
            details["model"] = f"model accepts keys {sorted(MODEL_KEYS)}"
        else:
            n_sites = model_raw.get("n_sites", sizes[0] if sizes else 4)
            try:
                model = ModelSpec(
                    n_sites=int(n_sites),
                    boundary=model_raw.get("boundary", "open"),
                    delta=model_raw.get("delta", 0.0),
                    hopping=model_raw.get("hopping", 1.0),
                    filling=model_raw.get("filling", "1/2"),
                )
            except (LabError, ValueError) as e:
                details["model"] = str(e)
        deltas = deltas or ((model.delta,) if model is not None else (0.0,))

        meas_raw = raw.get("measurement", {})
        measurement = None
        if not isinstance(meas_raw, dict) or set(meas_raw) - MEASUREMENT_KEYS:
            details["measurement"] = f"measurement accepts keys {sorted(MEASUREMENT_KEYS)}"
        else:
            try:
                measurement = MeasurementSpec(
                    kind=meas_raw.get("kind", MeasurementKind.DENSITY_STAGGERED),
                    pattern=meas_raw.get("pattern"),
                )
            except (LabError, ValueError) as e:
                details["measurement"] = str(e)

        for name in ("analysis", "vqa", "protocol"):
            if not isinstance(raw.get(name, {}), dict):
                details[name] = f"{name} must be an object"

        if model is not None and measurement is not None:
            details.update(_compatibility(experiment, engine, model, measurement, sizes, deltas))
        if details:
            raise ConfigError("invalid experiment config", details)

        return cls(
            experiment=experiment,
            engine=engine,
            model=model,
            measurement=measurement,
            sizes=sizes,
            strengths=strengths,
            deltas=deltas,
            output=raw.get("output"),
            analysis=dict(raw.get("analysis", {})),
            vqa=dict(raw.get("vqa", {})),
            protocol=dict(raw.get("protocol", {})),
            raw=raw,
        )

    def model_at(self, n_sites: int | None = None, delta: float | None = None) -> ModelSpec:
        model = self.model if n_sites is None else self.model.with_size(n_sites)
        return model if delta is None else model.with_delta(delta)


def _int_list(values) -> list[int]:
    out = []
    for v in values:
        if float(v) != int(v):
            raise ValueError(f"{v} is not an integer")
        out.append(int(v))
    return out


def _compatibility(experiment, engine, model, measurement, sizes, deltas) -> dict:
    details = {}
    if engine == Engine.GAUSSIAN and any(d != 0.0 for d in deltas):
        details["engine"] = "delta != 0 needs engine 'ed' or 'vqa'; the Gaussian engine is free only"
    if engine in (Engine.ED, Engine.VQA):
        largest = max(sizes + (model.n_sites,))
        if largest > ED_MAX_SITES_FULL:
            details["grids.L"] = f"engine {engine} is limited to {ED_MAX_SITES_FULL} sites, got {largest}"
    if engine == Engine.VQA and not measurement.is_density:
        details["measurement"] = "variational runs need a density measurement"
    if experiment == Experiment.VQA_RUN and engine != Engine.VQA:
        details["engine"] = "vqa_run runs on engine 'vqa'"
    if experiment in (Experiment.PROTOCOL_PROB, Experiment.ORACLE_CHECK, Experiment.VQA_RUN):
        return details
    if experiment == Experiment.MUTUAL_INFO:
        if model.n_sites % 2 or any(l >= model.n_sites // 2 for l in sizes):
            details["grids.L"] = f"interval lengths must be < {model.n_sites // 2} on an even ring"
        sizes = (model.n_sites,)
    for n in sizes:
        try:
            model.with_size(n)
            measurement.check_size(n)
        except DomainError as e:
            details[f"grids.L[{n}]"] = str(e)
    return details


# --- grid runner ---

class Outcome(NamedTuple):
    value: object
    error: str


def run_grid(fn: Callable, points: list, workers: int, label: str,
             progress: bool = False) -> list[Outcome]:
    """Evaluate fn on every point; LabErrors are recorded, results keep the grid order."""
    total = len(points)
    results = [None] * total
    lock = threading.Lock()
    done = [0]
    errors = [0]

    def process(idx, point):
        try:
            outcome = Outcome(fn(point), "")
        except (LabError, np.linalg.LinAlgError) as e:
            outcome = Outcome(None, f"{type(e).__name__}: {e}")
            logger.warning("%s %s failed: %s", label, point, outcome.error)
        results[idx] = outcome
        with lock:
            done[0] += 1
            errors[0] += bool(outcome.error)
            if progress:
                pct = done[0] / total * 100
                sys.stdout.write(f"\r  [{done[0]}/{total}] ({pct:.0f}%) errors: {errors[0]}  {label:<20}")
                sys.stdout.flush()

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [pool.submit(process, i, p) for i, p in enumerate(points)]
        for future in as_completed(futures):
            future.result()
    if progress and total:
        sys.stdout.write("\n")
    return results


# --- engine plumbing ---

def _measured(cfg: ExperimentConfig, model: ModelSpec, meas: MeasurementSpec):
    """Post-selected state and its entropy function on the configured engine."""
    if cfg.engine == Engine.GAUSSIAN:
        state = gaussian.apply_measurement(cache.get_gaussian_ground_state(model), meas, model)
        return state, lambda region: gaussian.entanglement_entropy(state, region)
    state = ed.apply_measurement_ed(cache.get_ed_ground_state(model), meas, model)
    return state, lambda region: ed.ee_ed(state, region)


def _half_entropy(cfg: ExperimentConfig, n_sites: int, w: float, delta: float | None = None) -> float:
    model = cfg.model_at(n_sites, delta)
    _, entropy = _measured(cfg, model, cfg.measurement.with_strength(w))
    return entropy(Region.half(n_sites))


def _ceff_theory(meas: MeasurementSpec) -> float:
    strength = meas.ceff_strength()
    return math.nan if strength is None else theory.c_eff_theory(strength)


def _rel_dev(value: float, reference: float) -> float:
    if not reference or math.isnan(reference) or math.isnan(value):
        return math.nan
    return abs(value - reference) / abs(reference)


def _log_law_min_size(cfg: ExperimentConfig, w: float, sizes: list[int]):
    if "min_size" in cfg.analysis:
        return cfg.analysis["min_size"]
    if w > 0 and sum(1 for n in sizes if n >= LOG_LAW_MIN_SIZE) >= 3:
        return LOG_LAW_MIN_SIZE
    return None


def _series(table_sizes, outcomes) -> list[tuple[float, float]]:
    return [(n, o.value) for n, o in zip(table_sizes, outcomes) if not o.error]


# --- experiments ---

def ceff_scan(cfg: ExperimentConfig, workers: int, progress: bool) -> list[Table]:
    """Half-chain entropy vs L for every W, log-law fit and the closed-form c_eff."""
    points = [(w, n) for w in cfg.strengths for n in cfg.sizes]
    outcomes = run_grid(lambda p: _half_entropy(cfg, p[1], p[0]), points, workers,
                        "ceff_scan", progress)

    entropy = Table("entropy", ["W", "L", "S_half", "error"], {"L": "sites", "S_half": "nats"},
                    plot=PlotHint("L", ("S_half",), group="W", logx=True))
    for (w, n), o in zip(points, outcomes):
        entropy.append(W=w, L=n, S_half=o.value if not o.error else math.nan, error=o.error)

    main = Table("main", ["W", "a", "b", "c_eff_fit", "c_eff_theory", "rel_dev", "r_squared",
                          "min_size", "note", "error"],
                 {"a": "nats", "b": "nats", "min_size": "sites"},
                 plot=PlotHint("W", ("c_eff_fit", "c_eff_theory")))
    # open chains: S = (c/6) ln L
    slope_factor = 3.0 if cfg.model.is_closed else 6.0
    per_w = len(cfg.sizes)
    for i, w in enumerate(cfg.strengths):
        chunk = outcomes[i * per_w:(i + 1) * per_w]
        failed = [o.error for o in chunk if o.error]
        theory_value = _ceff_theory(cfg.measurement.with_strength(w))
        min_size = _log_law_min_size(cfg, w, list(cfg.sizes))
        try:
            fit = analysis.fit_log_law(_series(cfg.sizes, chunk), min_size=min_size)
        except LabError as e:
            main.append(W=w, c_eff_theory=theory_value, min_size=min_size,
                        note=f"{type(e).__name__}: {e}", error="; ".join(failed))
            continue
        c_eff = slope_factor * fit["b"]
        main.append(W=w, a=fit["a"], b=fit["b"], c_eff_fit=c_eff, c_eff_theory=theory_value,
                    rel_dev=_rel_dev(c_eff, theory_value), r_squared=fit.r_squared,
                    min_size=min_size, note="", error="; ".join(failed))
    return [main, entropy]


def ee_scan(cfg: ExperimentConfig, workers: int, progress: bool) -> list[Table]:
    """Half-chain entropy over (delta, W, L) with discrete log-slopes and stored exponents."""
    points = [(d, w, n) for d in cfg.deltas for w in cfg.strengths for n in cfg.sizes]
    outcomes = run_grid(lambda p: _half_entropy(cfg, p[2], p[1], p[0]), points, workers,
                        "ee_scan", progress)

    main = Table("main", ["delta", "W", "L", "S_half", "log_slope", "K", "theory_exponent", "error"],
                 {"L": "sites", "S_half": "nats", "log_slope": "nats"},
                 plot=PlotHint("L", ("S_half",), group="delta", logx=True))
    fits = Table("fits", ["delta", "W", "log_b", "log_r_squared", "power_c", "power_r_squared",
                          "theory_exponent", "note"])
    per_series = len(cfg.sizes)
    for start in range(0, len(points), per_series):
        chunk = list(zip(points[start:start + per_series], outcomes[start:start + per_series]))
        delta, w = chunk[0][0][:2]
        k, exponent = _luttinger_columns(delta)
        good = [(p[2], o.value) for p, o in chunk if not o.error]
        slopes = {}
        if len(good) >= 2:
            values = analysis.discrete_log_slopes([n for n, _ in good], [s for _, s in good])
            slopes = {n: s for (n, _), s in zip(good[1:], values)}
        for (_, _, n), o in chunk:
            main.append(delta=delta, W=w, L=n, S_half=o.value if not o.error else math.nan,
                        log_slope=slopes.get(n, math.nan), K=k, theory_exponent=exponent,
                        error=o.error)
        notes, row = [], {"delta": delta, "W": w, "theory_exponent": exponent}
        try:
            fit = analysis.fit_log_law(good)
            row.update(log_b=fit["b"], log_r_squared=fit.r_squared)
        except LabError as e:
            notes.append(f"log_law: {e}")
        try:
            fit = analysis.fit_power_law(good)
            row.update(power_c=fit["c"], power_r_squared=fit.r_squared)
        except LabError as e:
            notes.append(f"power_law: {e}")
        fits.append(note="; ".join(notes), **row)
    return [main, fits]


def _luttinger_columns(delta: float) -> tuple[float, float]:
    try:
        k = theory.luttinger_k(delta)
    except DomainError:
        return math.nan, math.nan
    return k, theory.power_law_exponent(k) if k < 1.0 else math.nan


def mutual_info(cfg: ExperimentConfig, workers: int, progress: bool) -> list[Table]:
    """I_AB of two antipodal intervals of length L on the ring of L_tot sites."""
    total = cfg.model.n_sites
    half = total // 2

    def compute(w):
        _, entropy = _measured(cfg, cfg.model, cfg.measurement.with_strength(w))
        values = []
        for length in cfg.sizes:
            a = Region.interval(0, length)
            b = Region.interval(half, half + length)
            values.append(entropy(a) + entropy(b) - entropy(a.union(b)))
        return values

    outcomes = run_grid(compute, list(cfg.strengths), workers, "mutual_info", progress)
    main = Table("main", ["W", "L", "ratio", "I", "I_theory", "error"],
                 {"L": "sites", "I": "nats", "I_theory": "nats"},
                 plot=PlotHint("ratio", ("I", "I_theory"), group="W"))
    fits = Table("fits", ["W", "eta", "prefactor", "c_eff_fit", "c_eff_theory", "rel_dev",
                          "r_squared", "max_ratio", "note"])
    max_ratio = float(cfg.analysis.get("max_ratio", MI_FIT_MAX_RATIO))
    for w, o in zip(cfg.strengths, outcomes):
        c_theory = _ceff_theory(cfg.measurement.with_strength(w))
        values = o.value if not o.error else [math.nan] * len(cfg.sizes)
        for length, value in zip(cfg.sizes, values):
            ratio = length / total
            main.append(W=w, L=length, ratio=ratio, I=value,
                        I_theory=analysis.theory_mutual_information(c_theory, ratio)
                        if not math.isnan(c_theory) else math.nan,
                        error=o.error)
        data = [(length / total, v) for length, v in zip(cfg.sizes, values)
                if length / total <= max_ratio and not math.isnan(v)]
        try:
            fit = analysis.fit_mutual_information(data)
        except LabError as e:
            fits.append(W=w, c_eff_theory=c_theory, max_ratio=max_ratio, note=f"{type(e).__name__}: {e}")
            continue
        fits.append(W=w, eta=fit["eta"], prefactor=fit["prefactor"], c_eff_fit=fit["c_eff"],
                    c_eff_theory=c_theory, rel_dev=_rel_dev(fit["c_eff"], c_theory),
                    r_squared=fit.r_squared, max_ratio=max_ratio, note="")
    return [main, fits]


def collapse(cfg: ExperimentConfig, workers: int, progress: bool) -> list[Table]:
    """S_half over (W, L, delta) and the collapse residual of each scaling hypothesis."""
    points = [(w, n, d) for w in cfg.strengths for n in cfg.sizes for d in cfg.deltas]
    outcomes = run_grid(lambda p: _half_entropy(cfg, p[1], p[0], p[2]), points, workers,
                        "collapse", progress)
    delta_c = float(cfg.analysis.get("delta_c", 0.0))
    nus = [float(nu) for nu in cfg.analysis.get("nu", [1.0])]
    subtract = bool(cfg.analysis.get("subtract_critical", True))

    main = Table("main", ["W", "L", "delta", "S_half", "x_log", "error"],
                 {"L": "sites", "S_half": "nats"},
                 plot=PlotHint("x_log", ("S_half",), group="L"))
    fits = Table("fits", ["W", "scaling", "nu", "residual", "overlap_lo", "overlap_hi", "label", "note"])
    for w in cfg.strengths:
        curves = {}
        for (pw, n, d), o in zip(points, outcomes):
            if pw != w:
                continue
            main.append(W=w, L=n, delta=d, S_half=o.value if not o.error else math.nan,
                        x_log=float(analysis.scaled_abscissa(d, delta_c, n, analysis.Scaling.LOG_L)),
                        error=o.error)
            if not o.error:
                curves.setdefault(n, []).append((d, o.value))
        hypotheses = [(analysis.Scaling.LOG_L, math.nan)] + [(analysis.Scaling.POWER_L, nu) for nu in nus]
        for scaling, nu in hypotheses:
            try:
                result = analysis.data_collapse(curves, delta_c, scaling,
                                                nu=1.0 if math.isnan(nu) else nu,
                                                subtract_critical=subtract)
            except LabError as e:
                fits.append(W=w, scaling=scaling, nu=nu, note=f"{type(e).__name__}: {e}")
                continue
            fits.append(W=w, scaling=scaling, nu=nu, residual=result.residual,
                        overlap_lo=result.overlap[0], overlap_hi=result.overlap[1],
                        label=result.label, note="")
    return [main, fits]


def vqa_run(cfg: ExperimentConfig, workers: int, progress: bool) -> list[Table]:
    """Variational runs per (delta, W): EE profiles, chord fits and trajectories."""
    n = cfg.model.n_sites
    spec = vqa.AnsatzSpec(n_qubits=n, n_layers=int(cfg.vqa.get("n_layers", n)))
    options = {k: cfg.vqa[k] for k in ("step_size", "regularization", "integrator",
                                      "seed_trick", "oracle") if k in cfg.vqa}

    def compute(point):
        delta, w = point
        model = cfg.model_at(delta=delta)
        base = cache.get_ed_ground_state(model)
        meas = cfg.measurement.with_strength(w)
        result = vqa.run_vqa(model, meas, spec, vqa.VqaRunConfig(total_tau=w, **options), base)
        exact = ed.apply_measurement_ed(base, meas, model)
        return result, ed.entropy_profile_ed(result.state), ed.entropy_profile_ed(exact)

    points = [(d, w) for d in cfg.deltas for w in cfg.strengths]
    outcomes = run_grid(compute, points, workers, "vqa_run", progress)

    main = Table("main", ["delta", "W", "cut", "S_vqa", "S_exact", "error"],
                 {"cut": "sites", "S_vqa": "nats", "S_exact": "nats"},
                 plot=PlotHint("cut", ("S_vqa", "S_exact"), group="delta"))
    fits = Table("fits", ["delta", "W", "final_fidelity", "chord_c_eff", "chord_c2",
                          "chord_power_c", "note"])
    trajectory = vqa_trajectory_table()
    cuts = list(range(1, n))
    for (delta, w), o in zip(points, outcomes):
        if o.error:
            for cut in cuts:
                main.append(delta=delta, W=w, cut=cut, error=o.error)
            fits.append(delta=delta, W=w, note=o.error)
            continue
        result, s_vqa, s_exact = o.value
        for cut, sv, se in zip(cuts, s_vqa, s_exact):
            main.append(delta=delta, W=w, cut=cut, S_vqa=sv, S_exact=se, error="")
        for row in result.trajectory:
            trajectory.append(delta=delta, W=w, step=row.step, tau=row.tau, norm_C=row.norm_c,
                              min_eig_A=row.min_eig_a, fidelity_or_nan=row.fidelity)
        odd = analysis.odd_sizes_only(zip(cuts, s_vqa))
        row, notes = {"final_fidelity": result.trajectory[-1].fidelity}, []
        try:
            fit = analysis.fit_chord_log(odd, n)
            row.update(chord_c_eff=fit["c_eff"], chord_c2=fit["c2"])
        except LabError as e:
            notes.append(f"chord_log: {e}")
        try:
            row.update(chord_power_c=analysis.fit_chord_power_law(odd, n)["c"])
        except LabError as e:
            notes.append(f"chord_power_law: {e}")
        fits.append(delta=delta, W=w, note="; ".join(notes), **row)
    return [main, fits, trajectory]


def vqa_trajectory_table() -> Table:
    return Table("trajectory", ["delta", "W", "step", "tau", "norm_C", "min_eig_A", "fidelity_or_nan"],
                 plot=PlotHint("tau", ("fidelity_or_nan",), group="W"))


def protocol_prob(cfg: ExperimentConfig, workers: int, progress: bool) -> list[Table]:
    """Success probability of the configured protocol and of the named ones, per W."""
    proto = cfg.protocol
    filling = proto.get("filling", "1/4")
    pattern = tuple(proto.get("pattern", (2, 1, 0, 1)))
    length = int(proto.get("chain_length", 80))
    projectors = proto.get("projectors")

    def named(name, w):
        try:
            return protocols.success_probability(protocols.NAMED_PROTOCOLS[name](w, length)).probability
        except DomainError:
            return math.nan

    def compute(w):
        spec = ProtocolSpec(filling, tuple(w * p for p in pattern), length, projectors)
        prob = protocols.success_probability(spec)
        return prob, {name: named(name, w) for name in protocols.NAMED_PROTOCOLS}

    outcomes = run_grid(compute, list(cfg.strengths), workers, "protocol_prob", progress)
    columns = ["W", "P", "lower_bound"] + [f"P_{name}" for name in protocols.NAMED_PROTOCOLS]
    main = Table("main", columns + ["half_filling_bound", "error"],
                 plot=PlotHint("W", ("P", "lower_bound")))
    for w, o in zip(cfg.strengths, outcomes):
        if o.error:
            main.append(W=w, error=o.error)
            continue
        prob, others = o.value
        main.append(W=w, P=prob.probability, lower_bound=prob.lower_bound,
                    half_filling_bound=0.5 ** length, error="",
                    **{f"P_{name}": value for name, value in others.items()})
    return [main]


def oracle_check(cfg: ExperimentConfig, workers: int, progress: bool) -> list[Table]:
    """Gaussian vs exact entropies for every measurement kind and every cut at delta = 0."""
    kinds = []
    for kind in MeasurementKind:
        if kind == MeasurementKind.DENSITY_PATTERN:
            pattern = cfg.measurement.pattern if cfg.measurement.kind == kind else (0.0, 1.0)
            kinds.append(MeasurementSpec(kind, 0.0, pattern))
        else:
            kinds.append(MeasurementSpec(kind))

    def compute(point):
        meas, n, w = point
        model = cfg.model_at(n, 0.0)
        meas = meas.with_strength(w)
        g = gaussian.apply_measurement(cache.get_gaussian_ground_state(model), meas, model)
        e = ed.apply_measurement_ed(cache.get_ed_ground_state(model), meas, model)
        cuts = [Region.interval(0, l) for l in range(1, n)]
        return max((abs(gaussian.entanglement_entropy(g, r) - ed.ee_ed(e, r)) for r in cuts),
                   default=0.0)

    points = [(m, n, w) for m in kinds for n in cfg.sizes for w in cfg.strengths]
    outcomes = run_grid(compute, points, workers, "oracle_check", progress)
    main = Table("main", ["kind", "L", "W", "max_abs_diff", "passed", "error"],
                 {"L": "sites", "max_abs_diff": "nats"})
    for (m, n, w), o in zip(points, outcomes):
        diff = o.value if not o.error else math.nan
        main.append(kind=m.kind, L=n, W=w, max_abs_diff=diff,
                    passed=bool(diff < ORACLE_TOL) if not o.error else False, error=o.error)
    two_site = ModelSpec(2, cfg.model.boundary)
    for w in cfg.strengths:
        state = ed.apply_measurement_ed(
            ed.ground_state_ed(two_site), MeasurementSpec(MeasurementKind.DENSITY_STAGGERED, w))
        diff = abs(ed.ee_ed(state, Region((0,))) - two_site_entropy(w))
        main.append(kind="analytic_two_site", L=2, W=w, max_abs_diff=diff,
                    passed=bool(diff < 1e-12), error="")
    return [main]


def two_site_entropy(w: float) -> float:
    """Binary entropy of e^{2W} / (2 cosh 2W): one site of the measured two-site chain."""
    p = 1.0 / (1.0 + math.exp(-4.0 * w))
    if p >= 1.0:
        return 0.0
    return -(p * math.log(p) + (1.0 - p) * math.log1p(-p))


EXPERIMENTS = {
    Experiment.CEFF_SCAN: ceff_scan,
    Experiment.EE_SCAN: ee_scan,
    Experiment.MUTUAL_INFO: mutual_info,
    Experiment.COLLAPSE: collapse,
    Experiment.VQA_RUN: vqa_run,
    Experiment.PROTOCOL_PROB: protocol_prob,
    Experiment.ORACLE_CHECK: oracle_check,
}


@dataclass
class RunSummary:
    experiment: Experiment
    config_hash: str
    tables: list[Table]
    paths: list[Path]
    wall_time: float

    @property
    def error_count(self) -> int:
        return sum(t.error_count for t in self.tables)


def run_experiment(cfg: ExperimentConfig, output_dir: str | Path, workers: int = 1,
                   emit_plot_script: bool = False, progress: bool = False) -> RunSummary:
    output_dir = Path(cfg.output or output_dir)
    digest = artifacts.config_hash(cfg.raw)
    logger.info("experiment %s engine=%s hash=%s workers=%d", cfg.experiment, cfg.engine,
                digest, workers)
    started = time.perf_counter()
    tables = EXPERIMENTS[cfg.experiment](cfg, workers, progress)
    wall_time = time.perf_counter() - started

    paths = []
    for table in tables:
        name = artifacts.table_filename(cfg.experiment, table)
        paths.append(artifacts.write_table(output_dir / name, cfg.experiment, table, digest))
        if emit_plot_script and table.plot is not None:
            script = output_dir / name.replace(".csv", ".plot.py")
            paths.append(artifacts.render_plot_script(script, cfg.experiment, name, table))
    manifest = output_dir / f"{cfg.experiment}.manifest.json"
    artifacts.write_manifest(manifest, cfg.experiment, cfg.raw, digest, wall_time, tables, paths)
    summary = RunSummary(cfg.experiment, digest, tables, paths + [manifest], wall_time)
    logger.info("experiment %s done in %.1fs, %d grid errors", cfg.experiment, wall_time,
                summary.error_count)
    return summary
