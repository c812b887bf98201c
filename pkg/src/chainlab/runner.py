"""Experiment configuration, orchestration, persistence and comparison."""
from __future__ import annotations

import copy
import hashlib
import json
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__, integrals, kernels, levy, poisson
from .lattice import LatticeFunction1D
from .observables import CorrelationProfile, estimate_S_profile, field_S
from .params import ScalingParams
from .testfunctions import GaussianBump

KINDS = (
    "simulate-profile",
    "lemma3-sweep",
    "corrector-norms",
    "asymptotics-sweep",
    "kernel-table",
    "crossover-compare",
)

DEFAULT_TOLERANCES = {
    "l1_max": 0.2,
    "field_sigma": 3.0,
    "field_relative": 0.15,
    "window": 3.0,
    "residual_step_ratio": 0.9,
    "residual_total_ratio": 0.1,
    "residual_from_n": 256,
    "h_slope": -0.5,
    "h_slope_tol": 0.1,
    "other_slope_max": -0.2,
    "bound_growth": 2.0,
    "agreement": 1e-8,
    "heat_abs": 1e-6,
    "mass_abs": 1e-6,
    "semigroup_l1": 1e-5,
}

DEFAULTS = {
    "params": {"n": 16, "b": 1.0, "gamma": 1.0, "beta": 1.0, "rho": 0.0},
    "ensemble": {"replicas": 10000, "ring": 512, "batch": 256, "method": "splitting", "dt": None},
    "times": [0.25],
    "test_function": {"kind": "gaussian", "width": 0.25, "center": 0.0},
    "pair_function": {"kind": "gaussian", "width": 0.25, "center": 0.0},
    "sweep": {},
    "threads": 1,
    "tolerances": {},
}


class ConfigError(ValueError):
    """Invalid configuration; `field` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in (extra or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    params: dict
    ensemble: dict
    times: list
    test_function: dict
    pair_function: dict
    sweep: dict
    threads: int
    tolerances: dict
    output: str | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "configuration must be a mapping")
        known = {"kind", "seed", "output", *DEFAULTS}
        for k in raw:
            if k not in known:
                raise ConfigError(k, "unknown field")
        if "kind" not in raw:
            raise ConfigError("kind", "missing")
        if raw["kind"] not in KINDS:
            raise ConfigError("kind", f"must be one of {KINDS}")
        if "seed" not in raw or raw["seed"] is None:
            raise ConfigError("seed", "an explicit seed is required")
        seed = raw["seed"]
        if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2 ** 64:
            raise ConfigError("seed", "must be an integer in [0, 2^64)")
        merged = _merge(DEFAULTS, {k: v for k, v in raw.items() if k in DEFAULTS})
        cfg = cls(kind=raw["kind"], seed=seed, output=raw.get("output"), **merged)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(yaml.safe_load(fh))

    def validate(self) -> None:
        try:
            self.scaling()
        except (TypeError, ValueError) as exc:
            raise ConfigError("params", str(exc)) from None
        ens = self.ensemble
        for key in ("replicas", "ring", "batch"):
            if not isinstance(ens.get(key), int) or ens[key] < 1:
                raise ConfigError(f"ensemble.{key}", "must be a positive integer")
        if ens["ring"] & (ens["ring"] - 1):
            raise ConfigError("ensemble.ring", "must be a power of two")
        if ens.get("method") not in ("splitting", "event"):
            raise ConfigError("ensemble.method", "must be 'splitting' or 'event'")
        if ens.get("dt") is not None and not ens["dt"] > 0:
            raise ConfigError("ensemble.dt", "must be positive")
        if not isinstance(self.times, list) or not self.times or any(
                not isinstance(t, (int, float)) or t < 0 for t in self.times):
            raise ConfigError("times", "must be a non-empty list of non-negative numbers")
        if not isinstance(self.threads, int) or self.threads < 1:
            raise ConfigError("threads", "must be a positive integer")
        for name in ("test_function", "pair_function"):
            spec = getattr(self, name)
            if spec.get("kind") != "gaussian":
                raise ConfigError(f"{name}.kind", "only 'gaussian' test functions are available")
            if not spec.get("width", 0) > 0:
                raise ConfigError(f"{name}.width", "must be positive")
        for k in self.tolerances:
            if k not in DEFAULT_TOLERANCES:
                raise ConfigError(f"tolerances.{k}", "unknown tolerance")
        for k, v in self.sweep.items():
            if k not in ("ns", "bs", "families", "points"):
                raise ConfigError(f"sweep.{k}", "unknown sweep field")
            if k in ("ns", "bs", "families") and not isinstance(v, list):
                raise ConfigError(f"sweep.{k}", "must be a list")

    def scaling(self, n=None, b=None) -> ScalingParams:
        p = self.params
        return ScalingParams(int(p["n"] if n is None else n), float(p["b"] if b is None else b),
                             float(p["gamma"]), float(p["beta"]), float(p["rho"]))

    def tolerance(self, key: str) -> float:
        return self.tolerances.get(key, DEFAULT_TOLERANCES[key])

    def function(self, name: str = "test_function") -> GaussianBump:
        spec = getattr(self, name)
        return GaussianBump(float(spec["width"]), float(spec.get("center", 0.0)))

    def as_dict(self) -> dict:
        return {
            "kind": self.kind, "seed": self.seed, "params": self.params, "ensemble": self.ensemble,
            "times": self.times, "test_function": self.test_function, "pair_function": self.pair_function,
            "sweep": self.sweep, "threads": self.threads, "tolerances": self.tolerances,
        }

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.as_dict(), sort_keys=True).encode()).hexdigest()


# comparison --------------------------------------------------------------

@dataclass
class ComparisonReport:
    """Measured profile against a kernel prediction; `checks` maps criterion names to outcomes."""

    offsets: np.ndarray
    measured: np.ndarray
    predicted: np.ndarray
    l1: float
    field_measured: float
    field_stderr: float
    field_predicted: float
    third_moment_measured: float
    third_moment_predicted: float
    window: float
    checks: dict = field(default_factory=dict)

    @property
    def field_gap_sigma(self) -> float:
        gap = abs(self.field_measured - self.field_predicted)
        return gap / self.field_stderr if self.field_stderr > 0 else (0.0 if gap == 0 else math.inf)

    @property
    def skew_signs_match(self) -> bool:
        return np.sign(self.third_moment_measured) == np.sign(self.third_moment_predicted)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def summary(self) -> dict:
        return {
            "l1": self.l1,
            "window": self.window,
            "field_measured": self.field_measured,
            "field_stderr": self.field_stderr,
            "field_predicted": self.field_predicted,
            "field_gap_sigma": self.field_gap_sigma,
            "third_moment_measured": self.third_moment_measured,
            "third_moment_predicted": self.third_moment_predicted,
            "skew_signs_match": bool(self.skew_signs_match),
            "checks": {k: bool(v) for k, v in self.checks.items()},
        }

    def overlay_csv(self, path=None, n: int | None = None) -> str:
        lines = ["offset,x,S,kernel"]
        for d, s, p in zip(self.offsets.tolist(), np.asarray(self.measured).tolist(),
                           np.asarray(self.predicted).tolist()):
            x = d / n if n else float("nan")
            lines.append(f"{int(d)},{x!r},{s!r},{p!r}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _third_central_moment(x, w) -> float:
    mean = np.sum(w * x) / np.sum(w)
    return float(np.sum(w * (x - mean) ** 3) / np.sum(w))


def compare_profiles(measured: CorrelationProfile, predicted: levy.KernelGrid, f=None, g=None,
                     window: float = 3.0, tolerances: dict | None = None) -> ComparisonReport:
    """Profile S(d) against (1/n) P_t(d/n) on the macroscopic window |d/n| <= window."""
    if not math.isclose(measured.t, predicted.t, rel_tol=1e-12, abs_tol=1e-15):
        raise ValueError(f"time mismatch: profile t={measured.t}, kernel t={predicted.t}")
    if not math.isclose(measured.b, predicted.b) or not math.isclose(measured.gamma, predicted.gamma):
        raise ValueError("profile and kernel were built for different (b, gamma)")
    n = measured.n
    if window * n > measured.offsets[-1] or window > predicted.x[-1]:
        raise ValueError("comparison window exceeds the profile or the kernel grid")
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    keep = np.abs(measured.offsets / n) <= window
    d = measured.offsets[keep]
    S = measured.S[keep]
    P = predicted.at(d / n) / n
    l1 = float(np.sum(np.abs(S - P)) / np.sum(P))
    f = GaussianBump() if f is None else f
    g = GaussianBump() if g is None else g
    fl, gl = _as_lattice(f, n), _as_lattice(g, n)
    value, err, _ = field_S(measured, fl, gl)
    pred = levy.kernel_predict(f, g, predicted.b, predicted.gamma, predicted.t, grid=predicted,
                               support=_support_radius(f, g))
    x = d / n
    m3 = _third_central_moment(x, S)
    p3 = _third_central_moment(x, P)
    report = ComparisonReport(d, S, P, l1, value, err, pred, m3, p3, window)
    report.checks = {
        "profile_l1": l1 <= tol["l1_max"],
        "field_gap": abs(value - pred) <= tol["field_sigma"] * err + tol["field_relative"] * abs(pred),
        "skew_sign": bool(report.skew_signs_match),
    }
    return report


def _as_lattice(f, n: int) -> LatticeFunction1D:
    return f if isinstance(f, LatticeFunction1D) else f.lattice(n)


def _support_radius(*fs) -> float:
    r = 0.0
    for f in fs:
        lo, hi = f.support
        r = max(r, abs(lo), abs(hi))
    return r


def profile_from_kernel(grid: levy.KernelGrid, n: int, N: int = 512, replicas: int = 1) -> CorrelationProfile:
    """A profile holding (1/n) P_t(d/n) exactly, with zero error bars."""
    offsets = np.arange(-(N // 2), N - N // 2)
    S = grid.at(offsets / n) / n
    return CorrelationProfile(n, grid.b, grid.gamma, grid.t, offsets, S, np.zeros_like(S), replicas,
                              a=ScalingParams(n, grid.b, grid.gamma).a, N=N)


# pipelines ---------------------------------------------------------------

def _kernel_for(cfg: ExperimentConfig, b: float, t: float) -> levy.KernelGrid:
    return levy.kernel_P(b, float(cfg.params["gamma"]), t)


def _simulate(cfg: ExperimentConfig, params: ScalingParams, times):
    ens = cfg.ensemble
    return estimate_S_profile(params, times, ens["replicas"], cfg.seed, N=ens["ring"], method=ens["method"],
                              dt=ens["dt"], batch=ens["batch"], threads=cfg.threads)


def _run_simulate_profile(cfg, out: Path) -> dict:
    params = cfg.scaling()
    profiles = _simulate(cfg, params, cfg.times)
    f, g = cfg.function(), cfg.function("pair_function")
    results, checks = [], {}
    for i, prof in enumerate(profiles):
        prof.to_csv(out / f"profile_t{i}.csv")
        value, err, bound = field_S(prof, _as_lattice(f, params.n), _as_lattice(g, params.n))
        entry = {"t": prof.t, "mass": prof.mass, "field": value, "field_stderr": err, "field_bound": bound,
                 "S0": float(prof.value(0)), "S0_err": float(prof.error(0))}
        checks[f"field_bound_t{i}"] = abs(value) <= bound + 3 * err
        if prof.t > 0:
            rep = compare_profiles(prof, _kernel_for(cfg, params.b, prof.t), f, g, cfg.tolerance("window"),
                                   cfg.tolerances)
            rep.overlay_csv(out / f"overlay_t{i}.csv", params.n)
            entry["comparison"] = rep.summary()
        else:
            for d in (-1, 0, 1):
                target = 1.0 if d == 0 else 0.0
                checks[f"t0_S({d})"] = abs(prof.value(d) - target) <= 3 * prof.error(d)
        results.append(entry)
    return {"profiles": results, "checks": checks}


def _sweep(cfg, key, default):
    return cfg.sweep.get(key, default)


def _run_lemma3(cfg, out: Path) -> dict:
    f = cfg.function()
    gamma = float(cfg.params["gamma"])
    ns = [int(n) for n in _sweep(cfg, "ns", [2 ** k for k in range(6, 13)])]
    bs = [float(b) for b in _sweep(cfg, "bs", [0.0, 1 / 3, 0.5])]
    start = cfg.tolerance("residual_from_n")
    rows, report, checks = [], {}, {}
    for b in bs:
        res = [poisson.lemma3_residual(f, n, b, gamma) for n in ns]
        rows += [(n, b, gamma, r) for n, r in zip(ns, res)]
        ratios = [r2 / r1 for (n1, r1), r2 in zip(zip(ns, res), res[1:]) if n1 >= start]
        total = res[-1] / res[0]
        report[f"b={b:.6g}"] = {"ns": ns, "residuals": res, "step_ratios": ratios, "total_ratio": total}
        checks[f"residual_steps_b={b:.6g}"] = all(r <= cfg.tolerance("residual_step_ratio") for r in ratios)
        checks[f"residual_total_b={b:.6g}"] = total <= cfg.tolerance("residual_total_ratio")
    _write_rows(out / "lemma3_residuals.csv", ["n", "b", "gamma", "residual"], rows)
    return {"sweep": report, "checks": checks}


def _run_corrector_norms(cfg, out: Path) -> dict:
    f = cfg.function()
    gamma = float(cfg.params["gamma"])
    ns = [int(n) for n in _sweep(cfg, "ns", [2 ** k for k in range(6, 13)])]
    bs = [float(b) for b in _sweep(cfg, "bs", [0.2, 1 / 3, 0.8])]
    report, checks, text = {}, {}, []
    for b in bs:
        dec = poisson.norm_decay(f, ns, b, gamma)
        text.append(dec.to_csv())
        report[f"b={b:.6g}"] = {"ns": ns, "norms": dec.norms, "slopes": dec.slopes}
        hs = dec.slopes["h"]
        checks[f"h_slope_b={b:.6g}"] = abs(hs - cfg.tolerance("h_slope")) <= cfg.tolerance("h_slope_tol")
        for name, s in dec.slopes.items():
            if name != "h":
                checks[f"{name}_slope_b={b:.6g}"] = s <= cfg.tolerance("other_slope_max")
    body = text[0] + "".join(t.split("\n", 1)[1] for t in text[1:])
    (out / "corrector_norms.csv").write_text(body)
    return {"sweep": report, "checks": checks}


def _run_asymptotics(cfg, out: Path) -> dict:
    gamma = float(cfg.params["gamma"])
    ns = [int(n) for n in _sweep(cfg, "ns", [2 ** k for k in range(4, 13)])]
    bs = [float(b) for b in _sweep(cfg, "bs", [0.0, 1 / 3, 2 / 3, 1.0])]
    fams = _sweep(cfg, "families", list(integrals.FAMILIES))
    points = int(_sweep(cfg, "points", 64))
    rng = np.random.default_rng(cfg.seed)
    report, checks, rows = {}, {}, []
    for fam in fams:
        if fam not in integrals.FAMILIES:
            raise ConfigError("sweep.families", f"unknown family {fam!r}")
        worst = 0.0
        for _ in range(points):
            y = float(rng.choice([-1.0, 1.0]) * 10 ** rng.uniform(-3, math.log10(0.5)))
            n = int(rng.choice(ns))
            b = float(rng.choice(bs))
            q = integrals.quad_integral(fam, y, n, b, gamma)
            r = integrals.residue_integral(fam, y, n, b, gamma)
            worst = max(worst, abs(q.value - r) / max(1.0, abs(r)))
            rows.append((fam, n, b, gamma, y, r.real, r.imag, q.value.real, q.value.imag, q.error))
        bounds = {f"b={b:.6g}": integrals.verify_bound(fam, ns, b, gamma) for b in bs}
        report[fam] = {
            "agreement_worst": worst,
            "bounds": {k: {"sup_ratio": v.sup_ratio, "growth": v.growth, "spread": v.spread}
                       for k, v in bounds.items()},
        }
        checks[f"agreement_{fam}"] = worst <= cfg.tolerance("agreement")
        for k, v in bounds.items():
            checks[f"bound_{fam}_{k}"] = v.growth <= cfg.tolerance("bound_growth")
    _write_rows(out / "families.csv",
                ["family", "n", "b", "gamma", "y", "re_residue", "im_residue", "re_quad", "im_quad", "quad_err"], rows)
    return {"families": report, "checks": checks}


def _run_kernel_table(cfg, out: Path) -> dict:
    b = float(cfg.params["b"])
    gamma = float(cfg.params["gamma"])
    report, checks = [], {}
    for i, t in enumerate(cfg.times):
        grid = _kernel_for(cfg, b, float(t))
        grid.to_csv(out / f"kernel_t{i}.csv")
        entry = {"t": t, "mass": grid.mass, "third_moment": grid.central_moment(3, cfg.tolerance("window"))}
        checks[f"mass_t{i}"] = abs(grid.mass - 1) <= cfg.tolerance("mass_abs")
        if b > 1 / 3:
            err = float(np.max(np.abs(grid.P - levy.heat_kernel(t, grid.x))))
            entry["heat_max_error"] = err
            checks[f"heat_t{i}"] = err <= cfg.tolerance("heat_abs")
        defect = levy.semigroup_defect(b, gamma, float(t), float(t) / 2)
        entry["semigroup_defect"] = defect
        checks[f"semigroup_t{i}"] = defect <= cfg.tolerance("semigroup_l1")
        report.append(entry)
    return {"kernels": report, "checks": checks}


def _run_crossover(cfg, out: Path) -> dict:
    b = float(cfg.params["b"])
    ns = [int(n) for n in _sweep(cfg, "ns", [int(cfg.params["n"])])]
    f, g = cfg.function(), cfg.function("pair_function")
    report, checks, l1s = {}, {}, []
    for n in ns:
        params = cfg.scaling(n=n)
        for i, prof in enumerate(_simulate(cfg, params, cfg.times)):
            prof.to_csv(out / f"profile_n{n}_t{i}.csv")
            rep = compare_profiles(prof, _kernel_for(cfg, b, prof.t), f, g, cfg.tolerance("window"),
                                   cfg.tolerances)
            rep.overlay_csv(out / f"overlay_n{n}_t{i}.csv", n)
            report[f"n={n},t={prof.t:.6g}"] = rep.summary()
            if i == 0:
                l1s.append(rep.l1)
            if b <= 1 / 3:
                checks[f"skew_sign_n={n}_t{i}"] = bool(rep.skew_signs_match)
            else:
                checks[f"profile_l1_n={n}_t{i}"] = rep.checks["profile_l1"]
    if len(ns) > 1 and b <= 1 / 3:
        checks["l1_decreases_with_n"] = all(y < x for x, y in zip(l1s, l1s[1:]))
    return {"comparisons": report, "l1_by_n": dict(zip(map(str, ns), l1s)), "checks": checks}


PIPELINES = {
    "simulate-profile": _run_simulate_profile,
    "lemma3-sweep": _run_lemma3,
    "corrector-norms": _run_corrector_norms,
    "asymptotics-sweep": _run_asymptotics,
    "kernel-table": _run_kernel_table,
    "crossover-compare": _run_crossover,
}


def _write_rows(path: Path, header, rows) -> None:
    def fmt(v):
        if isinstance(v, str):
            return v
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        return repr(float(v))

    lines = [",".join(header)] + [",".join(fmt(v) for v in r) for r in rows]
    path.write_text("\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def fresh_directory(root, cfg: ExperimentConfig) -> Path:
    """root/<kind>-<digest>, with a numeric suffix when that directory already exists."""
    root = Path(root)
    base = f"{cfg.kind}-{cfg.digest()[:12]}"
    path = root / base
    k = 1
    while path.exists():
        k += 1
        path = root / f"{base}-{k}"
    path.mkdir(parents=True)
    return path


@dataclass
class RunResult:
    directory: Path
    report: dict

    @property
    def passed(self) -> bool:
        return all(self.report.get("checks", {}).values())


def run(cfg: ExperimentConfig | dict, out=None) -> RunResult:
    """Execute one experiment; outputs go to a fresh directory under `out`."""
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    root = out if out is not None else (cfg.output or "runs")
    directory = fresh_directory(root, cfg)
    started = time.perf_counter()
    report = _jsonable(PIPELINES[cfg.kind](cfg, directory))
    report["passed"] = all(report.get("checks", {}).values())
    with open(directory / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    manifest = {
        "config": cfg.as_dict(),
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
        "versions": {
            "chainlab": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": __import__("scipy").__version__,
            "kernel_backend": kernels.BACKEND,
        },
        "wall_time_s": time.perf_counter() - started,
        "outputs": sorted(p.name for p in directory.iterdir()),
    }
    with open(directory / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return RunResult(directory, report)
