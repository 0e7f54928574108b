"""Disorder-averaged experiments, seeding, aggregation and CSV/JSON output."""

import csv
import json
import math
import os
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .disorder import gibbs_exact, sample_goe
from .errors import InvalidArgumentError, ResourceLimitError
from .ledger import (build_q_ledger, cutoff_residuals, large_graph_threshold,
                     rate_probe_terms, verify_correlation_identity, verify_q_decomposition)
from .paths import (EXACT_DP_CAP, TruncationPolicy, frobenius_norm, operator_norm,
                    p_matrix, resolvent)

EXPERIMENT_IDS = {
    "convergence": 1,
    "frobenius_appendix": 2,
    "zhat_dist": 3,
    "rate_probe": 4,
    "identities": 5,
}

CSV_COLUMNS = {
    "convergence": ["seed", "n", "beta", "norm_MP_F", "norm_PR_op", "norm_MR_op", "runtime_ms"],
    "frobenius_appendix": ["seed", "n", "beta", "q_frob_sq", "runtime_ms"],
    "zhat_dist": ["seed", "n", "beta", "hat_z", "log_hat_z", "runtime_ms"],
    "rate_probe": ["seed", "n", "beta", "r6", "r7", "q3_01", "q5_01", "runtime_ms"],
    "identities": ["seed", "n", "beta", "identity", "residual", "pass", "runtime_ms"],
}

DEFAULTS = {
    "convergence": dict(n_grid=[8, 12, 16, 20], beta_grid=[0.3, 0.5, 0.7], seeds=30),
    "frobenius_appendix": dict(n_grid=[8, 12, 16], beta_grid=[0.3, 0.5], seeds=100),
    "zhat_dist": dict(n_grid=[16], beta_grid=[0.5], seeds=500),
    "rate_probe": dict(n_grid=[4, 6, 8, 10], beta_grid=[0.5], seeds=500),
    "identities": dict(n_grid=[5, 6, 7], beta_grid=[0.4, 0.8], seeds=10),
}

N_CAPS = {
    "convergence": 20,
    "frobenius_appendix": 16,
    "zhat_dist": 20,
    "rate_probe": EXACT_DP_CAP,
    "identities": 8,
}

IDENTITY_TOL = 1e-9
TRUNCATION_SWITCH_N = 16
TRUNCATED_LEN = 5
SLOW_BETA = 0.9


@dataclass
class ExperimentConfig:
    """Settings for one experiment run.

    ``truncation`` is None for the default rule (exact P up to n = 16, paths of
    at most 5 edges above). ``record_runtime`` False writes 0 in runtime_ms so
    that CSV bytes depend only on the configuration.
    """

    experiment: str
    n_grid: list
    beta_grid: list
    seeds: int
    base_seed: int = 0
    truncation: TruncationPolicy = None
    workers: int = 1
    output_path: str = "results"
    k1: int = 3
    k2: int = 3
    cutoff: float = None
    record_runtime: bool = True

    def __post_init__(self):
        if self.experiment not in EXPERIMENT_IDS:
            raise InvalidArgumentError(f"unknown experiment {self.experiment!r}")
        self.n_grid = [int(n) for n in self.n_grid]
        self.beta_grid = [float(b) for b in self.beta_grid]
        if self.seeds < 1:
            raise InvalidArgumentError("seeds must be at least 1")
        cap = N_CAPS[self.experiment]
        for n in self.n_grid:
            if n < 2 or n > cap:
                raise ResourceLimitError(f"{self.experiment} supports 2 <= n <= {cap}, got {n}")
        for b in self.beta_grid:
            if b < 0:
                raise InvalidArgumentError("beta must be nonnegative")
            if self.experiment != "identities" and b >= 1:
                raise InvalidArgumentError("experiment presets need beta < 1")

    def policy_for(self, n):
        if self.truncation is not None:
            return self.truncation
        if n > TRUNCATION_SWITCH_N:
            return TruncationPolicy("exact_dp", TRUNCATED_LEN)
        return TruncationPolicy("exact_dp", None)

    def to_dict(self):
        d = asdict(self)
        d["truncation"] = None if self.truncation is None else asdict(self.truncation)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("truncation") is not None:
            d["truncation"] = TruncationPolicy(**d["truncation"])
        return cls(**d)


def default_config(experiment, **overrides):
    params = dict(DEFAULTS[experiment])
    params.update(overrides)
    return ExperimentConfig(experiment=experiment, **params)


@dataclass
class RunRecord:
    seed: int
    n: int
    beta: float
    stats: dict = field(default_factory=dict)
    index: int = 0

    def row(self, columns):
        values = {"seed": self.seed, "n": self.n, "beta": self.beta, **self.stats}
        return [values[c] for c in columns]


def derive_seed(base_seed, experiment, run):
    """64-bit seed for run ``run`` of an experiment, mixed by SeedSequence."""
    exp_id = EXPERIMENT_IDS[experiment] if isinstance(experiment, str) else int(experiment)
    words = np.random.SeedSequence([int(base_seed) % 2 ** 64, exp_id, int(run)]).generate_state(2, np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


# ---------------------------------------------------------------------------
# per-seed tasks (top level so they pickle)

def _convergence_task(n, beta, seed, policy):
    g = sample_goe(n, seed)
    m = gibbs_exact(g, beta).m
    p = p_matrix(g, beta, policy)
    r = resolvent(g, beta)
    return {
        "norm_MP_F": frobenius_norm(m - p),
        "norm_PR_op": operator_norm(p - r),
        "norm_MR_op": operator_norm(m - r),
    }


def frobenius_statistic(g, beta, policy=TruncationPolicy()):
    n = g.shape[0]
    p = p_matrix(g, beta, policy)
    q = p @ ((1 + beta ** 2) * np.eye(n) - beta * g) - np.eye(n)
    return frobenius_norm(q) ** 2


def _frobenius_task(n, beta, seed, policy):
    return {"q_frob_sq": frobenius_statistic(sample_goe(n, seed), beta, policy)}


def _zhat_task(n, beta, seed, policy):
    hat_z = gibbs_exact(sample_goe(n, seed), beta).hat_z
    return {"hat_z": hat_z, "log_hat_z": math.log(hat_z)}


def _rate_task(n, beta, seed, policy):
    t = rate_probe_terms(sample_goe(n, seed), beta, 0, 1)
    return {"r6": float(t["r6"]), "r7": float(t["r7"]), "q3_01": float(t["q3"]), "q5_01": float(t["q5"])}


def _identity_task(n, beta, seed, policy, k1, k2, cutoff):
    g = sample_goe(n, seed)
    out = []
    led = build_q_ledger(g, beta, k1, k2)
    p = led.extra["p"]
    out.append(("q_decomposition", verify_q_decomposition(led, p)))
    split, full = cutoff_residuals(led, p)
    out.append(("q1_cutoff_split", split))
    out.append(("q_cutoff_form", full))
    if n <= 7 and beta > 0:
        c = large_graph_threshold(n) if cutoff is None else cutoff
        out.append(("correlation_identity", verify_correlation_identity(g, beta, c)))
    return out


_TASKS = {
    "convergence": _convergence_task,
    "frobenius_appendix": _frobenius_task,
    "zhat_dist": _zhat_task,
    "rate_probe": _rate_task,
}


def _run_one(job):
    experiment, n, beta, seed, policy, extra, record_runtime = job
    start = time.perf_counter()
    if experiment == "identities":
        result = _identity_task(n, beta, seed, policy, *extra)
    else:
        result = _TASKS[experiment](n, beta, seed, policy)
    elapsed = (time.perf_counter() - start) * 1e3 if record_runtime else 0
    return result, elapsed


def _jobs(cfg):
    jobs = []
    for n in cfg.n_grid:
        for beta in cfg.beta_grid:
            for r in range(cfg.seeds):
                seed = derive_seed(cfg.base_seed, cfg.experiment, r)
                jobs.append((cfg.experiment, n, beta, seed, cfg.policy_for(n),
                             (cfg.k1, cfg.k2, cfg.cutoff), cfg.record_runtime))
    return jobs


def run_experiment(cfg):
    """Run every (n, beta, seed) job and return records in a fixed order."""
    jobs = _jobs(cfg)
    workers = max(1, int(cfg.workers))
    if workers == 1:
        results = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    records = []
    for idx, (job, (result, elapsed)) in enumerate(zip(jobs, results)):
        _, n, beta, seed, _, _, _ = job
        runtime = round(elapsed, 3) if cfg.record_runtime else 0
        if cfg.experiment == "identities":
            for name, residual in result:
                records.append(RunRecord(seed, n, beta, {
                    "identity": name, "residual": residual,
                    "pass": int(residual <= IDENTITY_TOL), "runtime_ms": runtime}, idx))
        else:
            records.append(RunRecord(seed, n, beta, {**result, "runtime_ms": runtime}, idx))
    return _sorted(records)


def _sorted(records):
    return sorted(records, key=lambda r: (r.n, r.beta, r.index, str(r.stats.get("identity", ""))))


def run_convergence(cfg):
    return run_experiment(_as(cfg, "convergence"))


def run_frobenius_appendix(cfg):
    return run_experiment(_as(cfg, "frobenius_appendix"))


def run_zhat_distribution(cfg):
    return run_experiment(_as(cfg, "zhat_dist"))


def run_rate_probe(cfg):
    return run_experiment(_as(cfg, "rate_probe"))


def run_identities(cfg):
    return run_experiment(_as(cfg, "identities"))


def _as(cfg, experiment):
    if cfg.experiment != experiment:
        raise InvalidArgumentError(f"config is for {cfg.experiment!r}, not {experiment!r}")
    return cfg


# ---------------------------------------------------------------------------
# aggregation

def sigma_squared(beta):
    """Limit variance sum_{k>=3} beta^{2k}/(2k) of log hat_z, in closed form."""
    b2 = beta * beta
    return -0.5 * (math.log1p(-b2) + b2 + b2 * b2 / 2)


def _group(records, key):
    out = {}
    for r in _sorted(records):
        out.setdefault((r.n, r.beta), []).append(r.stats[key])
    return out


def _is_decreasing(values):
    return all(b < a for a, b in zip(values, values[1:]))


def summarize(records, cfg):
    """Per-(n, beta) statistics and the pass/fail verdict of the experiment."""
    exp = cfg.experiment
    summary = {"experiment": exp, "groups": [], "checks": []}
    betas = sorted(set(cfg.beta_grid))
    ns = sorted(set(cfg.n_grid))
    if exp == "convergence":
        cols = ["norm_MP_F", "norm_PR_op", "norm_MR_op"]
        tables = {c: _group(records, c) for c in cols}
        for (n, beta), vals in sorted(tables[cols[0]].items()):
            entry = {"n": n, "beta": beta, "policy": cfg.policy_for(n).describe()}
            for c in cols:
                v = np.array(tables[c][(n, beta)])
                entry[f"{c}_median"] = float(np.median(v))
                entry[f"{c}_q90"] = float(np.quantile(v, 0.9))
            summary["groups"].append(entry)
        for beta in betas:
            med_mr = [float(np.median(tables["norm_MR_op"][(n, beta)])) for n in ns]
            med_mp = [float(np.median(tables["norm_MP_F"][(n, beta)])) for n in ns]
            ratio = med_mr[-1] / med_mr[0] if med_mr[0] > 0 else 0.0
            trivial = beta == 0
            summary["checks"].append({
                "beta": beta,
                "slow_converging": beta >= SLOW_BETA,
                "MR_op_decreasing": trivial or _is_decreasing(med_mr),
                "MR_op_ratio": ratio,
                "MR_op_ratio_ok": trivial or ratio <= 0.7,
                "MP_F_decreasing": trivial or _is_decreasing(med_mp),
            })
        summary["pass"] = all(c["MR_op_decreasing"] and c["MR_op_ratio_ok"] and c["MP_F_decreasing"]
                              for c in summary["checks"])
    elif exp == "frobenius_appendix":
        table = _group(records, "q_frob_sq")
        for beta in betas:
            means = [float(np.mean(table[(n, beta)])) for n in ns]
            for n, mu in zip(ns, means):
                summary["groups"].append({"n": n, "beta": beta, "mean": mu})
            level = float(np.mean(means))
            slope = float(np.polyfit(ns, means, 1)[0]) if len(ns) > 1 else 0.0
            summary["checks"].append({"beta": beta, "slope": slope, "mean_level": level,
                                      "pass": abs(slope) <= 0.05 * level or level == 0})
        summary["pass"] = all(c["pass"] for c in summary["checks"])
    elif exp == "zhat_dist":
        table = _group(records, "hat_z")
        logs = _group(records, "log_hat_z")
        for (n, beta), vals in sorted(table.items()):
            z = np.array(vals)
            lz = np.array(logs[(n, beta)])
            se = float(np.std(z, ddof=1) / math.sqrt(len(z))) if len(z) > 1 else 0.0
            s2 = sigma_squared(beta)
            var_log = float(np.var(lz, ddof=1)) if len(z) > 1 else 0.0
            entry = {"n": n, "beta": beta, "mean_hat_z": float(np.mean(z)), "se_hat_z": se,
                     "mean_log_hat_z": float(np.mean(lz)), "var_log_hat_z": var_log,
                     "sigma2": s2, "limit_mean_log": -s2 / 2}
            entry["mean_ok"] = abs(entry["mean_hat_z"] - 1) <= 3 * se or beta == 0
            entry["var_ok"] = abs(var_log - s2) <= 0.25 * s2 if s2 > 0 else var_log == 0
            summary["groups"].append(entry)
        summary["pass"] = all(g["mean_ok"] and g["var_ok"] for g in summary["groups"])
    elif exp == "rate_probe":
        terms = ["r6", "r7", "q3_01", "q5_01"]
        for beta in betas:
            for term in terms:
                table = _group(records, term)
                l2 = [math.sqrt(float(np.mean(np.square(table[(n, beta)])))) for n in ns]
                for n, v in zip(ns, l2):
                    summary["groups"].append({"n": n, "beta": beta, "term": term, "l2": v})
                check = {"beta": beta, "term": term}
                if beta == 0:
                    check.update(slope=0.0, ci_low=0.0, ci_high=0.0, pass_=all(v == 0 for v in l2))
                else:
                    fit = stats.linregress(np.log(ns), np.log(l2))
                    half = stats.t.ppf(0.975, max(len(ns) - 2, 1)) * fit.stderr
                    check.update(slope=float(fit.slope), ci_low=float(fit.slope - half),
                                 ci_high=float(fit.slope + half),
                                 pass_=bool(-2.0 <= fit.slope <= -1.0))
                check["pass"] = check.pop("pass_")
                summary["checks"].append(check)
        summary["pass"] = all(c["pass"] for c in summary["checks"])
    elif exp == "identities":
        worst = {}
        for r in records:
            name = r.stats["identity"]
            worst[name] = max(worst.get(name, 0.0), r.stats["residual"])
        summary["checks"] = [{"identity": k, "max_residual": v, "pass": v <= IDENTITY_TOL}
                             for k, v in sorted(worst.items())]
        summary["pass"] = all(c["pass"] for c in summary["checks"])
    return summary


# ---------------------------------------------------------------------------
# output

def _format(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def version_string():
    """git-describe style version, falling back to the package version."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def emit_results(records, cfg, summary=None, timings=None, out_dir=None):
    """Write <experiment>.csv and <experiment>.manifest.json under the output directory.

    Returns:
        (csv_path, manifest_path)
    """
    out = Path(out_dir if out_dir is not None else cfg.output_path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{cfg.experiment}.csv"
        columns = CSV_COLUMNS[cfg.experiment]
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for r in _sorted(records):
                writer.writerow([_format(v) for v in r.row(columns)])
        manifest = {
            "config": cfg.to_dict(),
            "version": version_string(),
            "written_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "timings_s": timings or {},
            "policies": {str(n): cfg.policy_for(n).describe() for n in cfg.n_grid},
            "summary": _jsonable(summary) if summary is not None else None,
            "columns": columns,
        }
        manifest_path = out / f"{cfg.experiment}.manifest.json"
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write results under {out}: {exc}") from exc
    return csv_path, manifest_path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def read_manifest(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def config_from_manifest(path):
    return ExperimentConfig.from_dict(read_manifest(path)["config"])


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def resolve_workers(value=None):
    if value is not None:
        return int(value)
    return int(os.environ.get("SKRL_WORKERS", "1"))
