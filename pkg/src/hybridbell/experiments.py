"""Experiment catalog, runners and the on-disk result format.

Each runner takes a validated :class:`ExperimentConfig` and returns a
:class:`ResultTable`: one row per point of the product of its sweep axes,
plus a metadata header with the config echo and any derived analysis
(critical times, fits, rank correlations).
"""

from __future__ import annotations

import csv
import itertools
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.stats import spearmanr

from .bellchsh import correlation_arrays_multi, horodecki_values
from .config import ExperimentConfig, axis_values
from .disorder import (
    DisorderSpec,
    detect_saturation,
    detect_violation_loss,
    quenched_oracle,
    quenched_realistic,
    _branches,
)
from .errors import AlwaysViolating, NotSaturated, SingularJacobian
from .fitting import fit_curve, quartic_crossing
from .jcdynamics import Cat, ClassicalMixture, CoherentProduct, FockProduct, JCParams, SmsvProduct, evolve, evolve_arrays
from .wigner import WignerGridSpec, negativity_volume

CODE_VERSION = "0.1.0"
MISSING = -1.0  # t_cr / sat_value placeholder on rows whose status is not "ok"


# ---------------------------------------------------------------------------
# result table


@dataclass
class ResultTable:
    """Column-oriented rows plus a JSON-serializable metadata header."""

    columns: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"columns have unequal lengths {sorted(lengths)}")
        for n, v in self.columns.items():
            v = np.asarray(v)
            if v.dtype.kind in "fc" and np.isnan(v).any():
                raise ValueError(f"observable column {n!r} contains NaN; failures belong in status rows")

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def dtypes(self) -> dict:
        out = {}
        for k, v in self.columns.items():
            kind = np.asarray(v).dtype.kind
            out[k] = "int" if kind in "iu" else "float" if kind == "f" else "str"
        return out

    def write(self, directory, stem: str) -> tuple:
        """Write ``<stem>.csv`` and ``<stem>.json``; floats use shortest round-trip repr."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        types = self.dtypes()
        csv_path, json_path = directory / f"{stem}.csv", directory / f"{stem}.json"
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(self.columns))
            cols = [np.asarray(v).tolist() for v in self.columns.values()]
            for row in zip(*cols):
                w.writerow([repr(x) if types[k] == "float" else x for k, x in zip(self.columns, row)])
        meta = dict(self.metadata, columns=types, n_rows=self.n_rows)
        json_path.write_text(json.dumps(meta, indent=2, sort_keys=True))
        return csv_path, json_path

    @classmethod
    def read(cls, csv_path) -> "ResultTable":
        csv_path = Path(csv_path)
        meta = json.loads(csv_path.with_suffix(".json").read_text())
        types = meta.pop("columns")
        meta.pop("n_rows", None)
        conv = {"float": float, "int": int, "str": str}
        np_type = {"float": float, "int": np.int64, "str": str}
        with open(csv_path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            rows = list(r)
        cols = {}
        for i, name in enumerate(header):
            t = types[name]
            cols[name] = np.array([conv[t](row[i]) for row in rows], dtype=np_type[t])
        return cls(cols, meta)

    def equals(self, other: "ResultTable") -> bool:
        """Bitwise equality of columns and metadata."""
        if list(self.columns) != list(other.columns) or self.metadata != other.metadata:
            return False
        return all(
            np.asarray(a).dtype.kind == np.asarray(b).dtype.kind and np.array_equal(a, b)
            for a, b in zip(self.columns.values(), other.columns.values())
        )


def _table(rows: list, names: list, metadata: dict) -> ResultTable:
    cols = {n: np.asarray([r[i] for r in rows]) for i, n in enumerate(names)}
    return ResultTable(cols, metadata)


# ---------------------------------------------------------------------------
# shared helpers


def _cutoff(num: dict):
    return int(num["cutoff"]) or None


def _params(dyn: dict, lam=None) -> JCParams:
    return JCParams(dyn["lam"] if lam is None else lam, dyn["omega0"], dyn["picture"])


def _bell_series(spec, params: JCParams, times, num: dict):
    """``(bell_max, best_q, per_q_values, entropy or None)`` over ``times``.

    All times are propagated at once from the prepared initial branches.
    """
    branches = _branches(spec, _cutoff(num), num["tail_tol"])
    q_range = tuple(int(q) for q in num["q_range"])
    t = np.asarray(times, dtype=float)
    mats = 0.0
    evolved = []
    for p, g0, e0 in branches:
        g, e = evolve_arrays(g0[None, :], e0[None, :], params.lam * np.ones_like(t), t, params.omega0, params.picture)
        evolved.append((g, e))
        mats = mats + p * correlation_arrays_multi(g, e, q_range)
    per_q = horodecki_values(mats)  # (n_q, n_t)
    idx = np.argmax(per_q, axis=0)
    best = np.take_along_axis(per_q, idx[None], 0)[0]
    entropy = _entropy_batch(*evolved[0]) if len(branches) == 1 else None
    return best, np.asarray(q_range)[idx], per_q, entropy


def _entropy_batch(g, e) -> np.ndarray:
    """Qubit-marginal entropy (bits) for batches of pure states."""
    pg = (np.abs(g) ** 2).sum(-1)
    pe = (np.abs(e) ** 2).sum(-1)
    c = np.abs((e.conj() * g).sum(-1))
    tot = pg + pe
    disc = np.sqrt(np.clip((pg - pe) ** 2 + 4 * c**2, 0.0, None))
    lam = np.clip(np.stack([(tot + disc) / 2, (tot - disc) / 2]) / tot, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = np.where(lam > 0, -lam * np.log2(np.where(lam > 0, lam, 1.0)), 0.0)
    return np.clip(h.sum(0), 0.0, 1.0)


def _meta(cfg: ExperimentConfig, seed=None, analysis=None) -> dict:
    out = {
        "experiment": cfg.experiment,
        "figure": CATALOG[cfg.experiment].figure,
        "code_version": CODE_VERSION,
        "seed": seed,
        "config": cfg.as_dict(),
    }
    if analysis is not None:
        out["analysis"] = analysis
    return out


def _as_list(v):
    return list(np.atleast_1d(v).tolist())


# ---------------------------------------------------------------------------
# coherent-dynamics runners


def run_fock_dynamics(cfg: ExperimentConfig) -> ResultTable:
    st, num = cfg.section("state"), cfg.section("numerics")
    times = axis_values(cfg.section("sweep")["t"])
    params = _params(cfg.section("dynamics"))
    rows = []
    for k in _as_list(st["k"]):
        best, bq, _, ent = _bell_series(FockProduct(int(k)), params, times, num)
        rows += [(int(k), t, b, int(q), s) for t, b, q, s in zip(times, best, bq, ent)]
    return _table(rows, ["k", "t", "bell_max", "best_q", "entropy"], _meta(cfg))


def run_smsv_dynamics(cfg: ExperimentConfig) -> ResultTable:
    st, num = cfg.section("state"), cfg.section("numerics")
    times = axis_values(cfg.section("sweep")["t"])
    params = _params(cfg.section("dynamics"))
    q_range = [int(q) for q in num["q_range"]]
    rows = []
    for r in _as_list(st["r"]):
        best, bq, per_q, ent = _bell_series(SmsvProduct(float(r), float(st["theta"])), params, times, num)
        b0 = per_q[q_range.index(0)] if 0 in q_range else np.full_like(best, MISSING)
        b1 = per_q[q_range.index(1)] if 1 in q_range else np.full_like(best, MISSING)
        rows += [(float(r), t, b, int(q), x0, x1, s) for t, b, q, x0, x1, s in zip(times, best, bq, b0, b1, ent)]
    names = ["r", "t", "bell_max", "best_q", "bell_q0", "bell_q1", "entropy"]
    return _table(rows, names, _meta(cfg))


def _heatmap(cfg: ExperimentConfig, make) -> ResultTable:
    num = cfg.section("numerics")
    sw = cfg.section("sweep")
    times, alphas = axis_values(sw["t"]), axis_values(sw["alpha"])
    params = _params(cfg.section("dynamics"))
    rows = []
    for a in alphas:
        best, bq, _, _ = _bell_series(make(float(a)), params, times, num)
        rows += [(float(a), t, b, int(q)) for t, b, q in zip(times, best, bq)]
    return _table(rows, ["alpha", "t", "bell_max", "best_q"], _meta(cfg))


def run_coherent_heatmap(cfg: ExperimentConfig) -> ResultTable:
    return _heatmap(cfg, CoherentProduct)


def run_cat_heatmap(cfg: ExperimentConfig) -> ResultTable:
    st = cfg.section("state")
    return _heatmap(cfg, lambda a: Cat(a, st["a1"], st["a2"]))


def run_classical_mixture(cfg: ExperimentConfig) -> ResultTable:
    st, num = cfg.section("state"), cfg.section("numerics")
    times = axis_values(cfg.section("sweep")["t"])
    params = _params(cfg.section("dynamics"))
    rows = []
    for a, p in itertools.product(_as_list(st["alpha"]), _as_list(st["p"])):
        best, bq, _, _ = _bell_series(ClassicalMixture(float(a), float(p)), params, times, num)
        rows += [(float(a), float(p), t, b, int(q)) for t, b, q in zip(times, best, bq)]
    return _table(rows, ["alpha", "p", "t", "bell_max", "best_q"], _meta(cfg))


def run_cat_dynamics(cfg: ExperimentConfig) -> ResultTable:
    st, num = cfg.section("state"), cfg.section("numerics")
    times = axis_values(cfg.section("sweep")["t"])
    params = _params(cfg.section("dynamics"))
    rows = []
    for a in _as_list(st["alpha"]):
        best, bq, _, ent = _bell_series(Cat(float(a), st["a1"], st["a2"]), params, times, num)
        rows += [(float(a), t, b, int(q), s) for t, b, q, s in zip(times, best, bq, ent)]
    return _table(rows, ["alpha", "t", "bell_max", "best_q", "entropy"], _meta(cfg))


# ---------------------------------------------------------------------------
# disorder runners


def _family(st: dict):
    """``(column name, values, constructor)`` for the disorder state family."""
    if st["family"] == "fock":
        return "k", [int(k) for k in _as_list(st["k"])], lambda k: FockProduct(int(k))
    return "alpha", [float(a) for a in _as_list(st["alpha"])], lambda a: CoherentProduct(float(a))


def _disorder_specs(dis: dict):
    for sigma in _as_list(dis["sigma_lambda"]):
        yield float(sigma), DisorderSpec(dis["lambda_bar"], float(sigma), int(dis["n_realizations"]), int(dis["seed"]))


def _workers(dis: dict):
    return int(dis["workers"]) or None


def _saturation(times, values, det) -> dict:
    try:
        tc, sv = detect_saturation(times, values, int(det["window"]), float(det["tol"]))
        return {"status": "ok", "t_cr": tc, "sat_value": sv}
    except NotSaturated as exc:
        return {"status": "not_saturated", "t_cr": MISSING, "sat_value": MISSING, "detail": str(exc)}


def _violation_loss(times, values) -> dict:
    try:
        return {"status": "ok", "t_cr": detect_violation_loss(times, values)}
    except AlwaysViolating as exc:
        return {"status": "always_violating", "t_cr": MISSING, "detail": str(exc)}


def _fit_or_status(model, x, y) -> dict:
    try:
        fit = fit_curve(model, x, y)
    except (SingularJacobian, ValueError) as exc:
        return {"status": "fit_failed", "detail": str(exc), "n_points": len(x)}
    return {"status": "ok", "params": fit.params, "param_rel_err": fit.param_rel_err, "residual": fit.residual, "n_points": len(x)}


def _critical_displacement(summaries, level=2.0) -> dict:
    """Quartic in ``|alpha|`` through the violating saturation values and its crossing of ``level``."""
    pts = [(s["alpha"], s["sat_value"]) for s in summaries if s["status"] == "ok" and s["sat_value"] > level]
    if len(pts) < 5:
        return {"status": "too_few_violating_points", "n_points": len(pts)}
    x, y = np.array(pts).T
    out = _fit_or_status("quartic_even", x, y)
    if out["status"] == "ok":
        fit = fit_curve("quartic_even", x, y)
        out["alpha_cr"] = quartic_crossing(fit, level, (0.0, 3.0))
        if np.isnan(out["alpha_cr"]):
            out["alpha_cr"] = None
    return out


def _sigma_fit(summaries, key="t_cr") -> dict:
    pts = [(s["sigma"], s[key]) for s in summaries if s["status"] == "ok"]
    if len(pts) < 5:
        return {"status": "too_few_points", "n_points": len(pts)}
    x, y = np.array(pts).T
    return _fit_or_status("shifted_exponential", x, y)


def run_disorder_oracle(cfg: ExperimentConfig) -> ResultTable:
    st, dis, num, det = (cfg.section(k) for k in ("state", "disorder", "numerics", "detect"))
    times = axis_values(cfg.section("sweep")["t"])
    pname, pvals, make = _family(st)
    q_range = tuple(int(q) for q in num["q_range"])
    rows, summaries = [], []
    for pv in pvals:
        for sigma, spec in _disorder_specs(dis):
            avg = quenched_oracle(make(pv), spec, times, q_range, _cutoff(num), num["tail_tol"], _workers(dis))
            sat = _saturation(times, avg.mean, det)
            summaries.append({pname: pv, "sigma": sigma, **sat})
            rows += [
                (pv, sigma, t, m, s, sat["t_cr"], sat["sat_value"], sat["status"])
                for t, m, s in zip(times, avg.mean, avg.stderr)
            ]
    analysis = {"saturation": summaries}
    if pname == "alpha":
        by_sigma = {}
        for s in summaries:
            by_sigma.setdefault(s["sigma"], []).append(s)
        analysis["critical_displacement"] = {repr(k): _critical_displacement(v) for k, v in by_sigma.items()}
    by_param = {}
    for s in summaries:
        by_param.setdefault(s[pname], []).append(s)
    analysis["t_cr_vs_sigma"] = {repr(k): _sigma_fit(v) for k, v in by_param.items()}
    names = [pname, "sigma", "t", "q_oracle", "stderr_oracle", "t_cr", "sat_value", "status"]
    return _table(rows, names, _meta(cfg, dis["seed"], analysis))


def run_disorder_realistic(cfg: ExperimentConfig) -> ResultTable:
    st, dis, num, det = (cfg.section(k) for k in ("state", "disorder", "numerics", "detect"))
    times = axis_values(cfg.section("sweep")["t"])
    pname, pvals, make = _family(st)
    q_range = tuple(int(q) for q in num["q_range"])
    rows, summaries = [], []
    for pv in pvals:
        for sigma, spec in _disorder_specs(dis):
            fam = make(pv)
            o = quenched_oracle(fam, spec, times, q_range, _cutoff(num), num["tail_tol"], _workers(dis))
            r = quenched_realistic(fam, spec, times, q_range, num["rule"], _cutoff(num), num["tail_tol"], _workers(dis))
            sat = _saturation(times, o.mean, det)
            loss = _violation_loss(times, r.mean)
            summaries.append({pname: pv, "sigma": sigma, "oracle": sat, "realistic": loss})
            rows += [
                (pv, sigma, t, mo, so, mr, sr, sat["t_cr"], loss["t_cr"], sat["status"], loss["status"])
                for t, mo, so, mr, sr in zip(times, o.mean, o.stderr, r.mean, r.stderr)
            ]
    fits = {}
    for pv in pvals:
        mine = [s for s in summaries if s[pname] == pv]
        fits[repr(pv)] = {
            "oracle": _sigma_fit([{"sigma": s["sigma"], **s["oracle"]} for s in mine]),
            "realistic": _sigma_fit([{"sigma": s["sigma"], **s["realistic"]} for s in mine]),
        }
    analysis = {"critical_times": summaries, "t_cr_vs_sigma": fits}
    names = [
        pname, "sigma", "t", "q_oracle", "stderr_oracle", "q_real", "stderr_real",
        "t_cr_oracle", "t_cr", "status_oracle", "status",
    ]
    return _table(rows, names, _meta(cfg, dis["seed"], analysis))


# ---------------------------------------------------------------------------
# Wigner comparison


def _local_maxima(y) -> list:
    y = np.asarray(y)
    return [int(i) for i in range(1, len(y) - 1) if y[i] > y[i - 1] and y[i] >= y[i + 1]]


def run_wigner_comparison(cfg: ExperimentConfig) -> ResultTable:
    st, num = cfg.section("state"), cfg.section("numerics")
    times = axis_values(cfg.section("sweep")["t"])
    params = _params(cfg.section("dynamics"))
    spec = Cat(float(st["alpha"]), st["a1"], st["a2"])
    best, _, _, _ = _bell_series(spec, params, times, num)
    grid = WignerGridSpec(
        radius=float(num["radius"]) or None,
        n_r=int(num["n_r"]), n_phi_beta=int(num["n_phi_beta"]),
        n_theta=int(num["n_theta"]), n_phi=int(num["n_phi"]), quad_tol=float(num["quad_tol"]),
    )
    rows = []
    for t, b in zip(times, best):
        res = negativity_volume(evolve(spec, params, float(t), _cutoff(num), num["tail_tol"]), grid)
        rows.append((t, b, max(b - 2.0, 0.0), res.volume, res.integral, res.residual))
    excess = np.array([r[2] for r in rows])
    vn = np.array([r[3] for r in rows])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rho = spearmanr(vn, excess).statistic if len(times) > 2 else float("nan")
    mx_v, mx_b = _local_maxima(vn), _local_maxima(excess)
    analysis = {
        "spearman": None if np.isnan(rho) else float(rho),
        "vn_local_maxima_t": [float(times[i]) for i in mx_v],
        "excess_local_maxima_t": [float(times[i]) for i in mx_b],
        "extrema_coincide": mx_v == mx_b,
    }
    names = ["t", "bell_max", "bell_excess", "v_n", "integral", "residual"]
    return _table(rows, names, _meta(cfg, analysis=analysis))


# ---------------------------------------------------------------------------
# catalog


@dataclass(frozen=True)
class Experiment:
    name: str
    figure: str
    description: str
    runner: Callable[[ExperimentConfig], ResultTable]
    columns: dict

    @property
    def default_config(self) -> str:
        return f"configs/{self.name}.toml"


_BELL = {"bell_max": "maximal CHSH value over the scanned pseudospin shifts", "best_q": "shift attaining it (first on ties)"}
_T = {"t": "dimensionless time lambda*t"}
_ENT = {"entropy": "qubit-marginal von Neumann entropy in bits"}
_STATUS = "ok, or the detection failure (t_cr and sat_value are -1 then)"

CATALOG = {
    e.name: e
    for e in [
        Experiment("fock_dynamics", "fig2", "Fock-state atom-field product, |B|max and entropy vs t", run_fock_dynamics,
                   {"k": "photon number", **_T, **_BELL, **_ENT}),
        Experiment("smsv_dynamics", "fig3", "squeezed-vacuum product, per-shift values vs t", run_smsv_dynamics,
                   {"r": "squeezing", **_T, **_BELL, "bell_q0": "value at shift 0", "bell_q1": "value at shift 1", **_ENT}),
        Experiment("coherent_heatmap", "fig4", "coherent product, |B|max over (|alpha|, t)", run_coherent_heatmap,
                   {"alpha": "displacement", **_T, **_BELL}),
        Experiment("classical_mixture", "fig5", "classically correlated mixture, |B|max vs t", run_classical_mixture,
                   {"alpha": "displacement", "p": "weight of the excited branch", **_T, **_BELL}),
        Experiment("cat_dynamics", "fig6", "hybrid cat state, |B|max and entropy vs t", run_cat_dynamics,
                   {"alpha": "displacement", **_T, **_BELL, **_ENT}),
        Experiment("cat_heatmap", "fig7", "hybrid cat state, |B|max over (|alpha|, t)", run_cat_heatmap,
                   {"alpha": "displacement", **_T, **_BELL}),
        Experiment("disorder_oracle", "fig8", "quenched average with settings re-optimized per realization", run_disorder_oracle,
                   {"k|alpha": "family parameter", "sigma": "coupling spread", **_T, "q_oracle": "quenched mean",
                    "stderr_oracle": "standard error of the mean", "t_cr": "saturation onset", "sat_value": "saturated mean",
                    "status": _STATUS}),
        Experiment("disorder_realistic", "fig9", "quenched average with settings frozen at the mean coupling", run_disorder_realistic,
                   {"k|alpha": "family parameter", "sigma": "coupling spread", **_T, "q_oracle": "oracle quenched mean",
                    "stderr_oracle": "its standard error", "q_real": "realistic quenched mean", "stderr_real": "its standard error",
                    "t_cr_oracle": "oracle saturation onset", "t_cr": "last loss of violation of the realistic series",
                    "status_oracle": _STATUS, "status": "ok, or always_violating (t_cr is -1 then)"}),
        Experiment("wigner_comparison", "fig10", "cat state, negative Wigner volume against Bell excess vs t", run_wigner_comparison,
                   {**_T, "bell_max": _BELL["bell_max"], "bell_excess": "max(bell_max - 2, 0)", "v_n": "negative Wigner volume",
                    "integral": "quadrature of W (should be 1)", "residual": "integral - 1"}),
    ]
}


def list_experiments() -> list:
    return [
        {"name": e.name, "figure": e.figure, "description": e.description, "default_config": e.default_config}
        for e in CATALOG.values()
    ]


def schema() -> dict:
    """Per-experiment column documentation, written next to every result."""
    return {e.name: {"figure": e.figure, "columns": e.columns} for e in CATALOG.values()}


def run(cfg: ExperimentConfig) -> ResultTable:
    return CATALOG[cfg.experiment].runner(cfg)


def run_and_write(cfg: ExperimentConfig, out_dir) -> tuple:
    """Run, then write the table, its metadata and ``schema.json`` into ``out_dir``."""
    table = run(cfg)
    paths = table.write(out_dir, cfg.experiment)
    (Path(out_dir) / "schema.json").write_text(json.dumps(schema(), indent=2, sort_keys=True))
    return table, paths
