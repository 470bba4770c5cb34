"""Command line driver: JSON config in, CSV/JSON tables out.

Usage: condmean <command> --config cfg.json --out outdir [--seed U64]
[--workers K].  Commands: fiber, tail, rcm, partition, wegner,
gauss-check, bounds-table.  Outputs are a deterministic function of
(config, seed, version): results.csv and results.json, plus
plot_<command>.csv for swept runs and an optional SVG chart.

Exit codes: 0 success, 2 malformed config (nothing written), 3 an
asserted bound check failed (outputs are still written), 4 runtime
failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .bounds import (
    fiber_tail_bound_linear,
    fiber_tail_bound_quadratic_uniform,
    fiber_tail_bound_sharper,
    modulus_tail_bound_linear,
    modulus_tail_bound_quadratic,
    modulus_tail_bound_quadratic_alpha,
    smooth_modulus_tail_bound,
    wegner_bound_gaussian,
)
from .distributions import (
    DensitySpec,
    Gaussian,
    SeedSpec,
    Smooth,
    Uniform,
    fiber_length_tail_exact_uniform,
    smooth_constants,
    smooth_density,
)
from .errors import CondMeanError
from .geometry import Sample, fiber_length_bruteforce, fiber_length_cube
from .montecarlo import (
    ExperimentConfig,
    MuRule,
    PartitionSpec,
    estimate_fiber_tail,
    estimate_local_partition,
    estimate_modulus_tail,
    gaussian_independence_check,
    mean_band_probability_n2,
    regularity_experiment,
)
from .spectral import GraphSpec, evc_experiment

COMMANDS = ("fiber", "tail", "rcm", "partition", "wegner", "gauss-check", "bounds-table")
_IDENTITY_TOL = 1e-9


@dataclass(frozen=True)
class RunManifest:
    """One resolved invocation of the driver."""

    command: str
    config_path: str
    out_dir: str
    seed: int | None = None
    workers: int | None = None


# ---------------------------------------------------------------------------
# config validation


def _check_keys(cfg: dict, allowed: set[str], errors: list[str]) -> None:
    for key in cfg:
        if key not in allowed:
            errors.append(f"unknown key {key!r} (allowed: {sorted(allowed)})")


def _get_number(cfg, key, errors, default=None, required=False, positive=False):
    if key not in cfg:
        if required:
            errors.append(f"missing required key {key!r}")
        return default
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        errors.append(f"{key!r} must be a number, got {v!r}")
        return default
    if positive and v <= 0:
        errors.append(f"{key!r} must be positive, got {v}")
        return default
    return float(v)


def _get_int(cfg, key, errors, default=None, required=False, minimum=None):
    if key not in cfg:
        if required:
            errors.append(f"missing required key {key!r}")
        return default
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v == int(v):
            v = int(v)
        else:
            errors.append(f"{key!r} must be an integer, got {v!r}")
            return default
    if minimum is not None and v < minimum:
        errors.append(f"{key!r} must be >= {minimum}, got {v}")
        return default
    return int(v)


def _get_list(cfg, key, errors, elem="number", required=False, default=None):
    """Accept a scalar or a list; return a list."""
    if key not in cfg:
        if required:
            errors.append(f"missing required key {key!r}")
        return default
    v = cfg[key]
    vals = v if isinstance(v, list) else [v]
    if not vals:
        errors.append(f"{key!r} must not be an empty list")
        return default
    out = []
    for item in vals:
        if isinstance(item, bool):
            errors.append(f"{key!r} entries must be {elem}s, got {item!r}")
            return default
        if elem == "int" and not isinstance(item, int):
            errors.append(f"{key!r} entries must be integers, got {item!r}")
            return default
        if elem == "number" and not isinstance(item, (int, float)):
            errors.append(f"{key!r} entries must be numbers, got {item!r}")
            return default
        out.append(item)
    return out


def _get_law(cfg, errors, default_kind=None, required=True) -> DensitySpec | None:
    obj = cfg.get("law")
    if obj is None:
        if default_kind == "gaussian":
            return Gaussian()
        if required:
            errors.append("missing required key 'law'")
        return None
    if not isinstance(obj, dict) or "kind" not in obj:
        errors.append("'law' must be an object with a 'kind'")
        return None
    kind = obj["kind"]
    try:
        if kind == "uniform":
            _check_keys(obj, {"kind", "ell", "offset"}, errors)
            return Uniform(
                ell=float(obj.get("ell", 1.0)), offset=float(obj.get("offset", 0.0))
            )
        if kind == "gaussian":
            _check_keys(obj, {"kind", "mean", "variance"}, errors)
            return Gaussian(
                mean=float(obj.get("mean", 0.0)),
                variance=float(obj.get("variance", 1.0)),
            )
        if kind == "smooth":
            _check_keys(obj, {"kind", "name", "beta", "ell"}, errors)
            return smooth_density(
                obj.get("name", "cosine-bump"),
                beta=float(obj.get("beta", 0.5)),
                ell=float(obj.get("ell", 1.0)),
            )
    except (CondMeanError, TypeError, ValueError) as exc:
        errors.append(f"bad law: {exc}")
        return None
    errors.append(f"unknown law kind {kind!r}")
    return None


def _get_graph(cfg, errors) -> GraphSpec | None:
    obj = cfg.get("graph")
    if not isinstance(obj, dict) or "kind" not in obj:
        errors.append("'graph' must be an object with a 'kind'")
        return None
    try:
        if obj["kind"] == "path":
            _check_keys(obj, {"kind", "n"}, errors)
            return GraphSpec.path(int(obj["n"]))
        if obj["kind"] == "box":
            _check_keys(obj, {"kind", "d", "side"}, errors)
            return GraphSpec.box(int(obj["d"]), int(obj["side"]))
    except (CondMeanError, TypeError, ValueError, KeyError) as exc:
        errors.append(f"bad graph: {exc}")
        return None
    errors.append(f"unknown graph kind {obj['kind']!r}")
    return None


_COMMON_KEYS = {"seed", "workers", "emit_svg", "trials"}


def validate_config(raw: dict, command: str) -> tuple[dict, list[str]]:
    """Normalize a raw config dict; return it with the full error list.

    Validation never stops at the first problem: a config with three
    mistakes reports all three.  The normalized dict carries parsed
    objects under private keys consumed by the runners.
    """
    errors: list[str] = []
    if command not in COMMANDS:
        return {}, [f"unknown command {command!r}"]
    if not isinstance(raw, dict):
        return {}, ["config root must be a JSON object"]
    cfg = dict(raw)
    norm: dict = {"command": command}

    norm["seed"] = _get_int(cfg, "seed", errors, default=None, minimum=0)
    norm["workers"] = _get_int(cfg, "workers", errors, default=None, minimum=1)
    norm["emit_svg"] = bool(cfg.get("emit_svg", False))
    norm["trials"] = _get_int(cfg, "trials", errors, default=100_000, minimum=1)

    if command == "fiber":
        _check_keys(cfg, _COMMON_KEYS | {"n", "ell", "samples_per_case", "step_rel"}, errors)
        norm["n"] = _get_list(cfg, "n", errors, elem="int", required=True)
        norm["ell"] = _get_list(cfg, "ell", errors, default=[1.0])
        norm["samples_per_case"] = _get_int(cfg, "samples_per_case", errors, default=50, minimum=1)
        norm["step_rel"] = _get_number(cfg, "step_rel", errors, default=1e-5, positive=True)
        for n in norm["n"] or []:
            if n < 2:
                errors.append(f"'n' entries must be >= 2, got {n}")
    elif command == "tail":
        _check_keys(
            cfg,
            _COMMON_KEYS | {"law", "n", "s", "delta", "alpha", "event", "r"},
            errors,
        )
        norm["law"] = _get_law(cfg, errors)
        norm["n"] = _get_list(cfg, "n", errors, elem="int", required=True)
        for n in norm["n"] or []:
            if n < 2:
                errors.append(f"'n' entries must be >= 2, got {n}")
        norm["s"] = _get_list(cfg, "s", errors, required=True)
        for s in norm["s"] or []:
            if s <= 0:
                errors.append(f"'s' entries must be positive, got {s}")
        norm["delta"] = _get_list(cfg, "delta", errors, default=None)
        for d in norm["delta"] or []:
            if d <= 0:
                errors.append(f"'delta' entries must be positive, got {d}")
        norm["alpha"] = _get_number(cfg, "alpha", errors, default=None)
        norm["event"] = cfg.get("event", "modulus")
        norm["r"] = _get_list(cfg, "r", errors, default=None)
        if norm["event"] not in ("modulus", "fiber-length"):
            errors.append(f"'event' must be 'modulus' or 'fiber-length', got {norm['event']!r}")
        if norm["event"] == "modulus":
            if (norm["delta"] is None) == (norm["alpha"] is None):
                errors.append("exactly one of 'delta' or 'alpha' is required")
        elif norm["r"] is None:
            errors.append("'r' is required for the fiber-length event")
    elif command == "rcm":
        _check_keys(cfg, _COMMON_KEYS | {"graph", "radius", "ell", "alpha", "s"}, errors)
        norm["graph"] = _get_graph(cfg, errors)
        norm["radius"] = _get_int(cfg, "radius", errors, required=True, minimum=1)
        norm["ell"] = _get_number(cfg, "ell", errors, default=1.0, positive=True)
        norm["alpha"] = _get_number(cfg, "alpha", errors, default=1.0 / 3.0, positive=True)
        norm["s"] = _get_list(cfg, "s", errors, required=True)
        for s in norm["s"] or []:
            if s <= 0:
                errors.append(f"'s' entries must be positive, got {s}")
        if norm["alpha"] is not None and not 0 < norm["alpha"] < 1:
            errors.append(f"'alpha' must lie in (0, 1), got {norm['alpha']}")
    elif command == "partition":
        _check_keys(
            cfg,
            _COMMON_KEYS | {"law", "n", "s", "mu", "cut_points", "random_partitions"},
            errors,
        )
        norm["law"] = _get_law(cfg, errors)
        norm["n"] = _get_int(cfg, "n", errors, required=True, minimum=2)
        norm["s"] = _get_number(cfg, "s", errors, required=True, positive=True)
        mu = cfg.get("mu", {"kind": "constant", "value": 0.0})
        if not isinstance(mu, dict) or mu.get("kind") not in ("constant", "median-eta"):
            errors.append("'mu' must be {'kind': 'constant'|'median-eta', ...}")
        else:
            norm["mu"] = MuRule(kind=mu["kind"], value=float(mu.get("value", 0.0)))
        has_cuts = "cut_points" in cfg
        has_random = "random_partitions" in cfg
        if has_cuts == has_random:
            errors.append("exactly one of 'cut_points' or 'random_partitions' is required")
        elif has_cuts:
            pts = _get_list(cfg, "cut_points", errors, required=True)
            if pts is not None:
                try:
                    norm["partitions"] = [PartitionSpec(tuple(pts))]
                except CondMeanError as exc:
                    errors.append(str(exc))
        else:
            rp = cfg["random_partitions"]
            if not isinstance(rp, dict):
                errors.append("'random_partitions' must be an object")
            else:
                _check_keys(rp, {"count", "min_intervals", "max_intervals", "min_width"}, errors)
                norm["random_partitions"] = {
                    "count": _get_int(rp, "count", errors, default=20, minimum=1),
                    "min_intervals": _get_int(rp, "min_intervals", errors, default=2, minimum=1),
                    "max_intervals": _get_int(rp, "max_intervals", errors, default=4, minimum=1),
                    "min_width": _get_number(rp, "min_width", errors, default=0.05, positive=True),
                }
    elif command == "wegner":
        _check_keys(
            cfg,
            _COMMON_KEYS | {"graph", "law", "interval_len", "t_min", "t_max", "t_points", "kinetic"},
            errors,
        )
        norm["graph"] = _get_graph(cfg, errors)
        norm["law"] = _get_law(cfg, errors, default_kind="gaussian", required=False)
        norm["interval_len"] = _get_number(cfg, "interval_len", errors, required=True, positive=True)
        norm["t_min"] = _get_number(cfg, "t_min", errors, required=True)
        norm["t_max"] = _get_number(cfg, "t_max", errors, required=True)
        norm["t_points"] = _get_int(cfg, "t_points", errors, default=21, minimum=1)
        norm["kinetic"] = cfg.get("kinetic", "adjacency")
        if norm["kinetic"] not in ("adjacency", "laplacian"):
            errors.append(f"'kinetic' must be 'adjacency' or 'laplacian', got {norm['kinetic']!r}")
        if (
            norm["t_min"] is not None
            and norm["t_max"] is not None
            and norm["t_max"] < norm["t_min"]
        ):
            errors.append("'t_max' must be >= 't_min'")
    elif command == "gauss-check":
        _check_keys(
            cfg,
            _COMMON_KEYS
            | {"n", "quantile_bins", "hist_bin_width", "window_s", "ks_tol", "peak_slack"},
            errors,
        )
        norm["n"] = _get_int(cfg, "n", errors, required=True, minimum=2)
        norm["quantile_bins"] = _get_int(cfg, "quantile_bins", errors, default=10, minimum=2)
        norm["hist_bin_width"] = _get_number(cfg, "hist_bin_width", errors, default=0.02, positive=True)
        norm["window_s"] = _get_number(cfg, "window_s", errors, default=0.1, positive=True)
        norm["ks_tol"] = _get_number(cfg, "ks_tol", errors, default=0.01, positive=True)
        norm["peak_slack"] = _get_number(cfg, "peak_slack", errors, default=1.05, positive=True)
    elif command == "bounds-table":
        _check_keys(cfg, _COMMON_KEYS | {"n", "ell", "delta", "s", "alpha", "smooth"}, errors)
        norm["n"] = _get_list(cfg, "n", errors, elem="int", required=True)
        norm["ell"] = _get_number(cfg, "ell", errors, default=1.0, positive=True)
        norm["delta"] = _get_list(cfg, "delta", errors, required=True)
        norm["s"] = _get_list(cfg, "s", errors, default=None)
        norm["alpha"] = _get_number(cfg, "alpha", errors, default=None)
        smooth = cfg.get("smooth")
        if smooth is not None:
            if not isinstance(smooth, dict):
                errors.append("'smooth' must be an object")
            else:
                _check_keys(smooth, {"name", "beta", "ell"}, errors)
                try:
                    norm["smooth"] = smooth_density(
                        smooth.get("name", "cosine-bump"),
                        beta=float(smooth.get("beta", 0.5)),
                        ell=float(smooth.get("ell", norm["ell"] or 1.0)),
                    )
                except CondMeanError as exc:
                    errors.append(f"bad smooth law: {exc}")
    return norm, errors


# ---------------------------------------------------------------------------
# command runners; each returns (records, plots, violated)


def _run_fiber(norm, seed, workers):
    del workers
    records = []
    violated = False
    step_rel = norm["step_rel"]
    rng_spec = SeedSpec(seed, 0)
    case = 0
    for n, ell in itertools.product(norm["n"], norm["ell"]):
        rng = rng_spec.rng(case)
        worst = 0.0
        for _ in range(norm["samples_per_case"]):
            sample = Sample(ell * rng.random(n))
            geom = fiber_length_cube(sample, ell)
            step = step_rel * ell
            measured = fiber_length_bruteforce(sample, ell, step=step)
            worst = max(worst, abs(geom.length - measured))
        tol = 2.0 * step_rel * ell * math.sqrt(n)
        ok = worst <= tol
        violated |= not ok
        records.append(
            {
                "case": case,
                "n": n,
                "ell": ell,
                "samples": norm["samples_per_case"],
                "step": step_rel * ell,
                "max_abs_diff": worst,
                "tolerance": tol,
                "asserted": True,
                "ok": ok,
            }
        )
        case += 1
    plots = []
    if len(records) > 1:
        plots.append(("fiber", [r["case"] for r in records], [r["max_abs_diff"] for r in records]))
    return records, plots, violated


def _tail_bounds_uniform(n, ell, s, delta, exact):
    lin = modulus_tail_bound_linear(n, ell, min(delta, ell))
    if delta <= s <= ell:
        quad = modulus_tail_bound_quadratic(n, ell, delta, s)
    else:
        quad = min(1.0, (n * delta) ** 2 / (4.0 * ell**2))
    confirmed = exact <= quad * (1.0 + 1e-9) + 1e-15
    return lin, quad, confirmed


def _run_tail(norm, seed, workers):
    law = norm["law"]
    records = []
    plots = []
    violated = False
    case = 0
    if norm["event"] == "fiber-length":
        grid = list(itertools.product(norm["n"], norm["r"]))
        for n, r in grid:
            cfg = ExperimentConfig(
                law=law,
                n=n,
                s=1.0,
                trials=norm["trials"],
                seed=SeedSpec(seed, case),
                delta=1.0,
                workers=workers,
            )
            res = estimate_fiber_tail(cfg, r)
            est = res.estimate
            rec = {
                "case": case,
                "n": n,
                "r": r,
                "trials": est.trials,
                "hits": est.hits,
                "p_hat": est.p_hat,
                "stderr": est.stderr,
                "ci_low": est.ci_low,
                "ci_high": est.ci_high,
                "exact": res.exact,
            }
            if isinstance(law, Uniform) and 0 < r <= law.ell:
                rec["bound_linear"] = fiber_tail_bound_linear(n, law.ell, r)
                rec["bound_sharper"] = fiber_tail_bound_sharper(n, law.ell, r)
                rec["bound_quadratic"] = fiber_tail_bound_quadratic_uniform(n, law.ell, r)
                rec["asserted"] = True
                rec["ok"] = est.p_hat <= rec["bound_linear"] + 4.0 * est.stderr
                violated |= not rec["ok"]
            else:
                rec["asserted"] = False
                rec["ok"] = None
            records.append(rec)
            case += 1
        if len(records) > 1:
            plots.append(("tail", [r["r"] for r in records], [r["p_hat"] for r in records]))
        return records, plots, violated

    deltas = norm["delta"] if norm["delta"] is not None else [None]
    grid = list(itertools.product(norm["n"], norm["s"], deltas))
    for n, s, delta in grid:
        cfg = ExperimentConfig(
            law=law,
            n=n,
            s=s,
            trials=norm["trials"],
            seed=SeedSpec(seed, case),
            delta=delta,
            alpha=None if delta is not None else norm["alpha"],
            workers=workers,
        )
        res = estimate_modulus_tail(cfg)
        est = res.estimate
        d = res.threshold_delta
        rec = {
            "case": case,
            "n": n,
            "s": s,
            "delta": d,
            "trials": est.trials,
            "hits": est.hits,
            "p_hat": est.p_hat,
            "stderr": est.stderr,
            "ci_low": est.ci_low,
            "ci_high": est.ci_high,
            "exact": res.exact,
        }
        asserted = False
        ok = None
        if isinstance(law, Uniform):
            lin, quad, confirmed = _tail_bounds_uniform(n, law.ell, s, d, res.exact)
            rec["bound_linear"] = lin
            rec["bound_quadratic"] = quad
            rec["quadratic_confirmed"] = confirmed
            asserted = True
            ok = est.p_hat <= lin + 4.0 * est.stderr
            if confirmed:
                ok = ok and est.p_hat <= quad + 4.0 * est.stderr
        elif isinstance(law, Smooth):
            refined = smooth_modulus_tail_bound(
                n, law.ell, law.rho_max, d, smooth_constants(law)
            )
            rec["bound_refined"] = refined.value
            rec["refined_admissible"] = refined.admissible
            rec["delta_max"] = refined.delta_max
            if refined.admissible:
                asserted = True
                ok = est.p_hat <= refined.value + 4.0 * est.stderr
        rec["asserted"] = asserted
        rec["ok"] = ok
        if asserted:
            violated |= not ok
        records.append(rec)
        case += 1
    if len(records) > 1:
        xkey = "delta" if len(set(r["delta"] for r in records)) > 1 else "n"
        plots.append(("tail", [r[xkey] for r in records], [r["p_hat"] for r in records]))
    return records, plots, violated


def _run_rcm(norm, seed, workers):
    law = Uniform(ell=norm["ell"])
    graph = norm["graph"]
    records = []
    violated = False
    for case, s in enumerate(norm["s"]):
        rep = regularity_experiment(
            law,
            graph,
            norm["radius"],
            s,
            norm["alpha"],
            norm["trials"],
            SeedSpec(seed, case),
            workers=workers,
        )
        asserted = rep.exact_confirms
        ok = rep.ok if asserted else None
        violated |= asserted and not rep.ok
        violated |= not rep.growth_ok
        records.append(
            {
                "case": case,
                "q_size": rep.q_size,
                "radius": rep.radius,
                "s": s,
                "alpha": rep.alpha,
                "threshold": rep.threshold,
                "ceiling": rep.ceiling,
                "trials": rep.estimate.trials,
                "hits": rep.estimate.hits,
                "p_hat": rep.estimate.p_hat,
                "stderr": rep.estimate.stderr,
                "exact": rep.exact,
                "exact_confirms": rep.exact_confirms,
                "growth_ok": rep.growth_ok,
                "asserted": asserted,
                "ok": ok,
            }
        )
    plots = []
    if len(records) > 1:
        plots.append(("rcm", [r["s"] for r in records], [r["p_hat"] for r in records]))
    return records, plots, violated


def _random_partitions(law, spec, seed):
    """Deterministic random partitions from a reserved stream."""
    lo = law.offset if isinstance(law, Uniform) else 0.0
    hi = lo + law.ell
    rng = SeedSpec(seed, 1 << 16).rng()
    out = []
    for _ in range(spec["count"]):
        k = int(rng.integers(spec["min_intervals"], spec["max_intervals"] + 1))
        for _ in range(1000):
            cuts = np.sort(rng.random(k - 1)) * law.ell + lo
            pts = np.concatenate([[lo], cuts, [hi]])
            if np.diff(pts).min() >= spec["min_width"] * law.ell:
                out.append(PartitionSpec(tuple(pts)))
                break
        else:
            raise CondMeanError("could not draw a partition with the width floor")
    return out


def _run_partition(norm, seed, workers):
    law = norm["law"]
    mu: MuRule = norm["mu"]
    partitions = norm.get("partitions")
    if partitions is None:
        partitions = _random_partitions(law, norm["random_partitions"], seed)
    records = []
    violated = False
    for case, part in enumerate(partitions):
        cfg = ExperimentConfig(
            law=law,
            n=norm["n"],
            s=norm["s"],
            trials=norm["trials"],
            seed=SeedSpec(seed, case),
            delta=1.0,
            workers=workers,
        )
        rep = estimate_local_partition(cfg, part, mu)
        exact = None
        if isinstance(law, Uniform) and norm["n"] == 2:
            mu0 = mu.value if mu.kind == "constant" else 0.0
            exact = mean_band_probability_n2(
                law.ell, mu0 - law.offset, mu0 - law.offset + norm["s"]
            )
        ok = rep.agree_ok and rep.sup_ok
        if exact is not None:
            ok = ok and abs(rep.direct.p_hat - exact) <= 4.0 * rep.direct.stderr
        violated |= not ok
        records.append(
            {
                "case": case,
                "n": norm["n"],
                "s": norm["s"],
                "intervals": part.num_intervals,
                "trials": rep.direct.trials,
                "direct_p": rep.direct.p_hat,
                "direct_stderr": rep.direct.stderr,
                "decomposed_p": rep.decomposed,
                "decomposed_stderr": rep.decomposed_stderr,
                "agree_ok": rep.agree_ok,
                "sup_conditional": rep.sup_conditional,
                "sup_ok": rep.sup_ok,
                "dropped_prob": rep.dropped_prob,
                "exact": exact,
                "asserted": True,
                "ok": ok,
            }
        )
    plots = []
    if len(records) > 1:
        plots.append(
            ("partition", [r["case"] for r in records], [r["direct_p"] for r in records])
        )
    return records, plots, violated


def _run_wegner(norm, seed, workers):
    graph = norm["graph"]
    law = norm["law"]
    ts = np.linspace(norm["t_min"], norm["t_max"], norm["t_points"])
    records = []
    violated = False
    for case, t in enumerate(ts):
        rep = evc_experiment(
            graph,
            law,
            float(t),
            norm["interval_len"],
            norm["trials"],
            SeedSpec(seed, case),
            kinetic=norm["kinetic"],
            workers=workers,
        )
        identity_ok = rep.identity_max_rel <= _IDENTITY_TOL
        ok = identity_ok
        if rep.bound is not None:
            ok = ok and rep.bound_ok
        violated |= not ok
        records.append(
            {
                "case": case,
                "t": float(t),
                "interval_len": norm["interval_len"],
                "volume": rep.volume,
                "trials": rep.estimate.trials,
                "hits": rep.estimate.hits,
                "p_hat": rep.estimate.p_hat,
                "stderr": rep.estimate.stderr,
                "mean_count": rep.mean_count,
                "identity_max_rel": rep.identity_max_rel,
                "identity_ok": identity_ok,
                "bound": rep.bound,
                "bound_ok": rep.bound_ok,
                "nu_ceiling": rep.nu_ceiling,
                "asserted": True,
                "ok": ok,
            }
        )
    plots = [("wegner", [r["t"] for r in records], [r["p_hat"] for r in records])]
    return records, plots, violated


def _run_gauss_check(norm, seed, workers):
    rep = gaussian_independence_check(
        norm["n"],
        norm["trials"],
        SeedSpec(seed, 0),
        quantile_bins=norm["quantile_bins"],
        hist_bin_width=norm["hist_bin_width"],
        window_s=norm["window_s"],
        workers=workers,
    )
    ks_ok = rep.max_ks <= norm["ks_tol"]
    peak_ok = rep.peak_density <= rep.density_bound * norm["peak_slack"]
    window_se = math.sqrt(max(rep.window_exact * (1 - rep.window_exact), 1e-12) / norm["trials"])
    window_ok = abs(rep.window_sup - rep.window_exact) <= 4.0 * window_se + 1e-3
    violated = not (ks_ok and peak_ok)
    records = []
    for b, ks in enumerate(rep.bin_ks):
        records.append(
            {
                "bin": b,
                "ks": ks,
                "max_ks": rep.max_ks,
                "ks_tol": norm["ks_tol"],
                "ks_ok": ks_ok,
                "peak_density": rep.peak_density,
                "density_bound": rep.density_bound,
                "peak_ok": peak_ok,
                "window_s": rep.window_s,
                "window_sup": rep.window_sup,
                "window_exact": rep.window_exact,
                "window_ok": window_ok,
                "asserted": True,
                "ok": ks_ok and peak_ok,
            }
        )
    plots = [("gauss_check", [r["bin"] for r in records], [r["ks"] for r in records])]
    return records, plots, violated


def _run_bounds_table(norm, seed, workers):
    del seed, workers
    ell = norm["ell"]
    svals = norm["s"] if norm["s"] is not None else [None]
    records = []
    case = 0
    for n, delta, s in itertools.product(norm["n"], norm["delta"], svals):
        s_eff = delta if s is None else s
        rec = {"case": case, "n": n, "ell": ell, "delta": delta, "s": s_eff}
        rec["bound_linear"] = (
            fiber_tail_bound_linear(n, ell, delta) if 0 < delta <= ell else 1.0
        )
        rec["bound_sharper"] = (
            fiber_tail_bound_sharper(n, ell, delta) if 0 < delta <= ell else 1.0
        )
        if 0 < delta <= s_eff <= ell:
            rec["bound_quadratic"] = modulus_tail_bound_quadratic(n, ell, delta, s_eff)
        else:
            rec["bound_quadratic"] = min(1.0, (n * delta) ** 2 / (4.0 * ell**2))
        if norm["alpha"] is not None:
            rec["bound_quadratic_alpha"] = modulus_tail_bound_quadratic_alpha(
                n, ell, s_eff, norm["alpha"]
            )
        if "smooth" in norm:
            law: Smooth = norm["smooth"]
            refined = smooth_modulus_tail_bound(
                n, law.ell, law.rho_max, delta, smooth_constants(law)
            )
            rec["bound_refined"] = refined.value
            rec["refined_admissible"] = refined.admissible
            rec["delta_max"] = refined.delta_max
        rec["exact_uniform"] = fiber_length_tail_exact_uniform(
            n, ell, math.sqrt(n) * delta
        )
        rec["wegner_gaussian"] = wegner_bound_gaussian(n, delta)
        records.append(rec)
        case += 1
    plots = []
    if len(records) > 1:
        plots.append(
            ("bounds_table", [r["case"] for r in records], [r["bound_quadratic"] for r in records])
        )
    return records, plots, False


_RUNNERS = {
    "fiber": _run_fiber,
    "tail": _run_tail,
    "rcm": _run_rcm,
    "partition": _run_partition,
    "wegner": _run_wegner,
    "gauss-check": _run_gauss_check,
    "bounds-table": _run_bounds_table,
}


# ---------------------------------------------------------------------------
# output writing


def _fmt_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def _header_line(command: str, seed: int, config_hash: str) -> str:
    return f"# condmean={__version__} command={command} seed={seed} config_sha256={config_hash}"


def _write_csv(path: str, header: str, records: list[dict]) -> None:
    fields = list(records[0].keys()) if records else []
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(header + "\r\n")
        writer = csv.writer(fh)
        writer.writerow(fields)
        for rec in records:
            writer.writerow([_fmt_cell(rec.get(k)) for k in fields])


def _write_plot(path: str, header: str, xs, ys) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(header + "\r\n")
        writer = csv.writer(fh)
        writer.writerow(["x", "y"])
        for x, y in zip(xs, ys):
            writer.writerow([_fmt_cell(_jsonable(x)), _fmt_cell(_jsonable(y))])


def _write_svg(path: str, header: str, xs, ys, title: str) -> None:
    """Minimal polyline chart; no external plotting dependency."""
    w, h, m = 640, 400, 50
    xs = [float(x) for x in xs]
    ys = [float(y) for y in ys]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    xr = (x1 - x0) or 1.0
    yr = (y1 - y0) or 1.0
    pts = " ".join(
        f"{m + (x - x0) / xr * (w - 2 * m):.2f},{h - m - (y - y0) / yr * (h - 2 * m):.2f}"
        for x, y in zip(xs, ys)
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"<!-- {header} -->\n")
        fh.write(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">\n'
            f'<rect width="{w}" height="{h}" fill="white"/>\n'
            f'<text x="{w // 2}" y="20" text-anchor="middle" font-size="14">{title}</text>\n'
            f'<line x1="{m}" y1="{h - m}" x2="{w - m}" y2="{h - m}" stroke="black"/>\n'
            f'<line x1="{m}" y1="{m}" x2="{m}" y2="{h - m}" stroke="black"/>\n'
            f'<text x="{m}" y="{h - m + 20}" font-size="10">{x0:.6g}</text>\n'
            f'<text x="{w - m}" y="{h - m + 20}" text-anchor="end" font-size="10">{x1:.6g}</text>\n'
            f'<text x="{m - 5}" y="{h - m}" text-anchor="end" font-size="10">{y0:.6g}</text>\n'
            f'<text x="{m - 5}" y="{m}" text-anchor="end" font-size="10">{y1:.6g}</text>\n'
            f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="1.5"/>\n'
            "</svg>\n"
        )


def run(manifest: RunManifest) -> int:
    """Execute one command; returns the process exit code."""
    try:
        with open(manifest.config_path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    norm, errors = validate_config(raw, manifest.command)
    if errors:
        for e in errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2

    seed = manifest.seed if manifest.seed is not None else norm.get("seed")
    if seed is None:
        seed = 0
    workers = manifest.workers if manifest.workers is not None else norm.get("workers")

    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    config_hash = hashlib.sha256(canonical.encode()).hexdigest()
    header = _header_line(manifest.command, seed, config_hash)

    try:
        records, plots, violated = _RUNNERS[manifest.command](norm, seed, workers)
    except CondMeanError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 4

    os.makedirs(manifest.out_dir, exist_ok=True)
    records = [{k: _jsonable(v) for k, v in rec.items()} for rec in records]
    _write_csv(os.path.join(manifest.out_dir, "results.csv"), header, records)
    meta = {
        "version": __version__,
        "command": manifest.command,
        "seed": seed,
        "config_sha256": config_hash,
    }
    with open(os.path.join(manifest.out_dir, "results.json"), "w", encoding="utf-8") as fh:
        json.dump({"meta": meta, "records": records}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for name, xs, ys in plots:
        _write_plot(os.path.join(manifest.out_dir, f"plot_{name}.csv"), header, xs, ys)
        if norm.get("emit_svg"):
            _write_svg(
                os.path.join(manifest.out_dir, f"plot_{name}.svg"),
                header,
                xs,
                ys,
                f"{manifest.command}: {name}",
            )
    return 3 if violated else 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="condmean",
        description="Fiber-length and continuity-modulus experiments for the "
        "conditional law of a sample mean.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to a JSON config")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="master seed (u64)")
    parser.add_argument("--workers", type=int, default=None, help="thread count")
    args = parser.parse_args(argv)
    manifest = RunManifest(
        command=args.command,
        config_path=args.config,
        out_dir=args.out,
        seed=args.seed,
        workers=args.workers,
    )
    return run(manifest)


if __name__ == "__main__":
    sys.exit(main())
