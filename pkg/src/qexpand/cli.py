"""Reproducible command-line front end.

Every command is a pure function of its configuration and the tool version:
fixed seeds reproduce all numeric outputs bit-exactly. Each run writes its
declared artifacts plus ``run.json`` (configuration, timestamps, artifact
list, summary metrics and a one-line statement of the claim the command
exercises).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, QexError
from .expanders import (
    GroupPresentation,
    cayley_regular_tuple,
    certify,
    classical_gap,
    haar_tuple,
    mixing_curve,
)
from .geometry import (
    dcb_lower_bound,
    delta_overlap,
    find_norming_tuple,
    lower_bound_from_separation,
    near_norming_radius,
    orbit_distance,
    separation,
    strong_separation_estimate,
)
from .linalg import MatrixTuple, RngSpec, load_tuple, save_tuple
from .packing import (
    greedy_cover,
    greedy_pack,
    net_size_bound,
    packing_upper_bound,
    subgaussian_tail_check,
)
from .parallel import set_workers
from .randmat import (
    bootstrap_mean_ci,
    chi_n_estimate,
    gaussian_decoupled_norm,
    matrix_coefficient_sum,
    twirl_identity_check,
    unitary_sum_norm,
)
from .superop import spectral_gap

# One-line statement of what each command measures, recorded for traceability.
CLAIMS = {
    "sample-haar": "independent Haar unitaries via the Ginibre polar factor",
    "cayley": "regular-representation tuple of a finite group presentation",
    "certify": "contraction certificate eps = 1 - gap/n and Ramanujan slack",
    "gap": "norm of the twirl superoperator on the trace-zero subspace",
    "mix": "geometric decay of channel iterates toward the normalized trace",
    "separate": "pair separation delta from the cross superoperator norm",
    "orbit-dist": "upper bound on the two-sided unitary orbit distance",
    "strong-sep": "estimated separation against all unitary recombinations",
    "norming": "norming-tuple search; gapped tuples are normed only on their orbit",
    "delta-overlap": "largest off-diagonal normalized trace overlap, scaled by n^2",
    "dcb-bound": "conditional cb-distance lower bound (1 - delta)^-1",
    "pack": "greedy delta-separated packing of certified expander tuples",
    "cover": "farthest-point covering estimate of a tuple cloud",
    "bounds": "closed-form packing/net count bounds and separation radii",
    "subgauss": "subGaussian tail check for sums of unitary traces",
    "appendix": "unitary-vs-Gaussian norm comparison statistics",
    "validate": "tuple file schema and unitarity validation",
}

_PARAM_TYPES = {
    "n": int, "N": int, "k": int, "steps": int, "samples": int, "restarts": int,
    "max_samples": int, "order": int,
    "eps": float, "delta": float, "delta_strong": float, "overlap": float,
    "radius": float, "tol": float, "eps_prime": float,
    "tuple": str, "u": str, "v": str, "x0": str, "group": str, "tuples": str,
    "metric": str, "method": str, "experiment": str, "coeffs": str,
    "eps_grid": str, "delta_grid": str,
}


@dataclass
class ExperimentConfig:
    command: str
    params: dict
    seed: RngSpec
    out_dir: str

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "params": dict(self.params),
            "seed": self.seed.to_json(),
            "out_dir": self.out_dir,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(obj) - {"command", "params", "seed", "out_dir"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("command", "params", "seed", "out_dir"):
            if key not in obj:
                raise ConfigError(f"config missing key '{key}'")
        command = obj["command"]
        if command not in CLAIMS:
            raise ConfigError(f"unknown command {command!r}")
        params = obj["params"]
        if not isinstance(params, dict):
            raise ConfigError("params must be an object")
        for key, val in params.items():
            want = _PARAM_TYPES.get(key)
            if want is None:
                raise ConfigError(f"unknown param key {key!r}")
            if want is float and isinstance(val, (int, float)) and not isinstance(val, bool):
                continue
            if not isinstance(val, want) or isinstance(val, bool):
                raise ConfigError(f"param {key!r} must be {want.__name__}, got {val!r}")
        try:
            seed = RngSpec.from_json(obj["seed"])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad seed spec: {exc}") from exc
        return cls(command, dict(params), seed, str(obj["out_dir"]))


@dataclass
class RunRecord:
    config: ExperimentConfig
    started: str
    finished: str
    artifacts: list[str]
    summary: dict
    tool_version: str = __version__
    claim: str = ""

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "started": self.started,
            "finished": self.finished,
            "artifacts": list(self.artifacts),
            "summary": self.summary,
            "tool_version": self.tool_version,
            "claim": self.claim,
        }


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _need(cfg: ExperimentConfig, *keys):
    for key in keys:
        if key not in cfg.params:
            raise ConfigError(f"command '{cfg.command}' requires param '{key}'")
    return [cfg.params[k] for k in keys]


def _get(cfg, key, default):
    return cfg.params.get(key, default)


def _write_json(path: Path, obj: dict):
    path.write_text(json.dumps(obj, indent=2) + "\n")


def _write_csv(path: Path, rows):
    with path.open("w", newline="") as fh:
        csv.writer(fh).writerows(rows)


def _g17(x) -> str:
    return format(float(x), ".17g")


def _load(cfg, key) -> MatrixTuple:
    (path,) = _need(cfg, key)
    return load_tuple(path)


# --- command handlers: each returns (artifact paths, summary dict) ----------

def _cmd_sample_haar(cfg, out):
    n, N = _need(cfg, "n", "N")
    t = haar_tuple(n, N, cfg.seed.generator())
    path = out / "tuple.json"
    save_tuple(path, t)
    return [path], {"n": n, "N": N, "unitarity_residual": t.unitarity_residual()}


def _cmd_cayley(cfg, out):
    (gpath,) = _need(cfg, "group")
    g = GroupPresentation.load(gpath)
    t = cayley_regular_tuple(g)
    path = out / "tuple.json"
    save_tuple(path, t)
    return [path], {"n": g.n, "N": g.order, "classical_gap": classical_gap(g)}


def _cmd_certify(cfg, out):
    t = _load(cfg, "tuple")
    cert = certify(
        t,
        tol=_get(cfg, "tol", 1e-10),
        method=_get(cfg, "method", "auto"),
        rng=cfg.seed.generator(),
    )
    path = out / "certificate.json"
    _write_json(path, cert.to_json())
    return [path], {
        "epsilon": cert.epsilon,
        "ramanujan_slack": cert.ramanujan_slack,
        "gap": cert.gap.value,
    }


def _cmd_gap(cfg, out):
    t = _load(cfg, "tuple")
    rep = spectral_gap(
        t,
        method=_get(cfg, "method", "auto"),
        tol=_get(cfg, "tol", 1e-10),
        rng=cfg.seed.generator(),
    )
    path = out / "gap.json"
    _write_json(path, rep.to_json())
    artifacts = [path]
    if rep.top_vector is not None:
        wpath = out / "witness.json"
        save_tuple(wpath, MatrixTuple(rep.top_vector[None]))
        artifacts.append(wpath)
    return artifacts, {"value": rep.value, "method": rep.method}


def _cmd_mix(cfg, out):
    t = _load(cfg, "tuple")
    steps = _get(cfg, "steps", 50)
    if "x0" in cfg.params:
        x0 = load_tuple(cfg.params["x0"])[0]
    else:
        gen = cfg.seed.generator()
        x0 = gen.standard_normal((t.dim, t.dim)) + 1j * gen.standard_normal((t.dim, t.dim))
    curve = mixing_curve(t, x0, steps)
    path = out / "mix.csv"
    _write_csv(path, [["k", "residual"]] + [[k, _g17(r)] for k, r in enumerate(curve)])
    return [path], {"steps": steps, "final_residual": float(curve[-1])}


def _cmd_separate(cfg, out):
    u = _load(cfg, "u")
    v = load_tuple(cfg.params["v"]) if "v" in cfg.params else None
    if v is None:
        raise ConfigError("command 'separate' requires param 'v'")
    rep = separation(u, v, method=_get(cfg, "method", "auto"), rng=cfg.seed.generator())
    path = out / "separation.json"
    _write_json(path, rep.to_json())
    return [path], {"delta": rep.delta, "norm_value": rep.norm_value}


def _cmd_orbit_dist(cfg, out):
    u, v = load_tuple(_need(cfg, "u")[0]), load_tuple(_need(cfg, "v")[0])
    rep = orbit_distance(
        u, v, restarts=_get(cfg, "restarts", 20), rng=cfg.seed.generator()
    )
    path = out / "orbit.json"
    _write_json(path, rep.to_json())
    return [path], {"upper": rep.upper, "lower": rep.lower}


def _cmd_strong_sep(cfg, out):
    u, v = load_tuple(_need(cfg, "u")[0]), load_tuple(_need(cfg, "v")[0])
    est = strong_separation_estimate(
        u, v, restarts=_get(cfg, "restarts", 20), rng=cfg.seed.generator()
    )
    path = out / "strong.json"
    payload = {
        "estimate_norm_over_n": est,
        "estimated_strong_delta": max(1.0 - est, 0.0),
        "qualifier": "estimated (lower bound on the supremum; not a certificate)",
    }
    _write_json(path, payload)
    print("strong-sep: estimated value (ascent lower bound, not a certificate)")
    return [path], payload


def _cmd_norming(cfg, out):
    x = _load(cfg, "tuple")
    v, attained = find_norming_tuple(
        x, restarts=_get(cfg, "restarts", 20), rng=cfg.seed.generator()
    )
    wpath = out / "norming_witness.json"
    save_tuple(wpath, v)
    jpath = out / "norming.json"
    _write_json(jpath, {"attained": attained, "n": x.n, "witness": wpath.name})
    return [wpath, jpath], {"attained": attained}


def _cmd_delta_overlap(cfg, out):
    t = _load(cfg, "tuple")
    val = delta_overlap(t)
    path = out / "overlap.json"
    _write_json(path, {"overlap": val, "n": t.n, "N": t.dim})
    return [path], {"overlap": val}


def _cmd_dcb_bound(cfg, out):
    delta_strong, overlap, n = _need(cfg, "delta_strong", "overlap", "n")
    bound = dcb_lower_bound(delta_strong, overlap, n)
    path = out / "dcb.json"
    _write_json(
        path,
        {
            "bound": bound,
            "delta_strong": delta_strong,
            "overlap": overlap,
            "qualifier": "conditional on delta_strong being a true strong-separation constant",
        },
    )
    return [path], {"bound": bound}


def _cmd_pack(cfg, out):
    n, N, eps, delta, max_samples = _need(cfg, "n", "N", "eps", "delta", "max_samples")
    fam = greedy_pack(n, N, eps, delta, max_samples, cfg.seed)
    paths = fam.save(out)
    return paths, {
        "members": fam.count,
        "rejected": fam.rejected_count,
        "log_count": fam.log_count() if fam.count else None,
    }


def _cmd_cover(cfg, out):
    (pattern,) = _need(cfg, "tuples")
    radius = _need(cfg, "radius")[0]
    files = sorted(Path().glob(pattern)) if any(
        ch in pattern for ch in "*?["
    ) else sorted(Path(pattern).glob("*.json"))
    points = [load_tuple(p) for p in files if p.name not in ("meta.json", "run.json")]
    if not points:
        raise ConfigError(f"no tuple files matched {pattern!r}")
    est = greedy_cover(points, radius, metric=_get(cfg, "metric", "d"), rng=cfg.seed.generator())
    path = out / "cover.json"
    _write_json(path, est.to_json())
    return [path], {"count": est.count, "radius": radius}


def _parse_grid(raw, default):
    if raw is None:
        return default
    return [float(x) for x in str(raw).split(",") if x]


def _cmd_bounds(cfg, out):
    n, N = _need(cfg, "n", "N")
    eps_grid = _parse_grid(_get(cfg, "eps_grid", None), [0.1, 0.3, 0.5, 0.7])
    delta_grid = _parse_grid(_get(cfg, "delta_grid", None), [0.01, 0.05, 0.1, 0.2, 0.5])
    radius_rows = [["eps", "delta", "value"]]
    for e in eps_grid:
        for d in delta_grid:
            radius_rows.append([_g17(e), _g17(d), _g17(near_norming_radius(e, d))])
    rpath = out / "radius.csv"
    _write_csv(rpath, radius_rows)
    sep_rows = [["eps", "delta", "value"]]
    for d in delta_grid:
        sep_rows.append(["", _g17(d), _g17(lower_bound_from_separation(d, n))])
    spath = out / "separation_lower.csv"
    _write_csv(spath, sep_rows)
    count_rows = [["n", "N", "delta", "log_packing_bound", "log_net_bound"]]
    for d in delta_grid:
        count_rows.append(
            [n, N, _g17(d), _g17(packing_upper_bound(n, N, d)), _g17(net_size_bound(n, N, d))]
        )
    cpath = out / "count_bounds.csv"
    _write_csv(cpath, count_rows)
    summary = {
        "n": n,
        "N": N,
        "matching_lower_bound": "exp(b*n*N^2) for some b > 0 (existential constant, "
        "not computable from these formulas)",
    }
    return [rpath, spath, cpath], summary


def _cmd_subgauss(cfg, out):
    n, N, samples = _need(cfg, "n", "N", "samples")
    rep = subgaussian_tail_check(n, N, samples, cfg.seed)
    path = out / "subgauss.csv"
    _write_csv(path, rep.to_csv_rows())
    return [path], {
        "b_n": rep.b_n,
        "k_hat": rep.k_hat,
        "any_flagged": rep.any_flagged,
        "empirical_variance": rep.empirical_variance,
    }


def _parse_coeffs(raw, n):
    if raw is None:
        return [1.0] * n
    vals = [complex(x) for x in str(raw).split(",") if x]
    if len(vals) != n:
        raise ConfigError(f"coeffs has {len(vals)} entries, expected n={n}")
    return vals


def _cmd_appendix(cfg, out):
    (experiment,) = _need(cfg, "experiment")
    N = _get(cfg, "N", 16)
    samples = _get(cfg, "samples", 20)
    if experiment == "chi":
        rep = chi_n_estimate(N, samples, cfg.seed)
        path = out / "chi.csv"
        _write_csv(
            path,
            [
                ["N", "samples", "estimate", "ci_lo", "ci_hi"],
                [N, samples, _g17(rep.value), _g17(rep.ci_lo), _g17(rep.ci_hi)],
            ],
        )
        return [path], {"estimate": rep.value, "ci_lo": rep.ci_lo, "ci_hi": rep.ci_hi}
    if experiment == "twirl":
        rep = twirl_identity_check(N, samples, cfg.seed)
        path = out / "twirl.json"
        _write_json(path, rep.to_json())
        return [path], rep.to_json()
    n = _get(cfg, "n", 4)
    coeffs = _parse_coeffs(_get(cfg, "coeffs", None), n)
    if experiment in ("dominance", "hastings"):
        uni = unitary_sum_norm(coeffs, N, samples, cfg.seed.stream(1))
        summary = {"unitary_mean": uni.mean_norm, "unitary_std": uni.std_norm}
        rows = [["sample", "unitary_norm"]] + [
            [i, _g17(v)] for i, v in enumerate(uni.values)
        ]
        if experiment == "dominance":
            gau = gaussian_decoupled_norm(coeffs, N, samples, cfg.seed.stream(2))
            lo, hi = bootstrap_mean_ci(uni.values, cfg.seed.substream(9))
            summary.update(
                {
                    "gaussian_mean": gau.mean_norm,
                    "dominance_ratio": uni.mean_norm / gau.mean_norm,
                    "unitary_mean_ci_lo": lo,
                    "unitary_mean_ci_hi": hi,
                    "ci_note": "bootstrap CI, non-rigorous",
                }
            )
            rows = [["sample", "unitary_norm", "gaussian_norm"]] + [
                [i, _g17(a), _g17(b)]
                for i, (a, b) in enumerate(zip(uni.values, gau.values))
            ]
        path = out / f"{experiment}.csv"
        _write_csv(path, rows)
        return [path], summary
    if experiment == "matrix-coeff":
        k = _get(cfg, "k", 2)
        blocks = [np.eye(k) * c for c in coeffs]
        rep = matrix_coefficient_sum(blocks, N, samples, cfg.seed)
        path = out / "matrix_coeff.json"
        _write_json(path, rep.to_json())
        return [path], {"mean_norm": rep.mean_norm, "rhs": rep.rhs}
    raise ConfigError(f"unknown appendix experiment {experiment!r}")


def _cmd_validate(cfg, out):
    t = _load(cfg, "tuple")
    path = out / "validate.json"
    _write_json(
        path,
        {
            "n": t.n,
            "N": t.dim,
            "unitary": t.unitary,
            "unitarity_residual": t.unitarity_residual(),
        },
    )
    return [path], {"n": t.n, "N": t.dim, "unitary": t.unitary}


_HANDLERS = {
    "sample-haar": _cmd_sample_haar,
    "cayley": _cmd_cayley,
    "certify": _cmd_certify,
    "gap": _cmd_gap,
    "mix": _cmd_mix,
    "separate": _cmd_separate,
    "orbit-dist": _cmd_orbit_dist,
    "strong-sep": _cmd_strong_sep,
    "norming": _cmd_norming,
    "delta-overlap": _cmd_delta_overlap,
    "dcb-bound": _cmd_dcb_bound,
    "pack": _cmd_pack,
    "cover": _cmd_cover,
    "bounds": _cmd_bounds,
    "subgauss": _cmd_subgauss,
    "appendix": _cmd_appendix,
    "validate": _cmd_validate,
}


def run(config: ExperimentConfig) -> RunRecord:
    """Dispatch a validated config, write artifacts plus run.json."""
    if config.command not in _HANDLERS:
        raise ConfigError(f"unknown command {config.command!r}")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    artifacts, summary = _HANDLERS[config.command](config, out)
    for p in artifacts:
        if not Path(p).exists():
            raise QexError(f"declared artifact missing: {p}")
    record = RunRecord(
        config=config,
        started=started,
        finished=_now(),
        artifacts=[str(Path(p).relative_to(out)) for p in artifacts],
        summary=_json_safe(summary),
        claim=CLAIMS[config.command],
    )
    _write_json(out / "run.json", record.to_json())
    return record


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and (math.isnan(obj) or math.isinf(obj)):
        return None
    return obj


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qex", description="quantum expander toolkit"
    )
    parser.add_argument("--seed", type=int, default=0, help="base RNG seed")
    parser.add_argument("--stream-id", type=int, default=0, help="RNG stream id")
    parser.add_argument("--threads", type=int, default=1, help="worker cap")
    parser.add_argument("--out", type=str, default="out", help="output directory")
    parser.add_argument("--config", type=str, default=None, help="JSON config overriding flags")
    sub = parser.add_subparsers(dest="command")
    for name in _HANDLERS:
        p = sub.add_parser(name, help=CLAIMS[name])
        p.add_argument("--param", "-p", action="append", default=[],
                       metavar="KEY=VALUE", help="command parameter")
    return parser


def _coerce(key: str, raw: str):
    want = _PARAM_TYPES.get(key)
    if want is None:
        raise ConfigError(f"unknown param key {key!r}")
    if want is str:
        return raw
    try:
        return want(raw)
    except ValueError as exc:
        raise ConfigError(f"param {key!r}: cannot parse {raw!r} as {want.__name__}") from exc


def config_from_args(args) -> ExperimentConfig:
    if args.config is not None:
        try:
            obj = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON: {exc.msg}") from exc
        return ExperimentConfig.from_json(obj)
    if not args.command:
        raise ConfigError("no command given (and no --config)")
    params = {}
    for item in args.param:
        if "=" not in item:
            raise ConfigError(f"--param expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        params[key] = _coerce(key, raw)
    return ExperimentConfig(
        command=args.command,
        params=params,
        seed=RngSpec(args.seed, args.stream_id),
        out_dir=args.out,
    )


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads != 1:
        set_workers(args.threads)
    try:
        config = config_from_args(args)
        record = run(config)
    except QexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps({"command": config.command, "summary": record.summary}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
