"""Configuration-driven experiment runner.

Commands: run <config>, validate <config>, reference <config>.
Configs are strict JSON: unknown keys are errors.  Exit codes: 0 ok,
2 config error, 3 infeasible parameters, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import data as data_mod
from .compression import (
    Compressor,
    InfeasibleParameterError,
    estimate_delta,
    identity_compressor,
)
from .problem import PrimalDualPoint, RobustLRProblem
from .solvers import (
    cdpsvrg_params,
    compute_reference,
    crdpsg_stage_params,
    run_cdpsvrg,
    run_crdpsg,
)
from .topology import DecGraph, build_ring, build_torus, spectral

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4


class ConfigError(ValueError):
    pass


def _require(d: dict, path: str, allowed: set, required: set):
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    missing = required - set(d)
    if missing:
        raise ConfigError(f"{path}: missing keys {sorted(missing)}")


@dataclass
class RunConfig:
    algorithm: str
    topology: dict
    dataset: dict
    partition: dict
    problem: dict
    compression: dict
    oracle: dict
    budget: dict
    seed: int
    log: dict
    reference: dict

    @classmethod
    def parse(cls, raw: dict) -> "RunConfig":
        _require(
            raw,
            "<root>",
            allowed={
                "algorithm", "topology", "dataset", "partition", "problem",
                "compression", "oracle", "budget", "seed", "log", "reference",
            },
            required={
                "algorithm", "topology", "dataset", "partition", "problem",
                "compression", "budget", "seed",
            },
        )
        alg = raw["algorithm"]
        if alg not in ("crdpsg", "cdpsvrg", "reference"):
            raise ConfigError(f"algorithm: unknown value {alg!r}")
        topo = raw["topology"]
        if topo.get("kind") == "ring":
            _require(topo, "topology", {"kind", "m"}, {"kind", "m"})
        elif topo.get("kind") == "torus":
            _require(topo, "topology", {"kind", "rows", "cols"}, {"kind", "rows", "cols"})
        else:
            raise ConfigError(f"topology.kind: unknown value {topo.get('kind')!r}")
        ds = raw["dataset"]
        if ds.get("kind") == "synthetic":
            _require(ds, "dataset", {"kind", "N", "d", "seed"}, {"kind", "N", "d", "seed"})
        elif ds.get("kind") == "libsvm":
            _require(ds, "dataset", {"kind", "path"}, {"kind", "path"})
        else:
            raise ConfigError(f"dataset.kind: unknown value {ds.get('kind')!r}")
        part = raw["partition"]
        _require(part, "partition", {"n", "mode"}, {"n"})
        if part["n"] < 1:
            raise ConfigError("partition.n must be >= 1")
        prob = raw["problem"]
        _require(
            prob, "problem",
            {"lambda", "beta", "R_x", "R_y"},
            {"lambda", "beta", "R_x", "R_y"},
        )
        comp = raw["compression"]
        if comp.get("kind") == "identity":
            _require(comp, "compression", {"kind"}, {"kind"})
        elif comp.get("kind") == "qinf":
            _require(comp, "compression", {"kind", "bits", "delta"}, {"kind", "bits"})
        else:
            raise ConfigError(f"compression.kind: unknown value {comp.get('kind')!r}")
        oracle = raw.get("oracle", {})
        _require(oracle, "oracle", {"p"}, set())
        budget = raw["budget"]
        _require(budget, "budget", {"iterations", "stages"}, set())
        if not budget:
            raise ConfigError("budget: need iterations or stages")
        if any(v < 1 for v in budget.values()):
            raise ConfigError("budget values must be >= 1")
        log = raw.get("log", {})
        _require(log, "log", {"stride", "output"}, set())
        ref = raw.get("reference", {})
        _require(ref, "reference", {"path", "compute"}, set())
        if alg != "reference" and not ref:
            raise ConfigError(
                "reference: need a stored path or a compute section for "
                "trace distances"
            )
        return cls(
            algorithm=alg, topology=topo, dataset=ds, partition=part,
            problem=prob, compression=comp, oracle=oracle, budget=budget,
            seed=int(raw["seed"]), log=log, reference=ref,
        )


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    return RunConfig.parse(raw)


def _node_count(cfg: RunConfig) -> int:
    t = cfg.topology
    return t["m"] if t["kind"] == "ring" else t["rows"] * t["cols"]


def build_dataset(cfg: RunConfig) -> data_mod.Dataset:
    ds = cfg.dataset
    if ds["kind"] == "synthetic":
        return data_mod.synthesize(ds["N"], ds["d"], ds["seed"])
    with open(ds["path"]) as fh:
        return data_mod.parse_libsvm(fh)


def build_problem(cfg: RunConfig, dataset, m: int) -> RobustLRProblem:
    part = data_mod.partition(
        dataset, m, cfg.partition["n"], cfg.seed,
        mode=cfg.partition.get("mode", "shuffled"),
    )
    p = cfg.problem
    return RobustLRProblem(
        dataset, part, lam=p["lambda"], beta=p["beta"], R_x=p["R_x"], R_y=p["R_y"]
    )


def build_graph(cfg: RunConfig):
    t = cfg.topology
    if t["kind"] == "ring":
        g = build_ring(t["m"])
    else:
        g = build_torus(t["rows"], t["cols"])
    return g, spectral(g)


def build_compressor(cfg: RunConfig, d: int) -> Compressor:
    comp = cfg.compression
    if comp["kind"] == "identity":
        return identity_compressor()
    bits = comp["bits"]
    delta = comp.get("delta", "auto")
    if delta == "auto":
        probe = Compressor(kind="quantize_inf", bits=bits, delta=1.0)
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xDE17A]))
        delta = estimate_delta(probe, d, 10_000, rng)
    if delta > 1.0:
        raise InfeasibleParameterError(
            f"estimated compression factor {delta:.4g} exceeds 1; "
            "increase bits"
        )
    return Compressor(kind="quantize_inf", bits=bits, delta=float(delta))


def write_zstar(path: str, z: PrimalDualPoint, residual: float):
    with open(path, "w") as fh:
        fh.write(f"d_x {z.x.size} d_y {z.y.size} residual {residual:.17g}\n")
        for v in np.concatenate([z.x, z.y]):
            fh.write("%.17g\n" % v)


def read_zstar(path: str) -> PrimalDualPoint:
    with open(path) as fh:
        header = fh.readline().split()
        d_x, d_y = int(header[1]), int(header[3])
        vals = np.array([float(line) for line in fh if line.strip()])
    if vals.size != d_x + d_y:
        raise ConfigError(f"reference file {path}: expected {d_x + d_y} values")
    return PrimalDualPoint(vals[:d_x], vals[d_x:])


def resolve_reference(cfg: RunConfig, dataset) -> PrimalDualPoint:
    ref = cfg.reference
    if "path" in ref:
        return read_zstar(ref["path"])
    opts = ref.get("compute") or {}
    prob1 = build_problem(cfg, dataset, m=1)
    z, _residual = compute_reference(
        prob1,
        iterations=opts.get("iterations", 50_000),
        seed=cfg.seed,
        tol=opts.get("tol", 1e-14),
    )
    return z


def cmd_reference(cfg: RunConfig) -> int:
    dataset = build_dataset(cfg)
    prob1 = build_problem(cfg, dataset, m=1)
    opts = cfg.reference.get("compute") or {}
    z, residual = compute_reference(
        prob1,
        iterations=opts.get("iterations", cfg.budget.get("iterations", 50_000)),
        seed=cfg.seed,
        tol=opts.get("tol", 1e-14),
    )
    out = cfg.log.get("output", "zstar.txt")
    write_zstar(out, z, residual)
    print(f"reference written to {out}, residual {residual:.3e}")
    return EXIT_OK


def _derived_report(cfg: RunConfig):
    """Build every derived constant; returns (lines, failures)."""
    lines = []
    failures = []
    dataset = build_dataset(cfg)
    m = _node_count(cfg)
    prob = build_problem(cfg, dataset, m)
    consts = prob.constants
    lines.append(f"nodes m = {m}, batches n = {prob.n}, samples N = {prob.N}")
    for name in ("mu_x", "mu_y", "L_xx", "L_yy", "L_xy", "L_yx", "L", "mu", "kappa_f"):
        lines.append(f"{name} = {getattr(consts, name):.10g}")
    g, spec = build_graph(cfg)
    lines.append(f"lambda_max(I-W) = {spec.lambda_max:.10g}")
    lines.append(f"lambda_second_smallest(I-W) = {spec.lambda_second_smallest:.10g}")
    lines.append(f"kappa_g = {spec.kappa_g:.10g}")
    compressor = build_compressor(cfg, prob.d)
    lines.append(f"compression delta = {compressor.delta:.10g}")
    if cfg.algorithm == "crdpsg":
        stages = cfg.budget.get("stages", 1)
        for k in range(stages):
            try:
                sp = crdpsg_stage_params(k, consts, compressor.delta, spec)
            except InfeasibleParameterError as e:
                failures.append(f"stage {k}: {e}")
                break
            lines.append(
                f"stage {k}: s = {sp.s:.6g}, b_x = {sp.b_x:.6g}, "
                f"b_y = {sp.b_y:.6g}, gamma_x = {sp.gamma_x:.6g}, "
                f"gamma_y = {sp.gamma_y:.6g}, alpha_x = {sp.alpha_x:.6g}, "
                f"alpha_y = {sp.alpha_y:.6g}, M_x = {sp.M_x:.6g}, "
                f"M_y = {sp.M_y:.6g}, t = {sp.t}, rho = {sp.rho:.6g}"
            )
    elif cfg.algorithm == "cdpsvrg":
        p = cfg.oracle.get("p", 1.0 / prob.n)
        try:
            vp = cdpsvrg_params(
                consts, compressor.delta, spec, prob.n, p_min=1.0 / prob.n, p=p
            )
            lines.append(
                f"s = {vp.s:.6g}, b_x = {vp.b_x:.6g}, b_y = {vp.b_y:.6g}, "
                f"gamma_x = {vp.gamma_x:.6g}, gamma_y = {vp.gamma_y:.6g}, "
                f"alpha_x = {vp.alpha_x:.6g}, alpha_y = {vp.alpha_y:.6g}, "
                f"M_x = {vp.M_x:.6g}, M_y = {vp.M_y:.6g}, "
                f"c_tilde_x = {vp.c_tilde_x:.6g}, c_tilde_y = {vp.c_tilde_y:.6g}, "
                f"p = {vp.p:.6g}"
            )
        except InfeasibleParameterError as e:
            failures.append(str(e))
    return lines, failures, (dataset, prob, g, spec, compressor)


def cmd_validate(cfg: RunConfig) -> int:
    lines, failures, _ = _derived_report(cfg)
    for line in lines:
        print(line)
    if failures:
        print("FAILURES:")
        for f in failures:
            print(f"  {f}")
    else:
        print("all parameter windows feasible")
    return EXIT_OK


def cmd_run(cfg: RunConfig) -> int:
    if cfg.algorithm == "reference":
        return cmd_reference(cfg)
    dataset = build_dataset(cfg)
    m = _node_count(cfg)
    prob = build_problem(cfg, dataset, m)
    g, spec = build_graph(cfg)
    compressor = build_compressor(cfg, prob.d)
    z_star = resolve_reference(cfg, dataset)
    stride = cfg.log.get("stride")
    x0 = np.zeros(prob.d)
    y0 = np.zeros(prob.d)
    if cfg.algorithm == "crdpsg":
        K = cfg.budget.get("stages")
        if K is None:
            raise ConfigError("crdpsg budget needs stages")
        if stride is None:
            stride = 1
        trace, _ = run_crdpsg(
            prob, g, spec, compressor, K, x0, y0, z_star, cfg.seed,
            log_stride=stride,
        )
    else:
        T = cfg.budget.get("iterations")
        if T is None:
            raise ConfigError("cdpsvrg budget needs iterations")
        if stride is None:
            stride = 1 if T <= 10_000 else 10
        trace, _ = run_cdpsvrg(
            prob, g, spec, compressor, T, x0, y0, z_star, cfg.seed,
            p=cfg.oracle.get("p"), log_stride=stride,
        )
    out = cfg.log.get("output", "trace.csv")
    with open(out, "w") as fh:
        fh.write(trace.to_csv())
    meta_lines, failures, _ = _derived_report(cfg)
    with open(out + ".meta", "w") as fh:
        fh.write(json.dumps({"config": cfg.__dict__, "derived": meta_lines}, indent=2))
        fh.write("\n")
    if failures:
        return EXIT_INFEASIBLE
    print(f"trace written to {out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="decsaddle")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in ("run", "validate", "reference"):
        sp = sub.add_parser(cmd)
        sp.add_argument("config")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "validate":
            return cmd_validate(cfg)
        return cmd_reference(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleParameterError as e:
        print(f"infeasible parameters: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except FloatingPointError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
