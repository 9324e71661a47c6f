"""``radoncone`` command line: ``sample``, ``check`` and ``estimate``.

Exit status: 0 when every check passes, 1 when one fails, 2 for a
configuration error and 3 for any other failure during the run.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from radoncone import correlation, randmeasures
from radoncone.config import ESTIMATES, SUITE_NAMES, LawConfig, RunConfig, parse_config, parse_window
from radoncone.errors import ConfigError
from radoncone.functions import TestFunction
from radoncone.intensity import BaseMeasure, GammaIntensity
from radoncone.ktransform import BoundedSetSpec, ConeFunction
from radoncone.measures import Box, write_measures
from radoncone.report import Report, estimate_check
from radoncone.suites import SuiteOptions, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


def default_law() -> LawConfig:
    """Gamma(theta = 1) on ``[0, 1]`` with Lebesgue base measure, truncation 1e-3."""
    return LawConfig(GammaIntensity(1.0), BaseMeasure(Box.unit(1)), None, 1e-3)


def _law(cfg: RunConfig) -> LawConfig:
    return cfg.law if cfg.law is not None else default_law()


# ---------------------------------------------------------------------------
# commands


def run_sample(cfg: RunConfig, fh) -> int:
    """Write ``cfg.replicates`` draws, one measure per line, behind a header line."""
    law = _law(cfg)
    sampler = law.sampler()
    header = {"config": cfg.echo(), "sampler": sampler.describe()}
    header["eps"] = getattr(sampler, "eps", None)
    draws = (eta for _, _, batch in sampler.batches(cfg.replicates, cfg.seed, "sample") for eta in batch)
    if cfg.format == "json":
        return write_measures(fh, draws, header)
    fh.write("# " + json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["draw", "s"] + [f"x{k}" for k in range(sampler.dim)])
    count = 0
    for k, eta in enumerate(draws):
        for s, x in zip(eta.weights.tolist(), eta.positions.tolist()):
            w.writerow([k, repr(s)] + [repr(v) for v in x])
        count += 1
    return count


def run_check(cfg: RunConfig) -> Report:
    opts = SuiteOptions(seed=cfg.seed, replicates=cfg.replicates, instances=cfg.instances,
                        max_atoms=cfg.max_atoms, sampler=cfg.law.sampler() if cfg.law is not None else None)
    report = run_suite(cfg.suite, opts)
    report.config = cfg.echo()
    return report


def _test_function(obj, path, region: Box) -> TestFunction:
    if obj is None:
        return TestFunction.box_indicator(region)
    try:
        return TestFunction.from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(path, f"bad test function: {exc}") from None


def _cone_function(obj, sampler) -> ConeFunction:
    obj = obj or {"tag": "singleton-window"}
    tag = obj.get("tag")
    window = parse_window(obj["window"], "estimate.G.window") if "window" in obj else sampler.window
    if tag == "singleton-window":
        return ConeFunction.indicator(BoundedSetSpec(window, 1, 1))
    if tag == "bounded-set":
        N = obj.get("N")
        lo = obj.get("min_size", 0)
        if not isinstance(N, int) or not isinstance(lo, int) or not 0 <= lo <= N:
            raise ConfigError("estimate.G.N", "need integers 0 <= min_size <= N")
        return ConeFunction.indicator(BoundedSetSpec(window, N, lo), float(obj.get("value", 1.0)))
    if tag == "lp-exponent":
        return ConeFunction.lp_exponent(_test_function(obj.get("f"), "estimate.G.f", sampler.region))
    raise ConfigError("estimate.G.tag", f"unknown cone function {tag!r}; use singleton-window, bounded-set or lp-exponent")


def run_estimate(cfg: RunConfig) -> Report:
    """One estimator with its standard error against the references available for it."""
    est = cfg.estimate or {"kind": "laplace"}
    kind = est["kind"]
    law = _law(cfg)
    sampler = law.sampler()
    n, seed = cfg.replicates, cfg.seed
    report = Report(f"estimate:{kind}", config=cfg.echo())
    gamma = isinstance(law.nu, GammaIntensity) and law.window is None
    if kind == "laplace":
        f = _test_function(est.get("f"), "estimate.f", sampler.region)
        m, s = randmeasures.laplace_transform_mc(f, sampler, n, seed)
        quad = randmeasures.laplace_transform_exact(f, sampler.nu, sampler.sigma_eff, sampler.nu_range, sampler.region)
        report.add(estimate_check("laplace vs quadrature (sampled law)", m, s, quad))
        if gamma:
            exact = randmeasures.gamma_laplace_closed_form(f, law.nu.theta, BaseMeasure(sampler.region, law.sigma.density))
            report.add(estimate_check("laplace vs closed form (untruncated)", m, s, exact))
    elif kind == "moment":
        order = est.get("n", 1)
        region = sampler.region
        m, s = randmeasures.moment_mc(order, region, sampler, n, seed)
        ref = randmeasures.moment_exact(order, region, sampler.nu, sampler.sigma_eff, sampler.nu_range)
        report.add(estimate_check(f"moment[{order}] vs composition formula (sampled law)", m, s, ref))
        if gamma:
            full = randmeasures.moment_exact(order, region, law.nu, law.sigma)
            report.add(estimate_check(f"moment[{order}] vs composition formula (untruncated)", m, s, full))
    elif kind == "correlation":
        G = _cone_function(est.get("G"), sampler)
        m, s = correlation.correlation_measure_mc(G, sampler, n, seed)
        ref = correlation.lp_integral_for(G, sampler, seed=seed)
        report.add(estimate_check("correlation vs Lebesgue-Poisson integral", m, s, ref.value, ref.stderr,
                                  detail={"lp_terms": ref.terms}))
    else:  # pragma: no cover - rejected by parse_config
        raise ConfigError("estimate.kind", f"unknown estimate {kind!r}")
    return report


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="seed (overrides the configuration)")
    common.add_argument("--out", help="output path (default: standard output)")
    common.add_argument("--format", choices=("json", "csv"), help="output format")
    common.add_argument("--replicates", type=int, help="Monte-Carlo replicates or sample draws")

    p = argparse.ArgumentParser(prog="radoncone", description="Samplers and identity checks for random discrete measures.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("sample", parents=[common], help="write seeded draws of the configured law")
    chk = sub.add_parser("check", parents=[common], help="run an identity suite")
    chk.add_argument("suite", nargs="?", help=f"one of {', '.join(SUITE_NAMES)}")
    chk.add_argument("--instances", type=int, help="random instances for the exact suites")
    est = sub.add_parser("estimate", parents=[common], help="run one estimator against its references")
    est.add_argument("kind", nargs="?", help=f"one of {', '.join(ESTIMATES)}")
    est.add_argument("--order", type=int, help="moment order")
    return p


def resolve_config(args) -> RunConfig:
    """Configuration file (if any) with command-line overrides applied, then validated."""
    doc: dict = {}
    if args.config:
        with open(args.config) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError("--config", f"not valid JSON: {exc.msg} at line {exc.lineno}") from None
        if not isinstance(doc, dict):
            raise ConfigError("$", "configuration must be a JSON object")
    doc = dict(doc, command=args.command)
    for key in ("seed", "out", "format", "replicates"):
        if getattr(args, key, None) is not None:
            doc[key] = getattr(args, key)
    if args.command == "check":
        if args.suite is not None:
            doc["suite"] = args.suite
        if args.instances is not None:
            doc["instances"] = args.instances
    if args.command == "estimate":
        est = dict(doc.get("estimate") or {})
        if args.kind is not None:
            est["kind"] = args.kind
        if args.order is not None:
            est["n"] = args.order
        est.setdefault("kind", "laplace")
        doc["estimate"] = est
    if args.command == "sample" and "replicates" not in doc:
        doc["replicates"] = 100
    return parse_config(doc)


def _emit(report: Report, fmt: str, out: str | None) -> None:
    """Report body to ``out`` (or stdout); timings go to ``<out>.meta.json``."""
    text = report.dumps(fmt)
    if out is None:
        sys.stdout.write(text)
        return
    Path(out).write_text(text)
    Path(out + ".meta.json").write_text(report.metadata_json())


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config and not Path(args.config).is_file():
            raise ConfigError("--config", f"no such file {args.config}")
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if cfg.command == "sample":
            if cfg.out is None:
                run_sample(cfg, sys.stdout)
            else:
                with open(cfg.out, "w") as fh:
                    run_sample(cfg, fh)
            return EXIT_OK
        report = run_check(cfg) if cfg.command == "check" else run_estimate(cfg)
        _emit(report, cfg.format, cfg.out)
        for r in report.results:
            print(r.line(), file=sys.stderr)
        return EXIT_OK if report.passed else EXIT_FAIL
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported with the failing stage, exit 3
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
