"""Check results and their JSON/CSV serialization.

Two kinds of check exist.  *Exact* checks compare two floating-point
evaluations of an identity with a relative tolerance scaled by the size of the
terms involved.  *MC* checks compare Monte-Carlo means (or a mean against a
reference number) and pass when ``|z| <= 4``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

Z_LIMIT = 4.0
EXACT_RTOL = 1e-10


@dataclass
class CheckResult:
    name: str
    kind: str  # "exact" or "mc"
    lhs: float
    rhs: float
    lhs_se: float = 0.0
    rhs_se: float = 0.0
    z_score: float | None = None
    passed: bool = True
    tolerance: str = ""
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return {k: _clean(v) for k, v in out.items()}

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.kind == "mc":
            return f"{status} {self.name}: lhs={self.lhs:.6g}±{self.lhs_se:.2g} rhs={self.rhs:.6g}±{self.rhs_se:.2g} z={self.z_score:+.2f}"
        return f"{status} {self.name}: lhs={self.lhs:.12g} rhs={self.rhs:.12g} ({self.tolerance})"


def _clean(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def mean_se(values) -> tuple:
    """Sample mean and its standard error."""
    v = np.asarray(values, dtype=float)
    n = v.size
    if n == 0:
        return 0.0, 0.0
    m = float(np.mean(v))
    if n == 1:
        return m, 0.0
    return m, float(np.std(v, ddof=1) / math.sqrt(n))


def exact_check(name: str, lhs: float, rhs: float, scale: float | None = None,
                rtol: float = EXACT_RTOL, detail: dict | None = None) -> CheckResult:
    """Pass when ``|lhs - rhs| <= rtol * max(scale, |lhs|, |rhs|, tiny)``.

    ``scale`` should be the same computation done on absolute values, which
    bounds the rounding error of sums with cancellation.
    """
    ref = max(abs(lhs), abs(rhs), 0.0 if scale is None else abs(scale), 1e-300)
    ok = bool(abs(lhs - rhs) <= rtol * ref) and math.isfinite(lhs) and math.isfinite(rhs)
    return CheckResult(name, "exact", float(lhs), float(rhs), passed=ok,
                       tolerance=f"rel {rtol:g} of {ref:.3g}", detail=detail or {})


def _z(diff: float, se: float, scale: float) -> float:
    if se > 0:
        return diff / se
    return 0.0 if abs(diff) <= 1e-12 * max(1.0, scale) else math.copysign(math.inf, diff)


def paired_check(name: str, lhs_samples, rhs_samples, detail: dict | None = None,
                 z_limit: float = Z_LIMIT) -> CheckResult:
    """Two estimators evaluated on the same draws (common random numbers).

    The z-score uses the standard error of the per-draw difference.
    """
    a = np.asarray(lhs_samples, dtype=float)
    b = np.asarray(rhs_samples, dtype=float)
    ma, sa = mean_se(a)
    mb, sb = mean_se(b)
    _, sd = mean_se(a - b)
    z = _z(ma - mb, sd, max(abs(ma), abs(mb)))
    info = {"n": int(a.size), "diff_se": sd, "pairing": "common random numbers"}
    info.update(detail or {})
    return CheckResult(name, "mc", ma, mb, sa, sb, z, bool(abs(z) <= z_limit),
                       f"|z| <= {z_limit:g}", info)


def reference_check(name: str, samples, ref: float, ref_se: float = 0.0, detail: dict | None = None,
                    z_limit: float = Z_LIMIT) -> CheckResult:
    """A Monte-Carlo mean against a reference value (optionally with its own error)."""
    m, s = mean_se(samples)
    se = math.hypot(s, ref_se)
    z = _z(m - ref, se, abs(ref))
    info = {"n": int(np.size(samples))}
    info.update(detail or {})
    return CheckResult(name, "mc", m, float(ref), s, float(ref_se), z, bool(abs(z) <= z_limit),
                       f"|z| <= {z_limit:g}", info)


def estimate_check(name: str, est: float, est_se: float, ref: float, ref_se: float = 0.0,
                   detail: dict | None = None, z_limit: float = Z_LIMIT) -> CheckResult:
    """Like :func:`reference_check` for an already-reduced estimate."""
    se = math.hypot(est_se, ref_se)
    z = _z(est - ref, se, abs(ref))
    return CheckResult(name, "mc", float(est), float(ref), float(est_se), float(ref_se), z,
                       bool(abs(z) <= z_limit), f"|z| <= {z_limit:g}", detail or {})


@dataclass
class Report:
    suite: str
    results: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def add(self, result: CheckResult) -> CheckResult:
        self.results.append(result)
        return result

    def extend(self, results) -> None:
        self.results.extend(results)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def pass_vector(self) -> list:
        return [r.passed for r in self.results]

    def to_json(self, metadata: bool = False) -> dict:
        """Report body; run-dependent ``metadata`` (timings) only on request."""
        out = {
            "suite": self.suite,
            "config": _clean(self.config),
            "pass": self.passed,
            "checks": [r.to_json() for r in self.results],
        }
        if metadata:
            out["metadata"] = _clean(self.metadata)
        return out

    def metadata_json(self) -> str:
        return json.dumps(_clean(self.metadata), indent=2, sort_keys=True) + "\n"

    def dumps(self, fmt: str = "json") -> str:
        """Serialized body, identical for identical configuration and seed."""
        if fmt == "json":
            return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"
        if fmt == "csv":
            buf = io.StringIO()
            cols = ["name", "kind", "lhs", "lhs_se", "rhs", "rhs_se", "z_score", "pass", "tolerance"]
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(cols)
            for r in self.results:
                row = r.to_json()
                w.writerow(["" if row[c] is None else row[c] for c in cols])
            return buf.getvalue()
        raise ValueError(f"unknown format {fmt!r}")
