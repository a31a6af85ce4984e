"""Machine- and human-readable run reports (both views from one structure)."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "tolerance", float(self.tolerance))
        object.__setattr__(self, "passed", bool(self.passed))

    @classmethod
    def bound(cls, name: str, value: float, tolerance: float) -> "CheckResult":
        """Check |value| <= tolerance."""
        return cls(name, float(value), float(tolerance), abs(value) <= tolerance)

    @classmethod
    def window(cls, name: str, value: float, lo: float, hi: float) -> "CheckResult":
        """Check lo <= value <= hi, reported with the half-width as tolerance."""
        mid = 0.5 * (lo + hi)
        return cls(name, float(value), 0.5 * (hi - lo), lo <= value <= hi)

    @classmethod
    def flag(cls, name: str, ok: bool) -> "CheckResult":
        return cls(name, 1.0 if ok else 0.0, 0.0, bool(ok))


@dataclass
class RunReport:
    experiment: str
    config_hash: str
    checks: list[CheckResult] = field(default_factory=list)
    elapsed_seconds: float = 0.0

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        return check

    def extend(self, checks) -> None:
        self.checks.extend(checks)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> str:
        payload = {
            "experiment": self.experiment,
            "config_hash": self.config_hash,
            "passed": self.passed,
            "elapsed_seconds": round(self.elapsed_seconds, 3),
            "checks": [asdict(c) for c in self.checks],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [f"experiment: {self.experiment}",
                 f"config:     {self.config_hash}",
                 f"elapsed:    {self.elapsed_seconds:.3f} s",
                 f"result:     {'PASS' if self.passed else 'FAIL'}",
                 ""]
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(f"  [{status}] {c.name}: value={c.value:.6e} tolerance={c.tolerance:.6e}")
        return "\n".join(lines) + "\n"

    def write(self, outdir) -> None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / f"{self.experiment}_report.json").write_text(self.to_json() + "\n")
        (outdir / f"{self.experiment}_report.txt").write_text(self.to_text())
