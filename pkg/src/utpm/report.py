"""Run reports printed by the command-line tools."""
import re
from dataclasses import dataclass, field


def _slug(name):
    """Whitespace-free token so records split cleanly on spaces."""
    return re.sub(r"[^A-Za-z0-9_.:/-]+", "_", name).strip("_")


@dataclass
class CheckResult:
    name: str
    value: float
    oracle: float
    tol: float
    abs_err: float = None
    rel_err: float = None
    passed: bool = None
    informational: bool = False

    def __post_init__(self):
        if self.abs_err is None:
            self.abs_err = abs(self.value - self.oracle)
        if self.rel_err is None:
            self.rel_err = self.abs_err / max(abs(self.oracle), 1e-300)
        if self.passed is None:
            self.passed = bool(self.abs_err <= self.tol)


@dataclass
class RunReport:
    command: str
    inputs: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def add(self, name, value, oracle, tol, **kw):
        res = CheckResult(name, float(value), float(oracle), float(tol), **kw)
        self.checks.append(res)
        return res

    def add_error(self, name, err, tol):
        """Record a check whose measured quantity is already an error."""
        return self.add(name, err, 0.0, tol, abs_err=float(err), rel_err=float(err))

    @property
    def passed(self):
        return all(c.passed or c.informational for c in self.checks)

    def human(self):
        lines = [f"== {self.command}"]
        if self.inputs:
            lines.append("   " + ", ".join(f"{k}={v}" for k, v in self.inputs.items()))
        for c in self.checks:
            if c.informational:
                status = "INFO"
            else:
                status = "PASS" if c.passed else "FAIL"
            lines.append(
                f"   [{status}] {c.name}: value={c.value:.16g} oracle={c.oracle:.16g} "
                f"abs_err={c.abs_err:.3e} tol={c.tol:.1e}")
        for k, v in self.timings.items():
            lines.append(f"   time {k}: {v:.6f} s")
        lines.append(f"   overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)

    def records(self):
        """Machine-readable form: one ``key=value`` record per line."""
        out = []
        base = f"command={self.command}"
        for c in self.checks:
            out.append(
                f"{base} check={_slug(c.name)} value={c.value!r} oracle={c.oracle!r} "
                f"abs_err={c.abs_err!r} rel_err={c.rel_err!r} tol={c.tol!r} "
                f"pass={int(c.passed)} informational={int(c.informational)}")
        for k, v in self.timings.items():
            out.append(f"{base} timing={k} seconds={v!r}")
        out.append(f"{base} result={'pass' if self.passed else 'fail'}")
        return "\n".join(out)
