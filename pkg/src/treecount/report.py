"""Run reports, JSON-lines traces and matplotlib figures."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# exp() overflows a double just above this
NATURAL_SCALE_LIMIT = 700.0


@dataclass
class RunReport:
    """Result of one CLI command; ``elapsed`` is the only non-deterministic field."""

    command: str
    input: str | None = None
    n: int | None = None
    m: int | None = None
    config: dict = field(default_factory=dict)
    result: dict = field(default_factory=dict)
    elapsed: float | None = None
    trace: list | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls(**json.loads(text))

    def to_text(self) -> str:
        lines = [f"command: {self.command}"]
        if self.input is not None:
            lines.append(f"input: {self.input} (n={self.n}, m={self.m})")
        for key in sorted(self.result):
            value = self.result[key]
            if isinstance(value, (dict, list)):
                value = json.dumps(value, sort_keys=True)
            lines.append(f"{key}: {value}")
        if self.config:
            lines.append("config: " + ", ".join(f"{k}={self.config[k]}" for k in sorted(self.config)))
        if self.elapsed is not None:
            lines.append(f"elapsed: {self.elapsed:.3f}s")
        return "\n".join(lines) + "\n"


def count_fields(log_count: float) -> dict:
    """``log_count`` plus the natural-scale count when it fits in a double."""
    out = {"log_count": log_count}
    out["count"] = math.exp(log_count) if log_count <= NATURAL_SCALE_LIMIT else None
    return out


def write_trace(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_trace(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def plot_trace(records, path, exact=None):
    """Edges remaining and per-iteration estimate ``X`` against iteration."""
    with plt.rc_context({"font.size": 8, "figure.figsize": (7, 3)}):
        fig, (ax0, ax1) = plt.subplots(1, 2)
        it = [r["iteration"] for r in records]
        ax0.plot(it, [r["m"] for r in records], lw=1)
        ax0.set_xlabel("iteration")
        ax0.set_ylabel("edges after elimination")
        ax1.plot(it, [r["x"] for r in records], ".", ms=2)
        ax1.set_xlabel("iteration")
        ax1.set_ylabel("X (log-ratio estimate)")
        if exact is not None:
            ax1.set_title(f"exact log T = {exact:.6g}")
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)


def plot_phases(phases, path):
    """Subset size and predicted budget per phase."""
    with plt.rc_context({"font.size": 8, "figure.figsize": (7, 3)}):
        fig, (ax0, ax1) = plt.subplots(1, 2)
        idx = [p.index for p in phases]
        ax0.bar(idx, [p.k for p in phases])
        ax0.set_xlabel("phase")
        ax0.set_ylabel("k")
        ax1.semilogy(idx, [p.budget for p in phases], "o-", ms=3)
        ax1.set_xlabel("phase")
        ax1.set_ylabel("predicted budget")
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)
