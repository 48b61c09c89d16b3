"""Report assembly: canonical JSON, RFC-4180 CSV, and SVG plots.

The JSON payload is deterministic for a fixed (config, seed): keys are
sorted, floats use repr, and the timestamp lives outside the hash-covered
region.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass
class Report:
    experiment: str
    config: dict
    rows: list[dict] = field(default_factory=list)
    audits: dict = field(default_factory=dict)

    def append(self, **row):
        self.rows.append(row)

    def payload(self) -> dict:
        """The deterministic, hash-covered part of the report."""
        return {
            "experiment": self.experiment,
            "config": self.config,
            "rows": self.rows,
            "audits": self.audits,
        }

    def to_json(self) -> str:
        body = self.payload()
        meta = {
            "payload_hash": hashlib.sha256(_canonical(body).encode()).hexdigest(),
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "version": 1,
        }
        return json.dumps({"metadata": meta, **body}, sort_keys=True, indent=1)

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        jpath = out / f"{self.experiment}.json"
        cpath = out / f"{self.experiment}.csv"
        jpath.write_text(self.to_json())
        if self.rows:
            headers = sorted({k for row in self.rows for k in row})
            with cpath.open("w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=headers, lineterminator="\r\n")
                w.writeheader()
                for row in self.rows:
                    w.writerow(row)
        else:
            cpath.write_text("")
        return jpath, cpath

    @property
    def failures(self) -> list[dict]:
        return [r for r in self.rows if r.get("passed") is False]


def load_report(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


# ---------------------------------------------------------------------------
# plots
# ---------------------------------------------------------------------------


def plot_report(report: dict, selector: str, out_dir: str | Path) -> list[Path]:
    """Render SVG plots for rows matching the selector prefix."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = [r for r in report.get("rows", []) if str(r.get("name", "")).startswith(selector)]
    if not rows:
        raise ValueError(f"no rows match selector {selector!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    series = [r for r in rows if "x" in r and "y" in r]
    if series:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        xs = [r["x"] for r in series]
        ys = [r["y"] for r in series]
        logplot = all(y > 0 for y in ys) and all(x > 0 for x in xs)
        if logplot:
            ax.loglog(xs, ys, "o-")
        else:
            ax.plot(xs, ys, "o-")
        slope = next((r.get("slope") for r in series if r.get("slope") is not None), None)
        if slope is not None:
            ax.set_title(f"{selector} (fitted slope {slope:.3f})")
        else:
            ax.set_title(selector)
        ax.set_xlabel(series[0].get("x_label", "x"))
        ax.set_ylabel(series[0].get("y_label", "y"))
        fig.tight_layout()
        path = out / f"{selector.replace('/', '-')}.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)

    ratios = [r["ratio"] for r in rows if "ratio" in r and r["ratio"] == r["ratio"]]
    if len(ratios) > 1:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.hist(ratios, bins=min(10, len(ratios)))
        ax.set_title(f"{selector} ratio distribution")
        ax.set_xlabel("lhs / rhs")
        fig.tight_layout()
        path = out / f"{selector.replace('/', '-')}-hist.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written
