"""Comparison table (tab-separated) and key=value report files."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from .bench import BenchReport
from .flops import CONVENTION

COLUMNS = ("Method", "F1", "bAcc", "Time-s", "Time-a", "Memory-MB", "FLOPs-G")

# published comparison row, full scale on the real dataset
PUBLISHED_ROWS = (
    ("SOPA (published)", 0.780, 0.842, 0.0047, 310.56, 33.50, 159252.48),
    ("FOPA (published)", 0.776, 0.840, 0.0164, 0.0164, 279.90, 31.94),
)

NOTES = (
    f"# {CONVENTION}",
    "# Memory-MB is parameter bytes only; the published memory methodology is unstated, so the figures are not comparable",
    "# published rows are reference values at 256x256 and are not reproduced here",
)


def _fmt(v, digits: int) -> str:
    return "-" if v is None else f"{v:.{digits}f}"


def table_rows(reports: list[BenchReport], scores: Optional[dict[str, tuple[float, float]]] = None) -> list[str]:
    scores = scores or {}
    lines = list(NOTES)
    lines.append("\t".join(COLUMNS))
    for r in reports:
        f1, bacc = scores.get(r.method, (None, None))
        lines.append(
            "\t".join(
                [
                    r.method,
                    _fmt(f1, 3),
                    _fmt(bacc, 3),
                    f"{r.time_single_s:.6f}",
                    f"{r.time_all_s:.6f}",
                    f"{r.param_memory_mb:.4f}",
                    f"{r.flops_per_map / 1e9:.4f}",
                ]
            )
        )
    for name, f1, bacc, ts, ta, mem, fl in PUBLISHED_ROWS:
        lines.append("\t".join([name, f"{f1:.3f}", f"{bacc:.3f}", f"{ts}", f"{ta}", f"{mem:.2f}", f"{fl:.2f}"]))
    return lines


def key_values(reports: list[BenchReport], extra: Optional[dict] = None) -> list[str]:
    out = []
    for r in reports:
        prefix = r.method.lower()
        for k, v in r.to_dict().items():
            if k != "method":
                out.append(f"{prefix}.{k}={v}")
    for k, v in (extra or {}).items():
        out.append(f"{k}={v}")
    return out


def write_key_values(path, pairs: dict) -> None:
    Path(path).write_text("".join(f"{k}={v}\n" for k, v in pairs.items()))


def read_key_values(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line and not line.startswith("#"):
            k, _, v = line.partition("=")
            out[k] = v
    return out
