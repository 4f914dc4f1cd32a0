"""Run artifacts on disk.

One output directory per run:

    episode.csv      per-step rows, fixed column order, deterministic for a fixed seed
    timing.csv       wall-clock milliseconds per step
    summary.json     episode summary
    tube.json        predicted reachable box for every step
    dataset.jsonl    the derivative samples that were kept
    plans.jsonl      every horizon plan (optional)
    verify-<suite>.json, ablation.csv
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from pathlib import Path
from typing import IO, TYPE_CHECKING, Any

from inclusion_mpc.models import BatteryResult, EpisodeLog
from inclusion_mpc.reach import tube_to_dict

if TYPE_CHECKING:
    from inclusion_mpc.episode import EpisodeResult

logger = logging.getLogger(__name__)

EPISODE_CSV = "episode.csv"
TIMING_CSV = "timing.csv"
SUMMARY_JSON = "summary.json"
TUBE_JSON = "tube.json"
DATASET_JSONL = "dataset.jsonl"
PLANS_JSONL = "plans.jsonl"
ABLATION_CSV = "ablation.csv"

ABLATION_COLUMNS = (
    "tier",
    "total_cost",
    "final_quarter_cost",
    "mean_envelope_width",
    "probe_width",
    "violations",
    "dropped_samples",
)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


class ArtifactStore:
    """Directory of run artifacts."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.root / name

    @contextmanager
    def writer(self, name: str) -> Iterator[IO[str]]:
        """Write to a temporary file and move it into place only on success."""
        target = self.path(name)
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=f".{name}.")
        try:
            with os.fdopen(fd, "w", newline="") as f:
                yield f
            os.replace(tmp, target)
        except Exception:
            Path(tmp).unlink(missing_ok=True)
            raise

    def write_text(self, name: str, text: str) -> Path:
        with self.writer(name) as f:
            f.write(text)
        return self.path(name)

    def write_json(self, name: str, data: Any) -> Path:
        return self.write_text(name, json.dumps(data, indent=2, sort_keys=True) + "\n")

    def read_json(self, name: str) -> Any:
        return json.loads(self.path(name).read_text())

    # -------------------------------------------------------------------------
    # Episodes
    # -------------------------------------------------------------------------

    def save_log(self, log: EpisodeLog, prefix: str = "") -> None:
        self.write_text(prefix + EPISODE_CSV, _csv_text(log.csv_header(), log.csv_rows()))
        timing = [[s.step, f"{s.ms:.3f}"] for s in log.steps]
        self.write_text(prefix + TIMING_CSV, _csv_text(["step", "ms"], timing))
        self.write_json(prefix + SUMMARY_JSON, log.summary())

    def save_episode(
        self, result: EpisodeResult, dt: float, prefix: str = "", plans: bool = False
    ) -> None:
        """Write every artifact of one episode."""
        self.save_log(result.log, prefix)
        self.write_json(prefix + TUBE_JSON, tube_to_dict(result.tube, dt))
        self.write_text(prefix + DATASET_JSONL, result.dataset.to_jsonl())
        if plans:
            lines = [json.dumps(p.to_dict(), sort_keys=True) for p in result.plans]
            self.write_text(prefix + PLANS_JSONL, "".join(line + "\n" for line in lines))
        logger.info(f"Wrote episode artifacts to {self.root}")

    # -------------------------------------------------------------------------
    # Batteries and ablation
    # -------------------------------------------------------------------------

    def save_battery(self, result: BatteryResult) -> Path:
        return self.write_json(f"verify-{result.suite}.json", result.to_dict())

    def save_ablation(self, rows: Sequence[dict[str, Any]]) -> Path:
        table = [["" if row.get(c) is None else row[c] for c in ABLATION_COLUMNS] for row in rows]
        return self.write_text(ABLATION_CSV, _csv_text(ABLATION_COLUMNS, table))
