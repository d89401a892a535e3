"""Frame capture, PGM image sequences and run summaries."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import IO

FRAME_PATTERN = "frame_{:06d}.pgm"


@dataclass(frozen=True)
class Frame:
    """Occupancy raster, row-major; 0 is vacant, k > 0 the occupant's agent class."""

    time: float
    width: int
    height: int
    grid: bytes
    classes: int = 1

    def occupied(self) -> int:
        return sum(1 for v in self.grid if v)


@dataclass(frozen=True)
class RunSummary:
    final_time: float
    events_executed: int
    agents_alive: int
    agents_absorbed: int

    @property
    def agents_created(self) -> int:
        return self.agents_alive + self.agents_absorbed


def capture_frame(world, t: float) -> Frame:
    layer = world.layer
    w = layer.width
    grid = bytearray(w * layer.height)
    agents = world.agents
    for agent_id, (x, y) in layer.positions.items():
        grid[y * w + x] = agents[agent_id].class_index
    return Frame(t, w, layer.height, bytes(grid), max(world.agent_classes, 1))


def encode_pgm(frame: Frame) -> bytes:
    """Binary PGM: header ``P5\\n<w> <h>\\n255\\n`` then one byte per cell."""
    if frame.classes <= 1:
        lut = [0] + [255] * 255
    else:
        lut = [0] + [min(255, round(255 * k / frame.classes)) for k in range(1, 256)]
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    return header + bytes(lut[v] for v in frame.grid)


def decode_pgm(data: bytes) -> tuple[int, int, bytes]:
    magic, dims, maxval, pixels = data.split(b"\n", 3)
    if magic != b"P5" or maxval != b"255":
        raise ValueError("not an 8-bit binary PGM")
    width, height = (int(v) for v in dims.split())
    if len(pixels) != width * height:
        raise ValueError("truncated PGM raster")
    return width, height, pixels


def write_frame(frame: Frame, directory: str | os.PathLike) -> Path:
    directory = Path(directory)
    path = directory / FRAME_PATTERN.format(int(frame.time))
    try:
        directory.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_pgm(frame))
    except OSError as exc:
        raise OSError(f"cannot write frame to {path}: {exc.strerror}") from exc
    return path


def summary_json(summary: RunSummary) -> str:
    return json.dumps(asdict(summary), sort_keys=True)


def write_summary(summary: RunSummary, stream: IO[str]) -> None:
    stream.write(f"final time:      {summary.final_time:g}\n")
    stream.write(f"events executed: {summary.events_executed}\n")
    stream.write(f"agents alive:    {summary.agents_alive}\n")
    stream.write(f"agents absorbed: {summary.agents_absorbed}\n")
    stream.write(summary_json(summary) + "\n")


class ImageSequence:
    """Frame observer: a self-rescheduling daemon event at every integer time."""

    def __init__(self, world, directory: str | os.PathLike | None = None, phase: int = 0):
        self.world = world
        self.directory = directory
        self.phase = phase
        self.frames: list[Frame] = []

    def start(self) -> None:
        self.world.schedule.schedule_at(0.0, self._fire, phase=self.phase, daemon=True, label="frame")

    def _fire(self, event) -> None:
        frame = capture_frame(self.world, event.time)
        self.frames.append(frame)
        if self.directory is not None:
            write_frame(frame, self.directory)
        self.world.schedule.schedule_at(event.time + 1.0, self._fire, phase=self.phase,
                                        daemon=True, label="frame")
