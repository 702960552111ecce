"""Frame-sequence datasets with ground truth, written to plain files.

Layout under the dataset root::

    manifest.txt
    train/00000_0.rgb   raw RGB bytes, HEIGHT*WIDTH*3, row-major
    train/00000_0.gt    one "label x_min y_min x_max y_max" line per object
    ...

Manifest lines (paths relative to the manifest)::

    # cbrl dataset v1
    game Paddles
    seed 0
    sizes 2048 128 128
    sequence_length 4
    gap 16
    frame_size 128 128
    frame <split> <sequence> <position> <timestep> <rgb path> <rgb sha256> <gt path> <gt sha256>
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from cbrl import env
from cbrl.env import HEIGHT, WIDTH, Frame, GameId, GroundTruthObject

SPLITS = ("train", "val", "test")
DEFAULT_SIZES = (2048, 128, 128)
SEQUENCE_LENGTH = 4
MIN_GAP = 16
GAP_SPREAD = 8  # extra random steps on top of MIN_GAP
MANIFEST = "manifest.txt"
_HEADER = "# cbrl dataset v1"


class DatasetError(RuntimeError):
    pass


@dataclass(frozen=True)
class FrameRecord:
    split: str
    sequence: int
    position: int
    timestep: int
    rgb_path: str
    rgb_sha256: str
    gt_path: str
    gt_sha256: str


@dataclass
class DatasetManifest:
    game: GameId
    sizes: tuple[int, int, int]
    seed: int
    root: Path
    sequence_length: int = SEQUENCE_LENGTH
    gap: int = MIN_GAP
    frame_size: tuple[int, int] = (WIDTH, HEIGHT)
    frames: list[FrameRecord] = field(default_factory=list)

    def split_frames(self, split: str) -> list[FrameRecord]:
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}; expected one of {SPLITS}")
        return [f for f in self.frames if f.split == split]

    def to_text(self) -> str:
        lines = [
            _HEADER,
            f"game {self.game.value}",
            f"seed {self.seed}",
            "sizes " + " ".join(str(s) for s in self.sizes),
            f"sequence_length {self.sequence_length}",
            f"gap {self.gap}",
            f"frame_size {self.frame_size[0]} {self.frame_size[1]}",
        ]
        for f in self.frames:
            lines.append(
                f"frame {f.split} {f.sequence} {f.position} {f.timestep} "
                f"{f.rgb_path} {f.rgb_sha256} {f.gt_path} {f.gt_sha256}"
            )
        return "\n".join(lines) + "\n"

    def save(self) -> Path:
        path = self.root / MANIFEST
        path.write_text(self.to_text())
        return path

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST
        if not path.is_file():
            raise DatasetError(f"manifest not found: {path}")
        lines = path.read_text().splitlines()
        if not lines or lines[0] != _HEADER:
            raise DatasetError(f"{path}: not a dataset manifest")
        head: dict[str, list[str]] = {}
        frames = []
        try:
            for line in lines[1:]:
                key, *vals = line.split()
                if key == "frame":
                    s, q, p, t, rp, rs, gp, gs = vals
                    frames.append(FrameRecord(s, int(q), int(p), int(t), rp, rs, gp, gs))
                else:
                    head[key] = vals
            m = cls(
                GameId.parse(head["game"][0]),
                tuple(int(v) for v in head["sizes"]),
                int(head["seed"][0]),
                path.parent,
                int(head["sequence_length"][0]),
                int(head["gap"][0]),
                tuple(int(v) for v in head["frame_size"]),
                frames,
            )
        except (KeyError, ValueError) as exc:
            raise DatasetError(f"{path}: malformed manifest ({exc})") from None
        for split, size in zip(SPLITS, m.sizes):
            if len(m.split_frames(split)) != size * m.sequence_length:
                raise DatasetError(f"{path}: split {split} lists the wrong number of frames")
        return m


def format_ground_truth(objs: list[GroundTruthObject]) -> str:
    return "".join(f"{o.label} " + " ".join(repr(float(v)) for v in o.bbox) + "\n" for o in objs)


def parse_ground_truth(text: str) -> list[GroundTruthObject]:
    out = []
    for line in text.splitlines():
        label, *vals = line.split()
        out.append(GroundTruthObject(label, tuple(float(v) for v in vals)))
    return out


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def generate_dataset(
    game: GameId | str,
    root: str | Path,
    sizes: tuple[int, int, int] = DEFAULT_SIZES,
    seed: int = 0,
) -> DatasetManifest:
    """Random-agent rollouts cut into sequences of consecutive frames.

    Sequences are separated by at least ``MIN_GAP`` unrecorded random steps;
    a sequence interrupted by the end of an episode is discarded and the
    rollout continues in a fresh episode.
    """
    game = GameId.parse(game)
    if len(sizes) != 3 or any(s < 1 for s in sizes):
        raise ValueError("sizes must be three positive integers")
    root = Path(root)
    rng = random.Random(seed)
    n_act = env.n_actions(game)
    manifest = DatasetManifest(game, tuple(int(s) for s in sizes), seed, root)

    episode = 0
    state = env.reset(game, seed * 7919 + episode)
    timestep = 0

    def advance() -> bool:
        nonlocal state, timestep, episode
        state, _, done = env.step(state, rng.randrange(n_act))
        timestep += 1
        if done:
            episode += 1
            state = env.reset(game, seed * 7919 + episode)
            timestep += 1
        return done

    for split, size in zip(SPLITS, manifest.sizes):
        (root / split).mkdir(parents=True, exist_ok=True)
        seq = 0
        while seq < size:
            for _ in range(MIN_GAP + rng.randrange(GAP_SPREAD + 1)):
                advance()
            # the step into the first captured frame is not part of the gap
            captured = []
            for _ in range(SEQUENCE_LENGTH):
                if advance():
                    break
                captured.append((env.render(state).pixels, env.ground_truth(state), timestep))
            if len(captured) < SEQUENCE_LENGTH:
                continue
            for k, (pixels, gts, t) in enumerate(captured):
                rgb_rel = f"{split}/{seq:05d}_{k}.rgb"
                gt_rel = f"{split}/{seq:05d}_{k}.gt"
                raw = pixels.tobytes()
                gt_raw = format_ground_truth(gts).encode()
                (root / rgb_rel).write_bytes(raw)
                (root / gt_rel).write_bytes(gt_raw)
                manifest.frames.append(FrameRecord(split, seq, k, t, rgb_rel, _sha(raw), gt_rel, _sha(gt_raw)))
            seq += 1
    manifest.save()
    return manifest


def _read_checked(root: Path, rel: str, digest: str) -> bytes:
    path = root / rel
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise DatasetError(f"missing dataset file: {path}") from None
    if _sha(data) != digest:
        raise DatasetError(f"corrupt dataset file (checksum mismatch): {path}")
    return data


def load_frame(manifest: DatasetManifest, rec: FrameRecord) -> tuple[Frame, list[GroundTruthObject]]:
    w, h = manifest.frame_size
    raw = _read_checked(manifest.root, rec.rgb_path, rec.rgb_sha256)
    if len(raw) != w * h * 3:
        raise DatasetError(f"corrupt dataset file (wrong size): {manifest.root / rec.rgb_path}")
    pixels = np.frombuffer(raw, dtype=np.uint8).reshape(h, w, 3).copy()
    gts = parse_ground_truth(_read_checked(manifest.root, rec.gt_path, rec.gt_sha256).decode())
    return Frame(pixels, rec.timestep), gts


def load_split(manifest: DatasetManifest, split: str) -> Iterator[tuple[list[Frame], list[list[GroundTruthObject]]]]:
    """Sequences of the split in manifest order, each as (frames, ground truths)."""
    records = manifest.split_frames(split)
    n = manifest.sequence_length
    for i in range(0, len(records), n):
        loaded = [load_frame(manifest, r) for r in records[i : i + n]]
        yield [f for f, _ in loaded], [g for _, g in loaded]
