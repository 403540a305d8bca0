from pathlib import Path
from typing import Dict, List, Mapping, Optional

import numpy as np

from ..codec.video_io import SUFFIX, read_video
from ..errors import DomainError
from ..utils.logging import log_warning


class ClipSource:
    """A named collection of clips, each ``[T, H, W, 3]`` in ``[-1, 1]``."""

    def __init__(self):
        pass

    def list_clips(self) -> List[str]:
        raise NotImplementedError

    def load_clip(self, clip_id: str) -> Optional[np.ndarray]:
        raise NotImplementedError

    def __len__(self) -> int:
        return len(self.list_clips())


class ArraySource(ClipSource):
    """
    Minimal in-memory source:
    - pass a single (clip_id, clip) OR a dict mapping ids -> arrays
    - list_clips() returns the ids in insertion order
    - load_clip(clip_id) returns the stored array or None
    """
    def __init__(self,
                 clip_id: Optional[str] = None,
                 clip: Optional[np.ndarray] = None,
                 clips: Optional[Mapping[str, np.ndarray]] = None) -> None:
        super().__init__()

        if clips is not None and (clip_id is not None or clip is not None):
            raise ValueError("Provide EITHER `clips` OR (`clip_id` and `clip`).")

        if clips is not None:
            self._clips: Dict[str, np.ndarray] = {k: _checked(k, v) for k, v in clips.items()}
        else:
            if not clip_id or clip is None:
                raise ValueError("Provide `clip_id` and `clip` for single-clip usage.")
            self._clips = {clip_id: _checked(clip_id, clip)}

    def list_clips(self) -> List[str]:
        return list(self._clips)

    def load_clip(self, clip_id: str) -> Optional[np.ndarray]:
        clip = self._clips.get(clip_id)
        return None if clip is None else clip.copy()


class FileSystemSource(ClipSource):
    def __init__(self, clip_dir="."):
        super().__init__()
        self.clip_dir = clip_dir

    def list_clips(self) -> List[str]:
        """Every ``*.lfqv`` file below clip_dir, as a relative path without suffix."""
        if not self.clip_dir:
            return []
        root = Path(self.clip_dir)
        if not root.is_dir():
            return []
        ids = []
        for f in sorted(root.rglob(f"*{SUFFIX}")):
            if f.is_file():
                ids.append(str(f.relative_to(root).with_suffix("")).replace("\\", "/"))
        return ids

    def load_clip(self, clip_id: str) -> Optional[np.ndarray]:
        if not clip_id or not self.clip_dir:
            return None
        path = Path(self.clip_dir) / (clip_id + SUFFIX)
        if not path.is_file():
            return None
        try:
            return _checked(clip_id, read_video(path))
        except (OSError, ValueError) as e:
            log_warning(f"Error loading {path}: {e}")
            return None


def _checked(clip_id: str, clip) -> np.ndarray:
    clip = np.asarray(clip, dtype=np.float64)
    if clip.ndim != 4 or clip.shape[-1] != 3:
        raise DomainError(f"clip '{clip_id}' must be [T,H,W,3], got {clip.shape}")
    if clip.size and (clip.min() < -1.0 or clip.max() > 1.0):
        raise DomainError(f"clip '{clip_id}' has pixels outside [-1, 1]")
    return clip


from .synthetic import SyntheticSource, synth_clip  # noqa: E402

__all__ = ["ClipSource", "ArraySource", "FileSystemSource", "SyntheticSource", "synth_clip"]
