"""WAV reading and writing on top of :mod:`scipy.io.wavfile`.

Integer PCM (16, 24 and 32 bit) is scaled to [-1, 1); 32- and 64-bit IEEE
float is returned unchanged, so float files round-trip sample-exactly.
8-bit and compressed encodings are rejected.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .core import Waveform
from .errors import ChannelOutOfRange, CorruptFile, UnsupportedFormat

_INT_SCALE = {np.dtype(np.int16): 2.0**15, np.dtype(np.int32): 2.0**31}

WAV_FORMATS = ("float64", "float32", "pcm16", "pcm24")


@dataclass(frozen=True)
class WavData:
    """Decoded file contents, shape ``(n_samples, n_channels)``."""

    samples: np.ndarray
    sample_rate_hz: int
    encoding: str

    @property
    def n_channels(self) -> int:
        return self.samples.shape[1]

    def channel(self, index: int) -> Waveform:
        if not 0 <= index < self.n_channels:
            raise ChannelOutOfRange(f"channel {index} requested from a {self.n_channels}-channel file")
        return Waveform(self.samples[:, index], self.sample_rate_hz)


def load_wav(path) -> WavData:
    """Read a WAV file.

    Raises
    ------
    FileNotFoundError
        if ``path`` does not exist.
    CorruptFile
        if the file is not a well-formed RIFF/WAVE file or is truncated.
    UnsupportedFormat
        for 8-bit, compressed or otherwise unsupported encodings.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with warnings.catch_warnings():
        warnings.simplefilter("error", wavfile.WavFileWarning)
        try:
            rate, data = wavfile.read(path)
        except wavfile.WavFileWarning as exc:
            if "EOF" in str(exc):
                raise CorruptFile(f"{path}: {exc}") from None
            # unknown chunks and similar are harmless; read again quietly
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = _read_or_raise(path)
        except (ValueError, EOFError, OSError) as exc:
            raise _classify(path, exc) from None

    if data.ndim == 1:
        data = data[:, None]
    if data.shape[0] == 0:
        raise CorruptFile(f"{path}: no audio samples")
    dtype = data.dtype
    if dtype in _INT_SCALE:
        samples = data.astype(np.float64) / _INT_SCALE[dtype]
        encoding = f"pcm{dtype.itemsize * 8}"
    elif dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
        encoding = f"float{dtype.itemsize * 8}"
    else:
        raise UnsupportedFormat(f"{path}: unsupported sample type {dtype}")
    return WavData(samples, int(rate), encoding)


def _read_or_raise(path):
    try:
        return wavfile.read(path)
    except (ValueError, EOFError, OSError) as exc:
        raise _classify(path, exc) from None


def _classify(path, exc):
    msg = str(exc)
    if "Unknown wave file format" in msg or "Unsupported bit depth" in msg:
        return UnsupportedFormat(f"{path}: {msg}")
    return CorruptFile(f"{path}: {msg}")


def load_channel(path, index: int = 0) -> Waveform:
    return load_wav(path).channel(index)


def write_wav(path, samples, sample_rate_hz: int, fmt: str = "float64") -> None:
    """Write ``samples`` (1-D, or ``(n_samples, n_channels)``) as WAV.

    ``fmt`` is one of ``float64``, ``float32``, ``pcm16`` or ``pcm24``.
    Integer formats clip to [-1, 1).
    """
    x = np.asarray(samples, dtype=np.float64)
    if fmt == "float64":
        wavfile.write(path, sample_rate_hz, x)
    elif fmt == "float32":
        wavfile.write(path, sample_rate_hz, x.astype(np.float32))
    elif fmt == "pcm16":
        wavfile.write(path, sample_rate_hz, _quantize(x, 16).astype(np.int16))
    elif fmt == "pcm24":
        _write_pcm24(path, _quantize(x, 24), sample_rate_hz)
    else:
        raise UnsupportedFormat(f"unknown output format {fmt!r}; choose from {WAV_FORMATS}")


def _quantize(x: np.ndarray, bits: int) -> np.ndarray:
    full = 2.0 ** (bits - 1)
    return np.clip(np.round(x * full), -full, full - 1).astype(np.int32)


def _write_pcm24(path, q: np.ndarray, sample_rate_hz: int) -> None:
    # scipy cannot write 24-bit; pack the low three bytes of each int32
    q = q.reshape(q.shape[0], -1)
    n_channels = q.shape[1]
    raw = q.astype("<i4").view(np.uint8).reshape(-1, 4)[:, :3].tobytes()
    block = 3 * n_channels
    pad = b"\0" * (len(raw) % 2)
    header = b"".join([
        b"RIFF", (36 + len(raw) + len(pad)).to_bytes(4, "little"), b"WAVE",
        b"fmt ", (16).to_bytes(4, "little"),
        (1).to_bytes(2, "little"), n_channels.to_bytes(2, "little"),
        int(sample_rate_hz).to_bytes(4, "little"), (sample_rate_hz * block).to_bytes(4, "little"),
        block.to_bytes(2, "little"), (24).to_bytes(2, "little"),
        b"data", len(raw).to_bytes(4, "little"),
    ])
    with open(path, "wb") as f:
        f.write(header)
        f.write(raw + pad)
