"""Log-mel filterbank front end, one-shot and streaming."""

import logging
from pathlib import Path
from typing import List, Union

import numpy as np
from scipy.io import wavfile

from ..errors import ConfigurationError, EmptyStreamError, FormatError
from ..models.features import AudioBuffer, FeatureConfig, FeatureFrame

logger = logging.getLogger(__name__)


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filter_weights(config: FeatureConfig) -> np.ndarray:
    """
    Triangular mel filters over the rfft bins.

    Returns:
        (num_bins, fft_size // 2 + 1) weight matrix, each filter peaking at 1
        on its center frequency.
    """
    config.validate()
    fft_freqs = np.fft.rfftfreq(config.fft_size, d=1.0 / config.sample_rate_hz)
    mel_points = np.linspace(
        hz_to_mel(config.mel_low_hz), hz_to_mel(config.mel_high_hz), config.num_bins + 2
    )
    hz_points = mel_to_hz(mel_points)

    weights = np.zeros((config.num_bins, fft_freqs.shape[0]), dtype=np.float64)
    for band in range(config.num_bins):
        left, center, right = hz_points[band], hz_points[band + 1], hz_points[band + 2]
        rising = (fft_freqs - left) / (center - left)
        falling = (right - fft_freqs) / (right - center)
        weights[band] = np.maximum(0.0, np.minimum(rising, falling))
    return weights


def filter_centers_hz(config: FeatureConfig) -> np.ndarray:
    mel_points = np.linspace(
        hz_to_mel(config.mel_low_hz), hz_to_mel(config.mel_high_hz), config.num_bins + 2
    )
    return mel_to_hz(mel_points[1:-1])


class StreamingFeatureExtractor:
    """
    Turns PCM chunks into filterbank frames.

    Samples that do not yet fill a frame are kept until the next push, so any
    chunking of the same audio yields the same frames.
    """

    def __init__(self, config: FeatureConfig):
        config.validate()
        self.config = config
        self._weights = mel_filter_weights(config)
        self._window = np.hamming(config.frame_samples)
        self._buffer = np.zeros(0, dtype=np.int16)
        self._next_index = 0
        self._running_sum = np.zeros(config.num_bins, dtype=np.float64)

    @property
    def frames_emitted(self) -> int:
        return self._next_index

    def push(self, samples) -> List[FeatureFrame]:
        """Append samples and return every frame that became complete."""
        samples = np.asarray(samples, dtype=np.int16).reshape(-1)
        self._buffer = np.concatenate([self._buffer, samples])

        frame_len, hop = self.config.frame_samples, self.config.hop_samples
        frames = []
        offset = 0
        while offset + frame_len <= self._buffer.shape[0]:
            frames.append(self._frame(self._buffer[offset : offset + frame_len]))
            offset += hop
        self._buffer = self._buffer[offset:]
        return frames

    def _frame(self, samples: np.ndarray) -> FeatureFrame:
        spectrum = np.fft.rfft(samples.astype(np.float64) * self._window, n=self.config.fft_size)
        power = spectrum.real**2 + spectrum.imag**2
        energies = self._weights @ power
        values = np.log(np.maximum(energies, self.config.log_floor))

        if self.config.running_mean:
            self._running_sum += values
            values = values - self._running_sum / (self._next_index + 1)

        frame = FeatureFrame(values.astype(np.float32), self._next_index)
        self._next_index += 1
        return frame


def mel_filterbank(audio: AudioBuffer, config: FeatureConfig) -> List[FeatureFrame]:
    """
    Extract log-mel frames from a whole buffer.

    Raises:
        EmptyStreamError: audio shorter than one frame
        ConfigurationError: invalid config or sample-rate mismatch
    """
    config.validate()
    if audio.sample_rate_hz != config.sample_rate_hz:
        raise ConfigurationError(
            f"audio is {audio.sample_rate_hz} Hz but features expect {config.sample_rate_hz} Hz"
        )
    if len(audio) < config.frame_samples:
        raise EmptyStreamError(
            f"{len(audio)} samples is shorter than one frame ({config.frame_samples})"
        )
    frames = StreamingFeatureExtractor(config).push(audio.samples)
    logger.debug(f"Extracted {len(frames)} frames from {audio.duration_s:.2f}s of audio")
    return frames


def expected_frame_count(num_samples: int, config: FeatureConfig) -> int:
    if num_samples < config.frame_samples:
        return 0
    return (num_samples - config.frame_samples) // config.hop_samples + 1


def read_wav(path: Union[str, Path]) -> AudioBuffer:
    """Load a mono 16-bit PCM WAV file."""
    sample_rate, data = wavfile.read(str(path))
    if data.dtype != np.int16:
        raise FormatError(f"{path}: expected 16-bit PCM, got {data.dtype}")
    if data.ndim != 1:
        raise FormatError(f"{path}: expected mono audio, got {data.shape[1]} channels")
    return AudioBuffer(data, int(sample_rate))


def write_wav(path: Union[str, Path], audio: AudioBuffer) -> None:
    wavfile.write(str(path), audio.sample_rate_hz, audio.samples)
