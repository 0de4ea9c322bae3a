"""Tests for the log-mel front end."""

import numpy as np
import pytest

from btnn_spotter.errors import ConfigurationError, EmptyStreamError
from btnn_spotter.models.features import AudioBuffer, FeatureConfig
from btnn_spotter.services.features import (
    StreamingFeatureExtractor,
    expected_frame_count,
    mel_filter_weights,
    mel_filterbank,
    read_wav,
    write_wav,
)


def tone(freq_hz, seconds=1.0, amplitude=8000, rate=16000):
    t = np.arange(int(seconds * rate)) / rate
    return AudioBuffer(np.round(amplitude * np.sin(2 * np.pi * freq_hz * t)).astype(np.int16), rate)


class TestMelFilterbank:
    """Tests for whole-buffer extraction."""

    def test_one_second_of_silence_gives_98_floor_frames(self):
        config = FeatureConfig()
        frames = mel_filterbank(AudioBuffer(np.zeros(16000)), config)

        assert len(frames) == 98
        assert all(frame.dim == 40 for frame in frames)
        assert all(np.all(frame.values == config.floor_value) for frame in frames)

    def test_frame_indices_are_consecutive(self):
        frames = mel_filterbank(tone(440, 0.2), FeatureConfig())
        assert [frame.index for frame in frames] == list(range(len(frames)))

    def test_frame_count_matches_formula(self):
        config = FeatureConfig()
        for num_samples in (400, 559, 560, 16000, 16123):
            audio = AudioBuffer(np.zeros(num_samples))
            assert len(mel_filterbank(audio, config)) == expected_frame_count(num_samples, config)

    def test_tone_peaks_in_a_filter_covering_its_frequency(self):
        config = FeatureConfig()
        frames = mel_filterbank(tone(1000), config)
        mean = np.mean([frame.values for frame in frames], axis=0)

        peak = int(np.argmax(mean))
        weights = mel_filter_weights(config)
        fft_bin = int(round(1000 * config.fft_size / config.sample_rate_hz))
        assert weights[peak, fft_bin] > 0

    def test_sign_flip_leaves_features_unchanged(self, rng):
        samples = rng.integers(-20000, 20000, size=4000).astype(np.int16)
        config = FeatureConfig()

        original = mel_filterbank(AudioBuffer(samples), config)
        flipped = mel_filterbank(AudioBuffer(-samples.astype(np.int32)), config)

        for a, b in zip(original, flipped):
            np.testing.assert_allclose(a.values, b.values, rtol=1e-5, atol=1e-5)

    def test_too_short_audio_raises(self):
        with pytest.raises(EmptyStreamError):
            mel_filterbank(AudioBuffer(np.zeros(399)), FeatureConfig())

    def test_sample_rate_mismatch_raises(self):
        with pytest.raises(ConfigurationError):
            mel_filterbank(AudioBuffer(np.zeros(8000), 8000), FeatureConfig())

    def test_invalid_config_raises(self):
        with pytest.raises(ConfigurationError):
            mel_filterbank(AudioBuffer(np.zeros(16000)), FeatureConfig(fft_size=256))


class TestStreamingFeatureExtractor:
    """Tests for chunked extraction."""

    @pytest.mark.parametrize("chunk", [1, 37, 160, 401, 5000])
    def test_chunked_matches_one_shot(self, rng, chunk):
        samples = rng.integers(-3000, 3000, size=7000).astype(np.int16)
        config = FeatureConfig()
        expected = mel_filterbank(AudioBuffer(samples), config)

        extractor = StreamingFeatureExtractor(config)
        frames = []
        for offset in range(0, len(samples), chunk):
            frames.extend(extractor.push(samples[offset : offset + chunk]))

        assert frames == expected
        assert extractor.frames_emitted == len(expected)

    def test_running_mean_centres_a_constant_tone(self):
        config = FeatureConfig(running_mean=True)
        frames = mel_filterbank(tone(1000), config)

        np.testing.assert_allclose(frames[0].values, 0.0, atol=1e-5)
        assert np.max(np.abs(frames[-1].values)) < 1.0


class TestWavFiles:
    def test_round_trip(self, tmp_path):
        audio = tone(300, 0.1)
        write_wav(tmp_path / "a.wav", audio)

        loaded = read_wav(tmp_path / "a.wav")

        assert loaded.sample_rate_hz == 16000
        np.testing.assert_array_equal(loaded.samples, audio.samples)
