#pragma once

#include <string>

#include "phalcor/room_sim.hpp"

namespace phalcor {

enum class SampleFormat { Pcm16, Float32 };

/// RIFF/WAVE, interleaved. Pcm16 clips to [-1, 1].
void write_wav(const std::string& path, const MultichannelSignal& signal,
               SampleFormat format = SampleFormat::Float32);
/// Reads 16-bit PCM or 32-bit float WAV.
MultichannelSignal read_wav(const std::string& path);

/// Interleaved little-endian float32 samples plus a JSON sidecar at
/// `path + ".json"` holding fs, channels and frames.
void write_raw_f32(const std::string& path, const MultichannelSignal& signal);
MultichannelSignal read_raw_f32(const std::string& path);

/// Dispatches on the extension: ".wav" or anything else as raw float32.
MultichannelSignal read_signal(const std::string& path);

}  // namespace phalcor
