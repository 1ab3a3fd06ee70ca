#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace coreg {

class WavFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a RIFF/WAVE file holding 16 kHz mono PCM-16 little-endian audio.
std::vector<std::int16_t> read_wav_pcm16(const std::string& path);

void write_wav_pcm16(const std::string& path, std::span<const std::int16_t> samples,
                     int sample_rate = 16000);

}  // namespace coreg
