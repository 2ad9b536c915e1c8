#pragma once

#include <string>
#include <vector>

namespace samast::dsp {

// Mono PCM signal, samples nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 16000;
  std::string source_id;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
};

}  // namespace samast::dsp
