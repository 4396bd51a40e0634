#pragma once

#include <array>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "sensor/env.hpp"

namespace sensor {

/// One episode: T+1 observations and the T actions between them. Frames and
/// actions are stored in single precision, matching the demo file format, so
/// buffer contents and files round-trip bit-exactly.
struct EpisodeRecord {
  int resolution = 0;
  std::vector<std::vector<float>> observations;  // length T+1, each resolution^2
  std::vector<std::array<float, 4>> actions;     // length T
  double true_return = 0.0;                      // metadata only, not serialized

  int length() const { return static_cast<int>(actions.size()); }
  void validate() const;
};

/// FIFO ring of episodes with a fixed capacity.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity);

  void add(EpisodeRecord episode);
  int size() const { return static_cast<int>(episodes_.size()); }
  const EpisodeRecord& episode(int i) const { return episodes_[static_cast<std::size_t>(i)]; }

 private:
  std::deque<EpisodeRecord> episodes_;
  int capacity_;
};

/// A batch of fixed-length windows: obs is [batch, seq_len, obs_dim] and
/// actions is [batch, seq_len-1, 4], both flattened row-major in doubles.
struct SequenceBatch {
  int batch = 0, seq_len = 0, obs_dim = 0;
  std::vector<double> obs;
  std::vector<double> actions;
};

/// Uniform windows over (episode, start offset). An episode is first drawn
/// from the union of the given buffers with probability proportional to each
/// buffer's episode count.
SequenceBatch sample_sequences(std::span<const ReplayBuffer* const> buffers, int batch,
                               int seq_len, Rng& rng);

// Demo file: magic "SNSRDEMO", version u32, episode count u32, then per
// episode: T u32, resolution u32, observations as little-endian float32,
// actions as little-endian float32. All integers little-endian.
inline constexpr char kDemoMagic[8] = {'S', 'N', 'S', 'R', 'D', 'E', 'M', 'O'};
inline constexpr std::uint32_t kDemoVersion = 1;

void write_demos(const std::string& path, const std::vector<EpisodeRecord>& episodes);
std::vector<EpisodeRecord> read_demos(const std::string& path);

}  // namespace sensor
