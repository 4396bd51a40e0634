#include "sensor/episode.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "sensor/errors.hpp"

namespace sensor {

namespace {

static_assert(std::endian::native == std::endian::little, "demo io assumes a little-endian host");

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& is, const std::string& what) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw FatalError("demos: truncated while reading " + what);
  return v;
}

}  // namespace

void EpisodeRecord::validate() const {
  if (observations.size() != actions.size() + 1) {
    throw FatalError("episode: need len(observations) == len(actions) + 1, got " +
                     std::to_string(observations.size()) + " and " + std::to_string(actions.size()));
  }
  const std::size_t frame = static_cast<std::size_t>(resolution) * resolution;
  for (const auto& o : observations) {
    if (o.size() != frame) throw FatalError("episode: frame size does not match resolution");
  }
  for (const auto& a : actions) {
    for (float v : a) {
      if (!(v >= -1.0f && v <= 1.0f)) throw FatalError("episode: action outside [-1, 1]");
    }
  }
}

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw ConfigError("replay: capacity must be >= 1");
}

void ReplayBuffer::add(EpisodeRecord episode) {
  episode.validate();
  episodes_.push_back(std::move(episode));
  while (static_cast<int>(episodes_.size()) > capacity_) episodes_.pop_front();
}

SequenceBatch sample_sequences(std::span<const ReplayBuffer* const> buffers, int batch,
                               int seq_len, Rng& rng) {
  if (batch < 1 || seq_len < 2) throw ConfigError("sample_sequences: need batch >= 1, seq_len >= 2");
  int total_episodes = 0;
  int obs_dim = -1;
  for (const auto* b : buffers) {
    total_episodes += b->size();
    for (int i = 0; i < b->size(); ++i) {
      const auto& ep = b->episode(i);
      if (ep.length() + 1 < seq_len) {
        throw FatalError("sample_sequences: episode of length " + std::to_string(ep.length()) +
                         " too short for seq_len " + std::to_string(seq_len));
      }
      const int dim = ep.resolution * ep.resolution;
      if (obs_dim == -1) obs_dim = dim;
      if (dim != obs_dim) throw FatalError("sample_sequences: mixed resolutions in buffers");
    }
  }
  if (total_episodes == 0) {
    throw FatalError("sample_sequences: all buffers empty; collect seed episodes first");
  }

  SequenceBatch out;
  out.batch = batch;
  out.seq_len = seq_len;
  out.obs_dim = obs_dim;
  out.obs.resize(static_cast<std::size_t>(batch) * seq_len * obs_dim);
  out.actions.resize(static_cast<std::size_t>(batch) * (seq_len - 1) * 4);

  for (int bi = 0; bi < batch; ++bi) {
    // episode drawn uniformly over the union => proportional to buffer counts
    int pick = static_cast<int>(rng.below(static_cast<std::uint64_t>(total_episodes)));
    const EpisodeRecord* ep = nullptr;
    for (const auto* b : buffers) {
      if (pick < b->size()) {
        ep = &b->episode(pick);
        break;
      }
      pick -= b->size();
    }
    const int max_start = ep->length() + 1 - seq_len;
    const int start = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_start + 1)));
    for (int t = 0; t < seq_len; ++t) {
      const auto& frame = ep->observations[static_cast<std::size_t>(start + t)];
      double* dst = out.obs.data() + (static_cast<std::size_t>(bi) * seq_len + t) * obs_dim;
      for (int k = 0; k < obs_dim; ++k) dst[k] = static_cast<double>(frame[static_cast<std::size_t>(k)]);
    }
    for (int t = 0; t < seq_len - 1; ++t) {
      const auto& a = ep->actions[static_cast<std::size_t>(start + t)];
      double* dst = out.actions.data() + (static_cast<std::size_t>(bi) * (seq_len - 1) + t) * 4;
      for (int k = 0; k < 4; ++k) dst[k] = static_cast<double>(a[static_cast<std::size_t>(k)]);
    }
  }
  return out;
}

void write_demos(const std::string& path, const std::vector<EpisodeRecord>& episodes) {
  for (const auto& ep : episodes) ep.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FatalError("demos: cannot write " + path);
  os.write(kDemoMagic, 8);
  write_u32(os, kDemoVersion);
  write_u32(os, static_cast<std::uint32_t>(episodes.size()));
  for (const auto& ep : episodes) {
    write_u32(os, static_cast<std::uint32_t>(ep.length()));
    write_u32(os, static_cast<std::uint32_t>(ep.resolution));
    for (const auto& frame : ep.observations) {
      os.write(reinterpret_cast<const char*>(frame.data()),
               static_cast<std::streamsize>(frame.size() * sizeof(float)));
    }
    for (const auto& a : ep.actions) {
      os.write(reinterpret_cast<const char*>(a.data()), static_cast<std::streamsize>(4 * sizeof(float)));
    }
  }
  if (!os) throw FatalError("demos: write failed for " + path);
}

std::vector<EpisodeRecord> read_demos(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FatalError("demos: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kDemoMagic, 8) != 0) throw FatalError("demos: bad magic in " + path);
  const std::uint32_t version = read_u32(is, "version");
  if (version != kDemoVersion) {
    throw FatalError("demos: version mismatch in " + path + " (file " + std::to_string(version) +
                     ", expected " + std::to_string(kDemoVersion) + ")");
  }
  const std::uint32_t count = read_u32(is, "episode count");
  std::vector<EpisodeRecord> episodes;
  episodes.reserve(count);
  for (std::uint32_t e = 0; e < count; ++e) {
    EpisodeRecord ep;
    const std::uint32_t steps = read_u32(is, "episode length");
    ep.resolution = static_cast<int>(read_u32(is, "resolution"));
    const std::size_t frame = static_cast<std::size_t>(ep.resolution) * ep.resolution;
    ep.observations.resize(steps + 1);
    for (auto& o : ep.observations) {
      o.resize(frame);
      is.read(reinterpret_cast<char*>(o.data()), static_cast<std::streamsize>(frame * sizeof(float)));
      if (!is) throw FatalError("demos: truncated observations in " + path);
    }
    ep.actions.resize(steps);
    for (auto& a : ep.actions) {
      is.read(reinterpret_cast<char*>(a.data()), static_cast<std::streamsize>(4 * sizeof(float)));
      if (!is) throw FatalError("demos: truncated actions in " + path);
    }
    episodes.push_back(std::move(ep));
  }
  is.peek();
  if (!is.eof()) throw FatalError("demos: trailing bytes in " + path);
  return episodes;
}

}  // namespace sensor
