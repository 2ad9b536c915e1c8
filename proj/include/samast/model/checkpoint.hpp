#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "samast/core/binary_io.hpp"
#include "samast/core/error.hpp"
#include "samast/core/key_values.hpp"
#include "samast/core/param_set.hpp"
#include "samast/model/ast.hpp"
#include "samast/model/config.hpp"
#include "samast/optim/optimizer.hpp"

namespace samast::model {

inline constexpr std::uint32_t checkpoint_version = 1;

// Layout (little-endian):
//   "ASTC" u32 version
//   string config    (key = value text, model.* keys)
//   string state     (key = value text: seed, epoch, optimizer)
//   u64 entry count, then per entry: string name, u32 rank, u64 dims[rank], f64 data
// Entries are the parameters in model order, followed by optimizer moments
// named "opt.m/<param>" and "opt.v/<param>" when optimizer state is present.
struct ModelCheckpoint {
  std::uint32_t version = checkpoint_version;
  ModelConfig config;
  ParamSet params;
  std::optional<optim::OptimizerState> optimizer;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  // Free-form extra state (training config etc.), stored verbatim.
  kv::Record extra;

  friend bool operator==(const ModelCheckpoint&, const ModelCheckpoint&) = default;
};

namespace detail {

inline void write_entry(io::Writer& w, const std::string& name, const Tensor& t) {
  w.string(name);
  w.u32(static_cast<std::uint32_t>(t.shape().size()));
  for (std::size_t d : t.shape()) w.u64(d);
  w.f64s(t.data());
}

struct Entry {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

inline Entry read_entry(io::Reader& r) {
  Entry e;
  e.name = r.string("entry name");
  const std::uint32_t rank = r.u32("entry rank");
  if (rank == 0 || rank > 8) throw LoadError("entry " + e.name + " has rank " + std::to_string(rank));
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint64_t d = r.u64("entry shape");
    if (d == 0 || d > (std::uint64_t{1} << 32))
      throw ShapeMismatchError("entry " + e.name + " has dimension " + std::to_string(d), e.name);
    e.shape.push_back(d);
    count *= d;
  }
  if (count * sizeof(double) > r.remaining())
    throw TruncatedFileError("truncated while reading data of " + e.name);
  e.data = r.f64s(count, "entry data");
  return e;
}

}  // namespace detail

inline io::Bytes encode_checkpoint(const ModelCheckpoint& ck) {
  require_params(ck.config, ck.params);
  io::Writer w;
  w.magic("ASTC");
  w.u32(ck.version);
  w.string(kv::to_text(to_record(ck.config)));
  kv::Record state{{"seed", std::to_string(ck.seed)},
                   {"epoch", std::to_string(ck.epoch)},
                   {"optimizer", kv::from_bool(ck.optimizer.has_value())}};
  if (ck.optimizer) state.emplace_back("optimizer.step", std::to_string(ck.optimizer->step));
  for (const auto& kvp : ck.extra) state.push_back(kvp);
  w.string(kv::to_text(state));
  const std::size_t n = ck.params.size();
  w.u64(ck.optimizer ? 3 * n : n);
  for (std::size_t i = 0; i < n; ++i) detail::write_entry(w, ck.params.name(i), ck.params[i]);
  if (ck.optimizer) {
    require_same_layout(ck.params, ck.optimizer->first_moment, "checkpoint moments");
    require_same_layout(ck.params, ck.optimizer->second_moment, "checkpoint moments");
    for (std::size_t i = 0; i < n; ++i)
      detail::write_entry(w, "opt.m/" + ck.params.name(i), ck.optimizer->first_moment[i]);
    for (std::size_t i = 0; i < n; ++i)
      detail::write_entry(w, "opt.v/" + ck.params.name(i), ck.optimizer->second_moment[i]);
  }
  return w.take();
}

inline ModelCheckpoint decode_checkpoint(const io::Bytes& bytes) {
  io::Reader r(bytes);
  if (!r.magic("ASTC")) {
    if (bytes.size() < 4) throw TruncatedFileError("truncated while reading magic");
    throw LoadError("not a checkpoint file (bad magic)");
  }
  ModelCheckpoint ck;
  ck.version = r.u32("version");
  if (ck.version != checkpoint_version) {
    throw VersionMismatchError("checkpoint version " + std::to_string(ck.version) +
                               ", expected " + std::to_string(checkpoint_version));
  }
  std::map<std::string, std::string> config_kv, state_kv;
  try {
    config_kv = kv::parse_text(r.string("config record"));
    state_kv = kv::parse_text(r.string("state record"));
  } catch (const ParseError& e) {
    throw LoadError(std::string("checkpoint header: ") + e.what());
  }
  ck.config = apply_record(ModelConfig{}, config_kv);
  ck.config.validate();

  static const std::map<std::string, int> reserved{
      {"seed", 0}, {"epoch", 0}, {"optimizer", 0}, {"optimizer.step", 0}};
  auto field = [&](const std::string& key) -> const std::string& {
    auto it = state_kv.find(key);
    if (it == state_kv.end()) throw LoadError("checkpoint state record lacks '" + key + "'");
    return it->second;
  };
  ck.seed = kv::to_u64("seed", field("seed"));
  ck.epoch = kv::to_u64("epoch", field("epoch"));
  const bool has_opt = kv::to_bool("optimizer", field("optimizer"));
  for (const auto& [k, v] : state_kv)
    if (!reserved.contains(k)) ck.extra.emplace_back(k, v);

  const ParamSet expected = init_params(ck.config, 0);
  const std::size_t n = expected.size();
  const std::uint64_t count = r.u64("entry count");
  if (count != (has_opt ? 3 * n : n)) {
    throw LoadError("checkpoint has " + std::to_string(count) + " entries, config needs " +
                    std::to_string(has_opt ? 3 * n : n));
  }
  auto read_set = [&](const std::string& prefix) {
    ParamSet set;
    for (std::size_t i = 0; i < n; ++i) {
      detail::Entry e = detail::read_entry(r);
      const std::string want = prefix + expected.name(i);
      if (e.name != want) throw LoadError("expected entry " + want + ", found " + e.name);
      if (e.shape != expected[i].shape()) {
        throw ShapeMismatchError("parameter " + e.name + " has shape " + shape_string(e.shape) +
                                     ", config needs " + shape_string(expected[i].shape()),
                                 e.name);
      }
      set.add(expected.name(i), Tensor(std::move(e.shape), std::move(e.data)));
    }
    return set;
  };
  ck.params = read_set("");
  if (has_opt) {
    optim::OptimizerState st;
    st.step = kv::to_u64("optimizer.step", field("optimizer.step"));
    st.first_moment = read_set("opt.m/");
    st.second_moment = read_set("opt.v/");
    ck.optimizer = std::move(st);
  }
  if (!r.done()) throw LoadError("trailing bytes after the last checkpoint entry");
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& ck) {
  io::write_file(path, encode_checkpoint(ck));
}

inline ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path));
}

// Loads and requires the stored architecture to match `expected`. Measured
// input statistics may differ.
inline ModelCheckpoint load_checkpoint(const std::filesystem::path& path,
                                       const ModelConfig& expected) {
  ModelCheckpoint ck = load_checkpoint(path);
  if (!same_architecture(ck.config, expected)) {
    throw ConfigMismatchError("checkpoint " + path.string() +
                              " was written with a different model config");
  }
  return ck;
}

}  // namespace samast::model
