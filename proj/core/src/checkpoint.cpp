#include "clasr/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "clasr/errors.hpp"

namespace clasr {

namespace {

constexpr char kParamsMagic[4] = {'C', 'L', 'P', 'M'};
constexpr char kStateMagic[4] = {'C', 'L', 'C', 'S'};
constexpr std::uint8_t kFormatVersion = 1;

void write_u8(std::ostream& os, std::uint8_t v) { os.put(static_cast<char>(v)); }

void write_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, 8);
}

void write_f64(std::ostream& os, double v) {
  write_u64(os, std::bit_cast<std::uint64_t>(v));
}

void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint8_t read_u8(std::istream& is) {
  int c = is.get();
  if (c == EOF) throw InputError("checkpoint: truncated file");
  return static_cast<std::uint8_t>(c);
}

std::uint64_t read_u64(std::istream& is) {
  char buf[8];
  is.read(buf, 8);
  if (is.gcount() != 8) throw InputError("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  }
  return v;
}

double read_f64(std::istream& is) { return std::bit_cast<double>(read_u64(is)); }

std::string read_string(std::istream& is) {
  const std::uint64_t n = read_u64(is);
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (is.gcount() != static_cast<std::streamsize>(n)) {
    throw InputError("checkpoint: truncated string");
  }
  return s;
}

void write_param_block(std::ostream& os, const ParamMap& params) {
  write_u64(os, params.size());
  for (const auto& e : params) {
    write_string(os, e.name);
    write_u64(os, e.value.ndim());
    for (std::size_t d : e.value.shape()) write_u64(os, d);
    for (double v : e.value.data()) write_f64(os, v);
  }
}

ParamMap read_param_block(std::istream& is) {
  ParamMap out;
  const std::uint64_t count = read_u64(is);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = read_string(is);
    const std::uint64_t ndim = read_u64(is);
    std::vector<std::size_t> shape(ndim);
    std::size_t numel = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(read_u64(is));
      numel *= d;
    }
    std::vector<double> data(numel);
    for (double& v : data) v = read_f64(is);
    out.insert(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open for reading: " + path.string());
  return is;
}

void check_magic(std::istream& is, const char (&magic)[4], const char* what) {
  char buf[4];
  is.read(buf, 4);
  if (is.gcount() != 4 || std::memcmp(buf, magic, 4) != 0) {
    throw InputError(std::string("not a ") + what + " checkpoint (bad magic)");
  }
  const std::uint8_t version = read_u8(is);
  if (version != kFormatVersion) {
    throw InputError("unsupported checkpoint version " + std::to_string(version));
  }
}

}  // namespace

void save_params(const ParamMap& params, const std::filesystem::path& path) {
  std::ofstream os = open_out(path);
  os.write(kParamsMagic, 4);
  write_u8(os, kFormatVersion);
  write_param_block(os, params);
  if (!os) throw InputError("write failed: " + path.string());
}

ParamMap load_params(const std::filesystem::path& path) {
  std::ifstream is = open_in(path);
  check_magic(is, kParamsMagic, "parameter");
  return read_param_block(is);
}

void save_cl_state(const CLState& state, const std::filesystem::path& path) {
  std::ofstream os = open_out(path);
  os.write(kStateMagic, 4);
  write_u8(os, kFormatVersion);
  write_string(os, method_name(state.method));
  write_u64(os, static_cast<std::uint64_t>(state.tasks_seen));
  std::uint8_t flags = 0;
  if (state.anchor) flags |= 1;
  if (state.importance) flags |= 2;
  if (state.frozen) flags |= 4;
  write_u8(os, flags);
  if (state.anchor) write_param_block(os, *state.anchor);
  if (state.importance) write_param_block(os, *state.importance);
  if (state.frozen) write_param_block(os, state.frozen->params);
  if (!os) throw InputError("write failed: " + path.string());
}

CLState load_cl_state(const std::filesystem::path& path, const ModelConfig& config) {
  std::ifstream is = open_in(path);
  check_magic(is, kStateMagic, "strategy-state");
  CLState state;
  state.method = parse_method(read_string(is));
  state.tasks_seen = static_cast<int>(read_u64(is));
  const std::uint8_t flags = read_u8(is);
  if (flags & 1) state.anchor = read_param_block(is);
  if (flags & 2) state.importance = read_param_block(is);
  if (flags & 4) {
    HybridModel frozen{config, read_param_block(is)};
    state.frozen = std::move(frozen);
  }
  return state;
}

// ---------------------------------------------------------------------------
// base64

namespace {
constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(std::span<const unsigned char> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 3 <= bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back(kB64Alphabet[(v >> 6) & 63]);
    out.push_back(kB64Alphabet[v & 63]);
    i += 3;
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.append("==");
  } else if (rest == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back(kB64Alphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
  auto value_of = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  if (text.size() % 4 != 0) throw InputError("base64: length not a multiple of 4");
  std::vector<unsigned char> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int j = 0; j < 4; ++j) {
      const char c = text[i + j];
      if (c == '=') {
        vals[j] = 0;
        ++pad;
      } else {
        vals[j] = value_of(c);
        if (vals[j] < 0 || pad > 0) throw InputError("base64: bad character");
      }
    }
    const std::uint32_t v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    if (pad < 2) out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<unsigned char>(v & 0xff));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset dumps

namespace {

std::string encode_features(const Tensor& features) {
  std::vector<unsigned char> bytes;
  bytes.reserve(features.numel() * 8);
  for (double v : features.data()) {
    const std::uint64_t u = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      bytes.push_back(static_cast<unsigned char>((u >> (8 * i)) & 0xff));
    }
  }
  return base64_encode(bytes);
}

Tensor decode_features(const std::string& text, std::size_t frames) {
  const std::vector<unsigned char> bytes = base64_decode(text);
  if (bytes.size() % 8 != 0) throw InputError("dataset: feature payload not 8-byte aligned");
  const std::size_t n = bytes.size() / 8;
  if (frames == 0 || n % frames != 0) {
    throw InputError("dataset: feature count does not divide into frames");
  }
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t u = 0;
    for (int j = 0; j < 8; ++j) {
      u |= static_cast<std::uint64_t>(bytes[i * 8 + j]) << (8 * j);
    }
    data[i] = std::bit_cast<double>(u);
  }
  return Tensor({frames, n / frames}, std::move(data));
}

}  // namespace

void save_task_dataset(const TaskDataset& dataset, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  auto dump_split = [&](const char* split, const std::vector<Utterance>& utts) {
    for (const Utterance& u : utts) {
      nlohmann::json rec;
      rec["task_id"] = u.task_id;
      rec["split"] = split;
      rec["noisy"] = u.noisy;
      rec["targets"] = u.targets;
      rec["T"] = u.features.dim(0);
      rec["features"] = encode_features(u.features);
      os << rec.dump() << '\n';
    }
  };
  dump_split("train", dataset.train);
  dump_split("val", dataset.val);
  dump_split("test", dataset.test);
  if (!os) throw InputError("write failed: " + path.string());
}

TaskDataset load_task_dataset(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open for reading: " + path.string());
  TaskDataset out;
  bool first = true;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded()) throw InputError("dataset: malformed JSON line");
    Utterance u;
    u.task_id = rec.at("task_id").get<int>();
    u.noisy = rec.at("noisy").get<bool>();
    u.targets = rec.at("targets").get<std::vector<int>>();
    u.features = decode_features(rec.at("features").get<std::string>(),
                                 rec.at("T").get<std::size_t>());
    if (first) {
      out.task_id = u.task_id;
      first = false;
    }
    const std::string split = rec.at("split").get<std::string>();
    if (split == "train") {
      out.train.push_back(std::move(u));
    } else if (split == "val") {
      out.val.push_back(std::move(u));
    } else if (split == "test") {
      out.test.push_back(std::move(u));
    } else {
      throw InputError("dataset: unknown split '" + split + "'");
    }
  }
  return out;
}

}  // namespace clasr
