#include "hsepsr/model_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hsepsr {

namespace {

using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

constexpr std::size_t kMagicSize = sizeof(kModelMagic) - 1;

template <typename T>
void write_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw ModelFormatError(std::string("model file truncated while reading ") + what);
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

json kernel_to_json(const KernelSpec& k) {
  json j;
  j["family"] = std::string(to_string(k.family));
  j["dimension"] = k.dimension;
  j["bandwidth"] = k.bandwidth ? json(*k.bandwidth) : json(nullptr);
  return j;
}

KernelSpec kernel_from_json(const json& j) {
  KernelSpec k;
  k.family = kernel_family_from_string(j.at("family").get<std::string>());
  k.dimension = j.at("dimension").get<Eigen::Index>();
  if (!j.at("bandwidth").is_null()) k.bandwidth = j.at("bandwidth").get<double>();
  return k;
}

// Every persisted array, by name. The same table drives save and load so the
// two cannot drift apart.
std::vector<std::pair<std::string, Eigen::MatrixXd*>> array_table(HsePsrModel& m) {
  return {
      {"windowed.histories", &m.windowed.histories},
      {"windowed.shifted_histories", &m.windowed.shifted_histories},
      {"windowed.test_actions", &m.windowed.test_actions},
      {"windowed.test_observations", &m.windowed.test_observations},
      {"windowed.shifted_test_actions", &m.windowed.shifted_test_actions},
      {"windowed.shifted_test_observations", &m.windowed.shifted_test_observations},
      {"windowed.actions", &m.windowed.actions},
      {"windowed.observations", &m.windowed.observations},
      {"gram.history", &m.grams.history},
      {"gram.shifted_history", &m.grams.shifted_history},
      {"gram.test_action", &m.grams.test_action},
      {"gram.shifted_test_action", &m.grams.shifted_test_action},
      {"gram.test_observation", &m.grams.test_observation},
      {"gram.action", &m.grams.action},
      {"gram.observation", &m.grams.observation},
      {"gram.test_observation_cross", &m.grams.test_observation_cross},
      {"gram.test_action_cross", &m.grams.test_action_cross},
      {"history_weights", &m.history_weights},
      {"shifted_history_weights", &m.shifted_history_weights},
      {"state_gram", &m.state_gram},
      {"state_gram_shifted", &m.state_gram_shifted},
      {"propagation", &m.propagation},
  };
}

std::vector<std::pair<std::string, Eigen::VectorXd*>> vector_table(HsePsrModel& m) {
  return {
      {"feasible", &m.feasible},
      {"transform.action_mean", &m.transform.action_mean},
      {"transform.action_scale", &m.transform.action_scale},
      {"transform.observation_mean", &m.transform.observation_mean},
      {"transform.observation_scale", &m.transform.observation_scale},
  };
}

void write_doubles(std::ostream& out, const double* data, Eigen::Index count) {
  for (Eigen::Index k = 0; k < count; ++k) write_le(out, std::bit_cast<std::uint64_t>(data[k]));
}

void read_doubles(std::istream& in, double* data, Eigen::Index count, const std::string& name) {
  for (Eigen::Index k = 0; k < count; ++k) {
    data[k] = std::bit_cast<double>(read_le<std::uint64_t>(in, name.c_str()));
  }
}

json read_header(std::istream& in) {
  char magic[kMagicSize];
  if (!in.read(magic, kMagicSize)) throw ModelFormatError("model file truncated");
  if (std::memcmp(magic, kModelMagic, kMagicSize) != 0) {
    throw ModelFormatError("not a model file (bad magic)");
  }
  const auto version = read_le<std::uint32_t>(in, "version");
  if (version != kModelFormatVersion) {
    throw ModelFormatError("unsupported model format version " + std::to_string(version));
  }
  const auto length = read_le<std::uint64_t>(in, "header length");
  if (length > (std::uint64_t{1} << 32)) throw ModelFormatError("implausible header length");
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) {
    throw ModelFormatError("model file truncated in header");
  }
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("corrupt model header: ") + e.what());
  }
}

}  // namespace

void save_model(const HsePsrModel& model, const std::filesystem::path& path) {
  // The tables hand out mutable pointers; nothing is written through them here.
  auto& m = const_cast<HsePsrModel&>(model);

  json h;
  h["T"] = model.samples();
  h["L"] = model.windowed.history_length;
  h["N"] = model.windowed.test_length;
  h["d_a"] = model.windowed.action_dim;
  h["d_o"] = model.windowed.observation_dim;
  h["lambda"] = model.regularizer;
  h["ridge"] = model.grams.ridge;
  h["kernels"] = {{"history", kernel_to_json(model.kernels.history)},
                  {"test_action", kernel_to_json(model.kernels.test_action)},
                  {"test_observation", kernel_to_json(model.kernels.test_observation)},
                  {"action", kernel_to_json(model.kernels.action)},
                  {"observation", kernel_to_json(model.kernels.observation)}};
  json jitter = json::array();
  for (const auto& e : model.report.jitter) {
    jitter.push_back({{"stage", e.stage}, {"index", e.index}, {"escalations", e.escalations},
                      {"ridge", e.ridge}});
  }
  h["report"] = {{"samples", model.report.samples}, {"jitter", jitter}};

  json arrays = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, mat] : array_table(m)) {
    arrays.push_back({{"name", name}, {"rows", mat->rows()}, {"cols", mat->cols()}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(mat->size()) * 8;
  }
  for (const auto& [name, vec] : vector_table(m)) {
    arrays.push_back({{"name", name}, {"rows", vec->size()}, {"cols", 1}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(vec->size()) * 8;
  }
  h["arrays"] = arrays;
  h["data_bytes"] = offset;
  const std::string text = h.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(kModelMagic, kMagicSize);
  write_le(out, kModelFormatVersion);
  write_le(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, mat] : array_table(m)) write_doubles(out, mat->data(), mat->size());
  for (const auto& [name, vec] : vector_table(m)) write_doubles(out, vec->data(), vec->size());
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

HsePsrModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const json h = read_header(in);

  HsePsrModel m;
  try {
    m.windowed.history_length = h.at("L").get<Eigen::Index>();
    m.windowed.test_length = h.at("N").get<Eigen::Index>();
    m.windowed.action_dim = h.at("d_a").get<Eigen::Index>();
    m.windowed.observation_dim = h.at("d_o").get<Eigen::Index>();
    m.regularizer = h.at("lambda").get<double>();
    m.grams.ridge = h.at("ridge").get<double>();
    const json& k = h.at("kernels");
    m.kernels.history = kernel_from_json(k.at("history"));
    m.kernels.test_action = kernel_from_json(k.at("test_action"));
    m.kernels.test_observation = kernel_from_json(k.at("test_observation"));
    m.kernels.action = kernel_from_json(k.at("action"));
    m.kernels.observation = kernel_from_json(k.at("observation"));
    m.report.samples = h.at("report").at("samples").get<Eigen::Index>();
    for (const auto& e : h.at("report").at("jitter")) {
      m.report.jitter.push_back({e.at("stage").get<std::string>(), e.at("index").get<Eigen::Index>(),
                                 e.at("escalations").get<int>(), e.at("ridge").get<double>()});
    }

    std::map<std::string, json> directory;
    for (const auto& a : h.at("arrays")) directory[a.at("name").get<std::string>()] = a;
    auto shape = [&](const std::string& name) {
      const auto it = directory.find(name);
      if (it == directory.end()) throw ModelFormatError("model file lacks array " + name);
      const auto rows = it->second.at("rows").get<Eigen::Index>();
      const auto cols = it->second.at("cols").get<Eigen::Index>();
      if (rows < 0 || cols < 0 || rows * cols > (Eigen::Index{1} << 31)) {
        throw ModelFormatError("implausible shape for array " + name);
      }
      return std::pair{rows, cols};
    };
    // Arrays are stored back to back in table order.
    for (const auto& [name, mat] : array_table(m)) {
      const auto [rows, cols] = shape(name);
      mat->resize(rows, cols);
      read_doubles(in, mat->data(), mat->size(), name);
    }
    for (const auto& [name, vec] : vector_table(m)) {
      const auto [rows, cols] = shape(name);
      if (cols != 1) throw ModelFormatError("array " + name + " must be a vector");
      vec->resize(rows);
      read_doubles(in, vec->data(), vec->size(), name);
    }
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("corrupt model header: ") + e.what());
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ModelFormatError("trailing bytes after model data");
  }

  const Eigen::Index T = h.at("T").get<Eigen::Index>();
  if (m.samples() != T || m.propagation.rows() != T || m.feasible.size() != T) {
    throw ModelFormatError("model arrays disagree with the recorded sample count");
  }
  return m;
}

std::string describe_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_header(in).dump(2);
}

}  // namespace hsepsr
