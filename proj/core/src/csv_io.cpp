#include "hsepsr/csv_io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hsepsr {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t k = 0;
  while (k < s.size() && s[k] == ' ') ++k;
  return s.substr(k);
}

double parse_double(const std::string& text, std::size_t line_no) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": not a number: '" + t + "'");
  }
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return f;
}

}  // namespace

void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out) {
  trajectory.validate();
  out << 't';
  for (Eigen::Index k = 0; k < trajectory.action_dim(); ++k) out << ",a_" << k;
  for (Eigen::Index k = 0; k < trajectory.observation_dim(); ++k) out << ",o_" << k;
  out << '\n';
  for (Eigen::Index t = 0; t < trajectory.length(); ++t) {
    out << t;
    for (Eigen::Index k = 0; k < trajectory.action_dim(); ++k) {
      out << ',' << format_double(trajectory.actions(t, k));
    }
    for (Eigen::Index k = 0; k < trajectory.observation_dim(); ++k) {
      out << ',' << format_double(trajectory.observations(t, k));
    }
    out << '\n';
  }
}

void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& path) {
  auto f = open_out(path);
  write_trajectory_csv(trajectory, f);
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

Trajectory read_trajectory_csv(std::istream& in, bool symbolic) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trajectory CSV is empty");
  const auto header = split(trim(line));
  if (header.empty() || trim(header[0]) != "t") {
    throw std::runtime_error("trajectory CSV header must start with 't'");
  }
  Eigen::Index da = 0;
  Eigen::Index dobs = 0;
  for (std::size_t k = 1; k < header.size(); ++k) {
    const std::string h = trim(header[k]);
    if (h == "a_" + std::to_string(da) && dobs == 0) {
      ++da;
    } else if (h == "o_" + std::to_string(dobs)) {
      ++dobs;
    } else {
      throw std::runtime_error("unexpected trajectory CSV column '" + h + "'");
    }
  }
  if (da == 0 || dobs == 0) throw std::runtime_error("trajectory CSV needs a_* and o_* columns");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line));
    if (fields.size() != header.size()) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " fields");
    }
    std::vector<double> r;
    r.reserve(fields.size() - 1);
    for (std::size_t k = 1; k < fields.size(); ++k) r.push_back(parse_double(fields[k], line_no));
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw std::runtime_error("trajectory CSV has no rows");

  Trajectory traj;
  traj.symbolic = symbolic;
  const auto n = static_cast<Eigen::Index>(rows.size());
  traj.actions.resize(n, da);
  traj.observations.resize(n, dobs);
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto& r = rows[static_cast<std::size_t>(t)];
    for (Eigen::Index k = 0; k < da; ++k) traj.actions(t, k) = r[static_cast<std::size_t>(k)];
    for (Eigen::Index k = 0; k < dobs; ++k) {
      traj.observations(t, k) = r[static_cast<std::size_t>(da + k)];
    }
  }
  return traj;
}

Trajectory read_trajectory_csv(const std::filesystem::path& path, bool symbolic) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return read_trajectory_csv(f, symbolic);
}

void write_mse_csv(const MseTable& table, std::ostream& out) {
  out << "model,horizon,mse,n_extents,seed\n";
  for (std::size_t m = 0; m < table.models.size(); ++m) {
    for (std::size_t h = 0; h < table.horizons.size(); ++h) {
      out << table.models[m] << ',' << table.horizons[h] << ',' << format_double(table.mse[m][h])
          << ',' << table.n_extents << ',' << table.seed << '\n';
    }
  }
}

void write_mse_csv(const MseTable& table, const std::filesystem::path& path) {
  auto f = open_out(path);
  write_mse_csv(table, f);
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace hsepsr
