#include "a2a/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace a2a {

namespace fs = std::filesystem;

std::vector<std::vector<double>> matrix_to_rows(const Mat& m) {
  std::vector<std::vector<double>> rows(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows[i].resize(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
  }
  return rows;
}

Mat rows_to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("rows_to_matrix: empty");
  const auto cols = rows.front().size();
  Mat m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols)
      throw std::invalid_argument("rows_to_matrix: ragged rows");
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void atomic_write_text(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("atomic_write_text: cannot open " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("atomic_write_text: write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return std::string(buf);
}

namespace {

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf);
}

const char* speaker_of(std::size_t row) {
  if (row == 0) return "init";
  return row % 2 == 1 ? "W" : "U";
}

}  // namespace

std::string trajectory_to_csv(const Trajectory& traj, const ObjectivePair& pair,
                              const std::string& config_hash) {
  std::ostringstream out;
  out << "# config_hash=" << config_hash << " converged=" << (traj.converged ? 1 : 0)
      << " turns_run=" << traj.turns_run << "\n";
  const auto d = pair.w_star.size();
  out << "turn,speaker,err_w,err_u";
  for (Eigen::Index i = 0; i < d; ++i) out << ",state_" << i;
  out << "\n";
  for (std::size_t k = 0; k < traj.iterates.size(); ++k) {
    const Vec& s = traj.iterates[k];
    out << k << ',' << speaker_of(k) << ',' << fmt_double((s - pair.w_star).norm()) << ','
        << fmt_double((s - pair.u_star).norm());
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << fmt_double(s[i]);
    out << "\n";
  }
  return out.str();
}

std::string trajectory_to_jsonl(const Trajectory& traj, const ObjectivePair& pair,
                                const std::string& config_hash) {
  std::ostringstream out;
  for (std::size_t k = 0; k < traj.iterates.size(); ++k) {
    const Vec& s = traj.iterates[k];
    nlohmann::json j;
    j["turn"] = k;
    j["speaker"] = speaker_of(k);
    j["err_w"] = (s - pair.w_star).norm();
    j["err_u"] = (s - pair.u_star).norm();
    j["state"] = std::vector<double>(s.data(), s.data() + s.size());
    j["config_hash"] = config_hash;
    out << j.dump() << "\n";
  }
  return out.str();
}

}  // namespace a2a
