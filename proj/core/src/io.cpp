#include "shuffleprior/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace shuffleprior {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s == "-inf" || s == "-Inf" || s == "-INF") {
    out = -std::numeric_limits<double>::infinity();
    return true;
  }
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && errno != ERANGE;
}

double to_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  if (!parse_double(s, v)) throw std::runtime_error("CSV line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

bool next_line(std::istream& is, std::string& line) {
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() != '#') return true;
  }
  return false;
}

std::ifstream open(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  return f;
}

void write_row(std::ostream& os, const Eigen::RowVectorXd& row) {
  for (Eigen::Index k = 0; k < row.size(); ++k) os << (k ? "," : "") << row(k);
}

}  // namespace

LinkedDataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!next_line(is, line)) throw std::runtime_error("dataset CSV is empty");
  const auto header = split(line);
  std::map<std::size_t, std::size_t> xcol, ycol;  // number -> column position
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& h = header[c];
    if (h.size() < 2 || (h[0] != 'x' && h[0] != 'y'))
      throw std::runtime_error("dataset CSV: unexpected column '" + h + "'");
    const std::size_t k = std::stoul(h.substr(1));
    auto& target = h[0] == 'x' ? xcol : ycol;
    if (k == 0 || !target.emplace(k, c).second) throw std::runtime_error("dataset CSV: bad column '" + h + "'");
  }
  if (xcol.empty() || ycol.empty()) throw std::runtime_error("dataset CSV: need x and y columns");
  if (xcol.rbegin()->first != xcol.size() || ycol.rbegin()->first != ycol.size())
    throw std::runtime_error("dataset CSV: column numbers must be contiguous from 1");

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (next_line(is, line)) {
    ++lineno;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw std::runtime_error("dataset CSV line " + std::to_string(lineno) + ": wrong field count");
    std::vector<double> r(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) r[c] = to_double(cells[c], lineno);
    rows.push_back(std::move(r));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  LinkedDataset data{Eigen::MatrixXd(n, static_cast<Eigen::Index>(xcol.size())),
                     Eigen::MatrixXd(n, static_cast<Eigen::Index>(ycol.size()))};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const auto& [k, c] : xcol) data.x(i, static_cast<Eigen::Index>(k - 1)) = rows[static_cast<std::size_t>(i)][c];
    for (const auto& [k, c] : ycol) data.y(i, static_cast<Eigen::Index>(k - 1)) = rows[static_cast<std::size_t>(i)][c];
  }
  data.validate();
  return data;
}

LinkedDataset read_dataset_csv(const std::string& path) {
  auto f = open(path);
  return read_dataset_csv(f);
}

void write_dataset_csv(std::ostream& os, const LinkedDataset& data) {
  for (Eigen::Index k = 0; k < data.x.cols(); ++k) os << (k ? "," : "") << 'x' << (k + 1);
  for (Eigen::Index k = 0; k < data.y.cols(); ++k) os << ",y" << (k + 1);
  os << '\n';
  const auto old = os.precision(17);
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    write_row(os, data.x.row(i));
    os << ',';
    write_row(os, data.y.row(i));
    os << '\n';
  }
  os.precision(old);
}

Eigen::MatrixXd read_matrix_csv(std::istream& is) {
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 0;
  while (next_line(is, line)) {
    ++lineno;
    const auto cells = split(line);
    std::vector<double> r;
    for (const auto& c : cells) r.push_back(to_double(c, lineno));
    if (!rows.empty() && r.size() != rows.front().size()) throw std::runtime_error("matrix CSV: ragged rows");
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw std::runtime_error("matrix CSV is empty");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  auto f = open(path);
  return read_matrix_csv(f);
}

std::vector<std::size_t> read_block_ids(std::istream& is) {
  std::string line;
  std::vector<std::size_t> out;
  bool first = true;
  while (next_line(is, line)) {
    const auto cell = split(line).front();
    double v = 0.0;
    if (!parse_double(cell, v)) {
      if (first) {
        first = false;
        continue;
      }
      throw std::runtime_error("block id CSV: bad label '" + cell + "'");
    }
    first = false;
    if (v < 0.0 || v != std::floor(v)) throw std::runtime_error("block id CSV: labels must be non-negative integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw std::runtime_error("block id CSV is empty");
  return out;
}

std::vector<std::size_t> read_block_ids(const std::string& path) {
  auto f = open(path);
  return read_block_ids(f);
}

void write_permutation_csv(std::ostream& os, const Permutation& p) {
  os << "i,pi\n";
  for (std::size_t i = 0; i < p.size(); ++i) os << (i + 1) << ',' << (p[i] + 1) << '\n';
}

Permutation read_permutation_csv(std::istream& is) {
  std::string line;
  if (!next_line(is, line)) throw std::runtime_error("permutation CSV is empty");
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  while (next_line(is, line)) {
    const auto cells = split(line);
    if (cells.size() != 2) throw std::runtime_error("permutation CSV: expected two columns");
    const auto i = std::stoul(cells[0]), pi = std::stoul(cells[1]);
    if (i == 0 || pi == 0) throw std::runtime_error("permutation CSV: indices are 1-based");
    pairs.emplace_back(i - 1, pi - 1);
  }
  std::vector<std::size_t> t(pairs.size(), pairs.size());
  for (const auto& [i, pi] : pairs) {
    if (i >= t.size()) throw std::runtime_error("permutation CSV: index out of range");
    t[i] = pi;
  }
  return Permutation(std::move(t));
}

void write_params_json(std::ostream& os, const ModelParams& params, const Permutation* pi) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json j;
  j["model"] = to_string(kind_of(params));
  std::visit(
      [&](const auto& th) {
        using T = std::decay_t<decltype(th)>;
        if constexpr (std::is_same_v<T, LinearParams>) {
          j["beta"] = vec(th.beta);
          j["sigma2"] = th.sigma2;
        } else if constexpr (std::is_same_v<T, PoissonParams>) {
          j["beta"] = vec(th.beta);
          j["intercept"] = th.intercept;
        } else {
          j["mean"] = vec(th.mean);
          auto rows = nlohmann::json::array();
          for (Eigen::Index r = 0; r < th.precision.rows(); ++r) rows.push_back(vec(th.precision.row(r).transpose()));
          j["precision"] = rows;
        }
      },
      params);
  if (pi) {
    std::vector<std::size_t> one_based(pi->size());
    for (std::size_t i = 0; i < pi->size(); ++i) one_based[i] = (*pi)[i] + 1;
    j["pi"] = one_based;
  }
  os << j.dump(2) << '\n';
}

}  // namespace shuffleprior
