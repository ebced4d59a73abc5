// SPDX-License-Identifier: Apache-2.0
#include "blockveil/serialize.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <vector>

namespace blockveil {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

constexpr char kMatrixMagic[4] = {'B', 'V', 'M', 'X'};
constexpr std::uint32_t kFormatVersion = 1;

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError(path.string() + ": truncated file");
  return v;
}

std::string encode_metadata(const Metadata& meta) {
  std::string s;
  for (const auto& [k, v] : meta) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
      throw std::invalid_argument("metadata key/value may not contain '=' in keys or newlines: " + k);
    s += k + "=" + v + "\n";
  }
  return s;
}

void decode_metadata_line(const std::string& line, Metadata& meta) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) return;
  meta[line.substr(0, eq)] = line.substr(eq + 1);
}

double parse_double(std::string_view s, const std::filesystem::path& path) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError(path.string() + ": bad number '" + std::string(s) + "'");
  return v;
}

const std::string& require(const Metadata& meta, const std::string& key, const std::filesystem::path& path) {
  auto it = meta.find(key);
  if (it == meta.end()) throw FormatError(path.string() + ": missing header field '" + key + "'");
  return it->second;
}

std::uint64_t parse_u64(const std::string& s, const std::filesystem::path& path) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError(path.string() + ": bad integer '" + s + "'");
  return v;
}

Metadata channel_metadata(const ChannelMatrix& ch) {
  return {{"m", std::to_string(ch.rows())},
          {"n", std::to_string(ch.cols())},
          {"seed", std::to_string(ch.seed())},
          {"generator", ch.generator()}};
}

ChannelMatrix channel_from(Matrix a, const Metadata& meta, const std::filesystem::path& path) {
  const auto m = parse_u64(require(meta, "m", path), path);
  const auto n = parse_u64(require(meta, "n", path), path);
  if (m != static_cast<std::uint64_t>(a.rows()) || n != static_cast<std::uint64_t>(a.cols()))
    throw FormatError(path.string() + ": header dimensions do not match the data");
  return ChannelMatrix::from_matrix(std::move(a), require(meta, "generator", path),
                                    parse_u64(require(meta, "seed", path), path));
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("cannot format double");
  return std::string(buf, ptr);
}

void write_matrix_binary(const std::filesystem::path& path, const Matrix& a, const Metadata& meta) {
  auto out = open_out(path, std::ios::binary);
  const std::string header = encode_metadata(meta);
  out.write(kMatrixMagic, 4);
  put(out, kFormatVersion);
  put(out, static_cast<std::uint64_t>(a.rows()));
  put(out, static_cast<std::uint64_t>(a.cols()));
  put(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = a;
  out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * rm.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Matrix read_matrix_binary(const std::filesystem::path& path, Metadata* meta) {
  auto in = open_in(path, std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kMatrixMagic)) throw FormatError(path.string() + ": not a matrix file");
  if (get<std::uint32_t>(in, path) != kFormatVersion) throw FormatError(path.string() + ": unsupported version");
  const auto rows = get<std::uint64_t>(in, path);
  const auto cols = get<std::uint64_t>(in, path);
  const auto hlen = get<std::uint32_t>(in, path);
  std::string header(hlen, '\0');
  in.read(header.data(), hlen);
  if (!in) throw FormatError(path.string() + ": truncated header");
  if (meta) {
    meta->clear();
    std::istringstream hs(header);
    for (std::string line; std::getline(hs, line);) decode_metadata_line(line, *meta);
  }
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
  in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * rows * cols));
  if (!in) throw FormatError(path.string() + ": truncated data");
  in.peek();
  if (!in.eof()) throw FormatError(path.string() + ": trailing bytes");
  return rm;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& a, const Metadata& meta) {
  auto out = open_out(path);
  for (const auto& [k, v] : meta) {
    if (v.find('\n') != std::string::npos) throw std::invalid_argument("metadata value contains a newline");
    out << "# " << k << "=" << v << "\n";
  }
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out << (j ? "," : "") << format_double(a(i, j));
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Matrix read_matrix_csv(const std::filesystem::path& path, Metadata* meta) {
  auto in = open_in(path);
  if (meta) meta->clear();
  std::vector<std::vector<double>> rows;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line == "\r") continue;
    if (line[0] == '#') {
      const auto start = line.find_first_not_of("# ");
      if (meta && start != std::string::npos) decode_metadata_line(line.substr(start), *meta);
      continue;
    }
    std::vector<double> row;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      row.push_back(parse_double(rest.substr(0, comma), path));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw FormatError(path.string() + ": ragged rows");
    rows.push_back(std::move(row));
  }
  Matrix a(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return a;
}

void save_channel_binary(const std::filesystem::path& path, const ChannelMatrix& ch) {
  write_matrix_binary(path, ch.a(), channel_metadata(ch));
}

ChannelMatrix load_channel_binary(const std::filesystem::path& path) {
  Metadata meta;
  Matrix a = read_matrix_binary(path, &meta);
  return channel_from(std::move(a), meta, path);
}

void save_channel_csv(const std::filesystem::path& path, const ChannelMatrix& ch) {
  write_matrix_csv(path, ch.a(), channel_metadata(ch));
}

ChannelMatrix load_channel_csv(const std::filesystem::path& path) {
  Metadata meta;
  Matrix a = read_matrix_csv(path, &meta);
  return channel_from(std::move(a), meta, path);
}

nlohmann::json to_json(const BlockStructure& bs) {
  std::vector<int> labels = bs.labels();
  for (int& l : labels) ++l;
  return {{"n", bs.size()}, {"r", bs.block_count()}, {"labels", labels}};
}

BlockStructure block_structure_from_json(const nlohmann::json& j) {
  const int n = j.at("n").get<int>();
  const int r = j.at("r").get<int>();
  std::vector<int> labels = j.at("labels").get<std::vector<int>>();
  if (static_cast<int>(labels.size()) != n) throw FormatError("block structure: label count differs from n");
  for (int& l : labels) {
    if (l < 1 || l > r) throw FormatError("block structure: label out of range 1..r");
    --l;
  }
  auto bs = BlockStructure::from_labels(std::move(labels));
  if (bs.block_count() != r) throw FormatError("block structure: r does not match the labels");
  return bs;
}

void save_block_structure(const std::filesystem::path& path, const BlockStructure& bs) {
  auto out = open_out(path);
  out << to_json(bs).dump() << "\n";
}

BlockStructure load_block_structure(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return block_structure_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_signals_csv(const std::filesystem::path& path, const Matrix& columns, const Metadata& meta) {
  Metadata m = meta;
  m["rows"] = std::to_string(columns.rows());
  m["columns"] = std::to_string(columns.cols());
  write_matrix_csv(path, columns, m);
}

void save_moment_estimate(const std::filesystem::path& dir, const MomentEstimate& est, const AttackParams& params,
                          const nlohmann::json& extra) {
  std::filesystem::create_directories(dir);
  write_matrix_binary(dir / "sigma_hat.bin", est.sigma_hat);
  write_matrix_binary(dir / "b_tilde.bin", est.b_tilde);
  write_matrix_csv(dir / "u_tilde.csv", est.u_tilde);
  save_block_structure(dir / "b_hat.json", est.b_hat);

  std::vector<double> eig(est.eigenvalues.data(), est.eigenvalues.data() + est.eigenvalues.size());
  nlohmann::json manifest = {
      {"p", params.p},
      {"r", params.r},
      {"sigma2", params.sigma2},
      {"constellation", std::string(to_string(params.constellation))},
      {"centering", params.centering == Centering::kModelMean ? "model-mean" : "sample-mean"},
      {"eigenvalues", eig},
      {"eigen_gap_warning", est.eigen_gap_warning},
      {"cluster_count_matches", est.cluster_count_matches},
      {"files", {"sigma_hat.bin", "b_tilde.bin", "u_tilde.csv", "b_hat.json"}},
  };
  for (const auto& [k, v] : extra.items()) manifest[k] = v;
  auto out = open_out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
}

}  // namespace blockveil
