#include "tbss/io.hpp"

#include <unistd.h>

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tbss/errors.hpp"

namespace tbss {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr char kMagic[5] = {'T', 'B', 'S', 'S', '1'};
constexpr unsigned char kTagFloat64 = 1;
constexpr unsigned char kTagLittleEndian = 1;
constexpr index_t kMaxOrder = 16;

std::string format_double(double v, const char* fmt = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

// Writes through a sibling temporary file and renames into place.
class AtomicFile {
public:
  explicit AtomicFile(const std::string& path) : path_(path) {
    tmp_ = path + ".tmp" + std::to_string(::getpid());
    stream_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!stream_)
      fail(ErrorCode::io_error, "cannot open '" + tmp_ + "' for writing");
  }
  ~AtomicFile() {
    if (!committed_) {
      stream_.close();
      std::error_code ec;
      fs::remove(tmp_, ec);
    }
  }
  std::ofstream& stream() { return stream_; }
  void commit() {
    stream_.flush();
    if (!stream_) fail(ErrorCode::io_error, "write to '" + tmp_ + "' failed");
    stream_.close();
    std::error_code ec;
    fs::rename(tmp_, path_, ec);
    if (ec) {
      fs::remove(tmp_, ec);
      fail(ErrorCode::io_error, "cannot move '" + tmp_ + "' to '" + path_ + "'");
    }
    committed_ = true;
  }

private:
  std::string path_, tmp_;
  std::ofstream stream_;
  bool committed_ = false;
};

void put_u64(std::ofstream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_sample(const TensorSample& s, const std::string& path) {
  if (s.order() < 1 || s.order() > kMaxOrder)
    fail(ErrorCode::invalid_argument, "sample order out of supported range");
  AtomicFile file(path);
  std::ofstream& out = file.stream();
  out.write(kMagic, 5);
  const unsigned char tags[3] = {kTagFloat64, kTagLittleEndian,
                                 static_cast<unsigned char>(s.order())};
  out.write(reinterpret_cast<const char*>(tags), 3);
  put_u64(out, static_cast<std::uint64_t>(s.n()));
  for (index_t d : s.dims()) put_u64(out, static_cast<std::uint64_t>(d));
  // Element payload is native little-endian float64 (tagged in the header).
  out.write(reinterpret_cast<const char*>(s.data().data()),
            static_cast<std::streamsize>(s.data().size() * sizeof(double)));
  file.commit();
}

TensorSample read_sample(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open '" + path + "' for reading");
  std::error_code ec;
  const std::uint64_t file_size = fs::file_size(path, ec);
  if (ec) fail(ErrorCode::io_error, "cannot stat '" + path + "'");

  char magic[5];
  unsigned char tags[3];
  in.read(magic, 5);
  in.read(reinterpret_cast<char*>(tags), 3);
  if (!in || std::memcmp(magic, kMagic, 5) != 0)
    fail(ErrorCode::io_error, "'" + path + "' is not a TBSS1 sample (bad magic)");
  if (tags[0] != kTagFloat64)
    fail(ErrorCode::io_error, "'" + path + "': unsupported element type tag " +
                                  std::to_string(tags[0]));
  if (tags[1] != kTagLittleEndian)
    fail(ErrorCode::io_error, "'" + path + "': unsupported byte-order tag " +
                                  std::to_string(tags[1]));
  const index_t r = tags[2];
  if (r < 1 || r > kMaxOrder)
    fail(ErrorCode::io_error, "'" + path + "': tensor order " + std::to_string(r) +
                                  " out of supported range");
  const std::uint64_t n = get_u64(in);
  std::vector<index_t> dims;
  for (index_t m = 0; m < r; ++m) {
    const std::uint64_t d = get_u64(in);
    if (d < 1 || d > (1ull << 31))
      fail(ErrorCode::io_error, "'" + path + "': invalid dimension " + std::to_string(d));
    dims.push_back(static_cast<index_t>(d));
  }
  if (!in) fail(ErrorCode::io_error, "'" + path + "': truncated header");
  const std::uint64_t rho = static_cast<std::uint64_t>(dim_product(dims));
  const std::uint64_t header = 8 + 8 + 8 * static_cast<std::uint64_t>(r);
  const std::uint64_t expected = header + 8 * n * rho;
  if (file_size != expected)
    fail(ErrorCode::io_error, "'" + path + "': truncated payload, expected " +
                                  std::to_string(expected) + " bytes, found " +
                                  std::to_string(file_size));
  TensorSample s(dims, static_cast<index_t>(n));
  in.read(reinterpret_cast<char*>(s.data().data()),
          static_cast<std::streamsize>(8 * n * rho));
  if (!in) fail(ErrorCode::io_error, "'" + path + "': payload read failed");
  return s;
}

TensorSample read_sample_csv(const std::string& path, const std::vector<index_t>& dims) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open '" + path + "' for reading");
  const index_t rho = dim_product(dims);
  std::vector<double> values;
  std::string line;
  index_t rows = 0, lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    index_t fields = 0;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(tok, &used));
        while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used])))
          ++used;
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        fail(ErrorCode::io_error, "'" + path + "' line " + std::to_string(lineno) +
                                      ": cannot parse value '" + tok + "'");
      }
      ++fields;
    }
    if (fields != rho)
      fail(ErrorCode::io_error, "'" + path + "' line " + std::to_string(lineno) + ": " +
                                    std::to_string(fields) + " values, shape needs " +
                                    std::to_string(rho));
    ++rows;
  }
  TensorSample s(dims, rows);
  std::copy(values.begin(), values.end(), s.data().begin());
  return s;
}

std::string result_to_json(const UnmixingResult& r, const JointDiagConfig& jd) {
  json doc;
  doc["format"] = "tbss-result";
  doc["version"] = 1;
  doc["dims"] = r.dims;
  doc["n"] = r.n;
  doc["vectorized"] = r.vectorized;
  doc["jd_config"] = {{"tolerance", jd.tolerance}, {"max_sweeps", jd.max_sweeps}};
  json modes = json::array();
  for (std::size_t m = 0; m < r.gammas.size(); ++m) {
    const Eigen::MatrixXd& g = r.gammas[m];
    json gamma = json::array();
    for (index_t i = 0; i < g.rows(); ++i) {
      json row = json::array();
      for (index_t j = 0; j < g.cols(); ++j) row.push_back(g(i, j));
      gamma.push_back(std::move(row));
    }
    const ModeDiagnostics& d = r.diagnostics[m];
    json kappa = json::array();
    for (index_t i = 0; i < r.kappas[m].size(); ++i) kappa.push_back(r.kappas[m][i]);
    modes.push_back({{"mode", m + 1},
                     {"method", method_name(d.method)},
                     {"k", d.k},
                     {"skipped", d.skipped},
                     {"gamma", std::move(gamma)},
                     {"kappa", std::move(kappa)},
                     {"sweeps", d.sweeps_used},
                     {"converged", d.converged},
                     {"stage_ms", d.stage_ms},
                     {"kappa_spread", d.kappa_spread},
                     {"low_kappa_spread", d.low_kappa_spread}});
  }
  doc["modes"] = std::move(modes);
  return doc.dump(2) + "\n";
}

UnmixingResult result_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::io_error, std::string("invalid result document: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "tbss-result")
      fail(ErrorCode::io_error, "not a result document");
    UnmixingResult r;
    r.dims = doc.at("dims").get<std::vector<index_t>>();
    r.n = doc.at("n").get<index_t>();
    r.vectorized = doc.at("vectorized").get<bool>();
    for (const json& mode : doc.at("modes")) {
      const auto& gamma = mode.at("gamma");
      const index_t p = static_cast<index_t>(gamma.size());
      Eigen::MatrixXd g(p, p);
      for (index_t i = 0; i < p; ++i) {
        const auto& row = gamma.at(static_cast<std::size_t>(i));
        if (static_cast<index_t>(row.size()) != p)
          fail(ErrorCode::io_error, "unmixing matrix is not square");
        for (index_t j = 0; j < p; ++j) g(i, j) = row.at(static_cast<std::size_t>(j));
      }
      const auto& kappa = mode.at("kappa");
      Eigen::VectorXd kv(static_cast<index_t>(kappa.size()));
      for (index_t i = 0; i < kv.size(); ++i) kv[i] = kappa.at(static_cast<std::size_t>(i));
      ModeDiagnostics d;
      d.method = method_from_name(mode.at("method").get<std::string>());
      d.k = mode.at("k").get<index_t>();
      d.skipped = mode.at("skipped").get<bool>();
      d.sweeps_used = mode.at("sweeps").get<int>();
      d.converged = mode.at("converged").get<bool>();
      d.stage_ms = mode.at("stage_ms").get<double>();
      d.kappa_spread = mode.at("kappa_spread").get<double>();
      d.low_kappa_spread = mode.at("low_kappa_spread").get<bool>();
      r.gammas.push_back(std::move(g));
      r.kappas.push_back(std::move(kv));
      r.diagnostics.push_back(d);
    }
    const std::size_t expect = r.vectorized ? 1 : r.dims.size();
    if (r.gammas.size() != expect)
      fail(ErrorCode::io_error, "result document has the wrong number of modes");
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::io_error, std::string("invalid result document: ") + e.what());
  }
}

void write_result(const UnmixingResult& r, const JointDiagConfig& jd,
                  const std::string& path) {
  write_text_atomic(path, result_to_json(r, jd));
}

UnmixingResult read_result(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open '" + path + "' for reading");
  std::stringstream buf;
  buf << in.rdbuf();
  return result_from_json(buf.str());
}

void write_text_atomic(const std::string& path, const std::string& text) {
  AtomicFile file(path);
  file.stream().write(text.data(), static_cast<std::streamsize>(text.size()));
  file.commit();
}

std::string render_experiment_tsv(const ExperimentResult& result) {
  std::string out =
      "estimator\tscenario\tn\treplicates\tfailures\tmean_tmd\tsd_tmd\tmedian_md\tmean_"
      "fit_ms\n";
  for (const ExperimentCell& cell : result.cells) {
    out += cell.estimator;
    out += '\t';
    out += mixing_name(cell.scenario);
    out += '\t';
    out += std::to_string(cell.n);
    out += '\t';
    out += std::to_string(cell.md.size());
    out += '\t';
    out += std::to_string(cell.failures);
    out += '\t';
    out += format_double(cell.mean_tmd());
    out += '\t';
    out += format_double(cell.sd_tmd());
    out += '\t';
    out += format_double(cell.median_md());
    out += '\t';
    out += format_double(cell.mean_fit_ms(), "%.3f");
    out += '\n';
  }
  return out;
}

std::string render_timing_tsv(const std::vector<TimingRow>& rows) {
  std::string out = "estimator\tq\tn\titerations\tmean_seconds\n";
  for (const TimingRow& row : rows) {
    out += row.estimator;
    out += '\t';
    out += std::to_string(row.q);
    out += '\t';
    out += std::to_string(row.n);
    out += '\t';
    out += std::to_string(row.iterations);
    out += '\t';
    out += format_double(row.mean_seconds, "%.6f");
    out += '\n';
  }
  return out;
}

std::string render_scree_tsv(int mode, const std::vector<ScreePoint>& points) {
  std::string out = "mode\tk\tmstar\n";
  for (const ScreePoint& pt : points) {
    out += std::to_string(mode);
    out += '\t';
    out += std::to_string(pt.k);
    out += '\t';
    out += format_double(pt.mstar);
    out += '\n';
  }
  return out;
}

}  // namespace tbss
