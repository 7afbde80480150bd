#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "tbss.h"

namespace {

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "tbss-capi-tests";
  std::filesystem::create_directories(dir);
  return dir;
}

// Drops the trailing wall-clock column from every row so that tables from
// repeated runs can be compared; timings are the one non-reproducible field.
std::string without_timings(const std::string& tsv) {
  std::string out;
  std::size_t start = 0;
  while (start < tsv.size()) {
    std::size_t end = tsv.find('\n', start);
    if (end == std::string::npos) end = tsv.size();
    const std::string line = tsv.substr(start, end - start);
    const std::size_t cut = line.rfind('\t');
    out += (cut == std::string::npos ? line : line.substr(0, cut)) + '\n';
    start = end + 1;
  }
  return out;
}

// 3 x 3 observations whose rows have distinct kurtosis (exponential, uniform,
// normal), written row-major.
std::vector<double> grid_data(int64_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  std::vector<double> data(static_cast<std::size_t>(n) * 9);
  for (int64_t t = 0; t < n; ++t)
    for (int64_t i = 0; i < 3; ++i)
      for (int64_t j = 0; j < 3; ++j) {
        double v = 0.0;
        if (i == 0) v = expo(gen) - 1.0;
        else if (i == 1) v = (unif(gen) - 0.5) * std::sqrt(12.0);
        else v = normal(gen);
        data[static_cast<std::size_t>(t * 9 + i * 3 + j)] = v;
      }
  return data;
}

struct SampleHolder {
  tbss_sample* s = nullptr;
  ~SampleHolder() { tbss_sample_free(s); }
};

struct ResultHolder {
  tbss_result* r = nullptr;
  ~ResultHolder() { tbss_result_free(r); }
};

struct StringHolder {
  char* text = nullptr;
  ~StringHolder() { tbss_string_free(text); }
};

}  // namespace

TEST_CASE("version and error state") {
  const std::string v = tbss_version();
  CHECK(v.find('.') != std::string::npos);
  CHECK(std::string(tbss_last_error()).empty());
}

TEST_CASE("sample lifecycle, accessors and file round trip") {
  const int64_t dims[] = {2, 3};
  const std::vector<double> data = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  SampleHolder s;
  REQUIRE(tbss_sample_create(dims, 2, 2, data.data(), &s.s) == TBSS_OK);
  CHECK(tbss_sample_order(s.s) == 2);
  CHECK(tbss_sample_dim(s.s, 1) == 2);
  CHECK(tbss_sample_dim(s.s, 2) == 3);
  CHECK(tbss_sample_dim(s.s, 3) == 0);
  CHECK(tbss_sample_n(s.s) == 2);
  const double* view = tbss_sample_data(s.s);
  REQUIRE(view != nullptr);
  for (std::size_t i = 0; i < data.size(); ++i) CHECK(view[i] == data[i]);

  const auto path = (temp_dir() / "sample.bin").string();
  REQUIRE(tbss_sample_write(s.s, path.c_str()) == TBSS_OK);
  SampleHolder back;
  REQUIRE(tbss_sample_read(path.c_str(), &back.s) == TBSS_OK);
  CHECK(tbss_sample_n(back.s) == 2);
  const double* view2 = tbss_sample_data(back.s);
  for (std::size_t i = 0; i < data.size(); ++i) CHECK(view2[i] == data[i]);
  std::filesystem::remove(path);

  SampleHolder zeros;
  REQUIRE(tbss_sample_create(dims, 2, 3, nullptr, &zeros.s) == TBSS_OK);
  CHECK(tbss_sample_data(zeros.s)[5] == 0.0);

  tbss_sample* bad = nullptr;
  CHECK(tbss_sample_create(nullptr, 2, 2, nullptr, &bad) == TBSS_INVALID_ARGUMENT);
  CHECK(!std::string(tbss_last_error()).empty());
  const int64_t zero_dim[] = {2, 0};
  CHECK(tbss_sample_create(zero_dim, 2, 2, nullptr, &bad) == TBSS_INVALID_ARGUMENT);
  CHECK(tbss_sample_read("/nonexistent/tbss.bin", &bad) == TBSS_IO_ERROR);
}

TEST_CASE("csv import") {
  const auto path = (temp_dir() / "obs.csv").string();
  {
    std::ofstream out(path);
    out << "1,2,3,4\n5,6,7,8\n";
  }
  const int64_t dims[] = {2, 2};
  SampleHolder s;
  REQUIRE(tbss_sample_read_csv(path.c_str(), dims, 2, &s.s) == TBSS_OK);
  CHECK(tbss_sample_n(s.s) == 2);
  CHECK(tbss_sample_data(s.s)[4] == 5.0);
  {
    std::ofstream out(path);
    out << "1,2,3\n";
  }
  SampleHolder bad;
  CHECK(tbss_sample_read_csv(path.c_str(), dims, 2, &bad.s) == TBSS_IO_ERROR);
  CHECK(std::string(tbss_last_error()).find("line 1") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("fit options defaults") {
  tbss_fit_options opts;
  tbss_fit_options_init(&opts);
  CHECK(opts.tolerance == 1e-6);
  CHECK(opts.max_sweeps == 100);
  CHECK(opts.rho_cap == 64);
}

TEST_CASE("named fits expose estimates and diagnostics") {
  const int64_t dims[] = {3, 3};
  const auto data = grid_data(1200, 17);
  SampleHolder s;
  REQUIRE(tbss_sample_create(dims, 2, 1200, data.data(), &s.s) == TBSS_OK);

  ResultHolder r;
  REQUIRE(tbss_fit_named(s.s, "22-tjade", nullptr, &r.r) == TBSS_OK);
  CHECK(tbss_result_vectorized(r.r) == 0);
  CHECK(tbss_result_mode_count(r.r) == 2);
  CHECK(tbss_result_mode_dim(r.r, 1) == 3);
  CHECK(tbss_result_mode_dim(r.r, 3) == 0);
  CHECK(tbss_result_n(r.r) == 1200);
  CHECK(std::string(tbss_result_mode_method(r.r, 1)) == "ktjade");
  CHECK(tbss_result_mode_method(r.r, 5) == nullptr);
  CHECK(tbss_result_mode_k(r.r, 1) == 2);

  double gamma[9];
  REQUIRE(tbss_result_unmixing(r.r, 1, gamma) == TBSS_OK);
  for (double v : gamma) CHECK(std::isfinite(v));
  double kappa[3];
  REQUIRE(tbss_result_kurtosis(r.r, 1, kappa) == TBSS_OK);
  CHECK(kappa[0] >= kappa[1]);
  CHECK(kappa[1] >= kappa[2]);

  int sweeps = -1, converged = -1, low = -1;
  double stage_ms = -1.0, spread = -1.0;
  REQUIRE(tbss_result_mode_stats(r.r, 1, &sweeps, &converged, &stage_ms, &spread,
                                 &low) == TBSS_OK);
  CHECK(sweeps >= 1);
  CHECK(converged == 1);
  CHECK(stage_ms >= 0.0);
  CHECK(spread >= 0.0);
  REQUIRE(tbss_result_mode_stats(r.r, 2, nullptr, nullptr, nullptr, nullptr,
                                 nullptr) == TBSS_OK);
  CHECK(tbss_result_mode_stats(r.r, 9, &sweeps, nullptr, nullptr, nullptr, nullptr) ==
        TBSS_INVALID_ARGUMENT);

  SampleHolder latent;
  REQUIRE(tbss_result_latent(r.r, &latent.s) == TBSS_OK);
  CHECK(tbss_sample_n(latent.s) == 1200);
  CHECK(tbss_sample_dim(latent.s, 1) == 3);

  StringHolder json;
  REQUIRE(tbss_result_to_json(r.r, &json.text) == TBSS_OK);
  CHECK(std::string(json.text).find("tbss-result") != std::string::npos);

  const auto path = (temp_dir() / "fit.json").string();
  REQUIRE(tbss_result_write(r.r, path.c_str()) == TBSS_OK);
  ResultHolder back;
  REQUIRE(tbss_result_read(path.c_str(), &back.r) == TBSS_OK);
  double gamma2[9];
  REQUIRE(tbss_result_unmixing(back.r, 1, gamma2) == TBSS_OK);
  for (int i = 0; i < 9; ++i) CHECK(gamma2[i] == gamma[i]);
  SampleHolder none;
  CHECK(tbss_result_latent(back.r, &none.s) == TBSS_INVALID_ARGUMENT);
  std::filesystem::remove(path);
}

TEST_CASE("per-mode method arrays and vectorized fits") {
  const int64_t dims[] = {3, 3};
  const auto data = grid_data(900, 23);
  SampleHolder s;
  REQUIRE(tbss_sample_create(dims, 2, 900, data.data(), &s.s) == TBSS_OK);

  const char* methods[] = {"skip", "tjade"};
  ResultHolder r;
  REQUIRE(tbss_fit(s.s, methods, nullptr, 2, nullptr, &r.r) == TBSS_OK);
  CHECK(std::string(tbss_result_mode_method(r.r, 1)) == "skip");
  double gamma[9];
  REQUIRE(tbss_result_unmixing(r.r, 1, gamma) == TBSS_OK);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(gamma[i * 3 + j] == (i == j ? 1.0 : 0.0));

  ResultHolder bad;
  CHECK(tbss_fit(s.s, methods, nullptr, 1, nullptr, &bad.r) == TBSS_SHAPE_MISMATCH);
  const char* unknown[] = {"fastica", "tjade"};
  CHECK(tbss_fit(s.s, unknown, nullptr, 2, nullptr, &bad.r) == TBSS_INVALID_ARGUMENT);

  ResultHolder vec;
  REQUIRE(tbss_fit_vectorized(s.s, "tjade", 0, nullptr, &vec.r) == TBSS_OK);
  CHECK(tbss_result_vectorized(vec.r) == 1);
  CHECK(tbss_result_mode_count(vec.r) == 1);
  CHECK(tbss_result_mode_dim(vec.r, 1) == 9);
}

TEST_CASE("the cap on vectorized sizes maps to a status code") {
  const int64_t dims[] = {9, 8};
  std::mt19937_64 gen(29);
  std::normal_distribution<double> normal;
  std::vector<double> data(72 * 200);
  for (double& v : data) v = normal(gen);
  SampleHolder s;
  REQUIRE(tbss_sample_create(dims, 2, 200, data.data(), &s.s) == TBSS_OK);
  ResultHolder r;
  CHECK(tbss_fit_vectorized(s.s, "tfobi", 0, nullptr, &r.r) == TBSS_SIZE_LIMIT);
  CHECK(std::string(tbss_last_error()).find("72") != std::string::npos);
  tbss_fit_options opts;
  tbss_fit_options_init(&opts);
  opts.rho_cap = 128;
  REQUIRE(tbss_fit_vectorized(s.s, "tfobi", 0, &opts, &r.r) == TBSS_OK);
  CHECK(tbss_result_mode_dim(r.r, 1) == 72);
}

TEST_CASE("distance index and pairwise result distances") {
  const double gain[] = {1, 1, 0, 1};
  double d = -1.0;
  REQUIRE(tbss_md_index(gain, 2, 2, &d) == TBSS_OK);
  CHECK(std::fabs(d - std::sqrt(0.5)) < 1e-12);
  CHECK(tbss_md_index(gain, 2, 1, &d) == TBSS_SHAPE_MISMATCH);
  CHECK(tbss_md_index(nullptr, 2, 2, &d) == TBSS_INVALID_ARGUMENT);

  const int64_t dims[] = {3, 3};
  const auto data = grid_data(800, 31);
  SampleHolder s;
  REQUIRE(tbss_sample_create(dims, 2, 800, data.data(), &s.s) == TBSS_OK);
  ResultHolder a, b;
  REQUIRE(tbss_fit_named(s.s, "22-tjade", nullptr, &a.r) == TBSS_OK);
  REQUIRE(tbss_fit_named(s.s, "22-tjade", nullptr, &b.r) == TBSS_OK);
  double mds[2] = {-1.0, -1.0};
  REQUIRE(tbss_md_between(a.r, b.r, mds) == TBSS_OK);
  CHECK(mds[0] < 1e-12);
  CHECK(mds[1] < 1e-12);
  ResultHolder vec;
  REQUIRE(tbss_fit_vectorized(s.s, "tfobi", 0, nullptr, &vec.r) == TBSS_OK);
  CHECK(tbss_md_between(a.r, vec.r, mds) == TBSS_SHAPE_MISMATCH);
}

TEST_CASE("scree table") {
  const int64_t dims[] = {3, 3};
  const auto data = grid_data(700, 37);
  SampleHolder s;
  REQUIRE(tbss_sample_create(dims, 2, 700, data.data(), &s.s) == TBSS_OK);
  StringHolder tsv;
  REQUIRE(tbss_scree(s.s, 1, nullptr, &tsv.text) == TBSS_OK);
  const std::string text = tsv.text;
  CHECK(text.rfind("mode\tk\tmstar\n", 0) == 0);
  CHECK(text.find("\n1\t1\t") != std::string::npos);
  CHECK(text.find("\n1\t2\t") != std::string::npos);
  StringHolder bad;
  CHECK(tbss_scree(s.s, 0, nullptr, &bad.text) == TBSS_INVALID_ARGUMENT);
}

TEST_CASE("simulation tables are deterministic") {
  const int64_t ns[] = {200};
  StringHolder a, b;
  REQUIRE(tbss_simulate(1, ns, 1, 2, nullptr, "tfobi", 5, nullptr, 1, &a.text) ==
          TBSS_OK);
  REQUIRE(tbss_simulate(1, ns, 1, 2, nullptr, "tfobi", 5, nullptr, 2, &b.text) ==
          TBSS_OK);
  const std::string text = a.text;
  CHECK(text.rfind("estimator\tscenario\tn\t", 0) == 0);
  CHECK(text.find("tfobi\tidentity\t200\t2\t") != std::string::npos);
  // Identical seeds give identical statistics; only the wall-clock column may
  // differ between runs.
  CHECK(without_timings(text) == without_timings(b.text));
  StringHolder bad;
  CHECK(tbss_simulate(7, ns, 1, 2, nullptr, nullptr, 5, nullptr, 1, &bad.text) ==
        TBSS_INVALID_ARGUMENT);
}

TEST_CASE("bench tables") {
  const int64_t widths[] = {4};
  StringHolder tsv;
  REQUIRE(tbss_bench(widths, 1, 300, "tfobi", 11, 1, nullptr, &tsv.text) == TBSS_OK);
  const std::string text = tsv.text;
  CHECK(text.rfind("estimator\tq\tn\titerations\tmean_seconds\n", 0) == 0);
  CHECK(text.find("tfobi\t4\t300\t1\t") != std::string::npos);
  CHECK(tbss_bench(nullptr, 0, 300, nullptr, 11, 1, nullptr, &tsv.text) ==
        TBSS_INVALID_ARGUMENT);
}

TEST_CASE("null handles are inert") {
  CHECK(tbss_sample_order(nullptr) == 0);
  CHECK(tbss_sample_dim(nullptr, 1) == 0);
  CHECK(tbss_sample_n(nullptr) == 0);
  CHECK(tbss_sample_data(nullptr) == nullptr);
  CHECK(tbss_result_mode_count(nullptr) == 0);
  CHECK(tbss_result_mode_method(nullptr, 1) == nullptr);
  tbss_sample_free(nullptr);
  tbss_result_free(nullptr);
  tbss_string_free(nullptr);
  double out = 0.0;
  CHECK(tbss_md_index(nullptr, 2, 2, &out) == TBSS_INVALID_ARGUMENT);
}

