#pragma once

#include <string>
#include <vector>

#include "tbss/estimators.hpp"
#include "tbss/metrics.hpp"
#include "tbss/simulation.hpp"
#include "tbss/tensor.hpp"

namespace tbss {

/// Binary sample container, extension-agnostic.  Layout (all little-endian):
///   bytes 0-4   magic "TBSS1"
///   byte  5     element type tag (1 = float64)
///   byte  6     byte-order tag (1 = little-endian)
///   byte  7     tensor order r
///   bytes 8-15  observation count n (uint64)
///   then r      uint64 dimensions
///   then        n * prod(dims) float64 values, observations contiguous,
///               each observation row-major over its indices.
/// Writes go to a temporary file first and are renamed into place, so a
/// failed write never leaves a partial file at the target path.
void write_sample(const TensorSample& s, const std::string& path);
TensorSample read_sample(const std::string& path);

/// Text import: one observation per line, comma-separated, row-major order;
/// the shape is supplied by the caller.  Blank lines are ignored.
TensorSample read_sample_csv(const std::string& path, const std::vector<index_t>& dims);

/// JSON document with the per-mode unmixing matrices, kappa estimates and
/// diagnostics.  The latent sample is not embedded (save it separately);
/// results read back carry an empty latent.
std::string result_to_json(const UnmixingResult& r, const JointDiagConfig& jd);
UnmixingResult result_from_json(const std::string& text);
void write_result(const UnmixingResult& r, const JointDiagConfig& jd,
                  const std::string& path);
UnmixingResult read_result(const std::string& path);

/// Atomic text write (temporary file + rename).
void write_text_atomic(const std::string& path, const std::string& text);

/// Deterministic tab-separated tables with a header line.
std::string render_experiment_tsv(const ExperimentResult& result);
std::string render_timing_tsv(const std::vector<TimingRow>& rows);
std::string render_scree_tsv(int mode, const std::vector<ScreePoint>& points);

}  // namespace tbss
