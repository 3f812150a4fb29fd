#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vms/serialize.hpp"

namespace vms {

/// Golden vectors live in one directory:
///
///   manifest.json   cases, each with its kind, metadata and per-tensor
///                   {name, role, shape, fnv1a64}
///   <case>.vmsa     the case's input and output tensors (serialize.hpp format)
///
/// Inputs come from the canonical RNG; outputs are the f64 results.
struct GoldenCase {
  std::string name;
  std::string kind;
  std::string meta;  // JSON object text
  std::vector<NamedArray> inputs;
  std::vector<NamedArray> outputs;
};

// Every case, built from fixed seeds.
std::vector<GoldenCase> golden_cases();

// Recomputes a case's outputs from its kind, metadata and inputs.
std::vector<NamedArray> golden_compute(const std::string& kind, const std::string& meta,
                                       const std::vector<NamedArray>& inputs);
// The same in f32 where the operation has a float path; nullopt otherwise.
std::optional<std::vector<NamedArray>> golden_compute_f32(const std::string& kind,
                                                          const std::string& meta,
                                                          const std::vector<NamedArray>& inputs);

void golden_generate(const std::filesystem::path& dir);

struct GoldenCheck {
  std::string case_name;
  std::string tensor;
  double max_err = 0.0;  // normwise: max|a - b| / max(1, max|b|)
  bool ok = true;
  std::string note;
};

struct GoldenReport {
  double tolerance = 1e-10;
  std::vector<GoldenCheck> checks;
  std::vector<GoldenCheck> f32_drift;  // informational

  bool ok() const;
  std::string to_text() const;
};

GoldenReport golden_verify(const std::filesystem::path& dir, double tolerance = 1e-10);

// Throws GoldenMismatch listing every failing tensor.
void require_golden_pass(const GoldenReport& report);

}  // namespace vms
