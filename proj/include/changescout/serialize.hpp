#pragma once

// JSON documents written by the command-line tool: candidate reports, trained
// models and evaluation reports. Keys are sorted, so equal values give equal
// bytes.

#include <string>
#include <string_view>
#include <vector>

#include "changescout/detect.hpp"
#include "changescout/learn.hpp"

namespace cs {

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kEvalFormatVersion = 1;

/// {"candidates": [...], "summary": {...}, "warnings": [...]}
std::string candidates_to_json(const DetectionReport& report, const Corpus& corpus);

std::string model_to_json(const TrainedModel& model);
/// Throws DataError on malformed documents or an unsupported format_version.
TrainedModel model_from_json(std::string_view text);

std::string eval_to_json(const std::vector<ProjectResult>& projects);
std::vector<ProjectResult> eval_from_json(std::string_view text);

}  // namespace cs
