#pragma once

#include "mirec/config.hpp"
#include "mirec/data.hpp"

#include <string>
#include <vector>

namespace mirec::synthetic {

/// Multi-interest interaction log: each user owns a few latent item clusters
/// and samples every interaction from one of them, with a Zipf-shaped
/// within-cluster popularity. The cluster id is emitted as the category side
/// feature, so downstream analyses can compare against the ground truth.
std::vector<data::InteractionRecord> generate_log(const config::RunConfig& cfg);

/// Renders records as log lines (user,item,category,timestamp).
std::string to_log_text(const std::vector<data::InteractionRecord>& records);

}  // namespace mirec::synthetic
